// Turn one graph into a fetch plan per load strategy.

use std::path::PathBuf;

use fedplan::graph::{self, build_graph};
use fedplan::manifest::load_workspace;
use fedplan::planner::{self, LoadStrategy};
use fedplan::shares::{build_share_scope, resolve_shares};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let host = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig1-react/host/federation.json");
    let w = load_workspace(&host)?;
    let res = resolve_shares(&build_share_scope(&w));
    let g = build_graph(&w, &res)?;

    for s in LoadStrategy::ALL {
        let p = planner::plan(&g, &res, s)?;
        println!(
            "{:<9} requests={} chain={} bytes={} duplicate={}",
            s.as_str(),
            p.requests.len(),
            p.longest_chain(),
            planner::required_bytes(&p),
            p.duplicate_bytes,
        );
        for r in &p.requests {
            let items: Vec<String> = r.payload.iter().map(|e| e.item.to_string()).collect();
            println!("    #{} after {:?}: {}", r.id, r.depends_on, items.join(", "));
        }
    }

    let lazy = planner::plan(&g, &res, LoadStrategy::Lazy)?;
    assert_eq!(lazy.longest_chain(), graph::waterfall_depth(&g));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
