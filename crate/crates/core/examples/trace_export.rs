// Export a simulated load as JSON-lines spans and read them back.

use std::path::PathBuf;

use fedplan::graph::build_graph;
use fedplan::manifest::load_workspace;
use fedplan::planner::{self, LoadStrategy};
use fedplan::shares::{build_share_scope, resolve_shares};
use fedplan::simulator::{simulate, NetworkModel};
use fedplan::trace;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let host = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig1/host/federation.json");
    let w = load_workspace(&host)?;
    let res = resolve_shares(&build_share_scope(&w));
    let g = build_graph(&w, &res)?;
    let p = planner::plan(&g, &res, LoadStrategy::Lazy)?;
    let report = simulate(&p, &NetworkModel::default())?;

    let log = trace::from_run(&p, &report);
    let text = log.to_jsonl();
    print!("{text}");

    let back = trace::parse_jsonl(&text)?;
    assert_eq!(back, log);
    assert!(trace::validate_trace(&back).is_empty());
    let root = &back.spans()[0];
    println!("{} children under {}", back.children(&root.span_id).count(), root.name);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
