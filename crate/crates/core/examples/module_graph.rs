// Build the cross-application module graph and render it as DOT.

use std::path::PathBuf;

use fedplan::graph::{self, build_graph};
use fedplan::manifest::load_workspace;
use fedplan::shares::{build_share_scope, resolve_shares};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let host = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig2/host/federation.json");
    let w = load_workspace(&host)?;
    let res = resolve_shares(&build_share_scope(&w));
    let g = build_graph(&w, &res)?;

    println!("{} nodes, {} edges", g.node_count(), g.edges().len());
    println!("reachable without dynamic imports: {}", graph::reachable_set(&g, false).len());
    println!("reachable in total: {}", graph::reachable_set(&g, true).len());
    println!("waterfall depth: {}", graph::waterfall_depth(&g));
    assert!(graph::detect_cycles(&g).is_empty());

    let dot = graph::export_dot(&g);
    assert!(dot.starts_with("digraph"));
    print!("{dot}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
