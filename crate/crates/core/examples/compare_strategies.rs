// Simulate every strategy on the same network and rank them.

use std::path::PathBuf;

use fedplan::graph::build_graph;
use fedplan::manifest::load_workspace;
use fedplan::planner::LoadStrategy;
use fedplan::shares::{build_share_scope, resolve_shares};
use fedplan::simulator::{compare_strategies, rank, NetworkModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let w = load_workspace(&dir.join("fig2/host/federation.json"))?;
    let res = resolve_shares(&build_share_scope(&w));
    let g = build_graph(&w, &res)?;
    let net = NetworkModel::from_json(&std::fs::read_to_string(dir.join("net/mobile.json"))?)?;

    let reports = compare_strategies(&g, &res, &net, &LoadStrategy::ALL)?;
    println!("{:<9} {:>9} {:>9} {:>8} {:>7}", "strategy", "ttfr", "tti", "bytes", "rounds");
    for r in rank(&reports) {
        println!(
            "{:<9} {:>9.1} {:>9.1} {:>8} {:>7}",
            r.strategy.as_str(),
            r.time_to_first_render_ms,
            r.time_to_interactive_ms,
            r.total_bytes,
            r.waterfall_rounds
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
