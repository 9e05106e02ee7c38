// Replay a plan over a network model and print its waterfall.

use std::path::PathBuf;

use fedplan::graph::build_graph;
use fedplan::manifest::load_workspace;
use fedplan::planner::{self, LoadStrategy};
use fedplan::shares::{build_share_scope, resolve_shares};
use fedplan::simulator::{simulate, NetworkModel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let host = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig1/host/federation.json");
    let w = load_workspace(&host)?;
    let res = resolve_shares(&build_share_scope(&w));
    let g = build_graph(&w, &res)?;
    let p = planner::plan(&g, &res, LoadStrategy::Prefetch)?;

    // 100 ms round trips, 100 bytes per ms, nothing else
    let net = NetworkModel::default();
    let report = simulate(&p, &net)?;
    for t in &report.per_request_timeline {
        println!(
            "#{:<2} {:>6} B  start {:>6.1}  headers {:>6.1}  done {:>6.1}",
            t.request_id, t.bytes, t.start_ms, t.headers_ms, t.done_ms
        );
    }
    println!("interactive at {} ms", report.time_to_interactive_ms);
    assert_eq!(report.time_to_interactive_ms, 440.0);

    let slow = NetworkModel {
        rtt_ms: 300.0,
        bandwidth_bytes_per_ms: 25.0,
        ..NetworkModel::default()
    };
    let slower = simulate(&p, &slow)?;
    println!("on a slow link: {} ms", slower.time_to_interactive_ms);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
