#![allow(dead_code)]

pub mod gen;
pub mod oracles;

use std::path::PathBuf;

use fedplan::graph::{self, ModuleGraph};
use fedplan::manifest::{self, Workspace};
use fedplan::shares::{self, ShareResolution};
use fedplan::simulator::NetworkModel;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn host_of(fixture: &str) -> PathBuf {
    fixtures_dir().join(fixture).join("host/federation.json")
}

/// Fixtures that load, resolve, and plan without errors.
pub const PLANNABLE: &[&str] = &["fig1", "fig1-react", "fig2", "lodash-fallback"];

pub fn load(fixture: &str) -> Workspace {
    manifest::load_workspace(&host_of(fixture)).unwrap_or_else(|e| panic!("{fixture}: {e}"))
}

pub fn pipeline(w: &Workspace) -> (ShareResolution, ModuleGraph) {
    let res = shares::resolve_shares(&shares::build_share_scope(w));
    let g = graph::build_graph(w, &res).expect("graph builds");
    (res, g)
}

pub fn net_fixture(name: &str) -> NetworkModel {
    let text = std::fs::read_to_string(fixtures_dir().join("net").join(name)).unwrap();
    NetworkModel::from_json(&text).unwrap()
}

pub fn base_net() -> NetworkModel {
    NetworkModel {
        rtt_ms: 100.0,
        bandwidth_bytes_per_ms: 100.0,
        max_concurrent: 6,
        parse_ms_per_kb: 0.0,
        server_compose_ms: 0.0,
        hydration_factor: 1.0,
        interaction_delay_ms: 0.0,
    }
}
