// Negotiate shared package versions across a host and its remotes.

use std::path::PathBuf;

use fedplan::manifest::load_workspace;
use fedplan::shares::{build_share_scope, resolve_shares};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).join("host/federation.json")
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["fig1-react", "lodash-fallback", "singleton-strict-conflict"] {
        let w = load_workspace(&fixture(name))?;
        let res = resolve_shares(&build_share_scope(&w));
        println!("{name}:");
        for (pkg, b) in &res.bindings {
            println!("  {pkg} -> {} from {}", b.version, b.provider);
        }
        for f in &res.fallbacks {
            println!("  {} keeps its own {}@{} ({} bytes)", f.application, f.package, f.own_version, f.size_bytes);
        }
        for c in &res.conflicts {
            println!("  {} {} in {}: requires {}", c.code, c.package, c.application, c.required_range);
        }
    }

    let w = load_workspace(&fixture("singleton-strict-conflict"))?;
    assert!(resolve_shares(&build_share_scope(&w)).has_errors());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
