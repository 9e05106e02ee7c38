// Parse a manifest from text and list what the validator finds.

use fedplan::manifest::{parse_manifest, validate_manifest};

const MANIFEST: &str = r#"{
  "name": "checkout",
  "version": "1.4.0",
  "owner": "payments-team",
  "modules": [
    { "id": "./Cart", "sizeBytes": 12000, "staticImports": ["./Price", "react"] },
    { "id": "./Price", "sizeBytes": 3000 }
  ],
  "exposes": [
    { "id": "./Cart", "module": "./Cart" },
    { "id": "./Summary", "module": "./Summary" }
  ],
  "shared": [
    { "package": "react", "requiredRange": "^18.0.0", "providedVersion": "18.2.0", "singleton": true, "sizeBytes": 130000 }
  ]
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let parsed = parse_manifest(MANIFEST)?;
    let mut findings = parsed.warnings.clone();
    findings.extend(validate_manifest(&parsed.manifest));
    for d in &findings {
        println!("{d}");
    }
    assert!(findings.iter().any(|d| d.code == "W-UNKNOWN-FIELD"));
    assert!(findings.iter().any(|d| d.code == "E-DANGLING-EXPOSE"));

    // canonical output parses back to the same manifest
    let again = parse_manifest(&parsed.manifest.to_canonical_string())?;
    assert_eq!(again.manifest, parsed.manifest);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
