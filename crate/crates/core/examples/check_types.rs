// Structural subtyping, by hand and against a workspace's expectations.

use std::path::PathBuf;

use fedplan::interfaces::{check_compatibility, first_mismatch, is_subtype, Field, TypeExpr};
use fedplan::manifest::load_workspace;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // a provider may return more fields than the consumer reads
    let provided = TypeExpr::function(
        vec![TypeExpr::record([("title", Field::required(TypeExpr::String))])],
        TypeExpr::record([
            ("id", Field::required(TypeExpr::Number)),
            ("label", Field::required(TypeExpr::String)),
        ]),
    );
    let expected = TypeExpr::function(
        vec![TypeExpr::record([
            ("title", Field::required(TypeExpr::String)),
            ("subtitle", Field::optional(TypeExpr::String)),
        ])],
        TypeExpr::record([("id", Field::required(TypeExpr::Number))]),
    );
    assert!(is_subtype(&provided, &expected));
    println!("reversed: {:?}", first_mismatch(&expected, &provided));

    let host = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/type-mismatch/host/federation.json");
    let w = load_workspace(&host)?;
    let diags = check_compatibility(&w, &w.expectations(), false);
    for d in &diags {
        println!("{d}");
    }
    assert!(diags.iter().any(|d| d.is_error()));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
