// Parse ranges, intersect them, and pick the highest satisfying version.

use fedplan::semver::{self, parse_range, parse_version};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let host = parse_range("^18.0.0")?;
    let remote = parse_range(">=18.1.0 <19.0.0 || ^17.0.2")?;
    let both = semver::intersect(&host, &remote);
    println!("{} & {} = {}", host.canonical(), remote.canonical(), both.canonical());

    let available: Vec<_> = ["17.0.2", "18.0.0", "18.1.0", "18.2.0", "19.0.0"]
        .iter()
        .map(|v| parse_version(v))
        .collect::<Result<_, _>>()?;
    let best = semver::highest_satisfying(&both, &available).ok_or("nothing satisfies both")?;
    println!("highest in both: {best}");
    assert_eq!(best, parse_version("18.2.0")?);

    let disjoint = semver::intersect(&parse_range("~1.2.0")?, &parse_range("^2.0.0")?);
    assert!(disjoint.is_empty());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
