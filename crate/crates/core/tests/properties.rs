mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use fedplan::graph::{self, NodeKey};
use fedplan::manifest::{parse_manifest, validate_manifest};
use fedplan::planner::{self, LoadStrategy, PayloadItem};
use fedplan::semver::{self, parse_range, Version};
use fedplan::shares;
use fedplan::simulator;
use fedplan::trace;

use common::{gen, oracles};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(128))]

    #[test]
    fn canonical_range_reparses_to_same_set(seed in any::<u64>()) {
        let text = gen::range_text(&mut gen::rng(seed));
        let r = parse_range(&text).unwrap();
        let again = parse_range(&r.canonical()).unwrap();
        prop_assert_eq!(&again, &r);
        prop_assert_eq!(again.canonical(), r.canonical());
    }

    #[test]
    fn intersect_is_commutative_and_idempotent(a in any::<u64>(), b in any::<u64>()) {
        let ra = parse_range(&gen::range_text(&mut gen::rng(a))).unwrap();
        let rb = parse_range(&gen::range_text(&mut gen::rng(b))).unwrap();
        prop_assert_eq!(semver::intersect(&ra, &rb), semver::intersect(&rb, &ra));
        prop_assert_eq!(semver::intersect(&ra, &ra), ra.clone());
        let both = semver::intersect(&ra, &rb);
        for v in gen::all_versions() {
            prop_assert_eq!(both.satisfies(v), ra.satisfies(v) && rb.satisfies(v));
        }
    }

    #[test]
    fn highest_satisfying_is_the_brute_force_max(seed in any::<u64>(), keep in proptest::collection::vec(any::<bool>(), 216)) {
        let text = gen::range_text(&mut gen::rng(seed));
        let r = parse_range(&text).unwrap();
        let candidates: Vec<Version> = gen::all_versions().into_iter().zip(keep).filter(|(_, k)| *k).map(|(v, _)| v).collect();
        let want = candidates
            .iter()
            .copied()
            .filter(|v| oracles::range_contains(&text, (v.major, v.minor, v.patch)))
            .max();
        prop_assert_eq!(semver::highest_satisfying(&r, &candidates), want);
    }

    #[test]
    fn resolution_invariants(seed in any::<u64>()) {
        let scope = gen::scope(&mut gen::rng(seed));
        let res = shares::resolve_shares(&scope);
        for (pkg, b) in &res.bindings {
            let max = scope.entries.iter().filter(|(_, s)| &s.package == pkg).filter_map(|(_, s)| s.provided_version).max();
            prop_assert_eq!(Some(b.version), max);
        }
        for c in &res.conflicts {
            if let Some(v) = c.chosen_version {
                prop_assert!(!c.required_range.satisfies(v));
            }
        }
        prop_assert_eq!(res.duplicate_bytes, res.fallbacks.iter().map(|f| f.size_bytes).sum::<u64>());
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn manifests_round_trip_canonically(seed in any::<u64>()) {
        let w = gen::workspace(&mut gen::rng(seed), &gen::GenOptions::default());
        for app in w.apps() {
            let text = app.manifest.to_canonical_string();
            let parsed = parse_manifest(&text).unwrap();
            prop_assert!(parsed.warnings.is_empty());
            prop_assert_eq!(&parsed.manifest, &app.manifest);
            prop_assert_eq!(parsed.manifest.to_canonical_string(), text);
            prop_assert!(validate_manifest(&app.manifest).iter().all(|d| !d.is_error()));
        }
    }

    #[test]
    fn graph_analyses_match_oracles(seed in any::<u64>()) {
        let w = gen::workspace(&mut gen::rng(seed), &gen::GenOptions::default());
        let (_, g) = common::pipeline(&w);
        for dynamic in [false, true] {
            prop_assert_eq!(graph::reachable_set(&g, dynamic), oracles::bfs_reachable(&g, dynamic));
        }
        prop_assert_eq!(graph::waterfall_depth(&g), oracles::longest_rounds(&g));
        let cycles: BTreeSet<BTreeSet<NodeKey>> = graph::detect_cycles(&g).into_iter().map(|c| c.into_iter().collect()).collect();
        prop_assert_eq!(cycles, oracles::cyclic_components(&g));
        prop_assert_eq!(graph::export_dot(&g), graph::export_dot(&g));
        for e in g.edges() {
            prop_assert!(g.node(&e.from).is_some() && g.node(&e.to).is_some());
        }
    }

    #[test]
    fn plans_cover_the_reachable_set_once(seed in any::<u64>()) {
        let w = gen::workspace(&mut gen::rng(seed), &gen::GenOptions::default());
        let (res, g) = common::pipeline(&w);
        let reachable = graph::reachable_set(&g, true);
        let depth = graph::waterfall_depth(&g);
        let mut bytes = std::collections::BTreeMap::new();
        for s in LoadStrategy::ALL {
            let p = planner::plan(&g, &res, s).unwrap();
            let mut seen = Vec::new();
            for r in &p.requests {
                prop_assert!(!r.payload.is_empty());
                prop_assert!(r.depends_on.iter().all(|d| *d < r.id));
                for e in &r.payload {
                    if let PayloadItem::Node(k) = &e.item {
                        seen.push(k.clone());
                    }
                }
            }
            let unique: BTreeSet<NodeKey> = seen.iter().cloned().collect();
            prop_assert_eq!(unique.len(), seen.len(), "{} fetches a node twice", s);
            if s == LoadStrategy::Eager {
                // shared nodes travel as per-application copies instead
                let local: BTreeSet<NodeKey> = reachable.iter().filter(|k| g.node(k).unwrap().package.is_none()).cloned().collect();
                prop_assert!(local.is_subset(&unique) && unique.is_subset(&reachable));
            } else {
                prop_assert_eq!(&unique, &reachable);
            }
            match s {
                LoadStrategy::Lazy => prop_assert_eq!(p.longest_chain(), depth),
                LoadStrategy::Prefetch => prop_assert!(p.longest_chain() <= 2),
                LoadStrategy::Ssr => prop_assert_eq!(p.requests.len(), 1),
                LoadStrategy::Eager => prop_assert_eq!(p.longest_chain(), 1),
            }
            let code: u64 = p.requests.iter().map(|r| r.code_bytes()).sum();
            bytes.insert(s, (planner::required_bytes(&p), code));
        }
        let lazy = bytes[&LoadStrategy::Lazy].0;
        prop_assert_eq!(bytes[&LoadStrategy::Prefetch].1, lazy);
        prop_assert_eq!(bytes[&LoadStrategy::Ssr].0, lazy);
        prop_assert!(bytes[&LoadStrategy::Eager].0 >= lazy);
    }

    #[test]
    fn simulation_is_deterministic_and_traceable(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let w = gen::workspace(&mut r, &gen::GenOptions::default());
        let (res, g) = common::pipeline(&w);
        let net = common::net_fixture("mobile.json");
        let a = simulator::compare_strategies(&g, &res, &net, &LoadStrategy::ALL).unwrap();
        let b = simulator::compare_strategies(&g, &res, &net, &LoadStrategy::ALL).unwrap();
        prop_assert_eq!(&a, &b);
        for rep in &a {
            prop_assert!(rep.time_to_first_render_ms <= rep.time_to_interactive_ms);
            let log = trace::from_sim(rep);
            prop_assert!(trace::validate_trace(&log).is_empty());
            let back = trace::parse_jsonl(&log.to_jsonl()).unwrap();
            prop_assert_eq!(back, log);
        }
    }
}
