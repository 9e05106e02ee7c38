//! Reference implementations used to check the library. They share no code
//! with it and favour obviousness over speed.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use fedplan::graph::{ModuleGraph, NodeKey};
use fedplan::planner::{LoadPlan, LoadStrategy};
use fedplan::simulator::NetworkModel;

// ---------------------------------------------------------------- semver

type V = (u64, u64, u64);

fn v3(text: &str) -> V {
    let p: Vec<u64> = text.split('.').map(|c| c.parse().unwrap()).collect();
    (p[0], p[1], p[2])
}

/// Membership of `v` in a range, evaluated straight from the range text.
pub fn range_contains(text: &str, v: V) -> bool {
    text.split("||").any(|disjunct| {
        disjunct
            .split_whitespace()
            .all(|atom| atom_contains(atom, v))
    })
}

fn atom_contains(atom: &str, v: V) -> bool {
    if atom == "*" {
        return true;
    }
    for op in [">=", "<=", ">", "<", "=", "^", "~"] {
        if let Some(rest) = atom.strip_prefix(op) {
            let b = v3(rest);
            return match op {
                ">=" => v >= b,
                "<=" => v <= b,
                ">" => v > b,
                "<" => v < b,
                "=" => v == b,
                "^" => {
                    if b.0 > 0 {
                        v >= b && v.0 == b.0
                    } else if b.1 > 0 {
                        v >= b && v.0 == 0 && v.1 == b.1
                    } else {
                        v == b
                    }
                }
                "~" => v >= b && v.0 == b.0 && v.1 == b.1,
                _ => unreachable!(),
            };
        }
    }
    v == v3(atom)
}

// ---------------------------------------------------------------- graphs

/// Transitive closure by repeated relaxation.
pub fn closure(g: &ModuleGraph) -> BTreeMap<NodeKey, BTreeSet<NodeKey>> {
    let mut reach: BTreeMap<NodeKey, BTreeSet<NodeKey>> = g
        .nodes()
        .map(|n| (n.key.clone(), BTreeSet::new()))
        .collect();
    for e in g.edges() {
        reach.get_mut(&e.from).unwrap().insert(e.to.clone());
    }
    loop {
        let mut changed = false;
        let keys: Vec<NodeKey> = reach.keys().cloned().collect();
        for k in &keys {
            let via: BTreeSet<NodeKey> = reach[k]
                .iter()
                .flat_map(|m| reach[m].iter().cloned())
                .collect();
            let set = reach.get_mut(k).unwrap();
            let before = set.len();
            set.extend(via);
            changed |= set.len() != before;
        }
        if !changed {
            return reach;
        }
    }
}

/// Strongly connected components with a cycle, from mutual reachability.
pub fn cyclic_components(g: &ModuleGraph) -> BTreeSet<BTreeSet<NodeKey>> {
    let reach = closure(g);
    let mut out = BTreeSet::new();
    for k in reach.keys() {
        if !reach[k].contains(k) {
            continue;
        }
        let comp: BTreeSet<NodeKey> = reach
            .keys()
            .filter(|m| *m == k || (reach[k].contains(*m) && reach[*m].contains(k)))
            .cloned()
            .collect();
        out.insert(comp);
    }
    out
}

/// Nodes reachable from the root, by breadth-first search.
pub fn bfs_reachable(g: &ModuleGraph, include_dynamic: bool) -> BTreeSet<NodeKey> {
    let mut seen = BTreeSet::from([g.root().clone()]);
    let mut frontier = vec![g.root().clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for k in frontier {
            for e in g.edges().iter().filter(|e| e.from == k) {
                let dynamic = e.mode == fedplan::graph::ImportMode::Dynamic;
                if (include_dynamic || !dynamic) && seen.insert(e.to.clone()) {
                    next.push(e.to.clone());
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Longest root path in fetch rounds, each cyclic component counting once.
/// Bellman-Ford style: relax every edge until nothing improves.
pub fn longest_rounds(g: &ModuleGraph) -> usize {
    let comps = cyclic_components(g);
    let unit = |k: &NodeKey| -> BTreeSet<NodeKey> {
        comps
            .iter()
            .find(|c| c.contains(k))
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([k.clone()]))
    };
    let reachable = bfs_reachable(g, true);
    let mut dist: BTreeMap<BTreeSet<NodeKey>, usize> = BTreeMap::new();
    dist.insert(unit(g.root()), 1);
    for _ in 0..=g.node_count() {
        for e in g.edges() {
            if !reachable.contains(&e.from) {
                continue;
            }
            let (a, b) = (unit(&e.from), unit(&e.to));
            if a == b {
                continue;
            }
            if let Some(d) = dist.get(&a).copied() {
                let cur = dist.entry(b).or_insert(0);
                *cur = (*cur).max(d + 1);
            }
        }
    }
    dist.values().copied().max().unwrap_or(0)
}

// ------------------------------------------------------------- fluid flow

pub struct FluidTimes {
    pub eligible: Vec<f64>,
    pub start: Vec<f64>,
    pub headers: Vec<f64>,
    pub done: Vec<f64>,
    pub parsed: Vec<f64>,
}

impl FluidTimes {
    pub fn time_to_interactive(&self) -> f64 {
        self.parsed.iter().copied().fold(0.0, f64::max)
    }
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn f(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

/// Replays a plan in exact rational arithmetic: latency, then equal shares
/// of the bandwidth among everything transferring, then parse. Returns
/// `None` if requests remain that can never start.
pub fn fluid(plan: &LoadPlan, net: &NetworkModel) -> Option<FluidTimes> {
    let n = plan.requests.len();
    let ssr = plan.strategy == LoadStrategy::Ssr;
    let bw = q(net.bandwidth_bytes_per_ms);
    let latency = q(net.rtt_ms) + if ssr { q(net.server_compose_ms) } else { BigRational::zero() };
    let parse_rate = q(net.parse_ms_per_kb) / q(1000.0) * if ssr { q(net.hydration_factor) } else { q(1.0) };
    let delay = q(net.interaction_delay_ms);

    let code_bytes: Vec<BigRational> = plan
        .requests
        .iter()
        .map(|r| {
            let manifests: u64 = r
                .payload
                .iter()
                .filter(|p| p.item.to_string().starts_with("manifest:"))
                .map(|p| p.size_bytes)
                .sum();
            q((r.size_bytes - manifests) as f64)
        })
        .collect();

    let mut eligible: Vec<Option<BigRational>> = vec![None; n];
    let mut start: Vec<Option<BigRational>> = vec![None; n];
    let mut done: Vec<Option<BigRational>> = vec![None; n];
    let mut parsed: Vec<Option<BigRational>> = vec![None; n];
    let mut left: Vec<BigRational> = plan.requests.iter().map(|r| q(r.size_bytes as f64)).collect();
    let mut t = BigRational::zero();

    loop {
        // settle everything that happens at `t`
        loop {
            let mut changed = false;
            for i in 0..n {
                if eligible[i].is_none() && plan.requests[i].depends_on.iter().all(|d| parsed[*d].is_some()) {
                    let mut at = BigRational::zero();
                    for d in &plan.requests[i].depends_on {
                        let mut x = parsed[*d].clone().unwrap();
                        if plan.strategy == LoadStrategy::Lazy && plan.requests[i].dynamic_deps.contains(d) {
                            x += delay.clone();
                        }
                        if x > at {
                            at = x;
                        }
                    }
                    eligible[i] = Some(at);
                    changed = true;
                }
            }
            for i in 0..n {
                if let Some(s) = &start[i] {
                    if done[i].is_none() && s.clone() + latency.clone() <= t && left[i].is_zero() {
                        done[i] = Some(t.clone());
                        parsed[i] = Some(t.clone() + code_bytes[i].clone() * parse_rate.clone());
                        changed = true;
                    }
                }
            }
            let busy = (0..n).filter(|i| start[*i].is_some() && done[*i].is_none()).count();
            if busy < net.max_concurrent {
                let pick = (0..n)
                    .filter(|i| start[*i].is_none() && eligible[*i].as_ref().is_some_and(|e| *e <= t))
                    .min_by(|a, b| eligible[*a].cmp(&eligible[*b]).then(a.cmp(b)));
                if let Some(i) = pick {
                    start[i] = Some(t.clone());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if parsed.iter().all(Option::is_some) {
            break;
        }

        let flowing: Vec<usize> = (0..n)
            .filter(|i| {
                done[*i].is_none() && start[*i].as_ref().is_some_and(|s| s.clone() + latency.clone() <= t)
            })
            .collect();
        let share = if flowing.is_empty() {
            BigRational::zero()
        } else {
            bw.clone() / q(flowing.len() as f64)
        };
        let mut horizon: Option<BigRational> = None;
        let mut consider = |x: BigRational| {
            if x > t && horizon.as_ref().is_none_or(|h| x < *h) {
                horizon = Some(x);
            }
        };
        for &i in &flowing {
            consider(t.clone() + left[i].clone() / share.clone());
        }
        for i in 0..n {
            if let Some(s) = &start[i] {
                if done[i].is_none() {
                    consider(s.clone() + latency.clone());
                }
            } else if let Some(e) = &eligible[i] {
                consider(e.clone());
            }
        }
        let next = horizon?;
        let dt = next.clone() - t.clone();
        for &i in &flowing {
            left[i] -= share.clone() * dt.clone();
            if left[i] < BigRational::zero() {
                left[i] = BigRational::zero();
            }
        }
        t = next;
    }

    let conv = |v: &[Option<BigRational>]| v.iter().map(|x| f(x.as_ref().unwrap())).collect();
    Some(FluidTimes {
        eligible: conv(&eligible),
        start: conv(&start),
        headers: start.iter().map(|s| f(&(s.clone().unwrap() + latency.clone()))).collect(),
        done: conv(&done),
        parsed: conv(&parsed),
    })
}
