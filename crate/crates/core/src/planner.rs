//! Load planning: which fetch requests a loader issues for a module graph
//! under a given strategy, and which requests each one causally waits on.
//!
//! * `Lazy` issues one request per fetch unit; a unit is requested only
//!   after every reachable importer has been parsed, which reproduces the
//!   request waterfall.
//! * `Prefetch` fetches the remote manifests first, then every reachable
//!   node in parallel. Host-local nodes need no manifest.
//! * `Eager` issues one independent request per application carrying all of
//!   its reachable modules and a private copy of each shared package it
//!   imports, i.e. the no-sharing baseline.
//! * `Ssr` ships a single server-composed payload.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{self, ModuleGraph, NodeKey, NodeKind};
use crate::semver::Version;
use crate::shares::ShareResolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadStrategy {
    Lazy,
    Prefetch,
    Eager,
    Ssr,
}

impl LoadStrategy {
    pub const ALL: [LoadStrategy; 4] = [
        LoadStrategy::Lazy,
        LoadStrategy::Prefetch,
        LoadStrategy::Eager,
        LoadStrategy::Ssr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LoadStrategy::Lazy => "lazy",
            LoadStrategy::Prefetch => "prefetch",
            LoadStrategy::Eager => "eager",
            LoadStrategy::Ssr => "ssr",
        }
    }
}

impl fmt::Display for LoadStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LoadStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        LoadStrategy::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected lazy, prefetch, eager or ssr)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PayloadItem {
    Node(NodeKey),
    /// A remote application's manifest.
    Manifest(String),
    /// An application's own copy of a shared package (Eager only).
    PrivateCopy {
        app: String,
        package: String,
        version: Version,
    },
}

impl fmt::Display for PayloadItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadItem::Node(k) => write!(f, "{k}"),
            PayloadItem::Manifest(app) => write!(f, "manifest:{app}"),
            PayloadItem::PrivateCopy {
                app,
                package,
                version,
            } => write!(f, "copy:{app}/{package}@{version}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadEntry {
    pub item: PayloadItem,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trigger {
    Root,
    /// Discovered while parsing this module.
    Parse(NodeKey),
    /// Released once the remote manifests are in.
    Manifest,
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::Root => f.write_str("root"),
            Trigger::Parse(k) => write!(f, "parse:{k}"),
            Trigger::Manifest => f.write_str("manifest"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchRequest {
    pub id: usize,
    pub payload: Vec<PayloadEntry>,
    pub size_bytes: u64,
    /// May not start before all of these are parsed.
    pub depends_on: BTreeSet<usize>,
    /// Subset of `depends_on` reached only through dynamic imports; the
    /// simulator adds the interaction delay after those.
    pub dynamic_deps: BTreeSet<usize>,
    pub trigger: Trigger,
}

impl FetchRequest {
    fn new(id: usize, payload: Vec<PayloadEntry>, trigger: Trigger) -> Self {
        FetchRequest {
            id,
            size_bytes: payload.iter().map(|p| p.size_bytes).sum(),
            payload,
            depends_on: BTreeSet::new(),
            dynamic_deps: BTreeSet::new(),
            trigger,
        }
    }

    /// Bytes that must be parsed as code (manifests are not).
    pub fn code_bytes(&self) -> u64 {
        self.payload
            .iter()
            .filter(|p| !matches!(p.item, PayloadItem::Manifest(_)))
            .map(|p| p.size_bytes)
            .sum()
    }

    pub fn contains_node(&self, key: &NodeKey) -> bool {
        self.payload
            .iter()
            .any(|p| matches!(&p.item, PayloadItem::Node(k) if k == key))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadPlan {
    pub strategy: LoadStrategy,
    pub root: NodeKey,
    pub requests: Vec<FetchRequest>,
    /// Fallback duplication from share resolution, plus the extra shared
    /// copies an Eager plan ships.
    pub duplicate_bytes: u64,
}

impl LoadPlan {
    /// Longest `depends_on` chain, counted in requests.
    pub fn longest_chain(&self) -> usize {
        let mut len = vec![0usize; self.requests.len()];
        // ids are assigned so that dependencies precede dependents
        for r in &self.requests {
            len[r.id] = 1 + r.depends_on.iter().map(|d| len[*d]).max().unwrap_or(0);
        }
        len.into_iter().max().unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let requests: Vec<_> = self
            .requests
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "payload": r.payload.iter().map(|p| p.item.to_string()).collect::<Vec<_>>(),
                    "sizeBytes": r.size_bytes,
                    "dependsOn": r.depends_on,
                    "dynamicDeps": r.dynamic_deps,
                    "trigger": r.trigger.to_string(),
                })
            })
            .collect();
        json!({
            "strategy": self.strategy,
            "root": self.root.to_string(),
            "requests": requests,
            "requiredBytes": required_bytes(self),
            "duplicateBytes": self.duplicate_bytes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    /// Size of one remote manifest fetched by `Prefetch`.
    pub manifest_bytes: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            manifest_bytes: 2000,
        }
    }
}

pub fn plan(g: &ModuleGraph, res: &ShareResolution, strategy: LoadStrategy) -> Result<LoadPlan> {
    plan_with(g, res, strategy, &PlanOptions::default())
}

pub fn plan_with(
    g: &ModuleGraph,
    res: &ShareResolution,
    strategy: LoadStrategy,
    opts: &PlanOptions,
) -> Result<LoadPlan> {
    let condensed = g.condense();
    for u in &condensed.cyclic {
        let members = &condensed.units[*u].members;
        let apps: BTreeSet<&str> = members.iter().map(|k| k.app.as_str()).collect();
        if apps.len() > 1 {
            return Err(Error::Cyclic {
                members: members.iter().map(ToString::to_string).collect(),
            });
        }
    }
    let reachable = graph::reachable_set(g, true);
    for key in &reachable {
        check_share_consistency(g, res, key)?;
    }
    let node_entry = |k: &NodeKey| PayloadEntry {
        item: PayloadItem::Node(k.clone()),
        size_bytes: g.node(k).map_or(0, |n| n.size_bytes),
    };
    let root = g.root().clone();
    let mut duplicate_bytes = res.duplicate_bytes;

    let requests = match strategy {
        LoadStrategy::Lazy => {
            let live = condensed.reachable();
            let mut preds: BTreeMap<usize, BTreeMap<usize, bool>> = BTreeMap::new();
            for u in &live {
                for (v, is_static) in condensed.successors(*u) {
                    preds.entry(v).or_default().insert(*u, is_static);
                }
            }
            // Kahn order, smallest unit first, so dependencies get lower ids
            let mut indegree: BTreeMap<usize, usize> =
                live.iter().map(|u| (*u, preds.get(u).map_or(0, BTreeMap::len))).collect();
            let mut ready: BTreeSet<usize> =
                indegree.iter().filter(|(_, d)| **d == 0).map(|(u, _)| *u).collect();
            let mut order = Vec::with_capacity(live.len());
            while let Some(u) = ready.pop_first() {
                order.push(u);
                for (v, _) in condensed.successors(u) {
                    let d = indegree.get_mut(&v).expect("successor of a live unit is live");
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(v);
                    }
                }
            }
            let id_of: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, u)| (*u, i)).collect();
            order
                .iter()
                .enumerate()
                .map(|(id, u)| {
                    let unit = &condensed.units[*u];
                    let payload = unit.members.iter().map(node_entry).collect();
                    let unit_preds = preds.get(u);
                    let trigger = match unit_preds.and_then(|p| p.keys().next()) {
                        Some(p) => Trigger::Parse(
                            condensed.units[*p].members.first().expect("units are nonempty").clone(),
                        ),
                        None => Trigger::Root,
                    };
                    let mut req = FetchRequest::new(id, payload, trigger);
                    for (p, is_static) in unit_preds.into_iter().flatten() {
                        req.depends_on.insert(id_of[p]);
                        if !is_static {
                            req.dynamic_deps.insert(id_of[p]);
                        }
                    }
                    req
                })
                .collect()
        }
        LoadStrategy::Prefetch => {
            let host = &root.app;
            let remote_apps: BTreeSet<&str> = reachable
                .iter()
                .map(|k| k.app.as_str())
                .filter(|a| *a != host)
                .collect();
            let mut requests = Vec::new();
            if !remote_apps.is_empty() {
                let payload = remote_apps
                    .iter()
                    .map(|a| PayloadEntry {
                        item: PayloadItem::Manifest(a.to_string()),
                        size_bytes: opts.manifest_bytes,
                    })
                    .collect();
                requests.push(FetchRequest::new(0, payload, Trigger::Root));
            }
            for key in &reachable {
                let id = requests.len();
                let mut req = if key.app == *host {
                    FetchRequest::new(id, vec![node_entry(key)], Trigger::Root)
                } else {
                    FetchRequest::new(id, vec![node_entry(key)], Trigger::Manifest)
                };
                if key.app != *host {
                    req.depends_on.insert(0);
                }
                requests.push(req);
            }
            requests
        }
        LoadStrategy::Eager => {
            let mut per_app: BTreeMap<&str, Vec<PayloadEntry>> = BTreeMap::new();
            for key in &reachable {
                let node = g.node(key).expect("reachable nodes exist");
                let bound = node.kind == NodeKind::SharedPkg && is_binding_node(res, key);
                if !bound {
                    per_app.entry(key.app.as_str()).or_default().push(node_entry(key));
                    continue;
                }
                let (package, version) = node.package.clone().expect("shared nodes carry a package");
                let importers: BTreeSet<&str> = g
                    .edges()
                    .iter()
                    .filter(|e| e.to == *key && reachable.contains(&e.from))
                    .map(|e| e.from.app.as_str())
                    .collect();
                duplicate_bytes += node.size_bytes * (importers.len() as u64).saturating_sub(1);
                for app in importers {
                    per_app.entry(app).or_default().push(PayloadEntry {
                        item: PayloadItem::PrivateCopy {
                            app: app.to_string(),
                            package: package.clone(),
                            version,
                        },
                        size_bytes: node.size_bytes,
                    });
                }
            }
            let host = per_app.remove_entry(root.app.as_str());
            host.into_iter()
                .chain(per_app)
                .enumerate()
                .map(|(id, (_, payload))| FetchRequest::new(id, payload, Trigger::Root))
                .collect()
        }
        LoadStrategy::Ssr => {
            let payload = reachable.iter().map(node_entry).collect();
            vec![FetchRequest::new(0, payload, Trigger::Root)]
        }
    };

    Ok(LoadPlan {
        strategy,
        root,
        requests,
        duplicate_bytes,
    })
}

fn is_binding_node(res: &ShareResolution, key: &NodeKey) -> bool {
    res.bindings
        .iter()
        .any(|(pkg, b)| b.provider == key.app && key.id == format!("{pkg}@{}", b.version))
}

fn check_share_consistency(g: &ModuleGraph, res: &ShareResolution, key: &NodeKey) -> Result<()> {
    let node = g.node(key).expect("reachable nodes exist");
    if node.kind != NodeKind::SharedPkg {
        return Ok(());
    }
    let Some((package, version)) = &node.package else {
        return Err(Error::Unplannable {
            key: key.to_string(),
            reason: "shared node without a package".to_string(),
        });
    };
    let bound = res
        .bindings
        .get(package)
        .is_some_and(|b| b.provider == key.app && b.version == *version);
    let fallback = res
        .fallback(&key.app, package)
        .is_some_and(|f| f.own_version == *version);
    if bound || fallback {
        Ok(())
    } else {
        Err(Error::Unplannable {
            key: key.to_string(),
            reason: "neither bound nor a fallback copy in the share resolution".to_string(),
        })
    }
}

pub fn required_bytes(p: &LoadPlan) -> u64 {
    p.requests.iter().map(|r| r.size_bytes).sum()
}
