//! Cross-application module graph.
//!
//! Nodes are modules keyed by `(application, module id)` plus one node per
//! bound shared package (attributed to its provider) and one per fallback
//! copy. Edges carry the import mode. Cycles inside one application are
//! contracted into a single fetch unit by [`ModuleGraph::condense`];
//! cycles spanning applications are rejected at build time.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use serde_json::json;

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::manifest::{ImportRef, Workspace};
use crate::semver::Version;
use crate::shares::ShareResolution;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeKey {
    pub app: String,
    pub id: String,
}

impl NodeKey {
    pub fn new(app: impl Into<String>, id: impl Into<String>) -> Self {
        NodeKey {
            app: app.into(),
            id: id.into(),
        }
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.app, self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeKind {
    Entry,
    Exposed,
    Internal,
    SharedPkg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleNode {
    pub key: NodeKey,
    pub size_bytes: u64,
    pub kind: NodeKind,
    /// Package and version for `SharedPkg` nodes.
    pub package: Option<(String, Version)>,
}

impl ModuleNode {
    pub fn module(key: NodeKey, size_bytes: u64, kind: NodeKind) -> Self {
        ModuleNode {
            key,
            size_bytes,
            kind,
            package: None,
        }
    }

    pub fn shared(app: &str, package: &str, version: Version, size_bytes: u64) -> Self {
        ModuleNode {
            key: NodeKey::new(app, format!("{package}@{version}")),
            size_bytes,
            kind: NodeKind::SharedPkg,
            package: Some((package.to_string(), version)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: NodeKey,
    pub to: NodeKey,
    pub mode: ImportMode,
}

#[derive(Debug, Clone)]
pub struct ModuleGraph {
    nodes: BTreeMap<NodeKey, ModuleNode>,
    edges: BTreeSet<Edge>,
    root: NodeKey,
    warnings: Vec<Diagnostic>,
}

/// A strongly connected component treated as one fetch unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub members: BTreeSet<NodeKey>,
    pub size_bytes: u64,
}

/// The graph with every strongly connected component collapsed.
#[derive(Debug, Clone)]
pub struct Condensed {
    /// Ordered by smallest member key.
    pub units: Vec<Unit>,
    pub unit_of: BTreeMap<NodeKey, usize>,
    /// `from → to → true` when at least one underlying edge is static.
    pub edges: BTreeMap<usize, BTreeMap<usize, bool>>,
    pub root: usize,
    /// Units that contain a cycle (more than one member or a self-loop).
    pub cyclic: BTreeSet<usize>,
}

impl Condensed {
    pub fn successors(&self, u: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.edges
            .get(&u)
            .into_iter()
            .flat_map(|m| m.iter().map(|(v, s)| (*v, *s)))
    }

    /// Units reachable from the root through all edges.
    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([self.root]);
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            for (v, _) in self.successors(u) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

impl ModuleGraph {
    /// Assembles a graph from explicit parts, checking that the root and
    /// every edge endpoint exist.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = ModuleNode>,
        edges: impl IntoIterator<Item = Edge>,
        root: NodeKey,
    ) -> Result<Self> {
        let nodes: BTreeMap<NodeKey, ModuleNode> =
            nodes.into_iter().map(|n| (n.key.clone(), n)).collect();
        if !nodes.contains_key(&root) {
            return Err(Error::BadGraph(format!("root `{root}` is not a node")));
        }
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for e in &edges {
            for end in [&e.from, &e.to] {
                if !nodes.contains_key(end) {
                    return Err(Error::BadGraph(format!("edge endpoint `{end}` is not a node")));
                }
            }
        }
        Ok(ModuleGraph {
            nodes,
            edges,
            root,
            warnings: Vec::new(),
        })
    }

    pub fn root(&self) -> &NodeKey {
        &self.root
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ModuleNode> {
        self.nodes.values()
    }

    pub fn node(&self, key: &NodeKey) -> Option<&ModuleNode> {
        self.nodes.get(key)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    pub fn out_edges<'a>(&'a self, key: &'a NodeKey) -> impl Iterator<Item = &'a Edge> + 'a {
        use std::ops::Bound;
        let lo = Edge {
            from: key.clone(),
            to: NodeKey::new("", ""),
            mode: ImportMode::Static,
        };
        self.edges
            .range((Bound::Included(lo), Bound::Unbounded))
            .take_while(move |e| &e.from == key)
    }

    pub fn condense(&self) -> Condensed {
        let keys: Vec<&NodeKey> = self.nodes.keys().collect();
        let index: BTreeMap<&NodeKey, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut g = DiGraph::<(), ()>::with_capacity(keys.len(), self.edges.len());
        for _ in &keys {
            g.add_node(());
        }
        for e in &self.edges {
            g.add_edge(NodeIndex::new(index[&e.from]), NodeIndex::new(index[&e.to]), ());
        }
        let mut units: Vec<BTreeSet<NodeKey>> = tarjan_scc(&g)
            .into_iter()
            .map(|comp| comp.into_iter().map(|n| keys[n.index()].clone()).collect())
            .collect();
        units.sort_by(|a, b| a.first().cmp(&b.first()));

        let mut unit_of = BTreeMap::new();
        for (u, members) in units.iter().enumerate() {
            for k in members {
                unit_of.insert(k.clone(), u);
            }
        }
        let mut edges: BTreeMap<usize, BTreeMap<usize, bool>> = BTreeMap::new();
        let mut cyclic: BTreeSet<usize> =
            (0..units.len()).filter(|u| units[*u].len() > 1).collect();
        for e in &self.edges {
            let (a, b) = (unit_of[&e.from], unit_of[&e.to]);
            if a == b {
                cyclic.insert(a);
                continue;
            }
            let slot = edges.entry(a).or_default().entry(b).or_insert(false);
            *slot |= e.mode == ImportMode::Static;
        }
        let units = units
            .into_iter()
            .map(|members| Unit {
                size_bytes: members.iter().map(|k| self.nodes[k].size_bytes).sum(),
                members,
            })
            .collect();
        Condensed {
            root: unit_of[&self.root],
            units,
            unit_of,
            edges,
            cyclic,
        }
    }
}

/// Builds the module graph of a workspace under a share resolution.
pub fn build_graph(w: &Workspace, res: &ShareResolution) -> Result<ModuleGraph> {
    let host = w.host();
    let entry = host.entry.clone().ok_or_else(|| Error::NoEntry {
        name: host.name.clone(),
    })?;
    let mut nodes = Vec::new();
    for app in w.apps() {
        let m = &app.manifest;
        for module in &m.modules {
            let kind = if m.entry.as_deref() == Some(module.id.as_str()) {
                NodeKind::Entry
            } else if m.is_exposed(&module.id) {
                NodeKind::Exposed
            } else {
                NodeKind::Internal
            };
            nodes.push(ModuleNode::module(
                NodeKey::new(&m.name, &module.id),
                module.size_bytes,
                kind,
            ));
        }
    }
    for (package, b) in &res.bindings {
        nodes.push(ModuleNode::shared(&b.provider, package, b.version, b.size_bytes));
    }
    for f in &res.fallbacks {
        nodes.push(ModuleNode::shared(&f.application, &f.package, f.own_version, f.size_bytes));
    }

    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for app in w.apps() {
        let m = &app.manifest;
        for module in &m.modules {
            let from = NodeKey::new(&m.name, &module.id);
            let tagged = module
                .static_imports
                .iter()
                .map(|r| (r, ImportMode::Static))
                .chain(module.dynamic_imports.iter().map(|r| (r, ImportMode::Dynamic)));
            for (r, mode) in tagged {
                let to = match r {
                    ImportRef::Local(id) => {
                        if m.module(id).is_none() {
                            return Err(Error::DanglingImport {
                                app: m.name.clone(),
                                import: id.clone(),
                            });
                        }
                        NodeKey::new(&m.name, id)
                    }
                    ImportRef::Remote { remote, expose } => {
                        let dangling = || Error::DanglingRemote {
                            app: m.name.clone(),
                            remote: remote.clone(),
                            expose: expose.clone(),
                        };
                        let target = w.resolve_remote(&m.name, remote).ok_or_else(dangling)?;
                        let tm = w.app(target).ok_or_else(dangling)?;
                        let exposed = tm.expose(expose).ok_or_else(dangling)?;
                        if tm.module(&exposed.module).is_none() {
                            return Err(dangling());
                        }
                        if m.name != host.name {
                            warnings.push(Diagnostic::warning(
                                "W-TRANSITIVE-REMOTE",
                                format!("{}:{}", m.name, module.id),
                                format!("remote `{}` consumes `{r}` from another remote", m.name),
                            ));
                        }
                        NodeKey::new(target, &exposed.module)
                    }
                    ImportRef::Shared(pkg) => {
                        if let Some(f) = res.fallback(&m.name, pkg) {
                            NodeKey::new(&m.name, format!("{pkg}@{}", f.own_version))
                        } else if let Some(b) = res.bindings.get(pkg) {
                            NodeKey::new(&b.provider, format!("{pkg}@{}", b.version))
                        } else {
                            return Err(Error::UnresolvedShared {
                                app: m.name.clone(),
                                package: pkg.clone(),
                            });
                        }
                    }
                };
                edges.push(Edge { from: from.clone(), to, mode });
            }
        }
    }

    let mut g = ModuleGraph::from_parts(nodes, edges, NodeKey::new(&host.name, &entry))?;
    for cycle in detect_cycles(&g) {
        let apps: BTreeSet<&str> = cycle.iter().map(|k| k.app.as_str()).collect();
        if apps.len() > 1 {
            return Err(Error::XAppCycle {
                members: cycle.iter().map(ToString::to_string).collect(),
            });
        }
    }
    g.warnings = warnings;
    Ok(g)
}

/// Nodes reachable from the root; dynamic edges are followed only when
/// `include_dynamic` is set.
pub fn reachable_set(g: &ModuleGraph, include_dynamic: bool) -> BTreeSet<NodeKey> {
    let mut seen = BTreeSet::from([g.root.clone()]);
    let mut queue = VecDeque::from([g.root.clone()]);
    while let Some(k) = queue.pop_front() {
        for e in g.out_edges(&k) {
            if (include_dynamic || e.mode == ImportMode::Static) && seen.insert(e.to.clone()) {
                queue.push_back(e.to.clone());
            }
        }
    }
    seen
}

/// Number of sequential fetch rounds on the longest path from the root,
/// with each contracted cycle counting as one round.
pub fn waterfall_depth(g: &ModuleGraph) -> usize {
    let c = g.condense();
    longest_chain(&c)
}

pub(crate) fn longest_chain(c: &Condensed) -> usize {
    // iterative post-order so deep chains cannot overflow the stack
    let mut depth: BTreeMap<usize, usize> = BTreeMap::new();
    let mut stack = vec![(c.root, false)];
    while let Some((u, expanded)) = stack.pop() {
        if depth.contains_key(&u) {
            continue;
        }
        if expanded {
            let best = c.successors(u).map(|(v, _)| depth[&v]).max().unwrap_or(0);
            depth.insert(u, best + 1);
        } else {
            stack.push((u, true));
            for (v, _) in c.successors(u) {
                if !depth.contains_key(&v) {
                    stack.push((v, false));
                }
            }
        }
    }
    depth[&c.root]
}

/// Strongly connected components with more than one node, or a single node
/// importing itself. Members are sorted; cycles are sorted by first member.
pub fn detect_cycles(g: &ModuleGraph) -> Vec<Vec<NodeKey>> {
    let c = g.condense();
    c.cyclic
        .iter()
        .map(|u| c.units[*u].members.iter().cloned().collect())
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

/// Deterministic Graphviz rendering. Dynamic imports are dashed; shared
/// packages are cylinders; exposed modules have a dashed outline.
pub fn export_dot(g: &ModuleGraph) -> String {
    let mut out = String::from("digraph federation {\n  rankdir=LR;\n  node [shape=box];\n");
    for n in g.nodes.values() {
        // `\n` is a Graphviz line break, so it goes in after escaping
        let label = format!("\"{}\\n{} B\"", escape(&n.key.to_string()), n.size_bytes);
        let attrs = match n.kind {
            NodeKind::Entry => "style=bold",
            NodeKind::Exposed => "style=dashed",
            NodeKind::Internal => "style=solid",
            NodeKind::SharedPkg => "shape=cylinder",
        };
        let _ = writeln!(out, "  {} [label={label}, {attrs}];", quote(&n.key.to_string()));
    }
    for e in &g.edges {
        let from = quote(&e.from.to_string());
        let to = quote(&e.to.to_string());
        match e.mode {
            ImportMode::Static => {
                let _ = writeln!(out, "  {from} -> {to};");
            }
            ImportMode::Dynamic => {
                let _ = writeln!(out, "  {from} -> {to} [style=dashed];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// `{"root", "nodes", "edges"}` with nodes and edges in key order.
pub fn to_json(g: &ModuleGraph) -> serde_json::Value {
    let nodes: Vec<_> = g
        .nodes
        .values()
        .map(|n| {
            json!({
                "key": n.key.to_string(),
                "app": n.key.app,
                "id": n.key.id,
                "kind": n.kind,
                "sizeBytes": n.size_bytes,
            })
        })
        .collect();
    let edges: Vec<_> = g
        .edges
        .iter()
        .map(|e| json!({"from": e.from.to_string(), "to": e.to.to_string(), "mode": e.mode}))
        .collect();
    json!({"root": g.root.to_string(), "nodes": nodes, "edges": edges})
}
