//! Seeded generators for randomized suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use fedplan::interfaces::{Field, TypeExpr};
use fedplan::manifest::{
    ExposeDecl, FederationManifest, ImportRef, ModuleDecl, RemoteRef, SharedSpec, Workspace,
};
use fedplan::semver::{parse_range, Version};
use fedplan::shares::{ShareScope, DEFAULT_SCOPE};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn ver(r: &mut ChaCha8Rng) -> String {
    format!("{}.{}.{}", r.random_range(0..6), r.random_range(0..6), r.random_range(0..6))
}

/// Range text over versions with components in 0..6.
pub fn range_text(r: &mut ChaCha8Rng) -> String {
    let disjuncts = r.random_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..disjuncts {
        let atoms = r.random_range(1..=3);
        let mut parts = Vec::new();
        for _ in 0..atoms {
            let op = ["", "=", "^", "~", ">=", ">", "<=", "<", "*"][r.random_range(0..9)];
            if op == "*" {
                parts.push("*".to_string());
            } else {
                parts.push(format!("{op}{}", ver(r)));
            }
        }
        out.push(parts.join(" "));
    }
    out.join(" || ")
}

pub fn all_versions() -> Vec<Version> {
    let mut v = Vec::new();
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                v.push(Version::new(a, b, c));
            }
        }
    }
    v
}

const PACKAGES: &[&str] = &["react", "react-dom", "lodash", "d3", "@acme/ui"];

fn shared_spec(r: &mut ChaCha8Rng, package: &str, provide: bool) -> SharedSpec {
    let major = r.random_range(1..4);
    let minor = r.random_range(0..4);
    let patch = r.random_range(0..4);
    let range = match r.random_range(0..4) {
        0 => format!("^{major}.{minor}.0"),
        1 => format!("~{major}.{minor}.0"),
        2 => format!(">={major}.0.0"),
        _ => "*".to_string(),
    };
    SharedSpec {
        package: package.to_string(),
        required_range: parse_range(&range).unwrap(),
        provided_version: provide.then(|| Version::new(major, minor, patch)),
        singleton: r.random_bool(0.4),
        eager: r.random_bool(0.2),
        strict_version: r.random_bool(0.5),
        size_bytes: r.random_range(1..50) * 1000,
    }
}

/// A random share scope over up to five applications.
pub fn scope(r: &mut ChaCha8Rng) -> ShareScope {
    let apps = ["host", "checkout", "catalog", "search", "account"];
    let n = r.random_range(1..=apps.len());
    let mut entries = Vec::new();
    for app in &apps[..n] {
        for pkg in PACKAGES {
            if r.random_bool(0.6) {
                let provide = r.random_bool(0.8);
                entries.push((app.to_string(), shared_spec(r, pkg, provide)));
            }
        }
    }
    entries.shuffle(r);
    ShareScope {
        scope_name: DEFAULT_SCOPE.to_string(),
        host: "host".to_string(),
        entries,
    }
}

pub struct GenOptions {
    pub max_nodes: usize,
    /// Allow back edges inside an application.
    pub local_cycles: bool,
    pub shared: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_nodes: 20,
            local_cycles: true,
            shared: true,
        }
    }
}

/// A random acyclic-across-applications federation. Applications are
/// ordered host, r1, r2, ...; imports only point to later applications, so
/// the only cycles are local ones. Every shared participant provides a
/// copy and no package is a strict singleton, so share resolution never
/// fails.
pub fn workspace(r: &mut ChaCha8Rng, opts: &GenOptions) -> Workspace {
    let apps = r.random_range(1..=3usize);
    let total = r.random_range(apps..=opts.max_nodes.max(apps));
    // split `total` modules over the apps, at least one each
    let mut counts = vec![1usize; apps];
    for _ in apps..total {
        counts[r.random_range(0..apps)] += 1;
    }
    let names: Vec<String> = (0..apps)
        .map(|i| if i == 0 { "host".to_string() } else { format!("r{i}") })
        .collect();

    let mut manifests: Vec<FederationManifest> = names
        .iter()
        .map(|n| FederationManifest::new(n.clone(), Version::new(1, 0, 0)))
        .collect();
    for (a, m) in manifests.iter_mut().enumerate() {
        for j in 0..counts[a] {
            m.modules.push(ModuleDecl {
                id: format!("./m{j}"),
                size_bytes: r.random_range(1..=40) * 500,
                static_imports: Vec::new(),
                dynamic_imports: Vec::new(),
                interface: None,
            });
        }
        if a > 0 {
            m.exposes.push(ExposeDecl {
                id: "./m0".to_string(),
                module: "./m0".to_string(),
            });
            for j in 1..counts[a] {
                if r.random_bool(0.3) {
                    m.exposes.push(ExposeDecl {
                        id: format!("./m{j}"),
                        module: format!("./m{j}"),
                    });
                }
            }
        }
        if opts.shared {
            for pkg in PACKAGES {
                if r.random_bool(0.4) {
                    let mut s = shared_spec(r, pkg, true);
                    s.strict_version = false;
                    m.shared.push(s);
                }
            }
        }
    }
    manifests[0].entry = Some("./m0".to_string());

    let exposes: Vec<Vec<String>> = manifests.iter().map(|m| m.exposes.iter().map(|e| e.id.clone()).collect()).collect();
    for a in 0..apps {
        let shared: Vec<String> = manifests[a].shared.iter().map(|s| s.package.clone()).collect();
        let mut used_remotes = std::collections::BTreeSet::new();
        for j in 0..counts[a] {
            let mut statics = Vec::new();
            let mut dynamics = Vec::new();
            let mut push = |imp: ImportRef, r: &mut ChaCha8Rng| {
                if statics.contains(&imp) || dynamics.contains(&imp) {
                    return;
                }
                if r.random_bool(0.3) {
                    dynamics.push(imp);
                } else {
                    statics.push(imp);
                }
            };
            for k in j + 1..counts[a] {
                if r.random_bool(0.35) {
                    push(ImportRef::Local(format!("./m{k}")), r);
                }
            }
            if opts.local_cycles && j > 0 && r.random_bool(0.1) {
                let k = r.random_range(0..j);
                push(ImportRef::Local(format!("./m{k}")), r);
            }
            for (b, ex) in exposes.iter().enumerate().skip(a + 1) {
                for e in ex {
                    if r.random_bool(0.3) {
                        used_remotes.insert(b);
                        push(
                            ImportRef::Remote {
                                remote: names[b].clone(),
                                expose: e.clone(),
                            },
                            r,
                        );
                    }
                }
            }
            for p in &shared {
                if r.random_bool(0.3) {
                    push(ImportRef::Shared(p.clone()), r);
                }
            }
            manifests[a].modules[j].static_imports = statics;
            manifests[a].modules[j].dynamic_imports = dynamics;
        }
        // the host links every remote so the workspace is connected
        let linked: Vec<usize> = if a == 0 { (1..apps).collect() } else { used_remotes.into_iter().collect() };
        manifests[a].remotes = linked
            .into_iter()
            .map(|b| RemoteRef {
                name: names[b].clone(),
                manifest: format!("../{}/federation.json", names[b]),
            })
            .collect();
    }
    let host = manifests.remove(0);
    Workspace::from_manifests(host, manifests).expect("generated workspace links")
}

/// A random type term no deeper than `depth`.
pub fn type_expr(r: &mut ChaCha8Rng, depth: usize) -> TypeExpr {
    let leaf = depth <= 1 || r.random_bool(0.3);
    if leaf {
        return match r.random_range(0..4) {
            0 => TypeExpr::String,
            1 => TypeExpr::Number,
            2 => TypeExpr::Boolean,
            _ => TypeExpr::Unknown,
        };
    }
    match r.random_range(0..3) {
        0 => {
            let n = r.random_range(0..4);
            let fields: Vec<(String, Field)> = (0..n)
                .map(|_| {
                    let name = ["id", "title", "items", "onClick", "meta"][r.random_range(0..5)].to_string();
                    let ty = type_expr(r, depth - 1);
                    let f = if r.random_bool(0.3) { Field::optional(ty) } else { Field::required(ty) };
                    (name, f)
                })
                .collect();
            TypeExpr::record(fields)
        }
        1 => {
            let n = r.random_range(0..3);
            let params = (0..n).map(|_| type_expr(r, depth - 1)).collect();
            TypeExpr::function(params, type_expr(r, depth - 1))
        }
        _ => TypeExpr::array(type_expr(r, depth - 1)),
    }
}

/// A random subtype of `t`, built only from the subtyping rules' safe
/// directions.
pub fn widen_down(r: &mut ChaCha8Rng, t: &TypeExpr, depth: usize) -> TypeExpr {
    match t {
        TypeExpr::Unknown if r.random_bool(0.5) => type_expr(r, depth),
        TypeExpr::Record(fields) => {
            let mut out = fields.clone();
            for f in out.values_mut() {
                f.ty = widen_down(r, &f.ty, depth.saturating_sub(1));
                if f.optional && r.random_bool(0.3) {
                    f.optional = false;
                }
            }
            if r.random_bool(0.5) {
                let name = ["extra", "debug", "version"][r.random_range(0..3)];
                out.entry(name.to_string())
                    .or_insert_with(|| Field::required(type_expr(r, depth.saturating_sub(1))));
            }
            TypeExpr::Record(out)
        }
        TypeExpr::Function { params, returns } => TypeExpr::Function {
            params: params.iter().map(|p| widen_up(r, p, depth.saturating_sub(1))).collect(),
            returns: Box::new(widen_down(r, returns, depth.saturating_sub(1))),
        },
        TypeExpr::ArrayOf(item) => TypeExpr::array(widen_down(r, item, depth.saturating_sub(1))),
        other => other.clone(),
    }
}

/// A random supertype of `t`.
pub fn widen_up(r: &mut ChaCha8Rng, t: &TypeExpr, depth: usize) -> TypeExpr {
    if r.random_bool(0.1) {
        return TypeExpr::Unknown;
    }
    match t {
        TypeExpr::Record(fields) => {
            let mut out = fields.clone();
            let keys: Vec<String> = out.keys().cloned().collect();
            for k in keys {
                if r.random_bool(0.25) {
                    out.remove(&k);
                    continue;
                }
                let f = out.get_mut(&k).unwrap();
                f.ty = widen_up(r, &f.ty, depth.saturating_sub(1));
                if r.random_bool(0.3) {
                    f.optional = true;
                }
            }
            if r.random_bool(0.3) {
                out.entry("maybe".to_string()).or_insert_with(|| Field::optional(TypeExpr::Unknown));
            }
            TypeExpr::Record(out)
        }
        TypeExpr::Function { params, returns } => TypeExpr::Function {
            params: params.iter().map(|p| widen_down(r, p, depth.saturating_sub(1))).collect(),
            returns: Box::new(widen_up(r, returns, depth.saturating_sub(1))),
        },
        TypeExpr::ArrayOf(item) => TypeExpr::array(widen_up(r, item, depth.saturating_sub(1))),
        other => other.clone(),
    }
}
