//! Federation manifests (`federation.json`) and the linked multi-application
//! workspace built from a host manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::interfaces::{self, Expectation, InterfaceDecl, TypeExpr};
use crate::json;
use crate::semver::{parse_range, parse_version, Version, VersionRange};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FederationManifest {
    pub name: String,
    pub version: Version,
    pub entry: Option<String>,
    pub modules: Vec<ModuleDecl>,
    pub exposes: Vec<ExposeDecl>,
    pub remotes: Vec<RemoteRef>,
    pub shared: Vec<SharedSpec>,
    pub expects: Vec<ExpectDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDecl {
    pub id: String,
    pub size_bytes: u64,
    pub static_imports: Vec<ImportRef>,
    pub dynamic_imports: Vec<ImportRef>,
    /// Path of an interface file, relative to the manifest.
    pub interface: Option<String>,
}

/// Target of an import, encoded in manifests as `./local`, `remote/expose`
/// or a bare package name. Scoped packages (`@scope/pkg`) are shared refs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ImportRef {
    Local(String),
    Remote { remote: String, expose: String },
    Shared(String),
}

impl ImportRef {
    pub fn parse(text: &str) -> Option<ImportRef> {
        if text.is_empty() {
            return None;
        }
        if text.starts_with("./") {
            return Some(ImportRef::Local(text.to_string()));
        }
        if text.starts_with('@') {
            return Some(ImportRef::Shared(text.to_string()));
        }
        match text.split_once('/') {
            Some((remote, expose)) if !remote.is_empty() && !expose.is_empty() => {
                Some(ImportRef::Remote {
                    remote: remote.to_string(),
                    expose: expose.to_string(),
                })
            }
            Some(_) => None,
            None => Some(ImportRef::Shared(text.to_string())),
        }
    }
}

impl fmt::Display for ImportRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImportRef::Local(id) | ImportRef::Shared(id) => f.write_str(id),
            ImportRef::Remote { remote, expose } => write!(f, "{remote}/{expose}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposeDecl {
    pub id: String,
    pub module: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteRef {
    pub name: String,
    pub manifest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSpec {
    pub package: String,
    pub required_range: VersionRange,
    /// `None` for consumer-only participants.
    pub provided_version: Option<Version>,
    pub singleton: bool,
    pub eager: bool,
    pub strict_version: bool,
    pub size_bytes: u64,
}

/// An `expects` entry: the type a consumer requires of a remote export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectDecl {
    pub remote: String,
    pub expose: String,
    pub export: String,
    pub expected: TypeExpr,
}

impl ExpectDecl {
    pub fn target(&self) -> String {
        format!("{}/{}#{}", self.remote, self.expose, self.export)
    }
}

impl FederationManifest {
    pub fn new(name: impl Into<String>, version: Version) -> Self {
        FederationManifest {
            name: name.into(),
            version,
            entry: None,
            modules: Vec::new(),
            exposes: Vec::new(),
            remotes: Vec::new(),
            shared: Vec::new(),
            expects: Vec::new(),
        }
    }

    pub fn module(&self, id: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn expose(&self, id: &str) -> Option<&ExposeDecl> {
        self.exposes.iter().find(|e| e.id == id)
    }

    pub fn shared_spec(&self, package: &str) -> Option<&SharedSpec> {
        self.shared.iter().find(|s| s.package == package)
    }

    pub fn is_exposed(&self, module: &str) -> bool {
        self.exposes.iter().any(|e| e.module == module)
    }

    /// Canonical JSON form. Keys are sorted; optional fields are omitted
    /// when absent.
    pub fn to_json(&self) -> Value {
        let modules: Vec<Value> = self
            .modules
            .iter()
            .map(|m| {
                let mut o = Map::new();
                o.insert("id".into(), json!(m.id));
                o.insert("sizeBytes".into(), json!(m.size_bytes));
                o.insert("staticImports".into(), refs_json(&m.static_imports));
                o.insert("dynamicImports".into(), refs_json(&m.dynamic_imports));
                if let Some(i) = &m.interface {
                    o.insert("interface".into(), json!(i));
                }
                Value::Object(o)
            })
            .collect();
        let shared: Vec<Value> = self
            .shared
            .iter()
            .map(|s| {
                let mut o = Map::new();
                o.insert("package".into(), json!(s.package));
                o.insert("requiredRange".into(), json!(s.required_range.as_str()));
                if let Some(v) = s.provided_version {
                    o.insert("providedVersion".into(), json!(v.to_string()));
                }
                o.insert("singleton".into(), json!(s.singleton));
                o.insert("eager".into(), json!(s.eager));
                o.insert("strictVersion".into(), json!(s.strict_version));
                o.insert("sizeBytes".into(), json!(s.size_bytes));
                Value::Object(o)
            })
            .collect();
        let mut o = Map::new();
        o.insert("name".into(), json!(self.name));
        o.insert("version".into(), json!(self.version.to_string()));
        if let Some(e) = &self.entry {
            o.insert("entry".into(), json!(e));
        }
        o.insert("modules".into(), Value::Array(modules));
        o.insert(
            "exposes".into(),
            self.exposes
                .iter()
                .map(|e| json!({"id": e.id, "module": e.module}))
                .collect(),
        );
        o.insert(
            "remotes".into(),
            self.remotes
                .iter()
                .map(|r| json!({"name": r.name, "manifest": r.manifest}))
                .collect(),
        );
        o.insert("shared".into(), Value::Array(shared));
        if !self.expects.is_empty() {
            o.insert(
                "expects".into(),
                self.expects
                    .iter()
                    .map(|e| json!({"target": e.target(), "interface": e.expected.to_json()}))
                    .collect(),
            );
        }
        Value::Object(o)
    }

    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("manifest JSON is always serializable")
    }
}

fn refs_json(refs: &[ImportRef]) -> Value {
    refs.iter().map(|r| Value::String(r.to_string())).collect()
}

/// A parsed manifest plus the forward-compatibility warnings (unknown
/// fields) collected while reading it.
#[derive(Debug, Clone)]
pub struct ParsedManifest {
    pub manifest: FederationManifest,
    pub warnings: Vec<Diagnostic>,
}

const TOP_KEYS: &[&str] = &[
    "name", "version", "entry", "modules", "exposes", "remotes", "shared", "expects",
];
const MODULE_KEYS: &[&str] = &["id", "sizeBytes", "staticImports", "dynamicImports", "interface"];
const EXPOSE_KEYS: &[&str] = &["id", "module"];
const REMOTE_KEYS: &[&str] = &["name", "manifest"];
const SHARED_KEYS: &[&str] = &[
    "package",
    "requiredRange",
    "providedVersion",
    "singleton",
    "eager",
    "strictVersion",
    "sizeBytes",
];
const EXPECT_KEYS: &[&str] = &["target", "interface"];

pub fn parse_manifest(text: &str) -> Result<ParsedManifest> {
    let doc = json::parse_strict(text)?;
    let mut warnings = Vec::new();
    let root = json::object(&doc, "")?;
    json::warn_unknown(root, TOP_KEYS, "", &mut warnings);

    let name = json::string(json::required(root, "name", "")?, ".name")?.to_string();
    let version = parse_version(json::string(json::required(root, "version", "")?, ".version")?)?;
    let entry = json::optional(root, "entry")
        .map(|v| json::string(v, ".entry").map(str::to_string))
        .transpose()?;

    let modules = each(root, "modules", |obj, p| {
        json::warn_unknown(obj, MODULE_KEYS, p, &mut warnings);
        Ok(ModuleDecl {
            id: json::string(json::required(obj, "id", p)?, &json::join(p, "id"))?.to_string(),
            size_bytes: json::uint(json::required(obj, "sizeBytes", p)?, &json::join(p, "sizeBytes"))?,
            static_imports: import_list(obj, "staticImports", p)?,
            dynamic_imports: import_list(obj, "dynamicImports", p)?,
            interface: json::optional(obj, "interface")
                .map(|v| json::string(v, &json::join(p, "interface")).map(str::to_string))
                .transpose()?,
        })
    })?;

    let exposes = each(root, "exposes", |obj, p| {
        json::warn_unknown(obj, EXPOSE_KEYS, p, &mut warnings);
        Ok(ExposeDecl {
            id: json::string(json::required(obj, "id", p)?, &json::join(p, "id"))?.to_string(),
            module: json::string(json::required(obj, "module", p)?, &json::join(p, "module"))?.to_string(),
        })
    })?;

    let remotes = each(root, "remotes", |obj, p| {
        json::warn_unknown(obj, REMOTE_KEYS, p, &mut warnings);
        Ok(RemoteRef {
            name: json::string(json::required(obj, "name", p)?, &json::join(p, "name"))?.to_string(),
            manifest: json::string(json::required(obj, "manifest", p)?, &json::join(p, "manifest"))?
                .to_string(),
        })
    })?;

    let shared = each(root, "shared", |obj, p| {
        json::warn_unknown(obj, SHARED_KEYS, p, &mut warnings);
        let flag = |key: &str| -> Result<bool> {
            json::optional(obj, key)
                .map(|v| json::boolean(v, &json::join(p, key)))
                .unwrap_or(Ok(false))
        };
        Ok(SharedSpec {
            package: json::string(json::required(obj, "package", p)?, &json::join(p, "package"))?
                .to_string(),
            required_range: parse_range(json::string(
                json::required(obj, "requiredRange", p)?,
                &json::join(p, "requiredRange"),
            )?)?,
            provided_version: json::optional(obj, "providedVersion")
                .map(|v| json::string(v, &json::join(p, "providedVersion")).and_then(parse_version))
                .transpose()?,
            singleton: flag("singleton")?,
            eager: flag("eager")?,
            strict_version: flag("strictVersion")?,
            size_bytes: json::uint(json::required(obj, "sizeBytes", p)?, &json::join(p, "sizeBytes"))?,
        })
    })?;

    let expects = each(root, "expects", |obj, p| {
        json::warn_unknown(obj, EXPECT_KEYS, p, &mut warnings);
        let tp = json::join(p, "target");
        let target = json::string(json::required(obj, "target", p)?, &tp)?;
        let (remote, expose, export) = interfaces::parse_target(target).ok_or_else(|| Error::Syntax {
            path: tp.clone(),
            message: format!("target `{target}` is not of the form remote/expose#export"),
        })?;
        let expected = interfaces::parse_type(
            json::required(obj, "interface", p)?,
            &json::join(p, "interface"),
        )?;
        Ok(ExpectDecl {
            remote: remote.to_string(),
            expose: expose.to_string(),
            export: export.to_string(),
            expected,
        })
    })?;

    Ok(ParsedManifest {
        manifest: FederationManifest {
            name,
            version,
            entry,
            modules,
            exposes,
            remotes,
            shared,
            expects,
        },
        warnings,
    })
}

/// Absent collections are empty.
fn each<T>(
    root: &Map<String, Value>,
    key: &str,
    mut f: impl FnMut(&Map<String, Value>, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let path = json::join("", key);
    let Some(v) = json::optional(root, key) else {
        return Ok(Vec::new());
    };
    json::array(v, &path)?
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let p = json::index(&path, i);
            f(json::object(item, &p)?, &p)
        })
        .collect()
}

fn import_list(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Vec<ImportRef>> {
    let p = json::join(path, key);
    let Some(v) = json::optional(obj, key) else {
        return Ok(Vec::new());
    };
    json::array(v, &p)?
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let ip = json::index(&p, i);
            let text = json::string(item, &ip)?;
            ImportRef::parse(text).ok_or_else(|| Error::Syntax {
                path: ip,
                message: format!("`{text}` is not a valid import reference"),
            })
        })
        .collect()
}

/// Every invariant violation of a single manifest, in document order.
pub fn validate_manifest(m: &FederationManifest) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if m.name.trim().is_empty() {
        out.push(Diagnostic::error("E-EMPTY-NAME", ".name", "application name is empty"));
    }
    let module_ids: BTreeSet<&str> = m.modules.iter().map(|x| x.id.as_str()).collect();
    let remote_names: BTreeSet<&str> = m.remotes.iter().map(|r| r.name.as_str()).collect();
    let packages: BTreeSet<&str> = m.shared.iter().map(|s| s.package.as_str()).collect();

    if let Some(entry) = &m.entry {
        if !module_ids.contains(entry.as_str()) {
            out.push(Diagnostic::error(
                "E-DANGLING-ENTRY",
                ".entry",
                format!("entry `{entry}` is not a declared module"),
            ));
        }
    }

    let mut seen = BTreeSet::new();
    for (i, module) in m.modules.iter().enumerate() {
        let p = format!(".modules[{i}]");
        if !seen.insert(module.id.as_str()) {
            out.push(Diagnostic::error(
                "E-DUP-MODULE",
                format!("{p}.id"),
                format!("module id `{}` is declared twice", module.id),
            ));
        }
        let lists = [
            ("staticImports", &module.static_imports),
            ("dynamicImports", &module.dynamic_imports),
        ];
        for (key, refs) in lists {
            for (j, r) in refs.iter().enumerate() {
                let rp = format!("{p}.{key}[{j}]");
                match r {
                    ImportRef::Local(id) if !module_ids.contains(id.as_str()) => {
                        out.push(Diagnostic::error(
                            "E-DANGLING-IMPORT",
                            rp,
                            format!("`{id}` is not a declared module"),
                        ))
                    }
                    ImportRef::Remote { remote, .. } if !remote_names.contains(remote.as_str()) => {
                        out.push(Diagnostic::error(
                            "E-UNDECLARED-REMOTE",
                            rp,
                            format!("`{r}` names undeclared remote `{remote}`"),
                        ))
                    }
                    ImportRef::Shared(pkg) if !packages.contains(pkg.as_str()) => {
                        out.push(Diagnostic::error(
                            "E-UNDECLARED-SHARED",
                            rp,
                            format!("`{pkg}` is not declared under shared"),
                        ))
                    }
                    _ => {}
                }
            }
        }
        for (j, r) in module.dynamic_imports.iter().enumerate() {
            if module.static_imports.contains(r) {
                out.push(Diagnostic::error(
                    "E-IMPORT-BOTH",
                    format!("{p}.dynamicImports[{j}]"),
                    format!("`{r}` is imported both statically and dynamically"),
                ));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for (i, e) in m.exposes.iter().enumerate() {
        let p = format!(".exposes[{i}]");
        if !seen.insert(e.id.as_str()) {
            out.push(Diagnostic::error(
                "E-DUP-EXPOSE",
                format!("{p}.id"),
                format!("expose id `{}` is declared twice", e.id),
            ));
        }
        if !module_ids.contains(e.module.as_str()) {
            out.push(Diagnostic::error(
                "E-DANGLING-EXPOSE",
                format!("{p}.module"),
                format!("expose `{}` points at undeclared module `{}`", e.id, e.module),
            ));
        }
    }

    let mut seen = BTreeSet::new();
    for (i, r) in m.remotes.iter().enumerate() {
        let p = format!(".remotes[{i}].name");
        if r.name.is_empty() {
            out.push(Diagnostic::error("E-EMPTY-NAME", p, "remote name is empty"));
            continue;
        }
        if !seen.insert(r.name.as_str()) {
            out.push(Diagnostic::error(
                "E-DUP-REMOTE",
                p.clone(),
                format!("remote `{}` is declared twice", r.name),
            ));
        }
        if r.name == m.name {
            out.push(Diagnostic::error(
                "E-SELF-REMOTE",
                p,
                format!("remote `{}` has the application's own name", r.name),
            ));
        }
    }

    let mut seen = BTreeSet::new();
    for (i, s) in m.shared.iter().enumerate() {
        let p = format!(".shared[{i}]");
        if !seen.insert(s.package.as_str()) {
            out.push(Diagnostic::error(
                "E-DUP-SHARED",
                format!("{p}.package"),
                format!("shared package `{}` is declared twice", s.package),
            ));
        }
        if let Some(v) = s.provided_version {
            if !s.required_range.satisfies(v) {
                out.push(Diagnostic::warning(
                    "W-SELF-RANGE",
                    format!("{p}.providedVersion"),
                    format!(
                        "provided {} {v} does not satisfy its own range `{}`",
                        s.package, s.required_range
                    ),
                ));
            }
        }
    }

    for (i, e) in m.expects.iter().enumerate() {
        if !remote_names.contains(e.remote.as_str()) {
            out.push(Diagnostic::error(
                "E-UNDECLARED-REMOTE",
                format!(".expects[{i}].target"),
                format!("`{}` names undeclared remote `{}`", e.target(), e.remote),
            ));
        }
    }
    out
}

/// One loaded application and how its remote names map to applications.
#[derive(Debug, Clone)]
pub struct Application {
    pub manifest: FederationManifest,
    pub source: Option<PathBuf>,
    links: BTreeMap<String, String>,
}

impl Application {
    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    /// Remote name as declared by this application → application name.
    pub fn links(&self) -> &BTreeMap<String, String> {
        &self.links
    }
}

/// A host and the transitive closure of its remotes, each loaded once.
#[derive(Debug, Clone)]
pub struct Workspace {
    apps: Vec<Application>,
    interfaces: BTreeMap<(String, String), InterfaceDecl>,
    warnings: Vec<Diagnostic>,
}

impl Workspace {
    /// Links in-memory manifests. Remote references resolve by application
    /// name.
    pub fn from_manifests(host: FederationManifest, remotes: Vec<FederationManifest>) -> Result<Self> {
        let mut by_name: BTreeMap<String, FederationManifest> = BTreeMap::new();
        let order: Vec<String> = std::iter::once(&host)
            .chain(&remotes)
            .map(|m| m.name.clone())
            .collect();
        for m in std::iter::once(host).chain(remotes) {
            if by_name.contains_key(&m.name) {
                return Err(Error::DupApp { name: m.name });
            }
            by_name.insert(m.name.clone(), m);
        }
        let mut apps = Vec::new();
        for name in &order {
            let manifest = by_name[name].clone();
            let mut links = BTreeMap::new();
            for r in &manifest.remotes {
                if !by_name.contains_key(&r.name) {
                    return Err(Error::MissingRemote {
                        app: name.clone(),
                        remote: r.name.clone(),
                    });
                }
                if links.insert(r.name.clone(), r.name.clone()).is_some() {
                    return Err(Error::DupApp { name: r.name.clone() });
                }
            }
            apps.push(Application {
                manifest,
                source: None,
                links,
            });
        }
        let ws = Workspace {
            apps,
            interfaces: BTreeMap::new(),
            warnings: Vec::new(),
        };
        ws.check_link_cycles()?;
        ws.require_host_entry()?;
        Ok(ws)
    }

    pub fn with_interface(mut self, app: &str, module: &str, decl: InterfaceDecl) -> Self {
        self.interfaces
            .insert((app.to_string(), module.to_string()), decl);
        self
    }

    pub fn host(&self) -> &FederationManifest {
        &self.apps[0].manifest
    }

    pub fn remotes(&self) -> impl Iterator<Item = &FederationManifest> {
        self.apps[1..].iter().map(|a| &a.manifest)
    }

    /// All applications, host first, in load order.
    pub fn apps(&self) -> &[Application] {
        &self.apps
    }

    pub fn app(&self, name: &str) -> Option<&FederationManifest> {
        self.apps
            .iter()
            .find(|a| a.manifest.name == name)
            .map(|a| &a.manifest)
    }

    /// The application that `app` refers to as `remote_name`.
    pub fn resolve_remote(&self, app: &str, remote_name: &str) -> Option<&str> {
        self.apps
            .iter()
            .find(|a| a.manifest.name == app)?
            .links
            .get(remote_name)
            .map(String::as_str)
    }

    pub fn interface(&self, app: &str, module: &str) -> Option<&InterfaceDecl> {
        self.interfaces.get(&(app.to_string(), module.to_string()))
    }

    /// Warnings collected while parsing the manifests.
    pub fn load_warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    /// Every `expects` entry of every application.
    pub fn expectations(&self) -> Vec<Expectation> {
        self.apps
            .iter()
            .flat_map(|a| {
                a.manifest.expects.iter().map(|e| Expectation {
                    consumer: a.manifest.name.clone(),
                    remote: e.remote.clone(),
                    expose: e.expose.clone(),
                    export: e.export.clone(),
                    expected: e.expected.clone(),
                })
            })
            .collect()
    }

    fn require_host_entry(&self) -> Result<()> {
        if self.host().entry.is_none() {
            return Err(Error::NoEntry {
                name: self.host().name.clone(),
            });
        }
        Ok(())
    }

    fn check_link_cycles(&self) -> Result<()> {
        fn visit<'a>(
            ws: &'a Workspace,
            app: &'a str,
            stack: &mut Vec<&'a str>,
            done: &mut BTreeSet<&'a str>,
        ) -> Result<()> {
            if let Some(pos) = stack.iter().position(|a| *a == app) {
                let mut cycle: Vec<String> = stack[pos..].iter().map(|s| s.to_string()).collect();
                cycle.push(app.to_string());
                return Err(Error::RemoteCycle { cycle });
            }
            if !done.insert(app) {
                return Ok(());
            }
            stack.push(app);
            let a = ws.apps.iter().find(|a| a.manifest.name == app).expect("linked app exists");
            for target in a.links.values() {
                visit(ws, target, stack, done)?;
            }
            stack.pop();
            Ok(())
        }
        let mut done = BTreeSet::new();
        for a in &self.apps {
            // also catches cycles among apps the host never reaches
            visit(self, &a.manifest.name, &mut Vec::new(), &mut done)?;
        }
        Ok(())
    }
}

/// Loads the host manifest and, recursively and in declaration order, every
/// remote manifest it references. Remote paths are relative to the
/// referencing manifest's directory. Module interface files are loaded too.
pub fn load_workspace(host_path: &Path) -> Result<Workspace> {
    let mut loader = Loader::default();
    loader.visit(host_path)?;
    let ws = Workspace {
        apps: loader.apps,
        interfaces: loader.interfaces,
        warnings: loader.warnings,
    };
    ws.require_host_entry()?;
    Ok(ws)
}

#[derive(Default)]
struct Loader {
    apps: Vec<Application>,
    by_path: BTreeMap<PathBuf, String>,
    stack: Vec<(PathBuf, String)>,
    interfaces: BTreeMap<(String, String), InterfaceDecl>,
    warnings: Vec<Diagnostic>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Loader {
    /// Returns the application name of the manifest at `path`.
    fn visit(&mut self, path: &Path) -> Result<String> {
        let canon = std::fs::canonicalize(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if let Some(pos) = self.stack.iter().position(|(p, _)| *p == canon) {
            let mut cycle: Vec<String> = self.stack[pos..].iter().map(|(_, n)| n.clone()).collect();
            cycle.push(self.stack[pos].1.clone());
            return Err(Error::RemoteCycle { cycle });
        }
        if let Some(name) = self.by_path.get(&canon) {
            return Ok(name.clone());
        }

        let text = read(path)?;
        let parsed = parse_manifest(&text).map_err(|e| e.in_file(path))?;
        let manifest = parsed.manifest;
        let name = manifest.name.clone();
        if self.apps.iter().any(|a| a.manifest.name == name) {
            return Err(Error::DupApp { name });
        }
        let file_label = path.display().to_string();
        self.warnings
            .extend(parsed.warnings.into_iter().map(|w| w.within(&format!("{file_label}:"))));

        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for module in &manifest.modules {
            if let Some(rel) = &module.interface {
                let ipath = dir.join(rel);
                let decl = interfaces::parse_interface(&read(&ipath)?).map_err(|e| e.in_file(&ipath))?;
                self.interfaces
                    .insert((name.clone(), module.id.clone()), decl);
            }
        }

        // pre-order: host first, then remotes in declaration order
        let slot = self.apps.len();
        self.apps.push(Application {
            manifest: manifest.clone(),
            source: Some(path.to_path_buf()),
            links: BTreeMap::new(),
        });
        self.stack.push((canon.clone(), name.clone()));
        let mut links = BTreeMap::new();
        for remote in &manifest.remotes {
            if links.contains_key(&remote.name) {
                return Err(Error::DupApp {
                    name: remote.name.clone(),
                });
            }
            let target = self.visit(&dir.join(&remote.manifest))?;
            links.insert(remote.name.clone(), target);
        }
        self.stack.pop();
        self.apps[slot].links = links;
        self.by_path.insert(canon, name.clone());
        Ok(name)
    }
}

/// Per-application manifest validation plus cross-application checks:
/// remote imports and expectations must land on an existing expose.
pub fn validate_workspace(w: &Workspace) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = w.load_warnings().to_vec();
    for app in w.apps() {
        let name = app.name();
        out.extend(
            validate_manifest(&app.manifest)
                .into_iter()
                .map(|d| d.within(&format!("{name}:"))),
        );
        for (i, module) in app.manifest.modules.iter().enumerate() {
            for r in module.static_imports.iter().chain(&module.dynamic_imports) {
                if let ImportRef::Remote { remote, expose } = r {
                    let Some(target) = w.resolve_remote(name, remote) else {
                        continue; // reported as E-UNDECLARED-REMOTE
                    };
                    if w.app(target).and_then(|m| m.expose(expose)).is_none() {
                        out.push(Diagnostic::error(
                            "E-DANGLING-REMOTE",
                            format!("{name}:.modules[{i}]"),
                            format!("`{r}`: `{target}` exposes no `{expose}`"),
                        ));
                    }
                }
            }
        }
    }
    out
}
