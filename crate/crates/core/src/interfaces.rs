//! Structural interface declarations for exposed modules and the
//! compatibility check between what a provider declares and what a
//! consumer expects.
//!
//! Interface documents are JSON:
//!
//! ```json
//! { "types":   { "Props": { "kind": "record", "fields": { ... } } },
//!   "exports": { "Header": { "kind": "function",
//!                            "params": [ { "kind": "ref", "name": "Props" } ],
//!                            "returns": { "kind": "string" } } } }
//! ```
//!
//! `types` is optional; `ref` nodes are inlined at parse time and any
//! self-reference is rejected, so every [`TypeExpr`] is finite.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::json;
use crate::manifest::Workspace;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    String,
    Number,
    Boolean,
    Record(BTreeMap<String, Field>),
    Function {
        params: Vec<TypeExpr>,
        returns: Box<TypeExpr>,
    },
    ArrayOf(Box<TypeExpr>),
    /// Top type.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub ty: TypeExpr,
    pub optional: bool,
}

impl Field {
    pub fn required(ty: TypeExpr) -> Self {
        Field {
            ty,
            optional: false,
        }
    }

    pub fn optional(ty: TypeExpr) -> Self {
        Field { ty, optional: true }
    }
}

impl TypeExpr {
    pub fn record<I, K>(fields: I) -> TypeExpr
    where
        I: IntoIterator<Item = (K, Field)>,
        K: Into<String>,
    {
        TypeExpr::Record(fields.into_iter().map(|(k, f)| (k.into(), f)).collect())
    }

    pub fn function(params: Vec<TypeExpr>, returns: TypeExpr) -> TypeExpr {
        TypeExpr::Function {
            params,
            returns: Box::new(returns),
        }
    }

    pub fn array(item: TypeExpr) -> TypeExpr {
        TypeExpr::ArrayOf(Box::new(item))
    }

    pub fn depth(&self) -> usize {
        match self {
            TypeExpr::Record(fields) => {
                1 + fields.values().map(|f| f.ty.depth()).max().unwrap_or(0)
            }
            TypeExpr::Function { params, returns } => {
                1 + params.iter().map(TypeExpr::depth).chain([returns.depth()]).max().unwrap_or(0)
            }
            TypeExpr::ArrayOf(item) => 1 + item.depth(),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            TypeExpr::String => json!({"kind": "string"}),
            TypeExpr::Number => json!({"kind": "number"}),
            TypeExpr::Boolean => json!({"kind": "boolean"}),
            TypeExpr::Unknown => json!({"kind": "unknown"}),
            TypeExpr::ArrayOf(item) => json!({"kind": "array", "items": item.to_json()}),
            TypeExpr::Function { params, returns } => json!({
                "kind": "function",
                "params": params.iter().map(TypeExpr::to_json).collect::<Vec<_>>(),
                "returns": returns.to_json(),
            }),
            TypeExpr::Record(fields) => {
                let fields: Map<String, Value> = fields
                    .iter()
                    .map(|(k, f)| {
                        (
                            k.clone(),
                            json!({"type": f.ty.to_json(), "optional": f.optional}),
                        )
                    })
                    .collect();
                json!({"kind": "record", "fields": fields})
            }
        }
    }
}

/// Declared exports of one exposed module.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub exports: BTreeMap<String, TypeExpr>,
}

impl InterfaceDecl {
    pub fn to_json(&self) -> Value {
        let exports: Map<String, Value> = self
            .exports
            .iter()
            .map(|(k, t)| (k.clone(), t.to_json()))
            .collect();
        json!({ "exports": exports })
    }
}

pub fn parse_interface(text: &str) -> Result<InterfaceDecl> {
    let doc = json::parse_strict(text)?;
    let root = json::object(&doc, "")?;
    for key in root.keys() {
        if key != "exports" && key != "types" {
            return Err(Error::Syntax {
                path: json::join("", key),
                message: format!("unknown key `{key}`"),
            });
        }
    }
    let named = match json::optional(root, "types") {
        Some(v) => json::object(v, ".types")?.clone(),
        None => Map::new(),
    };
    let mut resolver = TypeParser {
        named: &named,
        stack: Vec::new(),
    };
    let exports_v = json::required(root, "exports", "")?;
    let mut exports = BTreeMap::new();
    for (name, node) in json::object(exports_v, ".exports")? {
        let ty = resolver.parse(node, &json::join(".exports", name))?;
        exports.insert(name.clone(), ty);
    }
    // named types that no export reaches still have to be well-formed
    for (name, node) in &named {
        resolver.stack.push(name.clone());
        resolver.parse(node, &json::join(".types", name))?;
        resolver.stack.pop();
    }
    Ok(InterfaceDecl { exports })
}

/// Parses one inline type node (no named types in scope).
pub fn parse_type(node: &Value, path: &str) -> Result<TypeExpr> {
    let named = Map::new();
    TypeParser {
        named: &named,
        stack: Vec::new(),
    }
    .parse(node, path)
}

struct TypeParser<'a> {
    named: &'a Map<String, Value>,
    stack: Vec<String>,
}

impl TypeParser<'_> {
    fn parse(&mut self, node: &Value, path: &str) -> Result<TypeExpr> {
        let obj = json::object(node, path)?;
        let kind = json::string(json::required(obj, "kind", path)?, &json::join(path, "kind"))?;
        let allowed: &[&str] = match kind {
            "string" | "number" | "boolean" | "unknown" => &["kind"],
            "record" => &["kind", "fields"],
            "function" => &["kind", "params", "returns"],
            "array" => &["kind", "items"],
            "ref" => &["kind", "name"],
            other => {
                return Err(Error::Syntax {
                    path: json::join(path, "kind"),
                    message: format!("unknown type kind `{other}`"),
                })
            }
        };
        if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Syntax {
                path: json::join(path, extra),
                message: format!("unexpected key `{extra}` in `{kind}` type"),
            });
        }
        Ok(match kind {
            "string" => TypeExpr::String,
            "number" => TypeExpr::Number,
            "boolean" => TypeExpr::Boolean,
            "unknown" => TypeExpr::Unknown,
            "array" => {
                let p = json::join(path, "items");
                TypeExpr::array(self.parse(json::required(obj, "items", path)?, &p)?)
            }
            "function" => {
                let pp = json::join(path, "params");
                let params = json::array(json::required(obj, "params", path)?, &pp)?
                    .iter()
                    .enumerate()
                    .map(|(i, p)| self.parse(p, &json::index(&pp, i)))
                    .collect::<Result<Vec<_>>>()?;
                let rp = json::join(path, "returns");
                let returns = self.parse(json::required(obj, "returns", path)?, &rp)?;
                TypeExpr::function(params, returns)
            }
            "record" => {
                let fp = json::join(path, "fields");
                let mut fields = BTreeMap::new();
                for (name, spec) in json::object(json::required(obj, "fields", path)?, &fp)? {
                    let p = json::join(&fp, name);
                    let spec_obj = json::object(spec, &p)?;
                    if let Some(extra) = spec_obj.keys().find(|k| *k != "type" && *k != "optional") {
                        return Err(Error::Syntax {
                            path: json::join(&p, extra),
                            message: format!("unexpected key `{extra}` in field"),
                        });
                    }
                    let ty = self.parse(json::required(spec_obj, "type", &p)?, &json::join(&p, "type"))?;
                    let optional = match json::optional(spec_obj, "optional") {
                        Some(v) => json::boolean(v, &json::join(&p, "optional"))?,
                        None => false,
                    };
                    fields.insert(name.clone(), Field { ty, optional });
                }
                TypeExpr::Record(fields)
            }
            "ref" => {
                let name = json::string(json::required(obj, "name", path)?, &json::join(path, "name"))?;
                if self.stack.iter().any(|n| n == name) {
                    return Err(Error::RecursiveType {
                        name: name.to_string(),
                    });
                }
                let target = self.named.get(name).ok_or_else(|| Error::Syntax {
                    path: json::join(path, "name"),
                    message: format!("unknown named type `{name}`"),
                })?;
                self.stack.push(name.to_string());
                let ty = self.parse(target, &json::join(".types", name));
                self.stack.pop();
                ty?
            }
            _ => unreachable!(),
        })
    }
}

/// Structural subtyping: can a value of `actual` be used where `expected`
/// is required?
pub fn is_subtype(actual: &TypeExpr, expected: &TypeExpr) -> bool {
    first_mismatch(actual, expected).is_none()
}

/// Path (e.g. `.returns`, `.params[0].fields.title`) to the first sub-term
/// where `actual` fails to be a subtype of `expected`, or `None` if it is.
///
/// Record rules: every required expected field must be present and required
/// in `actual`; an optional expected field that `actual` omits is accepted
/// only when it is typed `unknown` (an omitted field may hold anything).
/// Extra actual fields are always allowed.
pub fn first_mismatch(actual: &TypeExpr, expected: &TypeExpr) -> Option<String> {
    use TypeExpr as T;
    match (actual, expected) {
        (_, T::Unknown) => None,
        (T::String, T::String) | (T::Number, T::Number) | (T::Boolean, T::Boolean) => None,
        (T::ArrayOf(a), T::ArrayOf(e)) => first_mismatch(a, e).map(|p| format!(".items{p}")),
        (
            T::Function {
                params: ap,
                returns: ar,
            },
            T::Function {
                params: ep,
                returns: er,
            },
        ) => {
            if ap.len() > ep.len() {
                return Some(".params".to_string());
            }
            for (i, (a, e)) in ap.iter().zip(ep).enumerate() {
                if let Some(p) = first_mismatch(e, a) {
                    return Some(format!(".params[{i}]{p}"));
                }
            }
            first_mismatch(ar, er).map(|p| format!(".returns{p}"))
        }
        (T::Record(af), T::Record(ef)) => {
            for (name, want) in ef {
                match af.get(name) {
                    Some(have) => {
                        if have.optional && !want.optional {
                            return Some(format!(".fields.{name}"));
                        }
                        if let Some(p) = first_mismatch(&have.ty, &want.ty) {
                            return Some(format!(".fields.{name}{p}"));
                        }
                    }
                    None if want.optional && want.ty == T::Unknown => {}
                    None => return Some(format!(".fields.{name}")),
                }
            }
            None
        }
        _ => Some(String::new()),
    }
}

/// A consumer's declared expectation about one export of a remote expose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub consumer: String,
    pub remote: String,
    pub expose: String,
    pub export: String,
    pub expected: TypeExpr,
}

impl Expectation {
    pub fn target(&self) -> String {
        format!("{}/{}#{}", self.remote, self.expose, self.export)
    }
}

/// Splits `remote/./Header#Header` into (`remote`, `./Header`, `Header`).
pub fn parse_target(target: &str) -> Option<(&str, &str, &str)> {
    let (left, export) = target.rsplit_once('#')?;
    let (remote, expose) = left.split_once('/')?;
    if remote.is_empty() || expose.is_empty() || export.is_empty() {
        return None;
    }
    Some((remote, expose, export))
}

/// Checks each expectation against the provider's declared interface.
/// Diagnostics come out in expectation order. With `strict`, a provider
/// that declares no interface is an error instead of a warning.
pub fn check_compatibility(
    w: &Workspace,
    expectations: &[Expectation],
    strict: bool,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for exp in expectations {
        let at = format!("{}:{}", exp.consumer, exp.target());
        let Some(provider) = w.resolve_remote(&exp.consumer, &exp.remote) else {
            out.push(Diagnostic::error(
                "E-DANGLING-REMOTE",
                at,
                format!("`{}` declares no remote named `{}`", exp.consumer, exp.remote),
            ));
            continue;
        };
        let Some(module) = w
            .app(provider)
            .and_then(|m| m.exposes.iter().find(|e| e.id == exp.expose))
            .map(|e| e.module.clone())
        else {
            out.push(Diagnostic::error(
                "E-DANGLING-REMOTE",
                at,
                format!("`{provider}` exposes no `{}`", exp.expose),
            ));
            continue;
        };
        let Some(decl) = w.interface(provider, &module) else {
            let msg = format!("`{provider}` declares no interface for `{}`", exp.expose);
            out.push(if strict {
                Diagnostic::error("E-NO-INTERFACE", at, msg)
            } else {
                Diagnostic::warning("E-NO-INTERFACE", at, msg)
            });
            continue;
        };
        let Some(actual) = decl.exports.get(&exp.export) else {
            out.push(Diagnostic::error(
                "E-MISSING-EXPORT",
                at,
                format!("`{provider}` `{}` has no export `{}`", exp.expose, exp.export),
            ));
            continue;
        };
        if let Some(path) = first_mismatch(actual, &exp.expected) {
            let shown = if path.is_empty() { "." } else { path.as_str() };
            out.push(Diagnostic::error(
                "E-TYPE-MISMATCH",
                format!("{at}{path}"),
                format!("declared type is not compatible with the expected type at `{shown}`"),
            ));
        }
    }
    out
}
