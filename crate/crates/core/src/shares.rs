//! Shared-dependency negotiation: one version per package per scope.
//!
//! The highest provided version wins. Each participant whose range rejects
//! it is then classified by the package's flags: strict singletons conflict
//! (error), loose singletons bind anyway (warning), and non-singletons fall
//! back to their own copy, which counts as duplicated bytes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::diag::Severity;
use crate::manifest::{SharedSpec, Workspace};
use crate::semver::{Version, VersionRange};

pub const DEFAULT_SCOPE: &str = "default";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareScope {
    pub scope_name: String,
    /// Application whose copy wins version ties.
    pub host: String,
    pub entries: Vec<(String, SharedSpec)>,
}

impl ShareScope {
    pub fn packages(&self) -> BTreeMap<&str, Vec<&(String, SharedSpec)>> {
        let mut out: BTreeMap<&str, Vec<_>> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.1.package.as_str()).or_default().push(e);
        }
        out
    }
}

pub fn build_share_scope(w: &Workspace) -> ShareScope {
    let entries = w
        .apps()
        .iter()
        .flat_map(|a| a.manifest.shared.iter().map(|s| (a.name().to_string(), s.clone())))
        .collect();
    ShareScope {
        scope_name: DEFAULT_SCOPE.to_string(),
        host: w.host().name.clone(),
        entries,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub version: Version,
    pub provider: String,
    #[serde(skip)]
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Fallback {
    pub application: String,
    pub package: String,
    pub own_version: Version,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShareConflict {
    pub code: String,
    pub package: String,
    pub application: String,
    pub required_range: VersionRange,
    /// `None` when nobody provides the package.
    pub chosen_version: Option<Version>,
    pub severity: Severity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ShareResolution {
    pub bindings: BTreeMap<String, Binding>,
    pub fallbacks: Vec<Fallback>,
    pub conflicts: Vec<ShareConflict>,
    pub duplicate_bytes: u64,
}

impl ShareResolution {
    pub fn has_errors(&self) -> bool {
        self.conflicts.iter().any(|c| c.severity == Severity::Error)
    }

    pub fn fallback(&self, app: &str, package: &str) -> Option<&Fallback> {
        self.fallbacks
            .iter()
            .find(|f| f.application == app && f.package == package)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("resolution JSON is always serializable")
    }
}

pub fn resolve_shares(scope: &ShareScope) -> ShareResolution {
    let mut res = ShareResolution::default();
    for (package, entries) in scope.packages() {
        // highest version; ties go to the host, then to the smaller name
        let winner = entries
            .iter()
            .filter_map(|(app, spec)| spec.provided_version.map(|v| (v, app, spec)))
            .min_by(|(va, aa, _), (vb, ab, _)| {
                vb.cmp(va)
                    .then_with(|| (**ab == scope.host).cmp(&(**aa == scope.host)))
                    .then_with(|| aa.cmp(ab))
            });

        let Some((chosen, provider, provider_spec)) = winner else {
            for (app, spec) in &entries {
                res.conflicts.push(ShareConflict {
                    code: "E-NO-PROVIDER".to_string(),
                    package: package.to_string(),
                    application: app.clone(),
                    required_range: spec.required_range.clone(),
                    chosen_version: None,
                    severity: Severity::Error,
                });
            }
            continue;
        };
        res.bindings.insert(
            package.to_string(),
            Binding {
                version: chosen,
                provider: provider.clone(),
                size_bytes: provider_spec.size_bytes,
            },
        );

        let singleton = entries.iter().any(|(_, s)| s.singleton);
        for (app, spec) in &entries {
            // the provider's own copy is the shared copy
            if app == provider || spec.required_range.satisfies(chosen) {
                continue;
            }
            let conflict = |code: &str, severity| ShareConflict {
                code: code.to_string(),
                package: package.to_string(),
                application: app.clone(),
                required_range: spec.required_range.clone(),
                chosen_version: Some(chosen),
                severity,
            };
            if singleton {
                if spec.strict_version {
                    res.conflicts.push(conflict("E-SINGLETON-MISMATCH", Severity::Error));
                } else {
                    res.conflicts.push(conflict("W-SINGLETON-MISMATCH", Severity::Warning));
                }
            } else if let Some(own) = spec.provided_version {
                res.duplicate_bytes += spec.size_bytes;
                res.fallbacks.push(Fallback {
                    application: app.clone(),
                    package: package.to_string(),
                    own_version: own,
                    size_bytes: spec.size_bytes,
                });
            } else {
                res.conflicts.push(conflict("E-NO-PROVIDER", Severity::Error));
            }
        }
    }
    res.conflicts
        .sort_by(|a, b| (&a.package, &a.application).cmp(&(&b.package, &b.application)));
    res.fallbacks
        .sort_by(|a, b| (&a.package, &a.application).cmp(&(&b.package, &b.application)));
    res
}
