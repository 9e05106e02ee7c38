use std::path::PathBuf;

use thiserror::Error;

use crate::diag::{Diagnostic, Severity};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolchain can raise. Each variant maps onto a stable
/// diagnostic code via [`Error::code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: malformed document: {message}")]
    Syntax { path: String, message: String },

    #[error("required field `{path}` is missing")]
    MissingField { path: String },

    #[error("invalid version `{text}`: {reason}")]
    BadVersion { text: String, reason: String },

    #[error("invalid version range `{text}`: {reason}")]
    BadRange { text: String, reason: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("remote manifests form a cycle: {}", cycle.join(" -> "))]
    RemoteCycle { cycle: Vec<String> },

    #[error("application `{name}` is declared more than once")]
    DupApp { name: String },

    #[error("`{app}` references remote `{remote}` which is not part of the workspace")]
    MissingRemote { app: String, remote: String },

    #[error("host application `{name}` declares no entry module")]
    NoEntry { name: String },

    #[error("`{app}` imports `{remote}/{expose}` which does not resolve to an exposed module")]
    DanglingRemote {
        app: String,
        remote: String,
        expose: String,
    },

    #[error("`{app}` imports undeclared local module `{import}`")]
    DanglingImport { app: String, import: String },

    #[error("invalid module graph: {0}")]
    BadGraph(String),

    #[error("`{app}` imports shared package `{package}` absent from the share resolution")]
    UnresolvedShared { app: String, package: String },

    #[error("modules of different applications import each other in a cycle: {}", members.join(", "))]
    XAppCycle { members: Vec<String> },

    #[error("named type `{name}` refers to itself")]
    RecursiveType { name: String },

    #[error("graph is cyclic after contraction: {}", members.join(", "))]
    Cyclic { members: Vec<String> },

    #[error("cannot plan `{key}`: {reason}")]
    Unplannable { key: String, reason: String },

    #[error("simulation stalled with {pending} request(s) waiting on unfinished dependencies")]
    Deadlock { pending: usize },

    #[error("span interval [{start}, {end}] is invalid: {reason}")]
    BadInterval { start: f64, end: f64, reason: String },

    #[error("parent span {parent} does not exist")]
    NoParent { parent: String },

    #[error("invalid network model: {0}")]
    BadNetwork(String),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "E-SYNTAX",
            Error::MissingField { .. } => "E-MISSING-FIELD",
            Error::BadVersion { .. } => "E-BAD-VERSION",
            Error::BadRange { .. } => "E-BAD-RANGE",
            Error::Io { .. } => "E-IO",
            Error::RemoteCycle { .. } => "E-REMOTE-CYCLE",
            Error::DupApp { .. } => "E-DUP-APP",
            Error::NoEntry { .. } => "E-NO-ENTRY",
            Error::MissingRemote { .. } => "E-MISSING-REMOTE",
            Error::DanglingRemote { .. } => "E-DANGLING-REMOTE",
            Error::DanglingImport { .. } => "E-DANGLING-IMPORT",
            Error::BadGraph(_) => "E-BAD-GRAPH",
            Error::UnresolvedShared { .. } => "E-UNRESOLVED-SHARED",
            Error::XAppCycle { .. } => "E-XAPP-CYCLE",
            Error::RecursiveType { .. } => "E-RECURSIVE-TYPE",
            Error::Cyclic { .. } => "E-CYCLIC",
            Error::Unplannable { .. } => "E-UNPLANNABLE",
            Error::Deadlock { .. } => "E-DEADLOCK",
            Error::BadInterval { .. } => "E-BAD-INTERVAL",
            Error::NoParent { .. } => "E-NO-PARENT",
            Error::BadNetwork(_) => "E-BAD-NETWORK",
            Error::InFile { source, .. } => source.code(),
        }
    }

    /// Strips any file-context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    /// IO and configuration failures, as opposed to findings about the
    /// federation itself.
    pub fn is_environmental(&self) -> bool {
        matches!(self.root(), Error::Io { .. } | Error::BadNetwork(_))
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        match self {
            e @ Error::InFile { .. } => e,
            e @ Error::Io { .. } => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let path = match self {
            Error::InFile { path, .. } | Error::Io { path, .. } => path.display().to_string(),
            Error::Syntax { path, .. } | Error::MissingField { path } => path.clone(),
            _ => String::new(),
        };
        Diagnostic {
            code: self.code().to_string(),
            severity: Severity::Error,
            path,
            message: self.to_string(),
        }
    }
}
