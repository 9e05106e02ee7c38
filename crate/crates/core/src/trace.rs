//! Tracing spans for simulated runs, exported as JSON lines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::planner::LoadPlan;
use crate::simulator::SimReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Int(i64),
    Str(String),
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<i64> for AttrValue {
    fn from(n: i64) -> Self {
        AttrValue::Int(n)
    }
}

impl From<u64> for AttrValue {
    fn from(n: u64) -> Self {
        AttrValue::Int(i64::try_from(n).unwrap_or(i64::MAX))
    }
}

impl From<usize> for AttrValue {
    fn from(n: usize) -> Self {
        AttrValue::from(n as u64)
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Int(n) => write!(f, "{n}"),
            AttrValue::Str(s) => f.write_str(s),
        }
    }
}

pub type Attributes = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Span {
    pub trace_id: String,
    pub span_id: String,
    pub parent_span_id: Option<String>,
    pub name: String,
    pub start_ms: f64,
    pub end_ms: f64,
    #[serde(default)]
    pub attributes: Attributes,
}

impl Span {
    pub fn attr(&self, key: &str) -> Option<&AttrValue> {
        self.attributes.get(key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    trace_id: String,
    spans: Vec<Span>,
}

impl TraceLog {
    pub fn new(trace_id: impl Into<String>) -> Self {
        TraceLog {
            trace_id: trace_id.into(),
            spans: Vec::new(),
        }
    }

    /// Wraps spans from elsewhere without checking them; see [`validate_trace`].
    pub fn from_spans(trace_id: impl Into<String>, spans: Vec<Span>) -> Self {
        TraceLog {
            trace_id: trace_id.into(),
            spans,
        }
    }

    pub fn trace_id(&self) -> &str {
        &self.trace_id
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn span(&self, id: &str) -> Option<&Span> {
        self.spans.iter().find(|s| s.span_id == id)
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Span> + 'a {
        self.spans
            .iter()
            .filter(move |s| s.parent_span_id.as_deref() == Some(id))
    }

    pub fn record(
        &mut self,
        name: &str,
        parent: Option<&str>,
        start_ms: f64,
        end_ms: f64,
        attributes: Attributes,
    ) -> Result<String> {
        if !(start_ms.is_finite() && end_ms.is_finite()) || end_ms < start_ms {
            return Err(Error::BadInterval {
                start: start_ms,
                end: end_ms,
                reason: "end must be finite and not before start".to_string(),
            });
        }
        if let Some(pid) = parent {
            let p = self.span(pid).ok_or_else(|| Error::NoParent {
                parent: pid.to_string(),
            })?;
            if start_ms < p.start_ms || end_ms > p.end_ms {
                return Err(Error::BadInterval {
                    start: start_ms,
                    end: end_ms,
                    reason: format!(
                        "escapes parent {} [{}, {}]",
                        p.span_id, p.start_ms, p.end_ms
                    ),
                });
            }
        }
        let id = format!("{:016x}", self.spans.len() + 1);
        self.spans.push(Span {
            trace_id: self.trace_id.clone(),
            span_id: id.clone(),
            parent_span_id: parent.map(str::to_string),
            name: name.to_string(),
            start_ms,
            end_ms,
            attributes,
        });
        Ok(id)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.spans {
            out.push_str(&serde_json::to_string(s).expect("spans are always serializable"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Parses a JSON-lines export. Blank lines are skipped; the trace id is
/// taken from the first span.
pub fn parse_jsonl(text: &str) -> Result<TraceLog> {
    let mut spans = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let span: Span = serde_json::from_str(line).map_err(|e| Error::Syntax {
            path: format!("line {}", n + 1),
            message: e.to_string(),
        })?;
        spans.push(span);
    }
    let id = spans.first().map(|s| s.trace_id.clone()).unwrap_or_default();
    Ok(TraceLog::from_spans(id, spans))
}

fn attrs<const N: usize>(pairs: [(&str, AttrValue); N]) -> Attributes {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Trace id derived from the report, so identical runs export identical ids.
pub fn trace_id_for(report: &SimReport) -> String {
    let digest = Sha256::digest(report.to_json_string().as_bytes());
    hex::encode(&digest[..16])
}

pub fn from_sim(report: &SimReport) -> TraceLog {
    build(report, None)
}

/// Like [`from_sim`], with payload and module attributes taken from the plan
/// the report was simulated from.
pub fn from_run(plan: &LoadPlan, report: &SimReport) -> TraceLog {
    build(report, Some(plan))
}

fn build(report: &SimReport, plan: Option<&LoadPlan>) -> TraceLog {
    let mut log = TraceLog::new(trace_id_for(report));
    let root = log
        .record(
            "load.simulate",
            None,
            0.0,
            report.time_to_interactive_ms,
            attrs([
                ("strategy", report.strategy.as_str().into()),
                ("requestCount", report.request_count.into()),
                ("totalBytes", report.total_bytes.into()),
            ]),
        )
        .expect("root interval comes from the report");
    for t in &report.per_request_timeline {
        let mut fetch = attrs([
            ("requestId", t.request_id.into()),
            ("bytes", t.bytes.into()),
            ("headersMs", format!("{}", t.headers_ms).into()),
        ]);
        let mut parse = attrs([("requestId", t.request_id.into())]);
        if let Some(req) = plan.and_then(|p| p.requests.get(t.request_id)) {
            let items: Vec<String> = req.payload.iter().map(|e| e.item.to_string()).collect();
            fetch.insert("payload".into(), items.join(",").into());
            parse.insert("module".into(), items.join(",").into());
        }
        log.record("fetch.request", Some(&root), t.start_ms, t.done_ms, fetch)
            .expect("fetch interval lies within the run");
        // parse spans hang off the root: a fetch span ends where parsing starts
        log.record("parse.module", Some(&root), t.done_ms, t.parse_done_ms, parse)
            .expect("parse interval lies within the run");
    }
    log
}

pub fn validate_trace(log: &TraceLog) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut by_id: HashMap<&str, &Span> = HashMap::new();
    let mut dup = BTreeSet::new();
    for s in &log.spans {
        if by_id.insert(s.span_id.as_str(), s).is_some() {
            dup.insert(s.span_id.as_str());
        }
    }
    for id in dup {
        out.push(Diagnostic::error("E-DUP-SPAN", id, format!("span id {id} is used more than once")));
    }

    let roots: Vec<&Span> = log.spans.iter().filter(|s| s.parent_span_id.is_none()).collect();
    if roots.len() > 1 {
        let ids: Vec<&str> = roots.iter().map(|s| s.span_id.as_str()).collect();
        out.push(Diagnostic::error(
            "E-MULTIROOT",
            "",
            format!("{} spans have no parent: {}", roots.len(), ids.join(", ")),
        ));
    } else if roots.is_empty() && !log.spans.is_empty() {
        out.push(Diagnostic::error("E-NO-ROOT", "", "every span has a parent"));
    }

    for s in &log.spans {
        let id = s.span_id.as_str();
        if s.trace_id != log.trace_id {
            out.push(Diagnostic::error(
                "E-TRACE-ID",
                id,
                format!("span belongs to trace {} instead of {}", s.trace_id, log.trace_id),
            ));
        }
        if !(s.start_ms.is_finite() && s.end_ms.is_finite()) || s.end_ms < s.start_ms {
            out.push(Diagnostic::error(
                "E-BAD-INTERVAL",
                id,
                format!("interval [{}, {}] is invalid", s.start_ms, s.end_ms),
            ));
        }
        let Some(pid) = &s.parent_span_id else { continue };
        match by_id.get(pid.as_str()) {
            None => out.push(Diagnostic::error("E-NO-PARENT", id, format!("parent span {pid} does not exist"))),
            Some(p) if s.start_ms < p.start_ms || s.end_ms > p.end_ms => out.push(Diagnostic::error(
                "E-BAD-INTERVAL",
                id,
                format!(
                    "[{}, {}] escapes parent {pid} [{}, {}]",
                    s.start_ms, s.end_ms, p.start_ms, p.end_ms
                ),
            )),
            Some(_) => {}
        }
    }
    out
}
