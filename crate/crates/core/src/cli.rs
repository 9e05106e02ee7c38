//! The `fedplan` command line.
//!
//! Exit codes: 0 when nothing at error severity was found, 1 when the
//! federation has errors (validation, share conflicts, type mismatches,
//! unplannable graphs), 2 for usage, IO, and network-model problems.
//!
//! With `--format json` stdout carries exactly one JSON document: the
//! command's result on success, `{"diagnostics": [...]}` on failure.
//! Warnings of earlier stages go to stderr in every format.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::diag::Diagnostic;
use crate::error::{Error, Result};
use crate::graph::{self, ModuleGraph, NodeKind};
use crate::interfaces;
use crate::manifest::{self, Workspace};
use crate::planner::{self, LoadPlan, LoadStrategy, PlanOptions};
use crate::shares::{self, ShareResolution};
use crate::simulator::{self, NetworkModel, SimReport};
use crate::trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fedplan", version, about = "Analyze and simulate module federations")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Suppress warnings and table summaries.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    /// Graphviz, `graph` only.
    Dot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the host manifest and every remote it reaches.
    Validate { host: PathBuf },
    /// Print the module graph.
    Graph { host: PathBuf },
    /// Negotiate shared dependency versions.
    ResolveShared { host: PathBuf },
    /// Check declared expectations against provider interfaces.
    CheckTypes {
        host: PathBuf,
        /// Treat a provider without an interface file as an error.
        #[arg(long)]
        strict_types: bool,
    },
    /// Emit the fetch plan of one load strategy.
    Plan {
        host: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: LoadStrategy,
        #[command(flatten)]
        opts: PlanArgs,
    },
    /// Simulate one load strategy.
    Simulate {
        host: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: LoadStrategy,
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        opts: PlanArgs,
    },
    /// Simulate all four strategies on the same network.
    Compare {
        host: PathBuf,
        #[arg(long)]
        net: PathBuf,
        #[command(flatten)]
        opts: PlanArgs,
    },
    /// Simulate one strategy and export its spans as JSON lines.
    Trace {
        host: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: LoadStrategy,
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: PlanArgs,
    },
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Bytes per remote manifest in prefetch plans.
    #[arg(long, default_value_t = PlanOptions::default().manifest_bytes)]
    manifest_bytes: u64,
}

impl PlanArgs {
    fn options(&self) -> PlanOptions {
        PlanOptions {
            manifest_bytes: self.manifest_bytes,
        }
    }
}

fn parse_strategy(s: &str) -> std::result::Result<LoadStrategy, String> {
    s.parse()
}

/// Runs the tool against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let color = stderr.is_terminal() && std::env::var("FEDPLAN_COLOR").map_or(true, |v| v != "0");
    run_with(args, &mut stdout.lock(), &mut stderr.lock(), color)
}

/// Runs the tool with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let mut ctx = Ctx {
        format: cli.format,
        quiet: cli.quiet,
        color,
        out,
        err,
    };
    if cli.format == Format::Dot && !matches!(cli.command, Command::Graph { .. }) {
        let _ = writeln!(ctx.err, "error: --format dot is only supported by `graph`");
        return EXIT_USAGE;
    }
    let code = match ctx.dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = if e.is_environmental() { EXIT_USAGE } else { EXIT_FINDINGS };
            ctx.fail(&[e.to_diagnostic()]);
            code
        }
    };
    let _ = ctx.out.flush();
    code
}

struct Ctx<'a> {
    format: Format,
    quiet: bool,
    color: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Stops a pipeline that produced error diagnostics.
struct Halt(Vec<Diagnostic>);

impl Ctx<'_> {
    fn json(&self) -> bool {
        self.format == Format::Json
    }

    fn emit_json(&mut self, v: &Value) {
        let text = serde_json::to_string_pretty(v).expect("values are always serializable");
        let _ = writeln!(self.out, "{text}");
    }

    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", s.as_ref());
    }

    fn diag_to_stderr(&mut self, d: &Diagnostic) {
        if self.quiet && !d.is_error() {
            return;
        }
        let code = if self.color {
            let c = if d.is_error() { "31" } else { "33" };
            format!("\x1b[{c}m{}\x1b[0m", d.code)
        } else {
            d.code.clone()
        };
        let at = if d.path.is_empty() {
            String::new()
        } else {
            format!(" {}:", d.path)
        };
        let _ = writeln!(self.err, "{} {code}{at} {}", d.severity, d.message);
    }

    /// Reports a failed run: to stdout as one document in json mode.
    fn fail(&mut self, diags: &[Diagnostic]) {
        if self.json() {
            self.emit_json(&json!({ "diagnostics": diags }));
        } else {
            for d in diags {
                self.diag_to_stderr(d);
            }
        }
    }

    fn warn(&mut self, diags: &[Diagnostic]) {
        for d in diags.iter().filter(|d| !d.is_error()) {
            self.diag_to_stderr(d);
        }
    }

    fn dispatch(&mut self, cmd: &Command) -> Result<i32> {
        match cmd {
            Command::Validate { host } => self.validate(host),
            Command::Graph { host } => self.halting(|c| c.graph(host)),
            Command::ResolveShared { host } => self.halting(|c| c.resolve_shared(host)),
            Command::CheckTypes { host, strict_types } => {
                self.halting(|c| c.check_types(host, *strict_types))
            }
            Command::Plan { host, strategy, opts } => {
                self.halting(|c| c.plan(host, *strategy, opts.options()))
            }
            Command::Simulate {
                host,
                strategy,
                net,
                opts,
            } => {
                let net = load_net(net)?;
                self.halting(|c| c.simulate(host, *strategy, &net, opts.options()))
            }
            Command::Compare { host, net, opts } => {
                let net = load_net(net)?;
                self.halting(|c| c.compare(host, &net, opts.options()))
            }
            Command::Trace {
                host,
                strategy,
                net,
                out,
                opts,
            } => {
                let net = load_net(net)?;
                self.halting(|c| c.trace(host, *strategy, &net, out, opts.options()))
            }
        }
    }

    fn halting(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<std::result::Result<i32, Halt>>,
    ) -> Result<i32> {
        match f(self)? {
            Ok(code) => Ok(code),
            Err(Halt(diags)) => {
                self.fail(&diags);
                Ok(EXIT_FINDINGS)
            }
        }
    }

    fn validate(&mut self, host: &Path) -> Result<i32> {
        let w = manifest::load_workspace(host)?;
        let diags = manifest::validate_workspace(&w);
        let errors = diags.iter().filter(|d| d.is_error()).count();
        if self.json() {
            self.emit_json(&json!({ "diagnostics": diags }));
        } else {
            for d in &diags {
                self.diag_to_stderr(d);
            }
            if !self.quiet {
                let modules: usize = w.apps().iter().map(|a| a.manifest.modules.len()).sum();
                self.line(format!(
                    "{} application(s), {modules} module(s): {errors} error(s), {} warning(s)",
                    w.apps().len(),
                    diags.len() - errors
                ));
            }
        }
        Ok(if errors > 0 { EXIT_FINDINGS } else { EXIT_OK })
    }

    /// Loads and validates; warnings go to stderr.
    fn workspace(&mut self, host: &Path) -> Result<std::result::Result<Workspace, Halt>> {
        let w = manifest::load_workspace(host)?;
        let diags = manifest::validate_workspace(&w);
        if diags.iter().any(Diagnostic::is_error) {
            return Ok(Err(Halt(diags.into_iter().filter(Diagnostic::is_error).collect())));
        }
        self.warn(&diags);
        Ok(Ok(w))
    }

    fn resolved(
        &mut self,
        host: &Path,
    ) -> Result<std::result::Result<(Workspace, ShareResolution, ModuleGraph), Halt>> {
        let w = match self.workspace(host)? {
            Ok(w) => w,
            Err(h) => return Ok(Err(h)),
        };
        let res = shares::resolve_shares(&shares::build_share_scope(&w));
        let conflicts: Vec<Diagnostic> = res.conflicts.iter().map(conflict_diagnostic).collect();
        if res.has_errors() {
            return Ok(Err(Halt(conflicts.into_iter().filter(Diagnostic::is_error).collect())));
        }
        self.warn(&conflicts);
        let g = match graph::build_graph(&w, &res) {
            Ok(g) => g,
            Err(e) if !e.is_environmental() => return Ok(Err(Halt(vec![e.to_diagnostic()]))),
            Err(e) => return Err(e),
        };
        self.warn(g.warnings());
        Ok(Ok((w, res, g)))
    }

    fn graph(&mut self, host: &Path) -> Result<std::result::Result<i32, Halt>> {
        let (_, _, g) = match self.resolved(host)? {
            Ok(t) => t,
            Err(h) => return Ok(Err(h)),
        };
        match self.format {
            Format::Json => self.emit_json(&graph::to_json(&g)),
            Format::Dot => {
                let _ = self.out.write_all(graph::export_dot(&g).as_bytes());
            }
            Format::Table => {
                for n in g.nodes() {
                    let kind = match n.kind {
                        NodeKind::Entry => "entry",
                        NodeKind::Exposed => "exposed",
                        NodeKind::Internal => "internal",
                        NodeKind::SharedPkg => "shared",
                    };
                    self.line(format!("{:<40} {kind:<9} {:>9}", n.key.to_string(), n.size_bytes));
                }
                for e in g.edges() {
                    let mode = match e.mode {
                        graph::ImportMode::Static => "static",
                        graph::ImportMode::Dynamic => "dynamic",
                    };
                    self.line(format!("{} -> {} ({mode})", e.from, e.to));
                }
                if !self.quiet {
                    self.line(format!("waterfall depth: {}", graph::waterfall_depth(&g)));
                }
            }
        }
        Ok(Ok(EXIT_OK))
    }

    fn resolve_shared(&mut self, host: &Path) -> Result<std::result::Result<i32, Halt>> {
        let w = match self.workspace(host)? {
            Ok(w) => w,
            Err(h) => return Ok(Err(h)),
        };
        let res = shares::resolve_shares(&shares::build_share_scope(&w));
        let code = if res.has_errors() { EXIT_FINDINGS } else { EXIT_OK };
        if self.json() {
            let v = serde_json::to_value(&res).expect("resolution serializes");
            self.emit_json(&v);
            return Ok(Ok(code));
        }
        for (pkg, b) in &res.bindings {
            self.line(format!("{pkg:<24} {:<12} {}", b.version.to_string(), b.provider));
        }
        for f in &res.fallbacks {
            self.line(format!(
                "{:<24} {:<12} {} (own copy)",
                f.package,
                f.own_version.to_string(),
                f.application
            ));
        }
        let conflicts: Vec<Diagnostic> = res.conflicts.iter().map(conflict_diagnostic).collect();
        for d in &conflicts {
            self.diag_to_stderr(d);
        }
        if !self.quiet {
            self.line(format!("duplicate bytes: {}", res.duplicate_bytes));
        }
        Ok(Ok(code))
    }

    fn check_types(&mut self, host: &Path, strict: bool) -> Result<std::result::Result<i32, Halt>> {
        let w = match self.workspace(host)? {
            Ok(w) => w,
            Err(h) => return Ok(Err(h)),
        };
        let expectations = w.expectations();
        let diags = interfaces::check_compatibility(&w, &expectations, strict);
        let errors = diags.iter().filter(|d| d.is_error()).count();
        if self.json() {
            self.emit_json(&json!({ "diagnostics": diags }));
        } else {
            for d in &diags {
                self.diag_to_stderr(d);
            }
            if !self.quiet {
                self.line(format!(
                    "{} expectation(s) checked: {errors} error(s)",
                    expectations.len()
                ));
            }
        }
        Ok(Ok(if errors > 0 { EXIT_FINDINGS } else { EXIT_OK }))
    }

    fn planned(
        &mut self,
        host: &Path,
        strategy: LoadStrategy,
        opts: PlanOptions,
    ) -> Result<std::result::Result<LoadPlan, Halt>> {
        let (_, res, g) = match self.resolved(host)? {
            Ok(t) => t,
            Err(h) => return Ok(Err(h)),
        };
        match planner::plan_with(&g, &res, strategy, &opts) {
            Ok(p) => Ok(Ok(p)),
            Err(e) => Ok(Err(Halt(vec![e.to_diagnostic()]))),
        }
    }

    fn plan(
        &mut self,
        host: &Path,
        strategy: LoadStrategy,
        opts: PlanOptions,
    ) -> Result<std::result::Result<i32, Halt>> {
        let p = match self.planned(host, strategy, opts)? {
            Ok(p) => p,
            Err(h) => return Ok(Err(h)),
        };
        if self.json() {
            self.emit_json(&p.to_json());
            return Ok(Ok(EXIT_OK));
        }
        for r in &p.requests {
            let deps: Vec<String> = r.depends_on.iter().map(|d| format!("#{d}")).collect();
            let payload: Vec<String> = r.payload.iter().map(|e| e.item.to_string()).collect();
            self.line(format!(
                "#{:<3} {:>9} B  after [{}]  {}",
                r.id,
                r.size_bytes,
                deps.join(" "),
                payload.join(", ")
            ));
        }
        if !self.quiet {
            self.line(format!(
                "{}: {} request(s), {} byte(s), chain {}",
                p.strategy,
                p.requests.len(),
                planner::required_bytes(&p),
                p.longest_chain()
            ));
        }
        Ok(Ok(EXIT_OK))
    }

    fn simulate(
        &mut self,
        host: &Path,
        strategy: LoadStrategy,
        net: &NetworkModel,
        opts: PlanOptions,
    ) -> Result<std::result::Result<i32, Halt>> {
        let p = match self.planned(host, strategy, opts)? {
            Ok(p) => p,
            Err(h) => return Ok(Err(h)),
        };
        let report = match simulator::simulate(&p, net) {
            Ok(r) => r,
            Err(e) => return Ok(Err(Halt(vec![e.to_diagnostic()]))),
        };
        if self.json() {
            self.emit_json(&serde_json::to_value(&report).expect("report serializes"));
            return Ok(Ok(EXIT_OK));
        }
        self.line(format!(
            "{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9}",
            "req", "eligible", "start", "headers", "done", "parsed", "bytes"
        ));
        for t in &report.per_request_timeline {
            self.line(format!(
                "{:>4} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>9}",
                t.request_id, t.eligible_ms, t.start_ms, t.headers_ms, t.done_ms, t.parse_done_ms, t.bytes
            ));
        }
        if !self.quiet {
            self.line(summary(&report));
        }
        Ok(Ok(EXIT_OK))
    }

    fn compare(
        &mut self,
        host: &Path,
        net: &NetworkModel,
        opts: PlanOptions,
    ) -> Result<std::result::Result<i32, Halt>> {
        let (_, res, g) = match self.resolved(host)? {
            Ok(t) => t,
            Err(h) => return Ok(Err(h)),
        };
        let reports =
            match simulator::compare_strategies_with(&g, &res, net, &LoadStrategy::ALL, &opts) {
                Ok(r) => r,
                Err(e) => return Ok(Err(Halt(vec![e.to_diagnostic()]))),
            };
        if self.json() {
            let rows: Vec<Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "strategy": r.strategy,
                        "timeToFirstRenderMs": r.time_to_first_render_ms,
                        "timeToInteractiveMs": r.time_to_interactive_ms,
                        "totalBytes": r.total_bytes,
                        "requestCount": r.request_count,
                        "waterfallRounds": r.waterfall_rounds,
                        "maxObservedConcurrency": r.max_observed_concurrency,
                    })
                })
                .collect();
            let ranking: Vec<LoadStrategy> =
                simulator::rank(&reports).into_iter().map(|r| r.strategy).collect();
            self.emit_json(&json!({ "strategies": rows, "ranking": ranking }));
            return Ok(Ok(EXIT_OK));
        }
        self.line(format!(
            "{:<9} {:>10} {:>10} {:>10} {:>8} {:>7}",
            "strategy", "ttfr_ms", "tti_ms", "bytes", "requests", "rounds"
        ));
        for r in &reports {
            self.line(format!(
                "{:<9} {:>10.1} {:>10.1} {:>10} {:>8} {:>7}",
                r.strategy.as_str(),
                r.time_to_first_render_ms,
                r.time_to_interactive_ms,
                r.total_bytes,
                r.request_count,
                r.waterfall_rounds
            ));
        }
        Ok(Ok(EXIT_OK))
    }

    fn trace(
        &mut self,
        host: &Path,
        strategy: LoadStrategy,
        net: &NetworkModel,
        out: &Path,
        opts: PlanOptions,
    ) -> Result<std::result::Result<i32, Halt>> {
        let p = match self.planned(host, strategy, opts)? {
            Ok(p) => p,
            Err(h) => return Ok(Err(h)),
        };
        let report = match simulator::simulate(&p, net) {
            Ok(r) => r,
            Err(e) => return Ok(Err(Halt(vec![e.to_diagnostic()]))),
        };
        let log = trace::from_run(&p, &report);
        let problems = trace::validate_trace(&log);
        if !problems.is_empty() {
            return Ok(Err(Halt(problems)));
        }
        log.write_jsonl(out)?;
        if self.json() {
            self.emit_json(&json!({
                "traceId": log.trace_id(),
                "spanCount": log.len(),
                "out": out.display().to_string(),
            }));
        } else if !self.quiet {
            self.line(format!("wrote {} span(s) to {}", log.len(), out.display()));
        }
        Ok(Ok(EXIT_OK))
    }
}

fn load_net(path: &Path) -> Result<NetworkModel> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    NetworkModel::from_json(&text).map_err(|e| match e {
        Error::BadNetwork(msg) => Error::BadNetwork(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn conflict_diagnostic(c: &shares::ShareConflict) -> Diagnostic {
    let chosen = c
        .chosen_version
        .map_or_else(|| "no version is provided".to_string(), |v| format!("negotiated {v}"));
    Diagnostic {
        code: c.code.clone(),
        severity: c.severity,
        path: format!("{}:shared.{}", c.application, c.package),
        message: format!("requires `{}` but {chosen}", c.required_range.as_str()),
    }
}

fn summary(r: &SimReport) -> String {
    format!(
        "{}: first render {:.1} ms, interactive {:.1} ms, {} byte(s) in {} request(s), {} round(s), peak concurrency {}",
        r.strategy,
        r.time_to_first_render_ms,
        r.time_to_interactive_ms,
        r.total_bytes,
        r.request_count,
        r.waterfall_rounds,
        r.max_observed_concurrency
    )
}
