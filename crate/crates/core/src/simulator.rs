//! Deterministic discrete-event replay of a [`LoadPlan`].
//!
//! A request becomes eligible once every dependency has been parsed (plus
//! the interaction delay after dynamic-only dependencies). Eligible
//! requests wait FIFO by `(eligible time, id)` for one of `max_concurrent`
//! slots. A started request spends `rtt_ms` (plus `server_compose_ms` for
//! SSR) before its first byte, then transfers under processor sharing: the
//! active transfers split `bandwidth_bytes_per_ms` equally, and rates are
//! recomputed at every start and finish. Parsing follows the transfer and
//! does not hold a slot.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ModuleGraph;
use crate::planner::{self, LoadPlan, LoadStrategy, PlanOptions};
use crate::shares::ShareResolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NetworkModel {
    pub rtt_ms: f64,
    pub bandwidth_bytes_per_ms: f64,
    pub max_concurrent: usize,
    pub parse_ms_per_kb: f64,
    pub server_compose_ms: f64,
    pub hydration_factor: f64,
    pub interaction_delay_ms: f64,
}

impl Default for NetworkModel {
    fn default() -> Self {
        NetworkModel {
            rtt_ms: 100.0,
            bandwidth_bytes_per_ms: 100.0,
            max_concurrent: 6,
            parse_ms_per_kb: 0.0,
            server_compose_ms: 0.0,
            hydration_factor: 1.0,
            interaction_delay_ms: 0.0,
        }
    }
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = [
            ("rttMs", self.rtt_ms),
            ("parseMsPerKb", self.parse_ms_per_kb),
            ("serverComposeMs", self.server_compose_ms),
            ("hydrationFactor", self.hydration_factor),
            ("interactionDelayMs", self.interaction_delay_ms),
        ];
        for (name, v) in finite_nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadNetwork(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        // +inf is accepted and means transfers take no time
        if self.bandwidth_bytes_per_ms.is_nan() || self.bandwidth_bytes_per_ms <= 0.0 {
            return Err(Error::BadNetwork(format!(
                "bandwidthBytesPerMs must be > 0, got {}",
                self.bandwidth_bytes_per_ms
            )));
        }
        if self.max_concurrent == 0 {
            return Err(Error::BadNetwork("maxConcurrent must be >= 1".to_string()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: NetworkModel =
            serde_json::from_str(text).map_err(|e| Error::BadNetwork(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TimelineEntry {
    pub request_id: usize,
    pub eligible_ms: f64,
    pub start_ms: f64,
    pub headers_ms: f64,
    pub done_ms: f64,
    pub parse_done_ms: f64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimReport {
    pub strategy: LoadStrategy,
    pub time_to_first_render_ms: f64,
    pub time_to_interactive_ms: f64,
    pub total_bytes: u64,
    pub request_count: usize,
    pub max_observed_concurrency: usize,
    pub waterfall_rounds: usize,
    pub per_request_timeline: Vec<TimelineEntry>,
}

impl SimReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report JSON is always serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Blocked,
    Eligible,
    Latency { until: f64 },
    Transfer { remaining: f64 },
    Done,
}

/// Completion tolerance, in ms, when several transfers finish together.
const TIME_EPS: f64 = 1e-9;

pub fn simulate(p: &LoadPlan, net: &NetworkModel) -> Result<SimReport> {
    net.validate()?;
    let n = p.requests.len();
    for (i, r) in p.requests.iter().enumerate() {
        if r.id != i {
            return Err(Error::Unplannable {
                key: format!("request {}", r.id),
                reason: format!("request ids must be dense and ordered, found {} at {i}", r.id),
            });
        }
        if let Some(d) = r.depends_on.iter().find(|d| **d >= n || **d == i) {
            return Err(Error::Unplannable {
                key: format!("request {i}"),
                reason: format!("depends on unknown or self request {d}"),
            });
        }
    }
    let ssr = p.strategy == LoadStrategy::Ssr;
    let lazy = p.strategy == LoadStrategy::Lazy;
    let parse_ms = |bytes: u64| {
        let base = bytes as f64 / 1000.0 * net.parse_ms_per_kb;
        if ssr {
            base * net.hydration_factor
        } else {
            base
        }
    };

    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing: Vec<usize> = vec![0; n];
    for r in &p.requests {
        missing[r.id] = r.depends_on.len();
        for d in &r.depends_on {
            dependents[*d].push(r.id);
        }
    }
    let mut phase = vec![Phase::Blocked; n];
    let mut eligible = vec![f64::NAN; n];
    let mut start = vec![f64::NAN; n];
    let mut headers = vec![f64::NAN; n];
    let mut done = vec![f64::NAN; n];
    let mut parsed = vec![f64::NAN; n];
    for i in 0..n {
        if missing[i] == 0 {
            eligible[i] = 0.0;
            phase[i] = Phase::Eligible;
        }
    }

    let mut now = 0.0_f64;
    let mut active = 0usize;
    let mut max_active = 0usize;
    let mut finished = 0usize;

    while finished < n {
        // start queued requests while slots are free
        loop {
            if active >= net.max_concurrent {
                break;
            }
            let next = (0..n)
                .filter(|i| phase[*i] == Phase::Eligible && eligible[*i] <= now)
                .min_by(|a, b| eligible[*a].total_cmp(&eligible[*b]).then(a.cmp(b)));
            let Some(i) = next else { break };
            start[i] = now;
            let wait = net.rtt_ms + if ssr { net.server_compose_ms } else { 0.0 };
            headers[i] = now + wait;
            phase[i] = Phase::Latency { until: headers[i] };
            active += 1;
            max_active = max_active.max(active);
        }

        // headers in: begin transfer; empty payloads complete immediately
        let mut progressed = false;
        for i in 0..n {
            if let Phase::Latency { until } = phase[i] {
                if until <= now {
                    phase[i] = Phase::Transfer {
                        remaining: p.requests[i].size_bytes as f64,
                    };
                }
            }
            if matches!(phase[i], Phase::Transfer { remaining } if remaining <= 0.0) {
                complete(i, now, &mut CompleteCtx {
                    p,
                    net,
                    lazy,
                    parse_ms: &parse_ms,
                    phase: &mut phase,
                    done: &mut done,
                    parsed: &mut parsed,
                    missing: &mut missing,
                    eligible: &mut eligible,
                    dependents: &dependents,
                });
                active -= 1;
                finished += 1;
                progressed = true;
            }
        }
        if progressed {
            continue;
        }

        // next event
        let transferring: Vec<usize> = (0..n)
            .filter(|i| matches!(phase[*i], Phase::Transfer { .. }))
            .collect();
        let rate = if transferring.is_empty() {
            0.0
        } else {
            net.bandwidth_bytes_per_ms / transferring.len() as f64
        };
        let finish_at = |i: usize| match phase[i] {
            Phase::Transfer { remaining } => now + remaining / rate,
            _ => f64::INFINITY,
        };
        let mut next = f64::INFINITY;
        for &i in &transferring {
            next = next.min(finish_at(i));
        }
        for i in 0..n {
            match phase[i] {
                Phase::Latency { until } => next = next.min(until),
                Phase::Eligible if eligible[i] > now => next = next.min(eligible[i]),
                _ => {}
            }
        }
        if !next.is_finite() {
            return Err(Error::Deadlock {
                pending: n - finished,
            });
        }

        let finishing: Vec<usize> = transferring
            .iter()
            .copied()
            .filter(|i| finish_at(*i) <= next + TIME_EPS)
            .collect();
        let dt = next - now;
        for &i in &transferring {
            if let Phase::Transfer { remaining } = &mut phase[i] {
                *remaining = if finishing.contains(&i) {
                    0.0
                } else {
                    (*remaining - rate * dt).max(0.0)
                };
            }
        }
        now = next;
    }

    let timeline: Vec<TimelineEntry> = (0..n)
        .map(|i| TimelineEntry {
            request_id: i,
            eligible_ms: eligible[i],
            start_ms: start[i],
            headers_ms: headers[i],
            done_ms: done[i],
            parse_done_ms: parsed[i],
            bytes: p.requests[i].size_bytes,
        })
        .collect();
    let ttfr = p
        .requests
        .iter()
        .find(|r| r.contains_node(&p.root))
        .map_or(0.0, |r| parsed[r.id]);
    let tti = parsed.iter().copied().fold(0.0, f64::max);
    Ok(SimReport {
        strategy: p.strategy,
        time_to_first_render_ms: ttfr,
        time_to_interactive_ms: tti,
        total_bytes: planner::required_bytes(p),
        request_count: n,
        max_observed_concurrency: max_active,
        waterfall_rounds: p.longest_chain(),
        per_request_timeline: timeline,
    })
}

struct CompleteCtx<'a, F: Fn(u64) -> f64> {
    p: &'a LoadPlan,
    net: &'a NetworkModel,
    lazy: bool,
    parse_ms: &'a F,
    phase: &'a mut [Phase],
    done: &'a mut [f64],
    parsed: &'a mut [f64],
    missing: &'a mut [usize],
    eligible: &'a mut [f64],
    dependents: &'a [Vec<usize>],
}

fn complete<F: Fn(u64) -> f64>(i: usize, now: f64, cx: &mut CompleteCtx<'_, F>) {
    cx.phase[i] = Phase::Done;
    cx.done[i] = now;
    cx.parsed[i] = now + (cx.parse_ms)(cx.p.requests[i].code_bytes());
    for &j in &cx.dependents[i] {
        cx.missing[j] -= 1;
        if cx.missing[j] > 0 {
            continue;
        }
        let req = &cx.p.requests[j];
        let at = req
            .depends_on
            .iter()
            .map(|d| {
                let delay = if cx.lazy && req.dynamic_deps.contains(d) {
                    cx.net.interaction_delay_ms
                } else {
                    0.0
                };
                cx.parsed[*d] + delay
            })
            .max_by(f64::total_cmp)
            .unwrap_or(now);
        cx.eligible[j] = at;
        cx.phase[j] = Phase::Eligible;
    }
}

/// Plans and simulates each strategy over identical inputs, in the order
/// given. Simulations run on separate threads.
pub fn compare_strategies(
    g: &ModuleGraph,
    res: &ShareResolution,
    net: &NetworkModel,
    strategies: &[LoadStrategy],
) -> Result<Vec<SimReport>> {
    compare_strategies_with(g, res, net, strategies, &PlanOptions::default())
}

pub fn compare_strategies_with(
    g: &ModuleGraph,
    res: &ShareResolution,
    net: &NetworkModel,
    strategies: &[LoadStrategy],
    opts: &PlanOptions,
) -> Result<Vec<SimReport>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = strategies
            .iter()
            .map(|s| scope.spawn(move || simulate(&planner::plan_with(g, res, *s, opts)?, net)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

/// Orders reports by time to interactive, then by bytes.
pub fn rank(reports: &[SimReport]) -> Vec<&SimReport> {
    let mut out: Vec<&SimReport> = reports.iter().collect();
    out.sort_by(|a, b| {
        a.time_to_interactive_ms
            .partial_cmp(&b.time_to_interactive_ms)
            .unwrap_or(Ordering::Equal)
            .then(a.total_bytes.cmp(&b.total_bytes))
    });
    out
}
