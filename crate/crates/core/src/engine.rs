//! Stack-driven enumeration of every complete instantiation whose joint
//! probability is at least `epsilon`.
//!
//! The search starts from the evidence and extends the assignment one level
//! at a time, deepest level first. Each extension step is an
//! [`EpsilonMl`] call whose threshold is `epsilon` divided by the product of
//! the factors already known, so a branch survives only while it can still
//! reach `epsilon`. Frames on the stack hold a state together with the lazy
//! iterator over its remaining extensions.

use std::fmt::Write as _;
use std::time::Instant;

use crate::eml::{next_subproblem, EpsilonMl};
use crate::error::{Error, Result};
use crate::model::{format_probability, prune_barren, Assignment, Evidence, Network, NodeId, PrunedNetwork, State};
use crate::sum::CompensatedSum;

/// Relative slack on the threshold handed to each extension step. The
/// final acceptance test is exact.
const RESCALE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    /// Keep every accepted instantiation in the result.
    pub keep_accepted: bool,
    /// Check, for each accepted instantiation, that every extension step on
    /// its path met that step's threshold with the factors it ends up with.
    pub audit: bool,
    /// Fail with [`Error::StateBudgetExceeded`] once more states than this
    /// have been explored.
    pub max_states: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub epsilon: f64,
    pub mass_accumulated: f64,
    /// Per node: summed joint of accepted instantiations with the node present.
    pub score: Vec<f64>,
    /// States taken off the stack, including the initial evidence state.
    pub states_explored: u64,
    pub accepted_count: u64,
    pub accepted: Option<Vec<(Vec<State>, f64)>>,
    /// Failed audit checks (always 0 unless auditing).
    pub audit_violations: u64,
}

impl SearchResult {
    /// `score / mass`, or `None` when nothing was accepted.
    pub fn posterior_estimate(&self, node: NodeId) -> Option<f64> {
        (self.mass_accumulated > 0.0).then(|| self.score[node] / self.mass_accumulated)
    }

    pub fn posterior_estimates(&self) -> Option<Vec<f64>> {
        (self.mass_accumulated > 0.0).then(|| self.score.iter().map(|s| s / self.mass_accumulated).collect())
    }
}

struct Frame {
    state: Assignment,
    extensions: EpsilonMl,
    threshold: f64,
    last_product: f64,
}

/// Enumerates every complete instantiation of `net` consistent with `ev`
/// whose joint is `>= epsilon` (inclusive). `epsilon = 0` enumerates
/// everything, which yields exact posteriors.
pub fn top_epsilon(net: &Network, ev: &Evidence, epsilon: f64, keep_accepted: bool) -> Result<SearchResult> {
    top_epsilon_with(
        net,
        ev,
        epsilon,
        SearchOptions {
            keep_accepted,
            ..SearchOptions::default()
        },
    )
}

pub fn top_epsilon_with(net: &Network, ev: &Evidence, epsilon: f64, options: SearchOptions) -> Result<SearchResult> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut initial = Assignment::new(net);
    for &(id, s) in ev.items() {
        initial.assign(net, id, s)?;
    }

    let mut mass = CompensatedSum::new();
    let mut score = vec![CompensatedSum::new(); net.len()];
    let mut accepted = options.keep_accepted.then(Vec::new);
    let mut accepted_count = 0u64;
    let mut explored = 0u64;
    let mut violations = 0u64;
    let mut stack: Vec<Frame> = Vec::new();

    let mut pending = Some(initial);
    loop {
        if let Some(state) = pending.take() {
            explored += 1;
            if let Some(limit) = options.max_states {
                if explored > limit {
                    return Err(Error::StateBudgetExceeded { limit });
                }
            }
            if state.is_complete() {
                let states = state.to_states().expect("complete");
                let joint = net.joint(&states);
                if joint >= epsilon {
                    mass.add(joint);
                    for (id, s) in states.iter().enumerate() {
                        if s.is_present() {
                            score[id].add(joint);
                        }
                    }
                    accepted_count += 1;
                    if options.audit {
                        violations += audit_path(&stack, joint);
                    }
                    if let Some(list) = accepted.as_mut() {
                        list.push((states, joint));
                    }
                }
            } else if epsilon == 0.0 || state.product_at_least(epsilon) {
                let threshold = state.rescaled_threshold(epsilon) * (1.0 - RESCALE_SLACK);
                let sub = next_subproblem(net, &state).expect("incomplete state has a subproblem");
                let extensions = EpsilonMl::new(net, &sub, threshold);
                stack.push(Frame {
                    state,
                    extensions,
                    threshold,
                    last_product: 1.0,
                });
            }
        }
        let Some(top) = stack.last_mut() else { break };
        match top.extensions.next() {
            Some(ext) => {
                top.last_product = ext.new_factor_product;
                pending = Some(top.state.extended(net, &ext.parent_states)?);
            }
            None => {
                stack.pop();
            }
        }
    }

    Ok(SearchResult {
        epsilon,
        mass_accumulated: mass.value(),
        score: score.iter().map(|s| s.value()).collect(),
        states_explored: explored,
        accepted_count,
        accepted,
        audit_violations: violations,
    })
}

/// For each frame on the path to an accepted instantiation: the extension's
/// test product met the frame threshold, and the factors still unknown at
/// that frame (joint / known product) met it too.
fn audit_path(stack: &[Frame], joint: f64) -> u64 {
    stack
        .iter()
        .filter(|f| {
            let remaining = joint / f.state.known_factor_product();
            let tol = f.threshold * 1e-9;
            f.last_product < f.threshold || remaining + tol < f.threshold || f.last_product + tol < remaining
        })
        .count() as u64
}

/// True iff every node is assigned.
pub fn complete(_net: &Network, a: &Assignment) -> bool {
    a.is_complete()
}

/// Strictly decreasing list of thresholds, all `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule(Vec<f64>);

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<EpsilonSchedule> {
        for &v in &values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSchedule(format!("{v} is not a finite value >= 0")));
            }
        }
        if let Some(w) = values.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "{} does not decrease to {}",
                w[0], w[1]
            )));
        }
        Ok(EpsilonSchedule(values))
    }

    /// Comma-separated values, e.g. `1e-2,1e-4`.
    pub fn parse(text: &str) -> Result<EpsilonSchedule> {
        let values = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidSchedule(format!("`{s}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        EpsilonSchedule::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for EpsilonSchedule {
    /// `1e-2, 1e-4, ..., 1e-20`.
    fn default() -> EpsilonSchedule {
        EpsilonSchedule((1..=10).map(|k| format!("1e-{}", 2 * k).parse().unwrap()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epsilon: f64,
    pub states_explored: u64,
    pub accepted_count: u64,
    pub mass_accumulated: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

/// One independent search per schedule entry. Returns the trace and the
/// result of the last (smallest-epsilon) run.
pub fn run_schedule_with(
    net: &Network,
    ev: &Evidence,
    schedule: &EpsilonSchedule,
    options: SearchOptions,
) -> Result<(ConvergenceTrace, Option<SearchResult>)> {
    let mut trace = ConvergenceTrace::default();
    let mut last = None;
    for &epsilon in schedule.values() {
        let start = Instant::now();
        let r = top_epsilon_with(net, ev, epsilon, options)?;
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        trace.rows.push(TraceRow {
            epsilon,
            states_explored: r.states_explored,
            accepted_count: r.accepted_count,
            mass_accumulated: r.mass_accumulated,
            elapsed_ms,
        });
        last = Some(r);
    }
    Ok((trace, last))
}

pub fn run_schedule(net: &Network, ev: &Evidence, schedule: &EpsilonSchedule) -> Result<ConvergenceTrace> {
    run_schedule_with(net, ev, schedule, SearchOptions::default()).map(|(t, _)| t)
}

/// A search on the barren-pruned network, with results mapped back to the
/// ids of the original network.
#[derive(Debug, Clone)]
pub struct Inference {
    pub pruned: PrunedNetwork,
    pub result: SearchResult,
}

impl Inference {
    /// Posterior estimate for an original node id; `None` if the node was
    /// pruned or nothing was accepted.
    pub fn posterior(&self, original: NodeId) -> Option<f64> {
        self.pruned
            .new_id(original)
            .and_then(|id| self.result.posterior_estimate(id))
    }
}

/// Prunes barren nodes with respect to `ev` and `query`, then searches.
pub fn infer(
    net: &Network,
    ev: &Evidence,
    query: &[NodeId],
    epsilon: f64,
    options: SearchOptions,
) -> Result<Inference> {
    let pruned = prune_barren(net, ev, query);
    let ev = pruned.map_evidence(ev)?;
    let result = top_epsilon_with(&pruned.network, &ev, epsilon, options)?;
    Ok(Inference { pruned, result })
}

/// One line per instantiation: the joint with 17 significant digits, then
/// `name=p|a` per node in id order. Sorted by descending joint, then by the
/// assignment text.
pub fn format_accepted(net: &Network, accepted: &[(Vec<State>, f64)]) -> String {
    let mut lines: Vec<(f64, String)> = accepted
        .iter()
        .map(|(states, joint)| {
            let mut text = String::new();
            for (id, s) in states.iter().enumerate() {
                if id > 0 {
                    text.push(' ');
                }
                let _ = write!(text, "{}={}", net.name(id), s.tag());
            }
            (*joint, text)
        })
        .collect();
    lines.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut out = String::new();
    for (joint, text) in lines {
        let _ = writeln!(out, "{} {}", format_probability(joint), text);
    }
    out
}
