//! Benchmark harness: sampled cases, one search per (case, epsilon), and
//! the CSV trace and summary built from them.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::engine::{top_epsilon_with, EpsilonSchedule, SearchOptions};
use crate::error::{Error, Result};
use crate::exact::{exact_inference, DEFAULT_FREE_NODE_CAP};
use crate::model::{format_probability, prune_barren, Evidence, Network};
use crate::netgen::{make_case, Case};
use crate::topdown::mass_above;

pub const CSV_HEADER: &str =
    "case_id,epsilon,states_explored,accepted_count,mass_accumulated,gold_mass,mass_fraction,elapsed_ms";

/// Fraction of the reference mass at which a case counts as converged.
pub const CONVERGED_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case_id: String,
    pub epsilon: f64,
    pub states_explored: u64,
    pub accepted_count: u64,
    pub mass_accumulated: f64,
    pub gold_mass: Option<f64>,
    pub mass_fraction: Option<f64>,
    /// Wall time of the search call; `None` when timing is disabled.
    pub elapsed_ms: Option<f64>,
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_probability).unwrap_or_default();
        format!(
            "{},{:e},{},{},{},{},{},{}",
            self.case_id,
            self.epsilon,
            self.states_explored,
            self.accepted_count,
            format_probability(self.mass_accumulated),
            opt(self.gold_mass),
            opt(self.mass_fraction),
            self.elapsed_ms.map(|t| format!("{t:.3}")).unwrap_or_else(|| "0".into()),
        )
    }
}

/// Where the reference mass of a case came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Gold {
    /// Exhaustive enumeration: the evidence probability.
    Exact(f64),
    /// Mass of every instantiation with joint at least `epsilon`.
    Deep {
        epsilon: f64,
        mass: f64,
    },
    Unavailable(String),
}

impl Gold {
    pub fn mass(&self) -> Option<f64> {
        match *self {
            Gold::Exact(m) | Gold::Deep { mass: m, .. } => Some(m),
            Gold::Unavailable(_) => None,
        }
    }

    fn label(&self) -> String {
        match self {
            Gold::Exact(_) => "exact".into(),
            Gold::Deep { epsilon, .. } => format!("deep {epsilon:e}"),
            Gold::Unavailable(why) => format!("none ({why})"),
        }
    }
}

/// Reference mass for `ev`: exact when at most `cap` nodes are free,
/// otherwise a deep run at `deep_epsilon`.
pub fn gold_mass(net: &Network, ev: &Evidence, cap: usize, deep_epsilon: f64) -> Gold {
    match exact_inference(net, ev, cap) {
        Ok(r) => Gold::Exact(r.evidence_probability),
        Err(Error::ImpossibleEvidence) => Gold::Exact(0.0),
        Err(Error::FreeNodeCapExceeded { .. }) => match mass_above(net, ev, deep_epsilon, None) {
            Ok(r) => Gold::Deep {
                epsilon: deep_epsilon,
                mass: r.mass,
            },
            Err(e) => Gold::Unavailable(e.to_string()),
        },
        Err(e) => Gold::Unavailable(e.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cases: usize,
    pub findings: usize,
    /// Case `i` is sampled with seed `seed + i`.
    pub seed: u64,
    pub schedule: EpsilonSchedule,
    pub jobs: usize,
    pub free_node_cap: usize,
    pub gold_epsilon: f64,
    /// Per-run state budget. A run that exceeds it ends that case's
    /// schedule; later rows for the case are not emitted.
    pub max_states: Option<u64>,
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> BenchConfig {
        BenchConfig {
            cases: 12,
            findings: 26,
            seed: 0,
            schedule: EpsilonSchedule::default(),
            jobs: 1,
            free_node_cap: DEFAULT_FREE_NODE_CAP,
            gold_epsilon: 1e-30,
            max_states: None,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub case_id: String,
    pub gold: Gold,
    pub rows: Vec<BenchRow>,
    /// The epsilon whose run exceeded the state budget, if any.
    pub truncated_at: Option<f64>,
}

impl CaseReport {
    /// Largest epsilon in the schedule whose mass reaches
    /// [`CONVERGED_FRACTION`] of the reference.
    pub fn convergence_point(&self) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.mass_fraction.is_some_and(|f| f >= CONVERGED_FRACTION))
            .map(|r| r.epsilon)
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub cases: Vec<CaseReport>,
}

pub fn case_id(index: usize) -> String {
    format!("case{index:03}")
}

/// Runs the schedule on one case, after pruning nodes that are barren with
/// respect to its evidence.
pub fn run_case(net: &Network, case: &Case, config: &BenchConfig) -> Result<CaseReport> {
    let pruned = prune_barren(net, &case.evidence, &[]);
    let ev = pruned.map_evidence(&case.evidence)?;
    let net = &pruned.network;
    let gold = gold_mass(net, &ev, config.free_node_cap, config.gold_epsilon);
    let gold_mass = gold.mass();
    let options = SearchOptions {
        max_states: config.max_states,
        ..SearchOptions::default()
    };
    let mut rows = Vec::new();
    let mut truncated_at = None;
    for &epsilon in config.schedule.values() {
        let start = Instant::now();
        let r = match top_epsilon_with(net, &ev, epsilon, options) {
            Ok(r) => r,
            Err(Error::StateBudgetExceeded { .. }) => {
                truncated_at = Some(epsilon);
                break;
            }
            Err(e) => return Err(e),
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        rows.push(BenchRow {
            case_id: case.case_id.clone(),
            epsilon,
            states_explored: r.states_explored,
            accepted_count: r.accepted_count,
            mass_accumulated: r.mass_accumulated,
            gold_mass,
            mass_fraction: gold_mass.filter(|&g| g > 0.0).map(|g| r.mass_accumulated / g),
            elapsed_ms: config.timing.then_some(elapsed),
        });
    }
    Ok(CaseReport {
        case_id: case.case_id.clone(),
        gold,
        rows,
        truncated_at,
    })
}

/// Samples `config.cases` cases and runs each, `config.jobs` at a time.
/// Reports come back in case order whatever the job count.
pub fn run_bench(net: &Network, config: &BenchConfig) -> Result<BenchReport> {
    let cases = (0..config.cases)
        .map(|i| make_case(net, config.seed + i as u64, config.findings).map(|c| c.with_id(case_id(i))))
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let cases = pool.install(|| {
        cases
            .par_iter()
            .map(|c| run_case(net, c, config))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BenchReport { cases })
}

impl BenchReport {
    pub fn rows(&self) -> impl Iterator<Item = &BenchRow> {
        self.cases.iter().flat_map(|c| c.rows.iter())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.rows() {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    /// Median convergence point, taken on `-log10(epsilon)`; a case that
    /// never converged counts as infinitely deep. `None` without cases.
    pub fn median_convergence(&self) -> Option<f64> {
        let mut depths: Vec<f64> = self
            .cases
            .iter()
            .map(|c| c.convergence_point().map_or(f64::INFINITY, |e| -e.log10()))
            .collect();
        if depths.is_empty() {
            return None;
        }
        depths.sort_by(f64::total_cmp);
        let n = depths.len();
        let mid = if n % 2 == 1 {
            depths[n / 2]
        } else {
            (depths[n / 2 - 1] + depths[n / 2]) / 2.0
        };
        Some(10f64.powf(-mid))
    }

    /// Per-case reference and convergence point, then states explored per
    /// case against `-log10(epsilon)`. Cells of truncated runs are empty.
    pub fn summary(&self) -> String {
        let mut out = String::from("case_id,gold,gold_mass,convergence_epsilon,truncated_at\n");
        for c in &self.cases {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.case_id,
                c.gold.label(),
                c.gold.mass().map(format_probability).unwrap_or_default(),
                c.convergence_point().map(|e| format!("{e:e}")).unwrap_or_default(),
                c.truncated_at.map(|e| format!("{e:e}")).unwrap_or_default(),
            );
        }
        let _ = writeln!(
            out,
            "median_convergence_epsilon,{}",
            self.median_convergence().map(|e| format!("{e:e}")).unwrap_or_default()
        );

        let mut epsilons: Vec<f64> = self.rows().map(|r| r.epsilon).collect();
        epsilons.sort_by(|a, b| b.total_cmp(a));
        epsilons.dedup();
        out.push_str("\n-log10(epsilon)");
        for c in &self.cases {
            let _ = write!(out, ",{}", c.case_id);
        }
        out.push('\n');
        for e in epsilons {
            let _ = write!(out, "{}", -e.log10());
            for c in &self.cases {
                out.push(',');
                if let Some(r) = c.rows.iter().find(|r| r.epsilon == e) {
                    let _ = write!(out, "{}", r.states_explored);
                }
            }
            out.push('\n');
        }
        out
    }
}
