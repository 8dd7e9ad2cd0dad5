//! Seeded synthetic networks and sampled test cases.
//!
//! All randomness comes from xoshiro256** seeded through SplitMix64
//! (`Xoshiro256StarStar::seed_from_u64`). Draws are converted with fixed
//! rules so output is reproducible on every platform:
//!
//! * unit interval: `(next_u64() >> 11) * 2^-53`
//! * index below `n`: `(next_u64() as u128 * n) >> 64`
//!
//! Network generation visits levels top-down and nodes in order. A root
//! draws its prior. A node at level `k >= 1` draws its parent count
//! (`1 + index(max_parents)`, capped by the number of shallower nodes), a
//! first parent uniformly from level `k - 1`, each further parent from
//! level `k - 1` with probability `parent_locality` and otherwise from all
//! shallower levels (skipping parents already chosen), then one link
//! probability per parent and finally its leak. Since every node has a
//! parent in the level directly above, its longest-path level equals its
//! layer index.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::model::{print_evidence, Evidence, Link, Network, NodeId, NodeKind, NodeSpec, State};

#[derive(Debug, Clone, PartialEq)]
pub struct NetShape {
    /// Node count per level, shallowest first. Its length is the number of
    /// levels.
    pub nodes_per_level: Vec<usize>,
    pub max_parents: usize,
    /// Probability that an additional parent comes from the level directly
    /// above rather than from any shallower level.
    pub parent_locality: f64,
    pub prior_range: (f64, f64),
    pub q_range: (f64, f64),
    /// Leak range for the deepest level.
    pub leak_range: (f64, f64),
    /// Leak range for levels strictly between the roots and the deepest
    /// level.
    pub hidden_leak_range: (f64, f64),
    pub seed: u64,
}

impl Default for NetShape {
    /// Five levels sized 3, 10, 15, 20, 97 (145 nodes), up to three parents.
    fn default() -> NetShape {
        NetShape {
            nodes_per_level: vec![3, 10, 15, 20, 97],
            max_parents: 3,
            parent_locality: 0.8,
            prior_range: (0.001, 0.1),
            q_range: (0.2, 0.95),
            leak_range: (0.0, 0.05),
            hidden_leak_range: (0.0, 0.05),
            seed: 0,
        }
    }
}

impl NetShape {
    /// The default layout with near-deterministic links and leaks: q in
    /// `[0.999, 1]`, every leak in `[0, 0.001]`. Search on these networks
    /// stays cheap enough for deep benchmark runs.
    pub fn bn3(seed: u64) -> NetShape {
        NetShape {
            q_range: (0.999, 1.0),
            leak_range: (0.0, 0.001),
            hidden_leak_range: (0.0, 0.001),
            seed,
            ..NetShape::default()
        }
    }

    pub fn levels(&self) -> usize {
        self.nodes_per_level.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_level.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.levels() < 2 {
            return Err(Error::InfeasibleShape("at least two levels are required".into()));
        }
        if let Some(k) = self.nodes_per_level.iter().position(|&c| c == 0) {
            return Err(Error::InfeasibleShape(format!("level {k} has no nodes")));
        }
        if self.max_parents == 0 {
            return Err(Error::InfeasibleShape("max_parents must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.parent_locality) {
            return Err(Error::InfeasibleShape("parent_locality must lie in [0, 1]".into()));
        }
        for (name, (lo, hi)) in [
            ("prior", self.prior_range),
            ("q", self.q_range),
            ("leak", self.leak_range),
            ("hidden leak", self.hidden_leak_range),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::InfeasibleShape(format!(
                    "{name} range [{lo}, {hi}] is not inside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic random source for generation and sampling.
pub struct SeededRng(Xoshiro256StarStar);

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        SeededRng(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, (lo, hi): (f64, f64)) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Index in `0..n` by multiply-shift; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

fn node_name(level: usize, levels: usize, i: usize) -> String {
    if level == 0 {
        format!("D{i}")
    } else if level + 1 == levels {
        format!("F{i}")
    } else {
        format!("H{level}_{i}")
    }
}

pub fn gen_network(shape: &NetShape) -> Result<Network> {
    shape.validate()?;
    let mut rng = SeededRng::new(shape.seed);
    let levels = shape.levels();
    let mut layer_start = Vec::with_capacity(levels + 1);
    let mut acc = 0;
    for &c in &shape.nodes_per_level {
        layer_start.push(acc);
        acc += c;
    }
    layer_start.push(acc);

    let mut nodes = Vec::with_capacity(acc);
    for (level, &count) in shape.nodes_per_level.iter().enumerate() {
        for i in 0..count {
            let name = node_name(level, levels, i);
            if level == 0 {
                nodes.push(NodeSpec::root(name, rng.uniform(shape.prior_range)));
                continue;
            }
            let above = layer_start[level - 1]..layer_start[level];
            let shallower = layer_start[level];
            let wanted = (1 + rng.index(shape.max_parents)).min(shallower);
            let mut parents: Vec<NodeId> = vec![above.start + rng.index(above.len())];
            while parents.len() < wanted {
                let local = rng.unit() < shape.parent_locality;
                let pool: Vec<NodeId> = if local {
                    above.clone().filter(|p| !parents.contains(p)).collect()
                } else {
                    (0..shallower).filter(|p| !parents.contains(p)).collect()
                };
                let pool = if pool.is_empty() {
                    (0..shallower).filter(|p| !parents.contains(p)).collect()
                } else {
                    pool
                };
                parents.push(pool[rng.index(pool.len())]);
            }
            let links = parents
                .into_iter()
                .map(|parent| Link {
                    parent,
                    q: rng.uniform(shape.q_range),
                })
                .collect();
            let leak = if level + 1 == levels {
                rng.uniform(shape.leak_range)
            } else {
                rng.uniform(shape.hidden_leak_range)
            };
            nodes.push(NodeSpec::non_root(name, leak, links));
        }
    }
    let net = Network::new(nodes)?;
    for level in 0..levels {
        for id in layer_start[level]..layer_start[level + 1] {
            if net.level(id) != level {
                return Err(Error::InfeasibleShape(format!(
                    "node {} landed on level {} instead of {level}",
                    net.name(id),
                    net.level(id)
                )));
            }
        }
    }
    Ok(net)
}

fn sample_with(net: &Network, rng: &mut SeededRng) -> Vec<State> {
    let mut states: Vec<Option<State>> = vec![None; net.len()];
    for &id in net.topological_order() {
        let p = match &net.node(id).kind {
            NodeKind::Root { prior } => *prior,
            NodeKind::NonRoot { .. } => net
                .cpt_probability(id, State::Present, &states)
                .expect("parents precede children"),
        };
        states[id] = Some(State::from_present(rng.unit() < p));
    }
    states.into_iter().map(|s| s.unwrap()).collect()
}

/// Ancestral sample: nodes in topological order, each drawn from its prior
/// or noisy-OR CPT given the sampled parents.
pub fn forward_sample(net: &Network, seed: u64) -> Vec<State> {
    sample_with(net, &mut SeededRng::new(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub case_id: String,
    pub seed: u64,
    pub evidence: Evidence,
    pub true_state: Vec<State>,
}

impl Case {
    pub fn with_id(mut self, id: impl Into<String>) -> Case {
        self.case_id = id.into();
        self
    }
}

/// Samples a true state with `seed` (identical to [`forward_sample`]), then
/// observes `finding_count` deepest-level nodes chosen without replacement
/// by a partial Fisher-Yates shuffle drawn from the same stream. Cases with
/// the same seed and more findings observe a superset of the nodes.
pub fn make_case(net: &Network, seed: u64, finding_count: usize) -> Result<Case> {
    let deepest: Vec<NodeId> = (0..net.len()).filter(|&id| net.level(id) == net.max_level()).collect();
    if finding_count > deepest.len() {
        return Err(Error::TooManyFindings {
            requested: finding_count,
            available: deepest.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    let true_state = sample_with(net, &mut rng);
    let mut pool = deepest;
    for i in 0..finding_count {
        let j = i + rng.index(pool.len() - i);
        pool.swap(i, j);
    }
    let mut chosen: Vec<NodeId> = pool[..finding_count].to_vec();
    chosen.sort_unstable();
    let evidence = Evidence::new(net, chosen.into_iter().map(|id| (id, true_state[id])).collect())?;
    Ok(Case {
        case_id: format!("s{seed}"),
        seed,
        evidence,
        true_state,
    })
}

/// `.case` text: a `case <id> seed <seed>` header followed by evidence lines.
pub fn format_case(net: &Network, case: &Case) -> String {
    format!(
        "case {} seed {}\n{}",
        case.case_id,
        case.seed,
        print_evidence(net, &case.evidence)
    )
}
