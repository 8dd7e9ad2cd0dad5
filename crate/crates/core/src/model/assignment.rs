use super::{Network, NodeId, State};
use crate::error::{Error, Result};

/// Above this many known factors, threshold tests run on the log product.
pub const LOG_SPACE_FACTOR_THRESHOLD: usize = 200;

/// Partial instantiation with a cached product of its known factors.
///
/// A factor `P(X | parents(X))` (or the prior of a root) is known once X
/// and all of its parents are assigned. Assigning a node can make its own
/// factor and the factors of assigned children known.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    values: Vec<Option<State>>,
    missing_parents: Vec<u32>,
    assigned: usize,
    known_product: f64,
    log_known: f64,
    known_factors: usize,
}

impl Assignment {
    pub fn new(net: &Network) -> Assignment {
        Assignment {
            values: vec![None; net.len()],
            missing_parents: net.nodes().iter().map(|n| n.links().len() as u32).collect(),
            assigned: 0,
            known_product: 1.0,
            log_known: 0.0,
            known_factors: 0,
        }
    }

    pub fn get(&self, id: NodeId) -> Option<State> {
        self.values[id]
    }

    pub fn values(&self) -> &[Option<State>] {
        &self.values
    }

    pub fn is_assigned(&self, id: NodeId) -> bool {
        self.values[id].is_some()
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned
    }

    /// True iff every node is assigned, so every factor is known.
    pub fn is_complete(&self) -> bool {
        self.assigned == self.values.len()
    }

    /// Number of unassigned parents of `id`.
    pub fn missing_parents(&self, id: NodeId) -> usize {
        self.missing_parents[id] as usize
    }

    pub fn known_factor_product(&self) -> f64 {
        self.known_product
    }

    pub fn log_known_factor_product(&self) -> f64 {
        self.log_known
    }

    pub fn known_factor_count(&self) -> usize {
        self.known_factors
    }

    /// Whether the known factor product is at least `epsilon`, compared in
    /// log space once the factor count passes
    /// [`LOG_SPACE_FACTOR_THRESHOLD`].
    pub fn product_at_least(&self, epsilon: f64) -> bool {
        if self.known_factors > LOG_SPACE_FACTOR_THRESHOLD {
            epsilon <= 0.0 || self.log_known >= epsilon.ln()
        } else {
            self.known_product >= epsilon
        }
    }

    /// `epsilon / known product`, the threshold the remaining factors must
    /// reach. Infinite when the known product is zero and `epsilon > 0`.
    pub fn rescaled_threshold(&self, epsilon: f64) -> f64 {
        if epsilon <= 0.0 {
            return 0.0;
        }
        if self.known_factors > LOG_SPACE_FACTOR_THRESHOLD {
            (epsilon.ln() - self.log_known).exp()
        } else if self.known_product == 0.0 {
            f64::INFINITY
        } else {
            epsilon / self.known_product
        }
    }

    /// Deepest level holding an assigned node with an unassigned parent.
    pub fn frontier_level(&self, net: &Network) -> Option<usize> {
        (0..self.values.len())
            .filter(|&id| self.values[id].is_some() && self.missing_parents[id] > 0)
            .map(|id| net.level(id))
            .max()
    }

    /// Assigns an unassigned node, folding any newly known factors into the
    /// cached product.
    pub fn assign(&mut self, net: &Network, id: NodeId, state: State) -> Result<()> {
        if self.values[id].is_some() {
            return Err(Error::AlreadyAssigned(net.name(id).to_string()));
        }
        self.values[id] = Some(state);
        self.assigned += 1;
        if self.missing_parents[id] == 0 {
            let f = net.factor(id, state, &self.values);
            self.fold(f);
        }
        for &c in net.children(id) {
            self.missing_parents[c] -= 1;
            if self.missing_parents[c] == 0 {
                if let Some(cs) = self.values[c] {
                    let f = net.factor(c, cs, &self.values);
                    self.fold(f);
                }
            }
        }
        Ok(())
    }

    /// Copy of `self` with every `(node, state)` pair assigned.
    pub fn extended(&self, net: &Network, states: &[(NodeId, State)]) -> Result<Assignment> {
        let mut next = self.clone();
        for &(id, s) in states {
            next.assign(net, id, s)?;
        }
        Ok(next)
    }

    /// The instantiation as a plain state vector, if complete.
    pub fn to_states(&self) -> Option<Vec<State>> {
        self.values.iter().copied().collect()
    }

    fn fold(&mut self, factor: f64) {
        self.known_product *= factor;
        self.log_known += factor.ln();
        self.known_factors += 1;
    }
}

/// Product of the known factors of `a`, recomputed from scratch.
pub fn partial_probability(net: &Network, a: &Assignment) -> f64 {
    let values = a.values();
    let mut product = 1.0;
    for id in 0..net.len() {
        let Some(state) = values[id] else { continue };
        if net.parents(id).all(|p| values[p].is_some()) {
            product *= net.factor(id, state, values);
        }
    }
    product
}

/// Full joint probability of a complete assignment.
pub fn joint_probability(net: &Network, a: &Assignment) -> Result<f64> {
    match a.to_states() {
        Some(states) => Ok(net.joint(&states)),
        None => Err(Error::IncompleteAssignment {
            unassigned: net.len() - a.assigned_count(),
        }),
    }
}
