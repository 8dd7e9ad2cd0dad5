//! Brute-force exact inference by enumerating every complete instantiation
//! consistent with the evidence. Exponential in the number of free nodes;
//! used as the reference answer for small networks.

use crate::error::{Error, Result};
use crate::model::{Evidence, Network, State};
use crate::sum::CompensatedSum;

/// Default limit on free (unobserved) nodes, about 16.8M instantiations.
pub const DEFAULT_FREE_NODE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// `P(evidence)`, the total mass consistent with the evidence.
    pub evidence_probability: f64,
    /// `P(node = present | evidence)` per node id.
    pub posteriors: Vec<f64>,
    pub instantiation_count: u64,
}

/// Iterator over `(instantiation, joint)` for every complete instantiation
/// that agrees with the evidence.
///
/// Order is binary counting over the free nodes, lowest id as the most
/// significant digit, absent before present.
pub struct Consistent<'a> {
    net: &'a Network,
    free: Vec<usize>,
    states: Vec<State>,
    next: u64,
    end: u64,
}

impl Iterator for Consistent<'_> {
    type Item = (Vec<State>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next == self.end {
            return None;
        }
        let k = self.free.len();
        for (i, &id) in self.free.iter().enumerate() {
            self.states[id] = State::from_present((self.next >> (k - 1 - i)) & 1 == 1);
        }
        self.next += 1;
        Some((self.states.clone(), self.net.joint(&self.states)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

pub fn enumerate_consistent<'a>(net: &'a Network, ev: &Evidence, cap: usize) -> Result<Consistent<'a>> {
    let mut states = vec![State::Absent; net.len()];
    let mut observed = vec![false; net.len()];
    for &(id, s) in ev.items() {
        states[id] = s;
        observed[id] = true;
    }
    let free: Vec<usize> = (0..net.len()).filter(|&i| !observed[i]).collect();
    if free.len() > cap || free.len() >= 64 {
        return Err(Error::FreeNodeCapExceeded { free: free.len(), cap });
    }
    Ok(Consistent {
        net,
        end: 1u64 << free.len(),
        free,
        states,
        next: 0,
    })
}

pub fn exact_inference(net: &Network, ev: &Evidence, cap: usize) -> Result<ExactResult> {
    let mut total = CompensatedSum::new();
    let mut present = vec![CompensatedSum::new(); net.len()];
    let mut count = 0u64;
    for (states, joint) in enumerate_consistent(net, ev, cap)? {
        total.add(joint);
        for (id, s) in states.iter().enumerate() {
            if s.is_present() {
                present[id].add(joint);
            }
        }
        count += 1;
    }
    let evidence_probability = total.value();
    if evidence_probability <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    let mut posteriors: Vec<f64> = present.iter().map(|s| s.value() / evidence_probability).collect();
    for &(id, s) in ev.items() {
        posteriors[id] = if s.is_present() { 1.0 } else { 0.0 };
    }
    Ok(ExactResult {
        evidence_probability,
        posteriors,
        instantiation_count: count,
    })
}

/// Every consistent instantiation with joint `>= epsilon`, in enumeration
/// order.
pub fn instantiations_above(net: &Network, ev: &Evidence, epsilon: f64, cap: usize) -> Result<Vec<(Vec<State>, f64)>> {
    Ok(enumerate_consistent(net, ev, cap)?
        .filter(|(_, j)| *j >= epsilon)
        .collect())
}
