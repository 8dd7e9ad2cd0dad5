//! Level-wise branching operator.
//!
//! Given a set of assigned nodes at one level (the *findings*) and their
//! unassigned parents, enumerate every assignment of those parents whose
//! newly known factor product reaches a threshold `epsilon`:
//!
//! ```text
//! product = prod_{f in findings} P(f | parents(f)) * prod_{r in free roots} P(r)
//! ```
//!
//! Non-root free parents contribute a factor of 1: their own conditional
//! factor is unknown until their parents are assigned, and it is at most
//! one. The product is therefore an upper bound on everything that becomes
//! known along any completion, which is what makes the multi-level search
//! complete.
//!
//! The enumeration is a depth-first search over the free parents with an
//! admissible bound (see [`upper_bound`]). It is exposed as an iterator so
//! that callers can consume extensions lazily; the search keeps only the
//! current decision path in memory.

use crate::error::{Error, Result};
use crate::model::{prior_factor, Assignment, Network, NodeId, State};

/// Relative slack applied when pruning interior search nodes. Leaves are
/// still tested exactly against `epsilon`.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub findings: Vec<(NodeId, State)>,
    /// Unassigned parents of the findings, in search order.
    pub free_parents: Vec<NodeId>,
    /// Assigned parents of the findings, by id.
    pub fixed_parents: Vec<(NodeId, State)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub parent_states: Vec<(NodeId, State)>,
    pub new_factor_product: f64,
}

impl Subproblem {
    /// Builds the subproblem for `findings`, taking parent states from
    /// `known` (indexed by node id). Free parents are ordered by descending
    /// strongest link into the findings, ties by id.
    pub fn new(net: &Network, findings: Vec<(NodeId, State)>, known: &[Option<State>]) -> Subproblem {
        const UNSEEN: u32 = u32::MAX;
        const FIXED: u32 = u32::MAX - 1;
        let mut slot = vec![UNSEEN; net.len()];
        let mut relevance: Vec<(NodeId, f64)> = Vec::new();
        let mut fixed_parents = Vec::new();
        for &(f, _) in &findings {
            for link in net.node(f).links() {
                let p = link.parent;
                match (slot[p], known[p]) {
                    (UNSEEN, Some(s)) => {
                        slot[p] = FIXED;
                        fixed_parents.push((p, s));
                    }
                    (UNSEEN, None) => {
                        slot[p] = relevance.len() as u32;
                        relevance.push((p, link.q));
                    }
                    (FIXED, _) => {}
                    (k, _) => {
                        let r = &mut relevance[k as usize].1;
                        *r = r.max(link.q);
                    }
                }
            }
        }
        debug_assert!(
            findings.iter().all(|&(f, _)| slot[f] == UNSEEN),
            "findings must not be linked"
        );
        fixed_parents.sort_by_key(|&(id, _)| id);
        relevance.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Subproblem {
            findings,
            free_parents: relevance.into_iter().map(|(p, _)| p).collect(),
            fixed_parents,
        }
    }
}

/// Subproblem at `level`: every assigned node there that still has an
/// unassigned parent, together with those parents.
pub fn build_subproblem(net: &Network, a: &Assignment, level: usize) -> Result<Subproblem> {
    let findings: Vec<(NodeId, State)> = net
        .nodes_at_level(level)
        .iter()
        .copied()
        .filter(|&id| a.missing_parents(id) > 0)
        .filter_map(|id| a.get(id).map(|s| (id, s)))
        .collect();
    if findings.is_empty() {
        return Err(Error::NoFindingsAtLevel(level));
    }
    Ok(Subproblem::new(net, findings, a.values()))
}

/// The subproblem that extends `a` next, or `None` once `a` is complete.
///
/// Normally this is the deepest level with an assigned node whose parents
/// are not all assigned. If no assigned node has an unassigned parent but
/// nodes remain unassigned (a queried node with no observed descendant, or
/// no evidence at all), the unassigned sinks are assigned first as a
/// subproblem without findings.
pub fn next_subproblem(net: &Network, a: &Assignment) -> Option<Subproblem> {
    if a.is_complete() {
        return None;
    }
    if let Some(level) = a.frontier_level(net) {
        return Some(build_subproblem(net, a, level).expect("frontier level has findings"));
    }
    let sinks: Vec<NodeId> = (0..net.len())
        .filter(|&id| !a.is_assigned(id) && net.children(id).is_empty())
        .collect();
    Some(Subproblem {
        findings: Vec::new(),
        free_parents: sinks,
        fixed_parents: Vec::new(),
    })
}

#[derive(Clone, Copy)]
enum LinkRef {
    /// Parent already assigned; carries `1 - q` when it is present.
    Fixed(Option<f64>),
    /// `(free parent index, 1 - q)`.
    Free(usize, f64),
}

struct FindingTerm {
    present: bool,
    leak: f64,
    /// Range into `Plan::links`, in the node's own link order so a complete
    /// assignment reproduces the CPT computation exactly.
    links: (usize, usize),
}

/// Numeric form of a subproblem: everything the search touches, with node
/// ids replaced by positions in the free-parent order.
struct Plan {
    findings: Vec<FindingTerm>,
    links: Vec<LinkRef>,
    priors: Vec<Option<f64>>,
    /// Findings linked to free parent `i` are
    /// `affected[affected_start[i]..affected_start[i + 1]]`.
    affected_start: Vec<usize>,
    affected: Vec<usize>,
}

impl Plan {
    fn new(net: &Network, sub: &Subproblem) -> Plan {
        const NONE: u32 = u32::MAX;
        let mut position = vec![NONE; net.len()];
        for (i, &p) in sub.free_parents.iter().enumerate() {
            position[p] = i as u32;
        }
        let mut fixed_present = vec![false; net.len()];
        let mut fixed_known = vec![false; net.len()];
        for &(p, s) in &sub.fixed_parents {
            fixed_known[p] = true;
            fixed_present[p] = s.is_present();
        }
        let mut links = Vec::new();
        let mut counts = vec![0usize; sub.free_parents.len() + 1];
        let findings = sub
            .findings
            .iter()
            .map(|&(f, state)| {
                let spec = net.node(f);
                let start = links.len();
                for link in spec.links() {
                    let p = link.parent;
                    links.push(if position[p] != NONE {
                        counts[position[p] as usize + 1] += 1;
                        LinkRef::Free(position[p] as usize, 1.0 - link.q)
                    } else {
                        assert!(fixed_known[p], "parent of a finding is neither free nor fixed");
                        LinkRef::Fixed(fixed_present[p].then_some(1.0 - link.q))
                    });
                }
                FindingTerm {
                    present: state.is_present(),
                    leak: spec.leak().unwrap_or(0.0),
                    links: (start, links.len()),
                }
            })
            .collect::<Vec<_>>();
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let affected_start = counts.clone();
        let mut affected = vec![0; counts[counts.len() - 1]];
        for (fi, f) in findings.iter().enumerate() {
            for link in &links[f.links.0..f.links.1] {
                if let LinkRef::Free(i, _) = *link {
                    affected[counts[i]] = fi;
                    counts[i] += 1;
                }
            }
        }
        let priors = sub.free_parents.iter().map(|&p| net.node(p).prior()).collect();
        Plan {
            findings,
            links,
            priors,
            affected_start,
            affected,
        }
    }

    /// Factor of finding `f` given the first `d` free parents; undecided
    /// parents are taken absent for an absent finding and present for a
    /// present one, which maximizes the factor either way.
    fn term(&self, f: usize, decided: &[State], d: usize) -> f64 {
        let finding = &self.findings[f];
        let mut absent = 1.0 - finding.leak;
        for &link in &self.links[finding.links.0..finding.links.1] {
            match link {
                LinkRef::Fixed(Some(not_q)) => absent *= not_q,
                LinkRef::Fixed(None) => {}
                LinkRef::Free(i, not_q) => {
                    let on = if i < d {
                        decided[i].is_present()
                    } else {
                        finding.present
                    };
                    if on {
                        absent *= not_q;
                    }
                }
            }
        }
        if finding.present {
            1.0 - absent
        } else {
            absent
        }
    }

    fn affected(&self, i: usize) -> &[usize] {
        &self.affected[self.affected_start[i]..self.affected_start[i + 1]]
    }

    /// Combines per-finding factors with the root priors: decided roots at
    /// their prior, undecided ones at the larger of `p` and `1 - p`.
    fn combine(&self, terms: &[f64], decided: &[State]) -> f64 {
        let mut b = 1.0;
        for &t in terms {
            b *= t;
        }
        if b == 0.0 {
            return 0.0;
        }
        let d = decided.len();
        for (i, prior) in self.priors.iter().enumerate() {
            if let Some(p) = *prior {
                b *= if i < d {
                    prior_factor(p, decided[i])
                } else {
                    p.max(1.0 - p)
                };
            }
        }
        b
    }

    /// Bound on the product over all completions of `decided`, which covers
    /// a prefix of the free parents. Exact when `decided` is complete.
    fn bound(&self, decided: &[State]) -> f64 {
        let terms: Vec<f64> = (0..self.findings.len())
            .map(|f| self.term(f, decided, decided.len()))
            .collect();
        self.combine(&terms, decided)
    }
}

/// Upper bound on the new factor product of every completion of `decided`
/// (a prefix of `sub.free_parents`, in order).
pub fn upper_bound(net: &Network, sub: &Subproblem, decided: &[State]) -> f64 {
    Plan::new(net, sub).bound(decided)
}

/// New factor product of a full parent assignment (`states` aligned with
/// `sub.free_parents`), computed directly from the CPTs.
pub fn new_factor_product(net: &Network, sub: &Subproblem, states: &[State]) -> f64 {
    let mut known: Vec<Option<State>> = vec![None; net.len()];
    for &(p, s) in &sub.fixed_parents {
        known[p] = Some(s);
    }
    for (&p, &s) in sub.free_parents.iter().zip(states) {
        known[p] = Some(s);
    }
    let mut product = 1.0;
    for &(f, s) in &sub.findings {
        product *= net.cpt_probability(f, s, &known).expect("finding parents are assigned");
    }
    for (&p, &s) in sub.free_parents.iter().zip(states) {
        if let Some(prior) = net.node(p).prior() {
            product *= prior_factor(prior, s);
        }
    }
    product
}

/// Lazy depth-first enumeration of the extensions of one subproblem.
pub struct EpsilonMl {
    plan: Plan,
    /// Current factor of each finding under `decided`.
    terms: Vec<f64>,
    free: Vec<NodeId>,
    epsilon: f64,
    prune_below: f64,
    decided: Vec<State>,
    second_tried: Vec<bool>,
    last_bound: f64,
    started: bool,
    done: bool,
    visited: u64,
}

impl EpsilonMl {
    pub fn new(net: &Network, sub: &Subproblem, epsilon: f64) -> EpsilonMl {
        let plan = Plan::new(net, sub);
        let terms = (0..plan.findings.len()).map(|f| plan.term(f, &[], 0)).collect();
        EpsilonMl {
            plan,
            terms,
            free: sub.free_parents.clone(),
            epsilon,
            prune_below: epsilon * (1.0 - PRUNE_SLACK),
            decided: Vec::with_capacity(sub.free_parents.len()),
            second_tried: Vec::with_capacity(sub.free_parents.len()),
            last_bound: 0.0,
            started: false,
            done: false,
            visited: 0,
        }
    }

    /// Search nodes whose bound has been evaluated so far.
    pub fn visited(&self) -> u64 {
        self.visited
    }

    fn evaluate(&mut self) -> bool {
        self.visited += 1;

        self.last_bound = self.plan.combine(&self.terms, &self.decided);
        self.last_bound >= self.prune_below
    }

    /// Refreshes the findings of free parent `i` after its decision changed.
    fn refresh(&mut self, i: usize) {
        let d = self.decided.len();
        for &f in self.plan.affected(i) {
            self.terms[f] = self.plan.term(f, &self.decided, d);
        }
    }

    fn set(&mut self, i: usize, s: State) {
        self.decided[i] = s;
        self.refresh(i);
    }

    fn pop(&mut self) {
        self.decided.pop();
        self.second_tried.pop();
        let i = self.decided.len();
        self.refresh(i);
    }

    /// Decides the next free parent with its preferred state first.
    fn push_first(&mut self) -> bool {
        let i = self.decided.len();
        let first = match self.plan.priors[i] {
            None => State::Present,
            Some(_) => {
                self.decided.push(State::Present);
                self.refresh(i);
                let present = self.plan.combine(&self.terms, &self.decided);
                self.set(i, State::Absent);
                let absent = self.plan.combine(&self.terms, &self.decided);
                self.decided.pop();
                if present >= absent {
                    State::Present
                } else {
                    State::Absent
                }
            }
        };
        self.decided.push(first);
        self.second_tried.push(false);
        self.refresh(i);
        self.evaluate()
    }

    /// Moves to the next unexplored sibling (or ancestor's sibling) whose
    /// bound passes. Returns false when the search is exhausted.
    fn advance(&mut self) -> bool {
        while let Some(&tried) = self.second_tried.last() {
            if tried {
                self.pop();
                continue;
            }
            let i = self.decided.len() - 1;
            self.second_tried[i] = true;
            let flipped = self.decided[i].flip();
            self.set(i, flipped);
            if self.evaluate() {
                return true;
            }
        }
        false
    }

    fn finish(&mut self) -> Option<Extension> {
        self.done = true;
        None
    }
}

impl Iterator for EpsilonMl {
    type Item = Extension;

    fn next(&mut self) -> Option<Extension> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if !self.evaluate() {
                return self.finish();
            }
        } else if !self.advance() {
            return self.finish();
        }
        loop {
            if self.decided.len() == self.free.len() {
                if self.last_bound >= self.epsilon {
                    return Some(Extension {
                        parent_states: self.free.iter().copied().zip(self.decided.iter().copied()).collect(),
                        new_factor_product: self.last_bound,
                    });
                }
                if !self.advance() {
                    return self.finish();
                }
                continue;
            }
            if !self.push_first() && !self.advance() {
                return self.finish();
            }
        }
    }
}

/// All extensions with new factor product `>= epsilon`, in search order.
pub fn epsilon_ml(net: &Network, sub: &Subproblem, epsilon: f64) -> Vec<Extension> {
    EpsilonMl::new(net, sub, epsilon).collect()
}
