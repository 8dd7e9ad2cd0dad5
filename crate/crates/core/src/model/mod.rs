//! Noisy-OR belief network model.
//!
//! A [`Network`] is an immutable DAG of binary nodes. Root nodes carry a
//! prior; every other node carries a leak and one link probability per
//! parent. The conditional probability of a non-root node is the leaky
//! noisy-OR:
//!
//! ```text
//! P(present | parents) = 1 - (1 - leak) * prod_{p present} (1 - q_p)
//! ```

mod assignment;
mod format;
mod levels;
mod prune;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use assignment::{joint_probability, partial_probability, Assignment, LOG_SPACE_FACTOR_THRESHOLD};
pub use format::{format_probability, parse_evidence, parse_network, print_evidence, print_network};
pub use levels::label_levels;
pub use prune::{prune_barren, PrunedNetwork};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Absent,
    Present,
}

impl State {
    pub fn is_present(self) -> bool {
        self == State::Present
    }

    pub fn from_present(present: bool) -> State {
        if present {
            State::Present
        } else {
            State::Absent
        }
    }

    pub fn flip(self) -> State {
        match self {
            State::Absent => State::Present,
            State::Present => State::Absent,
        }
    }

    /// One-letter tag used in instantiation dumps.
    pub fn tag(self) -> char {
        match self {
            State::Absent => 'a',
            State::Present => 'p',
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::Absent => "absent",
            State::Present => "present",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub parent: NodeId,
    /// Probability that `parent`, present alone, activates the child.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Root { prior: f64 },
    NonRoot { leak: f64, links: Vec<Link> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
}

impl NodeSpec {
    pub fn root(name: impl Into<String>, prior: f64) -> NodeSpec {
        NodeSpec {
            name: name.into(),
            kind: NodeKind::Root { prior },
        }
    }

    pub fn non_root(name: impl Into<String>, leak: f64, links: Vec<Link>) -> NodeSpec {
        NodeSpec {
            name: name.into(),
            kind: NodeKind::NonRoot { leak, links },
        }
    }

    pub fn is_root(&self) -> bool {
        matches!(self.kind, NodeKind::Root { .. })
    }

    pub fn prior(&self) -> Option<f64> {
        match self.kind {
            NodeKind::Root { prior } => Some(prior),
            NodeKind::NonRoot { .. } => None,
        }
    }

    pub fn leak(&self) -> Option<f64> {
        match self.kind {
            NodeKind::Root { .. } => None,
            NodeKind::NonRoot { leak, .. } => Some(leak),
        }
    }

    pub fn links(&self) -> &[Link] {
        match &self.kind {
            NodeKind::Root { .. } => &[],
            NodeKind::NonRoot { links, .. } => links,
        }
    }
}

/// Immutable noisy-OR network with precomputed children lists, a
/// topological order and level labels.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<NodeSpec>,
    name_index: HashMap<String, NodeId>,
    children: Vec<Vec<NodeId>>,
    topo_order: Vec<NodeId>,
    levels: Vec<usize>,
    level_members: Vec<Vec<NodeId>>,
    max_level: usize,
}

impl PartialEq for Network {
    fn eq(&self, other: &Network) -> bool {
        self.nodes == other.nodes
    }
}

impl Network {
    /// Validates `nodes` and builds the network. Node ids are positions in
    /// `nodes`; parents may be declared after their children as long as the
    /// parent relation is acyclic.
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Network> {
        let mut name_index = HashMap::with_capacity(nodes.len());
        for (id, node) in nodes.iter().enumerate() {
            if node.name.is_empty() {
                return Err(Error::InvalidNetwork(format!("node {id} has an empty name")));
            }
            if name_index.insert(node.name.clone(), id).is_some() {
                return Err(Error::DuplicateNode(node.name.clone()));
            }
        }
        let n = nodes.len();
        let mut children = vec![Vec::new(); n];
        for (id, node) in nodes.iter().enumerate() {
            match &node.kind {
                NodeKind::Root { prior } => check_probability(&node.name, *prior)?,
                NodeKind::NonRoot { leak, links } => {
                    check_probability(&node.name, *leak)?;
                    if links.is_empty() {
                        return Err(Error::InvalidNetwork(format!(
                            "non-root node `{}` has no parents",
                            node.name
                        )));
                    }
                    for (i, link) in links.iter().enumerate() {
                        if link.parent >= n {
                            return Err(Error::UnknownParent(format!("#{}", link.parent)));
                        }
                        check_probability(&node.name, link.q)?;
                        if links[..i].iter().any(|l| l.parent == link.parent) {
                            return Err(Error::DuplicateParent {
                                node: node.name.clone(),
                                parent: nodes[link.parent].name.clone(),
                            });
                        }
                        children[link.parent].push(id);
                    }
                }
            }
        }
        let topo_order = topological_order(&nodes, &children)?;
        let (levels, max_level) = levels::longest_path_levels(&nodes, &topo_order);
        let mut level_members = vec![Vec::new(); if n == 0 { 0 } else { max_level + 1 }];
        for (id, &l) in levels.iter().enumerate() {
            level_members[l].push(id);
        }
        Ok(Network {
            nodes,
            name_index,
            children,
            topo_order,
            levels,
            level_members,
            max_level,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id].name
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.name_index.get(name).copied()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    pub fn parents(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].links().iter().map(|l| l.parent)
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.nodes[id].is_root()
    }

    pub fn arc_count(&self) -> usize {
        self.nodes.iter().map(|n| n.links().len()).sum()
    }

    /// Parents precede children.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    pub fn level(&self, id: NodeId) -> usize {
        self.levels[id]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Nodes labelled `level`, by id.
    pub fn nodes_at_level(&self, level: usize) -> &[NodeId] {
        self.level_members.get(level).map_or(&[], Vec::as_slice)
    }

    /// Largest level label; the network has `max_level + 1` levels.
    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// `P(node = state | parents)` for a non-root node, or the prior factor
    /// for a root. `states` is indexed by node id.
    pub fn cpt_probability(&self, node: NodeId, state: State, states: &[Option<State>]) -> Result<f64> {
        let spec = &self.nodes[node];
        match &spec.kind {
            NodeKind::Root { prior } => Ok(prior_factor(*prior, state)),
            NodeKind::NonRoot { leak, links } => {
                let mut absent = 1.0 - leak;
                for link in links {
                    match states.get(link.parent).copied().flatten() {
                        Some(State::Present) => absent *= 1.0 - link.q,
                        Some(State::Absent) => {}
                        None => {
                            return Err(Error::MissingParentState {
                                node: spec.name.clone(),
                                parent: self.nodes[link.parent].name.clone(),
                            })
                        }
                    }
                }
                Ok(noisy_or_factor(absent, state))
            }
        }
    }

    /// Factor of `node` when the node and all its parents are assigned in
    /// `states`. Unassigned parents are an invariant violation.
    pub(crate) fn factor(&self, node: NodeId, state: State, states: &[Option<State>]) -> f64 {
        match &self.nodes[node].kind {
            NodeKind::Root { prior } => prior_factor(*prior, state),
            NodeKind::NonRoot { leak, links } => {
                let mut absent = 1.0 - leak;
                for link in links {
                    if states[link.parent]
                        .expect("factor requires assigned parents")
                        .is_present()
                    {
                        absent *= 1.0 - link.q;
                    }
                }
                noisy_or_factor(absent, state)
            }
        }
    }

    /// Product of every factor for a complete instantiation, in node id
    /// order.
    pub fn joint(&self, states: &[State]) -> f64 {
        assert_eq!(states.len(), self.len(), "instantiation length mismatch");
        let mut product = 1.0;
        for (id, spec) in self.nodes.iter().enumerate() {
            let f = match &spec.kind {
                NodeKind::Root { prior } => prior_factor(*prior, states[id]),
                NodeKind::NonRoot { leak, links } => {
                    let mut absent = 1.0 - leak;
                    for link in links {
                        if states[link.parent].is_present() {
                            absent *= 1.0 - link.q;
                        }
                    }
                    noisy_or_factor(absent, states[id])
                }
            };
            product *= f;
        }
        product
    }

    /// The four entries of `node`'s CPT restricted to parents `a` and `b`
    /// with every other parent absent, in the order
    /// `[P(C|A,B), P(C|~A,~B), P(C|A,~B), P(C|~A,B)]`.
    pub fn restricted_cpt(&self, node: NodeId, a: NodeId, b: NodeId) -> Option<[f64; 4]> {
        let NodeKind::NonRoot { leak, links } = &self.nodes[node].kind else {
            return None;
        };
        let qa = links.iter().find(|l| l.parent == a)?.q;
        let qb = links.iter().find(|l| l.parent == b)?.q;
        let p = |qs: &[f64]| 1.0 - (1.0 - leak) * qs.iter().map(|q| 1.0 - q).product::<f64>();
        Some([p(&[qa, qb]), p(&[]), p(&[qa]), p(&[qb])])
    }
}

/// Negative product synergy between two parents on a common child:
/// `P(C|A,B) P(C|~A,~B) < P(C|A,~B) P(C|~A,B)`, strictly.
pub fn nps_holds(p_ab: f64, p_notab_notb: f64, p_a_notb: f64, p_nota_b: f64) -> bool {
    p_ab * p_notab_notb < p_a_notb * p_nota_b
}

pub(crate) fn prior_factor(prior: f64, state: State) -> f64 {
    match state {
        State::Present => prior,
        State::Absent => 1.0 - prior,
    }
}

/// `absent` is the probability the node stays off, `(1-leak) * prod (1-q)`.
pub(crate) fn noisy_or_factor(absent: f64, state: State) -> f64 {
    match state {
        State::Present => 1.0 - absent,
        State::Absent => absent,
    }
}

fn check_probability(node: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            node: node.to_string(),
            value,
        })
    }
}

fn topological_order(nodes: &[NodeSpec], children: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let mut indegree: Vec<usize> = nodes.iter().map(|n| n.links().len()).collect();
    let mut ready: Vec<NodeId> = (0..nodes.len()).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(id) = ready.pop() {
        order.push(id);
        for &c in children[id].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() < nodes.len() {
        let stuck = (0..nodes.len()).find(|&i| indegree[i] > 0).unwrap();
        return Err(Error::Cycle(nodes[stuck].name.clone()));
    }
    Ok(order)
}

/// Observed node states. Ids are unique and valid for the network the
/// evidence was built against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    items: Vec<(NodeId, State)>,
}

impl Evidence {
    pub fn new(net: &Network, items: Vec<(NodeId, State)>) -> Result<Evidence> {
        let mut seen = vec![false; net.len()];
        for &(id, _) in &items {
            if id >= net.len() {
                return Err(Error::UnknownNode(format!("#{id}")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::DuplicateEvidence(net.name(id).to_string()));
            }
        }
        Ok(Evidence { items })
    }

    pub fn empty() -> Evidence {
        Evidence::default()
    }

    pub fn from_names(net: &Network, items: &[(&str, State)]) -> Result<Evidence> {
        let ids = items
            .iter()
            .map(|(name, s)| {
                net.id(name)
                    .map(|id| (id, *s))
                    .ok_or_else(|| Error::UnknownNode(name.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Evidence::new(net, ids)
    }

    pub fn items(&self) -> &[(NodeId, State)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn state_of(&self, id: NodeId) -> Option<State> {
        self.items.iter().find(|(n, _)| *n == id).map(|(_, s)| *s)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.items.iter().map(|(n, _)| *n)
    }
}

#[cfg(test)]
pub(crate) mod test_nets {
    use super::*;

    /// A prior 0.2; B leak 0.1, A:0.8; C leak 0.05, B:0.9.
    pub fn chain3() -> Network {
        parse_network(
            "node A prior 0.2\n\
             node B leak 0.1 parents A:0.8\n\
             node C leak 0.05 parents B:0.9\n",
        )
        .unwrap()
    }
}
