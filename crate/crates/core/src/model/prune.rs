use super::{Evidence, Link, Network, NodeId, NodeKind, NodeSpec};
use crate::error::Result;

/// A network restricted to the ancestral closure of some node set, with the
/// id mapping back to the original network.
#[derive(Debug, Clone)]
pub struct PrunedNetwork {
    pub network: Network,
    /// `original_ids[new_id]` is the node's id in the source network.
    pub original_ids: Vec<NodeId>,
    new_ids: Vec<Option<NodeId>>,
}

impl PrunedNetwork {
    pub fn new_id(&self, original: NodeId) -> Option<NodeId> {
        self.new_ids.get(original).copied().flatten()
    }

    /// Evidence re-expressed in pruned ids. Every evidence node is retained
    /// by construction.
    pub fn map_evidence(&self, ev: &Evidence) -> Result<Evidence> {
        let items = ev
            .items()
            .iter()
            .map(|&(id, s)| (self.new_id(id).expect("evidence nodes are retained"), s))
            .collect();
        Evidence::new(&self.network, items)
    }
}

/// Drops every node that is not evidence, not queried, and not an ancestor
/// of either. Posteriors of retained nodes are unchanged. Relative id order
/// is preserved.
pub fn prune_barren(net: &Network, ev: &Evidence, query: &[NodeId]) -> PrunedNetwork {
    let mut keep = vec![false; net.len()];
    let mut stack: Vec<NodeId> = ev.node_ids().chain(query.iter().copied()).collect();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut keep[id], true) {
            continue;
        }
        stack.extend(net.parents(id).filter(|&p| !keep[p]));
    }
    let mut new_ids = vec![None; net.len()];
    let mut original_ids = Vec::new();
    for id in (0..net.len()).filter(|&i| keep[i]) {
        new_ids[id] = Some(original_ids.len());
        original_ids.push(id);
    }
    let nodes = original_ids
        .iter()
        .map(|&id| {
            let spec = net.node(id);
            let kind = match &spec.kind {
                NodeKind::Root { prior } => NodeKind::Root { prior: *prior },
                NodeKind::NonRoot { leak, links } => NodeKind::NonRoot {
                    leak: *leak,
                    links: links
                        .iter()
                        .map(|l| Link {
                            parent: new_ids[l.parent].expect("ancestors are retained"),
                            q: l.q,
                        })
                        .collect(),
                },
            };
            NodeSpec {
                name: spec.name.clone(),
                kind,
            }
        })
        .collect();
    let network = Network::new(nodes).expect("a sub-DAG of a valid network is valid");
    PrunedNetwork {
        network,
        original_ids,
        new_ids,
    }
}
