use super::{Network, NodeId, NodeSpec};

/// Level of a node = number of arcs on the longest path from any root.
/// Returns the labels and the maximum label (0 for an empty network).
pub fn label_levels(net: &Network) -> (Vec<usize>, usize) {
    (net.levels().to_vec(), net.max_level())
}

pub(super) fn longest_path_levels(nodes: &[NodeSpec], topo_order: &[NodeId]) -> (Vec<usize>, usize) {
    let mut levels = vec![0usize; nodes.len()];
    for &id in topo_order {
        levels[id] = nodes[id]
            .links()
            .iter()
            .map(|l| levels[l.parent] + 1)
            .max()
            .unwrap_or(0);
    }
    let max = levels.iter().copied().max().unwrap_or(0);
    (levels, max)
}
