#![allow(dead_code)]

use std::collections::BTreeSet;

use nobn_core::model::{Evidence, Network, State};
use nobn_core::netgen::{forward_sample, gen_network, NetShape, SeededRng};

/// A random network of 2 to 5 levels and at most 16 nodes, with evidence
/// on a random subset of nodes at any level, taken from a forward sample so
/// it is always possible. Parameter ranges vary with the seed to reach
/// zero leaks and near-deterministic links.
pub fn random_case(seed: u64) -> (Network, Evidence) {
    let mut rng = SeededRng::new(seed ^ 0x5eed_5eed);
    let levels = 2 + rng.index(4);
    let mut sizes: Vec<usize> = (0..levels).map(|_| 1 + rng.index(4)).collect();
    while sizes.iter().sum::<usize>() > 16 {
        let i = sizes.iter().position(|&s| s > 1).unwrap();
        sizes[i] -= 1;
    }
    let (q_range, leak_range) = match seed % 4 {
        0 => ((0.2, 0.95), (0.0, 0.05)),
        1 => ((0.9, 1.0), (0.0, 0.001)),
        2 => ((0.01, 0.99), (0.0, 0.0)),
        _ => ((0.3, 0.7), (0.1, 0.5)),
    };
    let shape = NetShape {
        nodes_per_level: sizes,
        max_parents: 1 + rng.index(3),
        prior_range: (0.01, 0.5),
        q_range,
        leak_range,
        hidden_leak_range: leak_range,
        seed,
        ..NetShape::default()
    };
    let net = gen_network(&shape).unwrap();
    let truth = forward_sample(&net, seed);
    let mut items = Vec::new();
    for (id, &state) in truth.iter().enumerate() {
        // Deepest-level nodes are observed more often than hidden ones.
        let p = if net.level(id) == net.max_level() { 0.6 } else { 0.2 };
        if rng.unit() < p {
            items.push((id, state));
        }
    }
    let ev = Evidence::new(&net, items).unwrap();
    (net, ev)
}

/// Log-uniform in `[lo, hi]`.
pub fn log_uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.uniform((lo.log10(), hi.log10())))
}

pub type Key = Vec<bool>;

pub fn key(states: &[State]) -> Key {
    states.iter().map(|s| s.is_present()).collect()
}

pub fn key_set(list: &[(Vec<State>, f64)]) -> BTreeSet<Key> {
    list.iter().map(|(s, _)| key(s)).collect()
}

pub const CHAIN3: &str = "node A prior 0.2\nnode B leak 0.1 parents A:0.8\nnode C leak 0.05 parents B:0.9\n";

use nobn_core::eml::Subproblem;
use nobn_core::model::{Link, NodeSpec};

/// A random two-level subproblem: up to 10 root parents, up to 10
/// observed findings with up to 4 parents each, and some parents already
/// assigned.
pub fn random_subproblem(seed: u64) -> (Network, Subproblem) {
    let mut rng = SeededRng::new(seed ^ 0xe41);
    let k = 1 + rng.index(10);
    let m = 1 + rng.index(10);
    let near_deterministic = seed.is_multiple_of(3);
    let mut nodes: Vec<NodeSpec> = (0..k)
        .map(|i| NodeSpec::root(format!("D{i}"), rng.uniform((0.001, 0.6))))
        .collect();
    for j in 0..m {
        let fan = 1 + rng.index(k.min(4));
        let mut parents: Vec<usize> = (0..k).collect();
        for i in 0..fan {
            let s = i + rng.index(k - i);
            parents.swap(i, s);
        }
        let links = parents[..fan]
            .iter()
            .map(|&p| Link {
                parent: p,
                q: if near_deterministic {
                    rng.uniform((0.99, 1.0))
                } else {
                    rng.uniform((0.05, 0.95))
                },
            })
            .collect();
        let leak = if rng.index(3) == 0 {
            0.0
        } else {
            rng.uniform((0.0, 0.2))
        };
        nodes.push(NodeSpec::non_root(format!("F{j}"), leak, links));
    }
    let net = Network::new(nodes).unwrap();
    let mut known = vec![None; net.len()];
    for slot in known.iter_mut().take(k) {
        if rng.unit() < 0.2 {
            *slot = Some(State::from_present(rng.unit() < 0.5));
        }
    }
    let findings: Vec<(usize, State)> = (k..k + m).map(|f| (f, State::from_present(rng.unit() < 0.5))).collect();
    for &(f, s) in &findings {
        known[f] = Some(s);
    }
    let sub = Subproblem::new(&net, findings, &known);
    (net, sub)
}

/// Every assignment of `n` binary states, absent first.
pub fn all_assignments(n: usize) -> Vec<Vec<State>> {
    (0..1u32 << n)
        .map(|bits| {
            (0..n)
                .map(|i| State::from_present(bits >> (n - 1 - i) & 1 == 1))
                .collect()
        })
        .collect()
}
