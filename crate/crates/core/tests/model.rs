mod common;

use std::collections::VecDeque;

use common::*;
use nobn_core::exact::{enumerate_consistent, exact_inference};
use nobn_core::model::{label_levels, nps_holds, parse_network, print_network, Evidence, Network};
use nobn_core::netgen::{forward_sample, gen_network, NetShape};

/// Repeated breadth-first relabeling from the roots: a node keeps the
/// label it got last.
fn bfs_levels(net: &Network) -> Vec<usize> {
    let mut label = vec![0; net.len()];
    let mut queue: VecDeque<usize> = (0..net.len()).filter(|&i| net.is_root(i)).collect();
    while let Some(u) = queue.pop_front() {
        for &c in net.children(u) {
            label[c] = label[u] + 1;
            queue.push_back(c);
        }
    }
    label
}

#[test]
fn longest_path_matches_bfs_relabeling() {
    for seed in 0..200 {
        let (net, _) = random_case(seed);
        let (levels, max) = label_levels(&net);
        assert_eq!(levels, bfs_levels(&net), "seed {seed}");
        assert_eq!(Some(&max), levels.iter().max());
        for id in 0..net.len() {
            for p in net.parents(id) {
                assert!(levels[p] < levels[id]);
            }
        }
    }
}

#[test]
fn generated_levels_are_layer_indices() {
    for seed in 0..10 {
        let shape = NetShape {
            seed,
            ..NetShape::default()
        };
        let net = gen_network(&shape).unwrap();
        let mut id = 0;
        for (layer, &n) in shape.nodes_per_level.iter().enumerate() {
            for _ in 0..n {
                assert_eq!(net.level(id), layer);
                id += 1;
            }
        }
    }
}

#[test]
fn joints_sum_to_one() {
    for seed in 0..100 {
        let (net, _) = random_case(seed);
        if net.len() > 12 {
            continue;
        }
        let total: f64 = enumerate_consistent(&net, &Evidence::empty(), 12)
            .unwrap()
            .map(|(_, j)| j)
            .sum();
        assert!((total - 1.0).abs() <= 1e-12, "seed {seed}");
    }
}

#[test]
fn negative_product_synergy_on_generated_nodes() {
    let mut shapes: Vec<NetShape> = (0..10)
        .map(|seed| NetShape {
            seed,
            ..NetShape::default()
        })
        .collect();
    shapes.extend((0..10).map(NetShape::bn3));
    let mut checked = 0;
    for shape in shapes {
        let net = gen_network(&shape).unwrap();
        for id in 0..net.len() {
            let node = net.node(id);
            let links = node.links();
            if links.len() < 2 || node.leak().unwrap() >= 1.0 || links.iter().any(|l| l.q <= 0.0 || l.q >= 1.0) {
                continue;
            }
            for (i, a) in links.iter().enumerate() {
                for b in &links[i + 1..] {
                    let [ab, nn, an, na] = net.restricted_cpt(id, a.parent, b.parent).unwrap();
                    assert!(nps_holds(ab, nn, an, na), "node {}", net.name(id));
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn forward_samples_match_chain3_marginal() {
    let net = parse_network(CHAIN3).unwrap();
    let n = 100_000;
    let hits = (0..n).filter(|&s| forward_sample(&net, s)[2].is_present()).count();
    let p = 0.25862;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let observed = hits as f64 / n as f64;
    assert!((observed - p).abs() <= 3.0 * sigma, "{observed} vs {p}");
}

#[test]
fn forward_samples_match_oracle_marginals() {
    for seed in [1, 2, 3] {
        let (net, _) = random_case(seed);
        let exact = exact_inference(&net, &Evidence::empty(), 24).unwrap();
        let n = 20_000u64;
        let mut counts = vec![0u64; net.len()];
        for s in 0..n {
            for (id, st) in forward_sample(&net, seed * 1_000_000 + s).iter().enumerate() {
                counts[id] += st.is_present() as u64;
            }
        }
        for (id, (&p, &count)) in exact.posteriors.iter().zip(&counts).enumerate() {
            let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
            let observed = count as f64 / n as f64;
            assert!(
                (observed - p).abs() <= 4.0 * sigma,
                "seed {seed} node {id}: {observed} vs {p}"
            );
        }
    }
}

#[test]
fn printed_networks_parse_back() {
    for seed in 0..50 {
        let (net, _) = random_case(seed);
        assert_eq!(parse_network(&print_network(&net)).unwrap(), net);
    }
}
