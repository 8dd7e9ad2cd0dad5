mod common;

use std::collections::BTreeMap;

use common::*;
use nobn_core::eml::{epsilon_ml, new_factor_product, upper_bound, Subproblem};
use nobn_core::model::{Link, Network, NodeSpec, State};
use nobn_core::netgen::SeededRng;

/// Checks the bound at every prefix against every completion; returns the
/// best completion product.
fn descend(net: &Network, sub: &Subproblem, prefix: &mut Vec<State>) -> f64 {
    let bound = upper_bound(net, sub, prefix);
    if prefix.len() == sub.free_parents.len() {
        let p = new_factor_product(net, sub, prefix);
        assert_eq!(bound, p, "complete bound is the product");
        return p;
    }
    let mut best: f64 = 0.0;
    for s in [State::Absent, State::Present] {
        prefix.push(s);
        best = best.max(descend(net, sub, prefix));
        prefix.pop();
    }
    assert!(bound >= best, "bound {bound:e} below completion {best:e}");
    best
}

#[test]
fn bound_dominates_every_completion() {
    for seed in 0..300 {
        let (net, sub) = random_subproblem(seed);
        descend(&net, &sub, &mut Vec::new());
    }
}

fn aligned(sub: &Subproblem, states: &[(usize, State)]) -> Vec<State> {
    let map: BTreeMap<usize, State> = states.iter().copied().collect();
    sub.free_parents.iter().map(|p| map[p]).collect()
}

#[test]
fn extensions_are_exactly_the_qualifying_assignments() {
    let mut rng = SeededRng::new(3);
    for seed in 0..300 {
        let (net, sub) = random_subproblem(seed);
        let all: Vec<(Vec<State>, f64)> = all_assignments(sub.free_parents.len())
            .into_iter()
            .map(|a| {
                let p = new_factor_product(&net, &sub, &a);
                (a, p)
            })
            .collect();
        for _ in 0..3 {
            let eps = log_uniform(&mut rng, 1e-12, 1.0);
            let want: BTreeMap<Vec<State>, f64> = all.iter().filter(|(_, p)| *p >= eps).cloned().collect();
            let got: BTreeMap<Vec<State>, f64> = epsilon_ml(&net, &sub, eps)
                .into_iter()
                .map(|e| (aligned(&sub, &e.parent_states), e.new_factor_product))
                .collect();
            assert_eq!(got, want, "seed {seed} eps {eps:e}");
        }
    }
}

#[test]
fn no_free_parents_gives_one_extension() {
    let net = Network::new(vec![
        NodeSpec::root("D", 0.3),
        NodeSpec::non_root("F", 0.1, vec![Link { parent: 0, q: 0.9 }]),
    ])
    .unwrap();
    let known = [Some(State::Present), Some(State::Present)];
    let sub = Subproblem::new(&net, vec![(1, State::Present)], &known);
    assert!(sub.free_parents.is_empty());
    let ext = epsilon_ml(&net, &sub, 0.5);
    assert_eq!(ext.len(), 1);
    assert!((ext[0].new_factor_product - 0.91).abs() < 1e-15);
    assert!(epsilon_ml(&net, &sub, 0.95).is_empty());
}

/// With only non-root free parents, ranking extensions by their product
/// equals ranking by the joint of a two-level copy whose parents are roots
/// with uniform priors.
#[test]
fn uniform_prior_ranking() {
    for seed in 0..100 {
        let (two, sub2) = random_subproblem(seed);
        let k = two.nodes().iter().filter(|n| n.is_root()).count();
        // Three-level copy: one grandparent above every parent.
        let mut nodes = vec![NodeSpec::root("G", 0.4)];
        for i in 0..k {
            nodes.push(NodeSpec::non_root(
                format!("D{i}"),
                0.05,
                vec![Link { parent: 0, q: 0.7 }],
            ));
        }
        for f in k..two.len() {
            let spec = two.node(f);
            let links = spec
                .links()
                .iter()
                .map(|l| Link {
                    parent: l.parent + 1,
                    q: l.q,
                })
                .collect();
            nodes.push(NodeSpec::non_root(spec.name.clone(), spec.leak().unwrap(), links));
        }
        let three = Network::new(nodes).unwrap();
        let mut known = vec![None; three.len()];
        let findings: Vec<(usize, State)> = sub2.findings.iter().map(|&(f, s)| (f + 1, s)).collect();
        for &(f, s) in &findings {
            known[f] = Some(s);
        }
        let sub3 = Subproblem::new(&three, findings, &known);

        let uniform = Network::new(
            (0..k)
                .map(|i| NodeSpec::root(format!("D{i}"), 0.5))
                .chain((k..two.len()).map(|f| two.node(f).clone()))
                .collect(),
        )
        .unwrap();
        let exts = epsilon_ml(&three, &sub3, 0.0);
        let mut by_product: Vec<(f64, Vec<bool>)> = Vec::new();
        let mut by_joint: Vec<(f64, Vec<bool>)> = Vec::new();
        for e in &exts {
            let mut states = vec![State::Absent; uniform.len()];
            for &(p, s) in &e.parent_states {
                states[p - 1] = s;
            }
            for &(f, s) in &sub2.findings {
                states[f] = s;
            }
            let tag: Vec<bool> = states.iter().map(|s| s.is_present()).collect();
            by_product.push((e.new_factor_product, tag.clone()));
            by_joint.push((uniform.joint(&states), tag));
        }
        let order = |v: &mut Vec<(f64, Vec<bool>)>| {
            v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            v.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>()
        };
        assert_eq!(order(&mut by_product), order(&mut by_joint), "seed {seed}");
    }
}
