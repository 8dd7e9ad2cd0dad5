mod common;

use std::collections::HashMap;

use common::*;
use nobn_core::engine::{infer, run_schedule, top_epsilon, top_epsilon_with, EpsilonSchedule, SearchOptions};
use nobn_core::exact::{exact_inference, instantiations_above, DEFAULT_FREE_NODE_CAP};
use nobn_core::model::{parse_evidence, parse_network, prune_barren, Evidence};
use nobn_core::netgen::{gen_network, make_case, NetShape, SeededRng};
use nobn_core::topdown::mass_above;

#[test]
fn accepted_sets_match_the_oracle() {
    let mut rng = SeededRng::new(11);
    for seed in 0..60 {
        let (net, ev) = random_case(seed);
        for _ in 0..4 {
            let eps = log_uniform(&mut rng, 1e-16, 1e-1);
            let want = instantiations_above(&net, &ev, eps, DEFAULT_FREE_NODE_CAP).unwrap();
            let got = top_epsilon(&net, &ev, eps, true).unwrap();
            let got = got.accepted.unwrap();
            assert_eq!(key_set(&got), key_set(&want), "seed {seed} eps {eps:e}");
            let joints: HashMap<Key, f64> = want.iter().map(|(s, j)| (key(s), *j)).collect();
            for (s, j) in &got {
                assert!((j - joints[&key(s)]).abs() <= 1e-12, "seed {seed}");
            }
        }
    }
}

#[test]
fn epsilon_zero_is_exact() {
    for seed in 0..60 {
        let (net, ev) = random_case(seed);
        let exact = exact_inference(&net, &ev, DEFAULT_FREE_NODE_CAP).unwrap();
        let r = top_epsilon(&net, &ev, 0.0, false).unwrap();
        assert!((r.mass_accumulated - exact.evidence_probability).abs() <= 1e-12);
        let post = r.posterior_estimates().unwrap();
        for (id, (p, q)) in post.iter().zip(&exact.posteriors).enumerate() {
            assert!((p - q).abs() <= 1e-9, "seed {seed} node {id}");
        }
    }
}

#[test]
fn barren_pruning_keeps_posteriors() {
    for seed in 100..140 {
        let (net, ev) = random_case(seed);
        let exact = exact_inference(&net, &ev, DEFAULT_FREE_NODE_CAP).unwrap();
        let query: Vec<usize> = (0..net.len()).filter(|id| id % 3 == 0).collect();
        let inf = infer(&net, &ev, &query, 0.0, SearchOptions::default()).unwrap();
        assert!((inf.result.mass_accumulated - exact.evidence_probability).abs() <= 1e-12);
        for &q in &query {
            let p = inf.posterior(q).expect("query nodes survive pruning");
            assert!((p - exact.posteriors[q]).abs() <= 1e-9, "seed {seed} node {q}");
        }
        for id in 0..net.len() {
            if let Some(p) = inf.posterior(id) {
                assert!((p - exact.posteriors[id]).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn results_shrink_as_epsilon_grows() {
    let schedule = [1e-1, 1e-2, 1e-3, 1e-5, 1e-8, 1e-12, 0.0];
    for seed in 0..40 {
        let (net, ev) = random_case(seed);
        let runs: Vec<_> = schedule
            .iter()
            .map(|&e| top_epsilon(&net, &ev, e, true).unwrap())
            .collect();
        for w in runs.windows(2) {
            let (big, small) = (&w[0], &w[1]);
            assert!(key_set(big.accepted.as_ref().unwrap()).is_subset(&key_set(small.accepted.as_ref().unwrap())));
            assert!(big.mass_accumulated <= small.mass_accumulated);
            assert!(big.accepted_count <= small.accepted_count);
            for id in 0..net.len() {
                assert!(big.score[id] <= small.score[id]);
            }
        }
    }
}

#[test]
fn top_down_enumerator_agrees_with_the_search() {
    for seed in 0..40 {
        let (net, ev) = random_case(seed);
        for eps in [1e-2, 1e-6, 1e-10, 0.0] {
            let a = top_epsilon(&net, &ev, eps, false).unwrap();
            let b = mass_above(&net, &ev, eps, None).unwrap();
            assert_eq!(a.accepted_count, b.accepted_count, "seed {seed} eps {eps:e}");
            assert!((a.mass_accumulated - b.mass).abs() <= 1e-15 * a.mass_accumulated.max(1e-300) + 1e-300);
        }
    }
    // Larger networks, past the reach of brute force.
    let net = gen_network(&NetShape::bn3(4)).unwrap();
    for c in 0..3 {
        let case = make_case(&net, c, 26).unwrap();
        let p = prune_barren(&net, &case.evidence, &[]);
        let ev = p.map_evidence(&case.evidence).unwrap();
        for eps in [1e-4, 1e-8] {
            let a = top_epsilon(&p.network, &ev, eps, false).unwrap();
            let b = mass_above(&p.network, &ev, eps, None).unwrap();
            assert_eq!(a.accepted_count, b.accepted_count);
            assert!((a.mass_accumulated - b.mass).abs() <= 1e-12 * a.mass_accumulated);
        }
    }
}

#[test]
fn audit_finds_no_violations() {
    for seed in 0..30 {
        let (net, ev) = random_case(seed);
        let options = SearchOptions {
            audit: true,
            ..SearchOptions::default()
        };
        let r = top_epsilon_with(&net, &ev, 1e-6, options).unwrap();
        assert_eq!(r.audit_violations, 0, "seed {seed}");
    }
}

#[test]
fn chain3_schedule() {
    let net = parse_network(CHAIN3).unwrap();
    let ev = parse_evidence(&net, "C present\n").unwrap();
    let trace = run_schedule(&net, &ev, &EpsilonSchedule::parse("1e-2,1e-4").unwrap()).unwrap();
    assert!((trace.rows[0].mass_accumulated - 0.25682).abs() < 1e-12);
    assert!((trace.rows[1].mass_accumulated - 0.25862).abs() < 1e-12);
}

#[test]
fn impossible_evidence_accepts_nothing() {
    let net = parse_network("node A prior 0\nnode B leak 0 parents A:1\n").unwrap();
    let ev = Evidence::from_names(&net, &[("B", nobn_core::model::State::Present)]).unwrap();
    // At epsilon 0 the zero-joint instantiations still satisfy joint >= 0.
    let r = top_epsilon(&net, &ev, 0.0, true).unwrap();
    assert!(r.accepted.unwrap().iter().all(|(_, j)| *j == 0.0));
    assert_eq!(
        mass_above(&net, &ev, 0.0, None).unwrap().accepted_count,
        r.accepted_count
    );
    let r = top_epsilon(&net, &ev, 1e-300, false).unwrap();
    assert_eq!(r.accepted_count, 0);
    assert_eq!(r.mass_accumulated, 0.0);
    assert!(r.posterior_estimates().is_none());
}
