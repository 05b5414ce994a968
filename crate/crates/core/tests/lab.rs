mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use sigatlas_core::lab::paired::{average_ranks, sign_test_p, wilcoxon_signed_rank_p};
use sigatlas_core::lab::{
    degree_preserving_rewire, mutual_knn_densify, paired_stats, paired_stats_from_deltas, EffectSize, RewireMethod,
};

/// Two-sided p by enumerating all sign assignments of the ranked magnitudes.
fn brute_wilcoxon(deltas: &[f64]) -> f64 {
    let nz: Vec<f64> = deltas.iter().copied().filter(|&d| d != 0.0).collect();
    if nz.is_empty() {
        return 1.0;
    }
    let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_obs: f64 = ranks.iter().zip(&nz).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();
    let m = nz.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= w_obs + 1e-9 {
            le += 1;
        }
        if w >= w_obs - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << m) as f64;
    (2.0 * (le.min(ge) as f64 / total)).min(1.0)
}

fn brute_sign(pos: usize, neg: usize) -> f64 {
    let n = pos + neg;
    let choose = |k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let total = 2f64.powi(n as i32);
    let lower: f64 = (0..=pos).map(choose).sum::<f64>() / total;
    let upper: f64 = (pos..=n).map(choose).sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn degrees(edges: &[(usize, usize)]) -> BTreeMap<usize, usize> {
    let mut d = BTreeMap::new();
    for &(u, v) in edges {
        *d.entry(u).or_insert(0) += 1;
        *d.entry(v).or_insert(0) += 1;
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wilcoxon_matches_enumeration(deltas in prop::collection::vec(-4i32..=4, 1..11)) {
        let d: Vec<f64> = deltas.iter().map(|&v| v as f64 * 0.5).collect();
        let p = wilcoxon_signed_rank_p(&d);
        prop_assert!((p - brute_wilcoxon(&d)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn sign_test_matches_binomial(pos in 0usize..25, neg in 0usize..25) {
        prop_assume!(pos + neg > 0);
        prop_assert!((sign_test_p(pos, neg) - brute_sign(pos, neg)).abs() < 1e-12);
        prop_assert_eq!(sign_test_p(pos, neg), sign_test_p(neg, pos));
    }

    #[test]
    fn paired_stats_are_antisymmetric(a in prop::collection::vec(0.0f64..1.0, 2..12), shift in -0.1f64..0.1) {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let ab = paired_stats(&a, &b).unwrap();
        let ba = paired_stats(&b, &a).unwrap();
        prop_assert_eq!(ab.wins, ba.losses);
        prop_assert!((ab.mean + ba.mean).abs() < 1e-9);
        prop_assert_eq!(ab.sign_p, ba.sign_p);
        prop_assert!((ab.wilcoxon_p - ba.wilcoxon_p).abs() < 1e-12);
    }

    #[test]
    fn mutual_knn_matches_brute_force(seed in any::<u64>(), n in 3usize..25, d in 1usize..5, k in 1usize..4) {
        prop_assume!(k < n);
        let mut x = gaussian(&mut rng(seed), n, d);
        x.row_mut(0).fill(0.0);
        let got = mutual_knn_densify(x.view(), k, &[]).unwrap();
        prop_assert_eq!(got, brute_mutual_knn(&x, k));
    }

    #[test]
    fn rewire_preserves_degrees(seed in any::<u64>(), n in 6usize..40, p in 0.1f64..0.5, fraction in 0.0f64..0.5) {
        let edges = random_edges(&mut rng(seed), n, p);
        prop_assume!(edges.len() >= 2);
        let out = degree_preserving_rewire(&edges, fraction, seed, 0.15).unwrap();
        let set: BTreeSet<(usize, usize)> = out.edges.iter().copied().collect();
        prop_assert_eq!(set.len(), out.edges.len());
        prop_assert!(out.edges.iter().all(|&(u, v)| u < v));
        match out.method {
            RewireMethod::DoubleEdgeSwap => {
                prop_assert_eq!(degrees(&out.edges), degrees(&edges));
                prop_assert_eq!(out.swaps_done, out.swaps_target);
                prop_assert!(out.attempts <= 100 * edges.len());
            }
            RewireMethod::UniformDropout => {
                prop_assert_eq!(out.edges.len(), (0.85 * edges.len() as f64).floor() as usize);
                let original: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
                prop_assert!(set.is_subset(&original));
            }
        }
    }
}

#[test]
fn rewire_is_seed_deterministic() {
    let edges = random_edges(&mut rng(8), 30, 0.2);
    let a = degree_preserving_rewire(&edges, 0.2, 42, 0.15).unwrap();
    let b = degree_preserving_rewire(&edges, 0.2, 42, 0.15).unwrap();
    let c = degree_preserving_rewire(&edges, 0.2, 43, 0.15).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.edges, c.edges);
}

#[test]
fn star_graph_cannot_swap_and_falls_back() {
    let edges: Vec<(usize, usize)> = (1..21).map(|v| (0, v)).collect();
    let out = degree_preserving_rewire(&edges, 0.2, 1, 0.15).unwrap();
    assert_eq!(out.method, RewireMethod::UniformDropout);
    assert_eq!(out.edges.len(), 17);
    assert_eq!(out.attempts, 100 * 20);
}

#[test]
fn densify_keeps_base_edges() {
    let x = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, 0.9, 0.1, 0.0, 1.0, 0.1, 0.9]).unwrap();
    let out = mutual_knn_densify(x.view(), 1, &[(3, 0)]).unwrap();
    assert_eq!(out, vec![(0, 1), (0, 3), (2, 3)]);
    assert!(mutual_knn_densify(x.view(), 4, &[]).is_err());
    assert!(mutual_knn_densify(x.view(), 1, &[(0, 9)]).is_err());
}

#[test]
fn paired_edge_cases() {
    let zero = paired_stats_from_deltas(&[0.0, 0.0, 0.0]).unwrap();
    assert!(zero.all_zero);
    assert_eq!((zero.sign_p, zero.wilcoxon_p), (1.0, 1.0));
    assert_eq!(zero.d_z, EffectSize::Undefined);

    let constant = paired_stats_from_deltas(&[0.5, 0.5, 0.5]).unwrap();
    assert_eq!(constant.d_z, EffectSize::PositiveInfinite);
    let negative = paired_stats_from_deltas(&[-0.5, -0.5]).unwrap();
    assert_eq!(negative.d_z, EffectSize::NegativeInfinite);

    let single = paired_stats_from_deltas(&[1.0]).unwrap();
    assert!(single.t_p.is_none() && single.ci95.is_none());

    assert!(paired_stats_from_deltas(&[]).is_err());
    assert!(paired_stats(&[0.5], &[0.5, 0.6]).is_err());
    let r = paired_stats(&[0.80, 0.75], &[0.78, 0.75]).unwrap();
    assert!((r.deltas[0] - 2.0).abs() < 1e-12);
    assert_eq!((r.wins, r.ties), (1, 1));
}
