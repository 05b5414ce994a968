mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use sigatlas_core::atlas::{fingerprint, node_atlas, Quadrant};
use sigatlas_core::dictionary::{BlockSet, SignalDictionary};
use sigatlas_core::io::{read_features_binary, write_features_binary, ScaffoldSnapshot};
use sigatlas_core::lab::{run_variant, Variant};
use sigatlas_core::scaffold::{FisherRows, HyperConfig};
use sigatlas_core::search::{evaluate_repeats, grid_search, EvalOptions, Grids};
use sigatlas_core::split::{make_split, SplitMode, SplitSpec};
use sigatlas_core::stats::Conventions;

fn small_grids() -> Grids {
    Grids {
        k: vec![6, 20, 1000],
        r_max: vec![1, 3],
        eta: vec![0.9, 1.0],
        alpha_sets: vec![vec![0.1], vec![0.5, 5.0]],
        w: vec![0.0, 0.5, 1.0],
    }
}

fn split_nodes(seed: u64, n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng(seed));
    let (tr, rest) = nodes.split_at(n / 2);
    let (va, te) = rest.split_at(rest.len() / 2);
    (tr.to_vec(), va.to_vec(), te.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cached_search_equals_refitting(seed in any::<u64>(), c in 2usize..4, signal in 0.0f64..2.0) {
        let inst = Instance::random(seed, 36, 3, c, 0.15, signal);
        let dict = SignalDictionary::build(&inst.graph, inst.x.view(), &BlockSet::all()).unwrap();
        let (tr, va, _) = split_nodes(seed, 36);
        let (train, val) = (inst.labeled(&tr), inst.labeled(&va));
        let grids = small_grids();
        let conv = Conventions::default();
        let fast = grid_search(&dict, &train, &val, &grids, conv, FisherRows::Train).unwrap();
        let (cfg, slow) = naive_grid_search(&dict, &train, &val, &grids, conv);
        prop_assert_eq!(&fast.config, &cfg);
        prop_assert_eq!(fast.configs_evaluated, grids.len());
        let nodes: Vec<usize> = (0..36).collect();
        prop_assert_eq!(
            fast.scaffold.predict_nodes(&dict, &nodes).unwrap(),
            slow.predict_nodes(&dict, &nodes).unwrap()
        );
    }

    #[test]
    fn atlas_shares_and_quadrants_are_consistent(seed in any::<u64>()) {
        let inst = Instance::random(seed, 40, 4, 3, 0.1, 1.0);
        let dict = SignalDictionary::build(&inst.graph, inst.x.view(), &BlockSet::all()).unwrap();
        let (tr, _, te) = split_nodes(seed, 40);
        let cfg = HyperConfig { k: 12, r_max: 2, eta: 0.95, alphas: vec![0.1, 1.0], w: 0.5 };
        let sc = sigatlas_core::scaffold::fit_dictionary(&dict, &inst.labeled(&tr), &cfg, Conventions::default()).unwrap();
        let records = node_atlas(&sc, &dict, &inst.graph, &inst.labeled(&te)).unwrap();
        let pred = sc.predict_nodes(&dict, &te).unwrap();
        for (rec, &p) in records.iter().zip(&pred.labels) {
            prop_assert_eq!(rec.pred, p);
            let fam = rec.r_raw + rec.r_low + rec.r_high;
            let blocks: f64 = rec.block_shares.iter().sum();
            if rec.zero_evidence {
                prop_assert_eq!((fam, blocks), (0.0, 0.0));
            } else {
                prop_assert!((fam - 1.0).abs() < 1e-9 && (blocks - 1.0).abs() < 1e-9);
            }
            let expect = Quadrant::from_branches(rec.pred_pca == rec.label, rec.pred_ridge == rec.label);
            prop_assert_eq!(rec.quadrant, expect);
            prop_assert_eq!(rec.degree, inst.graph.degree(rec.node));
        }
        let fp = fingerprint(&records, &sc.subspaces).unwrap();
        prop_assert!((fp.quadrants.sum() - 1.0).abs() < 1e-12);
        prop_assert!((fp.r_d + fp.l_d + fp.h_d) <= 1.0 + 1e-9);
        prop_assert_eq!(fp.n_eval, te.len());
    }
}

#[test]
fn evaluate_repeats_is_deterministic() {
    let inst = Instance::random(77, 60, 4, 3, 0.1, 1.5);
    let labels = inst.optional_labels();
    let opts = EvalOptions {
        split: SplitSpec {
            mode: SplitMode::PerClass {
                train_per_class: 5,
                val_per_class: 5,
            },
            seed: 100,
            repeat: 0,
        },
        repeats: 3,
        grids: small_grids(),
        blocks: BlockSet::all(),
        conventions: Conventions::default(),
        fisher_rows: FisherRows::Train,
    };
    let a = evaluate_repeats(&inst.graph, inst.x.view(), &labels, &opts).unwrap();
    let b = evaluate_repeats(&inst.graph, inst.x.view(), &labels, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.repeats.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![100, 101, 102]
    );
    assert!(a.std.is_some());
    let m = a.accuracies.iter().sum::<f64>() / 3.0;
    assert!((a.mean - m).abs() < 1e-15);
}

#[test]
fn variants_share_splits_and_respect_overrides() {
    let inst = Instance::random(12, 60, 4, 2, 0.1, 1.5);
    let labels = inst.optional_labels();
    let spec = SplitSpec {
        mode: SplitMode::PerClass {
            train_per_class: 6,
            val_per_class: 6,
        },
        seed: 1,
        repeat: 0,
    };
    let splits: Vec<_> = (0..2)
        .map(|r| make_split(&labels, &spec.with_repeat(r)).unwrap())
        .collect();
    let conv = Conventions::default();
    let grids = small_grids();
    let pca = run_variant(
        &inst.graph,
        inst.x.view(),
        &labels,
        &splits,
        Variant::PcaOnly,
        &grids,
        conv,
        FisherRows::Train,
    )
    .unwrap();
    assert!(pca.configs.iter().all(|c| c.w == 1.0));
    let ridge = run_variant(
        &inst.graph,
        inst.x.view(),
        &labels,
        &splits,
        Variant::RidgeOnly,
        &grids,
        conv,
        FisherRows::Train,
    )
    .unwrap();
    assert!(ridge.configs.iter().all(|c| c.w == 0.0));
    let raw = run_variant(
        &inst.graph,
        inst.x.view(),
        &labels,
        &splits,
        Variant::RawOnly,
        &grids,
        conv,
        FisherRows::Train,
    )
    .unwrap();
    assert!(raw.accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
    assert_eq!(raw.accuracies.len(), 2);
    for v in Variant::ALL {
        assert!(!v.blocks().is_empty());
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
    }
    assert_eq!(Variant::NoSym.blocks().len(), 6);
    assert_eq!(Variant::NoP3x.blocks().len(), 8);
}

#[test]
fn snapshot_round_trip_reproduces_predictions() {
    let inst = Instance::random(31, 40, 3, 2, 0.15, 1.0);
    let dict = SignalDictionary::build(&inst.graph, inst.x.view(), &BlockSet::all()).unwrap();
    let labels = inst.optional_labels();
    let spec = SplitSpec {
        mode: SplitMode::PerClass {
            train_per_class: 5,
            val_per_class: 5,
        },
        seed: 2,
        repeat: 0,
    };
    let split = make_split(&labels, &spec).unwrap();
    let search = grid_search(
        &dict,
        &inst.labeled(&split.train),
        &inst.labeled(&split.val),
        &small_grids(),
        Conventions::default(),
        FisherRows::Train,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = ScaffoldSnapshot::new("abc", spec.mode.name(), split.clone(), search.scaffold.clone())
        .save(dir.path(), "snap.json")
        .unwrap();
    let back = ScaffoldSnapshot::load(&path).unwrap();
    assert_eq!(back.scaffold, search.scaffold);
    assert_eq!(back.split, split);
    assert_eq!(
        back.scaffold.predict_nodes(&dict, &split.test).unwrap(),
        search.scaffold.predict_nodes(&dict, &split.test).unwrap()
    );
}

#[test]
fn train_val_fisher_still_fits_on_training_rows() {
    let inst = Instance::random(5, 48, 3, 2, 0.1, 0.8);
    let dict = SignalDictionary::build(&inst.graph, inst.x.view(), &BlockSet::all()).unwrap();
    let (tr, va, _) = split_nodes(5, 48);
    let grids = Grids::single(&HyperConfig {
        k: 5,
        r_max: 2,
        eta: 0.9,
        alphas: vec![1.0],
        w: 0.5,
    });
    let conv = Conventions::default();
    let a = grid_search(
        &dict,
        &inst.labeled(&tr),
        &inst.labeled(&va),
        &grids,
        conv,
        FisherRows::Train,
    )
    .unwrap();
    let b = grid_search(
        &dict,
        &inst.labeled(&tr),
        &inst.labeled(&va),
        &grids,
        conv,
        FisherRows::TrainVal,
    )
    .unwrap();
    assert_eq!(a.scaffold.selection.k_eff, b.scaffold.selection.k_eff);
    assert_eq!(
        a.scaffold.subspaces.iter().map(|s| s.n_members).sum::<usize>(),
        tr.len()
    );
    assert_eq!(
        b.scaffold.subspaces.iter().map(|s| s.n_members).sum::<usize>(),
        tr.len()
    );
}

#[test]
fn binary_features_round_trip_at_f32_precision() {
    let x = gaussian(&mut rng(2), 7, 5);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.bin");
    write_features_binary(&p, &x).unwrap();
    let back = read_features_binary(&p).unwrap();
    assert_eq!(back.dim(), x.dim());
    assert!(max_abs_diff(&back, &x) < 1e-6);
}
