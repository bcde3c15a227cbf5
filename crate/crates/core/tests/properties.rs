use std::collections::HashMap;

use proptest::prelude::*;

use cfpairs::backends::{BackendSuite, Embedding, MockDescriptor};
use cfpairs::capgen::{make_counterfactual, CaptionGenConfig};
use cfpairs::dataset::manifest::Manifest;
use cfpairs::dataset::mix::{build_mix, MixName, MixSpec};
use cfpairs::dataset::split::split_train_val;
use cfpairs::eval::{fleiss_kappa, one_tailed_t_test_with, retrieval_recall, Direction, TTestKind};
use cfpairs::fixtures::{synthetic_captions, synthetic_samples};
use cfpairs::imgen::clip_dir;
use cfpairs::Error;

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn emb(v: &[f64]) -> Embedding {
    Embedding::new(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn caption_generation_is_deterministic(seed in any::<u64>(), idx in 0usize..50) {
        let caption = synthetic_captions(idx + 1, seed).pop().unwrap().caption;
        let cfg = CaptionGenConfig::default();
        let desc = MockDescriptor { dim: 16, seed };
        let a = make_counterfactual("x", &caption, &cfg, &BackendSuite::mock(desc)).unwrap();
        let b = make_counterfactual("x", &caption, &cfg, &BackendSuite::mock(desc)).unwrap();
        prop_assert_eq!(format!("{:?}", a.record), format!("{:?}", b.record));
    }

    #[test]
    fn clip_dir_ignores_positive_scaling_and_swaps_roles(
        (t_o, t_c, i_o, i_c) in (2usize..12).prop_flat_map(|d| (vector(d), vector(d), vector(d), vector(d))),
        s in 0.01f64..100.0,
    ) {
        let base = clip_dir(&emb(&t_o), &emb(&t_c), &emb(&i_o), &emb(&i_c));
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let scale = |v: &[f64]| emb(&v.iter().map(|x| x * s).collect::<Vec<_>>());
        let scaled = clip_dir(&scale(&t_o), &scale(&t_c), &scale(&i_o), &scale(&i_c)).unwrap();
        let swapped = clip_dir(&emb(&i_o), &emb(&i_c), &emb(&t_o), &emb(&t_c)).unwrap();
        let both_flipped = clip_dir(&emb(&t_c), &emb(&t_o), &emb(&i_c), &emb(&i_o)).unwrap();
        prop_assert!((base - scaled).abs() < 1e-9);
        prop_assert!((base - swapped).abs() < 1e-12);
        prop_assert!((base - both_flipped).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&base));
    }

    #[test]
    fn clip_dir_rejects_equal_endpoints(v in vector(6), w in vector(6)) {
        let r = clip_dir(&emb(&v), &emb(&v), &emb(&v), &emb(&w));
        prop_assert!(matches!(r, Err(Error::DegenerateDirection { .. })), "{:?}", r);
    }

    #[test]
    fn recall_is_monotone_and_complete(
        (queries, gallery) in (1usize..20).prop_flat_map(|n| (
            prop::collection::vec(vector(5), n),
            prop::collection::vec(vector(5), n),
        )),
    ) {
        let n = gallery.len();
        let q: Vec<Embedding> = queries.iter().map(|v| emb(v)).collect();
        let g: Vec<Embedding> = gallery.iter().map(|v| emb(v)).collect();
        let gold: Vec<usize> = (0..n).rev().collect();
        let ks: Vec<usize> = (1..=n).collect();
        let r = retrieval_recall(&q, &g, &gold, &ks, Direction::TextRetrieval).unwrap();
        for w in ks.windows(2) {
            prop_assert!(r.recall_at[&w[0]] <= r.recall_at[&w[1]]);
        }
        prop_assert_eq!(r.recall_at[&n], 1.0);
    }

    #[test]
    fn kappa_is_at_most_one(rows in prop::collection::vec(prop::collection::vec(0u64..4, 3), 2..30)) {
        // pad every row to the same number of raters
        let width = rows.iter().map(|r| r.iter().sum::<u64>()).max().unwrap().max(2);
        let rows: Vec<Vec<u64>> = rows
            .into_iter()
            .map(|mut r| {
                r[0] += width - r.iter().sum::<u64>();
                r
            })
            .collect();
        match fleiss_kappa(&rows) {
            Ok(rep) => {
                prop_assert!(rep.kappa <= 1.0 + 1e-12);
                prop_assert!(rep.kappa >= -1.0 - 1e-12);
            }
            Err(e) => prop_assert!(matches!(e, Error::Degenerate(_)), "{:?}", e),
        }
    }

    #[test]
    fn t_test_is_antisymmetric(
        a in prop::collection::vec(-10.0f64..10.0, 5),
        b in prop::collection::vec(-10.0f64..10.0, 5),
        kind in prop::sample::select(vec![TTestKind::Welch, TTestKind::Student, TTestKind::Paired]),
    ) {
        let (Ok(ab), Ok(ba)) = (one_tailed_t_test_with(&a, &b, kind), one_tailed_t_test_with(&b, &a, kind)) else {
            return Ok(());
        };
        prop_assert!((ab.t_statistic + ba.t_statistic).abs() < 1e-9);
        prop_assert!((ab.p_value + ba.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn manifest_round_trips(n_coco in 0usize..20, n_pairs in 0usize..10) {
        let (coco, cfs) = synthetic_samples(n_coco, n_pairs).unwrap();
        for m in [coco, cfs] {
            let back = Manifest::from_reader(m.to_bytes().unwrap().as_slice()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn split_keeps_pairs_together(seed in any::<u64>(), frac in 0.05f64..0.95, n_pairs in 1usize..40) {
        let (coco, cfs) = synthetic_samples(n_pairs * 2, n_pairs).unwrap();
        let mix = build_mix(&MixSpec::preset(MixName::All, seed).unwrap(), &coco, &cfs).unwrap();
        let (train, val) = split_train_val(&mix, frac, seed).unwrap();
        prop_assert_eq!(train.len() + val.len(), mix.len());
        let mut side: HashMap<String, bool> = HashMap::new();
        for (is_train, m) in [(true, &train), (false, &val)] {
            for s in &m.records {
                if let Some(p) = &s.pair_id {
                    prop_assert_eq!(*side.entry(p.clone()).or_insert(is_train), is_train, "pair {} split", p);
                }
            }
        }
    }

    #[test]
    fn mixes_are_deterministic(seed in any::<u64>()) {
        let (coco, cfs) = synthetic_samples(40, 20).unwrap();
        for name in [MixName::Base, MixName::Medium, MixName::All] {
            let spec = MixSpec::preset(name, seed).unwrap();
            let a = build_mix(&spec, &coco, &cfs).unwrap();
            let b = build_mix(&spec, &coco, &cfs).unwrap();
            prop_assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
        }
    }
}
