mod common;

use common::concordance;
use dualtake::eval::{accuracy, auc, confusion, group_kfold, roc_curve};
use dualtake::pipeline::{balance_downsample, entropy, gaze_region, stat4, znormalize};
use dualtake::{Dataset, DomainTag, FeatureWindow, N_FEATURES};
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..20, any::<bool>()), 2..200)
        .prop_filter("both classes", |v| v.iter().any(|p| p.1) && v.iter().any(|p| !p.1))
        .prop_map(|v| (v.iter().map(|p| p.0 as f64 / 19.0).collect(), v.iter().map(|p| p.1).collect()))
}

fn windows(labels: &[bool]) -> Dataset {
    Dataset::new(
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let mut features = vec![0.0; N_FEATURES];
                features[19] = 1.0;
                features[0] = i as f64;
                FeatureWindow {
                    features,
                    label,
                    participant_id: 1 + (i % 7) as u32,
                    domain: DomainTag::Car,
                    window_start: 10.0 * i as f64,
                }
            })
            .collect(),
    )
}

proptest! {
    #[test]
    fn auc_matches_concordance((scores, labels) in scored()) {
        let a = auc(&scores, &labels).unwrap();
        prop_assert!((a - concordance(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_rescaling((scores, labels) in scored()) {
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp()).collect();
        prop_assert!((auc(&scores, &labels).unwrap() - auc(&squashed, &labels).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn roc_runs_corner_to_corner((scores, labels) in scored()) {
        let roc = roc_curve(&scores, &labels).unwrap();
        let (first, last) = (roc[0], roc[roc.len() - 1]);
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn accuracy_and_error_rate_add_to_one((scores, labels) in scored(), t in 0.0f64..1.0) {
        let c = confusion(&scores, &labels, t).unwrap();
        prop_assert_eq!(c.accuracy() + c.error_rate(), 1.0);
        prop_assert_eq!(c.accuracy(), accuracy(&scores, &labels, t).unwrap());
        prop_assert_eq!(c.total(), labels.len());
    }

    #[test]
    fn folds_partition_participants(ids in prop::collection::btree_set(1u32..500, 5..60), k in 2usize..6, seed in any::<u64>()) {
        let ids: Vec<u32> = ids.into_iter().collect();
        let folds = group_kfold(&ids, k, seed).unwrap();
        let mut seen = Vec::new();
        let mut sizes = Vec::new();
        for f in 0..k {
            let m = folds.members(f);
            sizes.push(m.len());
            seen.extend(m);
        }
        seen.sort_unstable();
        prop_assert_eq!(&seen, &ids);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn balancing_is_exact(labels in prop::collection::vec(any::<bool>(), 2..300), seed in any::<u64>()) {
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let ds = windows(&labels);
        let minority = ds.positives().min(ds.len() - ds.positives());
        let out = balance_downsample(&ds, seed).unwrap();
        prop_assert_eq!(out.positives(), minority);
        prop_assert_eq!(out.len(), 2 * minority);
        let original: Vec<f64> = ds.windows.iter().map(|w| w.features[0]).collect();
        for w in &out.windows {
            let i = w.features[0] as usize;
            prop_assert_eq!(original[i], w.features[0]);
            prop_assert_eq!(ds.windows[i].label, w.label);
        }
    }

    #[test]
    fn stat4_agrees_with_a_sorted_oracle(xs in prop::collection::vec(-1e3f64..1e3, 1..100)) {
        let s = stat4(&xs).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        prop_assert!((s.mean - m).abs() < 1e-9);
        prop_assert!((s.std - var.sqrt()).abs() < 1e-9);
        prop_assert_eq!(s.min, sorted[0]);
        prop_assert_eq!(s.max, sorted[sorted.len() - 1]);
    }

    #[test]
    fn znormalize_twice_changes_nothing(xs in prop::collection::vec(-50f64..50.0, 2..100)) {
        prop_assume!(xs.iter().any(|&x| (x - xs[0]).abs() > 1e-3));
        let once = znormalize(&xs).unwrap();
        let twice = znormalize(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_stays_within_bounds(w in prop::collection::vec(0.0f64..10.0, 1..14)) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let h = entropy(&w).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (w.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn gaze_regions_tile_the_unit_square(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let r = gaze_region(x, y).unwrap();
        prop_assert!(r < 9);
        let col = ((3.0 * x).floor() as usize).min(2);
        let row = ((3.0 * y).floor() as usize).min(2);
        prop_assert_eq!(r, 3 * row + col);
    }
}
