use fdrsafe::metrics::{brier, fdr_level_cutoff, pr_auc, roc_auc, wilson_interval};
use fdrsafe::model::{empirical_tail_fdr, local_to_tail_fdr, mse_loss};
use fdrsafe::pipeline::{combine, loss_weights};
use fdrsafe::FdrFit;
use proptest::prelude::*;

// Coarse values so ties in |u| and in scores actually occur.
fn stat() -> impl Strategy<Value = f64> {
    (-40i32..=40).prop_map(|k| k as f64 / 8.0)
}

fn brute_tail(u: &[f64], fdr: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|ui| {
            let members: Vec<f64> = u
                .iter()
                .zip(fdr)
                .filter(|(uj, _)| uj.abs() >= ui.abs())
                .map(|(_, f)| *f)
                .collect();
            members.iter().sum::<f64>() / members.len() as f64
        })
        .collect()
}

fn brute_roc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for (sp, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 1) {
        for (sn, _) in scores.iter().zip(labels).filter(|(_, &l)| l == 0) {
            pairs += 1;
            wins += if sp > sn { 1.0 } else if sp == sn { 0.5 } else { 0.0 };
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

proptest! {
    #[test]
    fn tail_fdr_matches_definition(pairs in prop::collection::vec((stat(), 0.0..=1.0f64), 1..60)) {
        let (u, fdr): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let got = local_to_tail_fdr(&u, &fdr).unwrap();
        for (g, b) in got.iter().zip(brute_tail(&u, &fdr)) {
            prop_assert!((g - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_fdr_is_permutation_equivariant(
        pairs in prop::collection::vec((stat(), 0.0..=1.0f64), 2..40),
        rot in 0usize..40,
    ) {
        let (u, fdr): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = u.len();
        let k = rot % n;
        let rotate = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| v[(i + k) % n]).collect() };
        let a = local_to_tail_fdr(&u, &fdr).unwrap();
        let b = local_to_tail_fdr(&rotate(&u), &rotate(&fdr)).unwrap();
        for i in 0..n {
            prop_assert!((b[i] - a[(i + k) % n]).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_tail_is_null_share(pairs in prop::collection::vec((stat(), 0u8..=1), 1..50)) {
        let (u, labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();
        let null: Vec<f64> = labels.iter().map(|&l| f64::from(1 - l)).collect();
        let got = empirical_tail_fdr(&u, &labels).unwrap();
        for (g, b) in got.iter().zip(brute_tail(&u, &null)) {
            prop_assert!((g - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_matches_pair_count(pairs in prop::collection::vec((stat(), 0u8..=1), 1..50)) {
        let (s, labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();
        match (roc_auc(&s, &labels), brute_roc(&s, &labels)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn pr_auc_is_a_probability(pairs in prop::collection::vec((stat(), 0u8..=1), 1..50)) {
        let (s, labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();
        if let Some(v) = pr_auc(&s, &labels) {
            prop_assert!((0.0..=1.0).contains(&v));
        } else {
            prop_assert!(labels.iter().all(|&l| l == labels[0]));
        }
    }

    #[test]
    fn loss_is_bounded_and_brier_is_loss_against_null_indicator(
        pairs in prop::collection::vec((0.0..=1.0f64, 0u8..=1), 1..50),
    ) {
        let (f, labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();
        let null: Vec<f64> = labels.iter().map(|&l| f64::from(1 - l)).collect();
        let loss = mse_loss(&f, &null).unwrap();
        prop_assert!((0.0..=1.0).contains(&loss));
        prop_assert!((brier(&f, &labels).unwrap() - loss).abs() < 1e-15);
    }

    #[test]
    fn weights_are_a_decreasing_simplex(losses in prop::collection::vec(0.0..1.0f64, 1..12)) {
        let w = loss_weights(&losses);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..losses.len() {
            for j in 0..losses.len() {
                if losses[i] < losses[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn combination_stays_inside_component_range(
        u in prop::collection::vec(stat(), 1..30),
        seeds in prop::collection::vec(any::<u64>(), 1..5),
        raw_w in prop::collection::vec(0.01..1.0f64, 5),
    ) {
        let fits: Vec<FdrFit> = seeds
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let fdr = (0..u.len()).map(|i| ((s.wrapping_mul(i as u64 + 1) >> 11) as f64) / (1u64 << 53) as f64).collect();
                FdrFit::new(format!("m{k}"), &u, (*s as f64) / u64::MAX as f64, fdr).unwrap()
            })
            .collect();
        let w: Vec<f64> = raw_w[..fits.len()].to_vec();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let refs: Vec<&FdrFit> = fits.iter().collect();
        let (pi0, fdr, tail) = combine(&u, &refs, &w).unwrap();
        let range = |vals: Vec<f64>| (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (lo, hi) = range(fits.iter().map(|f| f.pi0).collect());
        prop_assert!(lo <= pi0 && pi0 <= hi);
        for (i, v) in fdr.iter().enumerate() {
            let (lo, hi) = range(fits.iter().map(|f| f.fdr[i]).collect());
            prop_assert!(lo <= *v && *v <= hi);
        }
        prop_assert_eq!(tail, local_to_tail_fdr(&u, &fdr).unwrap());
    }

    #[test]
    fn fit_constructor_clamps(raw in prop::collection::vec(-2.0..3.0f64, 1..20), pi0 in -1.0..2.0f64) {
        let u: Vec<f64> = (0..raw.len()).map(|i| i as f64).collect();
        let fit = FdrFit::new("x", &u, pi0, raw).unwrap();
        prop_assert!((0.0..=1.0).contains(&fit.pi0));
        prop_assert!(fit.fdr.iter().chain(&fit.tail_fdr).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn wilson_interval_brackets_the_proportion(n in 1usize..500, frac in 0.0..=1.0f64) {
        let k = ((n as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn fdr_cutoff_is_the_largest_admissible(k in prop::collection::vec(0u32..=16, 1..40)) {
        // Dyadic values k/16 and level 1/16 keep every comparison exact, so
        // the integer oracle `Σk ≤ n` over {k' ≤ c} decides admissibility.
        let f: Vec<f64> = k.iter().map(|&k| f64::from(k) / 16.0).collect();
        let admissible = |c: u32| {
            let set: Vec<u32> = k.iter().copied().filter(|&v| v <= c).collect();
            set.iter().sum::<u32>() as usize <= set.len()
        };
        let expected = k.iter().copied().filter(|&c| admissible(c)).max().map(|c| f64::from(c) / 16.0);
        prop_assert_eq!(fdr_level_cutoff(&f, 1.0 / 16.0), expected);
    }
}
