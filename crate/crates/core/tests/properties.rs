use proptest::prelude::*;

use ppg_rectify_core::beats::spline::resample_cubic;
use ppg_rectify_core::beats::{normalize_beats, restore_heart_rate, Beat, RestoreMode};
use ppg_rectify_core::evaluation::{acceptability_improvement, rmse, roc_auc, snr_improvement};
use ppg_rectify_core::math::pearson;
use ppg_rectify_core::pca::{apply_weights, decompose, initial_weight_matrix};
use ppg_rectify_core::pso::{optimize_beat_weights, SwarmConfig};

fn beat_at(onset: usize, ana: usize, cata: usize, bump: f64) -> Beat {
    let len = ana + cata;
    let samples = (0..len)
        .map(|i| {
            if i <= ana {
                i as f64 / ana as f64
            } else {
                let t = (i - ana) as f64 / cata as f64;
                (1.0 - t) + bump * (std::f64::consts::PI * t).sin()
            }
        })
        .collect();
    Beat { onset, systolic_peak: onset + ana, end: onset + len, samples }
}

fn beat_train() -> impl Strategy<Value = Vec<Beat>> {
    prop::collection::vec((8usize..14, 22usize..32, 0.0f64..0.3), 2..12).prop_map(|spec| {
        let mut onset = 5;
        spec.into_iter()
            .map(|(a, c, bump)| {
                let b = beat_at(onset, a, c, bump);
                onset = b.end;
                b
            })
            .collect()
    })
}

fn matrix(n: usize, p: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_columns_share_layout(beats in beat_train()) {
        let m = normalize_beats(&beats).unwrap();
        prop_assert_eq!(m.p(), beats.len());
        for c in m.columns() {
            prop_assert_eq!(c.len(), m.n());
            prop_assert!(c.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((c[m.peak_row()] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn restoration_keeps_every_beat_length(beats in beat_train(), uniform in any::<bool>()) {
        let m = normalize_beats(&beats).unwrap();
        let mode = if uniform { RestoreMode::UniformResample } else { RestoreMode::PhaseAligned };
        let r = restore_heart_rate(m.columns(), m.hr_info(), m.layout(), mode).unwrap();
        prop_assert_eq!(r.start, beats[0].onset);
        prop_assert_eq!(r.end(), beats.last().unwrap().end);
        prop_assert!(r.samples.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn resampling_hits_requested_length(v in prop::collection::vec(-1.0f64..1.0, 4..50), len in 2usize..80) {
        let r = resample_cubic(&v, len).unwrap();
        prop_assert_eq!(r.len(), len);
        prop_assert!((r[0] - v[0]).abs() < 1e-9);
        prop_assert!((r[len - 1] - v[v.len() - 1]).abs() < 1e-9);
    }

    #[test]
    fn pca_is_orthonormal_and_lossless_at_full_retention(cols in matrix(12, 6)) {
        let d = decompose(&cols).unwrap();
        let p = d.p();
        for a in 0..p {
            for b in 0..p {
                let dot: f64 = (0..p).map(|r| d.eigenvector(r, a) * d.eigenvector(r, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-10);
            }
        }
        prop_assert!(d.eigenvalues().iter().all(|&l| l >= -1e-12));
        prop_assert!(d.energies().windows(2).all(|w| w[0] >= w[1]));
        let rec = d.reconstruct_with(p);
        for (x, y) in cols.iter().flatten().zip(rec.columns.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn initial_weights_invert_exactly(b in matrix(10, 4), r in matrix(10, 4)) {
        let w = initial_weight_matrix(&r, &b).unwrap();
        for k in 0..b.len() {
            let back = apply_weights(&b[k], &w[k]).unwrap();
            for (x, y) in back.iter().zip(&r[k]) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlation_is_bounded(a in prop::collection::vec(-5.0f64..5.0, 3..30), s in 0.1f64..3.0) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| s * x + (i % 3) as f64).collect();
        if let Ok(c) = pearson(&a, &b) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
        }
    }

    #[test]
    fn rmse_axioms(x in prop::collection::vec(-3.0f64..3.0, 1..40), seed in 0u64..1000) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + ((i as u64 * 31 + seed) % 7) as f64 * 0.1).collect();
        let z: Vec<f64> = x.iter().map(|v| v * 0.5).collect();
        prop_assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        prop_assert_eq!(rmse(&x, &y).unwrap(), rmse(&y, &x).unwrap());
        prop_assert!(rmse(&x, &z).unwrap() <= rmse(&x, &y).unwrap() + rmse(&y, &z).unwrap() + 1e-12);
    }

    #[test]
    fn auc_lies_in_unit_interval(scores in prop::collection::vec(0.0f64..1.0, 2..60), flips in any::<u64>()) {
        let mut labels: Vec<bool> = (0..scores.len()).map(|i| (flips >> (i % 64)) & 1 == 1).collect();
        labels[0] = true;
        labels[1] = false;
        let r = roc_auc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.auc));
        prop_assert!(r.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn no_processing_gives_zero_improvement(x in prop::collection::vec(-1.0f64..1.0, 2..50), off in 0.01f64..1.0) {
        let noisy: Vec<f64> = x.iter().map(|v| v + off).collect();
        prop_assert_eq!(snr_improvement(&x, &noisy, &noisy).unwrap().db, 0.0);
    }

    #[test]
    fn acceptability_is_antitone_in_noisy_count(np in 1usize..500, a in 0usize..500, b in 0usize..500) {
        let (lo, hi) = (a.min(b).min(np), a.max(b).min(np));
        prop_assert!(acceptability_improvement(np, lo).unwrap() >= acceptability_improvement(np, hi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn swarm_respects_bounds_and_never_regresses(beat in prop::collection::vec(0.0f64..1.0, 6), seed in 0u64..100) {
        let template: Vec<f64> = (0..6).map(|i| (i as f64 * 0.9).sin()).collect();
        let cfg = SwarmConfig { seed, max_iterations: 60, swarm_size: 12, ..SwarmConfig::default() };
        if let Ok(r) = optimize_beat_weights(&beat, &template, None, &cfg) {
            prop_assert!(r.weights.iter().all(|&w| (cfg.lower_bound..=cfg.upper_bound).contains(&w)));
            prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
            prop_assert_eq!(r.fitness, *r.trace.last().unwrap());
        }
    }
}
