//! End-to-end checks across modules: sampling, resampling, eigen solvers,
//! resolvent probes and the experiment summaries.

use num_complex::Complex64;
use proptest::prelude::*;

use rmt_noise_core::edge_model::{edge_location, m_sc, m_star, EdgeModel};
use rmt_noise_core::ensemble::{center_er, sample_er, EnsembleSpec};
use rmt_noise_core::experiments::collapse::scaling_collapse;
use rmt_noise_core::experiments::sweep::{monotonicity, overlap_curves};
use rmt_noise_core::experiments::{sensitivity_sweep, ExperimentConfig, KRule, QRule};
use rmt_noise_core::matrix::{pair_count, SymOperator};
use rmt_noise_core::resample::{make_pair_order, ResamplePair};
use rmt_noise_core::resolvent::{probe, probe_dense, ward_check};
use rmt_noise_core::spectral::{dense_decomposition, full_spectrum, overlap, top_eigs, DEFAULT_DENSE_CAP};
use rmt_noise_core::Streams;

fn coupled(n: usize, q: f64, seed: u64) -> ResamplePair {
    let spec = EnsembleSpec::centered(n, q).unwrap();
    let s = Streams::new(seed);
    let h = spec.sample(&mut s.stream(&[1])).unwrap();
    let hp = spec.sample(&mut s.stream(&[2])).unwrap();
    let order = make_pair_order(n, &mut s.stream(&[3])).unwrap();
    ResamplePair::new(h, hp, order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resample_endpoints_are_bitwise(n in 2usize..40, q in 1.0f64..3.0, seed in any::<u64>()) {
        prop_assume!(q * q <= n as f64);
        let pair = coupled(n, q, seed);
        prop_assert_eq!(&pair.resample_to(0).unwrap(), pair.base());
        prop_assert_eq!(&pair.resample_to(pair_count(n)).unwrap(), pair.fresh());
        prop_assert!(pair.resample_to(pair_count(n) + 1).is_err());
    }

    #[test]
    fn overlap_ignores_sign(seed in any::<u64>()) {
        let pair = coupled(30, 2.0, seed);
        let a = full_spectrum(pair.base(), DEFAULT_DENSE_CAP, &[1]).unwrap();
        let b = full_spectrum(&pair.resample_to(100).unwrap(), DEFAULT_DENSE_CAP, &[1]).unwrap();
        let (v, w) = (a.vector(1).unwrap(), b.vector(1).unwrap());
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        prop_assert_eq!(overlap(v, w).unwrap(), overlap(v, &neg).unwrap());
    }
}

#[test]
fn iterative_top_pair_matches_dense() {
    for seed in 0..5 {
        let pair = coupled(300, 300f64.cbrt(), seed);
        let h = pair.base();
        let it = top_eigs(h, 2, None).unwrap();
        let dn = full_spectrum(h, DEFAULT_DENSE_CAP, &[1]).unwrap();
        assert!((it.values[0] - dn.values[0]).abs() <= 1e-9);
        assert!(overlap(it.vector(1).unwrap(), dn.vector(1).unwrap()).unwrap() >= 1.0 - 1e-10);
    }
}

#[test]
fn iterative_and_dense_resolvent_agree() {
    let pair = coupled(64, 3.0, 9);
    let h = pair.base();
    let spec = dense_decomposition(h, DEFAULT_DENSE_CAP).unwrap();
    let z = Complex64::new(1.7, 0.05);
    let pairs = [(0, 0), (3, 17), (63, 5)];
    let a = probe_dense(&spec, z, &pairs).unwrap();
    let b = probe(h, z, &pairs, 0).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).norm() <= 1e-9, "{x} vs {y}");
    }
    assert!(ward_check(&a) <= 1e-9);
    assert!(ward_check(&b) <= 1e-8);
}

#[test]
fn top_eigenvalue_sits_near_model_edge() {
    let n = 1500;
    let q = (n as f64).cbrt();
    let spec = EnsembleSpec::centered(n, q).unwrap();
    let h = spec.sample(&mut Streams::new(4).stream(&[0])).unwrap();
    let chi = h.frobenius_sq() / n as f64 - 1.0;
    let model = EdgeModel::new(n, q, chi).unwrap();
    let l1 = top_eigs(&h, 1, None).unwrap().values[0];
    assert!((l1 - edge_location(&model)).abs() < 0.1, "{l1} vs {}", edge_location(&model));
}

#[test]
fn quartic_free_model_is_rescaled_semicircle() {
    let model = EdgeModel::new(100, 4.0, 0.05).unwrap();
    let r = 1.05f64.sqrt();
    let z = Complex64::new(0.3, 0.2);
    assert!((m_star(z, &model).unwrap() - m_sc(z / r).unwrap() / r).norm() <= 1e-12);
}

#[test]
fn er_adjacency_top_eigenvalue_tracks_mean() {
    let (n, q) = (400, 6.0);
    let a = sample_er(n, q, &mut Streams::new(1).stream(&[0])).unwrap();
    let c = center_er(a.clone(), q);
    assert_eq!(c.dim(), n);
    let top = top_eigs(&a, 1, None).unwrap().values[0];
    // the flat direction carries an outlier near f + 1/f
    assert!((top - (c.f + 1.0 / c.f)).abs() < 0.3, "{top} vs {}", c.f);
}

#[test]
fn small_sweep_is_monotone_and_collapses() {
    let cfg = ExperimentConfig {
        master_seed: Some(21),
        ns: vec![100, 160, 250],
        q_rule: QRule::power(1.0 / 3.0),
        k_rule: KRule { alphas: vec![1.0, 1.3, 1.5, 1.667, 1.8, 1.95], ..KRule::default() },
        trials: Some(12),
        ..Default::default()
    };
    let (records, summary) = sensitivity_sweep(&cfg).unwrap();
    assert_eq!(records.len(), 3 * 12 * 7);
    assert_eq!(summary.len(), 3 * 7);
    for &n in &cfg.ns {
        assert!(monotonicity(&summary, n) < -0.8);
    }
    let reports = scaling_collapse(&overlap_curves(&summary), &cfg.exponents, |_| 1.0).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r.error.is_some_and(|e| e >= 0.0)));
}
