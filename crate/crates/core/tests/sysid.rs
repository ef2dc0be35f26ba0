use proptest::test_runner::{RngAlgorithm, TestRng};
use proptest::prelude::Rng;
use sea_core::lti::{FrequencyGrid, RationalTf};
use sea_core::plant::PlantParams;
use sea_core::sysid::{
    chirp_experiment, default_chirp, default_grid, estimate_frf, identify, BtOptions, IdentifyOptions,
};

const DT: f64 = 1.0 / 2000.0;

fn compare(frf: &sea_core::sysid::FrequencyResponse, tf: &RationalTf, lo: f64, hi: f64, mag: f64, deg: f64) {
    for i in frf.band(lo, hi) {
        let w = frf.omegas()[i];
        let exact = tf.eval(w).unwrap();
        let rel = (frf.h[i].norm() - exact.norm()).abs() / exact.norm();
        let phase = (frf.h[i] / exact).arg().to_degrees();
        assert!(rel < mag && phase.abs() < deg, "{w} rad/s: {rel} rel, {phase} deg");
    }
}

#[test]
fn chirp_roundtrip_recovers_table_parameters() {
    let p = PlantParams::identified().linear();
    let trace = chirp_experiment(&p, &default_chirp(), DT).unwrap();
    let id = identify(&trace, &default_grid(), &IdentifyOptions::default()).unwrap();
    let q = id.extracted.params;
    for (name, got, want, tol) in [
        ("m", q.m, p.m, 0.05),
        ("k", q.k, p.k, 0.05),
        ("k_s", q.k_s, p.k_s, 0.05),
        ("m_e", q.m_e, p.m_e, 0.05),
        ("k_e", q.k_e, p.k_e, 0.05),
        ("b", q.b, p.b, 0.10),
        ("b_e", q.b_e, p.b_e, 0.10),
        ("b_s", q.b_s, p.b_s, 0.10),
    ] {
        assert!((got - want).abs() <= tol * want, "{name}: {got} vs {want}");
    }
    assert!(!id.extracted.flagged);

    let motor = RationalTf::from_coeffs(&[1.0], &[p.m, p.b, p.k]).unwrap();
    compare(&id.subs.motor, &motor, 0.1, 100.0, 0.02, 2.0);

    // whole-system X_e / F_e against the exact network compliance
    let whole = sea_core::passivity::endpoint_compliance(&p, &sea_core::passivity::LinearLaw::none()).unwrap();
    compare(&id.whole, &whole, 0.1, 100.0, 0.02, 2.0);

    assert!(id.fit.history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(id.fit.tf.num().degree(), 2);
    assert_eq!(id.fit.tf.den().degree(), 4);
}

fn noise(rng: &mut TestRng, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| amp * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)).collect()
}

#[test]
fn estimate_is_shift_invariant() {
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let u = noise(&mut rng, 16_000, 1.0);
    let y: Vec<f64> = u.iter().scan((0.0, 0.0), |s, v| {
        let next = 1.6 * s.0 - 0.8 * s.1 + v;
        *s = (next, s.0);
        Some(next)
    }).collect();
    let grid = FrequencyGrid::log_space(1.0, 5000.0, 80).unwrap();
    let opts = BtOptions { max_lag: Some(1500), ..Default::default() };
    let a = estimate_frf(&u, &y, 1e-4, &grid, &opts).unwrap();
    for d in [1, 17, 400] {
        let pad = |x: &[f64]| std::iter::repeat_n(0.0, d).chain(x.iter().copied()).collect::<Vec<_>>();
        let b = estimate_frf(&pad(&u), &pad(&y), 1e-4, &grid, &opts).unwrap();
        for i in 0..grid.len() {
            assert!((a.h[i] - b.h[i]).norm() <= 1e-9 * a.h[i].norm(), "shift {d}, point {i}");
        }
    }
}

#[test]
fn measurement_noise_widens_bands_at_high_frequency() {
    let p = PlantParams::identified().linear();
    let chirp = sea_core::signal::ChirpSpec { duration: 120.0, f0: 0.05, ..default_chirp() };
    let trace = chirp_experiment(&p, &chirp, DT).unwrap();
    let rms = (trace.x_e.iter().map(|v| v * v).sum::<f64>() / trace.len() as f64).sqrt();
    // uniform noise with a 40 dB signal-to-noise ratio
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let n = noise(&mut rng, trace.len(), rms * 0.01 * 12f64.sqrt());
    let y: Vec<f64> = trace.x_e.iter().zip(&n).map(|(a, b)| a + b).collect();
    let grid = FrequencyGrid::new(vec![3.0, 10.0, 150.0, 600.0]).unwrap();
    let frf = estimate_frf(&trace.f_e, &y, DT, &grid, &BtOptions::default()).unwrap();
    let rel: Vec<f64> = (0..grid.len()).map(|i| frf.sigma[i] / frf.h[i].norm()).collect();
    assert!(rel[3] > 10.0 * rel[1], "{rel:?}");
    assert!(rel[2] > rel[1], "{rel:?}");
}
