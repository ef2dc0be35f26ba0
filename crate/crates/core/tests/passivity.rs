use approx::assert_relative_eq;
use proptest::prelude::*;
use sea_core::control::ForceSource;
use sea_core::lti::{Polynomial, RationalTf};
use sea_core::passivity::{
    check_passive, default_grid, dob_admittance, endpoint_impedance_ff, low_freq_limits, nominal_bounds, Criterion,
    Nominal, Verdict,
};
use sea_core::plant::PlantParams;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// `lim_{s -> 0} s Z(s)`.
fn dc_stiffness(z: &RationalTf) -> f64 {
    let sz = RationalTf::new(&Polynomial::monomial(1.0, 1) * z.num(), z.den().clone()).unwrap();
    sz.dc_gain().unwrap()
}

fn plant() -> impl Strategy<Value = PlantParams> {
    (
        log_uniform(1e-4, 1e-2),
        log_uniform(1e-3, 1e-1),
        log_uniform(1e-2, 1.0),
        log_uniform(1e-4, 1e-2),
        log_uniform(1e-3, 1e-1),
        log_uniform(1e-3, 1.0),
        log_uniform(1e-3, 1e-1),
        log_uniform(1.0, 100.0),
    )
        .prop_map(|(m, b, k, m_e, b_e, k_e, b_s, k_s)| PlantParams {
            m,
            b,
            k,
            m_e,
            b_e,
            k_e,
            b_s,
            k_s,
            f_c: 0.0,
            sigma: 0.0,
            n_dahl: 1.0,
        })
}

proptest! {
    #[test]
    fn low_frequency_limit_matches_network(p in plant(), k_f in 0.0f64..3.0) {
        let z = endpoint_impedance_ff(&p, k_f, ForceSource::Internal).unwrap();
        let lim = low_freq_limits(&p, k_f).unwrap();
        let dc = dc_stiffness(&z);
        prop_assert!((dc - lim.general).abs() <= 1e-9 * lim.general, "{} vs {}", dc, lim.general);
        // and numerically, omega |Z(j omega)| at a very low frequency
        let w = 1e-6;
        prop_assert!((w * z.eval(w).unwrap().norm() - lim.general).abs() <= 1e-5 * lim.general);
    }

    #[test]
    fn bounds_agree_with_numeric_test(
        m in log_uniform(1e-4, 1e-1),
        b in log_uniform(1e-3, 1.0),
        k in log_uniform(1e-3, 10.0),
        lambda in log_uniform(1.0, 1000.0),
        u in (-0.5f64..0.5, -0.5f64..1.5, -0.3f64..1.3),
    ) {
        let bounds = nominal_bounds(m, b, k, lambda).unwrap();
        let b_n = bounds.b_n_min + u.1 * k / lambda;
        let n = Nominal {
            m_n: bounds.m_n_min + u.0 * m,
            b_n,
            k_n: u.2 * (k + lambda * b_n).abs().max(k),
        };
        prop_assume!(bounds.margin(&n).abs() > 1e-6);
        let p = PlantParams { m, b, k, ..PlantParams::identified() };
        let y = dob_admittance(&p, &n, lambda).unwrap();
        let report = check_passive(&y, &default_grid()).unwrap();
        prop_assert_eq!(report.is_passive(), bounds.contains(&n), "{:?} {}", n, report);
    }
}

#[test]
fn dc_stiffness_examples() {
    let p = PlantParams::identified();
    let passive = dc_stiffness(&endpoint_impedance_ff(&p, 0.0, ForceSource::Internal).unwrap());
    assert_relative_eq!(passive, 0.2259, max_relative = 2e-4);
    let unit = dc_stiffness(&endpoint_impedance_ff(&p, 1.0, ForceSource::Internal).unwrap());
    // k_e + k k_s / (k + 2 k_s)
    let oracle = p.k_e + p.k * p.k_s / (p.k + 2.0 * p.k_s);
    assert_relative_eq!(unit, oracle, max_relative = 1e-12);
    assert_relative_eq!(unit, 0.14529, max_relative = 1e-4);
}

#[test]
fn internal_stiffness_falls_with_gain() {
    let p = PlantParams::identified();
    let mut last = f64::INFINITY;
    for i in 0..=20 {
        let k_f = i as f64 / 20.0;
        let s = dc_stiffness(&endpoint_impedance_ff(&p, k_f, ForceSource::Internal).unwrap());
        assert!(s <= last);
        last = s;
    }
}

/// Largest external gain on `[0, hi]` with a passive endpoint, by bisection.
fn max_passive_external_gain(p: &PlantParams, hi: f64) -> f64 {
    let passive = |k_f: f64| {
        let y = endpoint_impedance_ff(p, k_f, ForceSource::External).unwrap().inv().unwrap();
        check_passive(&y, &default_grid()).unwrap().is_passive()
    };
    assert!(passive(0.0));
    if passive(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if passive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn external_feedback_beats_internal_at_low_frequency() {
    let p = PlantParams::identified().linear();
    let k_ext = max_passive_external_gain(&p, 10.0);
    assert!(k_ext > 0.0);
    let z_ext = endpoint_impedance_ff(&p, k_ext, ForceSource::External).unwrap();
    let z_int = endpoint_impedance_ff(&p, 1.0, ForceSource::Internal).unwrap();
    for &w in default_grid().omegas().iter().filter(|w| **w <= 1.0) {
        assert!(z_ext.eval(w).unwrap().norm() <= z_int.eval(w).unwrap().norm(), "at {w} rad/s, K_f = {k_ext}");
    }
}

#[test]
fn origin_pole_residue() {
    let p = PlantParams::identified();
    let lambda = 20.0;
    let n = Nominal { m_n: p.m, b_n: -p.k / lambda, k_n: 0.0 };
    let y = dob_admittance(&p, &n, lambda).unwrap();
    let res = y.residues_at_imag_poles().unwrap();
    assert_eq!(res.len(), 1);
    let r = res[0].residue.unwrap();
    assert_relative_eq!(r.re, lambda / (lambda * n.m_n + p.b), max_relative = 1e-12);
    assert!(r.im.abs() < 1e-12);
    assert!(check_passive(&y, &default_grid()).unwrap().is_passive());
}

#[test]
fn conjugate_pole_residue() {
    // m_n = -b/lambda, k_n = 0: Y = (s + lambda) / (m s^2 + k + lambda b_n),
    // residue real part 1/(2m)
    for m in [1.0, PlantParams::identified().m] {
        let p = PlantParams { m, ..PlantParams::identified() };
        let lambda = 20.0;
        let n = Nominal { m_n: -p.b / lambda, b_n: 0.0, k_n: 0.0 };
        let y = dob_admittance(&p, &n, lambda).unwrap();
        let res = y.residues_at_imag_poles().unwrap();
        assert_eq!(res.len(), 2);
        for r in res {
            assert!(r.pole.re.abs() < 1e-9 && r.pole.im != 0.0);
            assert_relative_eq!(r.residue.unwrap().re, 0.5 / m, max_relative = 1e-9);
        }
    }
}

#[test]
fn double_origin_pole_is_not_passive() {
    let p = PlantParams::identified();
    let lambda = 20.0;
    let n = Nominal { m_n: -p.b / lambda, b_n: -p.k / lambda, k_n: 0.0 };
    let y = dob_admittance(&p, &n, lambda).unwrap();
    let report = check_passive(&y, &default_grid()).unwrap();
    assert_eq!(report.verdict, Verdict::NonPassive(Criterion::ImaginaryPole));
    assert!(report.imag_pole_issues.iter().any(|i| i.multiplicity == 2 && i.residue.is_none()));
}
