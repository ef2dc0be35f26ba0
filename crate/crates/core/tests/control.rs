use proptest::prelude::*;
use sea_core::control::{proportional_ff, ControllerConfig, DobConfig, FeedforwardConfig, ForceSource};
use sea_core::impedance::{measure_point, ImpedanceOptions, Port};
use sea_core::passivity::{dob_admittance, nominal_bounds, Nominal};
use sea_core::plant::{simulate, Excitation, OneDof, PlantParams, SimOptions};
use sea_core::signal::{ChirpSpec, Signal, Sinusoid};

const DT: f64 = 1.0 / 2000.0;

#[test]
fn exact_nominal_observer_tracks_reference() {
    let p = PlantParams::identified().linear();
    let lambda = 20.0;
    let dob = DobConfig { lambda, m_n: p.m, b_n: p.b, k_n: p.k };
    for (f_e, f_ref) in [
        (Signal::Sine(Sinusoid::new(0.2, 3.0)), Signal::Constant(0.05)),
        (Signal::Constant(-0.1), Signal::Sine(Sinusoid::new(0.03, 1.0))),
    ] {
        let ex = Excitation { reference: f_ref, ..Excitation::force(f_e) };
        let tr = simulate(&p, &ControllerConfig::Dob(dob), &ex, &SimOptions::new(DT, 5.0)).unwrap();
        let start = tr.index_at(50.0 / lambda);
        let worst = (start..tr.len()).map(|i| (tr.f_a[i] - tr.f_ref[i]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "|F_a - F_ref| up to {worst:e}");
    }
}

#[test]
fn external_force_feedback_scales_one_dof_plant() {
    let plant = OneDof { m: 1.1116e-3, b: 2.9814e-2, k: 0.1642 };
    let f_e = Sinusoid::new(0.1, 7.0);
    for k_f in [0.0, 0.5, 1.0, 3.0] {
        let g = 1.0 + k_f;
        let scaled = OneDof { m: plant.m / g, b: plant.b / g, k: plant.k / g };
        let (mut x, mut v) = (0.0, 0.0);
        let (mut xs, mut vs) = (0.0, 0.0);
        for i in 0..20_000 {
            let f = f_e.value(i as f64 * DT);
            (x, v) = plant.step(x, v, f + proportional_ff(k_f, f), DT);
            (xs, vs) = scaled.step(xs, vs, f, DT);
            assert!((x - xs).abs() <= 1e-6 * xs.abs().max(1e-3), "K_f = {k_f}, step {i}");
            assert!((v - vs).abs() <= 1e-6 * vs.abs().max(1e-2), "K_f = {k_f}, step {i}");
        }
    }
}

#[test]
fn frictionless_observer_motor_port_matches_closed_form() {
    // V / F_p = (s + lambda) / (m s^2 + (lambda m + b) s + k)
    let p = PlantParams::identified().linear();
    let dob = DobConfig::frictionless(&p, 20.0);
    let y = dob_admittance(&p, &Nominal { m_n: dob.m_n, b_n: dob.b_n, k_n: dob.k_n }, dob.lambda).unwrap();
    let opts = ImpedanceOptions { port: Port::Motor, ..Default::default() };
    for w in [0.5, 2.0, 5.0, 20.0] {
        let r = measure_point(&p, &ControllerConfig::Dob(dob), w, &opts).unwrap();
        let z = r.z.unwrap();
        let expect = 1.0 / y.eval(r.omega).unwrap();
        let db = 20.0 * (z.norm() / expect.norm()).log10();
        let deg = (z / expect).arg().to_degrees();
        assert!(db.abs() < 0.1 && deg.abs() < 1.0, "{w}: {db} dB {deg} deg");
    }
}

#[test]
fn controller_output_is_deterministic() {
    let p = PlantParams::identified();
    let cfg = ControllerConfig::Composite {
        dob: DobConfig::frictionless(&p, 20.0),
        feedforward: FeedforwardConfig::from_params(&p, true),
    };
    let ex = Excitation::force(Signal::Chirp(ChirpSpec { amplitude: 0.3, f0: 0.1, f1: 50.0, duration: 3.0, allow_nyquist: false }));
    let a = simulate(&p, &cfg, &ex, &SimOptions::new(DT, 3.0)).unwrap();
    let b = simulate(&p, &cfg, &ex, &SimOptions::new(DT, 3.0)).unwrap();
    assert!(a.f_a.iter().zip(&b.f_a).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.f_cmp.iter().zip(&b.f_cmp).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn internal_feedback_with_unit_gain_runs() {
    let p = PlantParams::identified();
    let cfg = ControllerConfig::ProportionalFf { gain: 1.0, source: ForceSource::Internal };
    let ex = Excitation::force(Signal::Sine(Sinusoid::new(0.1, 2.0)));
    let tr = simulate(&p, &cfg, &ex, &SimOptions::new(DT, 2.0)).unwrap();
    assert!(tr.f_a.iter().zip(&tr.f_p).all(|(a, f)| (a - f).abs() < 1e-15));
}

fn nominal_inside_bounds() -> impl Strategy<Value = (f64, Nominal)> {
    let p = PlantParams::identified();
    (5.0f64..200.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(move |(lambda, a, b, c)| {
        let bounds = nominal_bounds(p.m, p.b, p.k, lambda).unwrap();
        let m_n = bounds.m_n_min.max(0.0) + a * 2.0 * p.m;
        let b_n = bounds.b_n_min + b * (0.05 - bounds.b_n_min);
        let k_n = c * bounds.k_n_max(b_n);
        (lambda, Nominal { m_n, b_n, k_n })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn passive_nominals_keep_outputs_bounded((lambda, n) in nominal_inside_bounds(), omega in 0.5f64..100.0) {
        let p = PlantParams::identified();
        let bounds = nominal_bounds(p.m, p.b, p.k, lambda).unwrap();
        prop_assert!(bounds.contains(&n));
        let cfg = ControllerConfig::Dob(DobConfig { lambda, m_n: n.m_n, b_n: n.b_n, k_n: n.k_n });
        let ex = Excitation::force(Signal::Sine(Sinusoid::new(0.3, omega)));
        let tr = simulate(&p, &cfg, &ex, &SimOptions::new(DT, 5.0)).unwrap();
        let peak = tr.f_a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(peak.is_finite() && peak < 50.0, "peak F_a {}", peak);
        // no growth over the second half
        let half = tr.len() / 2;
        let late = tr.f_a[half..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let early = tr.f_a[..half].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(late <= 2.0 * early + 1e-9);
    }
}
