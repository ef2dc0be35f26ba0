//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any of them fails.

use std::process::ExitCode;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use sea_core::control::{ControllerConfig, DobConfig, ForceSource};
use sea_core::impedance::{
    backdrive, fit_dahl, measure_impedance, min_impedance_controller, synthesize_dahl_loop, work_loop,
    zwidth_experiment, ImpedanceOptions, LoopForce, ZWidthSetup,
};
use sea_core::lti::{FrequencyGrid, Polynomial, RationalTf};
use sea_core::passivity::{
    check_passive, default_grid, dob_admittance, endpoint_impedance_ff, low_freq_limits, network_impedance,
    nominal_bounds, Criterion, LinearLaw, Nominal, Verdict,
};
use sea_core::plant::{simulate, DahlParams, Excitation, PlantParams, SimOptions, SimTrace};
use sea_core::signal::{ChirpSpec, Signal};
use sea_core::sysid::{chirp_experiment, default_chirp, default_grid as sysid_grid, identify, IdentifyOptions};

const DT: f64 = 1.0 / 2000.0;
const LAMBDA: f64 = 20.0;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dc_stiffness(z: &RationalTf) -> f64 {
    let sz = RationalTf::new(&Polynomial::monomial(1.0, 1) * z.num(), z.den().clone()).unwrap();
    sz.dc_gain().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn low_frequency_limits() -> Outcome {
    let p = PlantParams::identified();
    let unit = dc_stiffness(&endpoint_impedance_ff(&p, 1.0, ForceSource::Internal).unwrap());
    let lim = low_freq_limits(&p, 1.0).unwrap();
    let printed = (unit * 1e5).round() / 1e5;
    let stiff_motor = PlantParams { k: 1e4, ..p };
    let nb = dc_stiffness(&endpoint_impedance_ff(&stiff_motor, 1.0, ForceSource::Internal).unwrap());
    let nb_lim = low_freq_limits(&stiff_motor, 1.0).unwrap().nonbackdrivable;
    let bd_lim = lim.backdrivable;
    let (e3, e4, e5) = (rel(unit, lim.general), rel(nb, nb_lim), rel(unit, bd_lim));
    check(
        e3 <= 1e-6 && (printed - 0.14529).abs() < 1e-12 && e4 <= 0.01 && e5 <= 0.01,
        format!("DC stiffness {unit:.6} (closed form err {e3:.1e}); k=1e4 err {e4:.2e}; stiff-line err {e5:.2e}"),
    )
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn passivity_bounds() -> Outcome {
    let strategy = (
        log_uniform(1e-4, 1e-1),
        log_uniform(1e-3, 1.0),
        log_uniform(1e-3, 10.0),
        log_uniform(1.0, 1000.0),
        (-0.5f64..0.5, -0.5f64..1.5, -0.3f64..1.3),
    );
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let (mut cases, mut agree, mut passive) = (0, 0, 0);
    while cases < 200 {
        let (m, b, k, lambda, u) = strategy.new_tree(&mut runner).unwrap().current();
        let bounds = nominal_bounds(m, b, k, lambda).unwrap();
        let b_n = bounds.b_n_min + u.1 * k / lambda;
        let n = Nominal { m_n: bounds.m_n_min + u.0 * m, b_n, k_n: u.2 * (k + lambda * b_n).abs().max(k) };
        if bounds.margin(&n).abs() <= 1e-6 {
            continue;
        }
        cases += 1;
        let p = PlantParams { m, b, k, ..PlantParams::identified() };
        let y = dob_admittance(&p, &n, lambda).unwrap();
        let numeric = check_passive(&y, &default_grid()).unwrap().is_passive();
        agree += usize::from(numeric == bounds.contains(&n));
        passive += usize::from(numeric);
    }

    let p = PlantParams::identified();
    let origin = Nominal { m_n: p.m, b_n: -p.k / LAMBDA, k_n: 0.0 };
    let y = dob_admittance(&p, &origin, LAMBDA).unwrap();
    let res = y.residues_at_imag_poles().unwrap();
    let origin_ok = res.len() == 1
        && rel(res[0].residue.unwrap().re, LAMBDA / (LAMBDA * origin.m_n + p.b)) < 1e-12
        && check_passive(&y, &default_grid()).unwrap().is_passive();

    let unit_mass = PlantParams { m: 1.0, ..p };
    let conj = Nominal { m_n: -unit_mass.b / LAMBDA, b_n: 0.0, k_n: 0.0 };
    let res = dob_admittance(&unit_mass, &conj, LAMBDA).unwrap().residues_at_imag_poles().unwrap();
    let conj_ok = res.len() == 2 && res.iter().all(|r| (r.residue.unwrap().re - 0.5).abs() < 1e-12);

    let double = Nominal { m_n: -p.b / LAMBDA, b_n: -p.k / LAMBDA, k_n: 0.0 };
    let report = check_passive(&dob_admittance(&p, &double, LAMBDA).unwrap(), &default_grid()).unwrap();
    let double_ok = report.verdict == Verdict::NonPassive(Criterion::ImaginaryPole);

    check(
        agree == cases && origin_ok && conj_ok && double_ok,
        format!(
            "{agree}/{cases} agree ({passive} passive); origin residue {origin_ok}, conjugate residue {conj_ok}, double pole {double_ok}"
        ),
    )
}

fn sysid_roundtrip() -> Outcome {
    let p = PlantParams::identified().linear();
    let trace = chirp_experiment(&p, &default_chirp(), DT).unwrap();
    let id = identify(&trace, &sysid_grid(), &IdentifyOptions::default()).unwrap();
    let q = id.extracted.params;
    let mut worst = Vec::new();
    let mut ok = true;
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
        let e = rel(got, want);
        ok &= e <= tol;
        worst.push(format!("{name} {:.2}%", 100.0 * e));
    }
    check(ok, format!("{} s record; {}", default_chirp().duration, worst.join(", ")))
}

fn impedance_db(z: &sea_core::sysid::FrequencyResponse) -> Vec<f64> {
    (0..z.len()).map(|i| z.mag_db(i)).collect()
}

fn dob_reduction() -> Outcome {
    let p = PlantParams::identified();
    let grid = FrequencyGrid::log_space(0.1, 10.0, 20).unwrap();
    let opts = ImpedanceOptions::default();
    let passive = measure_impedance(&p, &ControllerConfig::None, &grid, &opts).unwrap();
    let dob = measure_impedance(&p, &ControllerConfig::Dob(DobConfig::frictionless(&p, LAMBDA)), &grid, &opts).unwrap();
    let (a, b) = (impedance_db(&passive), impedance_db(&dob));
    let red: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let valid = passive.valid.iter().chain(&dob.valid).all(|v| *v);
    let lo = red.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = red.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check(
        valid && lo >= 4.0 && hi <= 13.0,
        format!("reduction {:.1} dB at 0.1, {:.1} dB at 10 rad/s; range [{lo:.1}, {hi:.1}] dB, need [4, 13]", red[0], red[19]),
    )
}

fn feedforward_cancellation() -> Outcome {
    let p = PlantParams::identified();
    let tr = backdrive(&p, &min_impedance_controller(&p, LAMBDA), 0.5, 1.0, 3, DT).unwrap();
    let amp = work_loop(&tr, LoopForce::External).unwrap().amplitude_over(-0.2, 0.2).unwrap();
    let passive = work_loop(&backdrive(&p, &ControllerConfig::None, 0.5, 1.0, 3, DT).unwrap(), LoopForce::External)
        .unwrap()
        .amplitude_over(-0.2, 0.2)
        .unwrap();
    check(
        amp <= 0.1 * p.f_c,
        format!("loop amplitude {:.2} mNm (passive {:.1} mNm), limit {:.1} mNm", amp * 1e3, passive * 1e3, 0.1 * p.f_c * 1e3),
    )
}

fn dahl_fit_roundtrip() -> Outcome {
    let d = DahlParams { f_c: 0.032, sigma: 12.8, n: 1.0 };
    let mut worst: f64 = 0.0;
    for amp in [0.002, 0.005, 0.02, 0.1, 0.5] {
        let fit = fit_dahl(&synthesize_dahl_loop(&d, amp, 2000, 3).unwrap()).unwrap();
        worst = worst.max(rel(fit.f_c, d.f_c)).max(rel(fit.sigma, d.sigma));
    }
    let big = synthesize_dahl_loop(&d, 100.0 * d.f_c / d.sigma, 4000, 3).unwrap();
    let sat = rel(big.amplitude, d.f_c);
    check(worst <= 0.01 && sat <= 0.02, format!("worst fit error {:.3}%, saturation error {:.3}%", 100.0 * worst, 100.0 * sat))
}

fn zwidth_targets() -> Outcome {
    let p = PlantParams::identified();
    let grid = FrequencyGrid::new(vec![0.1, 0.3, 1.0, 3.0, 10.0]).unwrap();
    let report = zwidth_experiment(&p, &ZWidthSetup::new(grid)).unwrap();
    let at = |c: &sea_core::impedance::ZWidthCurve, w: f64| c.width_at(w).unwrap_or(f64::NAN);
    let (w3, w10) = (at(&report.curve, 3.0), at(&report.curve, 10.0));
    let motor = report.motor.as_ref().map(|(_, c)| at(c, 0.1)).unwrap_or(f64::NAN);
    check(
        w3 >= 40.0 && w10 >= 30.0 && (motor - 70.0).abs() <= 6.0,
        format!(
            "K_p {:.1}, K_d {:.2}; endpoint {w3:.1} dB at 3, {w10:.1} dB at 10 rad/s; motor port {motor:.1} dB at 0.1 rad/s (target 70 +/- 6)",
            report.gains.k_p, report.gains.k_d
        ),
    )
}

fn force_run(p: &PlantParams, f_e: Signal, dt: f64, duration: f64) -> SimTrace {
    simulate(p, &ControllerConfig::None, &Excitation::force(f_e), &SimOptions::new(dt, duration)).unwrap()
}

fn columns(t: &SimTrace) -> [&Vec<f64>; 5] {
    [&t.x, &t.v, &t.x_e, &t.v_e, &t.f_p]
}

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn numerical_hygiene() -> Outcome {
    let p = PlantParams::identified().linear();
    let chirp = Signal::Chirp(ChirpSpec { amplitude: 0.3, f0: 0.1, f1: 20.0, duration: 10.0, allow_nyquist: false });
    let coarse = force_run(&p, chirp.clone(), DT, 10.0);
    let fine = force_run(&p, chirp.clone(), DT / 2.0, 10.0);
    let mut halving: f64 = 0.0;
    for (c, f) in columns(&coarse).into_iter().zip(columns(&fine)) {
        let e = c.iter().enumerate().map(|(i, v)| (v - f[2 * i]).abs()).fold(0.0, f64::max);
        halving = halving.max(e / peak(f));
    }

    let alpha = -2.7;
    let scaled = force_run(&p, chirp.scaled(alpha), DT, 10.0);
    let mut sup: f64 = 0.0;
    for (a, b) in columns(&coarse).into_iter().zip(columns(&scaled)) {
        let e = a.iter().zip(b).map(|(x, y)| (alpha * x - y).abs()).fold(0.0, f64::max);
        sup = sup.max(e / (alpha.abs() * peak(a)));
    }

    let grid = FrequencyGrid::log_space(0.1, 100.0, 16).unwrap();
    let z = measure_impedance(&p, &ControllerConfig::None, &grid, &ImpedanceOptions::default()).unwrap();
    let exact = network_impedance(&p, &LinearLaw::none()).unwrap();
    let (mut db, mut deg): (f64, f64) = (0.0, 0.0);
    for i in 0..z.len() {
        let e = exact.eval(z.omegas()[i]).unwrap();
        db = db.max((20.0 * (z.h[i].norm() / e.norm()).log10()).abs());
        deg = deg.max((z.h[i] / e).arg().to_degrees().abs());
    }
    let valid = z.valid.iter().all(|v| *v);
    check(
        halving < 1e-6 && sup <= 1e-9 && valid && db < 0.5 && deg < 3.0,
        format!("halving {halving:.1e}, superposition {sup:.1e}, FRF {db:.3} dB / {deg:.2} deg"),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        ("low-frequency limits", low_frequency_limits),
        ("passivity bounds", passivity_bounds),
        ("system identification roundtrip", sysid_roundtrip),
        ("observer impedance reduction", dob_reduction),
        ("feedforward hysteresis cancellation", feedforward_cancellation),
        ("Dahl fit roundtrip", dahl_fit_roundtrip),
        ("Z-width", zwidth_targets),
        ("numerical hygiene", numerical_hygiene),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} PASS  {name}: {d} ({secs:.1} s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {d} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
