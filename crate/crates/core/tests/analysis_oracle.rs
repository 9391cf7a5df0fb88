//! ODE and series-analysis oracles: conservation of the orbit
//! invariant, integrator convergence order, fit self-consistency and
//! phase-lag ground truths.

use swlv_core::analysis::{
    detect_cycles, fit_lv, integrate_lv, lv_derivatives, lv_invariant, phase_lag, CycleConfig,
    LvParams, PopulationRecord,
};

const FIG_PARAMS: LvParams = LvParams {
    alpha: 0.0067,
    beta: 3.75e-7,
    delta: 6.11e-7,
    gamma_lv: 0.001,
};

const UNIT_PARAMS: LvParams = LvParams {
    alpha: 1.0,
    beta: 1.0,
    delta: 1.0,
    gamma_lv: 1.0,
};

#[test]
fn derivatives_vanish_at_equilibrium() {
    for params in [FIG_PARAMS, UNIT_PARAMS] {
        let (p_star, q_star) = params.equilibrium();
        let (dp, dq) = lv_derivatives(&params, p_star, q_star).unwrap();
        assert!(dp.abs() < 1e-12 * p_star && dq.abs() < 1e-12 * q_star);
    }
}

#[test]
fn reported_equilibrium_arithmetic() {
    let (p_star, q_star) = FIG_PARAMS.equilibrium();
    assert!((p_star - 0.001 / 6.11e-7).abs() / p_star < 1e-12);
    assert!((q_star - 0.0067 / 3.75e-7).abs() / q_star < 1e-12);
    assert!((p_star - 1636.66).abs() < 0.01);
    assert!((q_star - 17866.67).abs() < 0.01);
}

#[test]
fn hand_arithmetic_case() {
    let (dp, dq) = lv_derivatives(&UNIT_PARAMS, 2.0, 1.0).unwrap();
    assert_eq!((dp, dq), (0.0, 1.0));
}

#[test]
fn nonpositive_population_is_a_domain_error() {
    assert!(lv_derivatives(&UNIT_PARAMS, 0.0, 1.0).is_err());
    assert!(lv_invariant(&UNIT_PARAMS, 1.0, -2.0).is_err());
    assert!(integrate_lv(&UNIT_PARAMS, -1.0, 1.0, 0.1, 10).is_err());
}

#[test]
fn equilibrium_start_stays_fixed() {
    for params in [FIG_PARAMS, UNIT_PARAMS] {
        let (p_star, q_star) = params.equilibrium();
        let traj = integrate_lv(&params, p_star, q_star, params.linearized_period() / 1000.0, 2000)
            .unwrap();
        for &(_, p, q) in &traj {
            assert!((p - p_star).abs() / p_star < 1e-9);
            assert!((q - q_star).abs() / q_star < 1e-9);
        }
    }
}

#[test]
fn invariant_at_unit_point_is_minus_two() {
    assert!((lv_invariant(&UNIT_PARAMS, 1.0, 1.0).unwrap() - (-2.0)).abs() < 1e-15);
}

/// Orbit invariant drift over one period at dt = period / 10000 stays
/// within 1e-6 relative, for both parameter scales.
#[test]
fn rk4_conserves_the_invariant_over_one_period() {
    for params in [FIG_PARAMS, UNIT_PARAMS] {
        let (p_star, q_star) = params.equilibrium();
        let (p0, q0) = (1.3 * p_star, 0.8 * q_star);
        let period = params.linearized_period();
        let n = 10_000;
        let traj = integrate_lv(&params, p0, q0, period / n as f64, n).unwrap();
        let v0 = lv_invariant(&params, p0, q0).unwrap();
        let mut max_drift = 0.0f64;
        for &(_, p, q) in &traj {
            let v = lv_invariant(&params, p, q).unwrap();
            max_drift = max_drift.max(((v - v0) / v0).abs());
        }
        assert!(max_drift <= 1e-6, "drift {max_drift:.3e}");
    }
}

#[test]
fn invariant_peaks_at_the_equilibrium() {
    let (p_star, q_star) = FIG_PARAMS.equilibrium();
    let v_star = lv_invariant(&FIG_PARAMS, p_star, q_star).unwrap();
    for i in -5..=5 {
        for j in -5..=5 {
            let p = p_star * (1.0 + 0.08 * i as f64);
            let q = q_star * (1.0 + 0.08 * j as f64);
            let v = lv_invariant(&FIG_PARAMS, p, q).unwrap();
            assert!(v <= v_star + 1e-12, "V({p}, {q}) = {v} above V* = {v_star}");
        }
    }
}

/// Halving dt shrinks the endpoint error about 16x (fourth order).
#[test]
fn rk4_shows_fourth_order_convergence()  {
    let params = UNIT_PARAMS;
    let (p0, q0) = (1.5, 0.7);
    let t_end = 2.0;
    let reference = integrate_lv(&params, p0, q0, t_end / (1 << 16) as f64, 1 << 16).unwrap();
    let (_, p_ref, q_ref) = *reference.last().unwrap();
    let endpoint_error = |steps: usize| {
        let traj = integrate_lv(&params, p0, q0, t_end / steps as f64, steps).unwrap();
        let (_, p, q) = *traj.last().unwrap();
        ((p - p_ref).powi(2) + (q - q_ref).powi(2)).sqrt()
    };
    let e1 = endpoint_error(64);
    let e2 = endpoint_error(128);
    let ratio = e1 / e2;
    assert!(
        (10.0..=22.0).contains(&ratio),
        "convergence ratio {ratio} not near 16"
    );
}

fn synthetic_series(params: &LvParams, p0: f64, q0: f64, records: usize, stride: u64) -> Vec<PopulationRecord> {
    // integrate at unit step, sample every `stride` steps
    let n = records as u64 * stride;
    let traj = integrate_lv(params, p0, q0, 1.0, n as usize).unwrap();
    traj.iter()
        .step_by(stride as usize)
        .map(|&(t, p, q)| PopulationRecord {
            t: t as u64,
            n_predators: q.round() as u64,
            n_prey_group: p.round() as u64,
            n_prey_solo: 0,
            group_proportion: 0.0,
        })
        .collect()
}

/// Recovering the generating coefficients from noiseless data lands
/// within 1% relative on all four.
#[test]
fn fit_recovers_generating_parameters() {
    let (p_star, q_star) = FIG_PARAMS.equilibrium();
    let series = synthetic_series(&FIG_PARAMS, 1.25 * p_star, 0.85 * q_star, 4000, 4);
    let fit = fit_lv(&series, 5).unwrap();
    let got = fit.params;
    for (name, a, b) in [
        ("alpha", got.alpha, FIG_PARAMS.alpha),
        ("beta", got.beta, FIG_PARAMS.beta),
        ("delta", got.delta, FIG_PARAMS.delta),
        ("gamma_lv", got.gamma_lv, FIG_PARAMS.gamma_lv),
    ] {
        let rel = (a - b).abs() / b;
        assert!(rel <= 0.01, "{name}: fit {a} vs true {b} ({rel:.4} rel)");
    }
    assert!(fit.r2_prey > 0.99 && fit.r2_predator > 0.99);
    assert!(got.is_oscillatory());
}

#[test]
fn constant_series_is_a_degenerate_fit() {
    let series: Vec<PopulationRecord> = (0..100)
        .map(|t| PopulationRecord {
            t,
            n_predators: 50,
            n_prey_group: 70,
            n_prey_solo: 0,
            group_proportion: 0.0,
        })
        .collect();
    assert!(fit_lv(&series, 5).is_err());
}

#[test]
fn zero_count_rows_are_domain_errors() {
    let mut series = synthetic_series(&UNIT_PARAMS, 1.5, 0.7, 60, 1);
    series[10].n_predators = 0;
    match fit_lv(&series, 3) {
        Err(swlv_core::error::AnalysisError::BadSeries { row, .. }) => assert_eq!(row, 10),
        other => panic!("expected BadSeries, got {other:?}"),
    }
}

#[test]
fn quarter_period_sine_lag_is_a_quarter() {
    let n = 2000;
    let period = 400.0;
    let p: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 2.0 * std::f64::consts::PI / period).sin())
        .collect();
    let q: Vec<f64> = (0..n)
        .map(|i| {
            ((i as f64 * 2.0 * std::f64::consts::PI / period) - std::f64::consts::FRAC_PI_2).sin()
        })
        .collect();
    let lag = phase_lag(&p, &q).unwrap();
    assert!((lag - 0.25).abs() <= 0.01, "lag {lag}");
}

#[test]
fn identical_series_have_zero_lag() {
    let p: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.05).sin()).collect();
    assert_eq!(phase_lag(&p, &p).unwrap(), 0.0);
}

#[test]
fn integrated_orbit_lag_is_near_a_quarter() {
    for params in [UNIT_PARAMS, FIG_PARAMS] {
        let (p_star, q_star) = params.equilibrium();
        let period = params.linearized_period();
        // fine sampling over four periods, small orbit
        let n = 4000usize;
        let dt = 4.0 * period / n as f64;
        let traj = integrate_lv(&params, 1.1 * p_star, q_star, dt, n).unwrap();
        let p: Vec<f64> = traj.iter().map(|r| r.1).collect();
        let q: Vec<f64> = traj.iter().map(|r| r.2).collect();
        let lag = phase_lag(&p, &q).unwrap();
        assert!(
            (0.2..=0.3).contains(&lag),
            "lag {lag} outside [0.2, 0.3]"
        );
    }
}

#[test]
fn lag_is_shift_consistent() {
    let n = 1600;
    let period_samples = 200usize;
    let base: Vec<f64> = (0..n + 300)
        .map(|i| (i as f64 * 2.0 * std::f64::consts::PI / period_samples as f64).sin())
        .collect();
    let p = base[..n].to_vec();
    for shift in [0usize, 37, 80, 150] {
        let q = base[shift..shift + n].to_vec();
        // q leads p by `shift`, so p-relative lag is period - shift
        let expect = ((period_samples - shift) % period_samples) as f64 / period_samples as f64;
        let lag = phase_lag(&p, &q).unwrap();
        let diff = (lag - expect).abs();
        let diff = diff.min(1.0 - diff);
        assert!(
            diff <= 1.5 / period_samples as f64,
            "shift {shift}: lag {lag} expect {expect}"
        );
    }
}

#[test]
fn monotone_series_has_no_cycles() {
    let series: Vec<f64> = (0..500).map(|i| i as f64).collect();
    let report = detect_cycles(&series, &CycleConfig::default());
    assert_eq!(report.cycles, 0);
}

#[test]
fn flat_series_has_no_cycles() {
    let series = vec![5.0; 300];
    assert_eq!(detect_cycles(&series, &CycleConfig::default()).cycles, 0);
}

#[test]
fn three_period_sine_counts_two_to_three_cycles() {
    let n = 1200;
    let series: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 3.0 * 2.0 * std::f64::consts::PI / n as f64).sin())
        .collect();
    let report = detect_cycles(&series, &CycleConfig::default());
    assert!(
        (2..=3).contains(&report.cycles),
        "cycles {}",
        report.cycles
    );
}

#[test]
fn four_period_orbit_counts_at_least_three_cycles() {
    let params = UNIT_PARAMS;
    let period = params.linearized_period();
    let n = 4000;
    let dt = 4.0 * period / n as f64;
    let traj = integrate_lv(&params, 1.4, 1.0, dt, n).unwrap();
    let q: Vec<f64> = traj.iter().map(|r| r.2).collect();
    let report = detect_cycles(&q, &CycleConfig::default());
    assert!(report.cycles >= 3, "cycles {}", report.cycles);
}
