//! Population-series analysis: the two-species interaction ODE, its
//! conserved quantity, parameter fitting from recorded series, phase
//! lag and cycle detection.
//!
//! One simulation step is one time unit throughout; rates are per step.

pub mod csvio;

use crate::error::AnalysisError;
use crate::world::WorldState;

/// One recorded population row. `group_proportion` is grouped alive
/// predators over alive predators (0 when none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationRecord {
    pub t: u64,
    pub n_predators: u64,
    pub n_prey_group: u64,
    pub n_prey_solo: u64,
    pub group_proportion: f64,
}

impl PopulationRecord {
    pub fn total_prey(&self) -> u64 {
        self.n_prey_group + self.n_prey_solo
    }
}

/// Interaction model coefficients: prey grow at `alpha`, are taken at
/// `beta` per predator, convert into predators at `delta` per prey, and
/// predators die at `gamma_lv`. Named `gamma_lv` to keep clear of the
/// learner's discount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma_lv: f64,
}

impl LvParams {
    /// Equilibrium `(p*, q*) = (gamma_lv / delta, alpha / beta)`.
    pub fn equilibrium(&self) -> (f64, f64) {
        (self.gamma_lv / self.delta, self.alpha / self.beta)
    }

    /// A closed-orbit fit needs all four coefficients positive.
    pub fn is_oscillatory(&self) -> bool {
        self.alpha > 0.0 && self.beta > 0.0 && self.delta > 0.0 && self.gamma_lv > 0.0
    }

    /// Small-oscillation period around the equilibrium.
    pub fn linearized_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.alpha * self.gamma_lv).sqrt()
    }
}

fn derivatives_raw(params: &LvParams, p: f64, q: f64) -> (f64, f64) {
    (
        p * (params.alpha - params.beta * q),
        q * (params.delta * p - params.gamma_lv),
    )
}

/// `(dp/dt, dq/dt)` at `(p, q)`; populations must be positive.
pub fn lv_derivatives(params: &LvParams, p: f64, q: f64) -> Result<(f64, f64), AnalysisError> {
    if p <= 0.0 || q <= 0.0 {
        return Err(AnalysisError::NonPositivePopulation { p, q });
    }
    Ok(derivatives_raw(params, p, q))
}

/// Classical fourth-order Runge-Kutta trajectory of `(t, p, q)`,
/// including the initial point.
pub fn integrate_lv(
    params: &LvParams,
    p0: f64,
    q0: f64,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<(f64, f64, f64)>, AnalysisError> {
    if p0 <= 0.0 || q0 <= 0.0 {
        return Err(AnalysisError::NonPositivePopulation { p: p0, q: q0 });
    }
    assert!(dt > 0.0 && dt.is_finite(), "positive finite dt required");
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push((0.0, p0, q0));
    let (mut p, mut q) = (p0, q0);
    for step in 1..=n_steps {
        let (k1p, k1q) = derivatives_raw(params, p, q);
        let (k2p, k2q) = derivatives_raw(params, p + 0.5 * dt * k1p, q + 0.5 * dt * k1q);
        let (k3p, k3q) = derivatives_raw(params, p + 0.5 * dt * k2p, q + 0.5 * dt * k2q);
        let (k4p, k4q) = derivatives_raw(params, p + dt * k3p, q + dt * k3q);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        if !p.is_finite() || !q.is_finite() {
            return Err(AnalysisError::Diverged { step });
        }
        traj.push((step as f64 * dt, p, q));
    }
    Ok(traj)
}

/// The conserved quantity
/// `V = -delta p + gamma_lv ln(p) - beta q + alpha ln(q)`.
pub fn lv_invariant(params: &LvParams, p: f64, q: f64) -> Result<f64, AnalysisError> {
    if p <= 0.0 || q <= 0.0 {
        return Err(AnalysisError::NonPositivePopulation { p, q });
    }
    Ok(-params.delta * p + params.gamma_lv * p.ln() - params.beta * q + params.alpha * q.ln())
}

/// Fit diagnostics alongside the recovered coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvFit {
    pub params: LvParams,
    /// Coefficient of determination of the prey-rate regression.
    pub r2_prey: f64,
    /// Coefficient of determination of the predator-rate regression.
    pub r2_predator: f64,
}

/// Fit the interaction coefficients from a recorded series.
///
/// The series is smoothed with a centered moving average of
/// `smoothing_window` samples (forced odd), per-capita growth rates are
/// taken as centered differences of the log-smoothed series, and the
/// two rate equations are solved as independent linear least squares:
/// `dln(p)/dt ~ alpha - beta q` and `dln(q)/dt ~ delta p - gamma_lv`.
pub fn fit_lv(series: &[PopulationRecord], smoothing_window: usize) -> Result<LvFit, AnalysisError> {
    let window = smoothing_window.max(1) | 1;
    if series.len() < 3 * window {
        return Err(AnalysisError::DegenerateFit(format!(
            "need at least {} rows for window {window}, got {}",
            3 * window,
            series.len()
        )));
    }
    for (row, rec) in series.iter().enumerate() {
        if rec.total_prey() == 0 || rec.n_predators == 0 {
            return Err(AnalysisError::BadSeries {
                row,
                reason: format!(
                    "population must be positive to fit (prey={}, predators={})",
                    rec.total_prey(),
                    rec.n_predators
                ),
            });
        }
    }
    let dt = if series.len() >= 2 {
        (series[1].t - series[0].t) as f64
    } else {
        1.0
    };
    if dt <= 0.0 {
        return Err(AnalysisError::BadSeries {
            row: 1,
            reason: "time column must be strictly increasing".into(),
        });
    }
    for (row, pair) in series.windows(2).enumerate() {
        if (pair[1].t - pair[0].t) as f64 != dt {
            return Err(AnalysisError::BadSeries {
                row: row + 1,
                reason: "time column must be uniformly spaced".into(),
            });
        }
    }

    let p: Vec<f64> = series.iter().map(|r| r.total_prey() as f64).collect();
    let q: Vec<f64> = series.iter().map(|r| r.n_predators as f64).collect();
    let ps = moving_average(&p, window);
    let qs = moving_average(&q, window);

    // centered log-derivative samples paired with the local populations
    let lo = 1;
    let hi = ps.len() - 1;
    let mut dlnp = Vec::with_capacity(hi - lo);
    let mut dlnq = Vec::with_capacity(hi - lo);
    let mut q_at = Vec::with_capacity(hi - lo);
    let mut p_at = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        dlnp.push((ps[i + 1].ln() - ps[i - 1].ln()) / (2.0 * dt));
        dlnq.push((qs[i + 1].ln() - qs[i - 1].ln()) / (2.0 * dt));
        q_at.push(qs[i]);
        p_at.push(ps[i]);
    }

    let (a_p, b_p, r2_prey) = linear_fit(&q_at, &dlnp)?;
    let (a_q, b_q, r2_predator) = linear_fit(&p_at, &dlnq)?;
    Ok(LvFit {
        params: LvParams {
            alpha: a_p,
            beta: -b_p,
            delta: b_q,
            gamma_lv: -a_q,
        },
        r2_prey,
        r2_predator,
    })
}

/// Centered moving average; the output drops `window / 2` samples at
/// each edge.
fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = series.len();
    let mut out = Vec::with_capacity(n - 2 * half);
    let mut sum: f64 = series[..window].iter().sum();
    out.push(sum / window as f64);
    for i in half + 1..n - half {
        sum += series[i + half] - series[i - half - 1];
        out.push(sum / window as f64);
    }
    out
}

/// Least squares `y = a + b x`; returns `(a, b, r_squared)`.
fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64), AnalysisError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateFit(
            "regressor has zero variance".into(),
        ));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let pred = a + b * xi;
        ss_res += (yi - pred) * (yi - pred);
        ss_tot += (yi - my) * (yi - my);
    }
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((a, b, r2))
}

/// Lag of `q` behind `p` as a fraction of the dominant period of `p`,
/// in `[0, 1)`.
///
/// Both series are mean-removed; the dominant period is the lag of the
/// autocorrelation maximum of `p` past its first zero crossing, and the
/// reported lag maximizes the cross-correlation of `q` against `p`
/// within one period.
pub fn phase_lag(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    assert_eq!(p.len(), q.len(), "series lengths must match");
    let n = p.len();
    if n < 8 {
        return Err(AnalysisError::NoCycle);
    }
    let mp = p.iter().sum::<f64>() / n as f64;
    let mq = q.iter().sum::<f64>() / n as f64;
    let pc: Vec<f64> = p.iter().map(|v| v - mp).collect();
    let qc: Vec<f64> = q.iter().map(|v| v - mq).collect();

    let period = dominant_period(&pc)?;
    let mut best_lag = 0usize;
    let mut best = f64::NEG_INFINITY;
    for lag in 0..period {
        let overlap = n - lag;
        let mut c = 0.0;
        for i in 0..overlap {
            c += pc[i] * qc[i + lag];
        }
        let c = c / overlap as f64;
        if c > best {
            best = c;
            best_lag = lag;
        }
    }
    Ok(best_lag as f64 / period as f64)
}

/// Dominant period of a raw series in samples, from the autocorrelation
/// peak of the mean-removed series.
pub fn dominant_period_of(series: &[f64]) -> Result<usize, AnalysisError> {
    let n = series.len();
    if n < 8 {
        return Err(AnalysisError::NoCycle);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    dominant_period(&centered)
}

/// Lag (in samples) of the autocorrelation peak past the first zero
/// crossing, searched up to half the series length.
fn dominant_period(centered: &[f64]) -> Result<usize, AnalysisError> {
    let n = centered.len();
    let max_lag = n / 2;
    let r0: f64 = centered.iter().map(|v| v * v).sum();
    if r0 == 0.0 {
        return Err(AnalysisError::NoCycle);
    }
    let autocorr = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += centered[i] * centered[i + lag];
        }
        s / r0
    };
    let mut zero_cross = None;
    for lag in 1..max_lag {
        if autocorr(lag) < 0.0 {
            zero_cross = Some(lag);
            break;
        }
    }
    let Some(start) = zero_cross else {
        return Err(AnalysisError::NoCycle);
    };
    let mut best_lag = 0;
    let mut best = f64::NEG_INFINITY;
    for lag in start..max_lag {
        let r = autocorr(lag);
        if r > best {
            best = r;
            best_lag = lag;
        }
    }
    if best <= 0.0 || best_lag == 0 {
        return Err(AnalysisError::NoCycle);
    }
    Ok(best_lag)
}

/// Peak-counting configuration for `detect_cycles`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    /// Moving-average window; 0 picks `len / 50` (at least 1).
    pub smoothing_window: usize,
    /// Peaks must exceed `mean + prominence * stddev` of the smoothed
    /// series.
    pub prominence: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            smoothing_window: 0,
            prominence: 0.5,
        }
    }
}

/// Completed oscillations in a series: prominent local maxima of the
/// smoothed series, minus one (never negative).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub cycles: usize,
    /// Peak positions as indices into the original series.
    pub peak_indices: Vec<usize>,
}

pub fn detect_cycles(series: &[f64], cfg: &CycleConfig) -> CycleReport {
    if series.len() < 3 {
        return CycleReport {
            cycles: 0,
            peak_indices: Vec::new(),
        };
    }
    let window = if cfg.smoothing_window == 0 {
        (series.len() / 50).max(1) | 1
    } else {
        cfg.smoothing_window.max(1) | 1
    };
    let window = window.min((series.len() / 3).max(1) | 1);
    let smoothed = moving_average(series, window);
    let half = window / 2;
    let n = smoothed.len();
    if n < 3 {
        return CycleReport {
            cycles: 0,
            peak_indices: Vec::new(),
        };
    }
    let mean = smoothed.iter().sum::<f64>() / n as f64;
    let var = smoothed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let floor = mean + cfg.prominence * var.sqrt();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if smoothed[i] > smoothed[i - 1] && smoothed[i] > smoothed[i + 1] && smoothed[i] > floor {
            peaks.push(i + half);
        }
    }
    CycleReport {
        cycles: peaks.len().saturating_sub(1),
        peak_indices: peaks,
    }
}

/// Fraction of alive predators currently in a group; 0 for an empty
/// population.
pub fn group_proportion(world: &WorldState) -> f64 {
    let total = world.alive_predators();
    if total == 0 {
        return 0.0;
    }
    world.grouped_predators() as f64 / total as f64
}
