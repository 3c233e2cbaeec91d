//! Time-domain reference: fixed-step RK4 on the full 3×3 density matrix
//! with the probe's `e^{∓iΔt}` factors kept explicit, followed by Fourier
//! projection of the periodic tail onto harmonics.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{
    flat, full_generator, generator_terms, Frame, Mat3, Mat9, SystemParams, Vec8, Vec9,
    COMPONENT_NAMES, ORDER,
};
use crate::solver::HarmonicSolution;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_WINDOW_PERIODS: usize = 10;
/// Largest per-component change of the final state allowed when halving h.
pub const STEP_HALVING_TOL: f64 = 1e-8;

/// Time after which the trajectory is treated as periodic.
pub fn relaxation_time(p: &SystemParams) -> f64 {
    50.0_f64.max(20.0 / p.gamma2).max(20.0 / p.gamma3)
}

pub fn ground_state() -> Mat3 {
    let mut m = Mat3::zeros();
    m[(0, 0)] = C64::new(1.0, 0.0);
    m
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Mat3>,
    pub step: f64,
    /// Start of the usable (relaxed) part of the trajectory.
    pub relaxation_time: f64,
}

fn to_vec9(m: &Mat3) -> Vec9 {
    Vec9::from_fn(|r, _| m[(r / 3, r % 3)])
}

fn to_mat3(v: &Vec9) -> Mat3 {
    Mat3::from_fn(|i, j| v[flat(i, j)])
}

fn lagrange4(ts: &[f64], t: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for (i, wi) in w.iter_mut().enumerate() {
        for j in 0..4 {
            if i != j {
                *wi *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
    }
    w
}

impl Trajectory {
    /// Wraps pre-computed samples, e.g. synthetic signals.
    pub fn from_samples(times: Vec<f64>, states: Vec<Mat3>, relaxation_time: f64) -> Result<Self> {
        if times.len() != states.len() || times.len() < 4 {
            return Err(Error::Dimension(format!(
                "{} times for {} states (need at least 4)",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("times must be strictly increasing".into()));
        }
        let step = times[1] - times[0];
        Ok(Self {
            times,
            states,
            step,
            relaxation_time,
        })
    }

    pub fn final_state(&self) -> &Mat3 {
        self.states.last().expect("trajectory is never empty")
    }

    /// Cubic interpolation of the state at `t` inside the stored range.
    pub fn interpolate(&self, t: f64) -> Option<Mat3> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(2, n - 2) - 2;
        let w = lagrange4(&self.times[i..i + 4], t);
        Some((0..4).fold(Mat3::zeros(), |acc, j| acc + self.states[i + j] * C64::new(w[j], 0.0)))
    }

    pub fn max_trace_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|m| (m.trace() - C64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|m| (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    pub fn min_population(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|m| (0..3).map(move |i| m[(i, i)].re))
            .fold(f64::INFINITY, f64::min)
    }
}

struct Rhs {
    l0: Mat9,
    lf: Mat9,
    lb: Mat9,
    omega_p: C64,
    delta: f64,
}

impl Rhs {
    fn new(p: &SystemParams) -> Self {
        let (l0, lf, lb) = full_generator(&generator_terms(p, Frame::SingleRotating));
        Self {
            l0,
            lf,
            lb,
            omega_p: p.omega_p(),
            delta: p.delta,
        }
    }

    fn eval(&self, v: &Vec9, t: f64) -> Vec9 {
        let fwd = self.omega_p * C64::from_polar(1.0, -self.delta * t);
        let bwd = self.omega_p.conj() * C64::from_polar(1.0, self.delta * t);
        self.l0 * v + self.lf * v * fwd + self.lb * v * bwd
    }
}

fn check_initial(rho0: &Mat3) -> Result<()> {
    let herm = (rho0 - rho0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let trace = (rho0.trace() - C64::new(1.0, 0.0)).norm();
    if herm > 1e-12 || trace > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "initial state must be Hermitian with unit trace (defects {herm:.1e}, {trace:.1e})"
        )));
    }
    Ok(())
}

/// Classical RK4 with fixed step `h` from t = 0 to `n·h`, `n = round(t_end/h)`.
pub fn integrate(p: &SystemParams, t_end: f64, h: f64, rho0: &Mat3) -> Result<Trajectory> {
    p.validate()?;
    if !(h > 0.0 && h.is_finite() && t_end >= h && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "need h > 0 and t_end >= h, got h = {h}, t_end = {t_end}"
        )));
    }
    check_initial(rho0)?;
    let rhs = Rhs::new(p);
    let n = (t_end / h).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut v = to_vec9(rho0);
    times.push(0.0);
    states.push(*rho0);
    let c = |x: f64| C64::new(x, 0.0);
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = rhs.eval(&v, t);
        let k2 = rhs.eval(&(v + k1 * c(0.5 * h)), t + 0.5 * h);
        let k3 = rhs.eval(&(v + k2 * c(0.5 * h)), t + 0.5 * h);
        let k4 = rhs.eval(&(v + k3 * c(h)), t + h);
        v += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
        times.push((i + 1) as f64 * h);
        states.push(to_mat3(&v));
    }
    Ok(Trajectory {
        times,
        states,
        step: h,
        relaxation_time: relaxation_time(p),
    })
}

fn max_entry_diff(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest per-component change of the final state between steps `h` and
/// `h/2`; fails with [`Error::StepTooLarge`] above [`STEP_HALVING_TOL`].
pub fn step_halving_check(p: &SystemParams, t_end: f64, h: f64, rho0: &Mat3) -> Result<f64> {
    let coarse = integrate(p, t_end, h, rho0)?;
    let fine = integrate(p, t_end, 0.5 * h, rho0)?;
    let max_change = max_entry_diff(coarse.final_state(), fine.final_state());
    if max_change > STEP_HALVING_TOL {
        Err(Error::StepTooLarge { max_change })
    } else {
        Ok(max_change)
    }
}

/// `R_k = (1/W)∫ R(t) e^{ikΔt} dt` over the last `window_periods` periods
/// `W = window_periods·2π/|Δ|`.
///
/// The window is resampled by cubic interpolation onto a uniform grid with
/// spacing at most the trajectory step, so the trapezoid rule sees an exactly
/// periodic integrand and carries no end error.
pub fn project_harmonics(
    traj: &Trajectory,
    delta: f64,
    k_max: usize,
    window_periods: usize,
) -> Result<HarmonicSolution> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParams("projection needs delta != 0".into()));
    }
    if window_periods == 0 {
        return Err(Error::InvalidParams("window_periods must be at least 1".into()));
    }
    let n = traj.times.len();
    let end = traj.times[n - 1];
    let width = window_periods as f64 * 2.0 * PI / delta.abs();
    let start = end - width;
    let usable_from = traj.relaxation_time.max(traj.times[0]);
    if start < usable_from {
        return Err(Error::WindowTooShort {
            needed_from: start,
            available_from: usable_from,
            end,
        });
    }
    let nodes = (width / traj.step).ceil().max(4.0) as usize;
    let dt = width / nodes as f64;
    let samples: Vec<(f64, Vec8)> = (0..nodes)
        .map(|i| {
            let t = start + i as f64 * dt;
            let m = traj.interpolate(t).expect("window lies inside the trajectory");
            (t, Vec8::from_fn(|a, _| m[ORDER[a]]))
        })
        .collect();

    let coefficients = (-(k_max as i64)..=k_max as i64)
        .map(|k| {
            let sum = samples
                .iter()
                .fold(Vec8::zeros(), |acc, (t, v)| acc + v * C64::from_polar(1.0, k as f64 * delta * t));
            sum / C64::new(nodes as f64, 0.0)
        })
        .collect();
    HarmonicSolution::new(k_max, coefficients, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Per harmonic, the absolute deviation of each component.
    pub deviations: Vec<(i64, [f64; 8])>,
    pub max_deviation: f64,
    /// Harmonic and component name of the largest deviation.
    pub worst: Option<(i64, &'static str)>,
    pub abs_tol: f64,
    pub passed: bool,
}

impl std::fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "pass" } else { "fail" };
        match self.worst {
            Some((k, name)) => write!(
                f,
                "{verdict}: max deviation {:.3e} at k = {k}, {name} (tol {:.1e})",
                self.max_deviation, self.abs_tol
            ),
            None => write!(f, "{verdict}: no harmonics compared"),
        }
    }
}

/// Per-harmonic, per-component absolute deviation over the shared k range.
pub fn compare(fl: &HarmonicSolution, reference: &HarmonicSolution, abs_tol: f64) -> ComparisonReport {
    let k_max = fl.k_max.min(reference.k_max) as i64;
    let mut deviations = Vec::new();
    let mut max_deviation = 0.0;
    let mut worst = None;
    for k in -k_max..=k_max {
        let d = fl.harmonic(k) - reference.harmonic(k);
        let mut row = [0.0; 8];
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = d[a].norm();
            if *slot > max_deviation || worst.is_none() {
                max_deviation = max_deviation.max(*slot);
                worst = Some((k, COMPONENT_NAMES[a]));
            }
        }
        deviations.push((k, row));
    }
    ComparisonReport {
        deviations,
        max_deviation,
        worst,
        abs_tol,
        passed: max_deviation <= abs_tol,
    }
}

/// Settings of a time-domain harmonic extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub t_end: f64,
    pub step: f64,
    pub window_periods: usize,
    pub k_max: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            t_end: 60.0,
            step: DEFAULT_STEP,
            window_periods: DEFAULT_WINDOW_PERIODS,
            k_max: 3,
        }
    }
}

/// Integrates from the ground state and projects the final window. The
/// run is extended past `t_end` when the relaxation time plus the window
/// does not fit.
pub fn time_domain_harmonics(p: &SystemParams, cfg: &OracleConfig) -> Result<(HarmonicSolution, Trajectory)> {
    if p.delta == 0.0 {
        return Err(Error::ModeMismatch(
            "time-domain projection needs delta != 0".into(),
        ));
    }
    let window = cfg.window_periods as f64 * 2.0 * PI / p.delta.abs();
    let needed = relaxation_time(p) + window;
    let t_end = if cfg.t_end < needed {
        let t = (needed / cfg.step).ceil() * cfg.step;
        log::info!("extending oracle run from t_end = {} to {t} to fit the window", cfg.t_end);
        t
    } else {
        cfg.t_end
    };
    let traj = integrate(p, t_end, cfg.step, &ground_state())?;
    let sol = project_harmonics(&traj, p.delta, cfg.k_max, cfg.window_periods)?;
    Ok((sol, traj))
}
