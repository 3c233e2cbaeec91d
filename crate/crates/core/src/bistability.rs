//! Mean-field ring-cavity input–output map `y = x − 2iCγ₃ρ₃₁(x)`.
//!
//! `x` is the normalised transmitted field, which sets the intracavity probe
//! `Ω_p = x_to_omega_p·x·e^{iφ_p}`. The map is single-valued in `x`, so
//! curves are traced over an `x` grid and read backwards for `y`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{assemble_static, build_liouvillian_parts, SystemParams, RHO31};
use crate::solver::{harmonic_balance, solve8, steady_state_static, DEFAULT_K_MAX};

/// Fraction of grid points that must succeed for a curve to be usable.
pub const MIN_VALID_FRACTION: f64 = 0.9;
/// Bisection tolerance on turning-point abscissae.
pub const TURNING_TOL: f64 = 1e-6;
/// Relative bisection tolerance on branch abscissae.
pub const BRANCH_TOL: f64 = 1e-8;
const SLOPE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OBParams {
    pub c_coop: f64,
    pub x_to_omega_p: f64,
    /// Phase φ_p given to the intracavity probe.
    pub phase_x: f64,
}

impl Default for OBParams {
    fn default() -> Self {
        Self {
            c_coop: 400.0,
            x_to_omega_p: 1.0,
            phase_x: 0.0,
        }
    }
}

impl OBParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_coop >= 0.0 && self.c_coop.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "c_coop must be non-negative, got {}",
                self.c_coop
            )));
        }
        if !(self.x_to_omega_p > 0.0 && self.x_to_omega_p.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "x_to_omega_p must be positive, got {}",
                self.x_to_omega_p
            )));
        }
        if !self.phase_x.is_finite() {
            return Err(Error::InvalidParams("phase_x must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObMode {
    /// Full static steady state; requires Δ = 0.
    Static,
    /// In-phase harmonic of the truncated harmonic balance; requires Δ ≠ 0.
    Floquet { k_max: usize },
    /// Only the first-harmonic block at Δ = 0, fed with the full static state
    /// at the same Ω_p: `ρ₃₁ = Ω_p·[M₀⁻¹(Λ₁ − M₁R)]₃₁`.
    R1Only,
}

impl ObMode {
    pub fn floquet() -> Self {
        ObMode::Floquet { k_max: DEFAULT_K_MAX }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObMode::Static => "static",
            ObMode::Floquet { .. } => "floquet",
            ObMode::R1Only => "r1_only",
        }
    }
}

/// Probe coherence ρ₃₁ (Ω_p factors included) at a given Ω_p.
fn probe_coherence(p: &SystemParams, omega_p: C64, mode: ObMode) -> Result<C64> {
    let resonant = p.delta == 0.0;
    match mode {
        ObMode::Static | ObMode::R1Only if !resonant => Err(Error::ModeMismatch(format!(
            "{} mode needs delta = 0, got {}; use floquet",
            mode.name(),
            p.delta
        ))),
        ObMode::Floquet { .. } if resonant => Err(Error::ModeMismatch(
            "floquet mode needs delta != 0; use static at two-photon resonance".into(),
        )),
        ObMode::Static => {
            let (m, l) = assemble_static(&build_liouvillian_parts(p), omega_p);
            Ok(steady_state_static(&m, &l)?.state.rho31())
        }
        ObMode::R1Only => {
            let parts = build_liouvillian_parts(p);
            let (m, l) = assemble_static(&parts, omega_p);
            let r = steady_state_static(&m, &l)?.state.0;
            let r1 = solve8(&parts.m0, &(parts.l1 - parts.m1 * r), "M0 block")?;
            Ok(omega_p * r1[RHO31])
        }
        ObMode::Floquet { k_max } => {
            let parts = build_liouvillian_parts(p);
            Ok(harmonic_balance(&parts, p.delta, omega_p, k_max)?.rho31_first())
        }
    }
}

/// `y(x)`, phase-referenced to the probe: `y = x − 2iCγ₃ρ₃₁e^{−iφ_p}`.
pub fn output_field(x: f64, params: &SystemParams, ob: &OBParams, mode: ObMode) -> Result<C64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParams(format!("x must be non-negative, got {x}")));
    }
    let omega_p = C64::from_polar(ob.x_to_omega_p * x, ob.phase_x);
    let rho31 = probe_coherence(params, omega_p, mode)?;
    let shift = C64::new(0.0, 2.0 * ob.c_coop * params.gamma3) * rho31 * C64::from_polar(1.0, -ob.phase_x);
    Ok(C64::new(x, 0.0) - shift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl XGrid {
    pub fn validate(&self) -> Result<()> {
        if self.count < 16 {
            return Err(Error::InvalidParams(format!(
                "x grid needs at least 16 points, got {}",
                self.count
            )));
        }
        if !(self.start >= 0.0 && self.start < self.stop && self.stop.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "x grid needs 0 <= start < stop, got [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObPoint {
    pub x: f64,
    pub y: C64,
    pub y_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub x: f64,
    pub y_abs: f64,
    pub kind: TurningKind,
}

#[derive(Debug, Clone)]
pub struct OBCurve {
    pub points: Vec<ObPoint>,
    pub failures: Vec<(f64, Error)>,
    pub turning_points: Vec<TurningPoint>,
    /// First local maximum of |y|: the switch-up point.
    pub threshold_up: Option<TurningPoint>,
}

impl OBCurve {
    pub fn threshold(&self) -> Option<f64> {
        threshold(self)
    }

    pub fn y_abs_range(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y_abs), hi.max(p.y_abs))
        })
    }
}

/// |y| at the first turning point that is a local maximum; `None` when
/// |y| has no maximum in the sampled range.
pub fn threshold(curve: &OBCurve) -> Option<f64> {
    curve.threshold_up.map(|t| t.y_abs)
}

fn abs_y(x: f64, params: &SystemParams, ob: &OBParams, mode: ObMode) -> Result<f64> {
    output_field(x, params, ob, mode).map(|y| y.norm())
}

fn slope(x: f64, params: &SystemParams, ob: &OBParams, mode: ObMode) -> Result<f64> {
    let d = SLOPE_STEP;
    if x - d < 0.0 {
        Ok((abs_y(x + d, params, ob, mode)? - abs_y(x, params, ob, mode)?) / d)
    } else {
        Ok((abs_y(x + d, params, ob, mode)? - abs_y(x - d, params, ob, mode)?) / (2.0 * d))
    }
}

/// Bisection on the sign of d|y|/dx inside `[lo, hi]`. Falls back to
/// `fallback` when the end slopes do not bracket a sign change.
fn refine_turning(
    lo: f64,
    hi: f64,
    fallback: f64,
    params: &SystemParams,
    ob: &OBParams,
    mode: ObMode,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let sa = slope(a, params, ob, mode)?;
    let sb = slope(b, params, ob, mode)?;
    if sa * sb > 0.0 {
        return Ok(fallback);
    }
    let rising = sa > 0.0;
    while b - a > TURNING_TOL {
        let m = 0.5 * (a + b);
        if (slope(m, params, ob, mode)? > 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn sample(
    params: &SystemParams,
    ob: &OBParams,
    grid: &XGrid,
    mode: ObMode,
) -> Result<(Vec<ObPoint>, Vec<(f64, Error)>)> {
    params.validate()?;
    ob.validate()?;
    grid.validate()?;
    let results: Vec<(f64, Result<C64>)> = grid
        .values()
        .into_par_iter()
        .map(|x| (x, output_field(x, params, ob, mode)))
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (x, r) in results {
        match r {
            Ok(y) => points.push(ObPoint { x, y, y_abs: y.norm() }),
            Err(e) => {
                if matches!(e, Error::ModeMismatch(_) | Error::InvalidParams(_)) {
                    return Err(e);
                }
                log::warn!("ob point x = {x} failed: {e}");
                failures.push((x, e));
            }
        }
    }
    if (points.len() as f64) < MIN_VALID_FRACTION * grid.count as f64 {
        return Err(Error::NoValidPoints(format!(
            "only {} of {} ob points succeeded",
            points.len(),
            grid.count
        )));
    }
    Ok((points, failures))
}

pub fn ob_curve(params: &SystemParams, ob: &OBParams, grid: &XGrid, mode: ObMode) -> Result<OBCurve> {
    let (points, failures) = sample(params, ob, grid, mode)?;
    let mut turning_points = Vec::new();
    for w in points.windows(3) {
        let left = w[1].y_abs - w[0].y_abs;
        let right = w[2].y_abs - w[1].y_abs;
        if left * right < 0.0 {
            let x = refine_turning(w[0].x, w[2].x, w[1].x, params, ob, mode)?;
            let kind = if left > 0.0 {
                TurningKind::Maximum
            } else {
                TurningKind::Minimum
            };
            turning_points.push(TurningPoint {
                x,
                y_abs: abs_y(x, params, ob, mode)?,
                kind,
            });
        }
    }
    let threshold_up = turning_points
        .iter()
        .copied()
        .find(|t| t.kind == TurningKind::Maximum);
    Ok(OBCurve {
        points,
        failures,
        turning_points,
        threshold_up,
    })
}

/// All `x` in the grid range with `|y(x)| = y_target_abs`, bracketed from the
/// sampled curve and refined by bisection on fresh evaluations.
pub fn branches_for_input(
    params: &SystemParams,
    ob: &OBParams,
    grid: &XGrid,
    mode: ObMode,
    y_target_abs: f64,
) -> Result<Vec<f64>> {
    let (points, _) = sample(params, ob, grid, mode)?;
    let (min, max) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.y_abs), hi.max(p.y_abs))
    });
    if !(y_target_abs >= min && y_target_abs <= max) {
        return Err(Error::NoBracket {
            target: y_target_abs,
            min,
            max,
        });
    }
    let f = |x: f64| abs_y(x, params, ob, mode).map(|a| a - y_target_abs);
    let mut roots: Vec<f64> = Vec::new();
    for (i, w) in points.windows(2).enumerate() {
        let (fa, fb) = (w[0].y_abs - y_target_abs, w[1].y_abs - y_target_abs);
        if fa == 0.0 {
            roots.push(w[0].x);
            continue;
        }
        if fb == 0.0 {
            if i + 2 == points.len() {
                roots.push(w[1].x);
            }
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        let (mut a, mut b) = (w[0].x, w[1].x);
        let a_positive = fa > 0.0;
        while b - a > BRANCH_TOL * b.abs().max(f64::MIN_POSITIVE) {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (f(m)? > 0.0) == a_positive {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(roots)
}
