//! Probe observables: normalised coherence, susceptibility, spectra and
//! group index.
//!
//! The normalised coherence is `s = ρ₃₁/Ω_p`. Absorption is `+Im s`
//! (negative values are gain) and dispersion is `Re s`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{assemble_static, build_conventional, build_liouvillian_parts, SystemParams, RHO31};
use crate::solver::{steady_state_static, weak_probe_first_order};

/// Relative change of `ng − 1` tolerated under ×2 grid refinement.
pub const GROUP_INDEX_REFINE_TOL: f64 = 1e-3;
/// Fraction of max |ng − 1| below which a point counts as a zero crossing.
pub const ZERO_CROSSING_FLOOR: f64 = 1e-2;

/// Dimensionless prefactors standing in for `2N d₃₁²/(ε₀ħγ)` (kappa) and
/// the carrier `ω_p/γ` (w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseScale {
    pub kappa: f64,
    pub w: f64,
}

impl Default for ResponseScale {
    fn default() -> Self {
        Self { kappa: 1.0, w: 1e6 }
    }
}

impl ResponseScale {
    pub fn validate(&self) -> Result<()> {
        if self.kappa > 0.0 && self.w > 0.0 && self.kappa.is_finite() && self.w.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "kappa and w must be positive (kappa = {}, w = {})",
                self.kappa, self.w
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceMode {
    /// Fifth component of the weak-probe first harmonic `r1`.
    FloquetR1,
    /// Full steady state: single-frame static at Δ = 0, bichromatic otherwise.
    StaticFull,
    /// Full steady state of the bichromatic-frame generator.
    ConventionalFull,
}

impl CoherenceMode {
    pub const ALL: [CoherenceMode; 3] = [
        CoherenceMode::FloquetR1,
        CoherenceMode::StaticFull,
        CoherenceMode::ConventionalFull,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CoherenceMode::FloquetR1 => "floquet_r1",
            CoherenceMode::StaticFull => "static_full",
            CoherenceMode::ConventionalFull => "conventional_full",
        }
    }
}

impl fmt::Display for CoherenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoherenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown mode '{s}' (expected floquet_r1, static_full or conventional_full)"
                ))
            })
    }
}

/// `ρ₃₁` per unit `Ω_p` in the requested mode.
pub fn normalized_coherence(p: &SystemParams, mode: CoherenceMode) -> Result<C64> {
    p.validate()?;
    let full = |(m, l)| -> Result<C64> {
        let omega_p = p.omega_p();
        if omega_p.norm() == 0.0 {
            return Err(Error::DivisionByZero(format!(
                "mode {mode} divides rho31 by omega_p, which is zero"
            )));
        }
        Ok(steady_state_static(&m, &l)?.state.rho31() / omega_p)
    };
    match mode {
        CoherenceMode::FloquetR1 => {
            let parts = build_liouvillian_parts(p);
            Ok(weak_probe_first_order(&parts, p.delta)?.r1[RHO31])
        }
        CoherenceMode::StaticFull if p.delta == 0.0 => {
            full(assemble_static(&build_liouvillian_parts(p), p.omega_p()))
        }
        CoherenceMode::StaticFull | CoherenceMode::ConventionalFull => full(build_conventional(p)),
    }
}

/// Coefficients of `ρ₃₁ = c0 + cp·Ω_p + cm·Ω_p*` at Δ_p = Δ_c = 0,
/// γ₂ = γ₃ = 1, with `d` the common denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantCoefficients {
    pub c0: C64,
    pub cp: C64,
    pub cm: C64,
    pub d: C64,
}

impl ResonantCoefficients {
    pub fn rho31(&self, omega_p: C64) -> C64 {
        self.c0 + self.cp * omega_p + self.cm * omega_p.conj()
    }
}

const ZERO_DENOMINATOR: f64 = 1e-12;

fn check_denominator(d: f64, eta: f64, omega_c: f64) -> Result<()> {
    if d.abs() < ZERO_DENOMINATOR {
        Err(Error::ZeroDenominator {
            eta,
            omega_c,
            d_abs: d.abs(),
        })
    } else {
        Ok(())
    }
}

/// The published closed form, evaluated as printed.
pub fn eq9_coefficients(eta: f64, omega_c: f64) -> Result<ResonantCoefficients> {
    let e2 = eta * eta;
    let e4 = e2 * e2;
    let o2 = omega_c * omega_c;
    let o4 = o2 * o2;
    let d = -16.0 + 48.0 * e2 * (1.0 - e2) + 16.0 * o2 * (e4 + 2.0 * e2 - 3.0) + 4.0 * o4 * (e2 - 9.0)
        - 8.0 * o4 * o2;
    check_denominator(d, eta, omega_c)?;
    let c0 = -4.0 * eta * o4 * omega_c + 16.0 * eta * omega_c * (e2 - 1.0).powi(2);
    let cp = -16.0 * (e2 - 1.0).powi(2) - 4.0 * o2 * (4.0 - 5.0 * e2 + 3.0 * e4) + 2.0 * o4 * (e2 - 2.0);
    let cm = -4.0 * o2 * e2 * (3.0 * e2 - 5.0) + 2.0 * o4 * e2;
    Ok(ResonantCoefficients {
        c0: C64::new(0.0, c0 / d),
        cp: C64::new(0.0, cp / d),
        cm: C64::new(0.0, cm / d),
        d: C64::new(d, 0.0),
    })
}

/// Exact closed form of the same coefficients, obtained by solving the
/// resonant steady state symbolically. `d` holds `Q`, the denominator of
/// `c0`; `cp` and `cm` have denominator `Q²`.
pub fn exact_resonant_coefficients(eta: f64, omega_c: f64) -> Result<ResonantCoefficients> {
    let e2 = eta * eta;
    let e4 = e2 * e2;
    let o2 = omega_c * omega_c;
    let o4 = o2 * o2;
    let u = 1.0 - e2;
    let q = 2.0 * o4 + (3.0 * e2 + 5.0) * o2 + 2.0 * u * u;
    check_denominator(q, eta, omega_c)?;
    let q2 = q * q;
    let c0 = eta * omega_c * (o2 + 2.0 * e2 - 2.0) / q;
    let cp = (2.0 * o4 * o2 + (2.0 * e4 - 3.0 * e2 + 9.0) * o4 + 12.0 * u * u * o2 + 4.0 * u * u * u) / q2;
    let cm = 2.0 * o2 * e2 * (o2 + 8.0) * (e2 - 1.0) / q2;
    Ok(ResonantCoefficients {
        c0: C64::new(0.0, c0),
        cp: C64::new(0.0, cp),
        cm: C64::new(0.0, cm),
        d: C64::new(q, 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Probe detuning Δ_p = Δ + Δ_c.
    pub detuning: f64,
    pub s: C64,
    pub chi: C64,
    pub absorption: f64,
    pub dispersion: f64,
}

impl SpectrumPoint {
    pub fn new(detuning: f64, s: C64, scale: &ResponseScale) -> Self {
        Self {
            detuning,
            s,
            chi: s * scale.kappa,
            absorption: s.im,
            dispersion: s.re,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Delta,
    DeltaC,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::Delta => "delta",
            SweepVariable::DeltaC => "delta_c",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(SweepVariable::Delta),
            "delta_c" => Ok(SweepVariable::DeltaC),
            _ => Err(Error::InvalidParams(format!(
                "unknown sweep variable '{s}' (expected delta or delta_c)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParams(format!(
                "sweep count must be at least 2, got {}",
                self.count
            )));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParams(format!(
                "sweep needs start < stop, got [{}, {}]",
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

    /// Same range with the spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            count: 2 * self.count - 1,
            ..*self
        }
    }

    pub fn apply(&self, template: &SystemParams, value: f64) -> SystemParams {
        let mut p = *template;
        match self.variable {
            SweepVariable::Delta => p.delta = value,
            SweepVariable::DeltaC => p.delta_c = value,
        }
        p
    }
}

/// Spectrum samples in grid order plus the grid values that failed.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub gaps: Vec<(f64, Error)>,
}

pub fn spectrum(
    template: &SystemParams,
    sweep: &Sweep,
    mode: CoherenceMode,
    scale: &ResponseScale,
) -> Result<Spectrum> {
    sweep.validate()?;
    scale.validate()?;
    template.validate()?;
    let results: Vec<(f64, Result<SpectrumPoint>)> = sweep
        .values()
        .into_par_iter()
        .map(|v| {
            let p = sweep.apply(template, v);
            let r = normalized_coherence(&p, mode).map(|s| SpectrumPoint::new(p.delta_p(), s, scale));
            (v, r)
        })
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut gaps = Vec::new();
    for (v, r) in results {
        match r {
            Ok(pt) => points.push(pt),
            Err(e) => {
                log::warn!("spectrum point {} = {v} failed: {e}", sweep.variable.as_str());
                gaps.push((v, e));
            }
        }
    }
    if points.is_empty() {
        let first = gaps.first().map(|(_, e)| e.to_string()).unwrap_or_default();
        return Err(Error::NoValidPoints(format!("every spectrum point failed ({first})")));
    }
    Ok(Spectrum { points, gaps })
}

/// `ng − 1 = 2π·kappa·(Re s + w·dRe s/dΔ_p)` on a uniform grid, central
/// differences inside and one-sided differences at the ends.
pub fn group_index(points: &[SpectrumPoint], scale: &ResponseScale) -> Result<Vec<(f64, f64)>> {
    scale.validate()?;
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "group index needs at least 3 points, got {n}"
        )));
    }
    let h = (points[n - 1].detuning - points[0].detuning) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::InvalidParams("group index needs increasing detunings".into()));
    }
    for w in points.windows(2) {
        if ((w[1].detuning - w[0].detuning) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidParams(
                "group index needs a uniform grid without gaps".into(),
            ));
        }
    }
    let re: Vec<f64> = points.iter().map(|p| p.dispersion).collect();
    let two_pi_kappa = 2.0 * std::f64::consts::PI * scale.kappa;
    Ok((0..n)
        .map(|i| {
            let slope = if i == 0 {
                (re[1] - re[0]) / h
            } else if i == n - 1 {
                (re[n - 1] - re[n - 2]) / h
            } else {
                (re[i + 1] - re[i - 1]) / (2.0 * h)
            };
            (points[i].detuning, two_pi_kappa * (re[i] + scale.w * slope))
        })
        .collect())
}

/// Group index on `sweep` plus the largest relative change at interior points
/// when the grid is refined by 2. Points where `|ng − 1|` is below 1e−2 of its
/// maximum (zero crossings) are not compared.
#[derive(Debug, Clone)]
pub struct GroupIndexReport {
    pub values: Vec<(f64, f64)>,
    pub max_rel_change: f64,
    pub worst_at: f64,
}

impl GroupIndexReport {
    pub fn ensure_resolved(&self) -> Result<()> {
        if self.max_rel_change > GROUP_INDEX_REFINE_TOL {
            Err(Error::GridTooCoarse {
                at: self.worst_at,
                rel_change: self.max_rel_change,
            })
        } else {
            Ok(())
        }
    }
}

pub fn group_index_with_refinement(
    template: &SystemParams,
    sweep: &Sweep,
    mode: CoherenceMode,
    scale: &ResponseScale,
) -> Result<GroupIndexReport> {
    let coarse = spectrum(template, sweep, mode, scale)?;
    let fine = spectrum(template, &sweep.refined(), mode, scale)?;
    if !coarse.gaps.is_empty() || !fine.gaps.is_empty() {
        return Err(Error::NoValidPoints(
            "group index refinement needs every grid point to succeed".into(),
        ));
    }
    let values = group_index(&coarse.points, scale)?;
    let fine_values = group_index(&fine.points, scale)?;
    let floor = ZERO_CROSSING_FLOOR * values.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
    let mut max_rel_change = 0.0;
    let mut worst_at = f64::NAN;
    for i in 1..values.len() - 1 {
        let (at, v) = values[i];
        if v.abs() < floor {
            continue;
        }
        let rel = (fine_values[2 * i].1 - v).abs() / v.abs();
        if rel > max_rel_change {
            max_rel_change = rel;
            worst_at = at;
        }
    }
    Ok(GroupIndexReport {
        values,
        max_rel_change,
        worst_at,
    })
}
