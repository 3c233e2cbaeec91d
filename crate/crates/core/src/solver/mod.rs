//! DC and periodic steady states of `Ṙ = M(t)R − Λ(t)`.
//!
//! The periodic state is expanded as `R(t) = Σ_k R_k e^{−ikΔt}`. Matching
//! harmonics gives the block system
//!
//! ```text
//! (M₀ + ikΔ) R_k + Ω_p M₁ R_{k−1} + Ω_p* M₋₁ R_{k+1} = Λ̂_k
//! ```
//!
//! with `Λ̂_0 = Λ₀`, `Λ̂_{±1} = Ω_p Λ₁, Ω_p* Λ₋₁` and zero beyond.

pub mod linear;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{hermitian_partner, max_abs, DensityVector, LiouvillianParts, Mat8, Vec8, RHO31};

pub use linear::{solve_linear, solve_linear_in};

/// Default bound on the block-equation residual.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default relative change of the k = 1 ρ₃₁ coefficient allowed when
/// doubling the truncation.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Truncation used for bistability curves beyond two-photon resonance.
pub const DEFAULT_K_MAX: usize = 6;

pub(crate) fn solve8(m: &Mat8, l: &Vec8, context: &str) -> Result<Vec8> {
    let a = DMatrix::from_iterator(8, 8, m.iter().copied());
    let b = DVector::from_iterator(8, l.iter().copied());
    let x = solve_linear_in(&a, &b, context)?;
    Ok(Vec8::from_iterator(x.iter().copied()))
}

/// Static steady state with its Hermiticity diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    pub state: DensityVector,
    pub hermiticity_defect: f64,
    /// Populations real and within [−1e−8, 1 + 1e−8], pairs Hermitian to 1e−10.
    pub physical: bool,
}

/// Solves `m · R = l` for a time-independent generator.
pub fn steady_state_static(m: &Mat8, l: &Vec8) -> Result<SteadyState> {
    let r = DensityVector(solve8(m, l, "static steady state")?);
    Ok(SteadyState {
        state: r,
        hermiticity_defect: r.hermiticity_defect(),
        physical: r.check_physical(1e-10, 1e-8).is_ok(),
    })
}

/// Ω_p-independent first-order harmonics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub r0: Vec8,
    pub r1: Vec8,
    pub rm1: Vec8,
}

pub fn weak_probe_first_order(parts: &LiouvillianParts, delta: f64) -> Result<FirstOrder> {
    let shift = Mat8::identity() * C64::new(0.0, delta);
    let r0 = solve8(&parts.m0, &parts.l0, "M0 block")?;
    let r1 = solve8(&(parts.m0 + shift), &(parts.l1 - parts.m1 * r0), "M0 + i delta block")?;
    let rm1 = solve8(&(parts.m0 - shift), &(parts.lm1 - parts.mm1 * r0), "M0 - i delta block")?;
    Ok(FirstOrder { r0, r1, rm1 })
}

/// Harmonic coefficients `R_k`, `k ∈ [−k_max, k_max]`, of a periodic state.
/// All Ω_p factors are absorbed into the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSolution {
    pub k_max: usize,
    coefficients: Vec<Vec8>,
    /// Max block residual (∞-norm) for solver output; `None` for projections.
    pub residual_norm: Option<f64>,
}

impl HarmonicSolution {
    pub fn new(k_max: usize, coefficients: Vec<Vec8>, residual_norm: Option<f64>) -> Result<Self> {
        if coefficients.len() != 2 * k_max + 1 {
            return Err(Error::Dimension(format!(
                "{} coefficients for k_max = {k_max}",
                coefficients.len()
            )));
        }
        Ok(Self {
            k_max,
            coefficients,
            residual_norm,
        })
    }

    pub fn get(&self, k: i64) -> Option<&Vec8> {
        let idx = k + self.k_max as i64;
        if idx < 0 {
            return None;
        }
        self.coefficients.get(idx as usize)
    }

    /// `R_k`, zero outside the stored range.
    pub fn harmonic(&self, k: i64) -> Vec8 {
        self.get(k).copied().unwrap_or_else(Vec8::zeros)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Vec8)> {
        let k_max = self.k_max as i64;
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(i, v)| (i as i64 - k_max, v))
    }

    /// The in-phase probe coherence, `ρ₃₁` of `R₁`.
    pub fn rho31_first(&self) -> C64 {
        self.harmonic(1)[RHO31]
    }

    /// Max over k of `|R_{−k} − partner(R_k)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.iter()
            .map(|(k, v)| max_abs(&(self.harmonic(-k) - hermitian_partner(v))))
            .fold(0.0, f64::max)
    }

    /// Evaluates `R(t) = Σ_k R_k e^{−ikΔt}`.
    pub fn evaluate(&self, delta: f64, t: f64) -> Vec8 {
        self.iter()
            .map(|(k, v)| v * C64::from_polar(1.0, -(k as f64) * delta * t))
            .fold(Vec8::zeros(), |acc, v| acc + v)
    }
}

fn block_rhs(parts: &LiouvillianParts, omega_p: C64, k: i64) -> Vec8 {
    match k {
        0 => parts.l0,
        1 => parts.l1 * omega_p,
        -1 => parts.lm1 * omega_p.conj(),
        _ => Vec8::zeros(),
    }
}

/// Max ∞-norm residual of the truncated block equations.
pub fn block_residual(
    parts: &LiouvillianParts,
    delta: f64,
    omega_p: C64,
    sol: &HarmonicSolution,
) -> f64 {
    let k_max = sol.k_max as i64;
    (-k_max..=k_max)
        .map(|k| {
            let diag = parts.m0 + Mat8::identity() * C64::new(0.0, k as f64 * delta);
            let lhs = diag * sol.harmonic(k)
                + parts.m1 * sol.harmonic(k - 1) * omega_p
                + parts.mm1 * sol.harmonic(k + 1) * omega_p.conj();
            max_abs(&(lhs - block_rhs(parts, omega_p, k)))
        })
        .fold(0.0, f64::max)
}

/// Solves the truncated harmonic-balance system as one dense system of size
/// `(2·k_max + 1)·8`, with `R_{±(k_max+1)} = 0`.
pub fn harmonic_balance(
    parts: &LiouvillianParts,
    delta: f64,
    omega_p: C64,
    k_max: usize,
) -> Result<HarmonicSolution> {
    if delta == 0.0 {
        return Err(Error::ModeMismatch(
            "harmonic balance needs delta != 0; use the static steady state at two-photon resonance"
                .into(),
        ));
    }
    if k_max == 0 {
        return Err(Error::InvalidParams("k_max must be at least 1".into()));
    }
    let blocks = 2 * k_max + 1;
    let n = 8 * blocks;
    let k_of = |b: usize| b as i64 - k_max as i64;
    let mut a = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let mut rhs = DVector::from_element(n, C64::new(0.0, 0.0));
    let upper = parts.m1 * omega_p;
    let lower = parts.mm1 * omega_p.conj();
    for b in 0..blocks {
        let k = k_of(b);
        let diag = parts.m0 + Mat8::identity() * C64::new(0.0, k as f64 * delta);
        a.view_mut((8 * b, 8 * b), (8, 8)).copy_from(&diag);
        if b > 0 {
            a.view_mut((8 * b, 8 * (b - 1)), (8, 8)).copy_from(&upper);
        }
        if b + 1 < blocks {
            a.view_mut((8 * b, 8 * (b + 1)), (8, 8)).copy_from(&lower);
        }
        rhs.rows_mut(8 * b, 8).copy_from(&block_rhs(parts, omega_p, k));
    }
    let x = solve_linear_in(&a, &rhs, "harmonic balance")?;
    let coefficients = (0..blocks)
        .map(|b| Vec8::from_iterator(x.rows(8 * b, 8).iter().copied()))
        .collect();
    let mut sol = HarmonicSolution::new(k_max, coefficients, None)?;
    sol.residual_norm = Some(block_residual(parts, delta, omega_p, &sol));
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub k_max: usize,
    pub k_doubled: usize,
    pub rel_change: f64,
    pub converged: bool,
}

impl TruncationReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::TruncationNotConverged {
                k_max: self.k_max,
                k_doubled: self.k_doubled,
                rel_change: self.rel_change,
            })
        }
    }
}

/// Compares the k = 1 ρ₃₁ coefficient at `k_max` and `2·k_max`.
pub fn truncation_check(
    parts: &LiouvillianParts,
    delta: f64,
    omega_p: C64,
    k_max: usize,
) -> Result<TruncationReport> {
    let coarse = harmonic_balance(parts, delta, omega_p, k_max)?.rho31_first();
    let fine = harmonic_balance(parts, delta, omega_p, 2 * k_max)?.rho31_first();
    let scale = fine.norm();
    let rel_change = if scale > 0.0 {
        (fine - coarse).norm() / scale
    } else {
        (fine - coarse).norm()
    };
    Ok(TruncationReport {
        k_max,
        k_doubled: 2 * k_max,
        rel_change,
        converged: rel_change <= TRUNCATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_static, build_liouvillian_parts, SystemParams, RHO13, RHO22};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn base() -> SystemParams {
        SystemParams {
            omega_c_mag: 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn pure_decay_relaxes_to_ground() {
        let parts = build_liouvillian_parts(&SystemParams::default());
        let ss = steady_state_static(&parts.m0, &parts.l0).unwrap();
        let mut expect = Vec8::zeros();
        expect[0] = c(1.0);
        assert!(max_abs(&(ss.state.0 - expect)) < 1e-15);
        assert!(ss.physical);
    }

    #[test]
    fn saturated_two_level_population() {
        let parts = build_liouvillian_parts(&base());
        let ss = steady_state_static(&parts.m0, &parts.l0).unwrap();
        assert!((ss.state.0[RHO22] - c(4.0 / 9.0)).norm() < 1e-14);
    }

    #[test]
    fn weak_probe_static_coherence() {
        let mut p = base();
        p.omega_p_mag = 1e-6;
        let parts = build_liouvillian_parts(&p);
        let (m, l) = assemble_static(&parts, p.omega_p());
        let ss = steady_state_static(&m, &l).unwrap();
        assert!((ss.state.rho31() - C64::new(0.0, 1e-6 / 9.0)).norm() < 1e-12);
    }

    #[test]
    fn first_order_without_interference() {
        let parts = build_liouvillian_parts(&base());
        let fo = weak_probe_first_order(&parts, 0.0).unwrap();
        assert_eq!(fo.r0[RHO31], c(0.0));
        assert_eq!(fo.r0[RHO13], c(0.0));
        assert!((fo.r1[RHO31] - C64::new(0.0, 1.0 / 9.0)).norm() < 1e-14);
    }

    #[test]
    fn first_order_hermitian_pairing() {
        let p = SystemParams {
            gamma2: 0.7,
            gamma3: 1.2,
            eta: 0.6,
            omega_c_mag: 1.5,
            phi_c: 0.3,
            delta_c: -0.4,
            delta: 2.2,
            ..Default::default()
        };
        let fo = weak_probe_first_order(&build_liouvillian_parts(&p), p.delta).unwrap();
        assert!(max_abs(&(fo.rm1 - hermitian_partner(&fo.r1))) < 1e-10);
    }

    #[test]
    fn zero_probe_leaves_only_dc() {
        let p = SystemParams {
            eta: 0.5,
            delta: 3.0,
            ..base()
        };
        let parts = build_liouvillian_parts(&p);
        let sol = harmonic_balance(&parts, 3.0, c(0.0), 3).unwrap();
        let r0 = solve8(&parts.m0, &parts.l0, "dc").unwrap();
        assert!(max_abs(&(sol.harmonic(0) - r0)) < 1e-14);
        for k in [-3, -2, -1, 1, 2, 3] {
            assert_eq!(sol.harmonic(k), Vec8::zeros());
        }
    }

    #[test]
    fn first_harmonic_matches_weak_probe() {
        let p = SystemParams {
            eta: 0.5,
            delta: 3.0,
            ..base()
        };
        let parts = build_liouvillian_parts(&p);
        let op = c(1e-3);
        let sol = harmonic_balance(&parts, 3.0, op, 1).unwrap();
        let fo = weak_probe_first_order(&parts, 3.0).unwrap();
        let ratio = sol.rho31_first() / op;
        assert!((ratio - fo.r1[RHO31]).norm() / fo.r1[RHO31].norm() < 1e-6);
        assert!(sol.residual_norm.unwrap() <= RESIDUAL_TOL);
        assert!(sol.hermiticity_defect() < 1e-9);
    }

    #[test]
    fn harmonic_balance_rejects_resonance() {
        let parts = build_liouvillian_parts(&base());
        assert!(matches!(
            harmonic_balance(&parts, 0.0, c(0.1), 2),
            Err(Error::ModeMismatch(_))
        ));
        assert!(harmonic_balance(&parts, 1.0, c(0.1), 0).is_err());
    }

    #[test]
    fn truncation_converges_for_moderate_probe() {
        let p = SystemParams {
            eta: 0.5,
            delta: 3.0,
            ..base()
        };
        let parts = build_liouvillian_parts(&p);
        let report = truncation_check(&parts, 3.0, c(0.3), 3).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(report.ensure_converged().is_ok());
    }

    #[test]
    fn truncation_flags_strong_probe() {
        let p = SystemParams {
            omega_c_mag: 10.0,
            eta: 0.5,
            delta_c: -4.1,
            delta: 4.1,
            ..Default::default()
        };
        let parts = build_liouvillian_parts(&p);
        let report = truncation_check(&parts, 4.1, c(60.0), 1).unwrap();
        assert!(!report.converged);
        assert!(matches!(
            report.ensure_converged(),
            Err(Error::TruncationNotConverged { .. })
        ));
    }
}
