//! Parameter space and the time-harmonic generator of the reduced
//! density-matrix equations.
//!
//! Levels are indexed `0 = |1⟩` (ground), `1 = |2⟩` (coupled by Ω_c) and
//! `2 = |3⟩` (coupled by Ω_p). The interaction-picture Hamiltonian used
//! throughout is
//!
//! ```text
//! H = −Δ_c(|2⟩⟨2| + |3⟩⟨3|) − Ω_c|2⟩⟨1| − Ω_p e^{−iΔt}|3⟩⟨1| + h.c.
//! ```
//!
//! (single rotating frame, Δ = Δ_p − Δ_c), with radiative decay
//! `−2γ₂ρ₂₂`, `−2γ₃ρ₃₃` and the cross-damping `−η√(γ₂γ₃)` terms.
//!
//! The reduced vector is `R = (ρ₁₁, ρ₂₂, ρ₁₂, ρ₂₁, ρ₃₁, ρ₁₃, ρ₂₃, ρ₃₂)` with
//! `ρ₃₃ = 1 − ρ₁₁ − ρ₂₂`, and obeys `Ṙ = M(t)R − Λ(t)`.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Mat8 = SMatrix<C64, 8, 8>;
pub type Vec8 = SVector<C64, 8>;
pub type Mat9 = SMatrix<C64, 9, 9>;
pub type Vec9 = SVector<C64, 9>;
pub type Mat3 = Matrix3<C64>;

/// Matrix index pairs of the reduced vector, in order.
pub const ORDER: [(usize, usize); 8] = [
    (0, 0),
    (1, 1),
    (0, 1),
    (1, 0),
    (2, 0),
    (0, 2),
    (1, 2),
    (2, 1),
];

pub const RHO11: usize = 0;
pub const RHO22: usize = 1;
pub const RHO12: usize = 2;
pub const RHO21: usize = 3;
pub const RHO31: usize = 4;
pub const RHO13: usize = 5;
pub const RHO23: usize = 6;
pub const RHO32: usize = 7;

pub const COMPONENT_NAMES: [&str; 8] = [
    "rho11", "rho22", "rho12", "rho21", "rho31", "rho13", "rho23", "rho32",
];

/// Interference strengths at or above this are flagged as near-degenerate.
pub const NEAR_DEGENERATE_ETA: f64 = 0.999;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Position of `ρ_ij` in the row-major 9-vector of the full density matrix.
#[inline]
pub fn flat(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Physical parameters of the driven atom, all rates in units of γ.
///
/// The probe detuning is not stored: Δ_p = Δ + Δ_c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub gamma2: f64,
    pub gamma3: f64,
    pub eta: f64,
    pub omega_c_mag: f64,
    pub phi_c: f64,
    pub omega_p_mag: f64,
    pub phi_p: f64,
    pub delta_c: f64,
    /// Two-photon detuning Δ = Δ_p − Δ_c.
    pub delta: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            gamma2: 1.0,
            gamma3: 1.0,
            eta: 0.0,
            omega_c_mag: 0.0,
            phi_c: 0.0,
            omega_p_mag: 0.0,
            phi_p: 0.0,
            delta_c: 0.0,
            delta: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma2,
            self.gamma3,
            self.eta,
            self.omega_c_mag,
            self.phi_c,
            self.omega_p_mag,
            self.phi_p,
            self.delta_c,
            self.delta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if !(self.gamma2 > 0.0 && self.gamma3 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "decay rates must be positive (gamma2 = {}, gamma3 = {})",
                self.gamma2, self.gamma3
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParams(format!(
                "eta must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if self.omega_c_mag < 0.0 || self.omega_p_mag < 0.0 {
            return Err(Error::InvalidParams(
                "Rabi-frequency magnitudes must be non-negative".into(),
            ));
        }
        if self.eta >= NEAR_DEGENERATE_ETA {
            log::warn!(
                "eta = {} is close to 1; the steady state is near-degenerate",
                self.eta
            );
        }
        Ok(())
    }

    pub fn delta_p(&self) -> f64 {
        self.delta + self.delta_c
    }

    pub fn omega_c(&self) -> C64 {
        C64::from_polar(self.omega_c_mag, self.phi_c)
    }

    pub fn omega_p(&self) -> C64 {
        C64::from_polar(self.omega_p_mag, self.phi_p)
    }

    /// Relative phase Δφ = φ_c − φ_p.
    pub fn phase_difference(&self) -> f64 {
        self.phi_c - self.phi_p
    }

    /// η√(γ₂γ₃), the cross-damping rate.
    pub fn cross_damping(&self) -> f64 {
        self.eta * (self.gamma2 * self.gamma3).sqrt()
    }

    pub fn is_two_photon_resonant(&self) -> bool {
        self.delta == 0.0
    }
}

/// Which rotating frame the coherence detuning slots are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Both excited levels rotate at the coupling frequency; the probe
    /// carries explicit `e^{∓iΔt}` factors.
    SingleRotating,
    /// Each transition rotates with its own field; the interference
    /// cross-terms are kept without their `e^{±iΔt}` oscillation.
    Bichromatic,
}

/// Time dependence attached to a generator term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Static,
    /// Multiplied by Ω_p e^{−iΔt}.
    ProbeForward,
    /// Multiplied by Ω_p* e^{iΔt}.
    ProbeBackward,
}

impl Tag {
    fn conjugate(self) -> Self {
        match self {
            Tag::Static => Tag::Static,
            Tag::ProbeForward => Tag::ProbeBackward,
            Tag::ProbeBackward => Tag::ProbeForward,
        }
    }
}

/// One entry `d/dt ρ_target += coeff · [tag factor] · ρ_source`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub target: (usize, usize),
    pub source: (usize, usize),
    pub coeff: C64,
    pub tag: Tag,
}

/// Term table of the full (9-component) equations of motion.
///
/// This is the single source of truth shared by the Floquet parts and the
/// time-domain oracle.
pub fn generator_terms(p: &SystemParams, frame: Frame) -> Vec<Term> {
    let g2 = p.gamma2;
    let g3 = p.gamma3;
    let k = c(p.cross_damping());
    let oc = p.omega_c();
    let delta_p = p.delta_p();
    let two_photon = match frame {
        Frame::SingleRotating => p.delta,
        Frame::Bichromatic => 0.0,
    };
    let slot12 = -C64::new(g2, p.delta_c);
    let slot13 = -C64::new(g3, -(two_photon - delta_p));
    let slot23 = -C64::new(g2 + g3, -(p.delta_c - delta_p + two_photon));

    #[cfg(not(feature = "mutation-fixture"))]
    let k_12_13 = -k;
    #[cfg(feature = "mutation-fixture")]
    let k_12_13 = k;

    let t = |target, source, coeff, tag| Term {
        target,
        source,
        coeff,
        tag,
    };
    use Tag::*;

    let mut terms = vec![
        // populations
        t((1, 1), (1, 1), c(-2.0 * g2), Static),
        t((1, 1), (0, 1), I * oc, Static),
        t((1, 1), (1, 0), -I * oc.conj(), Static),
        t((1, 1), (1, 2), -k, Static),
        t((1, 1), (2, 1), -k, Static),
        t((2, 2), (2, 2), c(-2.0 * g3), Static),
        t((2, 2), (0, 2), I, ProbeForward),
        t((2, 2), (2, 0), -I, ProbeBackward),
        t((2, 2), (1, 2), -k, Static),
        t((2, 2), (2, 1), -k, Static),
        t((0, 0), (1, 1), c(2.0 * g2), Static),
        t((0, 0), (2, 2), c(2.0 * g3), Static),
        t((0, 0), (0, 1), -I * oc, Static),
        t((0, 0), (1, 0), I * oc.conj(), Static),
        t((0, 0), (0, 2), -I, ProbeForward),
        t((0, 0), (2, 0), I, ProbeBackward),
        t((0, 0), (1, 2), 2.0 * k, Static),
        t((0, 0), (2, 1), 2.0 * k, Static),
    ];

    // upper-triangle coherences; their partners are added by conjugation
    let coherences = [
        t((0, 1), (0, 1), slot12, Static),
        t((0, 1), (1, 1), I * oc.conj(), Static),
        t((0, 1), (0, 0), -I * oc.conj(), Static),
        t((0, 1), (2, 1), I, ProbeBackward),
        t((0, 1), (0, 2), k_12_13, Static),
        t((0, 2), (0, 2), slot13, Static),
        t((0, 2), (2, 2), I, ProbeBackward),
        t((0, 2), (0, 0), -I, ProbeBackward),
        t((0, 2), (1, 2), I * oc.conj(), Static),
        t((0, 2), (0, 1), -k, Static),
        t((1, 2), (1, 2), slot23, Static),
        t((1, 2), (0, 2), I * oc, Static),
        t((1, 2), (1, 0), -I, ProbeBackward),
        t((1, 2), (1, 1), -k, Static),
        t((1, 2), (2, 2), -k, Static),
    ];
    for term in coherences {
        terms.push(term);
        terms.push(Term {
            target: (term.target.1, term.target.0),
            source: (term.source.1, term.source.0),
            coeff: term.coeff.conj(),
            tag: term.tag.conjugate(),
        });
    }
    terms
}

/// Full 9×9 generator split by time dependence: `(static, forward, backward)`,
/// the probe parts per unit Ω_p.
pub fn full_generator(terms: &[Term]) -> (Mat9, Mat9, Mat9) {
    let mut l0 = Mat9::zeros();
    let mut lf = Mat9::zeros();
    let mut lb = Mat9::zeros();
    for term in terms {
        let row = flat(term.target.0, term.target.1);
        let col = flat(term.source.0, term.source.1);
        let dest = match term.tag {
            Tag::Static => &mut l0,
            Tag::ProbeForward => &mut lf,
            Tag::ProbeBackward => &mut lb,
        };
        dest[(row, col)] += term.coeff;
    }
    (l0, lf, lb)
}

/// Eliminates ρ₃₃ by trace closure: returns `(M, Λ)` with `Ṙ = M R − Λ`.
fn reduce(l: &Mat9) -> (Mat8, Vec8) {
    let rho33 = flat(2, 2);
    let mut m = Mat8::zeros();
    let mut lambda = Vec8::zeros();
    for (a, &(i, j)) in ORDER.iter().enumerate() {
        let row = flat(i, j);
        for (b, &(k, l_)) in ORDER.iter().enumerate() {
            m[(a, b)] = l[(row, flat(k, l_))];
        }
        // ρ₃₃ = 1 − ρ₁₁ − ρ₂₂
        let feed = l[(row, rho33)];
        m[(a, RHO11)] -= feed;
        m[(a, RHO22)] -= feed;
        lambda[a] = -feed;
    }
    (m, lambda)
}

/// Harmonic decomposition of the reduced generator.
///
/// `M(t) = m0 + Ω_p m1 e^{−iΔt} + Ω_p* mm1 e^{iΔt}`, likewise for Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianParts {
    pub m0: Mat8,
    pub m1: Mat8,
    pub mm1: Mat8,
    pub l0: Vec8,
    pub l1: Vec8,
    pub lm1: Vec8,
}

impl LiouvillianParts {
    /// Instantaneous `(M(t), Λ(t))`.
    pub fn at_time(&self, omega_p: C64, delta: f64, t: f64) -> (Mat8, Vec8) {
        let fwd = omega_p * C64::from_polar(1.0, -delta * t);
        let bwd = omega_p.conj() * C64::from_polar(1.0, delta * t);
        (
            self.m0 + self.m1 * fwd + self.mm1 * bwd,
            self.l0 + self.l1 * fwd + self.lm1 * bwd,
        )
    }

    /// `Ṙ = M(t)R − Λ(t)`.
    pub fn reduced_derivative(&self, r: &Vec8, omega_p: C64, delta: f64, t: f64) -> Vec8 {
        let (m, l) = self.at_time(omega_p, delta, t);
        m * r - l
    }
}

fn parts_in_frame(params: &SystemParams, frame: Frame) -> LiouvillianParts {
    let (l0, lf, lb) = full_generator(&generator_terms(params, frame));
    let (m0, l0v) = reduce(&l0);
    let (m1, l1v) = reduce(&lf);
    let (mm1, lm1v) = reduce(&lb);
    LiouvillianParts {
        m0,
        m1,
        mm1,
        l0: l0v,
        l1: l1v,
        lm1: lm1v,
    }
}

pub fn build_liouvillian_parts(params: &SystemParams) -> LiouvillianParts {
    parts_in_frame(params, Frame::SingleRotating)
}

/// `M₀ + Ω_p M₁ + Ω_p* M₋₁` and the matching Λ; the time-independent
/// generator at two-photon resonance.
pub fn assemble_static(parts: &LiouvillianParts, omega_p: C64) -> (Mat8, Vec8) {
    parts.at_time(omega_p, 0.0, 0.0)
}

/// Time-independent generator in the bichromatic frame (detunings Δ_c on
/// ρ₁₂, Δ_p on ρ₁₃, Δ_p − Δ_c on ρ₂₃), with the oscillation of the
/// interference cross-terms dropped. Equal to [`assemble_static`] at Δ = 0.
pub fn build_conventional(params: &SystemParams) -> (Mat8, Vec8) {
    assemble_static(&parts_in_frame(params, Frame::Bichromatic), params.omega_p())
}

/// Right-hand side of the equations of motion evaluated directly on a 3×3
/// density matrix, written out line by line rather than from the term table.
pub fn equations_of_motion(p: &SystemParams, rho: &Mat3, t: f64) -> Mat3 {
    let r = |i: usize, j: usize| rho[(i - 1, j - 1)];
    let g2 = p.gamma2;
    let g3 = p.gamma3;
    let k = p.cross_damping();
    let delta = p.delta;
    let delta_p = p.delta_p();
    let dc = p.delta_c;
    let oc = p.omega_c();
    // probe with its time dependence folded in
    let opf = p.omega_p() * C64::from_polar(1.0, -delta * t);
    let opb = opf.conj();

    let d22 = -2.0 * g2 * r(2, 2) + I * oc * r(1, 2) - I * oc.conj() * r(2, 1)
        - k * (r(2, 3) + r(3, 2));
    let d33 = -2.0 * g3 * r(3, 3) + I * opf * r(1, 3) - I * opb * r(3, 1)
        - k * (r(2, 3) + r(3, 2));
    let d12 = -C64::new(g2, dc) * r(1, 2) + I * oc.conj() * (r(2, 2) - r(1, 1))
        + I * opb * r(3, 2)
        - k * r(1, 3);
    let d13 = -C64::new(g3, -(delta - delta_p)) * r(1, 3)
        + I * opb * (r(3, 3) - r(1, 1))
        + I * oc.conj() * r(2, 3)
        - k * r(1, 2);
    let d23 = -C64::new(g2 + g3, -(dc - delta_p + delta)) * r(2, 3) + I * oc * r(1, 3)
        - I * opb * r(2, 1)
        - k * (r(2, 2) + r(3, 3));
    let d11 = 2.0 * g2 * r(2, 2) + 2.0 * g3 * r(3, 3) - I * oc * r(1, 2) + I * oc.conj() * r(2, 1)
        - I * opf * r(1, 3)
        + I * opb * r(3, 1)
        + 2.0 * k * (r(2, 3) + r(3, 2));
    // lower triangle written out so non-Hermitian inputs are handled linearly
    let d21 = -C64::new(g2, -dc) * r(2, 1) - I * oc * (r(2, 2) - r(1, 1)) - I * opf * r(2, 3)
        - k * r(3, 1);
    let d31 = -C64::new(g3, delta - delta_p) * r(3, 1) - I * opf * (r(3, 3) - r(1, 1))
        - I * oc * r(3, 2)
        - k * r(2, 1);
    let d32 = -C64::new(g2 + g3, dc - delta_p + delta) * r(3, 2) - I * oc.conj() * r(3, 1)
        + I * opf * r(1, 2)
        - k * (r(2, 2) + r(3, 3));

    Mat3::new(d11, d12, d13, d21, d22, d23, d31, d32, d33)
}

/// Reduced vector `R` in the fixed component order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityVector(pub Vec8);

impl DensityVector {
    pub fn from_matrix(rho: &Mat3) -> Self {
        Self(Vec8::from_fn(|a, _| {
            let (i, j) = ORDER[a];
            rho[(i, j)]
        }))
    }

    pub fn rho31(&self) -> C64 {
        self.0[RHO31]
    }

    pub fn rho33(&self) -> C64 {
        c(1.0) - self.0[RHO11] - self.0[RHO22]
    }

    /// Fills ρ₃₃ by trace closure (ρ₂₂ and the upper block are taken from
    /// the vector; ρ₃₃ from closure) and reports the largest
    /// `|ρ_ij − conj(ρ_ji)|` over the stored pairs.
    pub fn to_matrix(&self) -> (Mat3, f64) {
        let mut m = Mat3::zeros();
        for (a, &(i, j)) in ORDER.iter().enumerate() {
            m[(i, j)] = self.0[a];
        }
        m[(2, 2)] = self.rho33();
        (m, self.hermiticity_defect())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let v = &self.0;
        let pairs = [(RHO12, RHO21), (RHO31, RHO13), (RHO23, RHO32)];
        let off = pairs
            .iter()
            .map(|&(a, b)| (v[a] - v[b].conj()).norm())
            .fold(0.0, f64::max);
        let diag = [v[RHO11].im.abs(), v[RHO22].im.abs(), self.rho33().im.abs()];
        diag.iter().copied().fold(off, f64::max)
    }

    /// Checks the physical-state conditions: real populations in [0, 1] and
    /// Hermitian pairs, at the given tolerances.
    pub fn check_physical(&self, herm_tol: f64, pop_tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > herm_tol {
            return Err(Error::InvalidParams(format!(
                "steady state not Hermitian (defect {defect:.3e})"
            )));
        }
        for (name, pop) in [
            ("rho11", self.0[RHO11].re),
            ("rho22", self.0[RHO22].re),
            ("rho33", self.rho33().re),
        ] {
            if pop < -pop_tol || pop > 1.0 + pop_tol {
                return Err(Error::InvalidParams(format!(
                    "population {name} = {pop} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Largest entry modulus of a complex vector or matrix.
pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a C64>) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Partner vector under `ρ_ij ↔ conj(ρ_ji)`: maps `R_k` to `R_{−k}` for a
/// Hermitian periodic state.
pub fn hermitian_partner(v: &Vec8) -> Vec8 {
    const SWAP: [usize; 8] = [RHO11, RHO22, RHO21, RHO12, RHO13, RHO31, RHO32, RHO23];
    Vec8::from_fn(|a, _| v[SWAP[a]].conj())
}
