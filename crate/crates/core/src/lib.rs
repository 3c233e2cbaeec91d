//! Optical response and optical bistability of a pumped-probe V-type atom
//! with quantum interference between its two spontaneous decay channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: physical parameters, the generator term table and its
//!   harmonic decomposition `M(t) = M₀ + Ω_p M₁ e^{−iΔt} + Ω_p* M₋₁ e^{iΔt}`.
//! * [`solver`]: dense complex elimination, static steady states, the
//!   weak-probe first-order harmonics and the truncated harmonic balance.
//! * [`response`]: normalised probe coherence, spectra and group index.
//! * [`bistability`]: the mean-field ring-cavity map `y = x − 2iCγ₃ρ₃₁(x)`.
//! * [`oracle`]: time-domain RK4 integration of the full 3×3 density matrix
//!   and Fourier projection onto harmonics.
//! * [`validate`]: the cross-check suite run by `vcoher validate`.
//!
//! All rates and detunings are in units of a reference decay rate γ.

pub mod bistability;
pub mod error;
pub mod model;
pub mod oracle;
pub mod response;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use model::{DensityVector, LiouvillianParts, SystemParams};
pub use num_complex::Complex64 as C64;
