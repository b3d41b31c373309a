//! Scattering of a propagating mode by a weak periodic perturbation of the
//! refractive index in a quasiperiodic strip, `-ΔΨ = ω²(1 + εf)Ψ`.

pub mod commands;
pub mod config;
pub mod error;
pub mod linalg;
pub mod modal;
pub mod oracle;
pub mod perturbation;
pub mod quadrature;
pub mod resonance;
pub mod scattering;
pub mod spectral;
pub mod trapped;

pub use error::{Error, Result};
pub use modal::{Discretization, Functionals, ModalSystem, ModalVector};
pub use perturbation::{PerturbationProfile, ProfileKind};
pub use spectral::SpectralParams;
