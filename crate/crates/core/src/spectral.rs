//! Dispersion quantities at a parameter point and the per-mode Green
//! functions of `-u'' + k² u = δ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the perturbation magnitude accepted by the solvers.
pub const EPS_MAX: f64 = 0.1;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The parameter point `(ε, β, ν)`; `ν` may be complex for root finding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub epsilon: f64,
    pub beta: f64,
    pub nu: Complex64,
}

impl SpectralParams {
    pub fn new(epsilon: f64, beta: f64, nu: f64) -> Result<Self> {
        Self::complex(epsilon, beta, Complex64::new(nu, 0.0))
    }

    pub fn complex(epsilon: f64, beta: f64, nu: Complex64) -> Result<Self> {
        check_beta(beta)?;
        if !(0.0..=EPS_MAX).contains(&epsilon) {
            return Err(Error::ParameterDomain(format!(
                "epsilon = {epsilon} must lie in [0, {EPS_MAX}]"
            )));
        }
        if !(nu.re.is_finite() && nu.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu = {nu} is not finite")));
        }
        Ok(Self { epsilon, beta, nu })
    }

    pub fn with_nu(&self, nu: Complex64) -> Self {
        Self { nu, ..*self }
    }

    /// `μ = εν`.
    pub fn mu(&self) -> Complex64 {
        self.nu * self.epsilon
    }

    /// `ω² = (1 - |β|)² - μ²`.
    pub fn omega_sq(&self) -> Complex64 {
        let s = 1.0 - self.beta.abs();
        Complex64::new(s * s, 0.0) - self.mu() * self.mu()
    }

    pub fn gamma(&self) -> Complex64 {
        gamma_raw(self.mu(), self.beta)
    }

    /// `κ = √(1 - 2|β|)`, the propagating wavenumber at the cut-off.
    pub fn kappa(&self) -> f64 {
        kappa(self.beta)
    }

    /// `k_0 = √(1 - 2|β| - μ²)`.
    pub fn k0(&self) -> Complex64 {
        (Complex64::new(1.0 - 2.0 * self.beta.abs(), 0.0) - self.mu() * self.mu()).sqrt()
    }

    /// Index of the mode whose wavenumber is `μ` (the mode at the second
    /// cut-off): `-1` for `β > 0`, `+1` for `β < 0`.
    pub fn threshold_mode(&self) -> i32 {
        if self.beta > 0.0 {
            -1
        } else {
            1
        }
    }

    pub fn wavenumber(&self, m: i32) -> Complex64 {
        wavenumber_raw(m, self.mu(), self.beta)
    }

    /// Real `ν` with `0 < μ² < 1 - 2|β|`, i.e. `β² < ω² < (1-|β|)²`.
    /// `ε = 0` is accepted as the unperturbed problem.
    pub fn check_window(&self) -> Result<()> {
        if self.nu.im != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scattering needs real nu, got {}",
                self.nu
            )));
        }
        if self.epsilon == 0.0 {
            return Ok(());
        }
        let mu = self.mu().re;
        if !(mu > 0.0) {
            return Err(Error::OutsideWindow(format!(
                "mu = eps*nu = {mu} must be positive (omega below the second cut-off)"
            )));
        }
        if mu * mu >= 1.0 - 2.0 * self.beta.abs() {
            return Err(Error::OutsideWindow(format!(
                "mu^2 = {} must be below 1 - 2|beta| = {} (omega above the first cut-off)",
                mu * mu,
                1.0 - 2.0 * self.beta.abs()
            )));
        }
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.abs() > 0.0 && beta.abs() < 0.5) {
        return Err(Error::ParameterDomain(format!(
            "beta = {beta} must satisfy 0 < |beta| < 1/2"
        )));
    }
    Ok(())
}

pub fn kappa(beta: f64) -> f64 {
    (1.0 - 2.0 * beta.abs()).sqrt()
}

fn gamma_raw(mu: Complex64, beta: f64) -> Complex64 {
    let s = 1.0 - beta.abs();
    (Complex64::new(s * s, 0.0) - mu * mu) / (4.0 * PI)
}

fn wavenumber_raw(m: i32, mu: Complex64, beta: f64) -> Complex64 {
    let threshold = if beta > 0.0 { -1 } else { 1 };
    if m == 0 {
        (Complex64::new(1.0 - 2.0 * beta.abs(), 0.0) - mu * mu).sqrt()
    } else if m == threshold {
        mu
    } else {
        let s = 1.0 - beta.abs();
        let b = beta + m as f64;
        (Complex64::new(b * b - s * s, 0.0) + mu * mu).sqrt()
    }
}

/// `γ(μ, β) = ((1-|β|)² - μ²) / 4π`.
pub fn gamma_of(mu: Complex64, beta: f64) -> Result<Complex64> {
    check_beta(beta)?;
    Ok(gamma_raw(mu, beta))
}

/// `k_m(μ, β)`: `k_0` is the propagating wavenumber, the threshold mode has
/// `k = μ`, all others decay. Principal square roots throughout.
pub fn wavenumber(m: i32, mu: Complex64, beta: f64) -> Result<Complex64> {
    check_beta(beta)?;
    if m == 0 && mu.im == 0.0 && 1.0 - 2.0 * beta.abs() - mu.re * mu.re <= 0.0 {
        return Err(Error::OutsideWindow(format!(
            "k0 undefined: 1 - 2|beta| - mu^2 = {} <= 0",
            1.0 - 2.0 * beta.abs() - mu.re * mu.re
        )));
    }
    Ok(wavenumber_raw(m, mu, beta))
}

/// `(e^z - 1) / z`, accurate near zero.
pub(crate) fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Taylor series; 24 terms is below 1e-17 for |z| < 0.5
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..26 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Kernel of the convolution operators for one mode.
#[derive(Clone, Copy, Debug)]
pub enum ModeKernel {
    /// `i e^{ik|x|} / 2k`; `k` may be negative (incoming branch).
    Oscillatory { k: Complex64 },
    /// `(e^{-μ|x|} - 1) / 2μ`, the threshold-mode kernel with its `1/2μ`
    /// singularity removed.
    Regularized { mu: Complex64 },
    /// `e^{-k|x|} / 2k`.
    Decaying { k: Complex64 },
}

impl ModeKernel {
    pub fn eval(&self, x: f64) -> Complex64 {
        let ax = x.abs();
        match *self {
            ModeKernel::Oscillatory { k } => I * (I * k * ax).exp() / (2.0 * k),
            ModeKernel::Regularized { mu } => {
                // -|x|/2 * (e^z - 1)/z, z = -μ|x|
                if (mu * ax).norm() < 1e-6 {
                    -ax / 2.0 + mu * (ax * ax / 4.0) - mu * mu * (ax * ax * ax / 12.0)
                } else {
                    phi1(-mu * ax) * (-ax / 2.0)
                }
            }
            ModeKernel::Decaying { k } => (-k * ax).exp() / (2.0 * k),
        }
    }

    /// The constant that turns the regularized kernel back into the full
    /// Green function `e^{-μ|x|}/2μ`; zero for the other kinds.
    pub fn removed_constant(&self) -> Complex64 {
        match *self {
            ModeKernel::Regularized { mu } => 1.0 / (2.0 * mu),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// Kernel for mode `m` in the outgoing convention.
pub fn mode_kernel(m: i32, params: &SpectralParams) -> ModeKernel {
    if m == 0 {
        ModeKernel::Oscillatory { k: params.k0() }
    } else if m == params.threshold_mode() {
        ModeKernel::Regularized { mu: params.mu() }
    } else {
        ModeKernel::Decaying { k: params.wavenumber(m) }
    }
}

/// `H_m(x)`: the Green function of mode `m`, regularized for the threshold mode.
pub fn green_kernel(m: i32, x: f64, params: &SpectralParams) -> Complex64 {
    mode_kernel(m, params).eval(x)
}
