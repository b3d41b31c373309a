//! The scattering problem: a propagating mode incident from the left,
//! `Ψ_0 ~ e^{ik_0x} + R e^{-ik_0x}` as `x → -∞`, `Ψ_0 ~ T e^{ik_0x}` as
//! `x → +∞`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modal::{Discretization, Functionals, Grid, ModalSystem, ModalVector};
use crate::perturbation::PerturbationProfile;
use crate::spectral::{ModeKernel, SpectralParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative size of `μ - εγF` below which the solve is refused.
pub const RESONANCE_GUARD: f64 = 1e-3;

/// Bound on the disagreement of the quadrature and closed-form routes.
pub const ROUTE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarFunctionals {
    pub f: Complex64,
    pub q: Complex64,
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    pub r_plus: Complex64,
    pub r_minus: Complex64,
}

impl From<&Functionals> for ScalarFunctionals {
    fn from(f: &Functionals) -> Self {
        Self { f: f.f, q: f.q, p_plus: f.p_plus, p_minus: f.p_minus, r_plus: f.r_plus, r_minus: f.r_minus }
    }
}

/// A solved scattering problem.
///
/// Internally the field is held in the `β > 0` frame; for `β < 0` the
/// physical field is the complex conjugate of the frame field with mode
/// indices reflected.
#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub params: SpectralParams,
    /// Reflection coefficient from the amplitude quadrature.
    pub r: Complex64,
    /// Transmission coefficient from the amplitude quadrature.
    pub t: Complex64,
    /// The same coefficients from the closed forms in `P^±, Q, R^±, F`.
    pub r_closed: Complex64,
    pub t_closed: Complex64,
    /// `C = ⟨A_{-1}⟩` in the frame.
    pub c: Complex64,
    /// Frame functionals at this point.
    pub functionals: ScalarFunctionals,
    amplitudes: ModalVector,
    grid: Grid,
    kernels: Vec<ModeKernel>,
    k0: Complex64,
    mu: Complex64,
    conjugate: bool,
}

impl ScatteringSolution {
    /// Builds the solution from solved functionals and a chosen constant
    /// `C`. With `consistent`, `C/2μ` is taken as `εγQ/(μ - εγF)`.
    pub(crate) fn assemble(sys: &ModalSystem, fun: &Functionals, c_over_2mu: Complex64, c: Complex64) -> Result<Self> {
        let p = sys.params();
        let eps = p.epsilon;
        let gamma = sys.gamma();
        let k0 = sys.k0();
        let mut a = fun.y1.clone();
        if c_over_2mu != ZERO {
            a.add_scaled(&fun.y2, c_over_2mu);
        }
        let a = a.scaled(2.0 * eps * gamma);

        let grid = sys.grid().clone();
        let a0 = a.component(0);
        let mut into_left = ZERO;
        let mut into_right = ZERO;
        for ((&x, &w), &v) in grid.nodes().iter().zip(grid.weights()).zip(a0) {
            into_left += (I * k0 * x).exp() * v * w;
            into_right += (-I * k0 * x).exp() * v * w;
        }
        let r = I / (2.0 * k0) * into_left;
        let t = ONE + I / (2.0 * k0) * into_right;
        let pre = I * eps * gamma / k0;
        let r_closed = pre * (fun.p_plus + c_over_2mu * fun.r_plus);
        let t_closed = ONE + pre * (fun.p_minus + c_over_2mu * fun.r_minus);

        let scale = 1.0 + r.norm().max(t.norm());
        let gap = (r - r_closed).norm().max((t - t_closed).norm());
        if gap > ROUTE_TOL * scale {
            return Err(Error::Consistency(format!(
                "quadrature and closed-form reflection/transmission differ by {gap:e}"
            )));
        }

        let n = sys.n_modes() as i32;
        let kernels = (-n..=n).map(|m| *sys.kernel(m)).collect();
        let conjugate = p.beta < 0.0;
        let (r, t, r_closed, t_closed) = if conjugate {
            (r.conj(), t.conj(), r_closed.conj(), t_closed.conj())
        } else {
            (r, t, r_closed, t_closed)
        };
        Ok(Self {
            params: *p,
            r,
            t,
            r_closed,
            t_closed,
            c,
            functionals: fun.into(),
            amplitudes: a,
            grid,
            kernels,
            k0,
            mu: sys.frame().mu(),
            conjugate,
        })
    }

    /// Modal amplitudes `A_n` of the physical problem on the grid.
    pub fn amplitudes(&self) -> ModalVector {
        if self.conjugate {
            self.amplitudes.conj_reflected()
        } else {
            self.amplitudes.clone()
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.amplitudes.n_modes()
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.r.norm_sqr() + self.t.norm_sqr() - 1.0).abs()
    }

    /// `C` computed back from the amplitudes, `⟨A_{-1}⟩` in the frame.
    pub fn mean_threshold_amplitude(&self) -> Complex64 {
        self.grid.integrate(self.amplitudes.component(-1))
    }

    fn frame_mode(&self, n: i32, x: f64) -> Complex64 {
        let idx = (n + self.amplitudes.n_modes() as i32) as usize;
        let kernel = &self.kernels[idx];
        let mut v = self.grid.convolve_at(kernel, self.amplitudes.component(n), x);
        if n == -1 && self.c != ZERO {
            v += self.c * kernel.removed_constant();
        }
        if n == 0 {
            v += (I * self.k0 * x).exp();
        }
        v
    }

    /// `Ψ_m(x)`; modes outside `-N..=N` are zero.
    pub fn mode_field(&self, m: i32, x: f64) -> Complex64 {
        if m.unsigned_abs() as usize > self.n_modes() {
            return ZERO;
        }
        if self.conjugate {
            self.frame_mode(-m, x).conj()
        } else {
            self.frame_mode(m, x)
        }
    }

    /// `Ψ(x, y) = e^{iβy} Σ_m Ψ_m(x) e^{imy}`.
    pub fn evaluate_field(&self, x: f64, y: f64) -> Complex64 {
        let n = self.n_modes() as i32;
        let s: Complex64 = (-n..=n).map(|m| self.mode_field(m, x) * (I * (m as f64 * y)).exp()).sum();
        s * (I * (self.params.beta * y)).exp()
    }

    /// Max over modes of the modal equation residual
    /// `|-Ψ_m'' + [(β+m)² - ω²]Ψ_m - ε(ω²/2π) Σ_n f_{m-n} Ψ_n|`
    /// with second differences of spacing `h` on `[-L, L]`; stencils that
    /// straddle the support edges `±R` are skipped.
    pub fn helmholtz_residual(&self, profile: &PerturbationProfile, h: f64, extent: f64) -> f64 {
        modal_equation_residual(&self.params, profile, self.n_modes(), self.grid.halfwidth(), h, extent, |m, x| {
            self.mode_field(m, x)
        })
    }

    /// Max of `|Ψ_0(x) - e^{ik_0x} - R e^{-ik_0x}|` for `x ∈ [-L, -R)` and
    /// `|Ψ_0(x) - T e^{ik_0x}|` for `x ∈ (R, L]`, sampled at `samples` points
    /// per side.
    pub fn far_field_defect(&self, extent: f64, samples: usize) -> f64 {
        let r = self.grid.halfwidth();
        let k0 = if self.conjugate { self.k0.conj() * -1.0 } else { self.k0 };
        let mut worst: f64 = 0.0;
        for s in 0..samples {
            let x = r + (extent - r) * (s as f64 + 1.0) / samples as f64;
            let right = self.mode_field(0, x) - self.t * (I * k0 * x).exp();
            let left = self.mode_field(0, -x) - (-I * k0 * x).exp() - self.r * (I * k0 * x).exp();
            worst = worst.max(right.norm()).max(left.norm());
        }
        worst
    }

    /// The frame value of `μ`.
    pub fn mu(&self) -> Complex64 {
        self.mu
    }
}

/// Max over modes of `|-Ψ_m'' + [(β+m)² - ω²]Ψ_m - ε(ω²/2π) Σ_n f_{m-n} Ψ_n|`
/// for a field given mode by mode, using second differences of spacing `h`
/// on `[-L, L]`. Stencils straddling `±R` are skipped.
pub(crate) fn modal_equation_residual(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    n_modes: usize,
    halfwidth: f64,
    h: f64,
    extent: f64,
    field: impl Fn(i32, f64) -> Complex64,
) -> f64 {
    let n = n_modes as i32;
    let r = halfwidth;
    let count = (2.0 * extent / h).round() as usize;
    let xs: Vec<f64> = (0..=count).map(|k| -extent + k as f64 * h).collect();
    let fields: Vec<Vec<Complex64>> = (-n..=n).map(|m| xs.iter().map(|&x| field(m, x)).collect()).collect();
    let omega_sq = params.omega_sq();
    let coupling = params.epsilon * omega_sq / (2.0 * std::f64::consts::PI);
    let j = profile.mode_count() as i32;
    let mut worst: f64 = 0.0;
    for k in 1..count {
        let (lo, hi) = (xs[k - 1], xs[k + 1]);
        if (lo <= r && hi >= r) || (lo <= -r && hi >= -r) {
            continue;
        }
        let x = xs[k];
        for m in -n..=n {
            let psi = &fields[(m + n) as usize];
            let lap = (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]) / (h * h);
            let b = params.beta + m as f64;
            let mut rhs = ZERO;
            for q in (m - j).max(-n)..=(m + j).min(n) {
                rhs += profile.mode_value_unchecked(m - q, x) * fields[(q + n) as usize][k];
            }
            let res = -lap + (b * b - omega_sq) * psi[k] - coupling * rhs;
            worst = worst.max(res.norm());
        }
    }
    worst
}

/// Solves the scattering problem at a real parameter point.
pub fn solve_scattering(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<ScatteringSolution> {
    params.check_window()?;
    let sys = ModalSystem::new(params, profile, disc)?;
    solve_on_system(&sys)
}

/// Scattering solve reusing an assembled system.
pub fn solve_on_system(sys: &ModalSystem) -> Result<ScatteringSolution> {
    let fun = sys.functionals()?;
    solve_from_functionals(sys, &fun, RESONANCE_GUARD)
}

/// [`solve_scattering`] with a custom relative resonance guard; `0` only
/// refuses an exact zero of `μ - εγF`. Used to resolve narrow peaks whose
/// width is below the default guard.
pub fn solve_scattering_guarded(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    disc: &Discretization,
    guard: f64,
) -> Result<ScatteringSolution> {
    params.check_window()?;
    let sys = ModalSystem::new(params, profile, disc)?;
    let fun = sys.functionals()?;
    solve_from_functionals(&sys, &fun, guard)
}

pub(crate) fn solve_from_functionals(sys: &ModalSystem, fun: &Functionals, relative_guard: f64) -> Result<ScatteringSolution> {
    let p = sys.params();
    if p.epsilon == 0.0 {
        return ScatteringSolution::assemble(sys, fun, ZERO, ZERO);
    }
    let eps = p.epsilon;
    let gamma = sys.gamma();
    let mu = sys.frame().mu();
    let den = mu - eps * gamma * fun.f;
    let guard = relative_guard * eps * (gamma * fun.f).norm();
    if den.norm() < guard || den.norm() == 0.0 {
        return Err(Error::NearResonance { value: den, guard });
    }
    let c_over_2mu = eps * gamma * fun.q / den;
    ScatteringSolution::assemble(sys, fun, c_over_2mu, 2.0 * mu * c_over_2mu)
}

/// Scattering solve with a prescribed constant `C = ⟨A_{-1}⟩` instead of the
/// one fixed by consistency; meaningful where `Q = 0` (then `C = 0` is the
/// consistent choice) or at an embedded trapped mode (any `C`).
pub fn solve_with_constant(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    disc: &Discretization,
    c: Complex64,
) -> Result<ScatteringSolution> {
    params.check_window()?;
    let sys = ModalSystem::new(params, profile, disc)?;
    let fun = sys.functionals()?;
    let mu = sys.frame().mu();
    let c_over_2mu = if c == ZERO { ZERO } else { c / (2.0 * mu) };
    ScatteringSolution::assemble(&sys, &fun, c_over_2mu, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> Discretization {
        Discretization::default()
    }

    #[test]
    fn unperturbed_problem() {
        let p = PerturbationProfile::rectangular(1.0).unwrap();
        let params = SpectralParams::new(0.0, 0.25, 3.0).unwrap();
        let sol = solve_scattering(&params, &p, &disc()).unwrap();
        assert_eq!(sol.r, ZERO);
        assert_eq!(sol.t, ONE);
        let k0 = params.k0();
        for (x, y) in [(-3.0, 0.2), (0.4, 1.0), (5.0, -2.0)] {
            let expect = (I * (params.beta * y + k0.re * x)).exp();
            assert!((sol.evaluate_field(x, y) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn unitary_and_routes_agree() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        for (eps, beta, nu) in [(0.01, 0.25, 3.0), (0.05, 0.1, 1.5), (0.001, 0.4, 100.0)] {
            let params = SpectralParams::new(eps, beta, nu).unwrap();
            let sol = solve_scattering(&params, &p, &disc()).unwrap();
            assert!(sol.unitarity_defect() < 1e-10, "{eps} {beta} {nu}: {}", sol.unitarity_defect());
            assert!((sol.r - sol.r_closed).norm() < 1e-12);
            assert!((sol.mean_threshold_amplitude() - sol.c).norm() < 1e-9 * (1.0 + sol.c.norm()));
        }
    }

    #[test]
    fn quasiperiodic_field() {
        let p = PerturbationProfile::rectangular(1.5).unwrap();
        let params = SpectralParams::new(0.03, 0.3, 2.0).unwrap();
        let sol = solve_scattering(&params, &p, &disc()).unwrap();
        let phase = (I * (2.0 * std::f64::consts::PI * params.beta)).exp();
        for (x, y) in [(-2.0, 0.3), (0.2, 1.1), (3.0, 2.5)] {
            let a = sol.evaluate_field(x, y + 2.0 * std::f64::consts::PI);
            let b = phase * sol.evaluate_field(x, y);
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn far_field_matches_coefficients() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let params = SpectralParams::new(0.02, 0.25, 3.0).unwrap();
        let sol = solve_scattering(&params, &p, &disc()).unwrap();
        assert!(sol.far_field_defect(6.0, 10) < 1e-12);
    }

    #[test]
    fn negative_beta_conjugation() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let pos = solve_scattering(&SpectralParams::new(0.02, 0.25, 3.0).unwrap(), &p, &disc()).unwrap();
        let neg = solve_scattering(&SpectralParams::new(0.02, -0.25, 3.0).unwrap(), &p, &disc()).unwrap();
        assert!(neg.unitarity_defect() < 1e-10);
        // y-even profile: the problems at ±β are mirror images in y
        assert!((pos.r - neg.r).norm() < 1e-12, "{} vs {}", pos.r, neg.r);
        assert!((pos.t - neg.t).norm() < 1e-12);
        let params = SpectralParams::new(0.02, -0.25, 3.0).unwrap();
        let (x, y) = (0.7, 0.4);
        let ratio = neg.evaluate_field(x, y + 2.0 * std::f64::consts::PI) / neg.evaluate_field(x, y);
        assert!((ratio - (I * 2.0 * std::f64::consts::PI * params.beta).exp()).norm() < 1e-12);
    }

    #[test]
    fn rejects_outside_window() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let params = SpectralParams::new(0.05, 0.25, 20.0).unwrap();
        assert!(matches!(solve_scattering(&params, &p, &disc()), Err(Error::OutsideWindow(_))));
    }
}
