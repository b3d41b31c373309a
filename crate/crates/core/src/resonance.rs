//! Complex resonances `ν_0(ε, β)` of the dispersion relation `ν = γF`,
//! the line shapes they produce, and the zeros `ν_a` (total transmission)
//! and `ν_b` (total reflection).
//!
//! All functions here take `β ∈ (0, 1/2)`. The problem at `-β` is the
//! complex conjugate one.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modal::{Discretization, ModalSystem};
use crate::perturbation::PerturbationProfile;
use crate::scattering::solve_scattering_guarded;
use crate::spectral::{kappa, SpectralParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Widths below this are treated as zero by the line-shape formulas.
pub const MIN_WIDTH: f64 = 1e-12;

/// Required `|R(ν_a)|` and `|T(ν_b)|` at the refined zeros.
pub const ZERO_CHECK: f64 = 1e-7;

/// Allowed `|Im ν|` of a zero that theory says is real.
pub const REALITY_TOL: f64 = 1e-10;

/// `γ(0, β) = (1-β)²/4π`.
pub fn gamma0(beta: f64) -> f64 {
    let s = 1.0 - beta.abs();
    s * s / (4.0 * std::f64::consts::PI)
}

fn check_positive_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::ParameterDomain(format!(
            "beta = {beta} must lie in (0, 1/2); resonances at -beta are conjugates"
        )));
    }
    Ok(())
}

/// Leading terms of `ν_0(ε) = a_1 + ε a_2 + O(ε²)` and the line-shape
/// parameters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PerturbativeCoeffs {
    pub beta: f64,
    pub kappa: f64,
    pub gamma0: f64,
    pub a1: f64,
    /// `a_2` from one application of `T̂` at `μ = 0`.
    pub a2: Complex64,
    /// `Im a_2` from the closed form in `f̃_1(±κ)`.
    pub im_a2: f64,
    /// `Γ = (γ_0²/κ)(|d_+|² + |d_-|²)`, `d_± = f̃_1(±κ)`.
    pub width: f64,
    /// Fano slope `q = γ_0 f̃_0(2κ)/κ`.
    pub q: f64,
    pub d_plus: Complex64,
    pub d_minus: Complex64,
    /// `f̃_0(0)` and `f̃_0(2κ)`.
    pub f0_zero: Complex64,
    pub f0_two_kappa: Complex64,
}

pub fn perturbative_coeffs(beta: f64, profile: &PerturbationProfile, disc: &Discretization) -> Result<PerturbativeCoeffs> {
    check_positive_beta(beta)?;
    let k = kappa(beta);
    let g0 = gamma0(beta);
    let f0_zero = profile.fourier_transform(0, 0.0)?;
    let f0_two_kappa = profile.fourier_transform(0, 2.0 * k)?;
    let (d_plus, d_minus) = if profile.mode_count() >= 1 {
        (profile.fourier_transform(1, k)?, profile.fourier_transform(1, -k)?)
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    };

    // ⟨(T̂ g2)_{-1}⟩ at μ = 0; ε only enters through μ, so any ε works
    let sys = ModalSystem::new(&SpectralParams::new(0.0, beta, 0.0)?, profile, disc)?;
    let tg = sys.apply_t(&sys.assemble_g2())?;
    let a2 = g0 * sys.average(tg.component(-1));

    let dsq = d_plus.norm_sqr() + d_minus.norm_sqr();
    Ok(PerturbativeCoeffs {
        beta,
        kappa: k,
        gamma0: g0,
        a1: g0 * f0_zero.re,
        a2,
        im_a2: g0 * g0 / (2.0 * k) * dsq,
        width: g0 * g0 / k * dsq,
        q: g0 * f0_two_kappa.re / k,
        d_plus,
        d_minus,
        f0_zero,
        f0_two_kappa,
    })
}

/// `ℓ = ν - γF`, `a` and `b` at one (possibly complex) `ν`, so that
/// `R = a/ℓ` and `T = b/ℓ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LineFactors {
    pub ell: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

pub fn line_factors(params: &SpectralParams, profile: &PerturbationProfile, disc: &Discretization) -> Result<LineFactors> {
    check_positive_beta(params.beta)?;
    let sys = ModalSystem::new(params, profile, disc)?;
    let fun = sys.functionals()?;
    let gamma = sys.gamma();
    let ell = sys.dispersion(fun.f);
    let pre = I * params.epsilon * gamma / sys.k0();
    let a = pre * (ell * fun.p_plus + gamma * fun.q * fun.r_plus);
    let b = ell + pre * (ell * fun.p_minus + gamma * fun.q * fun.r_minus);
    Ok(LineFactors { ell, a, b })
}

/// `ℓ(ν)` alone, needing only `Y2`.
pub fn dispersion_residual(params: &SpectralParams, profile: &PerturbationProfile, disc: &Discretization) -> Result<Complex64> {
    let sys = ModalSystem::new(params, profile, disc)?;
    let y2 = sys.solve_resolvent(&sys.assemble_g2())?;
    Ok(sys.dispersion(sys.average(y2.component(-1))))
}

#[derive(Clone, Copy, Debug)]
pub struct SecantOptions {
    pub residual_tol: f64,
    /// Stop when the step is below this multiple of `max(1, |x|)`.
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for SecantOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-12, step_tol: 0.0, max_iter: 50 }
    }
}

/// Damped secant iteration in ℂ. The step is halved (up to ten times)
/// while the residual grows.
pub fn complex_secant(
    mut f: impl FnMut(Complex64) -> Result<Complex64>,
    x0: Complex64,
    x1: Complex64,
    opts: SecantOptions,
) -> Result<(Complex64, Complex64, Vec<(Complex64, f64)>)> {
    let mut trace = Vec::new();
    let (mut xa, mut fa) = (x0, f(x0)?);
    trace.push((xa, fa.norm()));
    let (mut xb, mut fb) = (x1, f(x1)?);
    trace.push((xb, fb.norm()));
    for _ in 0..opts.max_iter {
        if fb.norm() < opts.residual_tol {
            return Ok((xb, fb, trace));
        }
        let slope = (fb - fa) / (xb - xa);
        if !(slope.norm() > 0.0) || !slope.re.is_finite() {
            break;
        }
        let mut step = -fb / slope;
        let mut xn = xb + step;
        let mut fnew = f(xn)?;
        let mut halvings = 0;
        while fnew.norm() > fb.norm() && halvings < 10 {
            step *= 0.5;
            xn = xb + step;
            fnew = f(xn)?;
            halvings += 1;
        }
        trace.push((xn, fnew.norm()));
        xa = xb;
        fa = fb;
        xb = xn;
        fb = fnew;
        if step.norm() <= opts.step_tol * xb.norm().max(1.0) {
            return Ok((xb, fb, trace));
        }
    }
    if fb.norm() < opts.residual_tol {
        return Ok((xb, fb, trace));
    }
    Err(Error::RootFailure {
        message: format!("residual {:e} after {} evaluations (last x = {xb})", fb.norm(), trace.len()),
        trace,
    })
}

/// The root `ν_0` of `ν - γ(εν, β)F(ε, εν, β) = 0` nearest the seed
/// `γ(0,β) f̃_0(0)`.
pub fn solve_dispersion_root(
    epsilon: f64,
    beta: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<Complex64> {
    solve_dispersion_root_from(epsilon, beta, profile, disc, None)
}

/// As [`solve_dispersion_root`] with an optional seed.
pub fn solve_dispersion_root_from(
    epsilon: f64,
    beta: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
    seed: Option<Complex64>,
) -> Result<Complex64> {
    check_positive_beta(beta)?;
    if !(epsilon > 0.0) {
        return Err(Error::ParameterDomain(format!("epsilon = {epsilon} must be positive")));
    }
    let base = SpectralParams::new(epsilon, beta, 0.0)?;
    let seed = match seed {
        Some(s) => s,
        None => Complex64::new(gamma0(beta) * profile.fourier_transform(0, 0.0)?.re, 0.0),
    };
    let offset = Complex64::new(1e-4 * seed.norm().max(1e-3), 1e-4 * seed.norm().max(1e-3));
    let (nu, _, _) = complex_secant(
        |nu| dispersion_residual(&base.with_nu(nu), profile, disc),
        seed,
        seed + offset,
        SecantOptions::default(),
    )?;
    Ok(nu)
}

/// `ε²Γ²/4 / (δ² + ε²Γ²/4)`.
pub fn breit_wigner(delta: f64, epsilon: f64, width: f64) -> Result<f64> {
    check_width(width)?;
    let h = 0.25 * epsilon * epsilon * width * width;
    Ok(h / (delta * delta + h))
}

/// `ε²(δq + Γ/2)² / (δ² + ε²Γ²/4)`.
pub fn fano(delta: f64, epsilon: f64, width: f64, q: f64) -> Result<f64> {
    check_width(width)?;
    let h = 0.25 * epsilon * epsilon * width * width;
    let n = delta * q + 0.5 * width;
    Ok(epsilon * epsilon * n * n / (delta * delta + h))
}

fn check_width(width: f64) -> Result<()> {
    if !(width >= MIN_WIDTH) {
        return Err(Error::DegenerateWidth(width));
    }
    Ok(())
}

/// Leading order of `R` and `T` near the resonance, `δ = ν - Re ν_0`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticRt {
    pub r: Complex64,
    pub t: Complex64,
}

pub fn asymptotic_rt(epsilon: f64, delta: f64, c: &PerturbativeCoeffs) -> Result<AsymptoticRt> {
    check_width(c.width)?;
    let w = I / (Complex64::new(delta / epsilon, 0.0) - I * (0.5 * c.width));
    let (g0, k) = (c.gamma0, c.kappa);
    let r = w * (g0 * g0 / k * c.d_plus.conj() * c.d_minus + delta * c.f0_two_kappa.conj() * g0 / k);
    let t = w
        * (Complex64::new(0.0, -delta / epsilon)
            + g0 * g0 / (2.0 * k) * (c.d_plus.norm_sqr() - c.d_minus.norm_sqr())
            + delta * c.f0_zero * g0 / k);
    Ok(AsymptoticRt { r, t })
}

/// Leading-order seeds `ν_a⁰ = γ_0(f̃_0(0) - f̃_1(κ)²/f̃_0(2κ))` and
/// `ν_b⁰ = γ_0 f̃_0(0)`; `ν_a⁰` is `None` when `f̃_0(2κ)` vanishes.
pub fn zero_seeds(c: &PerturbativeCoeffs) -> (Option<f64>, f64) {
    let nu_b = c.gamma0 * c.f0_zero.re;
    let nu_a = if no_fano_zero(c) {
        None
    } else {
        Some(c.gamma0 * (c.f0_zero - c.d_plus * c.d_plus / c.f0_two_kappa).re)
    };
    (nu_a, nu_b)
}

fn no_fano_zero(c: &PerturbativeCoeffs) -> bool {
    c.f0_two_kappa.norm() <= 1e-10 * c.f0_zero.norm()
}

fn refine_real_zero(
    epsilon: f64,
    beta: f64,
    seed: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
    pick: fn(&LineFactors) -> Complex64,
) -> Result<f64> {
    if !(seed > 0.0) {
        return Err(Error::OutsideWindow(format!("leading-order zero {seed} is not positive")));
    }
    let base = SpectralParams::new(epsilon, beta, seed)?;
    let opts = SecantOptions { residual_tol: 0.0, step_tol: 1e-14, max_iter: 50 };
    let x0 = Complex64::new(seed, 0.0);
    let (nu, _, _) = complex_secant(
        |nu| line_factors(&base.with_nu(nu), profile, disc).map(|lf| pick(&lf)),
        x0,
        x0 * (1.0 + 1e-4),
        opts,
    )?;
    if nu.im.abs() > REALITY_TOL * nu.re.abs().max(1.0) {
        return Err(Error::Consistency(format!("zero {nu} is not real")));
    }
    Ok(nu.re)
}

/// `ν_a` with `R(ν_a) = 0`, or `None` when `f̃_0(2κ) = 0`.
pub fn find_total_transmission(
    epsilon: f64,
    beta: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<Option<f64>> {
    let c = perturbative_coeffs(beta, profile, disc)?;
    let (Some(seed), _) = zero_seeds(&c) else { return Ok(None) };
    check_width(c.width)?;
    let nu = refine_real_zero(epsilon, beta, seed, profile, disc, |lf| lf.a)?;
    let sol = solve_scattering_guarded(&SpectralParams::new(epsilon, beta, nu)?, profile, disc, 0.0)?;
    if sol.r.norm() >= ZERO_CHECK {
        return Err(Error::Consistency(format!("|R| = {:e} at the refined total-transmission point", sol.r.norm())));
    }
    Ok(Some(nu))
}

/// `ν_b` with `T(ν_b) = 0`.
pub fn find_total_reflection(
    epsilon: f64,
    beta: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<f64> {
    let c = perturbative_coeffs(beta, profile, disc)?;
    check_width(c.width)?;
    let (_, seed) = zero_seeds(&c);
    let nu = refine_real_zero(epsilon, beta, seed, profile, disc, |lf| lf.b)?;
    let sol = solve_scattering_guarded(&SpectralParams::new(epsilon, beta, nu)?, profile, disc, 0.0)?;
    if sol.t.norm() >= ZERO_CHECK {
        return Err(Error::Consistency(format!("|T| = {:e} at the refined total-reflection point", sol.t.norm())));
    }
    Ok(nu)
}

/// Everything known about the resonance at one `(ε, β)`.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceData {
    pub epsilon: f64,
    pub beta: f64,
    pub nu0: Complex64,
    pub coeffs: PerturbativeCoeffs,
    pub nu_a: Option<f64>,
    pub nu_b: Option<f64>,
}

/// Root, coefficients and (where they exist) the zeros. The zeros are
/// skipped when `Γ` vanishes.
pub fn analyze(epsilon: f64, beta: f64, profile: &PerturbationProfile, disc: &Discretization) -> Result<ResonanceData> {
    let coeffs = perturbative_coeffs(beta, profile, disc)?;
    let nu0 = solve_dispersion_root(epsilon, beta, profile, disc)?;
    let (nu_a, nu_b) = if coeffs.width < MIN_WIDTH {
        (None, None)
    } else {
        (
            find_total_transmission(epsilon, beta, profile, disc)?,
            Some(find_total_reflection(epsilon, beta, profile, disc)?),
        )
    };
    Ok(ResonanceData { epsilon, beta, nu0, coeffs, nu_a, nu_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::solve_scattering;

    fn disc() -> Discretization {
        Discretization::default()
    }

    #[test]
    fn closed_form_width_matches_operator() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let c = perturbative_coeffs(0.25, &p, &disc()).unwrap();
        assert!((c.a2.im - c.im_a2).abs() < 1e-10 * c.im_a2, "{} vs {}", c.a2.im, c.im_a2);
        assert!((c.im_a2 - 0.5 * c.width).abs() < 1e-14);
        assert_eq!(c.a1, gamma0(0.25) * c.f0_zero.re);
    }

    #[test]
    fn line_shapes() {
        assert_eq!(breit_wigner(0.0, 0.01, 2.0).unwrap(), 1.0);
        assert!((breit_wigner(0.01, 0.01, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(fano(-2.0 / (2.0 * -0.7), 0.01, 2.0, -0.7).unwrap().abs() < 1e-30);
        assert!(matches!(breit_wigner(0.0, 0.01, 0.0), Err(Error::DegenerateWidth(_))));
    }

    #[test]
    fn factors_reproduce_coefficients() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let params = SpectralParams::new(0.01, 0.25, 2.0).unwrap();
        let lf = line_factors(&params, &p, &disc()).unwrap();
        let sol = solve_scattering(&params, &p, &disc()).unwrap();
        assert!((lf.a / lf.ell - sol.r).norm() < 1e-12);
        assert!((lf.b / lf.ell - sol.t).norm() < 1e-12);
        assert!((lf.a / lf.b).re.abs() < 1e-9 * (lf.a / lf.b).norm());
    }

    #[test]
    fn root_near_leading_order() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let c = perturbative_coeffs(0.25, &p, &disc()).unwrap();
        let eps = 2e-3;
        let nu0 = solve_dispersion_root(eps, 0.25, &p, &disc()).unwrap();
        let lin = c.a1 + eps * c.a2;
        assert!((nu0 - lin).norm() < 50.0 * eps * eps, "{nu0} vs {lin}");
        assert!(nu0.im > 0.0);
    }

    #[test]
    fn rejects_negative_beta() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        assert!(perturbative_coeffs(-0.25, &p, &disc()).is_err());
    }
}
