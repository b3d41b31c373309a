//! Embedded Rayleigh-Bloch modes: points `(β_tr, ν_tr)` where the
//! resonance becomes real, the mode itself, scattering along the curve
//! `β = β_0(ε, εν)` on which `Q` vanishes, and the near-mode line shape.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modal::{Discretization, Functionals, Grid, ModalSystem, ModalVector};
use crate::perturbation::PerturbationProfile;
use crate::resonance::gamma0;
use crate::scattering::{modal_equation_residual, solve_with_constant};
use crate::spectral::{ModeKernel, SpectralParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Allowed `|Im ℓ|`, `|Im Q|` at a refined point.
pub const REALITY_TOL: f64 = 1e-9;

/// Distance past the support used for decay checks.
pub const DECAY_MARGIN: f64 = 20.0;

/// `β` with `√(1 - 2β) = κ`.
pub fn beta_of_kappa(kappa: f64) -> f64 {
    0.5 * (1.0 - kappa * kappa)
}

/// All `β_00 ∈ (0, 1/2)` with `f̃_1(√(1-2β_00)) = 0` and a nonzero
/// derivative there, in increasing order.
pub fn find_candidate_beta(profile: &PerturbationProfile) -> Result<Vec<f64>> {
    if !profile.is_symmetric() {
        return Err(Error::Profile("trapped-mode search needs a profile even in x and y".into()));
    }
    if profile.mode_count() == 0 {
        return Ok(Vec::new());
    }
    let f = |k: f64| profile.fourier_transform(1, k).map(|v| v.re);
    let scan = 4000;
    let mut kappas = Vec::new();
    let mut prev_k = 1e-9;
    let mut prev = f(prev_k)?;
    for s in 1..=scan {
        let k = if s == scan { 1.0 - 1e-9 } else { s as f64 / scan as f64 };
        let v = f(k)?;
        if v == 0.0 {
            kappas.push(k);
        } else if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_k, k, prev);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            kappas.push(0.5 * (lo + hi));
        }
        prev_k = k;
        prev = v;
    }
    let scale = f(1e-9)?.abs().max(1.0);
    let mut betas: Vec<f64> = kappas
        .into_iter()
        .filter(|&k| profile.fourier_transform_derivative(1, k).map(|d| d.norm() > 1e-10 * scale).unwrap_or(false))
        .map(beta_of_kappa)
        .filter(|&b| b > 0.0 && b < 0.5)
        .collect();
    betas.sort_by(f64::total_cmp);
    Ok(betas)
}

/// `ℓ` and `Q` at a real point.
fn ell_and_q(
    epsilon: f64,
    beta: f64,
    nu: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<(Complex64, Complex64, Functionals, ModalSystem)> {
    let params = SpectralParams::new(epsilon, beta, nu)?;
    params.check_window()?;
    let sys = ModalSystem::new(&params, profile, disc)?;
    let fun = sys.functionals()?;
    Ok((sys.dispersion(fun.f), fun.q, fun, sys))
}

/// A refined trapped-mode point.
#[derive(Clone, Debug, Serialize)]
pub struct TrappedPoint {
    pub epsilon: f64,
    pub beta00: f64,
    pub kappa0: f64,
    pub beta_tr: f64,
    pub nu_tr: f64,
    /// `ω² = (1 - β_tr)² - ε²ν_tr²`.
    pub omega_sq: f64,
    pub ell: Complex64,
    pub q_value: Complex64,
    pub iterations: usize,
    /// Width coefficient `γ_0²|f̃_1'(κ_0)|²/κ_0³`, `Im ν_0 ≈ εαΔ²`.
    pub alpha: f64,
    /// Fano slope `γ_0 f̃_0(2κ_0)/κ_0` at `β_00`.
    pub q: f64,
    pub gamma0: f64,
}

/// `α` and `q` of the near-mode expansion at `β_00`.
pub fn near_mode_coefficients(beta00: f64, profile: &PerturbationProfile) -> Result<(f64, f64)> {
    let k0 = (1.0 - 2.0 * beta00).sqrt();
    let g0 = gamma0(beta00);
    let d = profile.fourier_transform_derivative(1, k0)?;
    let alpha = g0 * g0 * d.norm_sqr() / (k0 * k0 * k0);
    let q = g0 * profile.fourier_transform(0, 2.0 * k0)?.re / k0;
    Ok((alpha, q))
}

/// Newton iteration on `(Re ℓ, Re Q) = 0` in `(β, ν)` seeded at
/// `(β_00, γ(0,β_00) f̃_0(0))`. The imaginary parts are then required to
/// vanish as well.
pub fn refine_trapped_point(
    epsilon: f64,
    beta00: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<TrappedPoint> {
    if !(epsilon > 0.0) {
        return Err(Error::ParameterDomain(format!("epsilon = {epsilon} must be positive")));
    }
    if !(beta00 > 0.0 && beta00 < 0.5) {
        return Err(Error::ParameterDomain(format!("beta00 = {beta00} must lie in (0, 1/2)")));
    }
    let mut beta = beta00;
    let mut nu = gamma0(beta00) * profile.fourier_transform(0, 0.0)?.re;
    let eval = |b: f64, n: f64| -> Result<[f64; 2]> {
        let (l, q, _, _) = ell_and_q(epsilon, b, n, profile, disc)?;
        Ok([l.re, q.re])
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..40 {
        iterations = it + 1;
        let g = eval(beta, nu)?;
        trace.push((Complex64::new(beta, nu), g[0].hypot(g[1])));
        let hb = 1e-7;
        let hn = 1e-7 * nu.abs().max(1.0);
        let gb = eval(beta + hb, nu)?;
        let gn = eval(beta, nu + hn)?;
        let j = [[(gb[0] - g[0]) / hb, (gn[0] - g[0]) / hn], [(gb[1] - g[1]) / hb, (gn[1] - g[1]) / hn]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::RootFailure { message: "singular Jacobian in trapped-point Newton".into(), trace });
        }
        let db = -(j[1][1] * g[0] - j[0][1] * g[1]) / det;
        let dn = -(-j[1][0] * g[0] + j[0][0] * g[1]) / det;
        beta += db;
        nu += dn;
        if db.abs() < 1e-14 && dn.abs() < 1e-13 * nu.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RootFailure { message: format!("no convergence near beta = {beta}, nu = {nu}"), trace });
    }
    let (ell, q_value, _, _) = ell_and_q(epsilon, beta, nu, profile, disc)?;
    if ell.im.abs() > REALITY_TOL || q_value.im.abs() > REALITY_TOL {
        return Err(Error::Consistency(format!(
            "trapped point has Im l = {:e}, Im Q = {:e}; the dispersion relation is not real there",
            ell.im, q_value.im
        )));
    }
    let (alpha, q) = near_mode_coefficients(beta00, profile)?;
    Ok(TrappedPoint {
        epsilon,
        beta00,
        kappa0: (1.0 - 2.0 * beta00).sqrt(),
        beta_tr: beta,
        nu_tr: nu,
        omega_sq: (1.0 - beta) * (1.0 - beta) - epsilon * epsilon * nu * nu,
        ell,
        q_value,
        iterations,
        alpha,
        q,
        gamma0: gamma0(beta00),
    })
}

/// The trapped mode `Ψ_m = G_m * Y_m`, `Y = (1-εT̂)^{-1} g2`, scaled so
/// that the largest nodal value over all modes is one.
#[derive(Clone, Debug)]
pub struct TrappedMode {
    pub point: TrappedPoint,
    /// Max of `|Ψ_0|` on `R < |x| ≤ R + 20`.
    pub decay_residual: f64,
    /// Modal-equation residual at the default spacing.
    pub helmholtz_residual: f64,
    params: SpectralParams,
    y: ModalVector,
    c: Complex64,
    grid: Grid,
    kernels: Vec<ModeKernel>,
    conjugate: bool,
}

/// Spacing used for the reported Helmholtz residual.
pub const RESIDUAL_SPACING: f64 = 1e-2;

pub fn build_trapped_mode(point: &TrappedPoint, profile: &PerturbationProfile, disc: &Discretization) -> Result<TrappedMode> {
    let params = SpectralParams::new(point.epsilon, point.beta_tr, point.nu_tr)?;
    let sys = ModalSystem::new(&params, profile, disc)?;
    let y = sys.solve_resolvent(&sys.assemble_g2())?;
    let n = sys.n_modes() as i32;
    let kernels: Vec<ModeKernel> = (-n..=n).map(|m| *sys.kernel(m)).collect();
    let c = sys.average(y.component(-1));
    let mut mode = TrappedMode {
        point: point.clone(),
        decay_residual: 0.0,
        helmholtz_residual: 0.0,
        params,
        y,
        c,
        grid: sys.grid().clone(),
        kernels,
        conjugate: false,
    };
    let scale = mode.nodal_max();
    mode.y = mode.y.scaled(Complex64::new(1.0 / scale, 0.0));
    mode.c /= scale;
    mode.decay_residual = mode.decay_defect(DECAY_MARGIN, 400);
    mode.helmholtz_residual = mode.helmholtz_residual(profile, RESIDUAL_SPACING);
    Ok(mode)
}

impl TrappedMode {
    fn frame_mode(&self, n: i32, x: f64) -> Complex64 {
        let kernel = &self.kernels[(n + self.y.n_modes() as i32) as usize];
        let mut v = self.grid.convolve_at(kernel, self.y.component(n), x);
        if n == -1 {
            v += self.c * kernel.removed_constant();
        }
        v
    }

    /// `Ψ_m(x)`.
    pub fn mode_field(&self, m: i32, x: f64) -> Complex64 {
        if m.unsigned_abs() as usize > self.y.n_modes() {
            return ZERO;
        }
        if self.conjugate {
            self.frame_mode(-m, x).conj()
        } else {
            self.frame_mode(m, x)
        }
    }

    /// `Ψ(x, y)`.
    pub fn evaluate_field(&self, x: f64, y: f64) -> Complex64 {
        let n = self.y.n_modes() as i32;
        let s: Complex64 = (-n..=n).map(|m| self.mode_field(m, x) * (I * (m as f64 * y)).exp()).sum();
        s * (I * (self.params.beta * y)).exp()
    }

    /// The density `Y` in the `β > 0` frame.
    pub fn density(&self) -> &ModalVector {
        &self.y
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn nodal_max(&self) -> f64 {
        let n = self.y.n_modes() as i32;
        let mut worst: f64 = 0.0;
        for m in -n..=n {
            for &x in self.grid.nodes() {
                worst = worst.max(self.frame_mode(m, x).norm());
            }
        }
        worst
    }

    /// Max of `|Ψ_0|` at `samples` points on each of `R < ±x ≤ R + margin`.
    pub fn decay_defect(&self, margin: f64, samples: usize) -> f64 {
        let r = self.grid.halfwidth();
        (1..=samples)
            .map(|s| r + margin * s as f64 / samples as f64)
            .map(|x| self.mode_field(0, x).norm().max(self.mode_field(0, -x).norm()))
            .fold(0.0, f64::max)
    }

    /// Modal-equation residual with second differences of spacing `h` on
    /// `[-R-2, R+2]`.
    pub fn helmholtz_residual(&self, profile: &PerturbationProfile, h: f64) -> f64 {
        let extent = self.grid.halfwidth() + 2.0;
        modal_equation_residual(&self.params, profile, self.y.n_modes(), self.grid.halfwidth(), h, extent, |m, x| {
            self.mode_field(m, x)
        })
    }

    /// The mode at `-β_tr`, the complex conjugate field.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.conjugate = !self.conjugate;
        out.params.beta = -self.params.beta;
        out.point.beta_tr = -self.point.beta_tr;
        out.point.beta00 = -self.point.beta00;
        out
    }

    /// Writes `m,x,re_psi,im_psi` rows at the given abscissae.
    pub fn write_csv<W: Write>(&self, out: W, xs: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["m", "x", "re_psi", "im_psi"]).map_err(io)?;
        let n = self.y.n_modes() as i32;
        for m in -n..=n {
            for &x in xs {
                let v = self.mode_field(m, x);
                w.write_record([m.to_string(), fmt17(x), fmt17(v.re), fmt17(v.im)]).map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Seventeen significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `β_0(ε, εν)`: the root of `Re Q` in `β` at fixed `ν`, by secant from
/// `seed`.
pub fn beta0_on_curve(
    epsilon: f64,
    nu: f64,
    seed: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<f64> {
    let q = |b: f64| ell_and_q(epsilon, b, nu, profile, disc).map(|(_, q, _, _)| q.re);
    let (mut b0, mut b1) = (seed, seed + 1e-6);
    let (mut q0, mut q1) = (q(b0)?, q(b1)?);
    let mut trace = vec![(Complex64::new(b0, 0.0), q0.abs()), (Complex64::new(b1, 0.0), q1.abs())];
    for _ in 0..40 {
        if q1 == q0 {
            break;
        }
        let step = -q1 * (b1 - b0) / (q1 - q0);
        b0 = b1;
        q0 = q1;
        b1 += step;
        q1 = q(b1)?;
        trace.push((Complex64::new(b1, 0.0), q1.abs()));
        if step.abs() < 1e-14 {
            return Ok(b1);
        }
    }
    if q1.abs() < 1e-12 {
        return Ok(b1);
    }
    Err(Error::RootFailure { message: format!("Re Q did not vanish near beta = {b1} at nu = {nu}"), trace })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveScattering {
    pub nu: f64,
    pub beta: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub c_used: Complex64,
}

/// Scattering at `β = β_0(ε, εν)` with `C = 0`.
pub fn scattering_on_curve(
    epsilon: f64,
    nu: f64,
    beta00: f64,
    profile: &PerturbationProfile,
    disc: &Discretization,
) -> Result<CurveScattering> {
    let beta = beta0_on_curve(epsilon, nu, beta00, profile, disc)?;
    let params = SpectralParams::new(epsilon, beta, nu)?;
    let sol = solve_with_constant(&params, profile, disc, ZERO)?;
    Ok(CurveScattering { nu, beta, r: sol.r, t: sol.t, c_used: ZERO })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NearModeRt {
    pub r: Complex64,
    pub t: Complex64,
    /// The additive Breit-Wigner form `iεαΔ²/(δ - iεαΔ²)`.
    pub r_breit_wigner: Complex64,
}

/// Leading-order `R`, `T` at `δ = ν - Re ν_0(ε, β)`,
/// `Δ = β - β_0(ε, εν)`.
pub fn near_mode_asymptotics(epsilon: f64, delta: f64, big_delta: f64, point: &TrappedPoint) -> Result<NearModeRt> {
    if delta == 0.0 && big_delta == 0.0 {
        return Err(Error::Singular("delta = Delta = 0 is the trapped-mode point itself".into()));
    }
    let w = epsilon * point.alpha * big_delta * big_delta;
    let den = Complex64::new(delta, -w);
    Ok(NearModeRt {
        r: I * epsilon * (delta * point.q + point.alpha * big_delta * big_delta) / den,
        t: Complex64::new(delta, 0.0) / den,
        r_breit_wigner: I * w / den,
    })
}

/// Leading-order `β_tr`, `ν_tr` at `ε → 0`.
pub fn leading_order_point(beta00: f64, profile: &PerturbationProfile) -> Result<(f64, f64)> {
    Ok((beta00, gamma0(beta00) * profile.fourier_transform(0, 0.0)?.re))
}
