//! Independent reference solver: the truncated modal ODE system
//! `-Ψ_m'' + [(β+m)² - ω²]Ψ_m = ε(ω²/2π) Σ_n f_{m-n} Ψ_n`
//! discretized directly by second-order finite differences on `[-L, L]`.
//!
//! Nothing here uses Green functions or the resolvent. Outside the support
//! the modes decouple, so the boundary rows use the exact discrete
//! outgoing/decaying closures `Ψ_{j±1} = λ_m Ψ_j` of the difference equation
//! (`λ + 1/λ = 2 + c_m h²`), which removes any truncation error from `L`.
//! Negative `β` is handled natively.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::linalg::clear_upper_state;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::PerturbationProfile;
use crate::spectral::SpectralParams;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest `μ` accepted; the threshold-mode closure degenerates as `μ → 0`.
pub const MIN_MU: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpConfig {
    /// Domain half-length; default `R + 15/κ`.
    pub half_length: Option<f64>,
    /// Target grid spacing; default `min(2π/κ, 1)/40`. The actual spacing
    /// divides `R` exactly.
    pub spacing: Option<f64>,
    pub n_modes: usize,
}

impl Default for BvpConfig {
    fn default() -> Self {
        Self { half_length: None, spacing: None, n_modes: 8 }
    }
}

impl BvpConfig {
    fn resolve(&self, params: &SpectralParams, r: f64) -> Result<(f64, usize, usize)> {
        let kappa = params.kappa();
        let target = self.spacing.unwrap_or_else(|| (2.0 * std::f64::consts::PI / kappa).min(1.0) / 40.0);
        if !(target > 0.0) || target > 2.0 * std::f64::consts::PI / kappa / 20.0 {
            return Err(Error::InvalidParameter(format!(
                "grid spacing {target} must be positive and give at least 20 points per wavelength"
            )));
        }
        let n_r = (r / target).ceil() as usize;
        let h = r / n_r as f64;
        let l = self.half_length.unwrap_or(r + 15.0 / kappa);
        if !(l > r) {
            return Err(Error::InvalidParameter(format!("half length {l} must exceed R = {r}")));
        }
        let n_l = ((l / h).ceil() as usize).max(n_r + 1);
        Ok((h, n_r, n_l))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BvpResult {
    pub r: Complex64,
    pub t: Complex64,
    pub spacing: f64,
    pub half_length: f64,
    /// Max-norm residual of the assembled linear system.
    pub residual: f64,
}

impl BvpResult {
    pub fn unitarity_defect(&self) -> f64 {
        (self.r.norm_sqr() + self.t.norm_sqr() - 1.0).abs()
    }
}

/// Block-tridiagonal system on the grid `x_j = j h`, `|j| <= n_l`, with
/// `(2N+1)`-blocks and off-diagonal blocks `-I`.
struct FdSystem {
    n_modes: usize,
    h: f64,
    n_l: usize,
    diag: Vec<Mat<Complex64>>,
    /// `λ` of the propagating mode, `e^{iθ}`.
    lambda0: Complex64,
}

impl FdSystem {
    fn build(params: &SpectralParams, profile: &PerturbationProfile, cfg: &BvpConfig) -> Result<Self> {
        params.check_window()?;
        if params.mu().re < MIN_MU {
            return Err(Error::InvalidParameter(format!(
                "mu = {} below {MIN_MU}: the threshold-mode closure degenerates",
                params.mu().re
            )));
        }
        let nm = cfg.n_modes;
        if nm < profile.mode_count() + 2 {
            return Err(Error::InvalidParameter(format!(
                "oracle n_modes = {nm} must be at least J + 2 = {}",
                profile.mode_count() + 2
            )));
        }
        let r = profile.support_halfwidth();
        let (h, n_r, n_l) = cfg.resolve(params, r)?;
        let n = nm as i32;
        let j = profile.mode_count() as i32;
        let omega_sq = params.omega_sq().re;
        let coupling = params.epsilon * omega_sq / (2.0 * std::f64::consts::PI);
        let size = 2 * nm + 1;
        let c: Vec<f64> = (-n..=n).map(|m| (params.beta + m as f64).powi(2) - omega_sq).collect();
        // outgoing/decaying root of λ + 1/λ = 2 + c h²
        let lambdas: Vec<Complex64> = c
            .iter()
            .map(|&cm| {
                let s = 2.0 + cm * h * h;
                let disc = Complex64::new(s * s - 4.0, 0.0).sqrt();
                if s.abs() < 2.0 {
                    // oscillatory: λ = e^{iθ} with θ in (0, π)
                    Complex64::new(s / 2.0, (1.0 - s * s / 4.0).sqrt())
                } else {
                    let a = (Complex64::new(s, 0.0) - disc) / 2.0;
                    let b = (Complex64::new(s, 0.0) + disc) / 2.0;
                    if a.norm() < b.norm() {
                        a
                    } else {
                        b
                    }
                }
            })
            .collect();
        let lambda0 = lambdas[nm];
        let count = 2 * n_l + 1;
        let mut diag = Vec::with_capacity(count);
        for k in 0..count {
            let idx = k as i64 - n_l as i64;
            let x = idx as f64 * h;
            let mut d = Mat::<Complex64>::zeros(size, size);
            if idx.unsigned_abs() as usize == n_l {
                for m in 0..size {
                    d[(m, m)] = 1.0 / lambdas[m];
                }
            } else {
                for m in 0..size {
                    d[(m, m)] = Complex64::new(2.0 + c[m] * h * h, 0.0);
                }
                if (idx.unsigned_abs() as usize) <= n_r && coupling != 0.0 {
                    let fbar: Vec<Complex64> =
                        (-j..=j).map(|q| profile.mode_cell_average(q, x - h / 2.0, x + h / 2.0)).collect();
                    for mi in -n..=n {
                        for ni in (mi - j).max(-n)..=(mi + j).min(n) {
                            let f = fbar[(mi - ni + j) as usize];
                            d[((mi + n) as usize, (ni + n) as usize)] -= coupling * h * h * f;
                        }
                    }
                }
            }
            diag.push(d);
        }
        Ok(Self { n_modes: nm, h, n_l, diag, lambda0 })
    }

    fn size(&self) -> usize {
        2 * self.n_modes + 1
    }

    /// Block Thomas elimination; returns the inverses of the Schur
    /// complements for reuse.
    fn factor(&self, adjoint: bool) -> Result<Vec<Mat<Complex64>>> {
        let size = self.size();
        let eye = Mat::<Complex64>::identity(size, size);
        let mut inv: Vec<Mat<Complex64>> = Vec::with_capacity(self.diag.len());
        for (k, d) in self.diag.iter().enumerate() {
            let mut s = if adjoint { d.adjoint().to_owned() } else { d.clone() };
            if k > 0 {
                s -= &inv[k - 1];
            }
            let lu = s.partial_piv_lu();
            let si = lu.solve(&eye);
            if !si.norm_max().is_finite() {
                return Err(Error::Singular(format!("finite-difference system singular at grid row {k}")));
            }
            inv.push(si);
        }
        clear_upper_state();
        Ok(inv)
    }

    fn solve_factored(&self, inv: &[Mat<Complex64>], b: &[Mat<Complex64>]) -> Vec<Mat<Complex64>> {
        let count = inv.len();
        let mut y: Vec<Mat<Complex64>> = Vec::with_capacity(count);
        for k in 0..count {
            let mut v = b[k].clone();
            if k > 0 {
                v += &inv[k - 1] * &y[k - 1];
            }
            y.push(v);
        }
        let mut x: Vec<Mat<Complex64>> = vec![Mat::zeros(self.size(), 1); count];
        for k in (0..count).rev() {
            let mut v = y[k].clone();
            if k + 1 < count {
                v += &x[k + 1];
            }
            x[k] = &inv[k] * &v;
        }
        clear_upper_state();
        x
    }

    fn apply(&self, x: &[Mat<Complex64>], adjoint: bool) -> Vec<Mat<Complex64>> {
        let count = x.len();
        let out = (0..count)
            .map(|k| {
                let mut v = if adjoint { self.diag[k].adjoint() * &x[k] } else { &self.diag[k] * &x[k] };
                if k > 0 {
                    v -= &x[k - 1];
                }
                if k + 1 < count {
                    v -= &x[k + 1];
                }
                v
            })
            .collect();
        clear_upper_state();
        out
    }
}

/// Reflection and transmission from the finite-difference system.
pub fn direct_bvp_rt(params: &SpectralParams, profile: &PerturbationProfile, cfg: &BvpConfig) -> Result<BvpResult> {
    let sys = FdSystem::build(params, profile, cfg)?;
    let count = sys.diag.len();
    let nm = sys.n_modes;
    let jl = sys.n_l as f64;
    let lam = sys.lambda0;
    let theta = lam.arg();
    // incident e^{iθj}; its left-boundary closure contributes this forcing
    let mut b: Vec<Mat<Complex64>> = vec![Mat::zeros(sys.size(), 1); count];
    b[0][(nm, 0)] = -2.0 * I * theta.sin() * (-I * theta * jl).exp();
    let inv = sys.factor(false)?;
    let x = sys.solve_factored(&inv, &b);
    let ax = sys.apply(&x, false);
    let residual = ax
        .iter()
        .zip(&b)
        .map(|(a, b)| (a - b).norm_max())
        .fold(0.0, f64::max);
    let phase = (-I * theta * jl).exp();
    let left = x[0][(nm, 0)];
    let right = x[count - 1][(nm, 0)];
    Ok(BvpResult {
        r: (left - phase) * phase,
        t: right * phase,
        spacing: sys.h,
        half_length: jl * sys.h,
        residual,
    })
}

/// Richardson combination `(4 X_{h/2} - X_h) / 3` of two oracle solves.
pub fn richardson_rt(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    cfg: &BvpConfig,
) -> Result<(BvpResult, BvpResult, Complex64, Complex64)> {
    let coarse = direct_bvp_rt(params, profile, cfg)?;
    let fine_cfg = BvpConfig {
        spacing: Some(coarse.spacing / 2.0),
        half_length: Some(coarse.half_length),
        ..cfg.clone()
    };
    let fine = direct_bvp_rt(params, profile, &fine_cfg)?;
    let r = (4.0 * fine.r - coarse.r) / 3.0;
    let t = (4.0 * fine.t - coarse.t) / 3.0;
    Ok((coarse, fine, r, t))
}

/// Smallest singular value of the unforced finite-difference operator,
/// by inverse iteration on `AᴴA`. Vanishes (up to discretization error) at
/// an embedded trapped mode.
pub fn smallest_singular_value(
    params: &SpectralParams,
    profile: &PerturbationProfile,
    cfg: &BvpConfig,
    iterations: usize,
) -> Result<f64> {
    let sys = FdSystem::build(params, profile, cfg)?;
    let inv = sys.factor(false)?;
    let inv_adj = sys.factor(true)?;
    let count = sys.diag.len();
    let size = sys.size();
    let norm = |v: &[Mat<Complex64>]| v.iter().map(|m| m.squared_norm_l2()).sum::<f64>().sqrt();
    // deterministic start vector
    let mut v: Vec<Mat<Complex64>> = (0..count)
        .map(|k| Mat::from_fn(size, 1, |m, _| Complex64::new(1.0 + ((k * 7 + m * 3) % 5) as f64, (k % 3) as f64)))
        .collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|m| *m = &*m * faer::Scale(Complex64::new(1.0 / n0, 0.0)));
    let mut estimate = f64::INFINITY;
    for _ in 0..iterations {
        // w = A^{-1} A^{-H} v
        let u = sys.solve_factored(&inv_adj, &v);
        let w = sys.solve_factored(&inv, &u);
        let nw = norm(&w);
        estimate = (1.0 / nw).sqrt();
        v = w.into_iter().map(|m| &m * faer::Scale(Complex64::new(1.0 / nw, 0.0))).collect();
    }
    // scale: A carries a factor h² relative to the differential operator
    Ok(estimate / (sys.h * sys.h))
}

/// Leading-order reflection and transmission with every resolvent
/// functional replaced by its `ε → 0` limit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BornRt {
    pub r: Complex64,
    pub t: Complex64,
    /// Direct single-scattering part `(iεγ/k_0) conj(f̃_0(2k_0))`.
    pub r_direct: Complex64,
    pub t_direct: Complex64,
}

/// First-order approximation; refused within `10εΓ` of `a_1`.
pub fn born_rt(params: &SpectralParams, profile: &PerturbationProfile) -> Result<BornRt> {
    params.check_window()?;
    let beta = params.beta;
    let eps = params.epsilon;
    let kappa = params.kappa();
    let gamma0 = crate::spectral::gamma_of(ZERO, beta)?;
    let d_plus = profile.fourier_transform(1, kappa)?;
    let d_minus = profile.fourier_transform(1, -kappa)?;
    let width = gamma0.re.powi(2) / kappa * (d_plus.norm_sqr() + d_minus.norm_sqr());
    let a1 = gamma0.re * profile.fourier_transform(0, 0.0)?.re;
    let nu = params.nu.re;
    if (nu - a1).abs() < 10.0 * eps * width {
        return Err(Error::InvalidParameter(format!(
            "Born approximation refused: |nu - a1| = {} is within 10*eps*Gamma = {}",
            (nu - a1).abs(),
            10.0 * eps * width
        )));
    }
    if eps == 0.0 {
        return Ok(BornRt { r: ZERO, t: ONE, r_direct: ZERO, t_direct: ONE });
    }
    let gamma = params.gamma();
    let k0 = params.k0();
    let (kr, sign) = if beta > 0.0 { (k0.re, 1) } else { (-k0.re, -1) };
    // limits of the functionals in the frame of `|β|`, in terms of f̃ at ±k0
    let p_plus = profile.fourier_transform(0, -2.0 * kr)?;
    let p_minus = profile.fourier_transform(0, 0.0)?;
    let q = profile.fourier_transform(-1, -kr)?;
    let r_plus = profile.fourier_transform(1, -kr)?;
    let r_minus = profile.fourier_transform(1, kr)?;
    let f = profile.fourier_transform(0, 0.0)?;
    let ell = params.nu - gamma * f;
    let pre = I * eps * gamma / kr;
    let (mut r, mut t) = (pre * (p_plus + gamma * q * r_plus / ell), ONE + pre * (p_minus + gamma * q * r_minus / ell));
    let (mut rd, mut td) = (pre * p_plus, ONE + pre * p_minus);
    if sign < 0 {
        // the β < 0 frame is the conjugate problem
        r = r.conj();
        t = t.conj();
        rd = rd.conj();
        td = td.conj();
    }
    Ok(BornRt { r, t, r_direct: rd, t_direct: td })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub count: usize,
    pub max: f64,
    pub rms: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Element-wise complex differences summarized as max and rms.
pub fn compare(reference: &[Complex64], test: &[Complex64], tolerance: f64) -> Result<DiscrepancyReport> {
    if reference.len() != test.len() {
        return Err(Error::GridMismatch(format!(
            "compare: {} reference values vs {} test values",
            reference.len(),
            test.len()
        )));
    }
    let diffs: Vec<f64> = reference.iter().zip(test).map(|(a, b)| (a - b).norm()).collect();
    let max = diffs.iter().cloned().fold(0.0, f64::max);
    let rms = if diffs.is_empty() {
        0.0
    } else {
        (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt()
    };
    Ok(DiscrepancyReport { count: diffs.len(), max, rms, tolerance, pass: max <= tolerance && max.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weak_coupling_is_nearly_transparent() {
        let p = PerturbationProfile::rectangular(1.0).unwrap();
        assert!(direct_bvp_rt(&SpectralParams::new(0.0, 0.25, 3.0).unwrap(), &p, &BvpConfig::default()).is_err());
        let params = SpectralParams::new(1e-4, 0.25, 3.0).unwrap();
        let res = direct_bvp_rt(&params, &p, &BvpConfig::default()).unwrap();
        assert!(res.r.norm() < 1e-3, "{}", res.r);
        assert!((res.t - ONE).norm() < 1e-3, "{}", res.t);
        assert!(res.unitarity_defect() < 1e-10);
    }

    #[test]
    fn residual_is_small_and_unitarity_converges() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let params = SpectralParams::new(0.05, 0.25, 3.0).unwrap();
        let coarse = direct_bvp_rt(&params, &p, &BvpConfig { spacing: Some(0.05), ..Default::default() }).unwrap();
        let fine = direct_bvp_rt(&params, &p, &BvpConfig { spacing: Some(0.025), ..Default::default() }).unwrap();
        assert!(coarse.residual < 1e-10);
        // the discrete problem conserves flux exactly only up to O(h²)
        assert!(fine.unitarity_defect() < coarse.unitarity_defect().max(1e-13));
    }

    #[test]
    fn compare_reports() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let r = compare(&a, &a, 1e-12).unwrap();
        assert_eq!((r.max, r.rms, r.pass), (0.0, 0.0, true));
        let b = [Complex64::new(1.0, 1e-3), Complex64::new(0.0, 2.0)];
        let r = compare(&a, &b, 1e-6).unwrap();
        assert!(!r.pass && (r.max - 1e-3).abs() < 1e-15);
        assert!(compare(&a, &b[..1], 1.0).is_err());
    }

    #[test]
    fn born_refuses_near_resonance() {
        let p = PerturbationProfile::parabolic(2.0).unwrap();
        let a1 = crate::spectral::gamma_of(ZERO, 0.25).unwrap().re * p.fourier_transform(0, 0.0).unwrap().re;
        let params = SpectralParams::new(0.01, 0.25, a1).unwrap();
        assert!(born_rt(&params, &p).is_err());
        let zero = SpectralParams::new(0.0, 0.25, 3.0).unwrap();
        let b = born_rt(&zero, &p).unwrap();
        assert_eq!((b.r, b.t), (ZERO, ONE));
    }
}
