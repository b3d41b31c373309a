//! The truncated modal space, the operator `T̂`, and the resolvent
//! `(1 - εT̂)^{-1}` with the scalar functionals built from it.
//!
//! Functions on `[-R, R]` are represented by their values at the nodes of a
//! composite Gauss-Legendre rule. Convolutions `H_n * A_n` are discretized by
//! a Nyström scheme: off-panel contributions use the native weights (the
//! kernel is analytic there since `x - ξ` keeps one sign), the panel holding
//! the target is split at the target and integrated with mapped rules and
//! polynomial interpolation of the density, which keeps the kink of `H_n`
//! at the origin from spoiling the spectral accuracy.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BandedBlocks, BandedLu};
use crate::perturbation::PerturbationProfile;
use crate::quadrature::{barycentric_weights, gauss_legendre, lagrange_basis};
use crate::spectral::{ModeKernel, SpectralParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// `N`: modes `-N..=N` are kept.
    pub n_modes: usize,
    /// Number of quadrature panels on `[-R, R]`; `None` sizes them from `R`
    /// and `N` so that the fastest decaying kernel is resolved.
    pub panels: Option<usize>,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Bound on the relative residual of every resolvent solve.
    pub residual_tol: f64,
    /// Split x-even profiles into decoupled even and odd half-size systems.
    pub use_parity: bool,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { n_modes: 8, panels: None, order: 16, residual_tol: 1e-10, use_parity: true }
    }
}

impl Discretization {
    pub fn panel_count(&self, halfwidth: f64) -> usize {
        self.panels.unwrap_or_else(|| {
            let needed = (2.0 * halfwidth * (self.n_modes as f64 + 1.0) / 8.0).ceil() as usize;
            needed.max(8)
        })
    }

    pub fn validate(&self, profile: &PerturbationProfile) -> Result<()> {
        let j = profile.mode_count();
        if self.n_modes < j + 2 {
            return Err(Error::InvalidParameter(format!(
                "n_modes = {} must be at least J + 2 = {}",
                self.n_modes,
                j + 2
            )));
        }
        if self.order < 2 {
            return Err(Error::InvalidParameter("quadrature order must be at least 2".into()));
        }
        let m = self.panel_count(profile.support_halfwidth()) * self.order;
        if m < 32 {
            return Err(Error::InvalidParameter(format!("{m} grid points; at least 32 required")));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter("residual_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Split-panel rule for a target at local coordinate `t` of its own panel.
#[derive(Clone, Debug)]
struct SplitRule {
    /// Local coordinates in `[-1, 1]` of the sub-nodes.
    taus: Vec<f64>,
    /// Weights in local coordinates.
    weights: Vec<f64>,
    /// `basis[k][b] = L_b(taus[k])`.
    basis: Vec<Vec<f64>>,
}

fn split_rule(base: &(Vec<f64>, Vec<f64>), local_nodes: &[f64], bary: &[f64], t: f64) -> SplitRule {
    let mut taus = Vec::new();
    let mut weights = Vec::new();
    for (lo, hi) in [(-1.0, t), (t, 1.0)] {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in base.0.iter().zip(&base.1) {
            taus.push(mid + half * x);
            weights.push(half * w);
        }
    }
    let basis = taus.iter().map(|&tau| lagrange_basis(local_nodes, bary, tau)).collect();
    SplitRule { taus, weights, basis }
}

/// Composite Gauss-Legendre grid on `[-R, R]` with equal panels.
#[derive(Clone, Debug)]
pub struct Grid {
    halfwidth: f64,
    panels: usize,
    order: usize,
    local: (Vec<f64>, Vec<f64>),
    bary: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Split rules for each local node index.
    self_rules: Vec<SplitRule>,
}

impl Grid {
    pub fn new(halfwidth: f64, panels: usize, order: usize) -> Self {
        let local = gauss_legendre(order);
        let bary = barycentric_weights(&local.0);
        let hw = halfwidth / panels as f64;
        let m = panels * order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for p in 0..panels {
            let mid = -halfwidth + hw * (2 * p + 1) as f64;
            for (a, (t, w)) in local.0.iter().zip(&local.1).enumerate() {
                nodes[p * order + a] = mid + hw * t;
                weights[p * order + a] = hw * w;
            }
        }
        // exact mirror symmetry of the node set
        for i in 0..m / 2 {
            nodes[i] = -nodes[m - 1 - i];
            weights[i] = weights[m - 1 - i];
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        let self_rules = local.0.iter().map(|&t| split_rule(&local, &local.0, &bary, t)).collect();
        Self { halfwidth, panels, order, local, bary, nodes, weights, self_rules }
    }

    pub fn for_profile(profile: &PerturbationProfile, disc: &Discretization) -> Self {
        let r = profile.support_halfwidth();
        Self::new(r, disc.panel_count(r), disc.order)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    fn panel_halfwidth(&self) -> f64 {
        self.halfwidth / self.panels as f64
    }

    fn panel_mid(&self, p: usize) -> f64 {
        -self.halfwidth + self.panel_halfwidth() * (2 * p + 1) as f64
    }

    /// `∫ h(x) dx` over `[-R, R]`.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Nyström matrix of `A ↦ (H * A)(x_i)` for a kernel.
    pub fn convolution_matrix(&self, kernel: &ModeKernel) -> Mat<Complex64> {
        let (np, q) = (self.panels, self.order);
        let hw = self.panel_halfwidth();
        let m = self.len();
        // Panel blocks depend only on the panel offset.
        let mut offset_blocks: Vec<Mat<Complex64>> = Vec::with_capacity(2 * np - 1);
        for d in -(np as i64 - 1)..=(np as i64 - 1) {
            let shift = 2.0 * hw * d as f64;
            let blk = if d == 0 {
                Mat::from_fn(q, q, |a, b| {
                    let rule = &self.self_rules[a];
                    let ta = self.local.0[a];
                    let mut acc = ZERO;
                    for k in 0..rule.taus.len() {
                        acc += kernel.eval(hw * (ta - rule.taus[k])) * (rule.weights[k] * rule.basis[k][b]);
                    }
                    acc * hw
                })
            } else {
                Mat::from_fn(q, q, |a, b| {
                    let dx = hw * (self.local.0[a] - self.local.0[b]) - shift;
                    kernel.eval(dx) * (hw * self.local.1[b])
                })
            };
            offset_blocks.push(blk);
        }
        Mat::from_fn(m, m, |i, j| {
            let (pi, a) = (i / q, i % q);
            let (pj, b) = (j / q, j % q);
            let d = pj as i64 - pi as i64;
            offset_blocks[(d + np as i64 - 1) as usize][(a, b)]
        })
    }

    /// `(H * A)(x)` at an arbitrary point, with `A` given by its node values.
    pub fn convolve_at(&self, kernel: &ModeKernel, values: &[Complex64], x: f64) -> Complex64 {
        let hw = self.panel_halfwidth();
        let q = self.order;
        let mut acc = ZERO;
        for p in 0..self.panels {
            let mid = self.panel_mid(p);
            let vals = &values[p * q..(p + 1) * q];
            let t = (x - mid) / hw;
            if t > -1.0 && t < 1.0 {
                let rule = split_rule(&self.local, &self.local.0, &self.bary, t);
                for k in 0..rule.taus.len() {
                    let interp: Complex64 = rule.basis[k].iter().zip(vals).map(|(l, v)| v * *l).sum();
                    acc += kernel.eval(x - (mid + hw * rule.taus[k])) * interp * (hw * rule.weights[k]);
                }
            } else {
                for b in 0..q {
                    let xb = self.nodes[p * q + b];
                    acc += kernel.eval(x - xb) * vals[b] * self.weights[p * q + b];
                }
            }
        }
        acc
    }

    /// Polynomial interpolant of node values at `x` (zero outside `[-R, R]`).
    pub fn interpolate(&self, values: &[Complex64], x: f64) -> Complex64 {
        if x.abs() > self.halfwidth {
            return ZERO;
        }
        let hw = self.panel_halfwidth();
        let p = (((x + self.halfwidth) / (2.0 * hw)).floor() as usize).min(self.panels - 1);
        let t = (x - self.panel_mid(p)) / hw;
        let l = lagrange_basis(&self.local.0, &self.bary, t);
        l.iter().zip(&values[p * self.order..(p + 1) * self.order]).map(|(l, v)| v * *l).sum()
    }
}

/// An element of the truncated space: for each `n ∈ [-N, N]` the values
/// `A_n(x_i)` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalVector {
    n_modes: usize,
    points: usize,
    data: Vec<Complex64>,
}

impl ModalVector {
    pub fn zeros(n_modes: usize, points: usize) -> Self {
        Self { n_modes, points, data: vec![ZERO; (2 * n_modes + 1) * points] }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    fn offset(&self, n: i32) -> usize {
        assert!(n.unsigned_abs() as usize <= self.n_modes, "mode {n} outside -N..=N");
        (n + self.n_modes as i32) as usize * self.points
    }

    pub fn component(&self, n: i32) -> &[Complex64] {
        let o = self.offset(n);
        &self.data[o..o + self.points]
    }

    pub fn component_mut(&mut self, n: i32) -> &mut [Complex64] {
        let o = self.offset(n);
        &mut self.data[o..o + self.points]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let n = self.n_modes as i32;
        -n..=n
    }

    /// `sup_i |A_n(x_i)|`.
    pub fn mode_sup(&self, n: i32) -> f64 {
        self.component(n).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A‖ = Σ_n (sup_i |A_n(x_i)|)²`.
    pub fn norm(&self) -> f64 {
        self.modes().map(|n| self.mode_sup(n).powi(2)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest odd part `|A_n(x) - A_n(-x)| / 2` over all components; nodes
    /// are mirror symmetric.
    pub fn odd_part_sup(&self) -> f64 {
        let m = self.points;
        let mut s: f64 = 0.0;
        for n in self.modes() {
            let c = self.component(n);
            for i in 0..m {
                s = s.max(0.5 * (c[i] - c[m - 1 - i]).norm());
            }
        }
        s
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self { data: self.data.iter().map(|z| z * a).collect(), ..self.clone() }
    }

    pub fn add_scaled(&mut self, other: &ModalVector, a: Complex64) {
        assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += y * a;
        }
    }

    pub fn conj_reflected(&self) -> Self {
        // component n of the result is conj of component -n
        let mut out = Self::zeros(self.n_modes, self.points);
        for n in self.modes() {
            let src = self.component(-n).iter().map(|z| z.conj()).collect::<Vec<_>>();
            out.component_mut(n).copy_from_slice(&src);
        }
        out
    }
}

/// The scalar functionals of the resolvent together with the two solved
/// vectors `Y1 = (1-εT̂)^{-1} g1`, `Y2 = (1-εT̂)^{-1} g2`.
#[derive(Clone, Debug)]
pub struct Functionals {
    pub f: Complex64,
    pub q: Complex64,
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    pub r_plus: Complex64,
    pub r_minus: Complex64,
    pub y1: ModalVector,
    pub y2: ModalVector,
}

/// `T̂` at one parameter point, in the frame `β > 0`.
///
/// For `β < 0` the system is set up at `-β` with the propagating
/// wavenumber negated (incoming instead of outgoing), which is the problem
/// solved by the complex conjugate of the field.
pub struct ModalSystem {
    params: SpectralParams,
    frame: SpectralParams,
    k0: Complex64,
    disc: Discretization,
    grid: Grid,
    j_max: usize,
    /// `fvals[j + J][i] = f_j(x_i)`.
    fvals: Vec<Vec<Complex64>>,
    kernels: Vec<ModeKernel>,
    conv: Vec<Mat<Complex64>>,
    even_profile: bool,
}

impl ModalSystem {
    pub fn new(params: &SpectralParams, profile: &PerturbationProfile, disc: &Discretization) -> Result<Self> {
        disc.validate(profile)?;
        let grid = Grid::for_profile(profile, disc);
        let frame = SpectralParams { beta: params.beta.abs(), ..*params };
        let k0 = if params.beta < 0.0 { -frame.k0() } else { frame.k0() };
        let n = disc.n_modes as i32;
        let kernels: Vec<ModeKernel> = (-n..=n)
            .map(|m| match m {
                0 => ModeKernel::Oscillatory { k: k0 },
                -1 => ModeKernel::Regularized { mu: frame.mu() },
                _ => ModeKernel::Decaying { k: frame.wavenumber(m) },
            })
            .collect();
        let conv = kernels.iter().map(|k| grid.convolution_matrix(k)).collect();
        let j_max = profile.mode_count();
        let fvals = (-(j_max as i32)..=j_max as i32)
            .map(|j| grid.nodes().iter().map(|&x| profile.mode_value_unchecked(j, x)).collect())
            .collect();
        Ok(Self {
            params: *params,
            frame,
            k0,
            disc: disc.clone(),
            grid,
            j_max,
            fvals,
            kernels,
            conv,
            even_profile: profile.is_even_in_x(),
        })
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    /// Parameters with `β` replaced by `|β|`.
    pub fn frame(&self) -> &SpectralParams {
        &self.frame
    }

    /// The signed propagating wavenumber used by this system.
    pub fn k0(&self) -> Complex64 {
        self.k0
    }

    pub fn gamma(&self) -> Complex64 {
        self.frame.gamma()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn n_modes(&self) -> usize {
        self.disc.n_modes
    }

    pub fn kernel(&self, m: i32) -> &ModeKernel {
        &self.kernels[(m + self.disc.n_modes as i32) as usize]
    }

    fn f(&self, j: i32) -> Option<&[Complex64]> {
        if j.unsigned_abs() as usize > self.j_max {
            None
        } else {
            Some(&self.fvals[(j + self.j_max as i32) as usize])
        }
    }

    pub fn zeros(&self) -> ModalVector {
        ModalVector::zeros(self.disc.n_modes, self.grid.len())
    }

    fn from_modes(&self, f: impl Fn(i32) -> Option<Vec<Complex64>>) -> ModalVector {
        let mut v = self.zeros();
        for m in v.modes().collect::<Vec<_>>() {
            if let Some(c) = f(m) {
                v.component_mut(m).copy_from_slice(&c);
            }
        }
        v
    }

    /// `(g1)_m = e^{ik_0 x} f_m(x)`.
    pub fn assemble_g1(&self) -> ModalVector {
        let phase: Vec<Complex64> = self.grid.nodes().iter().map(|&x| (I * self.k0 * x).exp()).collect();
        self.from_modes(|m| self.f(m).map(|fm| fm.iter().zip(&phase).map(|(a, b)| a * b).collect()))
    }

    /// `(g2)_m = f_{m+1}(x)`.
    pub fn assemble_g2(&self) -> ModalVector {
        self.from_modes(|m| self.f(m + 1).map(|c| c.to_vec()))
    }

    fn check_shape(&self, a: &ModalVector) -> Result<()> {
        if a.n_modes != self.disc.n_modes || a.points != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "vector has N={} on {} points, system has N={} on {} points",
                a.n_modes,
                a.points,
                self.disc.n_modes,
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// `(H_n * A_n)` at the nodes for every mode.
    pub fn convolutions(&self, a: &ModalVector) -> Result<ModalVector> {
        self.check_shape(a)?;
        let mut out = self.zeros();
        let m = self.grid.len();
        for n in a.modes() {
            let k = &self.conv[(n + self.disc.n_modes as i32) as usize];
            let src = a.component(n);
            let dst = out.component_mut(n);
            for i in 0..m {
                let mut acc = ZERO;
                for j in 0..m {
                    acc += k[(i, j)] * src[j];
                }
                dst[i] = acc;
            }
        }
        Ok(out)
    }

    /// `(T̂A)_m = 2γ Σ_n (H_n * A_n) f_{m-n}`.
    pub fn apply_t(&self, a: &ModalVector) -> Result<ModalVector> {
        let conv = self.convolutions(a)?;
        let two_gamma = 2.0 * self.gamma();
        let mut out = self.zeros();
        let nm = self.disc.n_modes as i32;
        let j = self.j_max as i32;
        for m in -nm..=nm {
            let dst = out.component_mut(m);
            for n in (m - j).max(-nm)..=(m + j).min(nm) {
                let Some(fj) = self.f(m - n) else { continue };
                let c = conv.component(n);
                for i in 0..dst.len() {
                    dst[i] += two_gamma * fj[i] * c[i];
                }
            }
        }
        Ok(out)
    }

    /// `(1 - εT̂) A`.
    pub fn apply_system(&self, a: &ModalVector) -> Result<ModalVector> {
        let t = self.apply_t(a)?;
        let mut out = a.clone();
        out.add_scaled(&t, Complex64::new(-self.params.epsilon, 0.0));
        Ok(out)
    }

    fn use_parity(&self) -> bool {
        self.disc.use_parity && self.even_profile && self.grid.len() % 2 == 0
    }

    /// Factorizes `1 - εT̂`.
    pub fn factor(&self) -> Result<Resolvent<'_>> {
        if self.params.epsilon == 0.0 {
            return Ok(Resolvent { system: self, kind: ResolventKind::Identity });
        }
        let kind = if self.use_parity() {
            ResolventKind::Parity { even: self.factor_reduced(1.0)?, odd: self.factor_reduced(-1.0)? }
        } else {
            ResolventKind::Full(self.factor_full()?)
        };
        Ok(Resolvent { system: self, kind })
    }

    fn factor_full(&self) -> Result<BandedLu> {
        let m = self.grid.len();
        let scale = -self.params.epsilon * 2.0 * self.gamma();
        self.factor_blocks(m, |n, fj, r, c| {
            let k = &self.conv[n];
            scale * fj[r] * k[(r, c)]
        })
    }

    fn factor_reduced(&self, parity: f64) -> Result<BandedLu> {
        let m = self.grid.len();
        let h = m / 2;
        let scale = -self.params.epsilon * 2.0 * self.gamma();
        self.factor_blocks(h, |n, fj, r, c| {
            let k = &self.conv[n];
            let (i, j, jm) = (h + r, h + c, h - 1 - c);
            scale * fj[i] * (k[(i, j)] + parity * k[(i, jm)])
        })
    }

    /// Builds and factors the block system; `entry(n_index, f_{m-n}, r, c)`
    /// returns the off-identity part of block `(m, n)`.
    fn factor_blocks(
        &self,
        b: usize,
        entry: impl Fn(usize, &[Complex64], usize, usize) -> Complex64,
    ) -> Result<BandedLu> {
        let nm = self.disc.n_modes as i32;
        let nb = 2 * self.disc.n_modes + 1;
        let j = self.j_max as i32;
        let mut blocks = BandedBlocks::new(nb, self.j_max, b);
        for m in -nm..=nm {
            for n in (m - j).max(-nm)..=(m + j).min(nm) {
                let Some(fj) = self.f(m - n) else { continue };
                let ni = (n + nm) as usize;
                let mut blk = Mat::from_fn(b, b, |r, c| entry(ni, fj, r, c));
                if m == n {
                    for r in 0..b {
                        blk[(r, r)] += 1.0;
                    }
                }
                blocks.set((m + nm) as usize, ni, blk);
            }
        }
        blocks.factor()
    }

    /// `(1 - εT̂)^{-1} g`, with the residual check.
    pub fn solve_resolvent(&self, g: &ModalVector) -> Result<ModalVector> {
        self.factor()?.solve(g)
    }

    /// Solves for `Y1`, `Y2` and evaluates `F, Q, P^±, R^±`.
    pub fn functionals(&self) -> Result<Functionals> {
        let res = self.factor()?;
        let mut ys = res.solve_many(&[self.assemble_g1(), self.assemble_g2()])?;
        let y2 = ys.pop().unwrap();
        let y1 = ys.pop().unwrap();
        Ok(self.functionals_from(y1, y2))
    }

    pub(crate) fn functionals_from(&self, y1: ModalVector, y2: ModalVector) -> Functionals {
        let plus: Vec<Complex64> = self.grid.nodes().iter().map(|&x| (I * self.k0 * x).exp()).collect();
        let minus: Vec<Complex64> = plus.iter().map(|z| 1.0 / z).collect();
        let weighted = |v: &[Complex64], w: &[Complex64]| -> Complex64 {
            v.iter().zip(w).zip(self.grid.weights()).map(|((a, b), c)| a * b * c).sum()
        };
        Functionals {
            f: self.average(y2.component(-1)),
            q: self.average(y1.component(-1)),
            p_plus: weighted(y1.component(0), &plus),
            p_minus: weighted(y1.component(0), &minus),
            r_plus: weighted(y2.component(0), &plus),
            r_minus: weighted(y2.component(0), &minus),
            y1,
            y2,
        }
    }

    /// `⟨h⟩ = ∫ h dx`.
    pub fn average(&self, h: &[Complex64]) -> Complex64 {
        self.grid.integrate(h)
    }

    /// `ℓ = ν - γF`.
    pub fn dispersion(&self, f: Complex64) -> Complex64 {
        self.params.nu - self.gamma() * f
    }

    /// `ω² / 2π`, the coupling constant of the modal equations.
    pub fn coupling(&self) -> Complex64 {
        self.frame.omega_sq() / (2.0 * PI)
    }
}

enum ResolventKind {
    Identity,
    Full(BandedLu),
    Parity { even: BandedLu, odd: BandedLu },
}

/// A factorized `1 - εT̂`.
pub struct Resolvent<'a> {
    system: &'a ModalSystem,
    kind: ResolventKind,
}

impl Resolvent<'_> {
    pub fn solve(&self, g: &ModalVector) -> Result<ModalVector> {
        Ok(self.solve_many(std::slice::from_ref(g))?.pop().unwrap())
    }

    pub fn solve_many(&self, gs: &[ModalVector]) -> Result<Vec<ModalVector>> {
        let sys = self.system;
        for g in gs {
            sys.check_shape(g)?;
        }
        let nb = 2 * sys.disc.n_modes + 1;
        let m = sys.grid.len();
        let ys: Vec<ModalVector> = match &self.kind {
            ResolventKind::Identity => gs.to_vec(),
            ResolventKind::Full(lu) => {
                let rhs = Mat::from_fn(nb * m, gs.len(), |r, c| gs[c].data[r]);
                let x = lu.solve(rhs.as_ref());
                gs.iter()
                    .enumerate()
                    .map(|(c, g)| ModalVector { data: (0..nb * m).map(|r| x[(r, c)]).collect(), ..g.clone() })
                    .collect()
            }
            ResolventKind::Parity { even, odd } => {
                let h = m / 2;
                let part = |sign: f64| {
                    Mat::from_fn(nb * h, gs.len(), |r, c| {
                        let (blk, i) = (r / h, r % h);
                        let comp = &gs[c].data[blk * m..(blk + 1) * m];
                        0.5 * (comp[h + i] + sign * comp[h - 1 - i])
                    })
                };
                let xe = even.solve(part(1.0).as_ref());
                let xo = odd.solve(part(-1.0).as_ref());
                gs.iter()
                    .enumerate()
                    .map(|(c, g)| {
                        let mut data = vec![ZERO; nb * m];
                        for blk in 0..nb {
                            for i in 0..h {
                                let (e, o) = (xe[(blk * h + i, c)], xo[(blk * h + i, c)]);
                                data[blk * m + h + i] = e + o;
                                data[blk * m + h - 1 - i] = e - o;
                            }
                        }
                        ModalVector { data, ..g.clone() }
                    })
                    .collect()
            }
        };
        for (g, y) in gs.iter().zip(&ys) {
            let r = sys.apply_system(y)?;
            let scale = g.max_abs().max(f64::MIN_POSITIVE);
            let resid = r.data.iter().zip(&g.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
            if !(resid <= sys.disc.residual_tol) {
                return Err(Error::Discretization { residual: resid, tol: sys.disc.residual_tol });
            }
        }
        Ok(ys)
    }
}
