//! The periodic perturbation `f(x, y)` of the refractive index, its Fourier
//! modes in `y` and their Fourier transforms in `x`.
//!
//! Conventions: `f_j(x) = ∫_0^{2π} e^{-ijy} f(x, y) dy` and
//! `f̃_j(ξ) = ∫ e^{-iξx} f_j(x) dx`, so that
//! `f(x, y) = (1/2π) Σ_j f_j(x) e^{ijy}`.
//!
//! The two built-in families `g(x)(1 + cos y)` (rectangular and parabolic
//! barriers) have discontinuous `g` or `g'` at `|x| = a`; they are evaluated
//! exactly and accuracy statements for them are empirical.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Below this `|aξ|` the closed-form transforms switch to their Taylor series.
const SERIES_SWITCH: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Rectangular { a: f64 },
    Parabolic { a: f64 },
    Sampled,
}

#[derive(Debug)]
struct SampledData {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[ix * ny + iy] = f(xs[ix], ys[iy])`
    values: Vec<f64>,
    /// `modes[j + J][ix] = f_j(xs[ix])`
    modes: Vec<Vec<Complex64>>,
}

/// Immutable description of `f`; cheap to clone and safe to share.
#[derive(Clone, Debug)]
pub struct PerturbationProfile {
    kind: ProfileKind,
    support_halfwidth: f64,
    mode_count: usize,
    symmetric: bool,
    even_in_x: bool,
    sampled: Option<Arc<SampledData>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub positive_volume: bool,
    /// `∫∫ f dx dy = f̃_0(0)`.
    pub volume: f64,
    pub symmetric: bool,
    /// `max |f(x,y) - f(-x,y)|` over the check grid.
    pub x_symmetry_defect: f64,
    /// `max |f(x,y) - f(x,-y)|` over the check grid.
    pub y_symmetry_defect: f64,
}

impl PerturbationProfile {
    /// `f(x,y) = 1_{|x|<a} (1 + cos y)`.
    pub fn rectangular(a: f64) -> Result<Self> {
        Self::builtin(ProfileKind::Rectangular { a }, a)
    }

    /// `f(x,y) = (1 - x²/a²)_+ (1 + cos y)`.
    pub fn parabolic(a: f64) -> Result<Self> {
        Self::builtin(ProfileKind::Parabolic { a }, a)
    }

    fn builtin(kind: ProfileKind, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "barrier half-width must be positive and finite, got {a}"
            )));
        }
        Ok(Self {
            kind,
            support_halfwidth: a,
            mode_count: 1,
            symmetric: true,
            even_in_x: true,
            sampled: None,
        })
    }

    /// Builds a sampled profile from values on a uniform lattice.
    ///
    /// `xs` must be uniform and symmetric about zero (its end points define
    /// the support `[-R, R]`), `ys` uniform on `[0, 2π)` starting at zero.
    /// `values[ix * ys.len() + iy] = f(xs[ix], ys[iy])`.
    pub fn from_lattice(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let nx = xs.len();
        let ny = ys.len();
        if nx < 4 || ny < 3 {
            return Err(Error::Profile(format!(
                "lattice too small: {nx} x-points, {ny} y-points (need at least 4 and 3)"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::Profile(format!(
                "expected {} samples for a {nx}x{ny} lattice, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Profile(format!("non-finite sample {v}")));
        }
        let r = xs[nx - 1];
        if !(r > 0.0) || (xs[0] + r).abs() > 1e-9 * r {
            return Err(Error::Profile(format!(
                "x samples must span a symmetric interval [-R, R], got [{}, {}]",
                xs[0], xs[nx - 1]
            )));
        }
        check_uniform(&xs, "x")?;
        check_uniform(&ys, "y")?;
        let dy = 2.0 * PI / ny as f64;
        if ys[0].abs() > 1e-9 || ((ys[1] - ys[0]) - dy).abs() > 1e-9 * dy {
            return Err(Error::Profile(format!(
                "y samples must be {ny} uniform points on [0, 2π) starting at 0"
            )));
        }

        // Periodic trapezoid rule in y; retain modes below the Nyquist limit.
        let jmax_avail = (ny - 1) / 2;
        let mut all_modes = Vec::with_capacity(2 * jmax_avail + 1);
        for j in -(jmax_avail as i64)..=(jmax_avail as i64) {
            let col: Vec<Complex64> = (0..nx)
                .map(|ix| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for iy in 0..ny {
                        let phase = -(j as f64) * ys[iy];
                        acc += Complex64::from_polar(values[ix * ny + iy], phase);
                    }
                    acc * dy
                })
                .collect();
            all_modes.push(col);
        }
        let sup = |col: &Vec<Complex64>| col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max) * 2.0 * PI;
        let mut mode_count = 1;
        for j in 1..=jmax_avail {
            let plus = sup(&all_modes[jmax_avail + j]);
            let minus = sup(&all_modes[jmax_avail - j]);
            if plus.max(minus) > 1e-12 * scale {
                mode_count = j;
            }
        }
        if mode_count > jmax_avail {
            mode_count = jmax_avail;
        }
        let modes = all_modes[jmax_avail - mode_count..=jmax_avail + mode_count].to_vec();

        let data = SampledData { xs, ys, values, modes };
        let (dx_def, dy_def) = lattice_symmetry_defects(&data);
        let vmax = data.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = 1e-12 * vmax.max(f64::MIN_POSITIVE);
        Ok(Self {
            kind: ProfileKind::Sampled,
            support_halfwidth: r,
            mode_count,
            symmetric: dx_def <= tol && dy_def <= tol,
            even_in_x: dx_def <= tol,
            sampled: Some(Arc::new(data)),
        })
    }

    /// Samples `f` on an `nx × ny` lattice over `[-R, R] × [0, 2π)`.
    pub fn sampled_from_fn(
        halfwidth: f64,
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if !(halfwidth > 0.0) || nx < 2 || ny < 1 {
            return Err(Error::InvalidParameter(
                "sampled profile needs R > 0 and a non-trivial lattice".into(),
            ));
        }
        let xs: Vec<f64> = (0..nx)
            .map(|i| -halfwidth + 2.0 * halfwidth * i as f64 / (nx - 1) as f64)
            .collect();
        let ys: Vec<f64> = (0..ny).map(|k| 2.0 * PI * k as f64 / ny as f64).collect();
        let mut values = Vec::with_capacity(nx * ny);
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        Self::from_lattice(xs, ys, values)
    }

    /// Loads a sampled profile from a CSV file with columns `x,y,f`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Profile(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Profile(format!("{}: {e}", path.display())))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Profile(format!("{}: missing column '{name}'", path.display())))
        };
        let (cx, cy, cf) = (col("x")?, col("y")?, col("f")?);
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Profile(format!("{}: {e}", path.display())))?;
            let parse = |c: usize| -> Result<f64> {
                rec.get(c)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Profile(format!("{}: bad number on data row {}", path.display(), line + 1))
                    })
            };
            rows.push((parse(cx)?, parse(cy)?, parse(cf)?));
        }
        Self::from_rows(&rows)
    }

    /// Builds a sampled profile from unordered `(x, y, f)` triples forming a
    /// complete uniform lattice.
    pub fn from_rows(rows: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        let (nx, ny) = (xs.len(), ys.len());
        if nx * ny != rows.len() {
            return Err(Error::Profile(format!(
                "{} rows do not form a complete lattice ({nx} distinct x by {ny} distinct y)",
                rows.len()
            )));
        }
        check_uniform(&xs, "x")?;
        check_uniform(&ys, "y")?;
        let mut values = vec![f64::NAN; nx * ny];
        let dx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
        let dy = if ny > 1 { (ys[ny - 1] - ys[0]) / (ny - 1) as f64 } else { 1.0 };
        for &(x, y, f) in rows {
            let ix = ((x - xs[0]) / dx).round() as usize;
            let iy = ((y - ys[0]) / dy).round() as usize;
            let slot = &mut values[ix * ny + iy];
            if !slot.is_nan() {
                return Err(Error::Profile(format!("duplicate lattice point ({x}, {y})")));
            }
            *slot = f;
        }
        Self::from_lattice(xs, ys, values)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// `R`: `f` vanishes for `|x| > R`.
    pub fn support_halfwidth(&self) -> f64 {
        self.support_halfwidth
    }

    /// `J`: the highest mode index carrying data.
    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Evenness in both arguments.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `f(-x, y) = f(x, y)`; enables the parity-split solver.
    pub fn is_even_in_x(&self) -> bool {
        self.even_in_x
    }

    fn check_mode(&self, j: i32) -> Result<()> {
        match self.kind {
            // closed forms are exact for every j (zero beyond |j| = 1)
            ProfileKind::Rectangular { .. } | ProfileKind::Parabolic { .. } => Ok(()),
            ProfileKind::Sampled => {
                if j.unsigned_abs() as usize > self.mode_count {
                    Err(Error::ModeOutOfRange { j, max: self.mode_count })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Fourier coefficient of the builtin `1 + cos y` factor.
    fn builtin_coefficient(j: i32) -> f64 {
        match j {
            0 => 2.0 * PI,
            1 | -1 => PI,
            _ => 0.0,
        }
    }

    fn barrier(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Rectangular { a } => {
                let ax = x.abs();
                if ax < a {
                    1.0
                } else if ax == a {
                    0.5
                } else {
                    0.0
                }
            }
            ProfileKind::Parabolic { a } => {
                if x.abs() < a {
                    1.0 - (x / a).powi(2)
                } else {
                    0.0
                }
            }
            ProfileKind::Sampled => unreachable!("barrier() on sampled profile"),
        }
    }

    /// `f_j(x)`. Modes beyond `J` of a sampled profile are an error.
    pub fn mode_value(&self, j: i32, x: f64) -> Result<Complex64> {
        self.check_mode(j)?;
        Ok(self.mode_value_unchecked(j, x))
    }

    /// `f_j(x)` with modes outside the stored range treated as zero.
    pub(crate) fn mode_value_unchecked(&self, j: i32, x: f64) -> Complex64 {
        match &self.sampled {
            None => Complex64::new(Self::builtin_coefficient(j) * self.barrier(x), 0.0),
            Some(data) => {
                if j.unsigned_abs() as usize > self.mode_count || x.abs() > self.support_halfwidth {
                    return Complex64::new(0.0, 0.0);
                }
                let col = &data.modes[(j + self.mode_count as i32) as usize];
                cubic_interpolate(&data.xs, col, x)
            }
        }
    }

    /// `f_j` sampled at the points `xs`.
    pub fn fourier_mode(&self, j: i32, xs: &[f64]) -> Result<Vec<Complex64>> {
        self.check_mode(j)?;
        Ok(xs.iter().map(|&x| self.mode_value_unchecked(j, x)).collect())
    }

    /// `f̃_j(ξ)`.
    pub fn fourier_transform(&self, j: i32, xi: f64) -> Result<Complex64> {
        self.check_mode(j)?;
        Ok(match self.kind {
            ProfileKind::Rectangular { a } => {
                Complex64::new(Self::builtin_coefficient(j) * 2.0 * a * sinc(a * xi), 0.0)
            }
            ProfileKind::Parabolic { a } => {
                Complex64::new(Self::builtin_coefficient(j) * 4.0 * a * parabolic_shape(a * xi), 0.0)
            }
            ProfileKind::Sampled => self.sampled_transform(j, xi, false),
        })
    }

    /// `d f̃_j / dξ`.
    pub fn fourier_transform_derivative(&self, j: i32, xi: f64) -> Result<Complex64> {
        self.check_mode(j)?;
        Ok(match self.kind {
            ProfileKind::Rectangular { a } => {
                Complex64::new(Self::builtin_coefficient(j) * 2.0 * a * a * sinc_derivative(a * xi), 0.0)
            }
            ProfileKind::Parabolic { a } => Complex64::new(
                Self::builtin_coefficient(j) * 4.0 * a * a * parabolic_shape_derivative(a * xi),
                0.0,
            ),
            ProfileKind::Sampled => self.sampled_transform(j, xi, true),
        })
    }

    fn sampled_transform(&self, j: i32, xi: f64, derivative: bool) -> Complex64 {
        let data = self.sampled.as_ref().expect("sampled data");
        let (gx, gw) = gauss_legendre(8);
        let mut acc = Complex64::new(0.0, 0.0);
        for cell in data.xs.windows(2) {
            let (lo, hi) = (cell[0], cell[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (t, w) in gx.iter().zip(&gw) {
                let x = mid + half * t;
                let mut term = self.mode_value_unchecked(j, x) * Complex64::from_polar(1.0, -xi * x);
                if derivative {
                    term *= Complex64::new(0.0, -x);
                }
                acc += term * (w * half);
            }
        }
        acc
    }

    /// `f(x, y)`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match &self.sampled {
            None => self.barrier(x) * (1.0 + y.cos()),
            Some(_) => {
                let j_max = self.mode_count as i32;
                let s: Complex64 = (-j_max..=j_max)
                    .map(|j| self.mode_value_unchecked(j, x) * Complex64::from_polar(1.0, j as f64 * y))
                    .sum();
                s.re / (2.0 * PI)
            }
        }
    }

    /// Average of `f_j` over the cell `[lo, hi]`.
    pub fn mode_cell_average(&self, j: i32, lo: f64, hi: f64) -> Complex64 {
        let r = self.support_halfwidth;
        let a = lo.max(-r);
        let b = hi.min(r);
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        let (gx, gw) = gauss_legendre(8);
        // split at the origin too so that pieces are polynomial for builtins
        let mut cuts = vec![a];
        if a < 0.0 && b > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(b);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (t, wt) in gx.iter().zip(&gw) {
                acc += self.mode_value_unchecked(j, mid + half * t) * (wt * half);
            }
        }
        acc / (hi - lo)
    }

    pub fn check_admissibility(&self) -> AdmissibilityReport {
        let volume = self
            .fourier_transform(0, 0.0)
            .map(|z| z.re)
            .unwrap_or(0.0);
        let (x_def, y_def, vmax) = match &self.sampled {
            Some(data) => {
                let (dx, dy) = lattice_symmetry_defects(data);
                let vmax = data.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                (dx, dy, vmax)
            }
            None => {
                let r = self.support_halfwidth;
                let mut dx: f64 = 0.0;
                let mut dy: f64 = 0.0;
                let mut vmax: f64 = 0.0;
                for i in 0..=64 {
                    let x = -r + 2.0 * r * i as f64 / 64.0;
                    for k in 0..64 {
                        let y = 2.0 * PI * k as f64 / 64.0;
                        let v = self.value(x, y);
                        vmax = vmax.max(v.abs());
                        dx = dx.max((v - self.value(-x, y)).abs());
                        dy = dy.max((v - self.value(x, -y)).abs());
                    }
                }
                (dx, dy, vmax)
            }
        };
        let scale = vmax * 2.0 * self.support_halfwidth * 2.0 * PI;
        AdmissibilityReport {
            positive_volume: scale > 0.0 && volume > 1e-12 * scale,
            volume,
            symmetric: x_def <= 1e-12 * vmax.max(f64::MIN_POSITIVE)
                && y_def <= 1e-12 * vmax.max(f64::MIN_POSITIVE),
            x_symmetry_defect: x_def,
            y_symmetry_defect: y_def,
        }
    }
}

fn check_uniform(v: &[f64], axis: &str) -> Result<()> {
    if v.len() < 2 {
        return Ok(());
    }
    let step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Profile(format!("{axis} samples must be increasing")));
    }
    for (i, w) in v.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::Profile(format!(
                "{axis} samples are not uniform (gap {} at index {i}, expected {step})",
                w[1] - w[0]
            )));
        }
    }
    Ok(())
}

fn lattice_symmetry_defects(data: &SampledData) -> (f64, f64) {
    let nx = data.xs.len();
    let ny = data.ys.len();
    let mut dx: f64 = 0.0;
    let mut dy: f64 = 0.0;
    for ix in 0..nx {
        for iy in 0..ny {
            let v = data.values[ix * ny + iy];
            dx = dx.max((v - data.values[(nx - 1 - ix) * ny + iy]).abs());
            dy = dy.max((v - data.values[ix * ny + (ny - iy) % ny]).abs());
        }
    }
    (dx, dy)
}

/// Local four-point Lagrange interpolation on a uniform grid.
fn cubic_interpolate(xs: &[f64], vals: &[Complex64], x: f64) -> Complex64 {
    let n = xs.len();
    let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let s = (x - xs[0]) / h;
    let cell = (s.floor().max(0.0) as usize).min(n - 2);
    let start = cell.saturating_sub(1).min(n - 4);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in start..start + 4 {
        let mut l = 1.0;
        for m in start..start + 4 {
            if m != k {
                l *= (s - m as f64) / (k as f64 - m as f64);
            }
        }
        acc += vals[k] * l;
    }
    acc
}

/// `sin z / z`.
fn sinc(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        let z2 = z * z;
        // Σ (-1)^k z^{2k} / (2k+1)!
        1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0)))
    } else {
        z.sin() / z
    }
}

/// `d/dz (sin z / z)`.
fn sinc_derivative(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        let z2 = z * z;
        // Σ_{k>=1} (-1)^k 2k z^{2k-1} / (2k+1)!
        z * (-1.0 / 3.0 + z2 / 30.0 - z2 * z2 / 840.0 + z2 * z2 * z2 / 45360.0)
    } else {
        (z * z.cos() - z.sin()) / (z * z)
    }
}

/// `(sin z - z cos z) / z³`.
fn parabolic_shape(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        let z2 = z * z;
        1.0 / 3.0 - z2 / 30.0 + z2 * z2 / 840.0 - z2 * z2 * z2 / 45360.0
            + z2 * z2 * z2 * z2 / 3991680.0
    } else {
        (z.sin() - z * z.cos()) / (z * z * z)
    }
}

/// `d/dz [(sin z - z cos z) / z³]`.
fn parabolic_shape_derivative(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        let z2 = z * z;
        z * (-1.0 / 15.0 + z2 / 210.0 - z2 * z2 / 7560.0 + z2 * z2 * z2 / 498960.0)
    } else {
        (z * z * z.sin() - 3.0 * (z.sin() - z * z.cos())) / (z * z * z * z)
    }
}
