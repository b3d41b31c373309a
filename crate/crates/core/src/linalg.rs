//! Block-banded LU factorization for the truncated modal system.
//!
//! Block `(m, n)` of the system couples modes whose indices differ by at most
//! the profile's mode count `J`, so the matrix is block-banded with half
//! bandwidth `J`. Elimination runs over block rows without pivoting between
//! blocks (the diagonal blocks are `1 - O(ε)`), with partial pivoting inside
//! each diagonal block. No fill occurs outside the band.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square blocks of equal size `b` arranged in `nb` block rows, storing only
/// the band `|i - j| <= bw`.
pub struct BandedBlocks {
    nb: usize,
    bw: usize,
    b: usize,
    blocks: Vec<Option<Mat<Complex64>>>,
}

impl BandedBlocks {
    pub fn new(nb: usize, bw: usize, b: usize) -> Self {
        Self { nb, bw, b, blocks: (0..nb * (2 * bw + 1)).map(|_| None).collect() }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn set(&mut self, i: usize, j: usize, m: Mat<Complex64>) {
        assert_eq!((m.nrows(), m.ncols()), (self.b, self.b));
        let s = self.slot(i, j);
        self.blocks[s] = Some(m);
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Mat<Complex64>> {
        if i.abs_diff(j) > self.bw {
            return None;
        }
        self.blocks[self.slot(i, j)].as_ref()
    }

    fn take(&mut self, i: usize, j: usize) -> Option<Mat<Complex64>> {
        let s = self.slot(i, j);
        self.blocks[s].take()
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn block_count(&self) -> usize {
        self.nb
    }

    /// `y = A x` for a vector stored block-contiguously.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let b = self.b;
        let mut y = vec![Complex64::new(0.0, 0.0); self.nb * b];
        for i in 0..self.nb {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.nb - 1);
            for j in lo..=hi {
                if let Some(m) = self.get(i, j) {
                    for r in 0..b {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for c in 0..b {
                            acc += m[(r, c)] * x[j * b + c];
                        }
                        y[i * b + r] += acc;
                    }
                }
            }
        }
        y
    }

    /// Factorizes in place.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (nb, bw) = (self.nb, self.bw);
        let mut diag = Vec::with_capacity(nb);
        for k in 0..nb {
            let d = self
                .take(k, k)
                .ok_or_else(|| Error::Singular(format!("missing diagonal block {k}")))?;
            let lu = d.partial_piv_lu();
            check_pivots(&lu, k)?;
            let hi = (k + bw).min(nb - 1);
            // U'_kj = D_k^{-1} A_kj
            for j in k + 1..=hi {
                if let Some(a) = self.take(k, j) {
                    let u = lu.solve(&a);
                    let s = self.slot(k, j);
                    self.blocks[s] = Some(u);
                }
            }
            for i in k + 1..=hi {
                let Some(lik) = self.get(i, k).cloned() else { continue };
                for j in k + 1..=hi {
                    let Some(ukj) = self.get(k, j).cloned() else { continue };
                    let s = self.slot(i, j);
                    let target = self.blocks[s].get_or_insert_with(|| Mat::zeros(self.b, self.b));
                    matmul(
                        target.as_mut(),
                        Accum::Add,
                        lik.as_ref(),
                        ukj.as_ref(),
                        Complex64::new(-1.0, 0.0),
                        Par::Seq,
                    );
                }
            }
            diag.push(lu);
        }
        clear_upper_state();
        Ok(BandedLu { nb, bw, b: self.b, diag, off: self.blocks })
    }
}

/// The wide SIMD kernels used by the dense block routines can leave the upper
/// vector register halves dirty; legacy SSE code running afterwards (most of
/// this crate at the default target level) then stalls on every transition.
#[inline]
pub(crate) fn clear_upper_state() {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: guarded by runtime detection of AVX.
            unsafe { std::arch::x86_64::_mm256_zeroupper() }
        }
    }
}

fn check_pivots(lu: &PartialPivLu<Complex64>, k: usize) -> Result<()> {
    let u = lu.U();
    let n = u.nrows();
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let v = u[(i, i)].norm();
        max = max.max(v);
        min = min.min(v);
    }
    if !(min > 1e-14 * max) || !min.is_finite() {
        return Err(Error::Singular(format!(
            "diagonal block {k} is numerically singular (pivot ratio {:e})",
            min / max
        )));
    }
    Ok(())
}

pub struct BandedLu {
    nb: usize,
    bw: usize,
    b: usize,
    diag: Vec<PartialPivLu<Complex64>>,
    /// Strictly lower blocks hold the eliminated `L̃_ik`, strictly upper
    /// blocks hold `U'_kj`.
    off: Vec<Option<Mat<Complex64>>>,
}

impl BandedLu {
    fn off(&self, i: usize, j: usize) -> Option<&Mat<Complex64>> {
        if i.abs_diff(j) > self.bw {
            return None;
        }
        self.off[i * (2 * self.bw + 1) + (j + self.bw - i)].as_ref()
    }

    /// Solves `A X = B` for the columns of `rhs` (`nb * b` rows).
    pub fn solve(&self, rhs: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let b = self.b;
        let ncol = rhs.ncols();
        let mut w: Vec<Mat<Complex64>> = Vec::with_capacity(self.nb);
        for k in 0..self.nb {
            let mut z = rhs.subrows(k * b, b).to_owned();
            for i in k.saturating_sub(self.bw)..k {
                if let Some(l) = self.off(k, i) {
                    matmul(z.as_mut(), Accum::Add, l.as_ref(), w[i].as_ref(), Complex64::new(-1.0, 0.0), Par::Seq);
                }
            }
            w.push(self.diag[k].solve(&z));
        }
        for k in (0..self.nb).rev() {
            let hi = (k + self.bw).min(self.nb - 1);
            for j in k + 1..=hi {
                if let Some(u) = self.off(k, j) {
                    let xj = w[j].clone();
                    matmul(w[k].as_mut(), Accum::Add, u.as_ref(), xj.as_ref(), Complex64::new(-1.0, 0.0), Par::Seq);
                }
            }
        }
        let mut out = Mat::zeros(self.nb * b, ncol);
        for (k, wk) in w.iter().enumerate() {
            out.as_mut().subrows_mut(k * b, b).copy_from(wk);
        }
        clear_upper_state();
        out
    }

    pub fn solve_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.solve(m.as_ref());
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}
