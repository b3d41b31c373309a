//! Gauss-Legendre rules and Lagrange interpolation on a single panel.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[lo, hi]`.
pub fn mapped_rule(base: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let nodes = base.0.iter().map(|t| mid + half * t).collect();
    let weights = base.1.iter().map(|w| half * w).collect();
    (nodes, weights)
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    w
}

/// Values of all Lagrange basis polynomials of `nodes` at `t`.
pub fn lagrange_basis(nodes: &[f64], bary: &[f64], t: f64) -> Vec<f64> {
    if let Some(k) = nodes.iter().position(|&x| x == t) {
        let mut out = vec![0.0; nodes.len()];
        out[k] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes
        .iter()
        .zip(bary)
        .map(|(&x, &w)| w / (t - x))
        .collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 17] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_are_symmetric() {
        let (x, w) = gauss_legendre(16);
        for i in 0..16 {
            assert_eq!(x[i], -x[15 - i]);
            assert_eq!(w[i], w[15 - i]);
        }
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let (x, _) = gauss_legendre(8);
        let b = barycentric_weights(&x);
        let vals: Vec<f64> = x.iter().map(|t| 3.0 * t.powi(7) - t * t + 0.5).collect();
        for t in [-0.93, -0.2, 0.0, 0.41, 1.0] {
            let l = lagrange_basis(&x, &b, t);
            let p: f64 = l.iter().zip(&vals).map(|(a, b)| a * b).sum();
            assert!((p - (3.0 * t.powi(7) - t * t + 0.5)).abs() < 1e-12);
        }
    }
}
