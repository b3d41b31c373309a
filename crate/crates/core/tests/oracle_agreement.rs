//! The integral-equation solver against the finite-difference oracle and
//! the first-order approximation.

use num_complex::Complex64;
use rbscatter::oracle::{born_rt, compare, direct_bvp_rt, richardson_rt, BvpConfig};
use rbscatter::scattering::solve_scattering;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn skewed() -> PerturbationProfile {
    // even in y only through the cos term; the sin term breaks both symmetries
    PerturbationProfile::sampled_from_fn(2.0, 401, 16, |x, y| {
        let s = (1.0 - x * x / 4.0).max(0.0);
        s * s * (1.0 + 0.5 * y.cos() + 0.4 * (x / 2.0 + 0.3) * y.sin())
    })
    .unwrap()
}

#[test]
fn agrees_on_both_sides_of_beta_zero() {
    let p = skewed();
    assert!(!p.is_symmetric());
    for beta in [0.2, -0.2, 0.35, -0.35] {
        for nu in [0.8, 4.0] {
            let params = SpectralParams::new(0.02, beta, nu).unwrap();
            let sol = solve_scattering(&params, &p, &Discretization::default()).unwrap();
            let (_, _, r, t) = richardson_rt(&params, &p, &BvpConfig::default()).unwrap();
            assert!((sol.r - r).norm() < 1e-6, "beta {beta} nu {nu}: {} vs {r}", sol.r);
            assert!((sol.t - t).norm() < 1e-6, "beta {beta} nu {nu}: {} vs {t}", sol.t);
        }
    }
}

#[test]
fn oracle_error_is_second_order() {
    let p = PerturbationProfile::rectangular(1.5).unwrap();
    let params = SpectralParams::new(0.05, 0.3, 2.0).unwrap();
    let exact = solve_scattering(&params, &p, &Discretization::default()).unwrap().r;
    let coarse = direct_bvp_rt(&params, &p, &BvpConfig::default()).unwrap();
    let mut errs = Vec::new();
    for k in 0..3 {
        let cfg = BvpConfig { spacing: Some(coarse.spacing / f64::powi(2.0, k)), ..Default::default() };
        errs.push((direct_bvp_rt(&params, &p, &cfg).unwrap().r - exact).norm());
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order} from {errs:?}");
    }
}

#[test]
fn negative_control_is_reported() {
    let p = PerturbationProfile::parabolic(2.0).unwrap();
    let nus = [0.5, 1.5, 3.0];
    let mut main = Vec::new();
    let mut coarse = Vec::new();
    for nu in nus {
        let params = SpectralParams::new(0.05, 0.25, nu).unwrap();
        main.push(solve_scattering(&params, &p, &Discretization::default()).unwrap().r);
        let cfg = BvpConfig { spacing: Some(0.25), ..Default::default() };
        coarse.push(direct_bvp_rt(&params, &p, &cfg).unwrap().r);
    }
    let same = compare(&main, &main, 1e-12).unwrap();
    assert!(same.pass && same.max == 0.0 && same.rms == 0.0);
    let bad = compare(&main, &coarse, 1e-6).unwrap();
    assert!(!bad.pass, "coarse oracle passed with max {}", bad.max);
    assert!(compare(&main, &coarse[..2], 1.0).is_err());
}

#[test]
fn born_error_is_second_order_away_from_resonance() {
    let p = PerturbationProfile::parabolic(2.0).unwrap();
    let eps = [1e-3, 2e-3, 4e-3];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let params = SpectralParams::new(e, 0.25, 3.0).unwrap();
            let full = solve_scattering(&params, &p, &Discretization::default()).unwrap();
            let born = born_rt(&params, &p).unwrap();
            (full.r - born.r).norm().max((full.t - born.t).norm())
        })
        .collect();
    let slope = (errs[2] / errs[0]).ln() / (eps[2] / eps[0]).ln();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope} from {errs:?}");
    // a point close to the resonance is refused
    let c = 0.75;
    assert!(born_rt(&SpectralParams::new(0.01, 0.25, c).unwrap(), &p).is_err());
    let zero = born_rt(&SpectralParams::new(0.0, 0.25, 3.0).unwrap(), &p);
    if let Ok(b) = zero {
        assert_eq!(b.r, Complex64::new(0.0, 0.0));
    }
}
