use proptest::prelude::*;
use rbscatter::config::RunConfig;
use rbscatter::resonance::{breit_wigner, fano};
use rbscatter::scattering::solve_scattering;
use rbscatter::{Discretization, Error, PerturbationProfile, SpectralParams};

fn builtin(kind: bool, a: f64) -> PerturbationProfile {
    if kind {
        PerturbationProfile::rectangular(a).unwrap()
    } else {
        PerturbationProfile::parabolic(a).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn symmetric_transforms_are_real_and_even(kind: bool, a in 0.3f64..6.0, xi in -10.0f64..10.0, j in 0i32..=1) {
        let p = builtin(kind, a);
        let plus = p.fourier_transform(j, xi).unwrap();
        let minus = p.fourier_transform(j, -xi).unwrap();
        let scale = p.fourier_transform(0, 0.0).unwrap().re;
        prop_assert!(plus.im.abs() <= 1e-10 * scale);
        prop_assert!((plus - minus).norm() <= 1e-10 * scale);
    }

    #[test]
    fn scattering_is_unitary_and_routes_agree(
        kind: bool,
        a in 0.5f64..3.0,
        eps in 1e-3f64..0.05,
        beta in 0.05f64..0.45,
        frac in 0.01f64..0.95,
    ) {
        let p = builtin(kind, a);
        let nu = frac * (1.0 - 2.0 * beta).sqrt() / eps;
        let params = SpectralParams::new(eps, beta, nu).unwrap();
        match solve_scattering(&params, &p, &Discretization::default()) {
            Ok(sol) => {
                prop_assert!(sol.unitarity_defect() < 1e-8);
                prop_assert!((sol.r - sol.r_closed).norm() < 1e-10);
                prop_assert!((sol.t - sol.t_closed).norm() < 1e-10);
                let f = &sol.functionals;
                prop_assert!((f.q - f.r_plus).norm() < 1e-9);
                // y-even profiles scatter identically at -beta
                let mirrored = solve_scattering(&SpectralParams::new(eps, -beta, nu).unwrap(), &p, &Discretization::default()).unwrap();
                prop_assert!((mirrored.r - sol.r).norm() < 1e-10);
                prop_assert!((mirrored.t - sol.t).norm() < 1e-10);
            }
            Err(Error::NearResonance { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn line_shapes_are_bounded(delta in -1.0f64..1.0, eps in 1e-3f64..0.1, width in 1e-3f64..2.0, q in -3.0f64..3.0) {
        let bw = breit_wigner(delta, eps, width).unwrap();
        prop_assert!((0.0..=1.0).contains(&bw));
        prop_assert!(fano(delta, eps, width, q).unwrap() >= 0.0);
        prop_assert!((fano(0.0, eps, width, q).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((breit_wigner(-delta, eps, width).unwrap() - bw).abs() < 1e-15);
    }

    #[test]
    fn effective_config_reloads(eps in 1e-4f64..0.1, beta in 0.01f64..0.49, nu in 0.0f64..50.0, n in 3usize..12) {
        let cfg = RunConfig::load(None, &[
            format!("epsilon={eps:e}"),
            format!("beta={beta:e}"),
            format!("nu={nu:e}"),
            format!("discretization.n_modes={n}"),
        ]).unwrap();
        prop_assert_eq!(cfg.epsilon, eps);
        let text = rbscatter::config::to_json_string(&cfg.effective());
        let back = RunConfig::from_value(serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
