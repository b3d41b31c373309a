//! The complex resonance nu0(eps) against its expansion a1 + eps a2.

use rbscatter::resonance::{perturbative_coeffs, solve_dispersion_root};
use rbscatter::{Discretization, PerturbationProfile};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::parabolic(2.0)?;
    let disc = Discretization::default();
    let beta = 0.25;
    let c = perturbative_coeffs(beta, &profile, &disc)?;
    println!("a1 = {:.12}", c.a1);
    println!("a2 = {:.12}  (closed-form Im a2 = {:.12})", c.a2, c.im_a2);

    println!("\n     eps          Re nu0            Im nu0       |nu0 - a1 - eps a2| / eps^2");
    for eps in [1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2] {
        let nu0 = solve_dispersion_root(eps, beta, &profile, &disc)?;
        let rest = (nu0 - c.a1 - eps * c.a2).norm() / (eps * eps);
        println!("{eps:8.4}  {:16.12}  {:16.12e}  {rest:10.4}", nu0.re, nu0.im);
    }
    Ok(())
}
