//! Near an embedded mode of the parabolic barrier of half-width 4 pi: the
//! zero curves nu_a(beta), nu_b(beta), the resonance Re nu0(beta), and the
//! curve beta0(nu) on which the resonance turns real.

use std::f64::consts::PI;

use rbscatter::resonance::{find_total_reflection, find_total_transmission, solve_dispersion_root};
use rbscatter::trapped::{beta0_on_curve, find_candidate_beta, refine_trapped_point};
use rbscatter::{Discretization, PerturbationProfile};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::parabolic(4.0 * PI)?;
    let disc = Discretization::default();
    let eps = 0.01;
    let beta00 = find_candidate_beta(&profile)?[0];
    let point = refine_trapped_point(eps, beta00, &profile, &disc)?;
    println!("beta_tr = {:.10}, nu_tr = {:.10}", point.beta_tr, point.nu_tr);

    println!("\n    beta          nu_a           nu_b       Re nu0        Im nu0");
    for k in [-4, -2, -1, 1, 2, 4] {
        let beta = point.beta_tr + 0.005 * k as f64;
        let nu0 = solve_dispersion_root(eps, beta, &profile, &disc)?;
        let nu_a = find_total_transmission(eps, beta, &profile, &disc)?.unwrap_or(f64::NAN);
        let nu_b = find_total_reflection(eps, beta, &profile, &disc)?;
        println!("{beta:.6}  {nu_a:12.8}  {nu_b:12.8}  {:12.8}  {:.3e}", nu0.re, nu0.im);
    }

    println!("\n     nu       beta0(nu)");
    for k in -2..=2 {
        let nu = point.nu_tr + 0.05 * k as f64;
        println!("{nu:.6}  {:.10}", beta0_on_curve(eps, nu, point.beta_tr, &profile, &disc)?);
    }
    Ok(())
}
