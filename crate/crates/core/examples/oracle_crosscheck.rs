//! The integral-equation solver against the finite-difference oracle, and
//! the oracle's own view of a trapped mode.

use std::f64::consts::PI;

use rbscatter::oracle::{born_rt, richardson_rt, smallest_singular_value, BvpConfig};
use rbscatter::scattering::solve_scattering;
use rbscatter::trapped::refine_trapped_point;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::rectangular(2.0)?;
    let disc = Discretization::default();
    let cfg = BvpConfig::default();

    println!("   nu      |R - R_fd|  |R - R_rich|  |R - R_born|");
    for nu in [0.5, 2.0, 8.0, 30.0] {
        let params = SpectralParams::new(0.01, 0.25, nu)?;
        let sol = solve_scattering(&params, &profile, &disc)?;
        let (coarse, _, r, _) = richardson_rt(&params, &profile, &cfg)?;
        let born = born_rt(&params, &profile).map(|b| (b.r - sol.r).norm()).unwrap_or(f64::NAN);
        println!("{nu:6.1}  {:10.2e}  {:12.2e}  {born:12.2e}", (sol.r - coarse.r).norm(), (sol.r - r).norm());
    }

    let trap = PerturbationProfile::rectangular(4.0 * PI)?;
    let point = refine_trapped_point(0.01, 7.0 / 32.0, &trap, &disc)?;
    println!("\nsmallest singular value of the unforced oracle system near beta_tr = {:.8}:", point.beta_tr);
    for off in [-0.005, 0.0, 0.005] {
        let params = SpectralParams::new(0.01, point.beta_tr + off, point.nu_tr)?;
        println!("  beta_tr {off:+.3}: {:.3e}", smallest_singular_value(&params, &trap, &cfg, 30)?);
    }
    Ok(())
}
