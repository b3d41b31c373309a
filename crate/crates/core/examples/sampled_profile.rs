//! A profile given by samples: the parabolic barrier tabulated on a
//! lattice, then a smooth bump that has no closed form.

use rbscatter::scattering::solve_scattering;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn main() -> rbscatter::Result<()> {
    let disc = Discretization::default();
    let params = SpectralParams::new(0.02, 0.2, 2.0)?;

    let exact = PerturbationProfile::parabolic(2.0)?;
    let sampled = PerturbationProfile::sampled_from_fn(2.0, 401, 16, |x, y| (1.0 - x * x / 4.0).max(0.0) * (1.0 + y.cos()))?;
    for xi in [0.0, 0.5, 1.5] {
        let a = exact.fourier_transform(0, xi)?.re;
        let b = sampled.fourier_transform(0, xi)?.re;
        println!("f0~({xi}) closed form {a:.10}, sampled {b:.10}");
    }
    let r_exact = solve_scattering(&params, &exact, &disc)?.r;
    let r_sampled = solve_scattering(&params, &sampled, &disc)?.r;
    println!("R closed form {r_exact:.10}\nR sampled     {r_sampled:.10}");

    let bump = PerturbationProfile::sampled_from_fn(3.0, 301, 32, |x, y| {
        let s = 1.0 - x * x / 9.0;
        if s > 0.0 { s * s * (1.0 + 0.5 * y.cos() + 0.25 * (2.0 * y).cos()) } else { 0.0 }
    })?;
    let report = bump.check_admissibility();
    println!("\nbump: modes |j| <= {}, volume {:.6}, symmetric {}", bump.mode_count(), report.volume, report.symmetric);
    let sol = solve_scattering(&params, &bump, &disc)?;
    println!("R = {:.10}, T = {:.10}, unitarity defect {:.1e}", sol.r, sol.t, sol.unitarity_defect());
    Ok(())
}
