//! The real zeros of R and T next to the resonance.

use rbscatter::resonance::{analyze, zero_seeds};
use rbscatter::scattering::solve_scattering_guarded;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::parabolic(2.0)?;
    let disc = Discretization::default();
    let beta = 0.25;
    for eps in [0.005, 0.01, 0.02] {
        let data = analyze(eps, beta, &profile, &disc)?;
        let (seed_a, seed_b) = zero_seeds(&data.coeffs);
        println!("eps = {eps}: Re nu0 = {:.10}", data.nu0.re);
        if let (Some(nu_a), Some(seed)) = (data.nu_a, seed_a) {
            let sol = solve_scattering_guarded(&SpectralParams::new(eps, beta, nu_a)?, &profile, &disc, 0.0)?;
            println!("  nu_a = {nu_a:.10} (leading order {seed:.10}), |R| = {:.2e}", sol.r.norm());
        }
        if let Some(nu_b) = data.nu_b {
            let sol = solve_scattering_guarded(&SpectralParams::new(eps, beta, nu_b)?, &profile, &disc, 0.0)?;
            println!("  nu_b = {nu_b:.10} (leading order {seed_b:.10}), |T| = {:.2e}", sol.t.norm());
        }
    }
    Ok(())
}
