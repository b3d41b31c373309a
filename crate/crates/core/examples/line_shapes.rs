//! |R|^2 near the resonance against the Breit-Wigner and Fano forms.

use rbscatter::resonance::{breit_wigner, fano, perturbative_coeffs, solve_dispersion_root};
use rbscatter::scattering::solve_scattering_guarded;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::parabolic(2.0)?;
    let disc = Discretization::default();
    let (eps, beta) = (0.01, 0.25);
    let c = perturbative_coeffs(beta, &profile, &disc)?;
    let nu0 = solve_dispersion_root(eps, beta, &profile, &disc)?;
    println!("a1 = {:.10}, Gamma = {:.10}, q = {:.10}", c.a1, c.width, c.q);
    println!("nu0 = {nu0:.10}");

    println!("\n   delta/(eps Gamma)      |R|^2        BW       Fano");
    let scale = eps * c.width;
    for k in -10..=10 {
        let delta = 0.5 * k as f64 * scale;
        let params = SpectralParams::new(eps, beta, nu0.re + delta)?;
        // the peak is narrower than the default guard band
        let sol = solve_scattering_guarded(&params, &profile, &disc, 0.0)?;
        println!(
            "{:16.2}  {:10.6}  {:8.6}  {:8.6}",
            delta / scale,
            sol.r.norm_sqr(),
            breit_wigner(delta, eps, c.width)?,
            fano(delta, eps, c.width, c.q)?
        );
    }

    // the two model shapes alone, eps = 0.1, q = -1, Gamma = 1
    println!("\n   delta      BW     Fano");
    for k in -8..=8 {
        let delta = 0.025 * k as f64;
        println!("{delta:8.3}  {:.4}  {:.4}", breit_wigner(delta, 0.1, 1.0)?, fano(delta, 0.1, 1.0, -1.0)?);
    }
    Ok(())
}
