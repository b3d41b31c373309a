//! Reflection and transmission at one parameter point, both routes to the
//! coefficients, and a look at the field.

use rbscatter::scattering::solve_scattering;
use rbscatter::{Discretization, PerturbationProfile, SpectralParams};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::parabolic(2.0)?;
    let disc = Discretization::default();
    let params = SpectralParams::new(0.01, 0.25, 3.0)?;
    let sol = solve_scattering(&params, &profile, &disc)?;

    println!("eps = {}, beta = {}, nu = {}", params.epsilon, params.beta, params.nu.re);
    println!("k0 = {:.6}, gamma = {:.6}", params.k0().re, params.gamma().re);
    println!("R = {:.12}  (closed form {:.12})", sol.r, sol.r_closed);
    println!("T = {:.12}  (closed form {:.12})", sol.t, sol.t_closed);
    println!("||R|^2 + |T|^2 - 1| = {:.3e}", sol.unitarity_defect());

    // the same point at -beta: the field is mirrored, the coefficients agree
    let mirrored = solve_scattering(&SpectralParams::new(0.01, -0.25, 3.0)?, &profile, &disc)?;
    println!("R(-beta) = {:.12}", mirrored.r);

    println!("\n     x      |Psi(x, 0)|");
    for k in -4..=4 {
        let x = 2.0 * k as f64;
        println!("{x:8.2}  {:.8}", sol.evaluate_field(x, 0.0).norm());
    }
    println!("far-field defect at |x| = 30: {:.3e}", sol.far_field_defect(30.0, 64));
    Ok(())
}
