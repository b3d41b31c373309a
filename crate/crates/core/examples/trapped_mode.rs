//! Embedded trapped modes of the rectangular barrier of half-width 4 pi.
//! Pass a path to also write the mode profile as CSV.

use std::f64::consts::PI;

use rbscatter::trapped::{build_trapped_mode, find_candidate_beta, leading_order_point, refine_trapped_point};
use rbscatter::{Discretization, PerturbationProfile};

fn main() -> rbscatter::Result<()> {
    let profile = PerturbationProfile::rectangular(4.0 * PI)?;
    let disc = Discretization::default();
    let eps = 0.01;
    let candidates = find_candidate_beta(&profile)?;
    println!("beta00 candidates: {candidates:.12?}");

    let beta00 = *candidates.last().expect("rectangular(4 pi) has candidates");
    let (b_lo, nu_lo) = leading_order_point(beta00, &profile)?;
    let point = refine_trapped_point(eps, beta00, &profile, &disc)?;
    println!("leading order: beta = {b_lo:.10}, nu = {nu_lo:.10}");
    println!("refined:       beta = {:.10}, nu = {:.10} ({} Newton steps)", point.beta_tr, point.nu_tr, point.iterations);
    println!("|Im l| = {:.2e}, |Im Q| = {:.2e}", point.ell.im.abs(), point.q_value.im.abs());
    println!("alpha = {:.4}, q = {:.3e}", point.alpha, point.q);

    let mode = build_trapped_mode(&point, &profile, &disc)?;
    println!("decay residual {:.2e}, Helmholtz residual {:.2e}", mode.decay_residual, mode.helmholtz_residual);
    println!("\n     x     |Psi_0|     |Psi_1|");
    for k in 0..=8 {
        let x = 2.5 * k as f64;
        println!("{x:6.1}  {:.3e}  {:.3e}", mode.mode_field(0, x).norm(), mode.mode_field(1, x).norm());
    }

    if let Some(path) = std::env::args().nth(1) {
        let xs: Vec<f64> = (0..=400).map(|k| -20.0 + 0.1 * k as f64).collect();
        mode.write_csv(std::fs::File::create(&path)?, &xs)?;
        println!("wrote {path}");
    }
    Ok(())
}
