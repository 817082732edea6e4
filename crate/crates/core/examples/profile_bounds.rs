// Gaussian-weighted uniform bounds and the sandwich between the steady
// profile and the limit profile, plus a small frontier scan.

use kssim::bounds::{check_profile_sandwich, check_uniform_bounds, frontier_is_monotone, sandwich_frontier};
use kssim::numgrid::{ModelParams, RadialGrid};
use kssim::profiles::{closed_form_limit, solve_profile};

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::with_mu_eps(1.0, 0.01)?;
    let grid = RadialGrid::new(RadialGrid::decay_radius(p.mu, 0.9), 800)?;
    let prof = solve_profile(&p, &grid)?;

    let uniform = check_uniform_bounds(&prof, 0.9)?;
    for c in &uniform.checks {
        println!("{:<28} {} (margin {:.2e})", c.id, if c.pass { "holds" } else { "fails" }, c.worst_margin);
    }
    let sandwich = check_profile_sandwich(&prof, &closed_form_limit(&grid), 0.95)?;
    println!("sandwich at alpha 0.95: {}", sandwich.pass);

    // Smaller eps and smaller alpha make the chains easier to satisfy.
    let frontier = sandwich_frontier(p.mu, &[0.04, 0.01], &[0.8, 0.95], &grid)?;
    for f in &frontier {
        println!("eps {:<5} alpha {:<5} {}", f.eps, f.alpha, f.pass);
    }
    assert!(uniform.pass);
    assert!(frontier_is_monotone(&frontier));
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
