// Solve the steady profile at one parameter point and compare it with the
// closed-form limit profile.

use kssim::numgrid::{ModelParams, RadialGrid};
use kssim::profiles::{closed_form_limit, profile_mass, quartic_coefficient, quartic_coefficient_expected, solve_profile};

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::with_mu_eps(1.0, 0.02)?;
    let grid = RadialGrid::new(RadialGrid::decay_radius(p.mu, 0.9), 1000)?;
    let prof = solve_profile(&p, &grid)?;
    let limit = closed_form_limit(&grid);
    println!("Q(0) = {}, residual {:.2e} after {} iterations", prof.q[0], prof.residual, prof.iterations);
    println!("mass {:.6} (limit profile {:.6})", profile_mass(&prof), profile_mass(&limit));
    let a = quartic_coefficient(&prof, 0.1)?;
    println!("quartic coefficient {a:.5e}, expected {:.5e}", quartic_coefficient_expected(p.mu, p.eps));
    assert_eq!(prof.q[0], 8.0);
    assert!(profile_mass(&prof) < profile_mass(&limit));
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
