// The energy identities of the w block hold to rounding error.

use kssim::fieldops::{SampleBank, SampleRecipe};
use kssim::linops::{quad_form_l22_h1, quad_form_l22_hs, LinearizedSystem};
use kssim::numgrid::{ModelParams, PlanarGrid};

pub fn run_example() -> kssim::Result<()> {
    let grid = PlanarGrid::new(16.0, 128)?;
    let sys = LinearizedSystem::new(ModelParams::with_mu_eps(1.0, 0.05)?, &grid)?;
    let bank = SampleBank::new(4, 5, SampleRecipe { mean_zero: false, ..SampleRecipe::default() });
    let mut worst: f64 = 0.0;
    for w in bank.fields(&grid) {
        let h1 = quad_form_l22_h1(&w, &sys)?;
        let hs = quad_form_l22_hs(&w, &sys, 0.5, 0.25)?;
        println!("H1: {:+.6e} vs {:+.6e}   Hs local defect {:.1e}", h1.lhs, h1.rhs, hs.local_identity.relative_defect());
        worst = worst.max(h1.relative_defect()).max(hs.local_identity.relative_defect());
    }
    println!("worst relative defect {worst:.2e}");
    assert!(worst <= 1e-6);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
