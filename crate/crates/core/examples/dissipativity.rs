// Fit the localization constant of the g block and check the split form.

use kssim::fieldops::{SampleBank, SampleRecipe};
use kssim::linops::{fit_dissipativity, quad_form_bsplit, LinearizedSystem};
use kssim::numgrid::{ModelParams, PlanarGrid};

pub fn run_example() -> kssim::Result<()> {
    let grid = PlanarGrid::new(16.0, 64)?;
    let sys = LinearizedSystem::new(ModelParams::default(), &grid)?;
    let fit = fit_dissipativity(&SampleBank::new(1, 10, SampleRecipe::default()), &sys, 10.0)?;
    println!("C0 = {:.3} at rho0 = {}", fit.c0, fit.rho0);

    let split = sys.with_splitting(2.0 * fit.c0, fit.rho0)?;
    let mut held = 0;
    let test = SampleBank::new(3, 10, SampleRecipe::default());
    for g in test.fields(&grid) {
        let f = quad_form_bsplit(&g, &split, Some(&fit))?;
        held += f.holds as usize;
    }
    println!("split form holds on {held}/10 fresh samples");
    assert_eq!(held, 10);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
