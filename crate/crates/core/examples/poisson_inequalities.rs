// Empirical constants of the Poisson field estimates on a seeded bank, and
// why mean-zero data matters.

use kssim::fieldops::{
    ladyzhenskaya_ratio, nonzero_mass_counterexample, poisson_constants, PoissonExponents, SampleBank, SampleRecipe,
};
use kssim::numgrid::PlanarGrid;

pub fn run_example() -> kssim::Result<()> {
    let grid = PlanarGrid::new(16.0, 64)?;
    let bank = SampleBank::new(7, 12, SampleRecipe::default());
    bank.check_support(&grid)?;
    let c = poisson_constants(&bank, &grid, &PoissonExponents::default())?;
    println!("Hdot^1 {:.4}  Hdot^1/2 {:.4}  L2 {:.4}  L4 {:.4}", c.hdot1, c.hdot_sigma, c.l2, c.lp);
    let lady = bank.fields(&grid).iter().map(ladyzhenskaya_ratio).fold(0.0, f64::max);
    println!("Ladyzhenskaya ratio {lady:.4}");

    // A Gaussian with mass: the weighted L2 ratio keeps growing with the box.
    let cx = nonzero_mass_counterexample(8.0, 32, 3.0, 10.0)?;
    println!("nonzero mass: ratio {:.4} -> {:.4} when the box doubles", cx.ratio_l, cx.ratio_2l);
    assert!(c.hdot1 <= 1.0 + 1e-12);
    assert!(cx.growth > 1.0);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
