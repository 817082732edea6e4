// Decay rate of the linearized flow compared with the spectral gap.

use kssim::dynamics::{initial_state, linear_semigroup_decay};
use kssim::linops::{assemble_mode_operator, default_mode_radius, spectrum, LinearizedSystem};
use kssim::numgrid::{ModelParams, PlanarGrid};

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::default();
    let grid = PlanarGrid::new(16.0, 128)?;
    let sys = LinearizedSystem::new(p, &grid)?;
    let st = initial_state(&grid, &p, 1, 1e-3)?;
    let fit = linear_semigroup_decay(&sys, &st, 4.0, 2e-3, false)?;
    let r = default_mode_radius(p.mu);
    let gap = (0..=2i64)
        .map(|m| spectrum(&assemble_mode_operator(m, &p, r, 300, m == 0)?).map(|s| s.gap))
        .collect::<kssim::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    println!("L11 decay rate {:.4} on [{}, {}] (residual {:.3}), spectral gap {gap:.4}", fit.rate, fit.t_a, fit.t_b, fit.residual);
    assert!(fit.valid && fit.rate > 0.5 * p.mu);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
