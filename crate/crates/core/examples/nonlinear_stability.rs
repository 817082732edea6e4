// Small data of the full nonlinear system decays and keeps its mass.

use kssim::dynamics::{evolve, fit_decay, initial_state, EvolveConfig, Scheme};
use kssim::linops::LinearizedSystem;
use kssim::numgrid::{ModelParams, PlanarGrid};

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::default();
    let grid = PlanarGrid::new(16.0, 64)?;
    let sys = LinearizedSystem::new(p, &grid)?;
    let st = initial_state(&grid, &p, 2, 1e-3)?;
    let cfg = EvolveConfig { t_end: 3.0, scheme: Scheme::ImexBdf2, ..EvolveConfig::default() };
    let traj = evolve(&st, &sys, &cfg)?;
    let fit = fit_decay(&traj, None)?;
    let x0 = traj.norms[0].x_norm;
    println!("X: {x0:.3e} -> {:.3e}, sup/X0 {:.3}", traj.norms.last().unwrap().x_norm, traj.sup_x_norm() / x0);
    println!("rate {:.4}, mass defect {:.1e}", fit.rate, traj.max_mass_defect());

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    println!("{} trajectory rows", String::from_utf8_lossy(&csv).lines().count() - 2);
    assert!(traj.stable && fit.rate > 0.0);
    assert!(traj.max_mass_defect() <= 1e-10);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
