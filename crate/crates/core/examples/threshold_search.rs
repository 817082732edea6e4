// Bisect the amplitude at which a positive bump stops decaying.

use kssim::dynamics::{positive_bump, threshold_search, EvolveConfig};
use kssim::linops::LinearizedSystem;
use kssim::numgrid::{ModelParams, PlanarGrid};

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::default();
    let grid = PlanarGrid::new(8.0, 32)?;
    let sys = LinearizedSystem::new(p, &grid)?;
    let bump = positive_bump(&sys, 0.5)?;
    let cfg = EvolveConfig { t_end: 1.0, record_every: 25, ..EvolveConfig::default() };
    let est = threshold_search(&sys, &cfg, &bump, 1e-3, 100.0)?;
    for (a, o) in &est.runs {
        println!("amplitude {a:>10.4e}: {o:?}");
    }
    match est.upper {
        Some(u) => println!("threshold in [{:.3e}, {u:.3e}]", est.lower),
        None => println!("no growth up to {:.3e}", est.lower),
    }
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
