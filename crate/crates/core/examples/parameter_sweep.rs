// A small sweep through the command layer, written to a temporary directory.

use kssim::ksctl::commands::cmd_sweep;
use kssim::ksctl::RunConfig;

pub fn run_example() -> kssim::Result<()> {
    let dir = std::env::temp_dir().join(format!("kssim-sweep-{}", std::process::id()));
    let mut cfg = RunConfig { output_dir: dir.clone(), ..RunConfig::default() };
    cfg.grid.radial_cells = 600;
    cfg.sweep.mu = vec![0.5, 1.0];
    cfg.sweep.eps = vec![0.01, 0.02];
    cfg.sweep.modes = vec![0, 1];
    cfg.sweep.mode_cells = 200;
    cfg.sweep.evolve = false;
    let rep = cmd_sweep(&cfg)?;
    print!("{}", std::fs::read_to_string(dir.join("sweep.csv"))?);
    println!("all points ok: {}", rep.pass);
    std::fs::remove_dir_all(&dir)?;
    assert!(rep.pass);
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
