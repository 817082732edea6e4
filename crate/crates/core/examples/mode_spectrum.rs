// Eigenvalues of the linearized operator restricted to angular modes.

use kssim::linops::{assemble_mode_operator, default_mode_radius, parse_spectra_csv, spectra_csv, spectrum};
use kssim::numgrid::ModelParams;

pub fn run_example() -> kssim::Result<()> {
    let p = ModelParams::default();
    let r = default_mode_radius(p.mu);
    let mut reports = Vec::new();
    for m in 0..=2i64 {
        // Mode 0 carries the mass eigenvalue at zero, deflated away here.
        let rep = spectrum(&assemble_mode_operator(m, &p, r, 300, m == 0)?)?;
        println!("m = {m}: max Re {:+.5}, gap {:.5}", rep.max_real(), rep.gap);
        reports.push(rep);
    }
    let rows = parse_spectra_csv(&spectra_csv(&reports))?;
    println!("{} eigenvalues written", rows.len());
    assert!(reports.iter().all(|r| r.gap > 0.9 * p.mu));
    Ok(())
}

fn main() -> kssim::Result<()> {
    run_example()
}
