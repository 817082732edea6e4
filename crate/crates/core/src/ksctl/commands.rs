//! The five subcommands. Each writes its files under the output directory,
//! finishes with `manifest.json` and reports whether its checks passed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acceptance::{run_criteria, CriterionResult};
use super::config::RunConfig;
use super::persist::{write_atomic, write_json, Manifest};
use crate::bounds::{check_profile_sandwich, check_uniform_bounds, BoundReport};
use crate::dynamics::{classify, evolve, fit_decay, initial_state, DecayFit, EvolveConfig, Outcome};
use crate::linops::{
    assemble_mode_operator, default_mode_radius, spectra_csv, spectrum, spectrum_refinement, LinearizedSystem,
    SpectrumReport,
};
use crate::numgrid::{ModelParams, PlanarGrid};
use crate::profiles::{closed_form_limit, profile_mass, solve_profile};
use crate::{Error, Result};

pub const SWEEP_CSV_SCHEMA: &str = "kssim-sweep v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CommandReport {
    pub pass: bool,
    /// Written files relative to the output directory.
    pub files: Vec<String>,
    pub summary: Vec<String>,
    /// Names of the checks that failed.
    pub failed: Vec<String>,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn text(&mut self, name: &str, s: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), s.as_bytes())?;
        self.files.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        write_json(&self.dir.join(name), v)?;
        self.files.push(name.into());
        Ok(())
    }

    fn finish(self, command: &str, cfg: &RunConfig, failed: Vec<String>, t0: Instant, summary: Vec<String>) -> Result<CommandReport> {
        let pass = failed.is_empty();
        let m = Manifest::new(command, cfg, self.files.clone(), pass, t0.elapsed().as_secs_f64());
        write_json(&self.dir.join("manifest.json"), &m)?;
        Ok(CommandReport { pass, files: self.files, summary, failed })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileSummary {
    params: ModelParams,
    q0: f64,
    mass: f64,
    residual: f64,
    iterations: usize,
    damped: bool,
    uniform_bounds: BoundReport,
    sandwich: Option<BoundReport>,
}

pub fn cmd_profile(cfg: &RunConfig) -> Result<CommandReport> {
    let t0 = Instant::now();
    let p = cfg.params()?;
    let grid = cfg.grid.radial_grid(&p)?;
    let prof = solve_profile(&p, &grid)?;
    let uniform = check_uniform_bounds(&prof, cfg.profile.theta)?;
    let sandwich = if cfg.profile.sandwich {
        Some(check_profile_sandwich(&prof, &closed_form_limit(&grid), cfg.profile.alpha)?)
    } else {
        None
    };
    let failed: Vec<String> = uniform
        .checks
        .iter()
        .chain(sandwich.iter().flat_map(|s| s.checks.iter()))
        .filter(|c| !c.pass)
        .map(|c| c.id.clone())
        .collect();
    let summary = ProfileSummary {
        params: p,
        q0: prof.q[0],
        mass: profile_mass(&prof),
        residual: prof.residual,
        iterations: prof.iterations,
        damped: prof.damped,
        uniform_bounds: uniform,
        sandwich,
    };
    let mut out = Outputs::new(&cfg.output_dir);
    out.text("profile.csv", &prof.to_csv())?;
    out.json("reports/profile_bounds.json", &summary)?;
    let lines = vec![format!(
        "Q(0) = {}, mass = {:.10}, residual = {:.2e} after {} iterations",
        summary.q0, summary.mass, summary.residual, summary.iterations
    )];
    out.finish("profile", cfg, failed, t0, lines)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModeSummary {
    m: usize,
    deflated: bool,
    cells: usize,
    r_max: f64,
    max_real: f64,
    gap: f64,
    refinement_shift: Option<f64>,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<CommandReport> {
    let t0 = Instant::now();
    let p = cfg.params()?;
    let sc = &cfg.spectrum;
    if sc.modes.is_empty() {
        return Err(Error::Config("no modes requested".into()));
    }
    let r = sc.r_max.unwrap_or_else(|| default_mode_radius(p.mu));
    let mut reports: Vec<SpectrumReport> = Vec::new();
    let mut modes = Vec::new();
    for &m in &sc.modes {
        let (rep, shift) = if sc.refine {
            let rc = spectrum_refinement(m as i64, &p, r, sc.cells.div_ceil(2), m == 0, -5.0 * p.mu)?;
            (rc.fine, Some(rc.max_shift))
        } else {
            (spectrum(&assemble_mode_operator(m as i64, &p, r, sc.cells, m == 0)?)?, None)
        };
        modes.push(ModeSummary {
            m,
            deflated: rep.deflated,
            cells: rep.cells,
            r_max: rep.r_max,
            max_real: rep.max_real(),
            gap: rep.gap,
            refinement_shift: shift,
        });
        reports.push(rep);
    }
    let failed = modes.iter().filter(|s| s.gap < 0.9 * p.mu).map(|s| format!("spectral gap of mode {}", s.m)).collect();
    let mut out = Outputs::new(&cfg.output_dir);
    out.text("spectra.csv", &spectra_csv(&reports))?;
    out.json("reports/spectrum.json", &modes)?;
    let lines = modes.iter().map(|s| format!("m = {}: gap {:.6} (max Re {:.6})", s.m, s.gap, s.max_real)).collect();
    out.finish("spectrum", cfg, failed, t0, lines)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EvolveSummary {
    params: ModelParams,
    seed: u64,
    half_width: f64,
    n: usize,
    evolve: EvolveConfig,
    stable: bool,
    blowup_time: Option<f64>,
    x_norm_initial: f64,
    sup_x_ratio: f64,
    y_l2_time: f64,
    max_mass_defect: f64,
    max_boundary_fraction: f64,
    fit: Option<DecayFit>,
    fit_error: Option<String>,
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<CommandReport> {
    let t0 = Instant::now();
    let p = cfg.params()?;
    let l = cfg.grid.half_width(&p);
    let grid = PlanarGrid::new(l, cfg.grid.n)?;
    let sys = LinearizedSystem::new(p, &grid)?;
    let ec = cfg.evolve.config(&p);
    let st = initial_state(&grid, &p, cfg.seed, cfg.evolve.amplitude)?;
    let traj = evolve(&st, &sys, &ec)?;
    let (fit, fit_error) = match fit_decay(&traj, None) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let x0 = traj.norms[0].x_norm;
    let summary = EvolveSummary {
        params: p,
        seed: cfg.seed,
        half_width: l,
        n: cfg.grid.n,
        evolve: ec,
        stable: traj.stable,
        blowup_time: traj.blowup_time,
        x_norm_initial: x0,
        sup_x_ratio: traj.sup_x_norm() / x0,
        y_l2_time: traj.y_l2_time(),
        max_mass_defect: traj.max_mass_defect(),
        max_boundary_fraction: traj.boundary_fraction.iter().cloned().fold(0.0, f64::max),
        fit,
        fit_error,
    };
    let mut failed = Vec::new();
    let outcome = classify(&traj);
    if outcome != Outcome::Decays {
        failed.push(format!("decay ({outcome:?})").to_lowercase());
    }
    if !fit.is_some_and(|f| f.valid) {
        failed.push("decay fit".to_string());
    }
    let mut out = Outputs::new(&cfg.output_dir);
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    out.text("trajectory.csv", std::str::from_utf8(&csv).expect("csv is utf-8"))?;
    out.json("reports/decay_fit.json", &summary)?;
    let lines = vec![match fit {
        Some(f) => format!("decay rate {:.4} on [{}, {}], residual {:.3}, sup X / X0 {:.3}", f.rate, f.t_a, f.t_b, f.residual, summary.sup_x_ratio),
        None => format!("no decay fit: {}", summary.fit_error.as_deref().unwrap_or("")),
    }];
    out.finish("evolve", cfg, failed, t0, lines)
}

pub fn cmd_check(cfg: &RunConfig) -> Result<CommandReport> {
    let t0 = Instant::now();
    let results: Vec<CriterionResult> = run_criteria(&cfg.check.criteria);
    if results.is_empty() {
        return Err(Error::Config(format!("no criterion matches {:?}", cfg.check.criteria)));
    }
    let failed = results.iter().filter(|r| !r.pass).map(|r| format!("criterion {}", r.id)).collect();
    let mut out = Outputs::new(&cfg.output_dir);
    out.json("reports/acceptance.json", &results)?;
    let lines = results.iter().map(|r| r.line()).collect();
    out.finish("check", cfg, failed, t0, lines)
}

/// One lattice point of a sweep. Failed points keep their error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mu: f64,
    pub eps: f64,
    pub k: f64,
    pub s: f64,
    pub mass: Option<f64>,
    /// Sandwich chains at the configured `alpha`.
    pub sandwich_pass: Option<bool>,
    pub gaps: Vec<(usize, f64)>,
    pub decay_rate: Option<f64>,
    pub outcome: Option<Outcome>,
    pub status: String,
}

fn sweep_point(cfg: &RunConfig, mu: f64, eps: f64, k: f64, s: f64) -> SweepResult {
    let mut row = SweepResult { mu, eps, k, s, mass: None, sandwich_pass: None, gaps: Vec::new(), decay_rate: None, outcome: None, status: "ok".into() };
    let res = (|| -> Result<()> {
        let p = ModelParams::new(mu, eps, k, s, cfg.model.lambda.min(0.5 * mu * (1.0 - s)))?;
        let rg = cfg.grid.radial_grid(&p)?;
        let prof = solve_profile(&p, &rg)?;
        row.mass = Some(profile_mass(&prof));
        row.sandwich_pass = Some(check_profile_sandwich(&prof, &closed_form_limit(&rg), cfg.profile.alpha)?.pass);
        let r = default_mode_radius(mu);
        for &m in &cfg.sweep.modes {
            let rep = spectrum(&assemble_mode_operator(m as i64, &p, r, cfg.sweep.mode_cells, m == 0)?)?;
            row.gaps.push((m, rep.gap));
        }
        if cfg.sweep.evolve {
            let l = cfg.grid.half_width(&p);
            let grid = PlanarGrid::new(l, cfg.sweep.evolve_n(l))?;
            let sys = LinearizedSystem::new(p, &grid)?;
            let dt = EvolveConfig::max_dt(&p);
            let ec = EvolveConfig { dt, t_end: cfg.sweep.evolve_t_end, record_every: ((0.05 / dt).round() as usize).max(1), ..EvolveConfig::default() };
            let traj = evolve(&initial_state(&grid, &p, cfg.seed, cfg.evolve.amplitude)?, &sys, &ec)?;
            row.outcome = Some(classify(&traj));
            if traj.stable {
                row.decay_rate = Some(fit_decay(&traj, None)?.rate);
            }
        }
        Ok(())
    })();
    if let Err(e) = res {
        row.status = format!("error: {e}");
    }
    row
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepResult], modes: &[usize]) -> String {
    let mut s = format!("# {SWEEP_CSV_SCHEMA}\nmu,eps,k,s,mass,sandwich_pass");
    for m in modes {
        s.push_str(&format!(",gap_m{m}"));
    }
    s.push_str(",decay_rate,outcome,status\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}", r.mu, r.eps, r.k, r.s, opt(r.mass.map(|m| format!("{m:.12}"))), opt(r.sandwich_pass)));
        for m in modes {
            let g = r.gaps.iter().find(|(mm, _)| mm == m).map(|(_, g)| format!("{g:.8}"));
            s.push_str(&format!(",{}", opt(g)));
        }
        let status = r.status.replace([',', '\n'], ";");
        let outcome = r.outcome.map(|o| format!("{o:?}").to_lowercase());
        s.push_str(&format!(",{},{},{status}\n", opt(r.decay_rate.map(|d| format!("{d:.6}"))), opt(outcome)));
    }
    s
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandReport> {
    let t0 = Instant::now();
    let sw = &cfg.sweep;
    let mut points = Vec::new();
    for &mu in &sw.mu {
        for &eps in &sw.eps {
            for &k in &sw.k {
                for &s in &sw.s {
                    points.push((mu, eps, k, s));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config("empty sweep lattice".into()));
    }
    let rows: Vec<SweepResult> = points.par_iter().map(|&(mu, eps, k, s)| sweep_point(cfg, mu, eps, k, s)).collect();
    let failed = rows
        .iter()
        .filter(|r| r.status != "ok" || r.outcome.is_some_and(|o| o != Outcome::Decays))
        .map(|r| format!("sweep point mu {} eps {} k {} s {}", r.mu, r.eps, r.k, r.s))
        .collect();
    let mut out = Outputs::new(&cfg.output_dir);
    out.text("sweep.csv", &sweep_csv(&rows, &sw.modes))?;
    out.json("reports/sweep.json", &rows)?;
    let lines = rows
        .iter()
        .map(|r| format!("mu {} eps {} k {} s {}: {}", r.mu, r.eps, r.k, r.s, r.status))
        .collect();
    out.finish("sweep", cfg, failed, t0, lines)
}

/// Output directory for a command, relative paths resolved against `base`.
pub fn resolve_output(base: &Path, dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        dir.to_path_buf()
    } else {
        base.join(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_csv_has_one_row_per_point_and_no_silent_gaps() {
        let rows = vec![
            SweepResult { mu: 1.0, eps: 0.01, k: 4.0, s: 0.5, mass: Some(20.0), sandwich_pass: Some(true), gaps: vec![(0, 1.9), (1, 0.98)], decay_rate: Some(0.97), outcome: Some(Outcome::Decays), status: "ok".into() },
            SweepResult { mu: 2.0, eps: 0.01, k: 4.0, s: 0.5, mass: None, sandwich_pass: None, gaps: vec![], decay_rate: None, outcome: None, status: "error: a, b".into() },
        ];
        let csv = sweep_csv(&rows, &[0, 1]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "mu,eps,k,s,mass,sandwich_pass,gap_m0,gap_m1,decay_rate,outcome,status");
        assert!(lines[2].ends_with("0.970000,decays,ok"));
        assert!(lines[3].ends_with("error: a; b"));
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 11));
    }

    #[test]
    fn profile_command_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig { output_dir: dir.path().to_path_buf(), ..RunConfig::default() };
        cfg.grid.radial_cells = 1000;
        let rep = cmd_profile(&cfg).unwrap();
        assert_eq!(rep.files, vec!["profile.csv", "reports/profile_bounds.json"]);
        let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
        let row = csv.lines().nth(3).unwrap();
        assert_eq!(row.split(',').nth(4).unwrap().parse::<f64>().unwrap(), 8.0);
        assert!(dir.path().join("manifest.json").exists());
    }
}
