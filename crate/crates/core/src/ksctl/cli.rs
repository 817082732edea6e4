//! Argument parsing for the `ksctl` binary. Flags override the TOML config.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::commands::{cmd_check, cmd_evolve, cmd_profile, cmd_spectrum, cmd_sweep, CommandReport};
use super::config::RunConfig;
use crate::dynamics::Scheme;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ksctl", version, about = "Steady profiles, spectra and stability runs for the parabolic-elliptic model")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the steady profile and check its bounds.
    Profile {
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        no_sandwich: bool,
    },
    /// Angular-mode spectra of the linearized operator.
    Spectrum {
        /// `0..3` (inclusive) or a list such as `0,2,5`.
        #[arg(long, value_parser = parse_modes)]
        modes: Option<ModeList>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        refine: bool,
    },
    /// Evolve seeded small data and fit the decay rate.
    Evolve {
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        linear: bool,
    },
    /// Run acceptance criteria, all of them when none are named.
    Check { criteria: Vec<String> },
    /// Profiles, spectra and decay over a parameter lattice.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_modes)]
        modes: Option<ModeList>,
        #[arg(long)]
        no_evolve: bool,
    },
}

/// Angular modes parsed from one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeList(pub Vec<usize>);

/// `"a..b"` is inclusive; otherwise a comma separated list.
pub fn parse_modes(s: &str) -> std::result::Result<ModeList, String> {
    let bad = |_| format!("bad mode list `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(bad)?;
        let b: usize = b.trim().parse().map_err(bad)?;
        if b < a {
            return Err(format!("empty mode range `{s}`"));
        }
        return Ok(ModeList((a..=b).collect()));
    }
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(bad)).collect::<std::result::Result<_, _>>().map(ModeList)
}

impl Cli {
    /// Loads the config file when given and applies the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        let m = &self.model;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.model.mu, m.mu);
        set(&mut c.model.eps, m.eps);
        set(&mut c.model.k, m.k);
        set(&mut c.model.s, m.s);
        set(&mut c.model.lambda, m.lambda);
        match &self.command {
            Command::Profile { cells, r_max, alpha, no_sandwich } => {
                if let Some(n) = cells {
                    c.grid.radial_cells = *n;
                }
                if r_max.is_some() {
                    c.grid.radial_r_max = *r_max;
                }
                set(&mut c.profile.alpha, *alpha);
                if *no_sandwich {
                    c.profile.sandwich = false;
                }
            }
            Command::Spectrum { modes, cells, r_max, refine } => {
                if let Some(m) = modes {
                    c.spectrum.modes = m.0.clone();
                }
                if let Some(n) = cells {
                    c.spectrum.cells = *n;
                }
                if r_max.is_some() {
                    c.spectrum.r_max = *r_max;
                }
                c.spectrum.refine |= *refine;
            }
            Command::Evolve { amplitude, t_end, dt, scheme, n, half_width, linear } => {
                set(&mut c.evolve.amplitude, *amplitude);
                set(&mut c.evolve.t_end, *t_end);
                if dt.is_some() {
                    c.evolve.dt = *dt;
                    c.evolve.record_every = None;
                }
                if let Some(s) = scheme {
                    c.evolve.scheme = *s;
                }
                if let Some(n) = n {
                    c.grid.n = *n;
                }
                if half_width.is_some() {
                    c.grid.half_width = *half_width;
                }
                c.evolve.linear_only |= *linear;
            }
            Command::Check { criteria } => {
                if !criteria.is_empty() {
                    c.check.criteria = criteria.clone();
                }
            }
            Command::Sweep { mu, eps, modes, no_evolve } => {
                if let Some(v) = mu {
                    c.sweep.mu = v.clone();
                }
                if let Some(v) = eps {
                    c.sweep.eps = v.clone();
                }
                if let Some(v) = modes {
                    c.sweep.modes = v.0.clone();
                }
                if *no_evolve {
                    c.sweep.evolve = false;
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn execute(&self) -> Result<CommandReport> {
        let cfg = self.resolve()?;
        if cfg.evolve.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(Error::Config("dt must be positive".into()));
        }
        match self.command {
            Command::Profile { .. } => cmd_profile(&cfg),
            Command::Spectrum { .. } => cmd_spectrum(&cfg),
            Command::Evolve { .. } => cmd_evolve(&cfg),
            Command::Check { .. } => cmd_check(&cfg),
            Command::Sweep { .. } => cmd_sweep(&cfg),
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("KSSIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("KSSIM_THREADS must be a positive integer, got `{v}`")))?;
        // A second build fails harmlessly when the pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match cli.execute() {
        Ok(rep) => {
            for l in &rep.summary {
                println!("{l}");
            }
            if rep.pass {
                EXIT_OK
            } else {
                eprintln!("failed: {}", rep.failed.join(", "));
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_lists() {
        assert_eq!(parse_modes("0..3").unwrap().0, vec![0, 1, 2, 3]);
        assert_eq!(parse_modes("0, 2,5").unwrap().0, vec![0, 2, 5]);
        assert!(parse_modes("3..1").is_err());
        assert!(parse_modes("a").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["ksctl", "--mu", "2", "--out", "/tmp/x", "spectrum", "--modes", "0..1"]).unwrap();
        let c = cli.resolve().unwrap();
        assert_eq!(c.model.mu, 2.0);
        assert_eq!(c.spectrum.modes, vec![0, 1]);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn bad_input_exits_with_error_code() {
        assert_eq!(run(["ksctl", "spectrum", "--modes", "x"]), EXIT_ERROR);
        assert_eq!(run(["ksctl", "--k", "1", "profile"]), EXIT_ERROR);
    }
}
