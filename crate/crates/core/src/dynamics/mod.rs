//! Time integration of the perturbation system around the steady profile.
//!
//! The pair `(g, w)` evolves as
//!
//! ```text
//! g_t = L11 g + L12 w - div(g grad kappa * g) - div(g grad w)
//! w_t = L21 g + L22 w + grad kappa * [g grad w + g grad kappa * g]
//! ```
//!
//! Only the diagonal diffusions `lap g` and `(1/eps) lap w` are implicit.
//! Everything else, including the drift `mu x . grad`, is explicit, which is
//! why [`EvolveConfig`] guards the step size.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldops::{grad_kappa_conv, grad_kappa_conv_vec, SampleBank, SampleRecipe};
use crate::linops::LinearizedSystem;
use crate::numgrid::{state_norms, Field, ModelParams, NormVector, PlanarGrid, State, VecField};

/// Column header of trajectory CSV files.
pub const TRAJECTORY_COLUMNS: &str = "t,l2k_g,h1k_g,hdots_w,hdot1_w,hdot2_w,x_norm,y_norm,mass_g";
pub const TRAJECTORY_SCHEMA: &str = "kssim-trajectory v1";

/// Magnitude past which a run counts as blown up.
pub const BLOWUP_LEVEL: f64 = 1e8;
/// Alarm level for the share of `||w||` outside `0.8 L`.
pub const BOUNDARY_ALARM: f64 = 1e-6;
/// Largest residual of a log-linear fit that is still accepted.
pub const FIT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ImexEuler,
    ImexBdf2,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imex-euler" | "euler" => Ok(Scheme::ImexEuler),
            "imex-bdf2" | "bdf2" | "sbdf2" => Ok(Scheme::ImexBdf2),
            _ => Err(Error::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Drop the bilinear terms.
    pub linear_only: bool,
    /// Evolve `g` under `L11` alone with `w` frozen at zero.
    pub g_only: bool,
    pub record_every: usize,
    /// Skip the step-size guard.
    pub override_dt_guard: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 2e-3,
            t_end: 10.0,
            scheme: Scheme::ImexEuler,
            dealias: true,
            linear_only: false,
            g_only: false,
            record_every: 50,
            override_dt_guard: false,
        }
    }
}

impl EvolveConfig {
    /// Largest step the guard admits for these parameters.
    pub fn max_dt(p: &ModelParams) -> f64 {
        let mut m = (0.1 * p.eps).min(0.01);
        if p.mu > 0.0 {
            m = m.min(0.01 / p.mu);
        }
        m
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", value: self.dt, reason: "must be positive" });
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter { name: "t_end", value: self.t_end, reason: "must be finite and >= 0" });
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if p.eps <= 0.0 {
            return Err(Error::Unsupported("time stepping needs eps > 0".into()));
        }
        let max = Self::max_dt(p);
        if !self.override_dt_guard && self.dt > max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "exceeds min(0.1 eps, 0.01, 0.01/mu); set override_dt_guard to force",
            });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Explicit part of the right-hand side, i.e. everything except the two
/// diagonal diffusions.
fn explicit_part(st: &State, sys: &LinearizedSystem, linear_only: bool, g_only: bool) -> Result<State> {
    let grid = sys.grid();
    sys.check_state_grid(&st.g)?;
    sys.check_state_grid(&st.w)?;
    if g_only {
        return Ok(State { g: sys.l11_transport(&st.g), w: Field::zeros(grid) });
    }
    let mut ng = sys.l11_transport(&st.g).add(&sys.apply_l12(&st.w)?);
    let mut nw = sys.apply_l21(&st.g)?.add(&sys.l22_transport(&st.w));
    if !linear_only && !st.g.is_zero() {
        let gk = grad_kappa_conv(&st.g);
        let gw = st.w.gradient();
        let flux = sys.truncate_vec(&VecField {
            x: st.g.mul(&gk.x.add(&gw.x)),
            y: st.g.mul(&gk.y.add(&gw.y)),
        });
        ng = ng.sub(&flux.divergence());
        nw = nw.add(&grad_kappa_conv_vec(&flux));
    }
    Ok(State { g: ng, w: nw })
}

/// Full right-hand side `(g_t, w_t)`.
pub fn rhs(st: &State, sys: &LinearizedSystem, linear_only: bool) -> Result<State> {
    let n = explicit_part(st, sys, linear_only, false)?;
    let inv_eps = 1.0 / sys.params().eps;
    Ok(State {
        g: st.g.laplacian().add(&n.g),
        w: st.w.laplacian().scale(inv_eps).add(&n.w),
    })
}

/// Multistep integrator carrying the history the BDF2 variant needs.
pub struct Integrator<'a> {
    sys: LinearizedSystem,
    cfg: &'a EvolveConfig,
    xi2: Vec<f64>,
    prev: Option<(State, State)>,
    time: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &LinearizedSystem, cfg: &'a EvolveConfig) -> Result<Self> {
        cfg.validate(sys.params())?;
        let sys = sys.clone().with_dealias(cfg.dealias);
        let xi2 = sys.grid().xi_squared();
        Ok(Self { sys, cfg, xi2, prev: None, time: 0.0 })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn system(&self) -> &LinearizedSystem {
        &self.sys
    }

    fn implicit_solve(&self, f: impl Fn(usize) -> Complex64, grid: &Arc<PlanarGrid>, a: f64, d: f64) -> Field {
        let spec: Vec<Complex64> = (0..grid.len()).map(|i| f(i) / (a + self.cfg.dt * d * self.xi2[i])).collect();
        Field::from_spectrum(grid, &spec)
    }

    /// Advances one step.
    pub fn advance(&mut self, st: &State) -> Result<State> {
        let cfg = self.cfg;
        let grid = st.grid().clone();
        let n = explicit_part(st, &self.sys, cfg.linear_only, cfg.g_only)?;
        let dt = cfg.dt;
        let dw = 1.0 / self.sys.params().eps;
        let next = match (cfg.scheme, &self.prev) {
            (Scheme::ImexBdf2, Some((up, np))) => {
                fn comb<'f>(u: &'f Field, uo: &'f Field, nn: &'f Field, no: &'f Field, dt: f64) -> impl Fn(usize) -> Complex64 + 'f {
                    let (u, uo, nn, no) = (u.spectrum(), uo.spectrum(), nn.spectrum(), no.spectrum());
                    move |i: usize| 4.0 * u[i] - uo[i] + 2.0 * dt * (2.0 * nn[i] - no[i])
                }
                let g = self.implicit_solve(comb(&st.g, &up.g, &n.g, &np.g, dt), &grid, 3.0, 2.0);
                let w = self.implicit_solve(comb(&st.w, &up.w, &n.w, &np.w, dt), &grid, 3.0, 2.0 * dw);
                State { g, w }
            }
            _ => {
                let (gs, ng) = (st.g.spectrum(), n.g.spectrum());
                let g = self.implicit_solve(|i| gs[i] + dt * ng[i], &grid, 1.0, 1.0);
                let (ws, nw) = (st.w.spectrum(), n.w.spectrum());
                let w = self.implicit_solve(|i| ws[i] + dt * nw[i], &grid, 1.0, dw);
                State { g, w }
            }
        };
        let next = State { g: next.g.mean_free(), w: if cfg.g_only { Field::zeros(&grid) } else { next.w } };
        self.time += dt;
        if !next.is_finite() || next.g.max_abs().max(next.w.max_abs()) > BLOWUP_LEVEL {
            return Err(Error::BlowUp { time: self.time });
        }
        if cfg.scheme == Scheme::ImexBdf2 {
            self.prev = Some((st.clone(), n));
        }
        Ok(next)
    }
}

/// One step of the configured scheme from a fresh history.
pub fn step(st: &State, sys: &LinearizedSystem, cfg: &EvolveConfig) -> Result<State> {
    Integrator::new(sys, cfg)?.advance(st)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<NormVector>,
    pub mass_g: Vec<f64>,
    /// Share of `||w||_{L^2}` outside `|x| > 0.8 L` at each record.
    pub boundary_fraction: Vec<f64>,
    pub final_state: State,
    /// No NaN or overflow up to `t_end`.
    pub stable: bool,
    pub blowup_time: Option<f64>,
}

impl Trajectory {
    pub fn x_norms(&self) -> Vec<f64> {
        self.norms.iter().map(|n| n.x_norm).collect()
    }

    pub fn sup_x_norm(&self) -> f64 {
        self.norms.iter().map(|n| n.x_norm).fold(0.0, f64::max)
    }

    /// `(int |(g, w)|_Y^2 dt)^{1/2}` by the trapezoid rule over the records.
    pub fn y_l2_time(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.times.len() {
            let (a, b) = (self.norms[i - 1].y_norm, self.norms[i].y_norm);
            acc += 0.5 * (a * a + b * b) * (self.times[i] - self.times[i - 1]);
        }
        acc.sqrt()
    }

    pub fn max_mass_defect(&self) -> f64 {
        self.mass_g.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn boundary_alarm(&self) -> bool {
        self.boundary_fraction.iter().any(|&f| f > BOUNDARY_ALARM)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {TRAJECTORY_SCHEMA}")?;
        writeln!(out, "{TRAJECTORY_COLUMNS}")?;
        for ((t, n), m) in self.times.iter().zip(&self.norms).zip(&self.mass_g) {
            writeln!(
                out,
                "{t:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
                n.l2k, n.h1k, n.hdots, n.hdot1, n.hdot2, n.x_norm, n.y_norm, m
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

fn record(traj: &mut Trajectory, t: f64, st: &State, p: &ModelParams) -> Result<()> {
    let l = st.grid().half_width();
    traj.times.push(t);
    traj.norms.push(state_norms(st, p)?);
    traj.mass_g.push(st.g.integral());
    traj.boundary_fraction.push(if st.w.is_zero() { 0.0 } else { st.w.outer_fraction(0.8 * l) });
    Ok(())
}

/// Integrates from `st0` to `cfg.t_end`. A blow-up ends the run early and is
/// reported through `stable` and `blowup_time`, with the records up to it.
pub fn evolve(st0: &State, sys: &LinearizedSystem, cfg: &EvolveConfig) -> Result<Trajectory> {
    let st0 = State::new(st0.g.clone(), st0.w.clone())?;
    let mut integ = Integrator::new(sys, cfg)?;
    let p = *sys.params();
    let mut traj = Trajectory {
        times: Vec::new(),
        norms: Vec::new(),
        mass_g: Vec::new(),
        boundary_fraction: Vec::new(),
        final_state: st0.clone(),
        stable: true,
        blowup_time: None,
    };
    record(&mut traj, 0.0, &st0, &p)?;
    let steps = cfg.steps();
    let mut st = st0;
    for k in 1..=steps {
        match integ.advance(&st) {
            Ok(next) => st = next,
            Err(Error::BlowUp { time }) => {
                traj.stable = false;
                traj.blowup_time = Some(time);
                break;
            }
            Err(e) => return Err(e),
        }
        if k % cfg.record_every == 0 || k == steps {
            record(&mut traj, k as f64 * cfg.dt, &st, &p)?;
        }
    }
    traj.final_state = st;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub t_a: f64,
    pub t_b: f64,
    /// Largest `|log n(t) - (intercept - rate t)|` over the window.
    pub residual: f64,
    pub samples: usize,
    pub valid: bool,
}

/// Least-squares line through `log values` against `times` on `[t_a, t_b]`.
pub fn fit_decay_series(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (t_a, t_b) = window;
    if !(t_a < t_b) {
        return Err(Error::UndefinedFit(format!("empty window [{t_a}, {t_b}]")));
    }
    let tol = 1e-9 * t_b.abs().max(1.0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_a - tol && **t <= t_b + tol)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedFit(format!("fewer than two samples in [{t_a}, {t_b}]")));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::UndefinedFit(format!("norm {v} at t = {t} is not positive")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1.ln() - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = pts
        .iter()
        .map(|p| (p.1.ln() - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        intercept,
        t_a,
        t_b,
        residual,
        samples: pts.len(),
        valid: residual <= FIT_TOLERANCE,
    })
}

/// Decay fit of `x_norm`; the window defaults to `[t_end/5, t_end]`.
pub fn fit_decay(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let t_end = *traj.times.last().ok_or_else(|| Error::UndefinedFit("empty trajectory".into()))?;
    let w = window.unwrap_or((t_end / 5.0, t_end));
    if w.0 < traj.times[0] || w.1 > t_end * (1.0 + 1e-12) {
        return Err(Error::UndefinedFit(format!("window [{}, {}] leaves the trajectory", w.0, w.1)));
    }
    fit_decay_series(&traj.times, &traj.x_norms(), w)
}

/// Decay rate of the linear semigroup. With `coupled = false` only `g` moves,
/// under `L11`, and the `L^2_k` norm is fitted; otherwise the full linear
/// system runs and the `X` norm is fitted.
pub fn linear_semigroup_decay(
    sys: &LinearizedSystem,
    st0: &State,
    t_end: f64,
    dt: f64,
    coupled: bool,
) -> Result<DecayFit> {
    let cfg = EvolveConfig {
        dt,
        t_end,
        linear_only: true,
        g_only: !coupled,
        record_every: ((0.05 / dt).round() as usize).max(1),
        ..EvolveConfig::default()
    };
    let st0 = if coupled { st0.clone() } else { State::new(st0.g.clone(), Field::zeros(st0.grid()))? };
    let traj = evolve(&st0, sys, &cfg)?;
    if !traj.stable {
        return Err(Error::Numerical(format!("linear run blew up at t = {:?}", traj.blowup_time)));
    }
    let series: Vec<f64> = if coupled { traj.x_norms() } else { traj.norms.iter().map(|n| n.l2k).collect() };
    fit_decay_series(&traj.times, &series, (t_end / 5.0, t_end))
}

/// Seeded non-radial initial data with `||(g, w)||_X = x_norm`. `g` is a
/// mean-zero Gaussian mixture with a dipole, `w` an independent mixture.
pub fn initial_state(grid: &Arc<PlanarGrid>, p: &ModelParams, seed: u64, x_norm: f64) -> Result<State> {
    let g_recipe = SampleRecipe { mean_zero: true, radial: false, dipole: true, ..SampleRecipe::default() };
    let w_recipe = SampleRecipe { mean_zero: false, ..g_recipe.clone() };
    let g = SampleBank::new(seed, 1, g_recipe).field(0, grid);
    let w = SampleBank::new(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1), 1, w_recipe).field(0, grid);
    State::projected(g, w)?.normalized(p, x_norm)
}

/// A concentrated positive bump at the origin, made mean-zero by removing a
/// multiple of `Q`. It moves mass of the profile into the bump, so large
/// amplitudes put more than the critical mass near the centre.
pub fn positive_bump(sys: &LinearizedSystem, width: f64) -> Result<State> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter { name: "width", value: width, reason: "must be positive" });
    }
    let grid = sys.grid();
    let b = Field::from_fn(grid, |x, y| (-(x * x + y * y) / (2.0 * width * width)).exp())?;
    let qm = sys.q().integral();
    if !(qm > 0.0) {
        return Err(Error::Unsupported("positive bump needs a nonzero profile".into()));
    }
    let g = b.sub(&sys.q().scale(b.integral() / qm)).mean_free();
    State::new(g, Field::zeros(grid))?.normalized(sys.params(), 1.0)
}

impl State {
    /// Copy rescaled to the given `X` norm.
    pub fn normalized(&self, p: &ModelParams, x_norm: f64) -> Result<State> {
        let n = state_norms(self, p)?.x_norm;
        if !(n > 0.0) {
            return Err(Error::ContractViolation("cannot normalize a zero state".into()));
        }
        Ok(self.scale(x_norm / n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Decays,
    Grows,
    BlowsUp,
}

/// Largest `sup_t x_norm / x_norm(0)` a decaying run may show, the constant
/// of the small-data energy estimate.
pub const ENERGY_BOUND: f64 = 3.0;

/// Decays means stable, `sup_t x_norm <= ENERGY_BOUND x_norm(0)` and
/// `x_norm(t_end) < x_norm(0)`.
pub fn classify(traj: &Trajectory) -> Outcome {
    if !traj.stable {
        return Outcome::BlowsUp;
    }
    let x = traj.x_norms();
    match (x.first(), x.last()) {
        (Some(&a), Some(&b)) if b < a && traj.sup_x_norm() <= ENERGY_BOUND * a => Outcome::Decays,
        _ => Outcome::Grows,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Largest amplitude seen to decay.
    pub lower: f64,
    /// Smallest amplitude seen to grow or blow up, `None` if none did.
    pub upper: Option<f64>,
    /// Both endpoints of the search resolved to different outcomes.
    pub bracketed: bool,
    pub upper_outcome: Option<Outcome>,
    pub runs: Vec<(f64, Outcome)>,
}

pub const THRESHOLD_BISECTIONS: usize = 8;

/// Bisects the amplitude of `direction` between `lo` and `hi` for the
/// boundary between decay and growth, geometrically since the bracket spans
/// decades. If both ends decay, `lower = hi` and `upper = None` mark the
/// result as a lower bound only.
pub fn threshold_search(
    sys: &LinearizedSystem,
    cfg: &EvolveConfig,
    direction: &State,
    lo: f64,
    hi: f64,
) -> Result<ThresholdEstimate> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let dir = direction.normalized(sys.params(), 1.0)?;
    let mut runs = Vec::new();
    let mut run = |a: f64| -> Result<Outcome> {
        let o = classify(&evolve(&dir.scale(a), sys, cfg)?);
        runs.push((a, o));
        Ok(o)
    };
    let o_hi = run(hi)?;
    if o_hi == Outcome::Decays {
        return Ok(ThresholdEstimate { lower: hi, upper: None, bracketed: false, upper_outcome: None, runs });
    }
    let o_lo = run(lo)?;
    if o_lo != Outcome::Decays {
        return Ok(ThresholdEstimate { lower: 0.0, upper: Some(lo), bracketed: false, upper_outcome: Some(o_lo), runs });
    }
    let (mut a, mut b, mut ob) = (lo, hi, o_hi);
    for _ in 0..THRESHOLD_BISECTIONS {
        let m = (a * b).sqrt();
        match run(m)? {
            Outcome::Decays => a = m,
            o => {
                b = m;
                ob = o;
            }
        }
    }
    Ok(ThresholdEstimate { lower: a, upper: Some(b), bracketed: true, upper_outcome: Some(ob), runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn small_sys() -> LinearizedSystem {
        let grid = PlanarGrid::new(16.0, 64).unwrap();
        LinearizedSystem::new(ModelParams::with_mu_eps(1.0, 0.02).unwrap(), &grid).unwrap()
    }

    #[test]
    fn dt_guard() {
        let p = ModelParams::with_mu_eps(1.0, 0.02).unwrap();
        assert!((EvolveConfig::max_dt(&p) - 2e-3).abs() < 1e-15);
        let bad = EvolveConfig { dt: 5e-3, ..EvolveConfig::default() };
        assert!(bad.validate(&p).is_err());
        assert!(EvolveConfig { override_dt_guard: true, ..bad }.validate(&p).is_ok());
        assert_eq!(EvolveConfig { dt: 0.1, t_end: 1.0, override_dt_guard: true, ..EvolveConfig::default() }.steps(), 10);
    }

    #[test]
    fn zero_state_is_stationary() {
        let sys = small_sys();
        let z = State::zeros(sys.grid());
        let r = rhs(&z, &sys, false).unwrap();
        assert!(r.g.is_zero() && r.w.is_zero());
        let cfg = EvolveConfig { t_end: 0.2, record_every: 10, ..EvolveConfig::default() };
        let traj = evolve(&z, &sys, &cfg).unwrap();
        assert!(traj.stable);
        assert!(traj.norms.iter().all(|n| n.x_norm == 0.0));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn linear_rhs_matches_blocks() {
        let sys = small_sys();
        let st = initial_state(sys.grid(), sys.params(), 3, 1.0).unwrap();
        let g_only = State::new(st.g.clone(), Field::zeros(sys.grid())).unwrap();
        let r = rhs(&g_only, &sys, true).unwrap();
        let l11 = sys.apply_l11(&st.g).unwrap();
        let l21 = sys.apply_l21(&st.g).unwrap();
        assert!(r.g.sub(&l11).max_abs() <= 1e-12 * l11.max_abs().max(1.0));
        assert!(r.w.sub(&l21).max_abs() <= 1e-12 * l21.max_abs().max(1.0));
    }

    #[test]
    fn bilinear_remainder_is_quadratic() {
        let sys = small_sys();
        let st = initial_state(sys.grid(), sys.params(), 5, 1.0).unwrap();
        let lin = rhs(&st, &sys, true).unwrap();
        let rem = |c: f64| {
            let full = rhs(&st.scale(c), &sys, false).unwrap();
            full.g.sub(&lin.g.scale(c)).l2_norm() + full.w.sub(&lin.w.scale(c)).l2_norm()
        };
        let cs = [1e-3, 2e-3, 4e-3];
        let r: Vec<f64> = cs.iter().map(|&c| rem(c)).collect();
        let slope = (r[2] / r[0]).ln() / (cs[2] / cs[0]).ln();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn heat_surrogate_step_is_diagonal() {
        let grid = PlanarGrid::new(8.0, 32).unwrap();
        let sys = LinearizedSystem::heat_surrogate(&grid, 0.5).unwrap();
        let g = Field::from_fn(&grid, |x, y| x * (-(x * x + y * y) / 4.0).exp()).unwrap().mean_free();
        let st = State::new(g.clone(), Field::zeros(&grid)).unwrap();
        let err = |dt: f64| {
            let cfg = EvolveConfig { dt, t_end: dt, linear_only: true, ..EvolveConfig::default() };
            let next = step(&st, &sys, &cfg).unwrap();
            let exact = g.apply_multiplier(|a, b| Complex64::new((-(a * a + b * b) * dt).exp(), 0.0));
            next.g.sub(&exact).max_abs()
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        assert!(e1 < 1e-2 * g.max_abs());
        assert!(e1 / e2 > 3.5, "one-step error ratio {}", e1 / e2);
    }

    #[test]
    fn synthetic_fits() {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = fit_decay_series(&t, &v, (2.0, 10.0)).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-6 && f.valid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<f64> = v.iter().map(|x| x * (1.0 + rng.random_range(-0.01..0.01))).collect();
        let f = fit_decay_series(&t, &noisy, (2.0, 10.0)).unwrap();
        assert!((f.rate - 0.7).abs() < 0.02);
        let mut bad = v.clone();
        bad[50] = 0.0;
        assert!(matches!(fit_decay_series(&t, &bad, (2.0, 10.0)), Err(Error::UndefinedFit(_))));
    }

    #[test]
    fn zero_direction_is_rejected() {
        let sys = small_sys();
        let cfg = EvolveConfig { t_end: 0.1, ..EvolveConfig::default() };
        let z = State::zeros(sys.grid());
        assert!(threshold_search(&sys, &cfg, &z, 1e-4, 1.0).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let sys = small_sys();
        let st = initial_state(sys.grid(), sys.params(), 1, 1e-3).unwrap();
        let cfg = EvolveConfig { t_end: 0.02, record_every: 5, ..EvolveConfig::default() };
        let traj = evolve(&st, &sys, &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], TRAJECTORY_COLUMNS);
        assert_eq!(lines.len(), 2 + traj.times.len());
        assert!(traj.max_mass_defect() <= 1e-10);
    }
}
