//! Radially symmetric steady profiles `(Q, P)` and their vanishing-drift limit.
//!
//! The profile is the fixed point of
//!
//! ```text
//! P(r) = -8 \int_0^r e^{-mu eps rho^2 / 2} / rho \int_0^rho tau e^{P(tau) - mu (1 - eps) tau^2 / 2} dtau drho
//! ```
//!
//! with `Q = 8 e^{P - mu r^2 / 2}`, so `P(0) = 0` and `Q(0) = 8` hold exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numgrid::{cumulative_integral, Field, ModelParams, Parity, PlanarGrid, RadialGrid, VecField};
use crate::{Error, Result};

/// Schema tag written at the top of profile CSV files.
pub const PROFILE_CSV_SCHEMA: &str = "kssim-profile v1";

const MAX_ITERATIONS: usize = 500;
const STOP_CHANGE: f64 = 1e-12;
/// Residual the solver promises on success.
pub const RESIDUAL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Fixed point of the integral map for `mu > 0`.
    Steady,
    /// `Q0 = 8 / (1 + r^2)^2`, `P0 = -2 ln(1 + r^2)`.
    ClosedFormLimit,
}

/// Steady profile sampled on a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub grid: RadialGrid,
    pub mu: f64,
    pub eps: f64,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub lap_p: Vec<f64>,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Whether the damped iteration had to be used.
    pub damped: bool,
    /// Analytic estimate of `\int_{r_max}^inf Q r dr`.
    pub tail_mass: f64,
}

/// Metadata written as the JSON header of a profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProfileHeader {
    pub kind: ProfileKind,
    pub mu: f64,
    pub eps: f64,
    pub r_max: f64,
    pub intervals: usize,
    pub residual: f64,
    pub iterations: usize,
}

/// `(Q0, P0)` sampled on `grid`.
pub fn closed_form_limit(grid: &RadialGrid) -> RadialProfile {
    let r = grid.nodes();
    let q: Vec<f64> = r.iter().map(|r| 8.0 / (1.0 + r * r).powi(2)).collect();
    let p: Vec<f64> = r.iter().map(|r| -2.0 * (r * r).ln_1p()).collect();
    let dp: Vec<f64> = r.iter().map(|r| -4.0 * r / (1.0 + r * r)).collect();
    let lap_p: Vec<f64> = q.iter().map(|q| -q).collect();
    let dq: Vec<f64> = r.iter().map(|r| -32.0 * r / (1.0 + r * r).powi(3)).collect();
    let rm = grid.r_max();
    RadialProfile {
        kind: ProfileKind::ClosedFormLimit,
        grid: grid.clone(),
        mu: 0.0,
        eps: 0.0,
        p,
        dp,
        lap_p,
        q,
        dq,
        iterations: 0,
        residual: 0.0,
        damped: false,
        tail_mass: 4.0 / (1.0 + rm * rm),
    }
}

/// One application of the integral map; also returns the inner integral.
fn profile_map(p: &[f64], r: &[f64], h: f64, mu: f64, eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let inner_integrand: Vec<f64> = p
        .iter()
        .zip(r)
        .map(|(p, r)| r * (p - mu * (1.0 - eps) * r * r / 2.0).exp())
        .collect();
    if inner_integrand.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite value in the profile integrand".into()));
    }
    let inner = cumulative_integral(&inner_integrand, h);
    // inner(rho) = O(rho^2), so the outer integrand extends by 0 at the origin.
    let outer: Vec<f64> = inner
        .iter()
        .zip(r)
        .map(|(i, r)| if *r == 0.0 { 0.0 } else { (-mu * eps * r * r / 2.0).exp() * i / r })
        .collect();
    let out = cumulative_integral(&outer, h).into_iter().map(|v| -8.0 * v).collect();
    Ok((out, inner))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves the steady problem by fixed-point iteration seeded with `P0`.
///
/// Plain iteration is used first; if the sup-norm change grows twice in a row
/// after the third iterate, the update switches to a 1/2 damping.
pub fn solve_profile(p: &ModelParams, grid: &RadialGrid) -> Result<RadialProfile> {
    p.validate()?;
    let (mu, eps) = (p.mu, p.eps);
    let r = grid.nodes();
    let h = grid.step();
    let mut cur: Vec<f64> = r.iter().map(|r| -2.0 * (r * r).ln_1p()).collect();
    let mut delta = 0.0;
    let mut damped = false;
    let mut changes: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let (next, _) = profile_map(&cur, r, h, mu, eps)?;
        let change = sup_diff(&next, &cur);
        if !change.is_finite() {
            return Err(Error::Numerical("profile iteration produced a non-finite update".into()));
        }
        let k = changes.len();
        changes.push(change);
        if !damped && k >= 4 && changes[k] > changes[k - 1] && changes[k - 1] > changes[k - 2] {
            damped = true;
            delta = 0.5;
        }
        for (c, n) in cur.iter_mut().zip(&next) {
            *c = (1.0 - delta) * n + delta * *c;
        }
        if change < STOP_CHANGE {
            converged = true;
            break;
        }
    }
    let (mapped, inner) = profile_map(&cur, r, h, mu, eps)?;
    let residual = sup_diff(&mapped, &cur);
    if !converged || residual > RESIDUAL_TOL {
        return Err(Error::Divergence { iterations, residual });
    }
    // Report the map output itself: it is the smoother of the two iterates.
    let pv = mapped;
    let dp: Vec<f64> = inner
        .iter()
        .zip(r)
        .map(|(i, r)| if *r == 0.0 { 0.0 } else { -8.0 * (-mu * eps * r * r / 2.0).exp() * i / r })
        .collect();
    let q: Vec<f64> = pv.iter().zip(r).map(|(p, r)| 8.0 * (p - mu * r * r / 2.0).exp()).collect();
    let lap_p: Vec<f64> = q
        .iter()
        .zip(&dp)
        .zip(r)
        .map(|((q, dp), r)| -q - mu * eps * r * dp)
        .collect();
    let dq: Vec<f64> = q
        .iter()
        .zip(&dp)
        .zip(r)
        .map(|((q, dp), r)| q * (dp - mu * r))
        .collect();
    let q_end = *q.last().expect("nonempty grid");
    Ok(RadialProfile {
        kind: ProfileKind::Steady,
        grid: grid.clone(),
        mu,
        eps,
        p: pv,
        dp,
        lap_p,
        q,
        dq,
        iterations,
        residual,
        damped,
        tail_mass: q_end / mu,
    })
}

/// `2 pi \int_0^inf Q r dr`: grid quadrature plus the analytic tail estimate.
pub fn profile_mass(prof: &RadialProfile) -> f64 {
    2.0 * std::f64::consts::PI * (prof.grid.integrate_r(&prof.q) + prof.tail_mass)
}

/// Least-squares coefficient `a` in `P + 2 r^2 ~ a r^4 + b r^6` over `0 < r <= r_fit`.
pub fn quartic_coefficient(prof: &RadialProfile, r_fit: f64) -> Result<f64> {
    let (mut s88, mut s810, mut s1010, mut sy8, mut sy10) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for (r, p) in prof.grid.nodes().iter().zip(&prof.p) {
        if *r == 0.0 || *r > r_fit * (1.0 + 1e-12) {
            continue;
        }
        let y = p + 2.0 * r * r;
        let (a, b) = (r.powi(4), r.powi(6));
        s88 += a * a;
        s810 += a * b;
        s1010 += b * b;
        sy8 += y * a;
        sy10 += y * b;
        count += 1;
    }
    if count < 3 {
        return Err(Error::UndefinedFit(format!(
            "only {count} nodes in (0, {r_fit}]"
        )));
    }
    let det = s88 * s1010 - s810 * s810;
    Ok((sy8 * s1010 - sy10 * s810) / det)
}

/// Expected quartic coefficient `1 + (mu / 4)(1 + eps)` of `P + 2 r^2`.
pub fn quartic_coefficient_expected(mu: f64, eps: f64) -> f64 {
    1.0 + mu / 4.0 * (1.0 + eps)
}

/// Sixth-order finite-difference radial Laplacian `f'' + f'/r` of an even
/// function; at the origin it returns `2 f''(0)`. The last three nodes are NaN.
pub fn radial_laplacian_fd(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.step();
    let r = grid.nodes();
    let at = |j: isize| -> f64 { f[j.unsigned_abs()] };
    let mut out = vec![f64::NAN; n];
    for i in 0..n.saturating_sub(3) {
        let j = i as isize;
        let d2 = (2.0 * (at(j + 3) + at(j - 3)) - 27.0 * (at(j + 2) + at(j - 2))
            + 270.0 * (at(j + 1) + at(j - 1))
            - 490.0 * at(j))
            / (180.0 * h * h);
        if i == 0 {
            out[0] = 2.0 * d2;
        } else {
            let d1 = (at(j + 3) - at(j - 3) - 9.0 * (at(j + 2) - at(j - 2)) + 45.0 * (at(j + 1) - at(j - 1)))
                / (60.0 * h);
            out[i] = d2 + d1 / r[i];
        }
    }
    out
}

/// Profile quantities on a planar grid.
#[derive(Debug, Clone)]
pub struct LiftedProfile {
    pub q: Field,
    pub p: Field,
    pub grad_p: VecField,
    pub lap_p: Field,
    pub grad_q: VecField,
}

/// Interpolates a radial profile onto planar nodes with six-point Lagrange
/// interpolation in `r`.
pub fn lift_to_plane(prof: &RadialProfile, grid: &Arc<PlanarGrid>) -> Result<LiftedProfile> {
    let needed = std::f64::consts::SQRT_2 * grid.half_width();
    let available = prof.grid.r_max();
    if available < needed {
        return Err(Error::DomainCoverage { needed, available });
    }
    let rg = &prof.grid;
    let mut q = Vec::with_capacity(grid.len());
    let mut p = Vec::with_capacity(grid.len());
    let mut lap = Vec::with_capacity(grid.len());
    let mut gx = Vec::with_capacity(grid.len());
    let mut gy = Vec::with_capacity(grid.len());
    let mut qx = Vec::with_capacity(grid.len());
    let mut qy = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (x, y) = grid.point(i);
        let r = (x * x + y * y).sqrt();
        q.push(rg.interpolate(&prof.q, r, Parity::Even));
        p.push(rg.interpolate(&prof.p, r, Parity::Even));
        lap.push(rg.interpolate(&prof.lap_p, r, Parity::Even));
        if r == 0.0 {
            gx.push(0.0);
            gy.push(0.0);
            qx.push(0.0);
            qy.push(0.0);
        } else {
            let d = rg.interpolate(&prof.dp, r, Parity::Odd);
            gx.push(d * x / r);
            gy.push(d * y / r);
            let d = rg.interpolate(&prof.dq, r, Parity::Odd);
            qx.push(d * x / r);
            qy.push(d * y / r);
        }
    }
    Ok(LiftedProfile {
        q: Field::from_values(grid, q)?,
        p: Field::from_values(grid, p)?,
        grad_p: VecField {
            x: Field::from_values(grid, gx)?,
            y: Field::from_values(grid, gy)?,
        },
        lap_p: Field::from_values(grid, lap)?,
        grad_q: VecField {
            x: Field::from_values(grid, qx)?,
            y: Field::from_values(grid, qy)?,
        },
    })
}

impl RadialProfile {
    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            kind: self.kind,
            mu: self.mu,
            eps: self.eps,
            r_max: self.grid.r_max(),
            intervals: self.grid.intervals(),
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    /// CSV with a schema line, a JSON header line and columns `r,P,dP,lapP,Q`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        let _ = writeln!(s, "# {PROFILE_CSV_SCHEMA}");
        let _ = writeln!(s, "# {header}");
        s.push_str("r,P,dP,lapP,Q\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e}",
                self.grid.nodes()[i],
                self.p[i],
                self.dp[i],
                self.lap_p[i],
                self.q[i]
            );
        }
        s
    }
}

/// Rows of a profile CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub header: ProfileHeader,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub lap_p: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn parse_profile_csv(text: &str) -> Result<ProfileTable> {
    let mut lines = text.lines();
    let schema = lines.next().unwrap_or_default();
    if schema.trim_start_matches('#').trim() != PROFILE_CSV_SCHEMA {
        return Err(Error::Config(format!("unknown profile schema line {schema:?}")));
    }
    let json = lines
        .next()
        .ok_or_else(|| Error::Config("missing profile header".into()))?
        .trim_start_matches('#')
        .trim();
    let header: ProfileHeader = serde_json::from_str(json)?;
    let cols = lines.next().unwrap_or_default();
    if cols.trim() != "r,P,dP,lapP,Q" {
        return Err(Error::Config(format!("unexpected profile columns {cols:?}")));
    }
    let mut t = ProfileTable {
        header,
        r: vec![],
        p: vec![],
        dp: vec![],
        lap_p: vec![],
        q: vec![],
    };
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("profile row {}: {e}", ln + 1)))?;
        if vals.len() != 5 {
            return Err(Error::Config(format!("profile row {} has {} columns", ln + 1, vals.len())));
        }
        t.r.push(vals[0]);
        t.p.push(vals[1]);
        t.dp.push(vals[2]);
        t.lap_p.push(vals[3]);
        t.q.push(vals[4]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid_for(mu: f64) -> RadialGrid {
        RadialGrid::new(RadialGrid::decay_radius(mu, 0.9), 4000).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let g = RadialGrid::new(10.0, 4000).unwrap();
        let c = closed_form_limit(&g);
        assert_eq!(c.q[0], 8.0);
        assert_eq!(c.p[0], 0.0);
        assert!((profile_mass(&c) - 8.0 * PI).abs() < 1e-10);
        // A coarser grid keeps the finite-difference roundoff below the tolerance.
        let g = RadialGrid::new(10.0, 1000).unwrap();
        let c = closed_form_limit(&g);
        let lap = radial_laplacian_fd(&g, &c.p);
        for i in 0..g.len() - 3 {
            assert!((lap[i] + c.q[i]).abs() < 1e-9, "node {i}");
        }
    }

    #[test]
    fn steady_profile_basic_invariants() {
        let p = ModelParams::with_mu_eps(1.0, 0.02).unwrap();
        let prof = solve_profile(&p, &grid_for(1.0)).unwrap();
        assert_eq!(prof.p[0], 0.0);
        assert_eq!(prof.q[0], 8.0);
        assert!(prof.residual <= RESIDUAL_TOL);
        assert!(prof.q.iter().all(|q| *q > 0.0));
        assert!(prof.p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn laplacian_two_ways() {
        let p = ModelParams::with_mu_eps(0.5, 0.01).unwrap();
        let prof = solve_profile(&p, &grid_for(0.5)).unwrap();
        let fd = radial_laplacian_fd(&prof.grid, &prof.p);
        let n = prof.grid.len();
        for i in 5..n - 3 {
            assert!((fd[i] - prof.lap_p[i]).abs() < 1e-7, "node {i}: {} vs {}", fd[i], prof.lap_p[i]);
        }
    }

    #[test]
    fn quartic_coefficient_matches_expansion() {
        let p = ModelParams::with_mu_eps(0.5, 0.01).unwrap();
        let prof = solve_profile(&p, &grid_for(0.5)).unwrap();
        let a = quartic_coefficient(&prof, 0.1).unwrap();
        let e = quartic_coefficient_expected(0.5, 0.01);
        assert!((a - e).abs() / e < 0.01, "{a} vs {e}");
    }

    #[test]
    fn parabolic_elliptic_case_matches_direct_iteration() {
        // Independent formulation through the mass function m(r) = \int_0^r Q tau dtau.
        let mu = 1.0;
        let g = grid_for(mu);
        let prof = solve_profile(&ModelParams::with_mu_eps(mu, 0.0).unwrap(), &g).unwrap();
        let r = g.nodes();
        let mut pv: Vec<f64> = r.iter().map(|r| -2.0 * (r * r).ln_1p()).collect();
        for _ in 0..200 {
            let q: Vec<f64> = pv.iter().zip(r).map(|(p, r)| 8.0 * (p - mu * r * r / 2.0).exp()).collect();
            let qr: Vec<f64> = q.iter().zip(r).map(|(q, r)| q * r).collect();
            let m = cumulative_integral(&qr, g.step());
            let dp: Vec<f64> = m.iter().zip(r).map(|(m, r)| if *r == 0.0 { 0.0 } else { -m / r }).collect();
            pv = cumulative_integral(&dp, g.step());
        }
        let q: Vec<f64> = pv.iter().zip(r).map(|(p, r)| 8.0 * (p - mu * r * r / 2.0).exp()).collect();
        let diff = q.iter().zip(&prof.q).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn mass_range_and_monotonicity() {
        let m1 = profile_mass(&solve_profile(&ModelParams::with_mu_eps(1.0, 0.01).unwrap(), &grid_for(1.0)).unwrap());
        let m2 = profile_mass(&solve_profile(&ModelParams::with_mu_eps(2.0, 0.01).unwrap(), &grid_for(2.0)).unwrap());
        assert!(m1 > 0.0 && m1 < 8.0 * PI);
        assert!(m2 < m1);
    }

    #[test]
    fn refinement_changes_q_little() {
        let p = ModelParams::with_mu_eps(1.0, 0.02).unwrap();
        let rm = RadialGrid::decay_radius(1.0, 0.9);
        let a = solve_profile(&p, &RadialGrid::new(rm, 4000).unwrap()).unwrap();
        let b = solve_profile(&p, &RadialGrid::new(rm, 8000).unwrap()).unwrap();
        let diff = a.q.iter().zip(b.q.iter().step_by(2)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff <= 1e-9, "{diff}");
    }

    #[test]
    fn lifting_closed_form() {
        let grid = PlanarGrid::new(8.0, 64).unwrap();
        let short = RadialGrid::new(10.0, 4000).unwrap();
        assert!(matches!(
            lift_to_plane(&closed_form_limit(&short), &grid),
            Err(Error::DomainCoverage { .. })
        ));
        let rg = RadialGrid::new(12.0, 4800).unwrap();
        let lifted = lift_to_plane(&closed_form_limit(&rg), &grid).unwrap();
        for i in 0..grid.len() {
            let (x, y) = grid.point(i);
            let exact = 8.0 / (1.0 + x * x + y * y).powi(2);
            assert!((lifted.q.values()[i] - exact).abs() < 1e-8);
        }
        let centre = grid.len() / 2 + grid.n() / 2;
        assert_eq!(grid.point(centre), (0.0, 0.0));
        assert_eq!(lifted.grad_p.x.values()[centre], 0.0);
        assert_eq!(lifted.grad_p.y.values()[centre], 0.0);
    }

    #[test]
    fn planar_and_radial_mass_agree() {
        let p = ModelParams::with_mu_eps(1.0, 0.02).unwrap();
        let prof = solve_profile(&p, &RadialGrid::new(12.0, 4800).unwrap()).unwrap();
        let grid = PlanarGrid::new(8.0, 128).unwrap();
        let lifted = lift_to_plane(&prof, &grid).unwrap();
        let planar = lifted.q.integral();
        let radial = 2.0 * PI * prof.grid.integrate_r(&prof.q);
        assert!((planar - radial).abs() < 1e-8, "{planar} vs {radial}");
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::new(12.0, 64).unwrap();
        let c = closed_form_limit(&g);
        let t = parse_profile_csv(&c.to_csv()).unwrap();
        assert_eq!(t.header, c.header());
        assert_eq!(t.q, c.q);
        assert_eq!(t.r, g.nodes());
        assert!(parse_profile_csv("r,P\n1,2\n").is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        let p = ModelParams { mu: -1.0, ..ModelParams::default() };
        assert!(solve_profile(&p, &grid_for(1.0)).is_err());
    }
}
