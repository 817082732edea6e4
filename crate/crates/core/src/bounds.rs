//! Pointwise estimates on computed profiles and their `eps -> 0` rates.
//!
//! "Verification" here means: strict inequalities are evaluated at every grid
//! node `r > 0` with a slack of `1e-12`, and existential constants are
//! replaced by finite empirical values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numgrid::{ModelParams, RadialGrid};
use crate::profiles::{closed_form_limit, solve_profile, RadialProfile};
use crate::{Error, Result};

/// Slack used for strict inequalities.
pub const STRICT_SLACK: f64 = 1e-12;

/// Worst margin of one inequality over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub id: String,
    pub pass: bool,
    /// `min (rhs - lhs)` over the tested nodes.
    pub worst_margin: f64,
    pub worst_location: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_location: f64,
    pub fitted_constants: BTreeMap<String, f64>,
    pub checks: Vec<InequalityCheck>,
    pub note: String,
}

impl BoundReport {
    pub fn from_checks(id: &str, checks: Vec<InequalityCheck>, note: &str) -> Self {
        let worst = checks
            .iter()
            .min_by(|a, b| a.worst_margin.total_cmp(&b.worst_margin))
            .cloned();
        let (worst_margin, worst_location) = worst
            .map(|c| (c.worst_margin, c.worst_location))
            .unwrap_or((f64::INFINITY, 0.0));
        Self {
            id: id.to_string(),
            pass: checks.iter().all(|c| c.pass),
            worst_margin,
            worst_location,
            fitted_constants: BTreeMap::new(),
            checks,
            note: note.to_string(),
        }
    }
}

/// Evaluates `lhs(i) < rhs(i)` on the nodes `r > 0`.
fn strict_check(id: &str, r: &[f64], lhs: impl Fn(usize) -> f64, rhs: impl Fn(usize) -> f64) -> InequalityCheck {
    let mut worst = f64::INFINITY;
    let mut loc = 0.0;
    for (i, &ri) in r.iter().enumerate() {
        if ri <= 0.0 {
            continue;
        }
        let m = rhs(i) - lhs(i);
        if m < worst || m.is_nan() {
            worst = m;
            loc = ri;
        }
    }
    InequalityCheck {
        id: id.to_string(),
        pass: worst >= -STRICT_SLACK,
        worst_margin: worst,
        worst_location: loc,
    }
}

fn same_grid(a: &RadialProfile, b: &RadialProfile) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("profiles live on different radial grids".into()));
    }
    Ok(())
}

/// Checks the comparison chains between a steady profile and the closed-form
/// limit `(Q0, P0)`:
///
/// * `P0 - mu a r^2/2 < P - mu a r^2/2 < P0 < P < 0`
/// * `r P' - mu a r^2 < r P0' < r P' < 0`
/// * `Q0 e^{-mu r^2/2} < Q < Q0 e^{-mu (1 - a) r^2/2}`
pub fn check_profile_sandwich(prof: &RadialProfile, limit: &RadialProfile, alpha: f64) -> Result<BoundReport> {
    same_grid(prof, limit)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must lie in (0, 1)",
        });
    }
    let r = prof.grid.nodes();
    let mu = prof.mu;
    let (p, p0, dp, dp0, q, q0) = (&prof.p, &limit.p, &prof.dp, &limit.dp, &prof.q, &limit.q);
    let sh = |i: usize| mu * alpha * r[i] * r[i] / 2.0;
    let checks = vec![
        strict_check("P.shifted_lower", r, |i| p0[i] - sh(i), |i| p[i] - sh(i)),
        strict_check("P.shifted_upper", r, |i| p[i] - sh(i), |i| p0[i]),
        strict_check("P.above_limit", r, |i| p0[i], |i| p[i]),
        strict_check("P.negative", r, |i| p[i], |_| 0.0),
        strict_check("dP.shifted", r, |i| r[i] * dp[i] - 2.0 * sh(i), |i| r[i] * dp0[i]),
        strict_check("dP.above_limit", r, |i| r[i] * dp0[i], |i| r[i] * dp[i]),
        strict_check("dP.negative", r, |i| r[i] * dp[i], |_| 0.0),
        strict_check("Q.lower", r, |i| q0[i] * (-mu * r[i] * r[i] / 2.0).exp(), |i| q[i]),
        strict_check("Q.upper", r, |i| q[i], |i| q0[i] * (-mu * (1.0 - alpha) * r[i] * r[i] / 2.0).exp()),
    ];
    let mut rep = BoundReport::from_checks(
        "profile_sandwich",
        checks,
        "strict inequalities evaluated at nodes r > 0 with slack 1e-12",
    );
    rep.fitted_constants.insert("alpha".into(), alpha);
    rep.fitted_constants.insert("mu".into(), mu);
    rep.fitted_constants.insert("eps".into(), prof.eps);
    Ok(rep)
}

/// Empirical constants of the uniform profile bounds
///
/// * `Q <= C0 e^{-mu theta r^2/2} <r>^{-4}`
/// * `sup (1/r + <r>) |P'| <= C1`
/// * `|lap P| <= C2 mu eps + C3 <r>^{-1}`
///
/// `C0` and `C1` are the smallest admissible values on the grid. `(C2, C3)`
/// come from a nonnegative least-squares fit of `|lap P|` that is then scaled
/// up uniformly until it dominates at every node.
pub fn check_uniform_bounds(prof: &RadialProfile, theta: f64) -> Result<BoundReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            reason: "must lie in (0, 1)",
        });
    }
    let r = prof.grid.nodes();
    let mu = prof.mu;
    let me = mu * prof.eps;
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    let mut q_min = f64::INFINITY;
    for i in 0..r.len() {
        let ri = r[i];
        let jp = (1.0 + ri * ri).sqrt();
        q_min = q_min.min(prof.q[i]);
        c0 = c0.max(prof.q[i] * (mu * theta * ri * ri / 2.0).exp() * jp.powi(4));
        if ri > 0.0 {
            c1 = c1.max((1.0 / ri + jp) * prof.dp[i].abs());
        }
    }
    // Near r = 0 the factor |P'|/r tends to |lap P(0)| / 2.
    c1 = c1.max(prof.lap_p[0].abs() / 2.0);

    let target: Vec<f64> = prof.lap_p.iter().map(|v| v.abs()).collect();
    let basis_b: Vec<f64> = r.iter().map(|r| 1.0 / (1.0 + r * r).sqrt()).collect();
    let (c2_ls, c3_ls) = if me > 0.0 {
        nonneg_lsq2(&target, me, &basis_b)
    } else {
        let num: f64 = target.iter().zip(&basis_b).map(|(t, b)| t * b).sum();
        let den: f64 = basis_b.iter().map(|b| b * b).sum();
        (0.0, (num / den).max(0.0))
    };
    let mut scale: f64 = 1.0;
    for i in 0..r.len() {
        let model = c2_ls * me + c3_ls * basis_b[i];
        if model > 0.0 {
            scale = scale.max(target[i] / model);
        } else if target[i] > 0.0 {
            scale = f64::INFINITY;
        }
    }
    let (c2, c3) = (c2_ls * scale, c3_ls * scale);

    let constants = [c0, c1, c2, c3];
    let checks = vec![
        InequalityCheck {
            id: "Q.nonnegative".into(),
            pass: q_min >= 0.0,
            worst_margin: q_min,
            worst_location: 0.0,
        },
        InequalityCheck {
            id: "constants.finite".into(),
            pass: constants.iter().all(|c| c.is_finite()),
            worst_margin: if constants.iter().all(|c| c.is_finite()) { 0.0 } else { -1.0 },
            worst_location: 0.0,
        },
    ];
    let mut rep = BoundReport::from_checks(
        "uniform_bounds",
        checks,
        "empirical constants; finiteness and grid stability are the verifiable content",
    );
    let fc = &mut rep.fitted_constants;
    fc.insert("C0".into(), c0);
    fc.insert("C1".into(), c1);
    fc.insert("C2".into(), c2);
    fc.insert("C3".into(), c3);
    fc.insert("C2_lsq".into(), c2_ls);
    fc.insert("C3_lsq".into(), c3_ls);
    fc.insert("theta".into(), theta);
    Ok(rep)
}

/// Nonnegative least squares for `t ~ a * c + b * basis` with constant `c`.
fn nonneg_lsq2(t: &[f64], c: f64, basis: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let s11 = n * c * c;
    let s12: f64 = basis.iter().map(|b| c * b).sum();
    let s22: f64 = basis.iter().map(|b| b * b).sum();
    let y1: f64 = t.iter().map(|t| c * t).sum();
    let y2: f64 = t.iter().zip(basis).map(|(t, b)| t * b).sum();
    let det = s11 * s22 - s12 * s12;
    let a = (y1 * s22 - y2 * s12) / det;
    let b = (s11 * y2 - s12 * y1) / det;
    if a >= 0.0 && b >= 0.0 {
        return (a, b);
    }
    let only_a = (y1 / s11).max(0.0);
    let only_b = (y2 / s22).max(0.0);
    let res = |a: f64, b: f64| -> f64 {
        t.iter().zip(basis).map(|(t, x)| (t - a * c - b * x).powi(2)).sum()
    };
    if res(only_a, 0.0) <= res(0.0, only_b) {
        (only_a, 0.0)
    } else {
        (0.0, only_b)
    }
}

/// Sup-norm deviations between two profiles with the same drift.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileDeviation {
    pub grad_p: f64,
    pub lap_p: f64,
    /// `sup |Q_a - Q_b| e^{theta mu r^2 / 2}`
    pub q: f64,
    /// `sup |Q_a' - Q_b'| e^{theta mu r^2 / 2}`
    pub grad_q: f64,
}

pub fn profile_deviation(a: &RadialProfile, b: &RadialProfile, theta: f64) -> Result<ProfileDeviation> {
    same_grid(a, b)?;
    let mu = a.mu;
    let mut d = ProfileDeviation::default();
    for (i, r) in a.grid.nodes().iter().enumerate() {
        let w = (theta * mu * r * r / 2.0).exp();
        d.grad_p = d.grad_p.max((a.dp[i] - b.dp[i]).abs());
        d.lap_p = d.lap_p.max((a.lap_p[i] - b.lap_p[i]).abs());
        d.q = d.q.max((a.q[i] - b.q[i]).abs() * w);
        d.grad_q = d.grad_q.max((a.dq[i] - b.dq[i]).abs() * w);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub mu: f64,
    pub theta: f64,
    pub eps_list: Vec<f64>,
    pub deviations: Vec<ProfileDeviation>,
    /// Log-log slope and intercept per quantity, keyed by field name.
    pub slopes: BTreeMap<String, f64>,
    pub intercepts: BTreeMap<String, f64>,
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Compares profiles at each `eps` with the `eps = 0` profile of the same
/// drift and fits log-log slopes of the deviations.
pub fn eps_convergence_study(mu: f64, eps_list: &[f64], grid: &RadialGrid, theta: f64) -> Result<ConvergenceReport> {
    if eps_list.len() < 3 {
        return Err(Error::Config(format!(
            "eps convergence study needs at least 3 values, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("eps list must be strictly decreasing".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e <= 0.05)) {
        return Err(Error::Config("eps values must lie in (0, 0.05]".into()));
    }
    let base = ModelParams::with_mu_eps(mu, 0.0)?;
    let reference = solve_profile(&base, grid)?;
    let mut deviations = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let prof = solve_profile(&ModelParams { eps, ..base }, grid)?;
        deviations.push(profile_deviation(&prof, &reference, theta)?);
    }
    let lx: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let mut slopes = BTreeMap::new();
    let mut intercepts = BTreeMap::new();
    let series: [(&str, fn(&ProfileDeviation) -> f64); 4] = [
        ("grad_p", |d| d.grad_p),
        ("lap_p", |d| d.lap_p),
        ("q", |d| d.q),
        ("grad_q", |d| d.grad_q),
    ];
    for (name, get) in series {
        let ly: Vec<f64> = deviations.iter().map(|d| get(d).ln()).collect();
        let (s, c) = linear_fit(&lx, &ly);
        slopes.insert(name.to_string(), s);
        intercepts.insert(name.to_string(), c);
    }
    Ok(ConvergenceReport {
        mu,
        theta,
        eps_list: eps_list.to_vec(),
        deviations,
        slopes,
        intercepts,
    })
}

/// One lattice point of the empirical `(eps, alpha)` frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub eps: f64,
    pub alpha: f64,
    pub pass: bool,
    pub worst_margin: f64,
}

/// Scans the sandwich chains over an `(eps, alpha)` lattice at fixed `mu`.
pub fn sandwich_frontier(mu: f64, eps_list: &[f64], alpha_list: &[f64], grid: &RadialGrid) -> Result<Vec<FrontierPoint>> {
    let limit = closed_form_limit(grid);
    let mut out = Vec::new();
    for &eps in eps_list {
        let prof = solve_profile(&ModelParams::with_mu_eps(mu, eps)?, grid)?;
        for &alpha in alpha_list {
            let rep = check_profile_sandwich(&prof, &limit, alpha)?;
            out.push(FrontierPoint {
                eps,
                alpha,
                pass: rep.pass,
                worst_margin: rep.worst_margin,
            });
        }
    }
    Ok(out)
}

/// True when a pass at `(eps, alpha)` implies a pass at every lattice point
/// with smaller or equal `eps` and larger or equal `alpha`.
pub fn frontier_is_monotone(points: &[FrontierPoint]) -> bool {
    points.iter().filter(|p| p.pass).all(|p| {
        points
            .iter()
            .filter(|q| q.eps <= p.eps && q.alpha >= p.alpha)
            .all(|q| q.pass)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(mu: f64) -> RadialGrid {
        RadialGrid::new(RadialGrid::decay_radius(mu, 0.9), 4000).unwrap()
    }

    #[test]
    fn sandwich_holds_close_to_one() {
        let g = grid(0.5);
        let prof = solve_profile(&ModelParams::with_mu_eps(0.5, 0.005).unwrap(), &g).unwrap();
        let rep = check_profile_sandwich(&prof, &closed_form_limit(&g), 0.95).unwrap();
        assert!(rep.pass, "{rep:?}");
        let small = check_profile_sandwich(&prof, &closed_form_limit(&g), 0.05).unwrap();
        assert!(!small.pass);
        assert!(small.worst_location > 0.0);
    }

    #[test]
    fn closed_form_gradient_constant() {
        let g = RadialGrid::new(40.0, 40000).unwrap();
        let rep = check_uniform_bounds(&closed_form_limit(&g), 0.9).unwrap();
        // (1/r + <r>) 4r/(1+r^2) peaks at r = 1/sqrt(3) with value 5.
        let scan = (1..200000)
            .map(|i| {
                let r = i as f64 * 1e-4;
                (1.0 / r + (1.0 + r * r).sqrt()) * 4.0 * r / (1.0 + r * r)
            })
            .fold(0.0f64, f64::max);
        assert!((rep.fitted_constants["C1"] - scan).abs() < 1e-6);
        assert!((scan - 5.0).abs() < 1e-8);
        assert!((rep.fitted_constants["C0"] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_constants_compare_across_eps() {
        let g = grid(1.0);
        let a = solve_profile(&ModelParams::with_mu_eps(1.0, 0.02).unwrap(), &g).unwrap();
        let b = solve_profile(&ModelParams::with_mu_eps(1.0, 0.005).unwrap(), &g).unwrap();
        let ra = check_uniform_bounds(&a, 0.9).unwrap();
        let rb = check_uniform_bounds(&b, 0.9).unwrap();
        assert!(ra.pass && rb.pass);
        assert!(ra.fitted_constants["C0"] <= 2.0 * rb.fitted_constants["C0"]);
    }

    #[test]
    fn identical_profiles_have_zero_deviation() {
        let g = grid(1.0);
        let a = solve_profile(&ModelParams::with_mu_eps(1.0, 0.01).unwrap(), &g).unwrap();
        assert_eq!(profile_deviation(&a, &a, 0.9).unwrap(), ProfileDeviation::default());
    }

    #[test]
    fn eps_study_rejects_short_lists() {
        let g = grid(1.0);
        assert!(eps_convergence_study(1.0, &[0.02, 0.01], &g, 0.9).is_err());
        assert!(eps_convergence_study(1.0, &[0.01, 0.02, 0.04], &g, 0.9).is_err());
    }

    #[test]
    fn linear_fit_exact() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.0, 5.0];
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (c - 1.0).abs() < 1e-14);
    }
}
