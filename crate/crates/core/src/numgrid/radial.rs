//! Uniform radial grids on `[0, r_max]` with composite Newton-Cotes weights.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Composite rule used for the grid's quadrature weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadRule {
    Simpson,
    /// Composite Boole rule; needs the interval count to be a multiple of 4.
    Boole,
}

/// Parity of a radial function under `r -> -r`, used when interpolating
/// next to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Measure against which a radial integrand is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// `dr`
    Line,
    /// `r dr`
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadWarningKind {
    Truncation,
    Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadWarning {
    pub kind: QuadWarningKind,
    pub estimated_rel_error: f64,
}

/// Integral value together with a-posteriori error estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    /// `|I_n - I_{n/2}|`, zero when the half grid does not admit the rule.
    pub resolution_error: f64,
    /// Exponential-tail extrapolation of the integrand beyond `r_max`.
    pub truncation_error: f64,
    pub warning: Option<QuadWarning>,
}

/// Relative error above which [`RadialGrid::integrate_checked`] warns.
pub const QUAD_WARN_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r: Vec<f64>,
    h: f64,
    weights: Vec<f64>,
    rule: QuadRule,
}

impl RadialGrid {
    /// Uniform grid with `n` intervals. Uses Boole weights when `n` is a
    /// multiple of 4 and Simpson weights otherwise.
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        let rule = if n % 4 == 0 {
            QuadRule::Boole
        } else {
            QuadRule::Simpson
        };
        Self::with_rule(r_max, n, rule)
    }

    pub fn with_rule(r_max: f64, n: usize, rule: QuadRule) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Config(format!("radial grid needs r_max > 0, got {r_max}")));
        }
        if n < 16 {
            return Err(Error::Config(format!(
                "radial grid needs at least 16 intervals, got {n}"
            )));
        }
        match rule {
            QuadRule::Simpson if n % 2 != 0 => {
                return Err(Error::Config(format!(
                    "Simpson weights need an even interval count, got {n}"
                )))
            }
            QuadRule::Boole if n % 4 != 0 => {
                return Err(Error::Config(format!(
                    "Boole weights need an interval count divisible by 4, got {n}"
                )))
            }
            _ => {}
        }
        let h = r_max / n as f64;
        let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let weights = composite_weights(n, h, rule);
        Ok(Self { r, h, weights, rule })
    }

    /// Smallest `r_max` with `exp(-theta mu r_max^2 / 2) < 1e-12`.
    pub fn decay_radius(mu: f64, theta: f64) -> f64 {
        (2.0 * 1e12f64.ln() / (theta * mu)).sqrt() * 1.001
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("grid has nodes")
    }

    /// Number of nodes, `intervals() + 1`.
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.r.len() - 1
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
    }

    /// Weights for `\int_0^{r_max} f(r) dr`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `\int_0^{r_max} f(r) dr` from node values.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.r.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `\int_0^{r_max} f(r) r dr` from node values.
    pub fn integrate_r(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.r.len());
        self.weights
            .iter()
            .zip(f)
            .zip(&self.r)
            .map(|((w, v), r)| w * v * r)
            .sum()
    }

    /// Integrates a closure and estimates both the resolution error (by
    /// comparison with the half grid) and the truncation error beyond
    /// `r_max`. A warning is attached when either estimate exceeds
    /// [`QUAD_WARN_THRESHOLD`] relative to the value.
    pub fn integrate_checked(&self, f: impl Fn(f64) -> f64, measure: Measure) -> QuadEstimate {
        let vals: Vec<f64> = self
            .r
            .iter()
            .map(|&r| match measure {
                Measure::Line => f(r),
                Measure::Radial => f(r) * r,
            })
            .collect();
        let value = self.integrate(&vals);
        let n = self.intervals();

        let resolution_error = if n % 4 == 0 {
            let coarse: Vec<f64> = vals.iter().step_by(2).copied().collect();
            let w = composite_weights(n / 2, 2.0 * self.h, QuadRule::Simpson);
            let coarse_value: f64 = w.iter().zip(&coarse).map(|(a, b)| a * b).sum();
            (value - coarse_value).abs()
        } else {
            0.0
        };

        let last = vals[n];
        let prev = vals[n - 1];
        let truncation_error = if last == 0.0 {
            0.0
        } else {
            let decay_length = if last.signum() == prev.signum() && last.abs() < prev.abs() {
                let rate = -(last / prev).ln() / self.h;
                (1.0 / rate).min(self.r_max().max(1.0) * 1e6)
            } else {
                self.r_max().max(1.0)
            };
            last.abs() * decay_length
        };

        let scale = value.abs().max(f64::MIN_POSITIVE);
        let warning = if truncation_error / scale > QUAD_WARN_THRESHOLD {
            Some(QuadWarning {
                kind: QuadWarningKind::Truncation,
                estimated_rel_error: truncation_error / scale,
            })
        } else if resolution_error / scale > QUAD_WARN_THRESHOLD {
            Some(QuadWarning {
                kind: QuadWarningKind::Resolution,
                estimated_rel_error: resolution_error / scale,
            })
        } else {
            None
        };
        QuadEstimate {
            value,
            resolution_error,
            truncation_error,
            warning,
        }
    }

    /// Running integral `F_i = \int_0^{r_i} f dr` with a fourth-order
    /// (cubic-interpolation) rule on each interval.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        cumulative_integral(f, self.h)
    }

    /// Six-point Lagrange interpolation of node values at radius `r`,
    /// reflecting through the origin according to `parity`.
    pub fn interpolate(&self, values: &[f64], r: f64, parity: Parity) -> f64 {
        debug_assert_eq!(values.len(), self.r.len());
        let n = self.intervals() as isize;
        let t = r / self.h;
        let base = (t.floor() as isize).clamp(0, n - 1);
        // Stencil nodes base-2 ..= base+3, shifted inward at the outer end.
        let mut start = base - 2;
        if start + 5 > n {
            start = n - 5;
        }
        let sample = |j: isize| -> f64 {
            if j >= 0 {
                values[j as usize]
            } else {
                match parity {
                    Parity::Even => values[(-j) as usize],
                    Parity::Odd => -values[(-j) as usize],
                }
            }
        };
        let mut acc = 0.0;
        for a in 0..6 {
            let ja = start + a;
            let mut basis = 1.0;
            for b in 0..6 {
                if a != b {
                    let jb = start + b;
                    basis *= (t - jb as f64) / ((ja - jb) as f64);
                }
            }
            acc += basis * sample(ja);
        }
        acc
    }
}

fn composite_weights(n: usize, h: f64, rule: QuadRule) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    match rule {
        QuadRule::Simpson => {
            for p in (0..n).step_by(2) {
                w[p] += h / 3.0;
                w[p + 1] += 4.0 * h / 3.0;
                w[p + 2] += h / 3.0;
            }
        }
        QuadRule::Boole => {
            let c = 2.0 * h / 45.0;
            for p in (0..n).step_by(4) {
                w[p] += 7.0 * c;
                w[p + 1] += 32.0 * c;
                w[p + 2] += 12.0 * c;
                w[p + 3] += 32.0 * c;
                w[p + 4] += 7.0 * c;
            }
        }
    }
    w
}

/// Fourth-order running integral of uniformly sampled values.
pub(crate) fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let len = f.len();
    assert!(len >= 4, "cumulative integral needs at least 4 samples");
    let n = len - 1;
    let mut out = vec![0.0; len];
    let c = h / 24.0;
    for i in 0..n {
        let seg = if i == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 1 {
            c * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
        } else {
            c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + seg;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_line_integral() {
        let g = RadialGrid::new(10.0, 4000).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let exact = PI.sqrt() / 2.0;
        assert!((g.integrate(&vals) - exact).abs() / exact <= 1e-10);
    }

    #[test]
    fn gaussian_radial_integral() {
        let g = RadialGrid::new(10.0, 4000).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        assert!((g.integrate_r(&vals) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn critical_mass_density_with_analytic_tail() {
        // \int_0^R 8 r / (1 + r^2)^2 dr = 4 - 4 / (1 + R^2)
        let g = RadialGrid::new(10.0, 4000).unwrap();
        let q: Vec<f64> = g
            .nodes()
            .iter()
            .map(|r| 8.0 / (1.0 + r * r).powi(2))
            .collect();
        let tail = 4.0 / (1.0 + 100.0);
        assert!((g.integrate_r(&q) + tail - 4.0).abs() < 1e-12);
        let est = g.integrate_checked(|r| 8.0 / (1.0 + r * r).powi(2), Measure::Radial);
        // Algebraic tail beyond r_max is flagged.
        assert!(est.warning.is_some());
    }

    #[test]
    fn truncated_slow_gaussian_warns() {
        let g = RadialGrid::new(1.0, 16).unwrap();
        let est = g.integrate_checked(|r| (-r * r / 100.0).exp(), Measure::Line);
        // High-resolution oracle on a domain where the integrand has decayed.
        let fine = RadialGrid::new(80.0, 64000).unwrap();
        let oracle: f64 = fine.integrate(
            &fine
                .nodes()
                .iter()
                .map(|r| (-r * r / 100.0).exp())
                .collect::<Vec<_>>(),
        );
        let rel = (est.value - oracle).abs() / oracle;
        assert!(rel > 1e-3);
        let w = est.warning.expect("warning expected");
        assert_eq!(w.kind, QuadWarningKind::Truncation);
    }

    #[test]
    fn decaying_integrand_does_not_warn() {
        let g = RadialGrid::new(10.0, 4000).unwrap();
        let est = g.integrate_checked(|r| (-r * r).exp(), Measure::Radial);
        assert!(est.warning.is_none());
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(RadialGrid::new(10.0, 8).is_err());
        assert!(RadialGrid::with_rule(10.0, 21, QuadRule::Simpson).is_err());
        assert!(RadialGrid::with_rule(10.0, 18, QuadRule::Boole).is_err());
        assert!(RadialGrid::new(-1.0, 100).is_err());
        assert_eq!(RadialGrid::new(1.0, 18).unwrap().rule(), QuadRule::Simpson);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let g = RadialGrid::new(5.0, 1000).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| r * (-r * r).exp()).collect();
        let c = g.cumulative(&f);
        for (r, ci) in g.nodes().iter().zip(&c) {
            let exact = 0.5 * (1.0 - (-r * r).exp());
            assert!((ci - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolation_respects_parity() {
        let g = RadialGrid::new(6.0, 600).unwrap();
        let even: Vec<f64> = g.nodes().iter().map(|r| (0.5 * r * r).cos()).collect();
        let odd: Vec<f64> = g.nodes().iter().map(|r| r.sin()).collect();
        for &r in &[0.0, 0.003, 0.0101, 1.2345, 5.999, 6.0] {
            assert!((g.interpolate(&even, r, Parity::Even) - (0.5 * r * r).cos()).abs() < 1e-9);
            assert!((g.interpolate(&odd, r, Parity::Odd) - r.sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn decay_radius_meets_threshold() {
        let r = RadialGrid::decay_radius(0.5, 0.9);
        assert!((-0.9 * 0.5 * r * r / 2.0).exp() < 1e-12);
    }
}
