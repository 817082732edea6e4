//! `L11` restricted to angular harmonics `g(r) e^{i m theta}`.
//!
//! Cell-centred finite volumes on `[0, R]`: cell `i` is `[f_i, f_{i+1}]` with
//! centre `c_i`, volume `V_i = c_i h` (the `r dr` measure). The radial flux
//! `r (g' + mu r g - P' g - Q phi')` is evaluated at faces, with no flux
//! through `r = 0` and `r = R`, so `sum V_i (L g)_i = 0` holds exactly for
//! `m = 0`. The potential `phi` of the mode solves `-lap phi = g` with the
//! free-space Green's function of the mode.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numgrid::{ModelParams, Parity, RadialGrid};
use crate::profiles::{solve_profile, RadialProfile};
use crate::{Error, Result};

/// Default truncation radius of the mode problem for drift `mu`.
pub fn default_mode_radius(mu: f64) -> f64 {
    10.0 / mu.sqrt()
}

/// Profile data sampled at the faces and centres of a mode grid.
#[derive(Debug, Clone)]
pub struct ModeDiscretization {
    pub m: usize,
    pub mu: f64,
    pub k: f64,
    pub h: f64,
    pub centres: Vec<f64>,
    pub faces: Vec<f64>,
    pub volumes: Vec<f64>,
    q_c: Vec<f64>,
    q_f: Vec<f64>,
    dp_f: Vec<f64>,
    profile: RadialProfile,
}

impl ModeDiscretization {
    /// Solves the profile on a grid of step `h/2` so that faces and centres
    /// are both nodes.
    pub fn new(m: usize, params: &ModelParams, r_max: f64, n: usize) -> Result<Self> {
        params.validate()?;
        if n < 8 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                reason: "mode grid needs at least 8 cells",
            });
        }
        let rg = RadialGrid::new(r_max, 2 * n)?;
        let profile = solve_profile(params, &rg)?;
        Self::from_profile(m, params, profile)
    }

    /// Uses a profile whose grid has an even number of intervals; the mode
    /// grid has half as many cells.
    pub fn from_profile(m: usize, params: &ModelParams, profile: RadialProfile) -> Result<Self> {
        let two_n = profile.grid.intervals();
        if two_n % 2 != 0 {
            return Err(Error::GridMismatch("profile grid needs an even number of intervals".into()));
        }
        let n = two_n / 2;
        let h = 2.0 * profile.grid.step();
        let r = profile.grid.nodes();
        let centres: Vec<f64> = (0..n).map(|i| r[2 * i + 1]).collect();
        let faces: Vec<f64> = (0..=n).map(|j| r[2 * j]).collect();
        Ok(Self {
            m,
            mu: params.mu,
            k: params.k,
            h,
            volumes: centres.iter().map(|c| c * h).collect(),
            q_c: (0..n).map(|i| profile.q[2 * i + 1]).collect(),
            q_f: (0..=n).map(|j| profile.q[2 * j]).collect(),
            dp_f: (0..=n).map(|j| profile.dp[2 * j]).collect(),
            centres,
            faces,
            profile,
        })
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// `(d phi/dr at faces, phi at centres)` of the mode-`m` potential.
    fn potential(&self, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let (c, f, v) = (&self.centres, &self.faces, &self.volumes);
        let mut dphi = vec![0.0; n + 1];
        let mut phi = vec![0.0; n];
        if self.m == 0 {
            let mut mass = 0.0;
            for j in 1..n {
                mass += v[j - 1] * g[j - 1];
                dphi[j] = -mass / f[j];
            }
            return (dphi, phi);
        }
        let m = self.m as i32;
        // a_j = sum_{i<j} V_i c_i^m g_i, b_j = sum_{i>=j} V_i c_i^{-m} g_i
        let inner: Vec<f64> = (0..n).map(|i| v[i] * c[i].powi(m) * g[i]).collect();
        let outer: Vec<f64> = (0..n).map(|i| v[i] * c[i].powi(-m) * g[i]).collect();
        let mut a = vec![0.0; n + 1];
        for i in 0..n {
            a[i + 1] = a[i] + inner[i];
        }
        let mut b = vec![0.0; n + 1];
        for i in (0..n).rev() {
            b[i] = b[i + 1] + outer[i];
        }
        for j in 1..n {
            dphi[j] = 0.5 * (-f[j].powi(-m - 1) * a[j] + f[j].powi(m - 1) * b[j]);
        }
        for i in 0..n {
            let ai = a[i] + 0.5 * inner[i];
            let bi = b[i + 1] + 0.5 * outer[i];
            phi[i] = (c[i].powi(-m) * ai + c[i].powi(m) * bi) / (2.0 * self.m as f64);
        }
        (dphi, phi)
    }

    /// Action of the (unconjugated) mode operator on cell values.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(g.len(), n, "vector length does not match mode grid");
        let (dphi, phi) = self.potential(g);
        let (h, f) = (self.h, &self.faces);
        let mut flux = vec![0.0; n + 1];
        for j in 1..n {
            let drift = self.mu * f[j] - self.dp_f[j];
            flux[j] = f[j] * ((g[j] - g[j - 1]) / h + drift * 0.5 * (g[j - 1] + g[j]) - self.q_f[j] * dphi[j]);
        }
        let m2 = (self.m * self.m) as f64;
        (0..n)
            .map(|i| {
                let c2 = self.centres[i] * self.centres[i];
                (flux[i + 1] - flux[i]) / self.volumes[i] - m2 * g[i] / c2 + self.q_c[i] * m2 * phi[i] / c2
            })
            .collect()
    }

    /// Dense matrix of [`ModeDiscretization::apply`], assembled by columns.
    pub fn matrix(&self) -> Mat<f64> {
        let n = self.len();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.apply(&e)
            })
            .collect();
        Mat::from_fn(n, n, |i, j| cols[j][i])
    }

    /// `<c_i>^k`
    pub fn weights(&self) -> Vec<f64> {
        self.centres.iter().map(|c| (1.0 + c * c).powf(self.k / 2.0)).collect()
    }
}

/// Dense mode matrix in the conjugated variable `h = <r>^k g`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub m: usize,
    pub r_max: f64,
    pub disc: ModeDiscretization,
    /// Unconjugated matrix acting on cell values of `g`.
    pub raw: Mat<f64>,
    pub deflate: bool,
}

impl OperatorMatrix {
    /// `D raw D^{-1}` with `D = diag(<c_i>^k)`.
    pub fn conjugated(&self) -> Mat<f64> {
        let w = self.disc.weights();
        let n = w.len();
        Mat::from_fn(n, n, |i, j| w[i] * self.raw[(i, j)] / w[j])
    }

    /// `max_j |sum_i V_i A_ij| / max |A|`, zero for exact discrete mass conservation.
    pub fn mass_defect(&self) -> f64 {
        let n = self.disc.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.disc.volumes[i] * self.raw[(i, j)];
                scale = scale.max(self.raw[(i, j)].abs());
            }
            worst = worst.max((s / self.disc.volumes[j]).abs());
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Assembles the mode-`m` matrix on `n` cells of `[0, r_max]`.
pub fn assemble_mode_operator(m: i64, params: &ModelParams, r_max: f64, n: usize, deflate: bool) -> Result<OperatorMatrix> {
    if m < 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m as f64,
            reason: "negative modes are conjugates of positive ones",
        });
    }
    if deflate && m != 0 {
        return Err(Error::ContractViolation("mass deflation applies to m = 0 only".into()));
    }
    let disc = ModeDiscretization::new(m as usize, params, r_max, n)?;
    let raw = disc.matrix();
    if raw.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("non-finite mode matrix entry".into()));
    }
    Ok(OperatorMatrix {
        m: m as usize,
        r_max,
        disc,
        raw,
        deflate,
    })
}

/// Eigenvalues of one mode, sorted by real part (descending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub m: usize,
    pub deflated: bool,
    pub cells: usize,
    pub r_max: f64,
    pub eigenvalues: Vec<(f64, f64)>,
    pub gap: f64,
}

impl SpectrumReport {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues.first().map(|e| e.0).unwrap_or(f64::NEG_INFINITY)
    }

    /// Eigenvalues with real part above `threshold`.
    pub fn above(&self, threshold: f64) -> Vec<(f64, f64)> {
        self.eigenvalues.iter().cloned().filter(|e| e.0 > threshold).collect()
    }

    /// Whether the spectrum is closed under conjugation to `tol`.
    pub fn conjugation_symmetric(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|&(re, im)| {
            im == 0.0
                || self
                    .eigenvalues
                    .iter()
                    .any(|&(r2, i2)| (r2 - re).abs() <= tol * (1.0 + re.abs()) && (i2 + im).abs() <= tol * (1.0 + im.abs()))
        })
    }
}

pub const SPECTRA_CSV_SCHEMA: &str = "kssim-spectra v1";

/// Eigenvalues of several modes as CSV with columns `m,deflated,re,im`.
pub fn spectra_csv(reports: &[SpectrumReport]) -> String {
    let mut s = format!("# {SPECTRA_CSV_SCHEMA}\nm,deflated,re,im\n");
    for r in reports {
        for (re, im) in &r.eigenvalues {
            s.push_str(&format!("{},{},{re:e},{im:e}\n", r.m, r.deflated as u8));
        }
    }
    s
}

/// Parses [`spectra_csv`] output into `(m, deflated, re, im)` rows.
pub fn parse_spectra_csv(text: &str) -> Result<Vec<(usize, bool, f64, f64)>> {
    let bad = |line: &str| Error::Config(format!("malformed spectra row `{line}`"));
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 4 {
                return Err(bad(line));
            }
            let m = c[0].parse().map_err(|_| bad(line))?;
            let d = c[1] == "1";
            let re = c[2].parse().map_err(|_| bad(line))?;
            let im = c[3].parse().map_err(|_| bad(line))?;
            Ok((m, d, re, im))
        })
        .collect()
}

/// Restriction of `k` to the kernel of `l`, which it leaves invariant when
/// `l^T k = 0`. Uses a Householder reflector mapping `l` onto `e_0`.
fn deflate_mass(k: &Mat<f64>, l: &[f64]) -> Mat<f64> {
    let n = l.len();
    let norm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut u: Vec<f64> = l.iter().map(|v| v / norm).collect();
    u[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let beta = 2.0 / u.iter().map(|v| v * v).sum::<f64>();
    // H K H restricted to the last n - 1 rows and columns.
    let mut kh = k.clone();
    for i in 0..n {
        let s: f64 = (0..n).map(|j| kh[(i, j)] * u[j]).sum::<f64>() * beta;
        for j in 0..n {
            kh[(i, j)] -= s * u[j];
        }
    }
    for j in 0..n {
        let s: f64 = (0..n).map(|i| u[i] * kh[(i, j)]).sum::<f64>() * beta;
        for i in 0..n {
            kh[(i, j)] -= s * u[i];
        }
    }
    Mat::from_fn(n - 1, n - 1, |i, j| kh[(i + 1, j + 1)])
}

pub fn spectrum(opm: &OperatorMatrix) -> Result<SpectrumReport> {
    let mut k = opm.conjugated();
    if opm.deflate {
        let w = opm.disc.weights();
        let l: Vec<f64> = opm.disc.volumes.iter().zip(&w).map(|(v, w)| v / w).collect();
        k = deflate_mass(&k, &l);
    }
    let ev = k.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let mut eigenvalues: Vec<(f64, f64)> = ev.iter().map(|z| (z.re, z.im)).collect();
    if eigenvalues.iter().any(|e| !e.0.is_finite() || !e.1.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    eigenvalues.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let lead = if opm.m == 0 && !opm.deflate { 1 } else { 0 };
    let gap = -eigenvalues.get(lead).map(|e| e.0).unwrap_or(f64::NEG_INFINITY);
    Ok(SpectrumReport {
        m: opm.m,
        deflated: opm.deflate,
        cells: opm.disc.len(),
        r_max: opm.r_max,
        eigenvalues,
        gap,
    })
}

/// Eigenvalue shift under doubling the number of cells, restricted to
/// eigenvalues with real part above `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub coarse: SpectrumReport,
    pub fine: SpectrumReport,
    pub threshold: f64,
    pub max_shift: f64,
}

pub fn spectrum_refinement(m: i64, params: &ModelParams, r_max: f64, n: usize, deflate: bool, threshold: f64) -> Result<RefinementCheck> {
    let coarse = spectrum(&assemble_mode_operator(m, params, r_max, n, deflate)?)?;
    let fine = spectrum(&assemble_mode_operator(m, params, r_max, 2 * n, deflate)?)?;
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let nearest = |e: (f64, f64), set: &[(f64, f64)]| set.iter().map(|&f| dist(e, f)).fold(f64::INFINITY, f64::min);
    let mut max_shift: f64 = 0.0;
    for e in coarse.above(threshold) {
        max_shift = max_shift.max(nearest(e, &fine.eigenvalues));
    }
    for e in fine.above(threshold) {
        max_shift = max_shift.max(nearest(e, &coarse.eigenvalues));
    }
    Ok(RefinementCheck {
        coarse,
        fine,
        threshold,
        max_shift,
    })
}

/// `||(A + mu) v||_{L^2_k} / ||v||_{L^2_k}` for the radial part `v = Q'` of the
/// translation mode, using the `m = 1` operator.
pub fn translation_residual(disc: &ModeDiscretization) -> Result<f64> {
    if disc.m != 1 {
        return Err(Error::ContractViolation("translation mode lives in m = 1".into()));
    }
    let prof = disc.profile();
    let v: Vec<f64> = disc
        .centres
        .iter()
        .map(|&r| prof.grid.interpolate(&prof.dq, r, Parity::Odd))
        .collect();
    let av = disc.apply(&v);
    let w = disc.weights();
    let norm = |x: &dyn Fn(usize) -> f64| {
        (0..v.len())
            .map(|i| disc.volumes[i] * (w[i] * x(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let num = norm(&|i| av[i] + disc.mu * v[i]);
    let den = norm(&|i| v[i]);
    Ok(num / den)
}

/// Evaluates the trigonometric interpolant of a planar field at `(x, y)`.
pub fn spectral_eval(f: &crate::numgrid::Field, x: f64, y: f64) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let l = grid.half_width();
    let k = grid.wavenumbers();
    let ex: Vec<Complex64> = k.iter().map(|kx| Complex64::from_polar(1.0, kx * (x + l))).collect();
    let ey: Vec<Complex64> = k.iter().map(|ky| Complex64::from_polar(1.0, ky * (y + l))).collect();
    let s = f.spectrum();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += s[i * n + j] * ey[j];
        }
        acc += row * ex[i];
    }
    acc.re / (grid.cell_area() * (n * n) as f64)
}

/// Relative energy of a planar field outside the angular harmonics `+-m`,
/// sampled on circles of the given radii.
pub fn angular_leakage(f: &crate::numgrid::Field, m: usize, radii: &[f64], n_theta: usize) -> f64 {
    let mut inside = 0.0;
    let mut outside = 0.0;
    for &r in radii {
        let vals: Vec<f64> = (0..n_theta)
            .into_par_iter()
            .map(|t| {
                let th = std::f64::consts::TAU * t as f64 / n_theta as f64;
                spectral_eval(f, r * th.cos(), r * th.sin())
            })
            .collect();
        for mm in 0..=n_theta / 2 {
            let c: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -std::f64::consts::TAU * (mm * t) as f64 / n_theta as f64))
                .sum();
            if mm == m {
                inside += c.norm_sqr();
            } else {
                outside += c.norm_sqr();
            }
        }
    }
    if inside + outside == 0.0 {
        0.0
    } else {
        (outside / (inside + outside)).sqrt()
    }
}

/// Relative max difference between the mode operator and the planar `L11`
/// on `g = r^m (1 - a r^2) e^{-r^2} cos(m theta)`, compared on the positive
/// x-axis for `r <= r_cmp`.
///
/// The cell size is `h = 2 dx / q` with `q` odd, so every odd planar node
/// `j dx` is the centre of cell `(q j - 1) / 2`; the radial side is
/// Richardson extrapolated from `n` and `3 n` cells, whose centres coincide.
pub fn planar_cross_check(sys: &super::LinearizedSystem, m: usize, r_max: f64, q: usize, r_cmp: f64) -> Result<f64> {
    let params = *sys.params();
    let dx = sys.grid().dx();
    let cells = r_max / (2.0 * dx) * q as f64;
    if q % 2 == 0 || (cells - cells.round()).abs() > 1e-9 {
        return Err(Error::GridMismatch("r_max q / (2 dx) must be an integer and q odd".into()));
    }
    let n = cells.round() as usize;
    let a = if m == 0 { 1.0 } else { 0.3 };
    let radial = |r: f64| r.powi(m as i32) * (1.0 - a * r * r) * (-r * r).exp();
    let coarse = ModeDiscretization::new(m, &params, r_max, n)?;
    let fine = ModeDiscretization::new(m, &params, r_max, 3 * n)?;
    let lc = coarse.apply(&coarse.centres.iter().map(|&r| radial(r)).collect::<Vec<_>>());
    let lf = fine.apply(&fine.centres.iter().map(|&r| radial(r)).collect::<Vec<_>>());
    let mi = m as i32;
    let g = crate::numgrid::Field::from_fn(sys.grid(), |x, y| {
        let z = Complex64::new(x, y).powi(mi).re;
        let r2 = x * x + y * y;
        z * (1.0 - a * r2) * (-r2).exp()
    })?;
    let planar = sys.apply_l11(&g)?;
    let grid = sys.grid();
    let half = grid.n() / 2;
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut j = 1;
    while j as f64 * dx <= r_cmp && half + j < grid.n() {
        let i = (q * j - 1) / 2;
        let extrapolated = (9.0 * lf[3 * i + 1] - lc[i]) / 8.0;
        // node (x, y) = (j dx, 0)
        let p = planar.values()[(half + j) * grid.n() + half];
        diff = diff.max((p - extrapolated).abs());
        scale = scale.max(p.abs());
        j += 2;
    }
    Ok(diff / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn mass_is_conserved_for_m0() {
        let op = assemble_mode_operator(0, &params(), 10.0, 200, false).unwrap();
        assert!(op.mass_defect() <= 1e-8, "{}", op.mass_defect());
    }

    #[test]
    fn mass_mode_and_deflation() {
        let op = assemble_mode_operator(0, &params(), 10.0, 200, false).unwrap();
        let s = spectrum(&op).unwrap();
        assert!(s.eigenvalues[0].0.abs() <= 1e-6, "{:?}", &s.eigenvalues[..3]);
        assert!(s.conjugation_symmetric(1e-8));
        let d = spectrum(&assemble_mode_operator(0, &params(), 10.0, 200, true).unwrap()).unwrap();
        assert_eq!(d.eigenvalues.len(), 199);
        assert!((d.eigenvalues[0].0 - s.eigenvalues[1].0).abs() < 1e-8);
        assert!(d.max_real() <= -0.9);
    }

    #[test]
    fn negative_mode_is_rejected() {
        assert!(assemble_mode_operator(-1, &params(), 10.0, 50, false).is_err());
        assert!(assemble_mode_operator(1, &params(), 10.0, 50, true).is_err());
    }

    #[test]
    fn translation_mode_residual_is_small() {
        let d = ModeDiscretization::new(1, &params(), 10.0, 400).unwrap();
        let r = translation_residual(&d).unwrap();
        assert!(r < 0.05, "{r}");
    }

    #[test]
    fn poisson_mode_solve_matches_closed_form() {
        // g = r^2 e^{-r^2} in mode 2: phi' at faces against a fine quadrature.
        let p = params();
        let d = ModeDiscretization::new(2, &p, 8.0, 800).unwrap();
        let g: Vec<f64> = d.centres.iter().map(|r| r * r * (-r * r).exp()).collect();
        let (_, phi) = d.potential(&g);
        // -phi'' - phi'/r + 4 phi / r^2 = g checked by second differences.
        let h = d.h;
        let mut err: f64 = 0.0;
        for i in 1..d.len() - 1 {
            let r = d.centres[i];
            if r > 5.0 {
                break;
            }
            let lap = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h) + (phi[i + 1] - phi[i - 1]) / (2.0 * h * r)
                - 4.0 * phi[i] / (r * r);
            err = err.max((-lap - g[i]).abs());
        }
        assert!(err < 1e-3, "{err}");
    }
}
