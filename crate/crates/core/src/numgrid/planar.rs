//! Periodic planar grids, scalar fields with cached spectra, and states.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Square periodic box `[-L, L)^2` with `N x N` nodes.
///
/// Spectra use the continuum scaling `f_hat = dx^2 * DFT(f)`, so that
/// `dxi^2 * sum |f_hat|^2 = (2 pi)^2 * dx^2 * sum |f|^2`. The phase from the
/// box offset is dropped; it cancels in every multiplier and pairing.
pub struct PlanarGrid {
    n: usize,
    half_width: f64,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PlanarGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarGrid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl PartialEq for PlanarGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

impl PlanarGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Arc<Self>> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(format!("planar half-width must be positive, got {half_width}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!("planar resolution must be even and >= 8, got {n}")));
        }
        let dx = 2.0 * half_width / n as f64;
        let nodes = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        let dk = std::f64::consts::PI / half_width;
        let wavenumbers = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            n,
            half_width,
            dx,
            nodes,
            wavenumbers,
            fwd,
            inv,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Wavenumber spacing `pi / L`.
    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// One-dimensional node coordinates, shared by both axes.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// One-dimensional wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Physical coordinates of flat index `idx` (row `i` is the x index).
    pub fn point(&self, idx: usize) -> (f64, f64) {
        (self.nodes[idx / self.n], self.nodes[idx % self.n])
    }

    /// Wavevector of flat spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        (self.wavenumbers[idx / self.n], self.wavenumbers[idx % self.n])
    }

    /// Signed integer lattice index of flat spectral index `idx`.
    pub fn lattice_index(&self, idx: usize) -> (i64, i64) {
        let h = |i: usize| {
            if i < self.n / 2 {
                i as i64
            } else {
                i as i64 - self.n as i64
            }
        };
        (h(idx / self.n), h(idx % self.n))
    }

    /// Flat spectral index of the lattice point `(a, b)`.
    pub fn spectral_index(&self, a: i64, b: i64) -> usize {
        let n = self.n as i64;
        (a.rem_euclid(n) * n + b.rem_euclid(n)) as usize
    }

    /// Quadrature weight of every node, `dx^2`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    /// Samples a function of `(x, y)` on the nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &x in &self.nodes {
            for &y in &self.nodes {
                out.push(f(x, y));
            }
        }
        out
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Continuum-scaled forward transform of real node values.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len(), "field size does not match grid");
        let a = self.cell_area();
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v * a, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    /// Inverse of [`PlanarGrid::forward`], keeping the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut data = spectrum.to_vec();
        self.inverse_in_place(&mut data);
        data.iter().map(|c| c.re).collect()
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len(), "spectrum size does not match grid");
        self.transform(data, &self.inv);
        let scale = 1.0 / (self.cell_area() * self.len() as f64);
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// `|xi|^2` for every spectral index.
    pub fn xi_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.wavevector(i);
                a * a + b * b
            })
            .collect()
    }

    /// Multiplier of `d/dx` and `d/dy`, with the unpaired Nyquist entries set to
    /// zero so derivatives of real fields stay real.
    pub fn derivative_symbols(&self) -> (Vec<f64>, Vec<f64>) {
        let half = self.n / 2;
        let k1 = |i: usize| if i == half { 0.0 } else { self.wavenumbers[i] };
        let mut sx = Vec::with_capacity(self.len());
        let mut sy = Vec::with_capacity(self.len());
        for i in 0..self.n {
            for j in 0..self.n {
                sx.push(k1(i));
                sy.push(k1(j));
            }
        }
        (sx, sy)
    }

    /// Isotropic two-thirds mask: keeps lattice indices with `|m| < N/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = self.n as f64 / 3.0;
        (0..self.len())
            .map(|i| {
                let (a, b) = self.lattice_index(i);
                (((a * a + b * b) as f64).sqrt()) < cut
            })
            .collect()
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Real scalar field on a [`PlanarGrid`] with a write-once spectral cache.
#[derive(Clone)]
pub struct Field {
    grid: Arc<PlanarGrid>,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl Field {
    pub fn zeros(grid: &Arc<PlanarGrid>) -> Self {
        Self::from_values_unchecked(grid, vec![0.0; grid.len()])
    }

    pub fn from_fn(grid: &Arc<PlanarGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.sample(f))
    }

    pub fn from_values(grid: &Arc<PlanarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite field value {v}")));
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub(crate) fn from_values_unchecked(grid: &Arc<PlanarGrid>, values: Vec<f64>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Field whose spectrum is `spectrum` (assumed Hermitian); the cache is
    /// filled with the transform of the resulting real values.
    pub fn from_spectrum(grid: &Arc<PlanarGrid>, spectrum: &[Complex64]) -> Self {
        Self::from_values_unchecked(grid, grid.inverse(spectrum))
    }

    pub fn grid(&self) -> &Arc<PlanarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `\int f dx` over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.grid.cell_area()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain `L^2` inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_area()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpby(1.0, other, -1.0)
    }

    /// Pointwise product, without dealiasing.
    pub fn mul(&self, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    /// Multiplies by a function of position.
    pub fn mul_fn(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (x, y) = self.grid.point(i);
                v * f(x, y)
            })
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    /// Applies a Fourier multiplier `m(xi_x, xi_y)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64, f64) -> Complex64) -> Field {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (a, b) = self.grid.wavevector(i);
                c * m(a, b)
            })
            .collect();
        Self::from_spectrum(&self.grid, &spec)
    }

    pub fn gradient(&self) -> VecField {
        let (sx, sy) = self.grid.derivative_symbols();
        let spec = self.spectrum();
        let gx: Vec<Complex64> = spec.iter().zip(&sx).map(|(c, k)| c * Complex64::new(0.0, *k)).collect();
        let gy: Vec<Complex64> = spec.iter().zip(&sy).map(|(c, k)| c * Complex64::new(0.0, *k)).collect();
        VecField {
            x: Self::from_spectrum(&self.grid, &gx),
            y: Self::from_spectrum(&self.grid, &gy),
        }
    }

    pub fn laplacian(&self) -> Field {
        self.apply_multiplier(|a, b| Complex64::new(-(a * a + b * b), 0.0))
    }

    /// Copy with the zero Fourier mode removed, i.e. the mean subtracted.
    pub fn mean_free(&self) -> Field {
        let mean = self.values.iter().sum::<f64>() / self.values.len() as f64;
        self.map(|v| v - mean)
    }

    /// Fraction of the `L^2` norm carried outside the disc `|x| <= radius`.
    pub fn outer_fraction(&self, radius: f64) -> f64 {
        let total = self.values.iter().map(|v| v * v).sum::<f64>();
        if total == 0.0 {
            return 0.0;
        }
        let r2 = radius * radius;
        let outer: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let (x, y) = self.grid.point(*i);
                x * x + y * y > r2
            })
            .map(|(_, v)| v * v)
            .sum();
        (outer / total).sqrt()
    }
}

/// Pair of fields representing a planar vector field.
#[derive(Debug, Clone)]
pub struct VecField {
    pub x: Field,
    pub y: Field,
}

impl VecField {
    pub fn zeros(grid: &Arc<PlanarGrid>) -> Self {
        Self {
            x: Field::zeros(grid),
            y: Field::zeros(grid),
        }
    }

    /// Spectral divergence.
    pub fn divergence(&self) -> Field {
        let grid = self.x.grid();
        let (sx, sy) = grid.derivative_symbols();
        let spec: Vec<Complex64> = self
            .x
            .spectrum()
            .iter()
            .zip(self.y.spectrum())
            .zip(sx.iter().zip(&sy))
            .map(|((a, b), (kx, ky))| Complex64::new(0.0, 1.0) * (a * kx + b * ky))
            .collect();
        Field::from_spectrum(grid, &spec)
    }

    /// Spectral curl `d_x v_y - d_y v_x`.
    pub fn curl(&self) -> Field {
        let grid = self.x.grid();
        let (sx, sy) = grid.derivative_symbols();
        let spec: Vec<Complex64> = self
            .y
            .spectrum()
            .iter()
            .zip(self.x.spectrum())
            .zip(sx.iter().zip(&sy))
            .map(|((vy, vx), (kx, ky))| Complex64::new(0.0, 1.0) * (vy * kx - vx * ky))
            .collect();
        Field::from_spectrum(grid, &spec)
    }

    pub fn scale(&self, c: f64) -> VecField {
        VecField {
            x: self.x.scale(c),
            y: self.y.scale(c),
        }
    }

    /// Pointwise `|v|^2` integrated against `weight`.
    pub fn weighted_square_integral(&self, weight: &Field) -> f64 {
        let a = self.x.grid().cell_area();
        self.x
            .values()
            .iter()
            .zip(self.y.values())
            .zip(weight.values())
            .map(|((u, v), w)| w * (u * u + v * v))
            .sum::<f64>()
            * a
    }

    pub fn l2_norm(&self) -> f64 {
        (self.x.l2_norm().powi(2) + self.y.l2_norm().powi(2)).sqrt()
    }
}

/// Perturbation pair `(g, w)` with mean-zero `g`.
#[derive(Debug, Clone)]
pub struct State {
    pub g: Field,
    pub w: Field,
}

/// Tolerance on `|mass(g)|` relative to `max(1, ||g||_{L^1})`.
pub const MEAN_ZERO_TOL: f64 = 1e-12;

impl State {
    pub fn new(g: Field, w: Field) -> Result<Self> {
        if !g.same_grid(&w) {
            return Err(Error::GridMismatch("g and w live on different grids".into()));
        }
        let mass = g.integral();
        if mass.abs() > MEAN_ZERO_TOL * g.l1_norm().max(1.0) {
            return Err(Error::ContractViolation(format!(
                "g must have zero mass, got {mass:e}"
            )));
        }
        Ok(Self { g, w })
    }

    /// Builds a state after removing the mean of `g`.
    pub fn projected(g: Field, w: Field) -> Result<Self> {
        Self::new(g.mean_free(), w)
    }

    pub fn zeros(grid: &Arc<PlanarGrid>) -> Self {
        Self {
            g: Field::zeros(grid),
            w: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<PlanarGrid> {
        self.g.grid()
    }

    pub fn scale(&self, c: f64) -> State {
        State {
            g: self.g.scale(c),
            w: self.w.scale(c),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.g.values().iter().chain(self.w.values()).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump(x: f64, y: f64) -> f64 {
        (-(x - 0.3) * (x - 0.3) - 2.0 * y * y).exp() * (1.0 + 0.5 * x * y)
    }

    #[test]
    fn round_trip_and_parseval() {
        for &(l, n) in &[(8.0, 64), (16.0, 128), (16.0, 256)] {
            let grid = PlanarGrid::new(l, n).unwrap();
            let f = Field::from_fn(&grid, bump).unwrap();
            let back = grid.inverse(f.spectrum());
            let err = back
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-12 * f.max_abs());
            let dk2 = grid.dk() * grid.dk();
            let spec_sq: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() * dk2;
            let phys = f.l2_norm().powi(2);
            assert!((spec_sq / (4.0 * PI * PI) - phys).abs() <= 1e-12 * phys);
        }
    }

    #[test]
    fn spectral_derivatives_of_gaussian() {
        let grid = PlanarGrid::new(10.0, 128).unwrap();
        let f = Field::from_fn(&grid, |x, y| (-(x * x + y * y)).exp()).unwrap();
        let lap = f.laplacian();
        let grad = f.gradient();
        for i in (0..grid.len()).step_by(97) {
            let (x, y) = grid.point(i);
            let r2 = x * x + y * y;
            let e = (-r2).exp();
            assert!((lap.values()[i] - (4.0 * r2 - 4.0) * e).abs() < 1e-10);
            assert!((grad.x.values()[i] + 2.0 * x * e).abs() < 1e-10);
        }
        assert!(grad.curl().max_abs() < 1e-12);
    }

    #[test]
    fn lattice_index_round_trip() {
        let grid = PlanarGrid::new(4.0, 16).unwrap();
        for idx in 0..grid.len() {
            let (a, b) = grid.lattice_index(idx);
            assert_eq!(grid.spectral_index(a, b), idx);
        }
    }

    #[test]
    fn state_requires_zero_mass() {
        let grid = PlanarGrid::new(8.0, 32).unwrap();
        let g = Field::from_fn(&grid, |x, y| (-(x * x + y * y)).exp()).unwrap();
        let w = Field::zeros(&grid);
        assert!(matches!(State::new(g.clone(), w.clone()), Err(Error::ContractViolation(_))));
        let st = State::projected(g, w).unwrap();
        assert!(st.g.integral().abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_grids_and_values() {
        assert!(PlanarGrid::new(1.0, 7).is_err());
        assert!(PlanarGrid::new(0.0, 16).is_err());
        let grid = PlanarGrid::new(1.0, 8).unwrap();
        assert!(Field::from_values(&grid, vec![f64::NAN; 64]).is_err());
        assert!(Field::from_values(&grid, vec![0.0; 10]).is_err());
    }
}
