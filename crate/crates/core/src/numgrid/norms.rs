//! Weighted Lebesgue/Sobolev norms and homogeneous Sobolev seminorms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::planar::{Field, PlanarGrid, State};
use super::zeta::epstein_square;
use super::ModelParams;
use crate::{Error, Result};

/// `<x> = sqrt(1 + |x|^2)`
#[inline]
pub fn japanese(x: f64, y: f64) -> f64 {
    (1.0 + x * x + y * y).sqrt()
}

/// `(l2k, h1k, hm1k)` of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    pub l2k: f64,
    pub h1k: f64,
    pub hm1k: f64,
}

/// `||<x>^k f||_{L^2}`.
pub fn l2k_norm(f: &Field, k: f64) -> f64 {
    weighted_square(f.values(), f.grid(), k).sqrt()
}

fn weighted_square(values: &[f64], grid: &PlanarGrid, k: f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x, y) = grid.point(i);
            (1.0 + x * x + y * y).powf(k) * v * v
        })
        .sum::<f64>()
        * grid.cell_area()
}

/// `L^2_k`, `H^1_k` and `H^{-1}_k` norms.
///
/// `H^1_k` sums the squared weighted norms of `f` and its first derivatives.
/// `H^{-1}_k` is `||<x>^k f||_{H^{-1}}` with the Fourier multiplier
/// `(1 + |xi|^2)^{-1/2}`, normalised by `(2 pi)^{-1}` so that it is dominated
/// by `l2k`.
pub fn weighted_norms(f: &Field, k: f64) -> Result<WeightedNorms> {
    if !(k >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "weight exponent must be nonnegative",
        });
    }
    if f.is_zero() {
        return Ok(WeightedNorms { l2k: 0.0, h1k: 0.0, hm1k: 0.0 });
    }
    let grid = f.grid();
    let l2 = weighted_square(f.values(), grid, k);
    let grad = f.gradient();
    let h1 = l2 + weighted_square(grad.x.values(), grid, k) + weighted_square(grad.y.values(), grid, k);
    let weighted = f.mul_fn(|x, y| japanese(x, y).powf(k));
    let dk2 = grid.dk() * grid.dk();
    let hm1 = weighted
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (a, b) = grid.wavevector(i);
            c.norm_sqr() / (1.0 + a * a + b * b)
        })
        .sum::<f64>()
        * dk2
        / (4.0 * PI * PI);
    Ok(WeightedNorms {
        l2k: l2.sqrt(),
        h1k: h1.sqrt(),
        hm1k: hm1.sqrt(),
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=2.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "homogeneous index {sigma} outside [0, 2]"
        )))
    }
}

fn is_integer(sigma: f64) -> bool {
    (sigma - sigma.round()).abs() < 1e-14
}

/// Raw lattice sum `dxi^2 sum |xi|^{2 sigma} Re(a_hat conj(b_hat))`.
pub fn lattice_pairing_spectra(grid: &PlanarGrid, a: &[Complex64], b: &[Complex64], sigma: f64) -> f64 {
    let dk2 = grid.dk() * grid.dk();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let (p, q) = grid.wavevector(i);
            let k2 = p * p + q * q;
            let w = if sigma == 0.0 { 1.0 } else if k2 == 0.0 { 0.0 } else { k2.powf(sigma) };
            w * (x * y.conj()).re
        })
        .sum::<f64>()
        * dk2
}

/// `<a, b>_{Hdot^sigma}` from spectra.
///
/// For non-integer `sigma` the multiplier is not smooth at `xi = 0` and the
/// plain lattice sum carries an `O(dk^{2 + 2 sigma})` defect. It is removed
/// with the two leading Euler-Maclaurin terms for the square lattice, which
/// involve the Epstein zeta function and the value and Laplacian of
/// `Re(a_hat conj(b_hat))` at the origin.
pub fn homogeneous_pairing_spectra(grid: &PlanarGrid, a: &[Complex64], b: &[Complex64], sigma: f64) -> f64 {
    let raw = lattice_pairing_spectra(grid, a, b, sigma);
    if is_integer(sigma) {
        return raw;
    }
    let dk = grid.dk();
    let f = |p: i64, q: i64| {
        let i = grid.spectral_index(p, q);
        (a[i] * b[i].conj()).re
    };
    let f0 = f(0, 0);
    let axis = |p: i64, q: i64| {
        -f(2 * p, 2 * q) + 16.0 * f(p, q) - 30.0 * f0 + 16.0 * f(-p, -q) - f(-2 * p, -2 * q)
    };
    let lap = (axis(1, 0) + axis(0, 1)) / (12.0 * dk * dk);
    raw - f0 * dk.powf(2.0 + 2.0 * sigma) * epstein_square(-sigma)
        - 0.25 * lap * dk.powf(4.0 + 2.0 * sigma) * epstein_square(-sigma - 1.0)
}

/// `<a, b>_{Hdot^sigma}` for fields on the same grid.
pub fn homogeneous_pairing(a: &Field, b: &Field, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !a.same_grid(b) {
        return Err(Error::GridMismatch("pairing of fields on different grids".into()));
    }
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    Ok(homogeneous_pairing_spectra(a.grid(), a.spectrum(), b.spectrum(), sigma))
}

/// `||f||_{Hdot^sigma} = || |xi|^sigma f_hat ||_{L^2(d xi)}`, `sigma in [0, 2]`.
pub fn homogeneous_norm(f: &Field, sigma: f64) -> Result<f64> {
    Ok(homogeneous_pairing(f, f, sigma)?.max(0.0).sqrt())
}

/// The same seminorm as a plain lattice sum, without the origin correction.
///
/// This is exactly a weighted `l^2` norm of the discrete spectrum, so Hölder
/// interpolation between indices holds for it with constant one.
pub fn homogeneous_norm_lattice(f: &Field, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let s = f.spectrum();
    Ok(lattice_pairing_spectra(f.grid(), s, s, sigma).max(0.0).sqrt())
}

/// Norms entering the `X` and `Y` norms of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormVector {
    pub l2k: f64,
    pub h1k: f64,
    pub hm1k: f64,
    pub hdots: f64,
    pub hdot1: f64,
    pub hdot2: f64,
    pub x_norm: f64,
    pub y_norm: f64,
}

pub fn state_norms(st: &State, p: &ModelParams) -> Result<NormVector> {
    let wn = weighted_norms(&st.g, p.k)?;
    let hdots = homogeneous_norm(&st.w, p.s)?;
    let hdot1 = homogeneous_norm(&st.w, 1.0)?;
    let hdot2 = homogeneous_norm(&st.w, 2.0)?;
    Ok(NormVector {
        l2k: wn.l2k,
        h1k: wn.h1k,
        hm1k: wn.hm1k,
        hdots,
        hdot1,
        hdot2,
        x_norm: wn.l2k + hdots + hdot1,
        y_norm: wn.h1k + hdots + hdot2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrid::radial::RadialGrid;

    fn gaussian(grid: &std::sync::Arc<PlanarGrid>, a: f64) -> Field {
        Field::from_fn(grid, |x, y| (-a * (x * x + y * y)).exp()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let grid = PlanarGrid::new(8.0, 32).unwrap();
        let z = Field::zeros(&grid);
        let n = weighted_norms(&z, 4.0).unwrap();
        assert_eq!((n.l2k, n.h1k, n.hm1k), (0.0, 0.0, 0.0));
        for s in [0.0, 0.3, 1.0, 1.7, 2.0] {
            assert_eq!(homogeneous_norm(&z, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn gaussian_weighted_norms() {
        let grid = PlanarGrid::new(8.0, 128).unwrap();
        let f = gaussian(&grid, 1.0);
        let n0 = weighted_norms(&f, 0.0).unwrap();
        assert!((n0.l2k - (PI / 2.0).sqrt()).abs() < 1e-12);
        let n4 = weighted_norms(&f, 4.0).unwrap();
        let rg = RadialGrid::new(10.0, 4000).unwrap();
        let vals: Vec<f64> = rg
            .nodes()
            .iter()
            .map(|r| (1.0 + r * r).powi(4) * (-2.0 * r * r).exp() * 2.0 * PI)
            .collect();
        let oracle = rg.integrate_r(&vals).sqrt();
        assert!((n4.l2k - oracle).abs() / oracle < 1e-8);
        assert!(n4.hm1k <= n4.l2k && n4.l2k <= n4.h1k);
    }

    #[test]
    fn hdot1_matches_gradient_norm() {
        let grid = PlanarGrid::new(12.0, 128).unwrap();
        let f = gaussian(&grid, 0.5);
        let h1 = homogeneous_norm(&f, 1.0).unwrap();
        let g = f.gradient().l2_norm();
        assert!((h1 - 2.0 * PI * g).abs() / h1 < 1e-10);
        let h0 = homogeneous_norm(&f, 0.0).unwrap();
        assert!((h0 - 2.0 * PI * f.l2_norm()).abs() / h0 < 1e-12);
    }

    #[test]
    fn fractional_norm_of_gaussian() {
        // f = e^{-|x|^2/2}: f_hat = 2 pi e^{-|xi|^2/2}, so
        // ||f||^2_{Hdot^sigma} = (2 pi)^2 * 2 pi \int_0^inf rho^{2 sigma + 1} e^{-rho^2} d rho.
        let grid = PlanarGrid::new(16.0, 128).unwrap();
        let f = gaussian(&grid, 0.5);
        let rg = RadialGrid::new(12.0, 8000).unwrap();
        for sigma in [0.25, 0.5, 0.75, 1.5] {
            let vals: Vec<f64> = rg
                .nodes()
                .iter()
                .map(|r| if *r == 0.0 { 0.0 } else { r.powf(2.0 * sigma) * (-r * r).exp() })
                .collect();
            let oracle = (8.0 * PI.powi(3) * rg.integrate_r(&vals)).sqrt();
            let exact = (8.0 * PI.powi(3) * 0.5 * libm::tgamma(1.0 + sigma)).sqrt();
            assert!((oracle - exact).abs() / exact < 1e-6);
            let got = homogeneous_norm(&f, sigma).unwrap();
            assert!((got - exact).abs() / exact < 1e-6, "sigma {sigma}: {got} vs {exact}");
        }
    }

    #[test]
    fn sigma_out_of_range_is_unsupported() {
        let grid = PlanarGrid::new(8.0, 16).unwrap();
        let f = gaussian(&grid, 1.0);
        assert!(matches!(homogeneous_norm(&f, 2.5), Err(Error::Unsupported(_))));
        assert!(matches!(homogeneous_norm(&f, -0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn state_norm_composition() {
        let grid = PlanarGrid::new(10.0, 64).unwrap();
        let g = gaussian(&grid, 1.0).mean_free();
        let w = gaussian(&grid, 0.7);
        let st = State::new(g.clone(), w).unwrap();
        let p = ModelParams::default();
        let nv = state_norms(&st, &p).unwrap();
        assert_eq!(nv.x_norm, nv.l2k + nv.hdots + nv.hdot1);
        assert_eq!(nv.y_norm, nv.h1k + nv.hdots + nv.hdot2);
        let st0 = State::new(g, Field::zeros(&grid)).unwrap();
        let n0 = state_norms(&st0, &p).unwrap();
        assert_eq!(n0.x_norm, n0.l2k);
        assert_eq!(state_norms(&State::zeros(&grid), &p).unwrap(), NormVector::default());
    }
}
