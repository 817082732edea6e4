//! Quadratic forms of the linearized blocks and the cross-block estimates.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::LinearizedSystem;
use crate::bounds::{linear_fit, BoundReport};
use crate::fieldops::{ratio, stability_check, SampleBank};
use crate::numgrid::{
    homogeneous_norm, homogeneous_norm_lattice, homogeneous_pairing, weighted_norms, Field, PlanarGrid,
};
use crate::{Error, Result};

/// `<f, g>_{L^2_k}`
pub fn weighted_pairing(f: &Field, g: &Field, k: f64) -> f64 {
    let grid = f.grid();
    f.values()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(i, (a, b))| {
            let (x, y) = grid.point(i);
            (1.0 + x * x + y * y).powf(k) * a * b
        })
        .sum::<f64>()
        * grid.cell_area()
}

fn disc_l2_sq(g: &Field, rho: f64) -> f64 {
    let grid = g.grid();
    g.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (x, y) = grid.point(*i);
            x * x + y * y <= rho * rho
        })
        .map(|(_, v)| v * v)
        .sum::<f64>()
        * grid.cell_area()
}

/// `<L11 g, g>_{L^2_k}` together with the terms of the dissipativity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L11Form {
    pub value: f64,
    /// `||g||^2_{L^2_k}`
    pub l2k_sq: f64,
    /// `||grad g||^2_{L^2_k}`
    pub grad_l2k_sq: f64,
    /// `||g||^2_{L^2(B_rho0)}`
    pub local_sq: f64,
    pub rho0: f64,
    /// `-mu (k - 2) ||g||^2_{L^2_k} - ||grad g||^2_{L^2_k} / 2`
    pub dissipation: f64,
}

impl L11Form {
    /// Smallest `C0` making the estimate hold for this sample.
    pub fn required_c0(&self) -> f64 {
        let excess = self.value - self.dissipation;
        if excess <= 0.0 {
            0.0
        } else if self.local_sq == 0.0 {
            f64::INFINITY
        } else {
            excess / self.local_sq
        }
    }
}

pub fn quad_form_l11(g: &Field, sys: &LinearizedSystem, rho0: f64) -> Result<L11Form> {
    let p = sys.params();
    let lg = sys.apply_l11(g)?;
    if g.is_zero() {
        return Ok(L11Form {
            value: 0.0,
            l2k_sq: 0.0,
            grad_l2k_sq: 0.0,
            local_sq: 0.0,
            rho0,
            dissipation: 0.0,
        });
    }
    let value = weighted_pairing(&lg, g, p.k);
    let l2k_sq = weighted_pairing(g, g, p.k);
    let gr = g.gradient();
    let grad_l2k_sq = weighted_pairing(&gr.x, &gr.x, p.k) + weighted_pairing(&gr.y, &gr.y, p.k);
    Ok(L11Form {
        value,
        l2k_sq,
        grad_l2k_sq,
        local_sq: disc_l2_sq(g, rho0),
        rho0,
        dissipation: -p.mu * (p.k - 2.0) * l2k_sq - 0.5 * grad_l2k_sq,
    })
}

/// Empirical localization constant at a fixed radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityFit {
    pub c0: f64,
    pub rho0: f64,
    pub per_sample: Vec<f64>,
}

/// `C0 = max_g (<L11 g, g> - dissipation) / ||g||^2_{L^2(B_rho0)}` over a bank.
pub fn fit_dissipativity(bank: &SampleBank, sys: &LinearizedSystem, rho0: f64) -> Result<DissipativityFit> {
    let per_sample = bank
        .specs()
        .par_iter()
        .map(|s| quad_form_l11(&s.field(sys.grid()), sys, rho0).map(|f| f.required_c0()))
        .collect::<Result<Vec<f64>>>()?;
    let c0 = per_sample.iter().cloned().fold(0.0, f64::max);
    Ok(DissipativityFit { c0, rho0, per_sample })
}

/// `<B g, g>_{L^2_k}` against `-mu (k - 2) ||g||^2_{L^2_k} - ||grad g||^2_{L^2_k} / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitForm {
    pub value: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Quadratic form of `B = L11 - M chi_rho`. When `thresholds` is given, the
/// splitting constants of `sys` must dominate it.
pub fn quad_form_bsplit(g: &Field, sys: &LinearizedSystem, thresholds: Option<&DissipativityFit>) -> Result<SplitForm> {
    let (m, rho) = sys.splitting();
    if let Some(t) = thresholds {
        if m < t.c0 || rho < t.rho0 {
            return Err(Error::ContractViolation(format!(
                "splitting (M, rho) = ({m}, {rho}) below the empirical thresholds ({}, {})",
                t.c0, t.rho0
            )));
        }
    }
    let f = quad_form_l11(g, sys, rho)?;
    if g.is_zero() {
        return Ok(SplitForm {
            value: 0.0,
            rhs: 0.0,
            slack: 0.0,
            holds: true,
        });
    }
    let k = sys.params().k;
    let value = f.value - m * weighted_pairing(&g.mul(sys.chi()), g, k);
    let slack = 1e-9 * weighted_norms(g, k)?.h1k.powi(2);
    Ok(SplitForm {
        value,
        rhs: f.dissipation,
        slack,
        holds: value <= f.dissipation + slack,
    })
}

/// Both sides of the `Hdot^1` energy identity of `L22`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityCheck {
    pub fn relative_defect(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.rhs.abs().max(self.lhs.abs())
        }
    }
}

/// `<L22 w, w>_{Hdot^1}` against `-(1/eps) ||w||^2_{Hdot^2} - (2 pi)^2 \int Q |grad w|^2`.
pub fn quad_form_l22_h1(w: &Field, sys: &LinearizedSystem) -> Result<IdentityCheck> {
    let lw = sys.apply_l22(w)?;
    if w.is_zero() {
        return Ok(IdentityCheck { lhs: 0.0, rhs: 0.0 });
    }
    let lhs = homogeneous_pairing(&lw, w, 1.0)?;
    let eps = sys.params().eps;
    let q_energy = w.gradient().weighted_square_integral(sys.q());
    let rhs = -homogeneous_norm(w, 2.0)?.powi(2) / eps - 4.0 * PI * PI * q_energy;
    Ok(IdentityCheck { lhs, rhs })
}

/// `<L22 w, w>_{Hdot^s}` with the local-part identity and the dissipativity
/// inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L22SForm {
    pub value: f64,
    /// `<(1/eps) lap w + mu x.grad w, w>_{Hdot^s}` against
    /// `-(1/eps) ||w||^2_{Hdot^{1+s}} - mu (1 - s) ||w||^2_{Hdot^s}`.
    pub local_identity: IdentityCheck,
    /// `-(1/(2 eps)) ||w||^2_{Hdot^{1+s}} - theta ||w||^2_{Hdot^s}`
    pub bound: f64,
    pub holds: bool,
}

pub fn quad_form_l22_hs(w: &Field, sys: &LinearizedSystem, s: f64, theta: f64) -> Result<L22SForm> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            reason: "must lie in (0, 1)",
        });
    }
    let full = sys.apply_l22(w)?;
    if w.is_zero() {
        let zero = IdentityCheck { lhs: 0.0, rhs: 0.0 };
        return Ok(L22SForm {
            value: 0.0,
            local_identity: zero,
            bound: 0.0,
            holds: true,
        });
    }
    let p = sys.params();
    let local = sys.apply_l22_local(w)?;
    let hs = homogeneous_norm(w, s)?.powi(2);
    let h1s = homogeneous_norm(w, 1.0 + s)?.powi(2);
    let local_identity = IdentityCheck {
        lhs: homogeneous_pairing(&local, w, s)?,
        rhs: -h1s / p.eps - p.mu * (1.0 - s) * hs,
    };
    let value = homogeneous_pairing(&full, w, s)?;
    let bound = -h1s / (2.0 * p.eps) - theta * hs;
    Ok(L22SForm {
        value,
        local_identity,
        bound,
        holds: value <= bound,
    })
}

/// Ratios of the two cross-block estimates for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossBlockRatios {
    /// `||L12 w||_{H^{-1}_k} / (||w||_{Hdot^s}^{1-t} ||w||_{Hdot^2}^t)`, `t = (1-s)/(2-s)`
    pub l12: f64,
    /// `(||L21 g||_{Hdot^s} + ||L21 g||_{Hdot^1}) / ||g||_{H^1_k}`
    pub l21: f64,
}

pub fn l12_ratio(w: &Field, sys: &LinearizedSystem, s: f64) -> Result<f64> {
    let lw = sys.apply_l12(w)?;
    if lw.is_zero() {
        return Ok(0.0);
    }
    let t = (1.0 - s) / (2.0 - s);
    let num = weighted_norms(&lw, sys.params().k)?.hm1k;
    let den = homogeneous_norm(w, s)?.powf(1.0 - t) * homogeneous_norm(w, 2.0)?.powf(t);
    Ok(ratio(num, den))
}

/// `L21 g` is not smooth at `xi = 0`, so its seminorms use the plain lattice sum.
pub fn l21_ratio(g: &Field, sys: &LinearizedSystem, s: f64) -> Result<f64> {
    let lg = sys.apply_l21(g)?;
    if lg.is_zero() {
        return Ok(0.0);
    }
    let num = homogeneous_norm_lattice(&lg, s)? + homogeneous_norm_lattice(&lg, 1.0)?;
    Ok(ratio(num, weighted_norms(g, sys.params().k)?.h1k))
}

/// Maximal cross-block ratios over a `w` bank and a mean-zero `g` bank.
pub fn cross_block_constants(w_bank: &SampleBank, g_bank: &SampleBank, sys: &LinearizedSystem, s: f64) -> Result<CrossBlockRatios> {
    if !g_bank.recipe.mean_zero {
        return Err(Error::ContractViolation("the L21 estimate needs mean-zero samples".into()));
    }
    let grid = sys.grid();
    let l12 = w_bank
        .specs()
        .par_iter()
        .map(|sp| l12_ratio(&sp.field(grid), sys, s))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let l21 = g_bank
        .specs()
        .par_iter()
        .map(|sp| l21_ratio(&sp.field(grid), sys, s))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CrossBlockRatios { l12, l21 })
}

/// Cross-block constants compared across `(w bank, g bank, system)`
/// configurations; passes when all are finite and agree within `tol`.
pub fn check_cross_block_bounds(
    configs: &[(&SampleBank, &SampleBank, &LinearizedSystem)],
    s: f64,
    tol: f64,
) -> Result<BoundReport> {
    let consts = configs
        .iter()
        .map(|(wb, gb, sys)| cross_block_constants(wb, gb, sys, s))
        .collect::<Result<Vec<_>>>()?;
    let l12: Vec<f64> = consts.iter().map(|c| c.l12).collect();
    let l21: Vec<f64> = consts.iter().map(|c| c.l21).collect();
    let mut rep = BoundReport::from_checks(
        "cross_block",
        vec![stability_check("cross_block.l12", &l12, tol), stability_check("cross_block.l21", &l21, tol)],
        "empirical cross-block constants: finite and stable across banks and grids",
    );
    for (i, c) in consts.iter().enumerate() {
        rep.fitted_constants.insert(format!("l12[{i}]"), c.l12);
        rep.fitted_constants.insert(format!("l21[{i}]"), c.l21);
    }
    Ok(rep)
}

/// `w(lambda x)` sampled on the same grid.
pub fn dilate(w: &crate::fieldops::SampleSpec, grid: &Arc<PlanarGrid>, lambda: f64) -> Field {
    Field::from_values_unchecked(grid, grid.sample(|x, y| w.eval(lambda * x, lambda * y)))
}

/// `max_g ||(L11^eps - L11^0) g||_{L^2_k} / ||g||_{H^1_k}` per `eps`, and the
/// log-log slope of that sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConvergence {
    pub eps: Vec<f64>,
    pub ratio: Vec<f64>,
    pub slope: f64,
    pub monotone: bool,
}

pub fn operator_convergence(
    mu: f64,
    eps_list: &[f64],
    bank: &SampleBank,
    grid: &Arc<PlanarGrid>,
) -> Result<OperatorConvergence> {
    let base = crate::numgrid::ModelParams::with_mu_eps(mu, 0.0)?;
    let sys0 = LinearizedSystem::new(base, grid)?;
    let fields = bank.fields(grid);
    let l0: Vec<Field> = fields.iter().map(|g| sys0.apply_l11(g)).collect::<Result<_>>()?;
    let h1: Vec<f64> = fields
        .iter()
        .map(|g| weighted_norms(g, base.k).map(|n| n.h1k))
        .collect::<Result<_>>()?;
    let mut ratio = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let sys = LinearizedSystem::new(crate::numgrid::ModelParams { eps, ..base }, grid)?;
        let mut worst: f64 = 0.0;
        for ((g, a), n) in fields.iter().zip(&l0).zip(&h1) {
            let d = sys.apply_l11(g)?.sub(a);
            worst = worst.max(crate::numgrid::l2k_norm(&d, base.k) / n);
        }
        ratio.push(worst);
    }
    let lx: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = ratio.iter().map(|r| r.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let mut order: Vec<usize> = (0..eps_list.len()).collect();
    order.sort_by(|&a, &b| eps_list[b].total_cmp(&eps_list[a]));
    let monotone = order.windows(2).all(|w| ratio[w[1]] < ratio[w[0]]);
    Ok(OperatorConvergence {
        eps: eps_list.to_vec(),
        ratio,
        slope,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::SampleRecipe;
    use crate::numgrid::ModelParams;

    fn system(eps: f64) -> LinearizedSystem {
        let grid = PlanarGrid::new(16.0, 128).unwrap();
        LinearizedSystem::new(ModelParams::with_mu_eps(1.0, eps).unwrap(), &grid).unwrap()
    }

    fn w_recipe() -> SampleRecipe {
        SampleRecipe {
            mean_zero: false,
            ..SampleRecipe::default()
        }
    }

    #[test]
    fn h1_identity_on_gaussian() {
        let sys = system(0.05);
        let w = Field::from_fn(sys.grid(), |x, y| (-(x * x + y * y)).exp()).unwrap();
        let c = quad_form_l22_h1(&w, &sys).unwrap();
        assert!(c.relative_defect() <= 1e-6, "{c:?}");
        let z = quad_form_l22_h1(&Field::zeros(sys.grid()), &sys).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    }

    #[test]
    fn hs_local_identity_on_gaussian() {
        let sys = system(0.05);
        let w = Field::from_fn(sys.grid(), |x, y| (-(x * x + y * y) / 2.0).exp()).unwrap();
        let f = quad_form_l22_hs(&w, &sys, 0.5, 0.25).unwrap();
        assert!(f.local_identity.relative_defect() <= 1e-6, "{f:?}");
        assert!(f.holds);
    }

    #[test]
    fn identities_on_random_samples() {
        let sys = system(0.02);
        let bank = SampleBank::new(21, 6, w_recipe());
        for w in bank.fields(sys.grid()) {
            let a = quad_form_l22_h1(&w, &sys).unwrap();
            assert!(a.relative_defect() <= 1e-6, "{a:?}");
            let b = quad_form_l22_hs(&w, &sys, 0.5, 0.25).unwrap();
            assert!(b.local_identity.relative_defect() <= 1e-6, "{b:?}");
        }
    }

    #[test]
    fn dissipativity_far_from_origin() {
        let grid = PlanarGrid::new(32.0, 256).unwrap();
        let sys = LinearizedSystem::new(ModelParams::default(), &grid).unwrap();
        // Mean-zero dipole centred at radius 15 > 1.2 * 10.
        let g = Field::from_fn(&grid, |x, y| {
            let (dx, dy) = (x - 15.0, y);
            dx * (-(dx * dx + dy * dy)).exp()
        })
        .unwrap();
        let f = quad_form_l11(&g, &sys, 10.0).unwrap();
        assert!(f.local_sq < 1e-20 * f.l2k_sq);
        assert!(f.value <= -sys.params().mu * (sys.params().k - 2.0) * f.l2k_sq, "{f:?}");
    }

    #[test]
    fn split_needs_thresholds_and_zero_is_trivial() {
        let sys = system(0.02);
        let fit = DissipativityFit {
            c0: 5.0,
            rho0: 4.0,
            per_sample: vec![],
        };
        let g = Field::zeros(sys.grid());
        assert!(quad_form_bsplit(&g, &sys, Some(&fit)).is_err());
        let s = sys.with_splitting(10.0, 4.0).unwrap();
        let r = quad_form_bsplit(&g, &s, Some(&fit)).unwrap();
        assert!(r.holds && r.value == 0.0);
        assert_eq!(quad_form_l11(&g, &s, 4.0).unwrap().value, 0.0);
    }

    #[test]
    fn cross_block_trivia() {
        let sys = system(0.02);
        let c = Field::from_fn(sys.grid(), |_, _| 1.0).unwrap();
        assert_eq!(l12_ratio(&c, &sys, 0.5).unwrap(), 0.0);
        assert_eq!(l21_ratio(&Field::zeros(sys.grid()), &sys, 0.5).unwrap(), 0.0);
    }
}
