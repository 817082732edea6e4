use std::sync::Arc;

use num_complex::Complex64;

use crate::fieldops::{grad_kappa_conv, grad_kappa_conv_vec};
use crate::numgrid::{Field, ModelParams, PlanarGrid, RadialGrid, VecField, MEAN_ZERO_TOL};
use crate::profiles::{lift_to_plane, solve_profile, LiftedProfile, RadialProfile};
use crate::{Error, Result};

/// Target radial step of the profile used for lifting.
const LIFT_STEP: f64 = 4e-3;

/// The drift `mu x` is switched off between these fractions of the half
/// width, so the periodic box has no seam where it jumps.
pub const DRIFT_WINDOW: (f64, f64) = (0.75, 0.95);

/// Smooth cutoff equal to 1 on `|x| <= 1` and 0 on `|x| >= 2`.
pub fn cutoff(r: f64) -> f64 {
    let t = 2.0 - r;
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    f(t) / (f(t) + f(1.0 - t))
}

fn cutoff_derivative(r: f64) -> f64 {
    let t = 2.0 - r;
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let f = |s: f64| (-1.0 / s).exp();
    let df = |s: f64| f(s) / (s * s);
    let (a, b) = (f(t), f(1.0 - t));
    -(df(t) * b + a * df(1.0 - t)) / ((a + b) * (a + b))
}

/// Planar data of the linearization around a steady profile.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    params: ModelParams,
    grid: Arc<PlanarGrid>,
    profile: Option<Arc<RadialProfile>>,
    q: Field,
    p: Field,
    grad_p: VecField,
    lap_p: Field,
    grad_q: VecField,
    q_mass: f64,
    m_split: f64,
    rho: f64,
    chi: Field,
    drift: VecField,
    drift_div: Field,
    mask: Vec<bool>,
    dealias: bool,
}

impl LinearizedSystem {
    /// Solves the profile on a radial grid covering the box diagonal and
    /// lifts it to `grid`.
    pub fn new(params: ModelParams, grid: &Arc<PlanarGrid>) -> Result<Self> {
        params.validate()?;
        let r_max = (std::f64::consts::SQRT_2 * grid.half_width() * 1.001)
            .max(RadialGrid::decay_radius(params.mu, 0.9));
        let n = ((r_max / LIFT_STEP / 4.0).ceil() as usize) * 4;
        let prof = solve_profile(&params, &RadialGrid::new(r_max, n)?)?;
        Self::from_profile(params, Arc::new(prof), grid)
    }

    pub fn from_profile(params: ModelParams, prof: Arc<RadialProfile>, grid: &Arc<PlanarGrid>) -> Result<Self> {
        params.validate()?;
        if (prof.mu - params.mu).abs() > 0.0 || (prof.eps - params.eps).abs() > 0.0 {
            return Err(Error::ContractViolation(
                "profile was computed for different (mu, eps)".into(),
            ));
        }
        let lifted = lift_to_plane(&prof, grid)?;
        let mut sys = Self::assemble(params, grid, lifted);
        sys.profile = Some(prof);
        Ok(sys)
    }

    /// `mu = 0`, `Q = P = 0`: only the diffusion terms survive. Used to test
    /// time stepping against exact Fourier decay.
    pub fn heat_surrogate(grid: &Arc<PlanarGrid>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "heat surrogate needs eps > 0",
            });
        }
        let params = ModelParams {
            mu: 0.0,
            eps,
            ..ModelParams::default()
        };
        let zero = LiftedProfile {
            q: Field::zeros(grid),
            p: Field::zeros(grid),
            grad_p: VecField::zeros(grid),
            lap_p: Field::zeros(grid),
            grad_q: VecField::zeros(grid),
        };
        Ok(Self::assemble(params, grid, zero))
    }

    fn assemble(params: ModelParams, grid: &Arc<PlanarGrid>, lifted: LiftedProfile) -> Self {
        let rho = 1.0;
        let (drift, drift_div) = drift_field(grid, params.mu);
        Self {
            params,
            grid: grid.clone(),
            profile: None,
            q: lifted.q.clone(),
            p: lifted.p,
            grad_p: lifted.grad_p,
            lap_p: lifted.lap_p,
            grad_q: lifted.grad_q,
            q_mass: lifted.q.integral(),
            m_split: 0.0,
            rho,
            chi: bump(grid, rho),
            drift: drift.clone(),
            drift_div,
            mask: grid.dealias_mask(),
            dealias: true,
        }
    }

    /// Sets the splitting constants of `A = M chi(./rho)`.
    pub fn with_splitting(mut self, m: f64, rho: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "M",
                value: m,
                reason: "splitting constant must be finite and nonnegative",
            });
        }
        if !(rho >= 1.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "splitting radius must be at least 1",
            });
        }
        self.m_split = m;
        self.rho = rho;
        self.chi = bump(&self.grid, rho);
        Ok(self)
    }

    /// Turns the two-thirds truncation of products on or off.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<PlanarGrid> {
        &self.grid
    }

    pub fn profile(&self) -> Option<&Arc<RadialProfile>> {
        self.profile.as_ref()
    }

    pub fn q(&self) -> &Field {
        &self.q
    }

    pub fn p(&self) -> &Field {
        &self.p
    }

    pub fn grad_p(&self) -> &VecField {
        &self.grad_p
    }

    pub fn lap_p(&self) -> &Field {
        &self.lap_p
    }

    pub fn grad_q(&self) -> &VecField {
        &self.grad_q
    }

    pub fn splitting(&self) -> (f64, f64) {
        (self.m_split, self.rho)
    }

    /// `chi(x / rho)` on the grid.
    pub fn chi(&self) -> &Field {
        &self.chi
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if !Arc::ptr_eq(f.grid(), &self.grid) && **f.grid() != *self.grid {
            return Err(Error::GridMismatch("field and linearized system use different grids".into()));
        }
        Ok(())
    }

    fn check_mean_zero(&self, g: &Field) -> Result<()> {
        self.check_grid(g)?;
        let mass = g.integral();
        if mass.abs() > MEAN_ZERO_TOL * g.l1_norm().max(1.0) {
            return Err(Error::ContractViolation(format!("g must have zero mass, got {mass:e}")));
        }
        Ok(())
    }

    /// Spectrum of a pointwise product with the truncation applied.
    pub(crate) fn product_spectrum(&self, f: &Field) -> Vec<Complex64> {
        let mut s = f.spectrum().to_vec();
        if self.dealias {
            for (c, keep) in s.iter_mut().zip(&self.mask) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        s
    }

    pub(crate) fn truncate(&self, f: &Field) -> Field {
        if !self.dealias || f.is_zero() {
            return f.clone();
        }
        Field::from_spectrum(&self.grid, &self.product_spectrum(f))
    }

    pub(crate) fn truncate_vec(&self, v: &VecField) -> VecField {
        VecField {
            x: self.truncate(&v.x),
            y: self.truncate(&v.y),
        }
    }

    /// `Q grad w`
    pub(crate) fn q_grad(&self, w: &Field) -> VecField {
        let gw = w.gradient();
        self.truncate_vec(&VecField {
            x: gw.x.mul(&self.q),
            y: gw.y.mul(&self.q),
        })
    }

    /// `g grad P + Q grad kappa * g`
    pub(crate) fn l21_source(&self, g: &Field) -> VecField {
        let gk = grad_kappa_conv(g);
        let vx = g.mul(&self.grad_p.x).add(&gk.x.mul(&self.q));
        let vy = g.mul(&self.grad_p.y).add(&gk.y.mul(&self.q));
        self.truncate_vec(&VecField { x: vx, y: vy })
    }

    /// Windowed drift `mu x`.
    pub fn drift(&self) -> &VecField {
        &self.drift
    }

    /// `mu x . grad w` with the windowed drift. Its mean is set to the
    /// whole-space value `-2 mu mean(w)`, which the window would otherwise
    /// lose.
    pub(crate) fn drift_derivative(&self, w: &Field) -> Field {
        let gw = w.gradient();
        let (vx, vy) = (self.drift.x.values(), self.drift.y.values());
        let mut v: Vec<f64> = (0..w.values().len())
            .map(|i| vx[i] * gw.x.values()[i] + vy[i] * gw.y.values()[i])
            .collect();
        let n = v.len() as f64;
        let shift = -2.0 * self.params.mu * w.values().iter().sum::<f64>() / n - v.iter().sum::<f64>() / n;
        for x in v.iter_mut() {
            *x += shift;
        }
        self.truncate(&Field::from_values_unchecked(&self.grid, v))
    }

    /// `L11 g = lap g + div(mu x g - g grad P - Q grad kappa * g)`, expanded
    /// as `lap g + mu (2 g + x . grad g) - grad P . grad g - g lap P
    /// - grad Q . grad kappa * g + Q g` with the profile derivatives taken
    /// from the radial solution.
    ///
    /// Differentiating the products spectrally would need the profile to be
    /// resolved as a band-limited function, which `Q ~ (1 + r^2)^{-2}` is
    /// not at moderate `N`. The expanded form is exact at the nodes; its
    /// quadrature misses zero by the (tiny) trapezoid error of the profile
    /// terms, which is removed along `Q` so that mass is conserved exactly.
    pub fn apply_l11(&self, g: &Field) -> Result<Field> {
        self.check_mean_zero(g)?;
        if g.is_zero() {
            return Ok(Field::zeros(&self.grid));
        }
        Ok(g.laplacian().add(&self.l11_transport(g)))
    }

    /// `L11 g - lap g`, the part treated explicitly in time.
    pub(crate) fn l11_transport(&self, g: &Field) -> Field {
        if g.is_zero() {
            return Field::zeros(&self.grid);
        }
        let (vx, vy, dv) = (self.drift.x.values(), self.drift.y.values(), self.drift_div.values());
        let gr = g.gradient();
        let gk = grad_kappa_conv(g);
        let (px, py) = (self.grad_p.x.values(), self.grad_p.y.values());
        let (qx, qy) = (self.grad_q.x.values(), self.grad_q.y.values());
        let (q, lp) = (self.q.values(), self.lap_p.values());
        let gv = g.values();
        let out: Vec<f64> = (0..gv.len())
            .map(|i| {
                let (dx, dy) = (gr.x.values()[i], gr.y.values()[i]);
                dv[i] * gv[i] + vx[i] * dx + vy[i] * dy
                    - (px[i] * dx + py[i] * dy + gv[i] * lp[i])
                    - (qx[i] * gk.x.values()[i] + qy[i] * gk.y.values()[i])
                    + q[i] * gv[i]
            })
            .collect();
        self.remove_mass(out)
    }

    /// Removes the quadrature mass of a field that is a divergence in the
    /// continuum, along `Q`.
    fn remove_mass(&self, mut out: Vec<f64>) -> Field {
        if self.q_mass > 0.0 {
            let c = out.iter().sum::<f64>() * self.grid.cell_area() / self.q_mass;
            for (o, qi) in out.iter_mut().zip(self.q.values()) {
                *o -= c * qi;
            }
        }
        Field::from_values_unchecked(&self.grid, out)
    }

    /// `L12 w = -div(Q grad w) = -Q lap w - grad Q . grad w`
    pub fn apply_l12(&self, w: &Field) -> Result<Field> {
        self.check_grid(w)?;
        if w.is_zero() {
            return Ok(Field::zeros(&self.grid));
        }
        let lap = w.laplacian();
        let gw = w.gradient();
        let out: Vec<f64> = (0..w.values().len())
            .map(|i| {
                -self.q.values()[i] * lap.values()[i]
                    - self.grad_q.x.values()[i] * gw.x.values()[i]
                    - self.grad_q.y.values()[i] * gw.y.values()[i]
            })
            .collect();
        Ok(self.remove_mass(out))
    }

    /// `L21 g = g + grad kappa * [g grad P + Q grad kappa * g]`
    pub fn apply_l21(&self, g: &Field) -> Result<Field> {
        self.check_mean_zero(g)?;
        if g.is_zero() {
            return Ok(Field::zeros(&self.grid));
        }
        Ok(g.add(&grad_kappa_conv_vec(&self.l21_source(g))))
    }

    /// `(1/eps) lap w + mu x . grad w`, the local part of `L22`.
    pub fn apply_l22_local(&self, w: &Field) -> Result<Field> {
        self.check_grid(w)?;
        self.check_eps()?;
        if w.is_zero() {
            return Ok(Field::zeros(&self.grid));
        }
        let lap = w.laplacian().scale(1.0 / self.params.eps);
        Ok(lap.add(&self.drift_derivative(w)))
    }

    /// `L22 w = (1/eps) lap w + mu x . grad w + grad kappa * [Q grad w]`
    pub fn apply_l22(&self, w: &Field) -> Result<Field> {
        let local = self.apply_l22_local(w)?;
        if w.is_zero() {
            return Ok(local);
        }
        Ok(local.add(&grad_kappa_conv_vec(&self.q_grad(w))))
    }

    /// `L22 w - (1/eps) lap w`, the part treated explicitly in time.
    pub(crate) fn l22_transport(&self, w: &Field) -> Field {
        if w.is_zero() {
            return Field::zeros(&self.grid);
        }
        self.drift_derivative(w)
            .add(&grad_kappa_conv_vec(&self.q_grad(w)))
    }

    pub(crate) fn check_state_grid(&self, f: &Field) -> Result<()> {
        self.check_grid(f)
    }

    /// `(L11 - M chi_rho) g`
    pub fn apply_b(&self, g: &Field) -> Result<Field> {
        let l = self.apply_l11(g)?;
        Ok(l.sub(&g.mul(&self.chi).scale(self.m_split)))
    }

    fn check_eps(&self) -> Result<()> {
        if self.params.eps > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "eps",
                value: self.params.eps,
                reason: "the w block needs eps > 0",
            })
        }
    }
}

/// `mu x c(x) c(y)` with `c` a smooth step across [`DRIFT_WINDOW`].
/// The windowed drift and its divergence. The divergence is taken in closed
/// form: the window is smooth but its Fourier tail is too slow for a spectral
/// derivative to stay exactly `2 mu` in the interior.
fn drift_field(grid: &Arc<PlanarGrid>, mu: f64) -> (VecField, Field) {
    let l = grid.half_width();
    let (a, b) = (DRIFT_WINDOW.0 * l, DRIFT_WINDOW.1 * l);
    let arg = |t: f64| 1.0 + (t.abs() - a) / (b - a);
    let c = |t: f64| cutoff(arg(t));
    // t c'(t) is even, so the sign of t drops out.
    let tdc = |t: f64| t.abs() * cutoff_derivative(arg(t)) / (b - a);
    let v = VecField {
        x: Field::from_values_unchecked(grid, grid.sample(|x, y| mu * x * c(x) * c(y))),
        y: Field::from_values_unchecked(grid, grid.sample(|x, y| mu * y * c(x) * c(y))),
    };
    let div = grid.sample(|x, y| mu * (2.0 * c(x) * c(y) + tdc(x) * c(y) + c(x) * tdc(y)));
    (v, Field::from_values_unchecked(grid, div))
}

fn bump(grid: &Arc<PlanarGrid>, rho: f64) -> Field {
    Field::from_values_unchecked(
        grid,
        grid.sample(|x, y| cutoff((x * x + y * y).sqrt() / rho)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::{SampleBank, SampleRecipe};

    fn system(eps: f64) -> LinearizedSystem {
        let grid = PlanarGrid::new(16.0, 128).unwrap();
        LinearizedSystem::new(ModelParams::with_mu_eps(1.0, eps).unwrap(), &grid).unwrap()
    }

    #[test]
    fn closed_form_drift_divergence() {
        for r in [1.05, 1.3, 1.5, 1.9] {
            let fd = (cutoff(r + 1e-6) - cutoff(r - 1e-6)) / 2e-6;
            assert!((cutoff_derivative(r) - fd).abs() < 1e-6, "{r}");
        }
        // The spectral divergence converges to the closed form, slowly.
        let gap = |n: usize| {
            let (v, div) = drift_field(&PlanarGrid::new(16.0, n).unwrap(), 1.5);
            (div.sub(&v.divergence()).max_abs(), div)
        };
        let (coarse, _) = gap(128);
        let (fine, div) = gap(256);
        assert!(fine < 0.25 * coarse, "{coarse} {fine}");
        let (i, j) = (128, 128 + 60);
        assert_eq!(div.values()[i * 256 + j], 3.0);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        assert!((cutoff(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = cutoff(i as f64 * 0.01 + 0.5);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn profile_lift_invariants() {
        let sys = system(0.02);
        assert!(sys.q().values().iter().all(|&v| v > 0.0));
        let n = sys.grid().n();
        let origin = (n / 2) * n + n / 2;
        assert_eq!(sys.grid().point(origin), (0.0, 0.0));
        assert_eq!(sys.grad_p().x.values()[origin], 0.0);
        assert_eq!(sys.grad_p().y.values()[origin], 0.0);
    }

    #[test]
    fn l11_is_in_divergence_form() {
        let sys = system(0.02);
        let bank = SampleBank::new(5, 6, SampleRecipe::default());
        for g in bank.fields(sys.grid()) {
            let out = sys.apply_l11(&g).unwrap();
            assert!(out.integral().abs() <= 1e-9 * g.l2_norm(), "{}", out.integral());
        }
    }

    #[test]
    fn contracts_and_zero_inputs() {
        let sys = system(0.02);
        let grid = sys.grid().clone();
        let bump = Field::from_fn(&grid, |x, y| (-(x * x + y * y)).exp()).unwrap();
        assert!(matches!(sys.apply_l11(&bump), Err(Error::ContractViolation(_))));
        assert!(matches!(sys.apply_l21(&bump), Err(Error::ContractViolation(_))));
        let z = Field::zeros(&grid);
        for out in [sys.apply_l11(&z), sys.apply_l12(&z), sys.apply_l21(&z), sys.apply_l22(&z)] {
            assert!(out.unwrap().is_zero());
        }
        let c = Field::from_fn(&grid, |_, _| 3.0).unwrap();
        assert!(sys.apply_l12(&c).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn eps_enters_linearly() {
        let a = system(0.04);
        let b = system(0.02);
        let w = Field::from_fn(a.grid(), |x, y| (-(x * x + y * y) / 2.0).exp() * (1.0 + 0.3 * x)).unwrap();
        let w_b = Field::from_values(b.grid(), w.values().to_vec()).unwrap();
        let strip = |s: &LinearizedSystem, w: &Field| {
            let full = s.apply_l22(w).unwrap();
            let drift = s.drift_derivative(w);
            let nl = grad_kappa_conv_vec(&s.q_grad(w));
            full.sub(&drift).sub(&nl)
        };
        let da = strip(&a, &w);
        let db = strip(&b, &w_b);
        let err = db.sub(&da.scale(2.0)).max_abs() / db.max_abs();
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn splitting_validation() {
        let sys = system(0.02);
        assert!(sys.clone().with_splitting(-1.0, 2.0).is_err());
        assert!(sys.clone().with_splitting(1.0, 0.5).is_err());
        let s = sys.with_splitting(3.0, 2.0).unwrap();
        assert_eq!(s.splitting(), (3.0, 2.0));
        assert!(s.chi().values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
