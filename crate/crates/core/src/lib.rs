//! Numerical laboratory for the parabolic-parabolic Keller-Segel system in
//! self-similar variables.
//!
//! The crate computes the radially symmetric steady profiles `(Q, P)`,
//! discretizes the linearized operator around them (both on a periodic
//! planar grid and block-by-block over angular harmonics), integrates the
//! nonlinear perturbation system for `(g, w)`, and turns every quantitative
//! estimate about those objects into a checkable report.
//!
//! Module map:
//!
//! * [`numgrid`]: radial and planar grids, transforms, quadrature and norms.
//! * [`profiles`]: steady profiles and their closed-form vanishing-drift limit.
//! * [`bounds`]: pointwise estimates on profiles and `eps -> 0` rates.
//! * [`fieldops`]: the Newtonian potential `grad kappa *` and inequality harnesses.
//! * [`linops`]: linearized blocks, quadratic forms, mode matrices and spectra.
//! * [`dynamics`]: IMEX time stepping, trajectories and decay fits.
//! * [`ksctl`]: configuration, persistence, sweeps and the acceptance checks.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fieldops;
pub mod ksctl;
pub mod linops;
pub mod numgrid;
pub mod profiles;

pub use error::{Error, Result};
pub use numgrid::{Field, ModelParams, NormVector, PlanarGrid, RadialGrid, State};
