//! Grids, transforms, quadrature and norms.

mod norms;
mod params;
mod planar;
mod radial;
pub mod zeta;

pub use norms::{
    homogeneous_norm, homogeneous_norm_lattice, homogeneous_pairing, homogeneous_pairing_spectra,
    japanese, l2k_norm, lattice_pairing_spectra, state_norms, weighted_norms, NormVector,
    WeightedNorms,
};
pub use params::ModelParams;
pub use planar::{Field, PlanarGrid, State, VecField, MEAN_ZERO_TOL};
pub use radial::{
    Measure, Parity, QuadEstimate, QuadRule, QuadWarning, QuadWarningKind, RadialGrid,
    QUAD_WARN_THRESHOLD,
};
pub(crate) use radial::cumulative_integral;
