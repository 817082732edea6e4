//! Linearization around the steady profile.
//!
//! The perturbation `(g, w)` evolves under the block operator
//!
//! ```text
//! L11 g = lap g + div(mu x g - g grad P - Q grad kappa * g)
//! L12 w = -div(Q grad w)
//! L21 g = g + grad kappa * [g grad P + Q grad kappa * g]
//! L22 w = (1/eps) lap w + mu x . grad w + grad kappa * [Q grad w]
//! ```
//!
//! On the periodic box the drift `mu x` is tapered to zero near the edges
//! (see [`DRIFT_WINDOW`]). Otherwise its jump across the seam feeds a
//! spurious growing mode.
//!
//! [`LinearizedSystem`] applies the blocks on the planar grid, [`forms`]
//! evaluates their quadratic forms, and [`modes`] reduces `L11` to angular
//! harmonics for the spectral study.

pub mod forms;
pub mod modes;
mod system;

pub use forms::*;
pub use modes::*;
pub use system::{cutoff, LinearizedSystem, DRIFT_WINDOW};
pub use crate::dynamics::linear_semigroup_decay;
