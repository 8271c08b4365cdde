//! Crystalline curvature flow with a spatially nonuniform driving force.
//!
//! - [`anisotropy`]: Wulff polytopes, polar gauges, subdifferential faces and
//!   smooth regularizations.
//! - [`tvprox`]: resolvents of anisotropic total variation plus forcing and
//!   the minimal divergence extracted from them.
//! - [`facet1d`]: exact one-dimensional facet speeds via taut strings, the
//!   explicit tent-forcing solution and the nonexistence certificate.
//! - [`levelset`]: explicit monotone evolver for the regularized level-set
//!   equation with Lipschitz, Hölder and Wulff-radius monitors.
//! - [`harness`]: configuration, scenarios and file output behind the CLI.

// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anisotropy;
pub mod facet1d;
pub mod forcing;
pub mod grid;
pub mod harness;
pub mod levelset;
pub mod tvprox;

pub use anisotropy::{Anisotropy, RegularizationMode, RegularizedAnisotropy};
pub use forcing::Forcing;
pub use grid::{Boundary, Grid, ScalarField};
