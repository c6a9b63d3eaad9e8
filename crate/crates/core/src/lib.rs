//! Logarithmic tail asymptotics of light-tailed perpetuities `R = MR + Q`.
//!
//! The crate is organised bottom-up:
//!
//! - [`gridfn`]: functions sampled on positive grids, convex conjugates,
//!   generalized inverses and infimal compositions.
//! - [`marginals`] and [`copulas`]: laws of the multiplier `M`, the increment
//!   `Q` and their joint law.
//! - [`hfun`]: the variational rate function `h` and its closed forms.
//! - [`constants`]: closed-form asymptotic constants.
//! - [`tails`]: Monte Carlo, the MGF fixed-point solver, Chernoff bounds and
//!   the lower/upper certificates.
//! - [`harness`]: experiment configuration, reports and verification suites.

// `!(x > 0.0)` is the idiom for rejecting NaN along with the bound
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod copulas;
pub mod error;
pub mod gridfn;
pub mod harness;
pub mod hfun;
pub mod marginals;
pub mod numeric;
pub mod tails;

pub use constants::{ConstantName, ConstantQuery, Extended};
pub use copulas::{Dependence, JointLaw, QuadrantClass};
pub use error::{Error, Result};
pub use gridfn::{Grid, GridFunction};
pub use hfun::HResult;
pub use marginals::{FactorLaw, IncrementLaw};
pub use tails::{LowerBoundCertificate, MgfSolution, UpperCertificate};
