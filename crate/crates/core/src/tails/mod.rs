//! Tail information for `R`: simulation, the MGF fixed point, Chernoff
//! bounds and the lower/upper certificates.
//!
//! Plain Monte Carlo is only used for bulk statistics (means, stop-loss
//! transforms). `P(R > x)` decays faster than exponentially, so deep tails
//! come from [`chernoff`] and the certificates, never from counting samples.

mod bounds;
pub(crate) mod mc;
mod mgf;

pub use bounds::{
    certified_lower, certify_upper, default_c_param, phi_b, LowerBoundCertificate,
    UpperCertificate, UpperVerdict,
};
pub use mc::{convex_order_check, mc_sample, mc_sample_multi, ConvexOrderReport, ConvexOrderRow};
pub use mgf::{
    chernoff, mgf_series_constant_factor, mgf_solve, mgf_solve_with, MgfScheme, MgfSettings,
    MgfSolution,
};
