//! Fixtures shared by the criterion benches.

use perptail_core::{Dependence, FactorLaw, IncrementLaw, JointLaw};

/// `PowerF{1,2} × Weibull{1,2}` under `dep`.
pub fn reference_law(dep: Dependence) -> JointLaw {
    JointLaw::new(
        FactorLaw::PowerF { c: 1.0, r: 2.0 },
        IncrementLaw::Weibull { d: 1.0, alpha: 2.0 },
        dep,
    )
    .expect("reference law is valid")
}
