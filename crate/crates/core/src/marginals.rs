//! Marginal laws of the multiplier `M` and the increment `Q`.
//!
//! The tail functions are `f(t) = −t log P(M > 1 − 1/t)` and
//! `k(y) = −log P(Q > y)`. `PowerF` and `Weibull` realise `f(t) = c t^r`
//! (for `t >= 1`) and `k(y) = d y^α` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::{Grid, GridFunction};
use crate::numeric::log_integral;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorLaw {
    /// `P(M > m) = exp(−c (1−m)^{−(r−1)})` on `[0,1)`, atom `1 − e^{−c}` at 0.
    PowerF {
        c: f64,
        r: f64,
    },
    Constant {
        m: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IncrementLaw {
    /// `P(Q > y) = exp(−d y^α)`.
    Weibull {
        d: f64,
        alpha: f64,
    },
    Constant {
        q: f64,
    },
    /// `P(Q > y) = (1 − y/q_plus)^p` on `[0, q_plus]`.
    BoundedPower {
        q_plus: f64,
        p: f64,
    },
}

/// What the quadrature engine needs from a one-dimensional law.
///
/// Expectations are written in the hazard variable `w = −log P(X > x)`, so
/// `E g(X) = ∫_0^∞ g(X(w)) e^{−w} dw` with `X(w)` from [`from_hazard`].
///
/// [`from_hazard`]: Marginal::from_hazard
pub trait Marginal {
    /// The value `x` with `P(X > x) = e^{−w}` (generalized inverse).
    #[allow(clippy::wrong_self_convention)]
    fn from_hazard(&self, w: f64) -> f64;
    /// Hazard levels where `from_hazard` has a kink or flat piece.
    fn hazard_breaks(&self) -> Vec<f64>;
    /// `Some(v)` for a point mass at `v`.
    fn point(&self) -> Option<f64>;
    fn log_survival(&self, x: f64) -> f64;

    fn quantile(&self, u: f64) -> f64 {
        self.from_hazard(-(-u).ln_1p())
    }

    /// `log E exp(a(X))`.
    fn log_expect(&self, a: &dyn Fn(f64) -> f64) -> f64 {
        if let Some(v) = self.point() {
            return a(v);
        }
        log_integral(
            |w| a(self.from_hazard(w)) - w,
            0.0,
            f64::INFINITY,
            &self.hazard_breaks(),
        )
    }

    fn mean(&self) -> f64 {
        self.log_expect(&|x: f64| x.ln()).exp()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be positive and finite (got {v})"
        )))
    }
}

impl FactorLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FactorLaw::PowerF { c, r } => {
                positive("power_f.c", c)?;
                if !(r > 1.0 && r.is_finite()) {
                    return Err(Error::Config(format!("power_f.r must exceed 1 (got {r})")));
                }
                Ok(())
            }
            FactorLaw::Constant { m } => {
                if (0.0..1.0).contains(&m) {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "constant factor m must lie in [0,1) (got {m})"
                    )))
                }
            }
        }
    }

    /// `log P(M > 1 − 1/t)`.
    pub fn log_survival_horizon(&self, t: f64) -> f64 {
        match *self {
            FactorLaw::PowerF { c, r } => {
                if t < 1.0 {
                    0.0
                } else if t == f64::INFINITY {
                    f64::NEG_INFINITY
                } else {
                    -c * t.powf(r - 1.0)
                }
            }
            FactorLaw::Constant { m } => {
                if t * (1.0 - m) < 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `f(t) = −t log P(M > 1 − 1/t)`.
    pub fn tail_value(&self, t: f64) -> f64 {
        let l = self.log_survival_horizon(t);
        if l == 0.0 {
            0.0
        } else {
            -t * l
        }
    }

    pub fn tail_function(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |t| self.tail_value(t))
    }

    pub fn ess_inf(&self) -> f64 {
        match *self {
            FactorLaw::PowerF { .. } => 0.0,
            FactorLaw::Constant { m } => m,
        }
    }

    pub fn ess_sup(&self) -> f64 {
        match *self {
            FactorLaw::PowerF { .. } => 1.0,
            FactorLaw::Constant { m } => m,
        }
    }

    /// Supremum of the support of `1/(1−M)`.
    pub fn horizon_sup(&self) -> f64 {
        match *self {
            FactorLaw::PowerF { .. } => f64::INFINITY,
            FactorLaw::Constant { m } => 1.0 / (1.0 - m),
        }
    }
}

impl Marginal for FactorLaw {
    fn from_hazard(&self, w: f64) -> f64 {
        match *self {
            FactorLaw::PowerF { c, r } => {
                if w <= c {
                    0.0
                } else {
                    1.0 - (c / w).powf(1.0 / (r - 1.0))
                }
            }
            FactorLaw::Constant { m } => m,
        }
    }

    fn hazard_breaks(&self) -> Vec<f64> {
        match *self {
            FactorLaw::PowerF { c, .. } => vec![c],
            FactorLaw::Constant { .. } => vec![],
        }
    }

    fn point(&self) -> Option<f64> {
        match *self {
            FactorLaw::Constant { m } => Some(m),
            FactorLaw::PowerF { .. } => None,
        }
    }

    fn log_survival(&self, m: f64) -> f64 {
        if m >= 1.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            FactorLaw::PowerF { c, r } => {
                if m < 0.0 {
                    0.0
                } else {
                    -c * (1.0 - m).powf(-(r - 1.0))
                }
            }
            FactorLaw::Constant { m: v } => {
                if m < v {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

impl IncrementLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IncrementLaw::Weibull { d, alpha } => {
                positive("weibull.d", d)?;
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::Config(format!(
                        "weibull.alpha must exceed 1 (got {alpha})"
                    )));
                }
                Ok(())
            }
            IncrementLaw::Constant { q } => positive("constant increment q", q),
            IncrementLaw::BoundedPower { q_plus, p } => {
                positive("bounded_power.q_plus", q_plus)?;
                positive("bounded_power.p", p)
            }
        }
    }

    /// `k(y) = −log P(Q > y)`.
    pub fn tail_value(&self, y: f64) -> f64 {
        let l = self.log_survival(y);
        if l == 0.0 {
            0.0
        } else {
            -l
        }
    }

    pub fn tail_function(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::from_fn(grid, |y| self.tail_value(y))
    }

    pub fn ess_inf(&self) -> f64 {
        match *self {
            IncrementLaw::Constant { q } => q,
            _ => 0.0,
        }
    }

    pub fn ess_sup(&self) -> f64 {
        match *self {
            IncrementLaw::Weibull { .. } => f64::INFINITY,
            IncrementLaw::Constant { q } => q,
            IncrementLaw::BoundedPower { q_plus, .. } => q_plus,
        }
    }
}

impl Marginal for IncrementLaw {
    fn from_hazard(&self, w: f64) -> f64 {
        match *self {
            IncrementLaw::Weibull { d, alpha } => (w / d).powf(1.0 / alpha),
            IncrementLaw::Constant { q } => q,
            IncrementLaw::BoundedPower { q_plus, p } => -q_plus * (-w / p).exp_m1(),
        }
    }

    fn hazard_breaks(&self) -> Vec<f64> {
        vec![]
    }

    fn point(&self) -> Option<f64> {
        match *self {
            IncrementLaw::Constant { q } => Some(q),
            _ => None,
        }
    }

    fn log_survival(&self, y: f64) -> f64 {
        match *self {
            IncrementLaw::Weibull { d, alpha } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -d * y.powf(alpha)
                }
            }
            IncrementLaw::Constant { q } => {
                if y < q {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            IncrementLaw::BoundedPower { q_plus, p } => {
                if y <= 0.0 {
                    0.0
                } else if y >= q_plus {
                    f64::NEG_INFINITY
                } else {
                    p * (-y / q_plus).ln_1p()
                }
            }
        }
    }
}
