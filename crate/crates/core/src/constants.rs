//! Closed-form asymptotic constants.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hfun::h_ratio_co;

/// A real number or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Extended::Infinite
        } else {
            Extended::Finite(v)
        }
    }
}

/// Lower-bound constant `c_{t,γ}`.
///
/// | `t` | `γ` | value |
/// |---|---|---|
/// | any | 1 | 1 |
/// | finite | finite > 1 | `[t (1 − (1 − 1/t)^{γ/(γ−1)})]^{γ−1}` |
/// | ∞ | finite > 1 | `(γ/(γ−1))^{γ−1}` |
/// | ∞ | ∞ | `e` |
/// | finite | ∞ | `(1 + 1/t)^{1+t}` |
pub fn c_lower(t: Extended, gamma: Extended) -> Result<f64> {
    if let Extended::Finite(tv) = t {
        if !(tv > 1.0) {
            return Err(Error::Domain(format!("c_lower needs t > 1 (got {tv})")));
        }
    }
    if let Extended::Finite(g) = gamma {
        if !(g >= 1.0) {
            return Err(Error::Domain(format!("c_lower needs γ >= 1 (got {g})")));
        }
    }
    Ok(match (t, gamma) {
        (_, Extended::Finite(1.0)) => 1.0,
        (Extended::Finite(tv), Extended::Finite(g)) => {
            let e = g - 1.0;
            // (1 − 1/t)^{γ/(γ−1)} = exp(γ/(γ−1) · log1p(−1/t))
            let inner = -((g / e) * (-1.0 / tv).ln_1p()).exp_m1();
            (e * (tv * inner).ln()).exp()
        }
        (Extended::Infinite, Extended::Finite(g)) => prefactor_from_gamma(g),
        (Extended::Infinite, Extended::Infinite) => E,
        (Extended::Finite(tv), Extended::Infinite) => ((1.0 + tv) * (1.0 / tv).ln_1p()).exp(),
    })
}

fn prefactor_from_gamma(g: f64) -> f64 {
    let e = g - 1.0;
    // (γ/(γ−1))^{γ−1} = exp((γ−1) log(1 + 1/(γ−1)))
    (e * (1.0 / e).ln_1p()).exp()
}

/// `αr/(α+r−1)`.
pub fn gamma_index(alpha: f64, r: f64) -> f64 {
    alpha * r / (alpha + r - 1.0)
}

/// The same index written through conjugate exponents: `βr*/(βr*−1)` with
/// `β = α/(α−1)`, `r* = r/(r−1)`.
pub fn gamma_index_dual(alpha: f64, r: f64) -> f64 {
    let beta = alpha / (alpha - 1.0);
    let rs = r / (r - 1.0);
    beta * rs / (beta * rs - 1.0)
}

/// `(γ/(γ−1))^{γ−1}` with `γ = gamma_index(α, r)`.
pub fn prefactor_ind(alpha: f64, r: f64) -> f64 {
    prefactor_from_gamma(gamma_index(alpha, r))
}

/// `(r/(r−1))^{r−1}`.
pub fn prefactor_bounded(r: f64) -> f64 {
    prefactor_from_gamma(r)
}

/// `(α−1)/(α+r−1) · (r/(α−1))^{r/(α+r−1)} · (γ/(γ−1))^{γ−1}`.
pub fn b_co(alpha: f64, r: f64) -> f64 {
    let s = alpha + r - 1.0;
    let g = alpha * r / s;
    (alpha - 1.0) / s * (r / (alpha - 1.0)).powf(r / s) * (g / (g - 1.0)).powf(g - 1.0)
}

/// Limit of `k←(x) (k*)←(x) / x` for `k ∈ R_α`: `α (β−1)^{1/β}`.
pub fn kinv_limit(alpha: f64) -> f64 {
    let beta = alpha / (alpha - 1.0);
    alpha * (beta - 1.0).powf(1.0 / beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantName {
    CLower,
    GammaIndex,
    PrefactorInd,
    PrefactorBounded,
    #[serde(rename = "b_co")]
    BCo,
    RatioCo,
    KinvLimit,
}

/// A named constant with its parameters (`t`, `gamma`, `alpha`, `r`, ...).
/// `t = inf` / `gamma = inf` select the infinite branches of `c_lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantQuery {
    pub name: ConstantName,
    pub params: BTreeMap<String, f64>,
}

impl ConstantQuery {
    pub fn new(name: ConstantName, params: &[(&str, f64)]) -> Self {
        Self {
            name,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Domain(format!("{:?} needs parameter `{key}`", self.name)))
    }

    fn exponent(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        if v > 1.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!(
                "`{key}` must be finite and > 1 (got {v})"
            )))
        }
    }

    pub fn evaluate(&self) -> Result<f64> {
        match self.name {
            ConstantName::CLower => c_lower(self.get("t")?.into(), self.get("gamma")?.into()),
            ConstantName::GammaIndex => {
                Ok(gamma_index(self.exponent("alpha")?, self.exponent("r")?))
            }
            ConstantName::PrefactorInd => {
                Ok(prefactor_ind(self.exponent("alpha")?, self.exponent("r")?))
            }
            ConstantName::PrefactorBounded => Ok(prefactor_bounded(self.exponent("r")?)),
            ConstantName::BCo => Ok(b_co(self.exponent("alpha")?, self.exponent("r")?)),
            ConstantName::RatioCo => Ok(h_ratio_co(self.exponent("r")?, self.exponent("alpha")?)),
            ConstantName::KinvLimit => Ok(kinv_limit(self.exponent("alpha")?)),
        }
    }
}
