//! Certified bounds on `log P(R > x)`.
//!
//! Lower: on the event `{M_i > 1 − δ_i, Q_i > q_i, i ≤ n}` the series for
//! `R` exceeds `q_n + (1−δ_n) q_{n−1} + (1−δ_n)(1−δ_{n−1}) q_{n−2} + ⋯`, so
//! `log P(R > that) ≥ Σ log P(M > 1−δ_k, Q > q_k)`. Blocks come from the
//! minimizer `t(y)` of the `h` objective.
//!
//! Upper: if `E exp(zQ + φ(zM) − φ(z)) ≤ 1` for large `z`, then
//! `ψ ≤ φ + C` after patching `φ` linearly near 0, and
//! `log P(R > x) ≤ −(φ*(x) − C)`.

use serde::{Deserialize, Serialize};

use crate::constants::gamma_index;
use crate::copulas::JointLaw;
use crate::error::{Error, Result};
use crate::gridfn::{Grid, GridFunction};
use crate::hfun::{h_eval, lambda_solve, HResult};
use crate::marginals::{FactorLaw, IncrementLaw};
use crate::numeric::golden_max;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub x: f64,
    /// `(δ_k, q_k)` in series order: the first block multiplies nothing.
    pub blocks: Vec<(f64, f64)>,
    pub log_bound: f64,
    /// `Σ_k Π_{i<k} (1−δ_i) q_k`; the bound holds for `P(R > reached)`.
    pub reached: f64,
}

/// `γ/(γ−1)` for power-law marginals, where `γ = αr/(α+r−1)`; 2 otherwise.
pub fn default_c_param(j: &JointLaw) -> f64 {
    match (j.factor, j.increment) {
        (FactorLaw::PowerF { r, .. }, IncrementLaw::Weibull { alpha, .. }) => {
            let g = gamma_index(alpha, r);
            g / (g - 1.0)
        }
        _ => 2.0,
    }
}

struct Block {
    delta: f64,
    q: f64,
    log_p: f64,
}

fn block_at(j: &JointLaw, y: f64) -> Result<Block> {
    let HResult { h, t_argmin: t, .. } = h_eval(j, y)?;
    let delta = 1.0 / t;
    let q = y / t;
    let log_p = j.joint_log_survival_t(t, q);
    if log_p == f64::NEG_INFINITY || !h.is_finite() {
        return Err(Error::Certificate(format!(
            "joint survival vanishes at y = {y}"
        )));
    }
    Ok(Block { delta, q, log_p })
}

fn h_and_slope(j: &JointLaw, x: f64) -> Result<(f64, f64)> {
    let eps = 1e-4;
    let h = h_eval(j, x)?.h;
    let hp = h_eval(j, x * (1.0 + eps))?.h;
    let hm = h_eval(j, x * (1.0 - eps))?.h;
    Ok((h, (hp - hm) / (2.0 * eps * x)))
}

/// Blocks in construction order from seed `y₁`; returns the chain and `x_n`.
fn chain(j: &JointLaw, y1: f64, n: usize, c: f64) -> Result<(Vec<Block>, f64)> {
    let first = block_at(j, y1)?;
    let mut x = first.q;
    let mut blocks = vec![first];
    for _ in 1..n {
        let (h, dh) = h_and_slope(j, x)?;
        if !(dh > 0.0 && h.is_finite()) {
            return Err(Error::Certificate(format!("h is not increasing at {x}")));
        }
        let y = x + c * h / dh;
        let b = block_at(j, y)?;
        x = (1.0 - b.delta) * x + b.q;
        blocks.push(b);
    }
    Ok((blocks, x))
}

/// Event-chain lower bound for `log P(R > x)`, using the best chain of at
/// most `n_blocks` blocks whose end point does not exceed `x`.
pub fn certified_lower(
    j: &JointLaw,
    x: f64,
    n_blocks: usize,
    c_param: f64,
) -> Result<LowerBoundCertificate> {
    if !(x > 0.0) || n_blocks == 0 || !(c_param > 0.0) {
        return Err(Error::Domain(format!(
            "certified_lower(x = {x}, n_blocks = {n_blocks}, c = {c_param})"
        )));
    }
    let mut best: Option<LowerBoundCertificate> = None;
    let mut last_err = None;
    // the bound improves with n up to a point and then degrades (or the
    // seed block shrinks to nothing); stop after a few non-improvements
    let mut stale = 0;
    for n in 1..=n_blocks {
        match chain_to(j, x, n, c_param) {
            Ok(cert) => {
                if best.as_ref().is_none_or(|b| cert.log_bound > b.log_bound) {
                    best = Some(cert);
                    stale = 0;
                } else {
                    stale += 1;
                }
            }
            Err(e) => {
                last_err = Some(e);
                stale += 1;
            }
        }
        if best.is_some() && stale >= 3 {
            break;
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Certificate(format!("x = {x}"))))
}

/// Bisects the seed so that the chain of `n` blocks ends just below `x`.
fn chain_to(j: &JointLaw, x: f64, n: usize, c: f64) -> Result<LowerBoundCertificate> {
    let end = |y: f64| chain(j, y, n, c).map(|(_, e)| e);
    let mut lo = x;
    while end(lo)? > x {
        lo *= 0.5;
        if lo < x * 1e-12 {
            return Err(Error::Certificate(format!("{n} blocks overshoot x = {x}")));
        }
    }
    let mut hi = if lo < x { 2.0 * lo } else { 2.0 * x };
    let mut tries = 0;
    while end(hi)? <= x {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::Certificate(format!(
                "{n} blocks cannot reach x = {x}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end(mid)? <= x {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let (blocks, _) = chain(j, lo, n, c)?;
    let log_bound = blocks.iter().map(|b| b.log_p).sum();
    let series: Vec<(f64, f64)> = blocks.iter().rev().map(|b| (b.delta, b.q)).collect();
    let mut reached = 0.0;
    let mut w = 1.0;
    for &(d, q) in &series {
        reached += w * q;
        w *= 1.0 - d;
    }
    Ok(LowerBoundCertificate {
        x,
        blocks: series,
        log_bound,
        reached,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperVerdict {
    Certified,
    Violated { z: f64, log_i: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperCertificate {
    pub verdict: UpperVerdict,
    /// `(z, log I_φ(z))` on the checked grid.
    pub log_i: Vec<(f64, f64)>,
    /// Patch `φ̄(x) = a x` on `[0, N]`, `φ + C` above; `None` unless certified.
    pub patch: Option<Patch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub n: f64,
    pub a: f64,
    pub c: f64,
}

impl UpperCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == UpperVerdict::Certified
    }

    /// `−(φ*(x) − C)`, an upper bound for `log P(R > x)`.
    pub fn log_bound(&self, phi: &GridFunction, x: f64) -> Result<Option<f64>> {
        match self.patch {
            Some(p) => Ok(Some(-(phi.conjugate_at(x)? - p.c))),
            None => Ok(None),
        }
    }
}

/// `φ_B(z) = z⁴ / (64 B³)` sampled on `grid`: the comonotone majorant for
/// `f(t) = t²`, `k(y) = y²`.
pub fn phi_b(b: f64, grid: &Grid) -> Result<GridFunction> {
    GridFunction::from_fn(grid, |z| z.powi(4) / (64.0 * b * b * b))
}

fn log_i_at(j: &JointLaw, phi: &GridFunction, z: f64) -> f64 {
    j.log_expect(&|m: f64| phi.eval_nonneg(z * m), &|q: f64| z * q) - phi.eval_nonneg(z)
}

/// Checks `I_φ(z) ≤ 1` on `zgrid` and, if it holds, computes the patch
/// constants with `N = min zgrid`.
pub fn certify_upper(j: &JointLaw, phi: &GridFunction, zgrid: &Grid) -> Result<UpperCertificate> {
    let mut log_i = Vec::with_capacity(zgrid.len());
    let mut verdict = UpperVerdict::Certified;
    for &z in zgrid.points() {
        let v = log_i_at(j, phi, z);
        if v.is_nan() {
            return Err(Error::Quadrature(format!("I_φ({z}) is NaN")));
        }
        log_i.push((z, v));
        let tol = 1e-9 * phi.eval_nonneg(z).abs().max(1.0);
        if verdict == UpperVerdict::Certified && v > tol {
            verdict = UpperVerdict::Violated { z, log_i: v };
        }
    }
    let patch = if verdict == UpperVerdict::Certified {
        Some(patch_constants(j, phi, zgrid.min())?)
    } else {
        None
    };
    Ok(UpperCertificate {
        verdict,
        log_i,
        patch,
    })
}

/// `a ≥ sup_{z≤N} λ(z)/z` makes `E exp(zQ − a z(1−M)) ≤ 1` below `N`;
/// `C = sup_{x≤N} (a x − φ(x))`.
fn patch_constants(j: &JointLaw, phi: &GridFunction, n: f64) -> Result<Patch> {
    let zs = Grid::geometric(n * 1e-4, n, 16)?;
    let mut a: f64 = 0.0;
    for &z in zs.points() {
        a = a.max(lambda_solve(j, z)? / z);
    }
    let a = a * (1.0 + 1e-9);
    let g = |x: f64| a * x - phi.eval_nonneg(x);
    let (_, c) = golden_max(&g, 0.0, n, 1e-12, 200);
    let c = c.max(g(0.0)).max(g(n)).max(0.0);
    Ok(Patch { n, a, c })
}
