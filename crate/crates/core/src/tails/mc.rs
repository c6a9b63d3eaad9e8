//! Monte Carlo for `R_n` started from `R_0 = 0`.
//!
//! Paths use the series form `R_n = Σ_{k≤n} M_1⋯M_{k−1} Q_k`, which has the
//! law of the forward recursion and makes every path non-decreasing in the
//! horizon. Path `i` draws from its own ChaCha stream `(seed, i)`, so results
//! do not depend on the thread count or chunking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::JointLaw;

const CHUNK: usize = 4096;

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// `n_paths` draws of `R_horizon`.
pub fn mc_sample(j: &JointLaw, n_paths: usize, horizon: usize, seed: u64) -> Vec<f64> {
    mc_sample_multi(std::slice::from_ref(j), n_paths, horizon, seed)
        .pop()
        .unwrap_or_default()
}

/// Draws of `R_horizon` for several laws from the same uniforms (common
/// random numbers). Returns one vector per law.
pub fn mc_sample_multi(
    laws: &[JointLaw],
    n_paths: usize,
    horizon: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let nl = laws.len();
    let mut flat = vec![0.0; n_paths * nl];
    flat.par_chunks_mut(CHUNK * nl.max(1))
        .enumerate()
        .for_each(|(c, out)| {
            let mut r = vec![0.0; nl];
            let mut prod = vec![1.0; nl];
            for (p, row) in out.chunks_mut(nl.max(1)).enumerate() {
                let mut rng = path_rng(seed, c * CHUNK + p);
                r.iter_mut().for_each(|v| *v = 0.0);
                prod.iter_mut().for_each(|v| *v = 1.0);
                for _ in 0..horizon {
                    let u1: f64 = rng.random();
                    let u2: f64 = rng.random();
                    let mut alive = false;
                    for (l, law) in laws.iter().enumerate() {
                        if prod[l] == 0.0 {
                            continue;
                        }
                        let (m, q) = law.transform(u1, u2);
                        r[l] += prod[l] * q;
                        prod[l] *= m;
                        alive |= prod[l] != 0.0;
                    }
                    if !alive {
                        break;
                    }
                }
                row.copy_from_slice(&r);
            }
        });
    (0..nl)
        .map(|l| flat.iter().skip(l).step_by(nl).copied().collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderRow {
    pub probe: f64,
    /// `E(R₁ − a)₊` and `E(R₂ − a)₊`.
    pub stop_loss: (f64, f64),
    pub std_err: (f64, f64),
    /// First minus second.
    pub diff: f64,
    /// Standard error of the paired difference.
    pub paired_se: f64,
    /// `sqrt(se₁² + se₂²)`.
    pub pooled_se: f64,
}

impl ConvexOrderRow {
    /// `E(R₁ − a)₊ ≥ E(R₂ − a)₊` up to `k` pooled standard errors.
    pub fn dominates(&self, k: f64) -> bool {
        self.diff >= -k * self.pooled_se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderReport {
    pub rows: Vec<ConvexOrderRow>,
    pub means: (f64, f64),
    pub mean_se: (f64, f64),
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Compares `E(R − a)₊` under two laws sharing random numbers.
pub fn convex_order_check(
    j1: &JointLaw,
    j2: &JointLaw,
    probes: &[f64],
    n_paths: usize,
    horizon: usize,
    seed: u64,
) -> ConvexOrderReport {
    let s = mc_sample_multi(&[*j1, *j2], n_paths, horizon, seed);
    report_from_samples(&s[0], &s[1], probes)
}

pub(crate) fn report_from_samples(a: &[f64], b: &[f64], probes: &[f64]) -> ConvexOrderReport {
    let rows = probes
        .iter()
        .map(|&p| {
            let xa: Vec<f64> = a.iter().map(|r| (r - p).max(0.0)).collect();
            let xb: Vec<f64> = b.iter().map(|r| (r - p).max(0.0)).collect();
            let d: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x - y).collect();
            let (ma, sa) = mean_se(&xa);
            let (mb, sb) = mean_se(&xb);
            let (md, sd) = mean_se(&d);
            ConvexOrderRow {
                probe: p,
                stop_loss: (ma, mb),
                std_err: (sa, sb),
                diff: md,
                paired_se: sd,
                pooled_se: sa.hypot(sb),
            }
        })
        .collect();
    let (m1, s1) = mean_se(a);
    let (m2, s2) = mean_se(b);
    ConvexOrderReport {
        rows,
        means: (m1, m2),
        mean_se: (s1, s2),
    }
}
