//! The log-MGF `ψ(z) = log E e^{zR}` from the fixed point
//! `ψ(z) = log E exp(zQ + ψ(zM))`.
//!
//! The default scheme marches up the grid: since `zM ≤ z`, the value at a
//! node only needs `ψ` at or below that node, so each node is a scalar fixed
//! point in its own value (the cell just below it is interpolated towards
//! the trial value). Below the first node `ψ` is continued by
//! `E R · z + c z²`, with `c` fixed by the first node.
//!
//! A damped Jacobi iteration from `ψ₀ = 0` is available as
//! [`MgfScheme::Jacobi`]; it converges like `R_n → R` and can be slow when
//! `M` has mass near 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copulas::JointLaw;
use crate::error::{Error, Result};
use crate::gridfn::{Grid, GridFunction};
use crate::marginals::{IncrementLaw, Marginal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MgfScheme {
    Marching,
    Jacobi { relaxation: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfSettings {
    pub scheme: MgfScheme,
    /// Bound on the relative fixed-point defect of the returned solution.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MgfSettings {
    fn default() -> Self {
        Self {
            scheme: MgfScheme::Marching,
            tol: 1e-9,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MgfSolution {
    pub zgrid: Grid,
    pub psi: GridFunction,
    pub iterations: usize,
    /// `sup_i |T ψ(z_i) − ψ(z_i)| / ψ(z_i)` after convexification.
    pub residual: f64,
}

impl MgfSolution {
    /// `(z, ψ, defect)` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,psi,residual\n");
        for (z, p) in self.psi.xs().iter().zip(self.psi.ys()) {
            s.push_str(&format!("{z},{p},{}\n", self.residual));
        }
        s
    }
}

/// Interpolation of the current iterate, with the small-`z` model.
struct Psi<'a> {
    zs: &'a [f64],
    ps: &'a [f64],
    mean: f64,
}

impl Psi<'_> {
    fn at(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let (z0, p0) = (self.zs[0], self.ps[0]);
        if s <= z0 {
            let u = s / z0;
            return self.mean * s + (p0 - self.mean * z0) * u * u;
        }
        let n = self.zs.len();
        let i = self.zs.partition_point(|&z| z < s).min(n - 1);
        let (xa, ya, xb, yb) = (self.zs[i - 1], self.ps[i - 1], self.zs[i], self.ps[i]);
        if s == xb {
            return yb;
        }
        if ya > 0.0 && yb > 0.0 {
            let t = (s / xa).ln() / (xb / xa).ln();
            (ya.ln() + t * (yb / ya).ln()).exp()
        } else {
            ya + (yb - ya) * (s - xa) / (xb - xa)
        }
    }
}

fn apply(j: &JointLaw, z: f64, psi: &Psi) -> f64 {
    j.log_expect(&|m: f64| psi.at(z * m), &|q: f64| z * q)
}

/// `E Q / (1 − E M)`.
fn mean_r(j: &JointLaw) -> Result<f64> {
    let em = j.factor.mean();
    let eq = j.increment.mean();
    if !(em < 1.0) || !eq.is_finite() {
        return Err(Error::Domain(format!(
            "E M = {em}, E Q = {eq}: no stationary mean"
        )));
    }
    Ok(eq / (1.0 - em))
}

pub fn mgf_solve(j: &JointLaw, zgrid: &Grid, tol: f64, max_iter: usize) -> Result<MgfSolution> {
    mgf_solve_with(
        j,
        zgrid,
        &MgfSettings {
            tol,
            max_iter,
            ..MgfSettings::default()
        },
    )
}

pub fn mgf_solve_with(j: &JointLaw, zgrid: &Grid, s: &MgfSettings) -> Result<MgfSolution> {
    let zs = zgrid.points();
    if zs.len() < 2 {
        return Err(Error::GridTooShort(
            "mgf_solve needs at least two nodes".into(),
        ));
    }
    let mean = mean_r(j)?;
    let (mut ps, iterations) = match s.scheme {
        MgfScheme::Marching => march(j, zs, mean, s.max_iter)?,
        MgfScheme::Jacobi { relaxation } => jacobi(j, zs, mean, relaxation, s)?,
    };
    convexify(zs, &mut ps);
    let psi_view = Psi { zs, ps: &ps, mean };
    let residual = zs
        .par_iter()
        .zip(ps.par_iter())
        .map(|(&z, &p)| {
            let d = (apply(j, z, &psi_view) - p).abs();
            if p > 0.0 {
                d / p
            } else {
                d
            }
        })
        .reduce(|| 0.0, f64::max);
    if !residual.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite defect in ψ (z up to {})",
            zgrid.max()
        )));
    }
    if residual > s.tol {
        return Err(Error::NonConvergence(format!(
            "ψ defect {residual:e} exceeds {:e} after {iterations} iterations",
            s.tol
        )));
    }
    let psi = GridFunction::new(zs.to_vec(), ps)?;
    Ok(MgfSolution {
        zgrid: zgrid.clone(),
        psi,
        iterations,
        residual,
    })
}

fn march(j: &JointLaw, zs: &[f64], mean: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let mut ps: Vec<f64> = Vec::with_capacity(zs.len());
    let mut total = 0;
    for (i, &z) in zs.iter().enumerate() {
        let guess = match i {
            0 => mean * z,
            1 => ps[0] * z / zs[0],
            _ => {
                let slope = (ps[i - 1] / ps[i - 2]).ln() / (zs[i - 1] / zs[i - 2]).ln();
                let g = ps[i - 1] * (z / zs[i - 1]).powf(slope);
                if g.is_finite() {
                    g
                } else {
                    ps[i - 1] * z / zs[i - 1]
                }
            }
        };
        ps.push(guess);
        let mut t = |p: f64, ps: &mut Vec<f64>| {
            ps[i] = p;
            total += 1;
            apply(
                j,
                z,
                &Psi {
                    zs: &zs[..=i],
                    ps,
                    mean,
                },
            )
        };
        // secant on g(p) = T(p) − p, which is nearly affine in p
        let mut p0 = guess;
        let mut g0 = t(p0, &mut ps) - p0;
        let mut p1 = p0 + g0;
        let mut done = false;
        // quadrature noise can stall the secant just above its stopping rule
        let mut best = (p0, g0.abs());
        for _ in 0..max_iter.max(2) {
            if !p1.is_finite() {
                return Err(Error::NonConvergence(format!("ψ({z}) diverged")));
            }
            let g1 = t(p1, &mut ps) - p1;
            if g1.abs() < best.1 {
                best = (p1, g1.abs());
            }
            if g1.abs() <= 1e-15 * p1.abs().max(1e-300) || g1 == 0.0 {
                done = true;
                break;
            }
            let p2 = if g1 != g0 {
                p1 - g1 * (p1 - p0) / (g1 - g0)
            } else {
                p1 + g1
            };
            if (p2 - p1).abs() <= 1e-14 * p1.abs() {
                p1 = p2;
                done = true;
                break;
            }
            (p0, g0, p1) = (p1, g1, p2);
        }
        if !done {
            if best.1 <= 1e-10 * best.0.abs() {
                p1 = best.0;
            } else {
                return Err(Error::NonConvergence(format!(
                    "scalar fixed point at z = {z}"
                )));
            }
        }
        ps[i] = p1;
    }
    Ok((ps, total))
}

fn jacobi(
    j: &JointLaw,
    zs: &[f64],
    mean: f64,
    relaxation: f64,
    s: &MgfSettings,
) -> Result<(Vec<f64>, usize)> {
    if !(relaxation > 0.0 && relaxation <= 1.0) {
        return Err(Error::Config(format!(
            "relaxation must lie in (0, 1] (got {relaxation})"
        )));
    }
    let mut ps = vec![0.0; zs.len()];
    for it in 1..=s.max_iter {
        let view = Psi { zs, ps: &ps, mean };
        let next: Vec<f64> = zs.par_iter().map(|&z| apply(j, z, &view)).collect();
        let mut change: f64 = 0.0;
        for (p, n) in ps.iter_mut().zip(next) {
            let v = (1.0 - relaxation) * *p + relaxation * n;
            change = change.max((v - *p).abs() / v.abs().max(1e-300));
            *p = v;
        }
        if !change.is_finite() {
            return Err(Error::NonConvergence(format!(
                "ψ iteration diverged at step {it}"
            )));
        }
        if change < 0.1 * s.tol {
            return Ok((ps, it));
        }
    }
    Err(Error::NonConvergence(format!(
        "ψ iteration did not settle in {} steps",
        s.max_iter
    )))
}

/// Replaces `ps` by the greatest convex minorant through the origin.
fn convexify(zs: &[f64], ps: &mut [f64]) {
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (&z, &p) in zs.iter().zip(ps.iter()) {
        while hull.len() >= 2 {
            let (ax, ay) = hull[hull.len() - 2];
            let (bx, by) = hull[hull.len() - 1];
            if (by - ay) * (z - ax) >= (p - ay) * (bx - ax) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((z, p));
    }
    let mut k = 0;
    for (z, p) in zs.iter().zip(ps.iter_mut()) {
        while hull[k + 1].0 < *z {
            k += 1;
        }
        let (ax, ay) = hull[k];
        let (bx, by) = hull[k + 1];
        if *z != bx {
            *p = ay + (by - ay) * (z - ax) / (bx - ax);
        }
    }
}

/// `ψ*(x)`, the Chernoff exponent: `log P(R > x) ≤ −ψ*(x)`.
pub fn chernoff(ms: &MgfSolution, x: f64) -> Result<f64> {
    ms.psi.conjugate_at(x)
}

/// `Σ_{k≥0} log E e^{z m^k Q}`, the log-MGF of `R` when `M ≡ m`.
pub fn mgf_series_constant_factor(q: &IncrementLaw, m: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut s = z;
    for _ in 0..10_000 {
        let term = q.log_expect(&|y: f64| s * y);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || m == 0.0 {
            break;
        }
        s *= m;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::Dependence;
    use crate::marginals::FactorLaw;

    fn const_m(m: f64, q: IncrementLaw) -> JointLaw {
        JointLaw::new(FactorLaw::Constant { m }, q, Dependence::Independent).unwrap()
    }

    #[test]
    fn deterministic_generator() {
        let j = const_m(0.5, IncrementLaw::Constant { q: 1.0 });
        let g = Grid::geometric(1e-3, 100.0, 16).unwrap();
        let ms = mgf_solve(&j, &g, 1e-10, 100).unwrap();
        for (z, p) in ms.psi.xs().iter().zip(ms.psi.ys()) {
            assert!((p - 2.0 * z).abs() <= 1e-12 * p, "{z}: {p}");
        }
        assert!(chernoff(&ms, 1.5).unwrap().abs() < 1e-9);
        assert!(chernoff(&ms, 1.99).unwrap().abs() < 1e-9);
        assert_eq!(chernoff(&ms, 2.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_factor_is_increment_mgf() {
        let q = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };
        let j = const_m(0.0, q);
        let g = Grid::geometric(0.01, 50.0, 16).unwrap();
        let ms = mgf_solve(&j, &g, 1e-10, 100).unwrap();
        for (z, p) in ms.psi.xs().iter().zip(ms.psi.ys()) {
            let want = q.log_expect(&|y: f64| z * y);
            assert!((p - want).abs() <= 1e-10 * want, "{z}: {p} vs {want}");
        }
    }

    #[test]
    fn constant_factor_matches_series() {
        let q = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };
        let j = const_m(0.5, q);
        // 0.5 is exactly eight grid steps, so ψ(zm) lands on nodes
        let g = Grid::with_ratio(1e-4, 2f64.powf(1.0 / 8.0), 8 * 21).unwrap();
        let ms = mgf_solve(&j, &g, 1e-10, 100).unwrap();
        for (z, p) in ms.psi.xs().iter().zip(ms.psi.ys()) {
            if *z < 1e-2 {
                continue;
            }
            let want = mgf_series_constant_factor(&q, 0.5, *z);
            assert!((p - want).abs() <= 1e-8 * want, "{z}: {p} vs {want}");
        }
    }

    #[test]
    fn jacobi_agrees_with_marching() {
        let j = JointLaw::new(
            FactorLaw::PowerF { c: 1.0, r: 2.0 },
            IncrementLaw::Weibull { d: 1.0, alpha: 2.0 },
            Dependence::Independent,
        )
        .unwrap();
        let g = Grid::geometric(1e-3, 10.0, 16).unwrap();
        let a = mgf_solve(&j, &g, 1e-9, 100).unwrap();
        let s = MgfSettings {
            scheme: MgfScheme::Jacobi { relaxation: 0.5 },
            tol: 1e-8,
            max_iter: 2000,
        };
        let b = mgf_solve_with(&j, &g, &s).unwrap();
        for (x, y) in a.psi.ys().iter().zip(b.psi.ys()) {
            assert!((x - y).abs() <= 1e-6 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn psi_over_z_non_decreasing() {
        let j = JointLaw::new(
            FactorLaw::PowerF { c: 1.0, r: 2.0 },
            IncrementLaw::Weibull { d: 1.0, alpha: 2.0 },
            Dependence::Fgm { theta: -0.5 },
        )
        .unwrap();
        let g = Grid::geometric(1e-3, 30.0, 16).unwrap();
        let ms = mgf_solve(&j, &g, 1e-9, 100).unwrap();
        let r: Vec<f64> = ms
            .psi
            .xs()
            .iter()
            .zip(ms.psi.ys())
            .map(|(z, p)| p / z)
            .collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
        assert!((r[0] - mean_r(&j).unwrap()).abs() < 1e-2);
    }

    #[test]
    fn convex_minorant() {
        let zs = [1.0, 2.0, 3.0, 4.0];
        let mut ps = [1.0, 3.0, 3.5, 8.0];
        convexify(&zs, &mut ps);
        assert_eq!(ps[0], 1.0);
        assert!((ps[1] - 2.25).abs() < 1e-15);
        assert!((ps[2] - 3.5).abs() < 1e-15);
        assert_eq!(ps[3], 8.0);
    }
}
