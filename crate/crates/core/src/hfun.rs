//! The rate function
//! `h(x) = inf_{t ≥ 1} −t log P(1/(1−M) > t, Q > x/t)`,
//! its minimiser, closed forms for power-law marginals and the
//! λ-heuristic envelope.

use serde::{Deserialize, Serialize};

use crate::copulas::JointLaw;
use crate::error::{Error, Result};
use crate::gridfn::{Grid, GridFunction};
use crate::numeric::{find_root, golden_min};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HResult {
    pub x: f64,
    pub h: f64,
    pub t_argmin: f64,
    /// The minimiser sits at `t = 1` or needed the search window enlarged.
    pub boundary_flag: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct HSettings {
    pub scan_points: usize,
    pub max_doublings: u32,
}

impl Default for HSettings {
    fn default() -> Self {
        Self {
            scan_points: 2048,
            max_doublings: 20,
        }
    }
}

/// `−t log P(1/(1−M) > t, Q > x/t)`; `+inf` where the survival vanishes.
pub fn h_objective(j: &JointLaw, x: f64, t: f64) -> f64 {
    let l = j.joint_log_survival_t(t, x / t);
    if l == f64::NEG_INFINITY {
        f64::INFINITY
    } else if l == 0.0 {
        0.0
    } else {
        -t * l
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

pub fn h_eval(j: &JointLaw, x: f64) -> Result<HResult> {
    h_eval_with(j, x, &HSettings::default())
}

pub fn h_eval_with(j: &JointLaw, x: f64, s: &HSettings) -> Result<HResult> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("h evaluated at x = {x}")));
    }
    let obj = |t: f64| h_objective(j, x, t);
    let cap = j.factor.horizon_sup().min(1e12);

    // coarse upper estimate of h
    let coarse_hi = (100.0 * x.max(1.0)).max(10.0).min(cap.max(1.0 + 1e-9));
    let mut h_up = f64::INFINITY;
    let mut t_up = 1.0;
    for t in log_grid(1.0, coarse_hi, 96) {
        let v = obj(t);
        if v < h_up {
            h_up = v;
            t_up = t;
        }
    }
    if h_up == f64::INFINITY {
        for t in log_grid(1.0, cap.max(2.0), 4 * s.scan_points) {
            let v = obj(t);
            if v < h_up {
                h_up = v;
                t_up = t;
            }
        }
    }
    if h_up == f64::INFINITY {
        return Err(Error::InfiniteObjective(x));
    }

    // −t log P(TQ > x) is a lower bound of the objective, and
    // P(TQ > x) <= P(T > √x) + P(Q > √x) under any coupling
    let r = x.sqrt();
    let lt = j.joint_log_survival_t(r, -1.0);
    let lq = j.joint_log_survival_t(0.5, r);
    let lp = crate::numeric::log_sum_exp(lt, lq).min(0.0);
    let mut t_max = if lp < -1e-12 {
        (2.0 * h_up / -lp).max(2.0)
    } else {
        cap
    };
    t_max = t_max.max(2.0 * t_up).min(cap.max(1.0 + 1e-9));
    if !(t_max > 1.0) {
        t_max = 1.0 + 1e-9;
    }

    let mut flag = false;
    let n = s.scan_points.max(16);
    for round in 0..=s.max_doublings {
        let ts: Vec<f64> = log_grid(1.0, t_max, n).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| obj(t)).collect();
        let mut k = 0;
        for i in 1..n {
            if vals[i] < vals[k] {
                k = i;
            }
        }
        if vals[k] == f64::INFINITY {
            return Err(Error::InfiniteObjective(x));
        }
        if k == n - 1 && t_max < cap && round < s.max_doublings {
            t_max = (2.0 * t_max).min(cap);
            flag = true;
            continue;
        }
        let (mut t_best, mut h_best) = (ts[k], vals[k]);
        let lo = ts[k.saturating_sub(1)].ln();
        let hi = ts[(k + 1).min(n - 1)].ln();
        if hi > lo {
            let (u, v) = golden_min(&|u: f64| obj(u.exp()), lo, hi, 1e-15, 200);
            if v < h_best {
                h_best = v;
                t_best = u.exp();
            }
        }
        if k == 0 || k == n - 1 {
            flag = true;
        }
        return Ok(HResult {
            x,
            h: h_best,
            t_argmin: t_best,
            boundary_flag: flag,
        });
    }
    unreachable!("the last round always returns")
}

/// `h` on every node of `grid`; unreachable points map to `+inf` with the
/// boundary flag set.
pub fn h_curve(j: &JointLaw, grid: &Grid) -> Vec<HResult> {
    grid.points()
        .iter()
        .map(|&x| match h_eval(j, x) {
            Ok(r) => r,
            Err(_) => HResult {
                x,
                h: f64::INFINITY,
                t_argmin: f64::NAN,
                boundary_flag: true,
            },
        })
        .collect()
}

/// Closed form of `h` for independent `f(t) = c t^r`, `k(y) = d y^α`:
/// `d ((α+r−1)/r) ((c/d) r/(α−1))^{(α−1)/(α+r−1)} x^{αr/(α+r−1)}`.
pub fn h_closed_ind(c: f64, r: f64, d: f64, alpha: f64, x: f64) -> f64 {
    let s = alpha + r - 1.0;
    d * (s / r) * ((c / d) * r / (alpha - 1.0)).powf((alpha - 1.0) / s) * x.powf(alpha * r / s)
}

/// Asymptotic ratio `h_co / h_ind`.
pub fn h_ratio_co(r: f64, alpha: f64) -> f64 {
    let s = alpha + r - 1.0;
    (alpha - 1.0) / s * (r / (alpha - 1.0)).powf(r / s)
}

/// `min{f(x/q₋), k((1−m₋)x)/(1−m₋)}` for countermonotone power-law marginals
/// with `q₋ = ess inf Q > 0` and `m₋ = ess inf M`.
#[allow(clippy::too_many_arguments)]
pub fn h_counter_closed(
    c: f64,
    r: f64,
    d: f64,
    alpha: f64,
    q_minus: f64,
    m_minus: f64,
    x: f64,
) -> Result<f64> {
    if !(q_minus > 0.0) {
        return Err(Error::Domain(format!(
            "countermonotone closed form needs q₋ > 0 (got {q_minus})"
        )));
    }
    if !(0.0..1.0).contains(&m_minus) {
        return Err(Error::Domain(format!(
            "m₋ must lie in [0,1) (got {m_minus})"
        )));
    }
    let f = c * (x / q_minus).powf(r);
    let k = d * ((1.0 - m_minus) * x).powf(alpha) / (1.0 - m_minus);
    Ok(f.min(k))
}

/// `Λ(λ) = log E exp(zQ − λ(1−M))`.
pub fn lambda_log_mgf(j: &JointLaw, z: f64, lambda: f64) -> f64 {
    j.log_expect(&|m: f64| -lambda * (1.0 - m), &|q: f64| z * q)
}

/// The root `λ(z)` of `E exp(zQ − λ(1−M)) = 1`.
pub fn lambda_solve(j: &JointLaw, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("lambda_solve at z = {z}")));
    }
    let g = |l: f64| lambda_log_mgf(j, z, l);
    let g0 = g(0.0);
    if g0 <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = g0.max(1.0);
    let mut tries = 0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 || !hi.is_finite() {
            return Err(Error::NoBracket(format!("λ(z) at z = {z}")));
        }
    }
    find_root(&g, 0.0, hi, 1e-14)
}

pub fn lambda_curve(j: &JointLaw, zgrid: &Grid) -> Result<GridFunction> {
    let ys = zgrid
        .points()
        .iter()
        .map(|&z| lambda_solve(j, z))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(zgrid.points().to_vec(), ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::Dependence;
    use crate::marginals::{FactorLaw, IncrementLaw};

    const PF: FactorLaw = FactorLaw::PowerF { c: 1.0, r: 2.0 };
    const WB: IncrementLaw = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };

    fn law(dep: Dependence) -> JointLaw {
        JointLaw::new(PF, WB, dep).unwrap()
    }

    #[test]
    fn after_h_is_power() {
        let j = JointLaw::explicit_after_h(2.0).unwrap();
        let r = h_eval(&j, 4.0).unwrap();
        assert!((r.h - 16.0).abs() < 1e-9 * 16.0, "{r:?}");
        assert!(r.t_argmin >= 1.0 && r.t_argmin <= 4.0);
    }

    #[test]
    fn independent_example() {
        let r = h_eval(&law(Dependence::Independent), 8.0).unwrap();
        assert!((r.h - 30.238).abs() < 1e-3, "{r:?}");
        assert!((r.t_argmin - 3.1748).abs() < 1e-3, "{r:?}");
        // brute force over a dense grid of t
        let brute = (0..2_000_000)
            .map(|i| 1.0 + i as f64 * 5e-6)
            .map(|t| t * t + 64.0 / t)
            .fold(f64::INFINITY, f64::min);
        assert!(r.h <= brute + 1e-9 && brute - r.h < 1e-8);
    }

    #[test]
    fn comonotone_example() {
        let r = h_eval(&law(Dependence::Comonotone), 8.0).unwrap();
        assert!((r.h - 16.0).abs() < 1e-8, "{r:?}");
        assert!((r.t_argmin - 4.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn countermonotone_is_unreachable() {
        // (e^{-t} + e^{-(x/t)²} − 1)₊ vanishes for every t once x >= 2/e
        assert!(matches!(
            h_eval(&law(Dependence::Countermonotone), 2.0),
            Err(Error::InfiniteObjective(_))
        ));
    }

    #[test]
    fn closed_forms() {
        let v = h_closed_ind(1.0, 2.0, 1.0, 2.0, 8.0);
        assert!((v - 1.5 * 2f64.powf(1.0 / 3.0) * 16.0).abs() < 1e-10);
        assert!((h_closed_ind(1.0, 2.0, 1.0, 2.0, 1.0) - 1.889_881_574_8).abs() < 1e-9);
        assert!((h_closed_ind(1.0, 2.0, 1.0, 3.0, 10.0) - 63.245_553_203).abs() < 1e-8);
        assert!((h_ratio_co(2.0, 2.0) - 0.529_133_684_4).abs() < 1e-9);
        assert!((h_ratio_co(2.0, 3.0) - 0.5).abs() < 1e-14);
        assert!((h_ratio_co(1.0 + 1e-12, 2.0) - 0.5).abs() < 1e-9);
        assert_eq!(
            h_counter_closed(1.0, 2.0, 1.0, 2.0, 1.0, 0.0, 10.0).unwrap(),
            100.0
        );
        assert!(
            (h_counter_closed(1.0, 2.0, 1.0, 2.0, 1.0, 0.5, 10.0).unwrap() - 50.0).abs() < 1e-12
        );
        assert_eq!(
            h_counter_closed(1.0, 2.0, 1.0, 2.0, 2.0, 0.0, 10.0).unwrap(),
            25.0
        );
        assert!(h_counter_closed(1.0, 2.0, 1.0, 2.0, 0.0, 0.0, 10.0).is_err());
    }

    #[test]
    fn lambda_trivial_cases() {
        let cc = JointLaw::new(
            FactorLaw::Constant { m: 0.5 },
            IncrementLaw::Constant { q: 2.0 },
            Dependence::Independent,
        )
        .unwrap();
        let l = lambda_solve(&cc, 3.0).unwrap();
        assert!((l - 12.0).abs() < 1e-10, "{l}");
        let m0 =
            JointLaw::new(FactorLaw::Constant { m: 0.0 }, WB, Dependence::Independent).unwrap();
        let l = lambda_solve(&m0, 2.0).unwrap();
        let lmgf = crate::marginals::Marginal::log_expect(&WB, &|q: f64| 2.0 * q);
        assert!((l - lmgf).abs() < 1e-12);
    }

    #[test]
    fn minimiser_scaling_slope() {
        let j = law(Dependence::Independent);
        let (a, b) = (h_eval(&j, 1e3).unwrap(), h_eval(&j, 1e4).unwrap());
        let slope = (b.t_argmin / a.t_argmin).ln() / 10f64.ln();
        assert!((slope - 2.0 / 3.0).abs() < 1e-2, "{slope}");
    }
}
