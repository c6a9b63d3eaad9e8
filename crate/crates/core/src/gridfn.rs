//! Real functions sampled on positive grids.
//!
//! Interpolation is linear in `(log x, log y)` between positive ordinates and
//! linear in `x` otherwise, so power laws are reproduced exactly. Outside the
//! grid a power law (or a line, for non-positive ordinates) continues the
//! function; the exponent is estimated over the outermost decade unless it is
//! declared. A `+inf` ordinate starts an infinite tail.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numeric::golden_min;

pub const DEFAULT_PER_DECADE: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Log-spaced nodes from `min` to `max` inclusive, at least
    /// `per_decade` nodes per factor of ten.
    pub fn geometric(min: f64, max: f64, per_decade: usize) -> Result<Self> {
        if !(min > 0.0 && max > min && max.is_finite()) || per_decade == 0 {
            return Err(Error::InvalidGrid(format!(
                "geometric grid needs 0 < min < max, per_decade > 0 (got {min}, {max}, {per_decade})"
            )));
        }
        let decades = (max / min).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(1);
        let (lmin, lmax) = (min.ln(), max.ln());
        let mut points: Vec<f64> = (0..=n)
            .map(|i| (lmin + (lmax - lmin) * i as f64 / n as f64).exp())
            .collect();
        points[0] = min;
        points[n] = max;
        Ok(Self { points })
    }

    /// `n` nodes `min·ratio^i`; with `ratio = m^{-1/k}` the products `m·z_i`
    /// land on nodes.
    pub fn with_ratio(min: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(min > 0.0 && ratio > 1.0) || n < 2 {
            return Err(Error::InvalidGrid(format!(
                "ratio grid needs min > 0, ratio > 1, n >= 2 (got {min}, {ratio}, {n})"
            )));
        }
        let lr = ratio.ln();
        let points = (0..n).map(|i| min * (lr * i as f64).exp()).collect();
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if !(points[0] > 0.0) || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "nodes must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// How a [`GridFunction`] continues beyond its first or last node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extrapolation {
    /// `y_end · (x / x_end)^p`
    Power(f64),
    /// `y_end + slope · (x − x_end)`
    Linear(f64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left: Extrapolation,
    right: Extrapolation,
}

fn seg_interp(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    if y1 == f64::INFINITY {
        return if x > x0 { f64::INFINITY } else { y0 };
    }
    if y0 > 0.0 && y1 > 0.0 {
        let s = (x / x0).ln() / (x1 / x0).ln();
        (y0.ln() + s * (y1 / y0).ln()).exp()
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need equal lengths >= 2 (got {} and {})",
                xs.len(),
                ys.len()
            )));
        }
        if !(xs[0] > 0.0) || xs.windows(2).any(|w| !(w[1] > w[0])) || !xs[xs.len() - 1].is_finite()
        {
            return Err(Error::InvalidGrid(
                "abscissae must be finite, positive and strictly increasing".into(),
            ));
        }
        if ys.iter().any(|y| y.is_nan() || *y == f64::NEG_INFINITY) {
            return Err(Error::InvalidGrid(
                "ordinates must not be NaN or -inf".into(),
            ));
        }
        if !ys[0].is_finite() {
            return Err(Error::InvalidGrid("first ordinate must be finite".into()));
        }
        if let Some(k) = ys.iter().position(|y| *y == f64::INFINITY) {
            if ys[k..].iter().any(|y| y.is_finite()) {
                return Err(Error::InvalidGrid(
                    "finite ordinate after an infinite one".into(),
                ));
            }
        }
        let left = estimate_left(&xs, &ys);
        let right = estimate_right(&xs, &ys);
        Ok(Self {
            xs,
            ys,
            left,
            right,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Result<Self> {
        let ys = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid.points().to_vec(), ys)
    }

    /// Replaces the estimated extrapolation rules.
    pub fn with_extrapolation(mut self, left: Extrapolation, right: Extrapolation) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn left_extrapolation(&self) -> Extrapolation {
        self.left
    }

    pub fn right_extrapolation(&self) -> Extrapolation {
        self.right
    }

    /// Number of leading finite ordinates.
    pub fn finite_len(&self) -> usize {
        self.ys
            .iter()
            .position(|y| !y.is_finite())
            .unwrap_or(self.ys.len())
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("grid function evaluated at x = {x}")));
        }
        Ok(self.eval_pos(x))
    }

    /// Like [`eval`](Self::eval) but `x <= 0` yields the limit at `0+`.
    pub fn eval_nonneg(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.eval_pos(x)
        } else {
            self.limit_at_zero()
        }
    }

    pub fn limit_at_zero(&self) -> f64 {
        let (x0, y0) = (self.xs[0], self.ys[0]);
        match self.left {
            Extrapolation::Power(p) if y0 > 0.0 => {
                if p > 0.0 {
                    0.0
                } else if p == 0.0 {
                    y0
                } else {
                    f64::INFINITY
                }
            }
            Extrapolation::Power(_) => y0,
            Extrapolation::Linear(s) => y0 - s * x0,
            Extrapolation::Infinite => f64::INFINITY,
        }
    }

    fn eval_pos(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] {
            let (x0, y0) = (self.xs[0], self.ys[0]);
            return match self.left {
                Extrapolation::Power(p) if y0 > 0.0 => y0 * (x / x0).powf(p),
                Extrapolation::Power(_) => y0,
                Extrapolation::Linear(s) => y0 + s * (x - x0),
                Extrapolation::Infinite => f64::INFINITY,
            };
        }
        if x > self.xs[n - 1] {
            let (xn, yn) = (self.xs[n - 1], self.ys[n - 1]);
            if yn == f64::INFINITY {
                return yn;
            }
            return match self.right {
                Extrapolation::Power(p) if yn > 0.0 => yn * (x / xn).powf(p),
                Extrapolation::Power(_) => yn,
                Extrapolation::Linear(s) => yn + s * (x - xn),
                Extrapolation::Infinite => f64::INFINITY,
            };
        }
        let i = self.xs.partition_point(|&v| v <= x);
        // xs[i-1] <= x < xs[i] (or x == last node)
        let i = i.clamp(1, n);
        if self.xs[i - 1] == x {
            return self.ys[i - 1];
        }
        seg_interp(self.xs[i - 1], self.ys[i - 1], self.xs[i], self.ys[i], x)
    }

    /// Slope of the right continuation at the last node.
    fn right_end_slope(&self) -> f64 {
        let n = self.xs.len();
        let (xn, yn) = (self.xs[n - 1], self.ys[n - 1]);
        match self.right {
            Extrapolation::Power(p) if yn > 0.0 => p * yn / xn,
            Extrapolation::Power(_) => 0.0,
            Extrapolation::Linear(s) => s,
            Extrapolation::Infinite => f64::INFINITY,
        }
    }

    /// Value of `sup_{0<x<x_0} {z x − g(x)}` under the left continuation.
    fn left_sup(&self, z: f64) -> f64 {
        let (x0, y0) = (self.xs[0], self.ys[0]);
        let mut best = -self.limit_at_zero();
        match self.left {
            Extrapolation::Power(p) if y0 > 0.0 && p > 1.0 => {
                let xs = x0 * (z * x0 / (p * y0)).powf(1.0 / (p - 1.0));
                if xs > 0.0 && xs < x0 {
                    best = best.max(z * xs - y0 * (xs / x0).powf(p));
                }
            }
            Extrapolation::Linear(_) | Extrapolation::Power(_) | Extrapolation::Infinite => {}
        }
        best.max(z * x0 - y0)
    }

    /// Lower convex hull of the finite nodes, as node indices.
    fn lower_hull(&self) -> Vec<usize> {
        let m = self.finite_len();
        let mut hull: Vec<usize> = Vec::with_capacity(m);
        for i in 0..m {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (self.xs[b] - self.xs[a]) * (self.ys[i] - self.ys[a])
                    - (self.ys[b] - self.ys[a]) * (self.xs[i] - self.xs[a]);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull
    }

    fn hull_slope(&self, hull: &[usize], j: usize) -> f64 {
        let (a, b) = (hull[j], hull[j + 1]);
        (self.ys[b] - self.ys[a]) / (self.xs[b] - self.xs[a])
    }

    /// Conjugate value at `z` given the argmax node `i`.
    fn conj_from_node(&self, z: f64, i: usize) -> Result<f64> {
        let m = self.finite_len();
        let mut best = z * self.xs[i] - self.ys[i];
        if i == m - 1 && m == self.len() && z > self.right_end_slope() {
            return match self.right {
                // a log-log slope within rounding of 1 is a linear tail
                Extrapolation::Power(p) if p > 1.0 + 1e-9 && self.ys[m - 1] > 0.0 => {
                    Err(Error::GridTooShort(format!(
                        "conjugate at z = {z} is attained beyond the last node x = {}",
                        self.xs[m - 1]
                    )))
                }
                _ => Ok(f64::INFINITY),
            };
        }
        // parabola through three neighbouring nodes, in log x
        if m >= 3 {
            let c = i.clamp(1, m - 2);
            let u = [self.xs[c - 1].ln(), self.xs[c].ln(), self.xs[c + 1].ln()];
            let f = [
                z * self.xs[c - 1] - self.ys[c - 1],
                z * self.xs[c] - self.ys[c],
                z * self.xs[c + 1] - self.ys[c + 1],
            ];
            let d1 = (f[1] - f[0]) / (u[1] - u[0]);
            let d2 = (f[2] - f[1]) / (u[2] - u[1]);
            let curv = (d2 - d1) / (u[2] - u[0]);
            if curv < 0.0 {
                let us = 0.5 * (u[0] + u[1]) - d1 / (2.0 * curv);
                if us > u[0] && us < u[2] {
                    let xs = us.exp();
                    let v = z * xs - self.eval_pos(xs);
                    if v > best {
                        best = v;
                    }
                }
            }
        }
        if i == 0 {
            best = best.max(self.left_sup(z));
        }
        Ok(best)
    }

    /// `sup_{x>0} {z x − g(x)}` at a single `z`.
    pub fn conjugate_at(&self, z: f64) -> Result<f64> {
        let hull = self.lower_hull();
        let mut j = 0;
        while j + 1 < hull.len() && self.hull_slope(&hull, j) < z {
            j += 1;
        }
        let v = self.conj_from_node(z, hull[j])?;
        Ok(v.max(self.left_sup(z)))
    }

    /// Legendre–Fenchel transform sampled on `zgrid`, using a single sweep
    /// over the hull (the argmax is monotone in `z`).
    pub fn legendre(&self, zgrid: &Grid) -> Result<GridFunction> {
        let hull = self.lower_hull();
        let mut j = 0;
        let mut out = Vec::with_capacity(zgrid.len());
        let mut prev = f64::NEG_INFINITY;
        for &z in zgrid.points() {
            while j + 1 < hull.len() && self.hull_slope(&hull, j) < z {
                j += 1;
            }
            let v = self.conj_from_node(z, hull[j])?.max(self.left_sup(z));
            // the transform is non-decreasing; refinement noise must not break that
            let v = v.max(prev);
            prev = v;
            out.push(v);
        }
        GridFunction::new(zgrid.points().to_vec(), out)
    }

    /// `inf{x : g(x) > y}`, interpolating inside the crossing cell.
    pub fn generalized_inverse(&self, y: f64) -> Result<f64> {
        let Some(i) = self.ys.iter().position(|&v| v > y) else {
            return Err(Error::Domain(format!(
                "level {y} is not exceeded on the grid"
            )));
        };
        if i == 0 {
            let (x0, y0) = (self.xs[0], self.ys[0]);
            return match self.left {
                Extrapolation::Power(p) if y0 > 0.0 && y > 0.0 && p > 0.0 => {
                    Ok(x0 * (y / y0).powf(1.0 / p))
                }
                Extrapolation::Linear(s) if s > 0.0 => {
                    let x = x0 + (y - y0) / s;
                    if x > 0.0 {
                        Ok(x)
                    } else {
                        Err(Error::Domain(format!(
                            "level {y} is below the function near 0"
                        )))
                    }
                }
                _ => Err(Error::Domain(format!(
                    "level {y} is below the function near 0"
                ))),
            };
        }
        let (x0, y0, x1, y1) = (self.xs[i - 1], self.ys[i - 1], self.xs[i], self.ys[i]);
        if y1 == f64::INFINITY || y0 == y {
            return Ok(x0);
        }
        if y0 > 0.0 && y1 > 0.0 && y > 0.0 {
            let s = (y / y0).ln() / (y1 / y0).ln();
            Ok((x0.ln() + s * (x1 / x0).ln()).exp())
        } else {
            Ok(x0 + (x1 - x0) * (y - y0) / (y1 - y0))
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let _ = writeln!(s, "{x},{y}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty()
                || line.starts_with('#')
                || (xs.is_empty() && line.starts_with(|c: char| c.is_ascii_alphabetic()))
            {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .ok_or_else(|| Error::InvalidGrid(format!("line {}: missing column", k + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("line {}: {e}", k + 1)))
            };
            xs.push(parse(it.next())?);
            ys.push(parse(it.next())?);
        }
        Self::new(xs, ys)
    }
}

fn estimate_right(xs: &[f64], ys: &[f64]) -> Extrapolation {
    let n = xs.len();
    let (xn, yn) = (xs[n - 1], ys[n - 1]);
    if yn == f64::INFINITY {
        return Extrapolation::Infinite;
    }
    let target = xn / 10.0;
    let j = xs.partition_point(|&x| x <= target).saturating_sub(1);
    let j = j.min(n - 2);
    if ys[j] > 0.0 && yn > 0.0 {
        Extrapolation::Power((yn / ys[j]).ln() / (xn / xs[j]).ln())
    } else {
        Extrapolation::Linear((yn - ys[n - 2]) / (xn - xs[n - 2]))
    }
}

fn estimate_left(xs: &[f64], ys: &[f64]) -> Extrapolation {
    let n = xs.len();
    let (x0, y0) = (xs[0], ys[0]);
    let target = x0 * 10.0;
    let mut j = xs.partition_point(|&x| x < target).min(n - 1).max(1);
    while j > 1 && !ys[j].is_finite() {
        j -= 1;
    }
    if !ys[j].is_finite() {
        return Extrapolation::Linear(0.0);
    }
    if y0 > 0.0 && ys[j] > 0.0 {
        Extrapolation::Power((ys[j] / y0).ln() / (xs[j] / x0).ln())
    } else {
        Extrapolation::Linear((ys[1] - y0) / (xs[1] - x0))
    }
}

/// `inf_{z>0} {a*(z) + z · b*(x/z)}`, the conjugate of `a ∘ b` for `a`
/// convex non-decreasing and `b` convex, given the conjugates `a_star` and
/// `b_star`. The candidates are the nodes of `a_star` for which `x/z` stays
/// inside the grid of `b_star`; the discrete minimiser is refined by
/// golden-section search in `log z`.
pub fn inf_composition(a_star: &GridFunction, b_star: &GridFunction, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("inf_composition at x = {x}")));
    }
    let bx = b_star.xs();
    let (blo, bhi) = (bx[0], bx[bx.len() - 1]);
    let obj = |z: f64| -> f64 {
        let a = a_star.eval_pos(z);
        if a == f64::INFINITY {
            return a;
        }
        a + z * b_star.eval_pos(x / z)
    };
    let cand: Vec<usize> = (0..a_star.len())
        .filter(|&i| {
            let r = x / a_star.xs[i];
            r >= blo && r <= bhi
        })
        .collect();
    if cand.len() < 2 {
        return Err(Error::GridTooShort(format!(
            "no overlap between the grids at x = {x}"
        )));
    }
    let vals: Vec<f64> = cand.iter().map(|&i| obj(a_star.xs[i])).collect();
    let mut k = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[k] {
            k = i;
        }
    }
    if vals[k] == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let at_edge = k == 0 || k == cand.len() - 1;
    if at_edge {
        // one more node out, via continuation; an infinite objective there
        // means the edge is a genuine constraint
        let z = a_star.xs[cand[k]];
        let step = if k == 0 {
            a_star.xs[cand[0]] / a_star.xs[cand[1]]
        } else {
            a_star.xs[cand[k]] / a_star.xs[cand[k - 1]]
        };
        let beyond = obj(z * step);
        if beyond.is_finite() && beyond <= vals[k] {
            return Err(Error::GridTooShort(format!(
                "infimum at x = {x} sits on the grid edge z = {z}"
            )));
        }
    }
    let lo = a_star.xs[cand[k.saturating_sub(1)]].ln();
    let hi = a_star.xs[cand[(k + 1).min(cand.len() - 1)]].ln();
    let (_, v) = golden_min(&|u: f64| obj(u.exp()), lo, hi, 1e-15, 200);
    Ok(v.min(vals[k]))
}
