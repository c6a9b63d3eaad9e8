//! Scalar numerics shared by the higher modules: log-domain quadrature,
//! golden-section search and bracketed root finding.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Integrand values more than this many nats below the peak are dropped.
const WINDOW_NATS: f64 = 70.0;
const TS_MAX_LEVEL: u32 = 10;
const TS_T_MAX: f64 = 4.0;
const TS_REL_TOL: f64 = 1e-13;

pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp_all(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// `log ∫_lo^hi exp(phi(w)) dw`, with `hi` possibly `+inf`.
///
/// `breaks` lists interior points where `phi` may jump or kink; each piece is
/// integrated separately. `phi` may return `-inf` (zero integrand). The
/// integrand is assumed unimodal on each piece.
pub fn log_integral<F: Fn(f64) -> f64>(phi: F, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi && b.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    let parts: Vec<f64> = edges
        .windows(2)
        .map(|w| log_integral_piece(&phi, w[0], w[1]))
        .collect();
    log_sum_exp_all(&parts)
}

fn log_integral_piece<F: Fn(f64) -> f64>(phi: &F, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return f64::NEG_INFINITY;
    }
    let f = |w: f64| clean(phi(w));
    let mut pts: Vec<f64> = Vec::with_capacity(160);
    if b.is_finite() {
        let len = b - a;
        pts.push(a);
        pts.push(b);
        for j in 0..48 {
            pts.push(a + len * (j as f64 + 0.5) / 48.0);
        }
        for k in 1..=40 {
            let d = len * 0.5f64.powi(k);
            pts.push(a + d);
            pts.push(b - d);
        }
    } else {
        pts.push(a);
        for k in -40..=80 {
            pts.push(a + 2f64.powi(k));
        }
    }
    pts.retain(|&p| p >= a && p <= b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&p| f(p)).collect();
    let mut k = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[k] {
            k = i;
        }
    }
    if vals[k] == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let (mut mode, mut pmax) = (pts[k], vals[k]);
    let left = if k > 0 { pts[k - 1] } else { pts[k] };
    let right = if k + 1 < pts.len() {
        pts[k + 1]
    } else {
        pts[k]
    };
    if right > left {
        let (m, v) = golden_max(&f, left, right, 1e-15, 200);
        if v > pmax {
            mode = m;
            pmax = v;
        }
    }
    if pmax == f64::INFINITY {
        return f64::INFINITY;
    }
    let thr = pmax - WINDOW_NATS;

    let lo = if f(a) >= thr || mode <= a {
        a
    } else {
        let (mut l, mut h) = (a, mode);
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if mid <= l || mid >= h {
                break;
            }
            if f(mid) < thr {
                l = mid;
            } else {
                h = mid;
            }
        }
        l
    };
    let hi = if b.is_finite() {
        if f(b) >= thr || mode >= b {
            b
        } else {
            bisect_drop(&f, mode, b, thr)
        }
    } else {
        let scale = mode.abs().max(1.0);
        let mut d = scale * 1e-3;
        let mut far = mode + d;
        while f(far) >= thr {
            d *= 2.0;
            far = mode + d;
            if !far.is_finite() {
                break;
            }
        }
        if !far.is_finite() {
            f64::MAX
        } else {
            bisect_drop(&f, mode, far, thr)
        }
    };
    let g = |w: f64| {
        let v = f(w) - pmax;
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            v.exp()
        }
    };
    let s = tanh_sinh(&g, lo, mode) + tanh_sinh(&g, mode, hi);
    if s > 0.0 {
        pmax + s.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn bisect_drop<F: Fn(f64) -> f64>(f: &F, inside: f64, outside: f64, thr: f64) -> f64 {
    let (mut l, mut h) = (inside, outside);
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if f(mid) < thr {
            h = mid;
        } else {
            l = mid;
        }
    }
    h
}

/// Tanh-sinh rule on `[p, q]` for a bounded non-negative integrand.
/// Abscissae are formed from their distance to the nearer endpoint so that
/// points close to an endpoint keep full relative precision.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, p: f64, q: f64) -> f64 {
    let half = 0.5 * (q - p);
    if !(half > 0.0) {
        return 0.0;
    }
    let mid = 0.5 * (p + q);
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        let e = (-2.0 * u).exp();
        let d = half * 2.0 * e / (1.0 + e);
        if d <= 0.0 {
            return 0.0;
        }
        let fl = f(p + d);
        let fr = f(q - d);
        let fl = if fl.is_finite() { fl } else { 0.0 };
        let fr = if fr.is_finite() { fr } else { 0.0 };
        w * (fl + fr)
    };
    let f0 = f(mid);
    let mut sum = FRAC_PI_2 * if f0.is_finite() { f0 } else { 0.0 };
    let mut h = 1.0;
    let mut t = h;
    while t <= TS_T_MAX {
        sum += term(t);
        t += h;
    }
    let mut est = half * h * sum;
    for level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        let mut t = h;
        while t <= TS_T_MAX {
            sum += term(t);
            t += 2.0 * h;
        }
        let next = half * h * sum;
        let done = level >= 3 && (next - est).abs() <= TS_REL_TOL * next.abs();
        est = next;
        if done {
            break;
        }
    }
    est
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximisation on `[a, b]`; returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let (x, v) = golden_min(&|x| -f(x), a, b, rel_tol, max_iter);
    (x, -v)
}

/// Golden-section minimisation on `[a, b]`; returns `(argmin, min)`.
pub fn golden_min<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of `f` inside `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
/// Illinois false position with a bisection safeguard.
pub fn find_root<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket(format!("f({a}) = {fa}, f({b}) = {fb}")));
    }
    let mut side = 0i8;
    for _ in 0..400 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || !c.is_finite() {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() <= rel_tol * c.abs().max(f64::MIN_POSITIVE) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}
