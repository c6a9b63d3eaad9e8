//! Verification suites. Each named suite is one check; `acceptance` runs
//! all of them in order.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constants::{b_co, c_lower, gamma_index, gamma_index_dual, prefactor_ind, Extended};
use crate::copulas::{Dependence, JointLaw};
use crate::error::{Error, Result};
use crate::gridfn::{Grid, GridFunction};
use crate::hfun::{h_closed_ind, h_eval, h_ratio_co, lambda_curve};
use crate::marginals::{FactorLaw, IncrementLaw, Marginal};
use crate::tails::{
    certified_lower, certify_upper, chernoff, default_c_param, mc_sample_multi,
    mgf_series_constant_factor, mgf_solve, phi_b, ConvexOrderReport,
};

pub const SUITES: &[&str] = &[
    "constants-identities",
    "sandwich",
    "closed-form-h",
    "afterh-exact",
    "lower-constant",
    "bounds-ordering",
    "tauberian",
    "convex-order",
    "upper-certificate",
    "lambda-envelope",
    "mgf-ordering",
    "acceptance",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u128,
}

impl Check {
    /// One line: `PASS name: detail`.
    pub fn line(&self) -> String {
        format!(
            "{} {} ({} ms): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed_ms,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        name: name.to_string(),
        passed,
        detail,
        elapsed_ms: t.elapsed().as_millis(),
    }
}

/// Runs a registered suite.
pub fn verify(suite: &str) -> Result<SuiteReport> {
    let checks = match suite {
        "acceptance" => ACCEPTANCE.iter().map(|(_, f)| f()).collect(),
        s => match ACCEPTANCE.iter().find(|(n, _)| *n == s) {
            Some((_, f)) => vec![f()],
            None => return Err(Error::UnknownSuite(s.to_string())),
        },
    };
    Ok(SuiteReport {
        suite: suite.to_string(),
        passed: checks.iter().all(|c: &Check| c.passed),
        checks,
    })
}

type CheckFn = fn() -> Check;

/// The acceptance criteria in order, keyed by suite name.
pub const ACCEPTANCE: &[(&str, CheckFn)] = &[
    ("constants-identities", constants_identities),
    ("sandwich", sandwich),
    ("closed-form-h", closed_form_h),
    ("afterh-exact", afterh_exact),
    ("lower-constant", lower_constant),
    ("bounds-ordering", bounds_ordering),
    ("tauberian", tauberian),
    ("convex-order", convex_order),
    ("upper-certificate", upper_certificate),
    ("lambda-envelope", lambda_envelope),
    ("mgf-ordering", mgf_ordering),
];

/// `PowerF{1,2} × Weibull{1,2}` under `dep`.
pub fn reference_law(dep: Dependence) -> JointLaw {
    JointLaw::new(
        FactorLaw::PowerF { c: 1.0, r: 2.0 },
        IncrementLaw::Weibull { d: 1.0, alpha: 2.0 },
        dep,
    )
    .expect("reference law is valid")
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `h`, with an everywhere-infinite objective mapped to `+∞`.
pub fn h_or_inf(j: &JointLaw, x: f64) -> Result<f64> {
    match h_eval(j, x) {
        Ok(r) => Ok(r.h),
        Err(Error::InfiniteObjective(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn le_rel(a: f64, b: f64, tol: f64) -> bool {
    if b == f64::INFINITY {
        return true;
    }
    a <= b + tol * b.abs()
}

pub fn constants_identities() -> Check {
    timed("1 constants identities", || {
        let mut worst_gamma: f64 = 0.0;
        let mut worst_bco: f64 = 0.0;
        for i in 0..20 {
            for k in 0..20 {
                let alpha = 1.05 + 0.5 * i as f64;
                let r = 1.05 + 0.5 * k as f64;
                worst_gamma =
                    worst_gamma.max((gamma_index(alpha, r) - gamma_index_dual(alpha, r)).abs());
                let f = h_ratio_co(r, alpha) * prefactor_ind(alpha, r);
                worst_bco = worst_bco.max((b_co(alpha, r) - f).abs());
            }
        }
        use Extended::{Finite, Infinite};
        let spots = [
            (c_lower(Infinite, Infinite)?, std::f64::consts::E),
            (c_lower(Finite(2.0), Finite(2.0))?, 1.5),
            (c_lower(Infinite, Finite(2.0))?, 2.0),
        ];
        let worst_spot = spots.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ok = worst_gamma <= 1e-12 && worst_bco <= 1e-12 && worst_spot <= 1e-12;
        Ok((
            ok,
            format!("max |Δγ| = {worst_gamma:.1e}, max |ΔB_co| = {worst_bco:.1e}, max |Δc| = {worst_spot:.1e}"),
        ))
    })
}

pub fn sandwich() -> Check {
    timed("2 sandwich h_co <= h <= h_counter", || {
        let co = reference_law(Dependence::Comonotone);
        let counter = reference_law(Dependence::Countermonotone);
        let deps = [
            Dependence::Countermonotone,
            Dependence::Fgm { theta: -1.0 },
            Dependence::Fgm { theta: -0.5 },
            Dependence::Fgm { theta: 0.0 },
            Dependence::Fgm { theta: 0.5 },
            Dependence::Fgm { theta: 1.0 },
            Dependence::Comonotone,
        ];
        let xs = log_points(2.0, 1e3, 64);
        let mut bad = Vec::new();
        let mut n_inf = 0;
        for &x in &xs {
            let lo = h_or_inf(&co, x)?;
            let hi = h_or_inf(&counter, x)?;
            if hi == f64::INFINITY {
                n_inf += 1;
            }
            for d in deps {
                let h = h_or_inf(&reference_law(d), x)?;
                if !(le_rel(lo, h, 1e-9) && le_rel(h, hi, 1e-9)) {
                    bad.push(format!("{d:?} at x = {x}: {lo} / {h} / {hi}"));
                }
            }
        }
        Ok((
            bad.is_empty(),
            format!(
                "{} laws x {} abscissae, h_counter = +inf at {n_inf}; violations: {}",
                deps.len(),
                xs.len(),
                if bad.is_empty() {
                    "none".into()
                } else {
                    bad.join("; ")
                }
            ),
        ))
    })
}

pub fn closed_form_h() -> Check {
    timed("3 closed-form h recovery", || {
        let ind = reference_law(Dependence::Independent);
        let co = reference_law(Dependence::Comonotone);
        let mut worst: f64 = 0.0;
        let mut used = 0;
        for x in log_points(10.0, 1e4, 48) {
            let r = h_eval(&ind, x)?;
            if r.t_argmin > 1.05 {
                used += 1;
                let exact = h_closed_ind(1.0, 2.0, 1.0, 2.0, x);
                worst = worst.max((r.h / exact - 1.0).abs());
            }
        }
        let ratio = h_eval(&co, 1e4)?.h / h_eval(&ind, 1e4)?.h;
        let limit = h_ratio_co(2.0, 2.0);
        let ok = used > 0 && worst <= 1e-6 && (ratio - limit).abs() <= 1e-3;
        Ok((
            ok,
            format!(
                "max rel err {worst:.2e} over {used} points; h_co/h_ind(1e4) = {ratio:.6} vs {limit:.6}"
            ),
        ))
    })
}

pub fn afterh_exact() -> Check {
    timed("4 explicit construction h(x) = x^γ", || {
        let mut worst: f64 = 0.0;
        for gamma in [1.5, 2.0] {
            let j = JointLaw::explicit_after_h(gamma)?;
            for x in log_points(2.0, 100.0, 40) {
                let h = h_eval(&j, x)?.h;
                worst = worst.max((h / x.powf(gamma) - 1.0).abs());
            }
        }
        Ok((worst <= 1e-9, format!("max rel err {worst:.2e}")))
    })
}

pub fn lower_constant() -> Check {
    timed("5 lower-bound constant for M = 0.5", || {
        let q = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };
        let zg = Grid::geometric(1e-2, 400.0, 64)?;
        let psi = GridFunction::from_fn(&zg, |z| mgf_series_constant_factor(&q, 0.5, z))?;
        let xs = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0];
        let ratios = xs
            .iter()
            .map(|&x| psi.conjugate_at(x).map(|v| v / (x * x)))
            .collect::<Result<Vec<_>>>()?;
        let last = ratios[ratios.len() - 1];
        let monotone = ratios
            .windows(2)
            .all(|w| w[1] >= w[0] && (w[1] - 0.75).abs() <= (w[0] - 0.75).abs());
        // (1 − m^β)^{α−1} t^{α−1} with m = 1/2, α = β = 2, t = 1/(1−m)
        let limit = 1.0 - 0.5f64.powi(2);
        let cross = limit * 2.0;
        let c = c_lower(Extended::Finite(2.0), Extended::Finite(2.0))?;
        let ok = (0.70..=0.80).contains(&last) && monotone && (cross - c).abs() <= 1e-12;
        let shown: Vec<String> = xs
            .iter()
            .zip(&ratios)
            .map(|(x, r)| format!("{x}:{r:.4}"))
            .collect();
        Ok((
            ok,
            format!(
                "ψ*(x)/x² = [{}]; 0.75·2 = {cross} vs c(2,2) = {c}",
                shown.join(", ")
            ),
        ))
    })
}

pub fn bounds_ordering() -> Check {
    timed("6 certified lower bound vs Chernoff", || {
        let j = reference_law(Dependence::Independent);
        let zg = Grid::geometric(1e-4, 100.0, 32)?;
        let ms = mgf_solve(&j, &zg, 1e-9, 200)?;
        let floor = -1.5 * c_lower(Extended::Infinite, Extended::Finite(gamma_index(2.0, 2.0)))?;
        let mut ok = true;
        let mut rows = Vec::new();
        for x in [4.0, 8.0, 16.0, 32.0] {
            let cert = certified_lower(&j, x, 64, default_c_param(&j))?;
            let ch = chernoff(&ms, cert.reached)?;
            // ψ* moves by at most residual·ψ at the maximizer, bounded by ψ(z_max)
            let slack = ms.residual * ms.psi.ys()[ms.psi.len() - 1] + 1e-9;
            let h = h_eval(&j, cert.reached)?.h;
            let ratio = cert.log_bound / h;
            let row_ok = cert.log_bound <= -ch + slack && ratio >= floor;
            ok &= row_ok;
            rows.push(format!(
                "x={x}: n={} lb={:.3} -ψ*={:.3} lb/h={ratio:.3}",
                cert.blocks.len(),
                cert.log_bound,
                -ch
            ));
        }
        Ok((ok, format!("{}; floor {floor:.3}", rows.join("; "))))
    })
}

pub fn tauberian() -> Check {
    timed("7 Tauberian round trips", || {
        let q = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };
        let z: f64 = 100.0;
        let kas = q.log_expect(&|y: f64| z * y) / (z * z / 4.0);
        let m = FactorLaw::PowerF { c: 1.0, r: 2.0 };
        let lam: f64 = 1e4;
        let debr = -m.log_expect(&|v: f64| -lam * (1.0 - v)) / (2.0 * lam.sqrt());
        let ok = (0.95..=1.10).contains(&kas) && (0.90..=1.10).contains(&debr);
        Ok((
            ok,
            format!("log M_Q(100)/2500 = {kas:.5}; -log E e^(-λ(1-M))/(2√λ) = {debr:.5}"),
        ))
    })
}

pub fn convex_order() -> Check {
    timed("8 convex order co >= ind >= counter", || {
        let laws = [
            reference_law(Dependence::Comonotone),
            reference_law(Dependence::Independent),
            reference_law(Dependence::Countermonotone),
        ];
        let s = mc_sample_multi(&laws, 1_000_000, 60, 20_240_601);
        let probes = [0.0, 1.0, 2.0, 5.0];
        let er = laws[1].increment.mean() / (1.0 - laws[1].factor.mean());
        let pairs: [(usize, usize); 2] = [(0, 1), (1, 2)];
        let mut ok = true;
        let mut notes = Vec::new();
        for (a, b) in pairs {
            let rep: ConvexOrderReport =
                crate::tails::mc::report_from_samples(&s[a], &s[b], &probes);
            for row in &rep.rows {
                ok &= row.dominates(3.0);
                notes.push(format!(
                    "a={}: {:+.4}±{:.4}",
                    row.probe, row.diff, row.pooled_se
                ));
            }
        }
        let mut means = Vec::new();
        for v in &s {
            let rep = crate::tails::mc::report_from_samples(v, v, &[]);
            let (m, se) = (rep.means.0, rep.mean_se.0);
            ok &= (m - er).abs() <= 3.0 * se;
            means.push(format!("{m:.5}±{se:.5}"));
        }
        Ok((
            ok,
            format!(
                "stop-loss diffs [{}]; means [{}] vs E R = {er:.5}",
                notes.join(", "),
                means.join(", ")
            ),
        ))
    })
}

pub fn upper_certificate() -> Check {
    timed("9 upper-bound certificate", || {
        let j = reference_law(Dependence::Comonotone);
        let pg = Grid::geometric(1e-3, 1e4, 64)?;
        let zg = Grid::geometric(10.0, 200.0, 16)?;
        let bc = b_co(2.0, 2.0);
        let good = certify_upper(&j, &phi_b(0.5 * bc, &pg)?, &zg)?;
        let bad = certify_upper(&j, &phi_b(2.0 * bc, &pg)?, &zg)?;
        let max_good = good
            .log_i
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = good.is_certified() && !bad.is_certified();
        Ok((
            ok,
            format!(
                "B = {:.4}: {:?} (max log I = {max_good:.3e}, patch {:?}); B = {:.4}: {:?}",
                0.5 * bc,
                good.verdict,
                good.patch,
                2.0 * bc,
                bad.verdict
            ),
        ))
    })
}

pub fn lambda_envelope() -> Check {
    timed("10 λ-envelope λ* <= h", || {
        let zg = Grid::geometric(1e-2, 1e3, 32)?;
        let mut ok = true;
        let mut notes = Vec::new();
        for dep in [Dependence::Independent, Dependence::Comonotone] {
            let j = reference_law(dep);
            let lam = lambda_curve(&j, &zg)?;
            let mut worst = f64::NEG_INFINITY;
            for x in log_points(2.0, 100.0, 24) {
                let ls = lam.conjugate_at(x)?;
                let h = h_eval(&j, x)?.h;
                worst = worst.max(ls / h - 1.0);
                ok &= ls <= h * (1.0 + 1e-6);
            }
            notes.push(format!("{dep:?}: max λ*/h − 1 = {worst:.3e}"));
        }
        Ok((ok, notes.join("; ")))
    })
}

pub fn mgf_ordering() -> Check {
    timed("11 ψ_counter <= ψ_ind <= ψ_co", || {
        let zg = Grid::geometric(1e-4, 50.0, 32)?;
        let sol = [
            Dependence::Countermonotone,
            Dependence::Independent,
            Dependence::Comonotone,
        ]
        .map(|d| mgf_solve(&reference_law(d), &zg, 1e-9, 200));
        let [c, i, o] = sol;
        let (c, i, o) = (c?, i?, o?);
        let res = c.residual.max(i.residual).max(o.residual);
        let tol = 10.0 * res;
        let mut ok = true;
        let mut min_gap = f64::INFINITY;
        for k in 0..zg.len() {
            let z = zg.points()[k];
            if !(1.0..=50.0).contains(&z) {
                continue;
            }
            let (pc, pi, po) = (c.psi.ys()[k], i.psi.ys()[k], o.psi.ys()[k]);
            ok &= pc <= pi * (1.0 + tol) && pi <= po * (1.0 + tol);
            min_gap = min_gap.min(((pi - pc) / pi).min((po - pi) / po));
        }
        Ok((
            ok,
            format!(
                "residual {res:.2e}; min relative gap {min_gap:.3e}; ψ(50) = {:.2} / {:.2} / {:.2}",
                c.psi.ys()[zg.len() - 1],
                i.psi.ys()[zg.len() - 1],
                o.psi.ys()[zg.len() - 1]
            ),
        ))
    })
}
