//! Joint laws of `(M, Q)`.
//!
//! A [`JointLaw`] couples a [`FactorLaw`] and an [`IncrementLaw`]. Sampling
//! goes through [`JointLaw::transform`], which maps a pair of uniforms to a
//! draw, so two laws fed the same uniforms share random numbers.
//! Expectations `E exp(a(M) + b(Q))` are computed in the log domain by
//! [`JointLaw::log_expect`].

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{FactorLaw, IncrementLaw, Marginal};
use crate::numeric::{find_root, log_integral, log_sum_exp, log_sum_exp_all};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    Comonotone,
    Countermonotone,
    /// Farlie–Gumbel–Morgenstern copula `uv(1 + θ(1−u)(1−v))`.
    Fgm {
        theta: f64,
    },
    /// `P(M > m, Q > y) = exp(−y^γ / (1−m)^{γ−1})` on `[0,1)×[1,∞)` with an
    /// atom of mass `1 − e^{−1}` at `(0, 1)`.
    ExplicitAfterH {
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadrantClass {
    Pqd,
    Nqd,
    /// Independence: both PQD and NQD.
    Both,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLaw {
    pub factor: FactorLaw,
    pub increment: IncrementLaw,
    pub dependence: Dependence,
}

impl JointLaw {
    pub fn new(factor: FactorLaw, increment: IncrementLaw, dependence: Dependence) -> Result<Self> {
        let j = Self {
            factor,
            increment,
            dependence,
        };
        j.validate()?;
        Ok(j)
    }

    /// The self-contained construction with `h(x) = x^γ`. The stored
    /// marginals are nominal: `M` is exactly `PowerF{1, γ}`, `Q` is
    /// `Weibull{1, γ}` floored at 1.
    pub fn explicit_after_h(gamma: f64) -> Result<Self> {
        Self::new(
            FactorLaw::PowerF { c: 1.0, r: gamma },
            IncrementLaw::Weibull {
                d: 1.0,
                alpha: gamma,
            },
            Dependence::ExplicitAfterH { gamma },
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self.dependence {
            Dependence::Fgm { theta } if !(-1.0..=1.0).contains(&theta) => {
                return Err(Error::Config(format!(
                    "fgm.theta must lie in [-1,1] (got {theta})"
                )));
            }
            Dependence::ExplicitAfterH { gamma } => {
                if !(gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::Config(format!(
                        "explicit_after_h.gamma must exceed 1 (got {gamma})"
                    )));
                }
                let nominal_f = FactorLaw::PowerF { c: 1.0, r: gamma };
                let nominal_q = IncrementLaw::Weibull {
                    d: 1.0,
                    alpha: gamma,
                };
                if self.factor != nominal_f || self.increment != nominal_q {
                    return Err(Error::Config(
                        "explicit_after_h carries its own marginals; factor/increment must not be overridden"
                            .into(),
                    ));
                }
            }
            _ => {}
        }
        self.factor.validate()?;
        self.increment.validate()
    }

    /// `Q/(1−M)` is unbounded; fails only for a constant factor paired with a
    /// bounded increment.
    pub fn is_nondegenerate(&self) -> bool {
        if matches!(self.dependence, Dependence::ExplicitAfterH { .. }) {
            return true;
        }
        !(self.factor.horizon_sup().is_finite() && self.increment.ess_sup().is_finite())
    }

    pub fn quadrant_class(&self) -> QuadrantClass {
        match self.dependence {
            Dependence::Independent => QuadrantClass::Both,
            Dependence::Comonotone => QuadrantClass::Pqd,
            Dependence::Countermonotone => QuadrantClass::Nqd,
            Dependence::Fgm { theta } => {
                if theta > 0.0 {
                    QuadrantClass::Pqd
                } else if theta < 0.0 {
                    QuadrantClass::Nqd
                } else {
                    QuadrantClass::Both
                }
            }
            Dependence::ExplicitAfterH { .. } => QuadrantClass::Unknown,
        }
    }

    /// `log P(M > m, Q > y)`.
    pub fn joint_log_survival(&self, m: f64, y: f64) -> f64 {
        if m >= 1.0 {
            return f64::NEG_INFINITY;
        }
        match self.dependence {
            Dependence::ExplicitAfterH { .. } => self.joint_log_survival_t(1.0 / (1.0 - m), y),
            _ => self.combine(self.factor.log_survival(m), self.increment.log_survival(y)),
        }
    }

    /// `log P(1/(1−M) > t, Q > y)`, i.e. the joint survival at `m = 1 − 1/t`.
    pub fn joint_log_survival_t(&self, t: f64, y: f64) -> f64 {
        match self.dependence {
            Dependence::ExplicitAfterH { gamma } => {
                if t < 1.0 && y < 1.0 {
                    0.0
                } else {
                    -y.max(1.0).powf(gamma) * t.max(1.0).powf(gamma - 1.0)
                }
            }
            _ => self.combine(
                self.factor.log_survival_horizon(t),
                self.increment.log_survival(y),
            ),
        }
    }

    fn combine(&self, lm: f64, lq: f64) -> f64 {
        match self.dependence {
            Dependence::Independent => lm + lq,
            Dependence::Comonotone => lm.min(lq),
            Dependence::Countermonotone => {
                let (small, large) = if lm <= lq { (lm, lq) } else { (lq, lm) };
                let s = small.exp() + large.exp_m1();
                if s > 0.0 {
                    s.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Dependence::Fgm { theta } => {
                if lm == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                lm + lq + (theta * (-lm.exp_m1()) * (-lq.exp_m1())).ln_1p()
            }
            Dependence::ExplicitAfterH { .. } => unreachable!("handled by the callers"),
        }
    }

    /// Maps two independent uniforms to a draw of `(M, Q)`.
    pub fn transform(&self, u1: f64, u2: f64) -> (f64, f64) {
        match self.dependence {
            Dependence::Independent => (self.factor.quantile(u1), self.increment.quantile(u2)),
            Dependence::Comonotone => (self.factor.quantile(u1), self.increment.quantile(u1)),
            Dependence::Countermonotone => {
                (self.factor.quantile(u1), self.increment.quantile(1.0 - u1))
            }
            Dependence::Fgm { theta } => {
                let k = theta * (1.0 - 2.0 * u1);
                let a = 1.0 + k;
                let v = 2.0 * u2 / (a + (a * a - 4.0 * k * u2).max(0.0).sqrt());
                (self.factor.quantile(u1), self.increment.quantile(v))
            }
            Dependence::ExplicitAfterH { gamma } => after_h_transform(gamma, u1, u2),
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        self.transform(u1, u2)
    }

    /// `log E exp(a(M) + b(Q))`.
    pub fn log_expect(&self, a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64) -> f64 {
        let (f, q) = (&self.factor, &self.increment);
        match self.dependence {
            Dependence::Independent => f.log_expect(a) + q.log_expect(b),
            Dependence::Comonotone => {
                if f.point().is_some() || q.point().is_some() {
                    return f.log_expect(a) + q.log_expect(b);
                }
                let mut br = f.hazard_breaks();
                br.extend(q.hazard_breaks());
                log_integral(
                    |w| a(f.from_hazard(w)) + b(q.from_hazard(w)) - w,
                    0.0,
                    f64::INFINITY,
                    &br,
                )
            }
            Dependence::Countermonotone => {
                if f.point().is_some() || q.point().is_some() {
                    return f.log_expect(a) + q.log_expect(b);
                }
                // s ∈ (0, 1/2]: s = e^{−w}/2 for M, 1 − s for Q; then swapped
                let near = |w: f64| w + LN_2;
                let far = |w: f64| -(-0.5 * (-w).exp()).ln_1p();
                let map_near = |b: f64| b - LN_2;
                let map_far = |b: f64| -LN_2 - (-(-b).exp_m1()).ln();
                let br1: Vec<f64> = f
                    .hazard_breaks()
                    .into_iter()
                    .map(map_near)
                    .chain(q.hazard_breaks().into_iter().map(map_far))
                    .collect();
                let br2: Vec<f64> = q
                    .hazard_breaks()
                    .into_iter()
                    .map(map_near)
                    .chain(f.hazard_breaks().into_iter().map(map_far))
                    .collect();
                let h1 = log_integral(
                    |w| a(f.from_hazard(near(w))) + b(q.from_hazard(far(w))) - w - LN_2,
                    0.0,
                    f64::INFINITY,
                    &br1,
                );
                let h2 = log_integral(
                    |w| a(f.from_hazard(far(w))) + b(q.from_hazard(near(w))) - w - LN_2,
                    0.0,
                    f64::INFINITY,
                    &br2,
                );
                log_sum_exp(h1, h2)
            }
            Dependence::Fgm { theta } => {
                let (la, ra, oa) = fgm_moments(f, a);
                let (lb, rb, ob) = fgm_moments(q, b);
                la + lb + fgm_log_factor(theta, ra, oa, rb, ob)
            }
            Dependence::ExplicitAfterH { gamma } => after_h_log_expect(gamma, a, b),
        }
    }
}

/// For `E g(X)` with `g = e^{a}`: returns `log E g`, `ρ = E[g (2S−1)]/E g`
/// and `1 − ρ`, where `S = P(X > x)` evaluated at `X`.
fn fgm_moments<L: Marginal>(law: &L, a: &dyn Fn(f64) -> f64) -> (f64, f64, f64) {
    if let Some(v) = law.point() {
        return (a(v), 0.0, 1.0);
    }
    let br = law.hazard_breaks();
    let x = |w: f64| law.from_hazard(w);
    // E[g S] and E[g (1−S)]
    let lp = log_integral(|w| a(x(w)) - 2.0 * w, 0.0, f64::INFINITY, &br);
    let ln = log_integral(
        |w| a(x(w)) - w + (-(-w).exp_m1()).ln(),
        0.0,
        f64::INFINITY,
        &br,
    );
    let total = log_sum_exp(lp, ln);
    let p = (lp - total).exp();
    let n = (ln - total).exp();
    (total, p - n, 2.0 * n)
}

fn fgm_log_factor(theta: f64, ra: f64, oa: f64, rb: f64, ob: f64) -> f64 {
    let prod = ra * rb;
    if theta < 0.0 && prod > 0.0 {
        // 1 − |θ| ρa ρb with 1 − ρa ρb = (1−ρa) + ρa (1−ρb) for ρ ≥ 0
        let one_minus = if ra >= 0.0 {
            oa + ra * ob
        } else {
            (2.0 - oa) - ra * (2.0 - ob)
        };
        ((1.0 + theta) + (-theta) * one_minus).max(0.0).ln()
    } else {
        (theta * prod).ln_1p()
    }
}

fn after_h_transform(gamma: f64, u1: f64, u2: f64) -> (f64, f64) {
    let v = -(-u1).ln_1p();
    if v <= 1.0 {
        return (0.0, 1.0);
    }
    // given V = v, W has survival w e^{−v(w−1)} on [1, ∞)
    let target = u2.max(f64::MIN_POSITIVE).ln();
    let g = |b: f64| b.ln() - v * (b - 1.0) - target;
    // g(1) = −ln u2 ≥ 0 and ln b ≤ b − 1 gives g(hi) ≤ 0
    let hi = 1.0 + (-target) / (v - 1.0);
    let b = find_root(&g, 1.0, hi, 1e-15).unwrap_or(1.0);
    let m = 1.0 - v.powf(-1.0 / (gamma - 1.0));
    (m, b.powf(1.0 / gamma))
}

fn after_h_log_expect(gamma: f64, a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64) -> f64 {
    let atom = (-(-1.0f64).exp_m1()).ln() + a(0.0) + b(1.0);
    // V = 1 + s with s ~ Exp(1); W = 1 + u with log density ln(v u + s) − v u
    let outer = |s: f64| {
        let v = 1.0 + s;
        let inner = log_integral(
            |u| b((1.0 + u).powf(1.0 / gamma)) + (v * u + s).ln() - v * u,
            0.0,
            f64::INFINITY,
            &[],
        );
        a(1.0 - v.powf(-1.0 / (gamma - 1.0))) - s + inner
    };
    let cont = -1.0 + log_integral(outer, 0.0, f64::INFINITY, &[]);
    log_sum_exp_all(&[atom, cont])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PF: FactorLaw = FactorLaw::PowerF { c: 1.0, r: 2.0 };
    const WB: IncrementLaw = IncrementLaw::Weibull { d: 1.0, alpha: 2.0 };

    fn law(dep: Dependence) -> JointLaw {
        JointLaw::new(PF, WB, dep).unwrap()
    }

    fn all_variants() -> Vec<JointLaw> {
        let mut v = vec![
            law(Dependence::Independent),
            law(Dependence::Comonotone),
            law(Dependence::Countermonotone),
        ];
        for th in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            v.push(law(Dependence::Fgm { theta: th }));
        }
        v
    }

    #[test]
    fn joint_survival_examples() {
        let ind = law(Dependence::Independent);
        assert!((ind.joint_log_survival(1.0 - 1.0 / 2.0, 3.0) + 11.0).abs() < 1e-12);
        // P(M>m) = 0.3, P(Q>y) = 0.6
        let c = law(Dependence::Countermonotone);
        assert_eq!(c.combine(0.3f64.ln(), 0.6f64.ln()), f64::NEG_INFINITY);
        let ah = JointLaw::explicit_after_h(2.0).unwrap();
        for &(x, t) in &[(8.0, 2.0), (8.0, 8.0), (5.0, 1.0), (3.0, 2.5)] {
            let v = -t * ah.joint_log_survival(1.0 - 1.0 / t, x / t);
            assert!((v - x * x).abs() < 1e-9 * x * x, "x={x}, t={t}: {v}");
        }
    }

    #[test]
    fn quadrant_classes() {
        assert_eq!(
            law(Dependence::Fgm { theta: -0.5 }).quadrant_class(),
            QuadrantClass::Nqd
        );
        assert_eq!(
            law(Dependence::Comonotone).quadrant_class(),
            QuadrantClass::Pqd
        );
        assert_eq!(
            law(Dependence::Independent).quadrant_class(),
            QuadrantClass::Both
        );
        assert_eq!(
            JointLaw::explicit_after_h(1.5).unwrap().quadrant_class(),
            QuadrantClass::Unknown
        );
    }

    #[test]
    fn after_h_rejects_overrides() {
        let bad = JointLaw::new(PF, WB, Dependence::ExplicitAfterH { gamma: 1.5 });
        assert!(bad.is_err());
        assert!(JointLaw::new(PF, WB, Dependence::Fgm { theta: 1.5 }).is_err());
    }

    #[test]
    fn marginal_consistency() {
        for j in all_variants() {
            for &m in &[0.0, 0.3, 0.9] {
                let v = j.joint_log_survival(m, -1e-300);
                assert!((v - PF.log_survival(m)).abs() < 1e-12, "{:?}", j.dependence);
            }
            for &y in &[0.1, 1.0, 2.0] {
                let v = j.joint_log_survival(-1e-300, y);
                assert!((v - WB.log_survival(y)).abs() < 1e-12, "{:?}", j.dependence);
            }
        }
    }

    #[test]
    fn sandwich_on_probe_grid() {
        for j in all_variants() {
            for i in 0..40 {
                let m = i as f64 / 40.0;
                for k in 0..40 {
                    let y = k as f64 * 0.08;
                    let (sm, sq) = (PF.log_survival(m).exp(), WB.log_survival(y).exp());
                    let s = j.joint_log_survival(m, y);
                    let upper = sm.min(sq).ln();
                    assert!(s <= upper + 1e-12, "{:?} m={m} y={y}", j.dependence);
                    // sm + sq − 1 without cancellation
                    let (ls, ll) = {
                        let (a, b) = (PF.log_survival(m), WB.log_survival(y));
                        if a <= b {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    };
                    let lower = ls.exp() + ll.exp_m1();
                    if lower > 0.0 {
                        assert!(s >= lower.ln() - 1e-12, "{:?} m={m} y={y}", j.dependence);
                    }
                }
            }
        }
    }

    #[test]
    fn comonotone_draws_share_ranks() {
        let both = JointLaw::new(
            FactorLaw::PowerF { c: 0.1, r: 2.0 },
            WB,
            Dependence::Comonotone,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let (m, q) = both.sample(&mut rng);
            if m > 0.0 {
                let fm = -both.factor.log_survival(m).exp_m1();
                let fq = -both.increment.log_survival(q).exp_m1();
                assert!((fm - fq).abs() < 1e-9, "{m} {q}");
            }
        }
    }

    #[test]
    fn independent_ranks_uncorrelated() {
        let j = law(Dependence::Independent);
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (m, q) = j.sample(&mut rng);
            let a = -PF.log_survival(m).exp_m1();
            let b = -WB.log_survival(q).exp_m1();
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let nf = n as f64;
        let cov = sab / nf - sa / nf * sb / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 3.0 / nf.sqrt(), "{corr}");
    }

    #[test]
    fn fgm_upper_quadrant_at_medians() {
        // the atom of M at 0 has mass 1 − e^{−0.1} < 1/2, so the medians split mass exactly
        let j = JointLaw::new(
            FactorLaw::PowerF { c: 0.1, r: 2.0 },
            WB,
            Dependence::Fgm { theta: 1.0 },
        )
        .unwrap();
        let med_m = j.factor.quantile(0.5);
        let med_q = j.increment.quantile(0.5);
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut hits = 0usize;
        for _ in 0..n {
            let (m, q) = j.sample(&mut rng);
            if m > med_m && q > med_q {
                hits += 1;
            }
        }
        let p = 0.25 + 1.0 / 16.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let hat = hits as f64 / n as f64;
        assert!((hat - p).abs() < 3.0 * se, "{hat}");
        assert!((j.joint_log_survival(med_m, med_q).exp() - p).abs() < 1e-9);
    }

    #[test]
    fn after_h_sampler_matches_survival() {
        let j = JointLaw::explicit_after_h(2.0).unwrap();
        let n = 400_000;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draws: Vec<(f64, f64)> = (0..n).map(|_| j.sample(&mut rng)).collect();
        for &(m, y) in &[(0.0, 1.0), (0.2, 1.1), (0.5, 1.2), (0.1, 1.5)] {
            let p = j.joint_log_survival(m, y).exp();
            let hat = draws.iter().filter(|&&(a, b)| a > m && b > y).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((hat - p).abs() < 3.0 * se + 1e-6, "({m},{y}): {hat} vs {p}");
        }
        let atom = draws.iter().filter(|&&(a, b)| a == 0.0 && b == 1.0).count() as f64 / n as f64;
        assert!((atom - (1.0 - (-1.0f64).exp())).abs() < 0.005);
    }

    #[test]
    fn expectation_total_mass() {
        let zero = |_: f64| 0.0;
        for j in all_variants() {
            assert!(
                j.log_expect(&zero, &zero).abs() < 1e-12,
                "{:?}",
                j.dependence
            );
        }
        let ah = JointLaw::explicit_after_h(2.0).unwrap();
        assert!(ah.log_expect(&zero, &zero).abs() < 1e-10);
    }

    #[test]
    fn expectation_of_product_moments() {
        // E[M Q] by brute-force two-dimensional midpoint sums over the copula
        let n = 2000;
        for j in all_variants() {
            let got = j.log_expect(&|m: f64| m.ln(), &|q: f64| q.ln()).exp();
            let mut s = 0.0;
            match j.dependence {
                Dependence::Comonotone | Dependence::Countermonotone => {
                    let n1 = 2_000_000;
                    for i in 0..n1 {
                        let u = (i as f64 + 0.5) / n1 as f64;
                        let (m, q) = j.transform(u, 0.5);
                        s += m * q;
                    }
                    s /= n1 as f64;
                }
                _ => {
                    let theta = match j.dependence {
                        Dependence::Fgm { theta } => theta,
                        _ => 0.0,
                    };
                    for i in 0..n {
                        let u = (i as f64 + 0.5) / n as f64;
                        let m = PF.quantile(u);
                        for k in 0..n {
                            let v = (k as f64 + 0.5) / n as f64;
                            let dens = 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
                            s += m * WB.quantile(v) * dens;
                        }
                    }
                    s /= (n * n) as f64;
                }
            }
            assert!((got - s).abs() < 2e-4, "{:?}: {got} vs {s}", j.dependence);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn survival_monotone(theta in -1.0f64..1.0, m1 in 0.0f64..0.99, dm in 0.0f64..0.5, y1 in 0.0f64..4.0, dy in 0.0f64..2.0) {
            let m2 = (m1 + dm).min(0.999);
            let y2 = y1 + dy;
            for dep in [Dependence::Independent, Dependence::Comonotone, Dependence::Countermonotone, Dependence::Fgm { theta }] {
                let j = law(dep);
                let a = j.joint_log_survival(m1, y1);
                prop_assert!(j.joint_log_survival(m2, y1) <= a + 1e-12);
                prop_assert!(j.joint_log_survival(m1, y2) <= a + 1e-12);
            }
        }

        #[test]
        fn fgm_quadrant_sign(theta in -1.0f64..1.0, m in 0.0f64..0.95, y in 0.0f64..3.0) {
            let j = law(Dependence::Fgm { theta });
            let ind = PF.log_survival(m) + WB.log_survival(y);
            let s = j.joint_log_survival(m, y);
            if theta >= 0.0 {
                prop_assert!(s >= ind - 1e-12);
            } else {
                prop_assert!(s <= ind + 1e-12);
            }
        }
    }
}
