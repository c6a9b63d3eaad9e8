//! Certified lower bound and Chernoff bound bracket a simulated tail.

use perptail_core::tails::{certified_lower, chernoff, default_c_param, mc_sample, mgf_solve};
use perptail_core::{Dependence, FactorLaw, Grid, IncrementLaw, JointLaw};

fn law(dependence: Dependence) -> JointLaw {
    JointLaw::new(
        FactorLaw::PowerF { c: 1.0, r: 2.0 },
        IncrementLaw::Weibull { d: 1.0, alpha: 2.0 },
        dependence,
    )
    .unwrap()
}

#[test]
fn bounds_bracket_empirical_tail() {
    for dep in [Dependence::Independent, Dependence::Comonotone] {
        let j = law(dep);
        let ms = mgf_solve(&j, &Grid::geometric(1e-4, 50.0, 32).unwrap(), 1e-9, 500).unwrap();
        let cert = certified_lower(&j, 3.0, 8, default_c_param(&j)).unwrap();
        let x = cert.reached;
        let n = 400_000;
        let r = mc_sample(&j, n, 80, 7);
        let hits = r.iter().filter(|&&v| v > x).count();
        assert!(hits > 30, "{dep:?}: only {hits} exceedances of {x}");
        let p = hits as f64 / n as f64;
        // 5 binomial standard errors on either side
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let upper = -chernoff(&ms, x).unwrap();
        assert!(
            (p + 5.0 * se).ln() >= cert.log_bound,
            "{dep:?}: p = {p}, lb = {}",
            cert.log_bound
        );
        assert!(
            (p - 5.0 * se).ln() <= upper,
            "{dep:?}: p = {p}, -ψ* = {upper}"
        );
    }
}

#[test]
fn single_block_matches_direct_product() {
    // with one block the bound is the joint survival at the seed point
    let j = law(Dependence::Independent);
    let cert = certified_lower(&j, 6.0, 1, 2.0).unwrap();
    assert_eq!(cert.blocks.len(), 1);
    let (delta, q) = cert.blocks[0];
    let direct = j.joint_log_survival(1.0 - delta, q);
    assert!(
        (cert.log_bound - direct).abs() <= 1e-9 * direct.abs(),
        "{} vs {direct}",
        cert.log_bound
    );
}

/// Best `Σ log P(M > 1−δ_k, Q > q_k)` over `n ≤ 3` blocks with
/// `q_1 + (1−δ_1) q_2 + (1−δ_1)(1−δ_2) q_3 ≥ x`, by grid search. The last
/// block takes `δ = 1` and the remaining distance as its `q`.
fn brute_force(j: &JointLaw, x: f64) -> f64 {
    let ls = |d: f64, q: f64| j.joint_log_survival(1.0 - d, q.max(0.0));
    let deltas: Vec<f64> = (0..40)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 39.0) * 0.999)
        .collect();
    let qs: Vec<f64> = (1..=60).map(|i| x * i as f64 / 60.0).collect();
    let mut best = ls(1.0, x);
    for &d1 in &deltas {
        for &q1 in &qs {
            let rest = x - q1;
            if rest <= 0.0 {
                best = best.max(ls(d1, q1));
                continue;
            }
            let l1 = ls(d1, q1);
            best = best.max(l1 + ls(1.0, rest / (1.0 - d1)));
            for &d2 in &deltas {
                for &q2 in &qs {
                    let rest2 = rest - (1.0 - d1) * q2;
                    if rest2 <= 0.0 {
                        continue;
                    }
                    let v = l1 + ls(d2, q2) + ls(1.0, rest2 / ((1.0 - d1) * (1.0 - d2)));
                    best = best.max(v);
                }
            }
        }
    }
    best
}

#[test]
fn recipe_close_to_brute_force_optimum() {
    let j = law(Dependence::Independent);
    let cert = certified_lower(&j, 8.0, 64, default_c_param(&j)).unwrap();
    let bf = brute_force(&j, cert.reached);
    assert!(bf < 0.0);
    println!(
        "recipe {} ({} blocks), brute force {bf}",
        cert.log_bound,
        cert.blocks.len()
    );
    // the recipe may use more than three blocks and beat the grid search
    assert!(
        cert.log_bound >= 1.25 * bf,
        "recipe {} vs brute force {bf}",
        cert.log_bound
    );
}
