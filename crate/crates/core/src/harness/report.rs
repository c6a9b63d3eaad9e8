//! The `run` pipeline: laws → h and constants → MGF → bounds, with CSV/JSON
//! artifacts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::suites::{h_or_inf, verify, Check, SuiteReport};
use crate::constants::{b_co, c_lower, gamma_index, prefactor_bounded, prefactor_ind, Extended};
use crate::copulas::{Dependence, JointLaw};
use crate::error::{Error, Result};
use crate::hfun::{h_closed_ind, h_eval, h_ratio_co};
use crate::marginals::{FactorLaw, IncrementLaw};
use crate::tails::{
    certified_lower, chernoff, default_c_param, mc_sample, mgf_solve_with, MgfSolution,
};

/// Written into every CSV header comment and the summary.
pub const CSV_VERSION: &str = "perptail-csv v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub h: f64,
    pub t_argmin: f64,
    pub h_co: f64,
    pub h_counter: f64,
    pub h_ind_closed: Option<f64>,
    /// `ψ*(x)`.
    pub chernoff: Option<f64>,
    /// `log_bound` of the certificate and the abscissa it is valid at.
    pub certified_lower: Option<f64>,
    pub reached: Option<f64>,
    /// `−c_{∞,γ}`, the predicted floor for `log P(R > x) / h(x)`.
    pub predicted_constant: Option<f64>,
    /// `−ψ*(x) / h(x)`.
    pub ratio_chernoff_over_h: Option<f64>,
    /// `log_bound / h(reached)`.
    pub ratio_lower_over_h: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TailReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {CSV_VERSION} tail_report\n");
        s.push_str(
            "x,h,t_argmin,h_co,h_counter,h_ind_closed,chernoff,certified_lower,reached,\
             predicted_constant,ratio_chernoff_over_h,ratio_lower_over_h\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.x,
                r.h,
                r.t_argmin,
                r.h_co,
                r.h_counter,
                opt(r.h_ind_closed),
                opt(r.chernoff),
                opt(r.certified_lower),
                opt(r.reached),
                opt(r.predicted_constant),
                opt(r.ratio_chernoff_over_h),
                opt(r.ratio_lower_over_h)
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub suites: Vec<SuiteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimSummary>,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub paths: usize,
    pub horizon: usize,
    pub seed: u64,
    pub mean: f64,
    pub std_err: f64,
    /// `(a, E(R − a)₊)`.
    pub stop_loss: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: TailReport,
    pub mgf: Option<MgfSolution>,
    pub summary: Summary,
}

fn with_dep(j: &JointLaw, dependence: Dependence) -> JointLaw {
    JointLaw { dependence, ..*j }
}

fn power_params(j: &JointLaw) -> Option<(f64, f64, f64, f64)> {
    match (j.factor, j.increment, j.dependence) {
        (_, _, Dependence::ExplicitAfterH { .. }) => None,
        (FactorLaw::PowerF { c, r }, IncrementLaw::Weibull { d, alpha }, _) => {
            Some((c, r, d, alpha))
        }
        _ => None,
    }
}

pub fn constants_csv(alpha: &[f64], r: &[f64]) -> String {
    let mut s = format!("# {CSV_VERSION} constants\n");
    s.push_str("alpha,r,gamma_index,prefactor_ind,prefactor_bounded,b_co,ratio_co,c_lower_inf\n");
    for &a in alpha {
        for &rr in r {
            let g = gamma_index(a, rr);
            let cl = c_lower(Extended::Infinite, Extended::Finite(g)).unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{a},{rr},{g},{},{},{},{},{cl}",
                prefactor_ind(a, rr),
                prefactor_bounded(rr),
                b_co(a, rr),
                h_ratio_co(rr, a)
            );
        }
    }
    s
}

fn write(dir: &Path, name: &str, body: &str, artifacts: &mut Vec<String>) -> Result<()> {
    std::fs::write(dir.join(name), body)?;
    artifacts.push(name.to_string());
    Ok(())
}

fn mgf_csv(ms: &MgfSolution) -> String {
    format!("# {CSV_VERSION} mgf\n{}", ms.to_csv())
}

/// Executes the requested pipelines, writes artifacts into `out_dir` and
/// returns the report. Invariant violations become failed checks in the
/// summary; solver errors are returned annotated with their stage.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let o = &cfg.outputs;
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();

    if o.constants {
        let g = cfg.constants.as_ref().expect("validated");
        write(
            out_dir,
            "constants.csv",
            &constants_csv(&g.alpha, &g.r),
            &mut artifacts,
        )?;
    }

    let mgf = if o.mgf || o.bounds {
        let j = cfg.law.expect("validated");
        let zg = cfg.z_grid.expect("validated").build()?;
        let ms = mgf_solve_with(&j, &zg, &cfg.solver.settings()).map_err(|e| e.at("mgf"))?;
        write(out_dir, "mgf.csv", &mgf_csv(&ms), &mut artifacts)?;
        Some(ms)
    } else {
        None
    };

    let mut report = TailReport::default();
    if o.h || o.bounds {
        let j = cfg.law.expect("validated");
        let co = with_dep(&j, Dependence::Comonotone);
        let counter = with_dep(&j, Dependence::Countermonotone);
        let pw = power_params(&j);
        let predicted = pw.map(|(_, r, _, a)| gamma_index(a, r)).and_then(|g| {
            c_lower(Extended::Infinite, Extended::Finite(g))
                .ok()
                .map(|c| -c)
        });
        let c_param = cfg.lower.c_param.unwrap_or_else(|| default_c_param(&j));
        let xg = cfg.x_grid.expect("validated").build()?;
        let mut sandwich_bad = Vec::new();
        let mut order_bad = Vec::new();
        let mut certs = Vec::new();
        for &x in xg.points() {
            let (h, t) = match h_eval(&j, x) {
                Ok(r) => (r.h, r.t_argmin),
                Err(Error::InfiniteObjective(_)) => (f64::INFINITY, f64::NAN),
                Err(e) => return Err(e.at("hfun")),
            };
            let h_co = h_or_inf(&co, x).map_err(|e| e.at("hfun"))?;
            let h_counter = h_or_inf(&counter, x).map_err(|e| e.at("hfun"))?;
            let tol = 1e-9;
            if !(h_co <= h + tol * h.abs() || h == f64::INFINITY)
                || !(h_counter == f64::INFINITY || h <= h_counter + tol * h_counter.abs())
            {
                sandwich_bad.push(x);
            }
            let mut row = TailRow {
                x,
                h,
                t_argmin: t,
                h_co,
                h_counter,
                h_ind_closed: pw.map(|(c, r, d, a)| h_closed_ind(c, r, d, a, x)),
                chernoff: None,
                certified_lower: None,
                reached: None,
                predicted_constant: predicted,
                ratio_chernoff_over_h: None,
                ratio_lower_over_h: None,
            };
            if o.bounds {
                let ms = mgf.as_ref().expect("solved above");
                let ch = chernoff(ms, x).map_err(|e| e.at("chernoff"))?;
                row.chernoff = Some(ch);
                row.ratio_chernoff_over_h = Some(-ch / h);
                match certified_lower(&j, x, cfg.lower.n_blocks, c_param) {
                    Ok(cert) => {
                        let ch_r = chernoff(ms, cert.reached).map_err(|e| e.at("chernoff"))?;
                        let slack = ms.residual * ms.psi.ys()[ms.psi.len() - 1] + 1e-9;
                        if cert.log_bound > -ch_r + slack {
                            order_bad.push(x);
                        }
                        let hr = h_eval(&j, cert.reached).map(|r| r.h).unwrap_or(f64::NAN);
                        row.certified_lower = Some(cert.log_bound);
                        row.reached = Some(cert.reached);
                        row.ratio_lower_over_h = Some(cert.log_bound / hr);
                        certs.push(cert);
                    }
                    Err(Error::Certificate(_) | Error::InfiniteObjective(_)) => {}
                    Err(e) => return Err(e.at("certified_lower")),
                }
            }
            report.rows.push(row);
        }
        checks.push(Check {
            name: "sandwich rows".into(),
            passed: sandwich_bad.is_empty(),
            detail: format!("violations at {sandwich_bad:?}"),
            elapsed_ms: 0,
        });
        if o.bounds {
            checks.push(Check {
                name: "bound ordering rows".into(),
                passed: order_bad.is_empty(),
                detail: format!("violations at {order_bad:?}"),
                elapsed_ms: 0,
            });
            write(
                out_dir,
                "certificates.json",
                &serde_json::to_string_pretty(&certs)?,
                &mut artifacts,
            )?;
        }
        write(out_dir, "tail_report.csv", &report.to_csv(), &mut artifacts)?;
    }

    let simulation = if o.simulate {
        let j = cfg.law.expect("validated");
        let mc = cfg.mc.as_ref().expect("validated");
        let seed = mc.seed.expect("validated");
        let r = mc_sample(&j, mc.paths, mc.horizon, seed);
        let rep = crate::tails::mc::report_from_samples(&r, &r, &mc.probes);
        let mut csv = format!("# {CSV_VERSION} samples\nr\n");
        for v in &r {
            let _ = writeln!(csv, "{v}");
        }
        write(out_dir, "samples.csv", &csv, &mut artifacts)?;
        Some(SimSummary {
            paths: mc.paths,
            horizon: mc.horizon,
            seed,
            mean: rep.means.0,
            std_err: rep.mean_se.0,
            stop_loss: rep
                .rows
                .iter()
                .map(|row| (row.probe, row.stop_loss.0))
                .collect(),
        })
    } else {
        None
    };

    let suites = o
        .verify
        .iter()
        .map(|s| verify(s))
        .collect::<Result<Vec<_>>>()?;

    artifacts.push("summary.json".into());
    let passed = checks.iter().all(|c| c.passed) && suites.iter().all(|s| s.passed);
    let summary = Summary {
        version: CSV_VERSION.into(),
        config_hash: cfg.hash(),
        passed,
        checks,
        suites,
        simulation,
        artifacts,
    };
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(RunOutput {
        report,
        mgf,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_generator_report() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "law": {
                    "factor": {"kind": "constant", "m": 0.5},
                    "increment": {"kind": "constant", "q": 1.0},
                    "dependence": {"kind": "independent"}
                },
                "x_grid": {"min": 1.0, "max": 4.0, "per_decade": 10},
                "z_grid": {"min": 1e-3, "max": 100.0, "per_decade": 16},
                "outputs": {"h": true, "bounds": true}
            }"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run(&cfg, dir.path()).unwrap();
        for row in &out.report.rows {
            let ch = row.chernoff.unwrap();
            if row.x < 1.99 {
                assert!(ch.abs() < 1e-9, "{row:?}");
            } else if row.x > 2.01 {
                assert_eq!(ch, f64::INFINITY, "{row:?}");
            }
        }
        assert!(dir.path().join("tail_report.csv").exists());
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn constants_only() {
        let cfg = ExperimentConfig::from_json(
            r#"{"constants": {"alpha": [2.0, 3.0], "r": [2.0]}, "outputs": {"constants": true}}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run(&cfg, dir.path()).unwrap();
        assert!(out.summary.passed);
        let csv = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# perptail-csv v1"));
        assert!(lines[1].contains("gamma_index") && lines[1].contains("b_co"));
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("2,2,1.3333333333333333,"));
    }
}
