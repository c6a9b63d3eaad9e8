//! `perptail`: command-line driver.
//!
//! Exit codes: 0 pass, 1 check failure (or solver failure), 2 usage or
//! config error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use perptail_core::harness::{self, constants_csv, ExperimentConfig, CSV_VERSION};
use perptail_core::tails::{
    certified_lower, certify_upper, default_c_param, mc_sample, mgf_solve_with, phi_b,
};
use perptail_core::{hfun, Error, Grid, GridFunction, JointLaw};

#[derive(Parser)]
#[command(
    name = "perptail",
    version,
    about = "Log-tail asymptotics of perpetuities R = MR + Q"
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts; stdout only when absent.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    min: f64,
    #[arg(long)]
    max: f64,
    #[arg(long, default_value_t = 16)]
    per_decade: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Table of closed-form constants over an (α, r) grid.
    Constants {
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
    },
    /// h(x), its minimizer and the co/counter-monotone envelopes on the config's x grid.
    Hfun {
        /// Abscissae; defaults to the config's `x_grid`.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Convex conjugate of a grid function read from CSV (`x,y` rows).
    Conjugate {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Solve for ψ = log E e^{zR} on the config's z grid.
    Mgf,
    /// Full tail report: h, Chernoff and certified lower bounds on the x grid.
    Tail,
    /// Certified lower bound for log P(R > x).
    LowerBound {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n_blocks: Option<usize>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Upper-bound certificate for φ_B(z) = z⁴/(64 B³).
    CertifyUpper {
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// Abscissae at which to report the resulting bound.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Monte Carlo samples of R.
    Simulate,
    /// Run a verification suite (`acceptance` runs all criteria).
    Verify { suite: String },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Check(String),
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(
                    Error::Config(_)
                        | Error::UnknownSuite(_)
                        | Error::Domain(_)
                        | Error::InvalidGrid(_)
                )
            )
        });
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage(anyhow!("--config is required for this subcommand")))?;
    let mut cfg = ExperimentConfig::from_path(path)
        .map_err(|e| Failure::Usage(anyhow!(e).context(format!("reading {}", path.display()))))?;
    if let (Some(seed), Some(mc)) = (cli.seed, cfg.mc.as_mut()) {
        mc.seed = Some(seed);
    }
    Ok(cfg)
}

fn law(cfg: &ExperimentConfig) -> Result<JointLaw, Failure> {
    cfg.law
        .ok_or_else(|| Failure::Usage(anyhow!("config: `law` is required for this subcommand")))
}

fn emit(out_dir: Option<&Path>, name: &str, body: &str) -> anyhow::Result<()> {
    match out_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            std::fs::write(d.join(name), body).with_context(|| format!("writing {name}"))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(anyhow!(e)))?;
    }
    let out = cli.out_dir.as_deref();
    match &cli.cmd {
        Cmd::Constants { alpha, r } => {
            if alpha.iter().chain(r).any(|v| !(*v > 1.0 && v.is_finite())) {
                return Err(Failure::Usage(anyhow!("α and r must be finite and > 1")));
            }
            emit(out, "constants.csv", &constants_csv(alpha, r))?;
        }
        Cmd::Hfun { x } => {
            let cfg = load_config(cli)?;
            let j = law(&cfg)?;
            let xs = if x.is_empty() {
                cfg.x_grid
                    .ok_or_else(|| Failure::Usage(anyhow!("give --x or an x_grid in the config")))?
                    .build()?
                    .points()
                    .to_vec()
            } else {
                x.clone()
            };
            let co = JointLaw {
                dependence: perptail_core::Dependence::Comonotone,
                ..j
            };
            let counter = JointLaw {
                dependence: perptail_core::Dependence::Countermonotone,
                ..j
            };
            let mut s = format!("# {CSV_VERSION} hfun\nx,h,t_argmin,boundary,h_co,h_counter\n");
            for &x in &xs {
                let r = hfun::h_eval(&j, x).map_err(|e| e.at("hfun"))?;
                let h_co = harness::suites::h_or_inf(&co, x)?;
                let h_counter = harness::suites::h_or_inf(&counter, x)?;
                s += &format!(
                    "{x},{},{},{},{h_co},{h_counter}\n",
                    r.h, r.t_argmin, r.boundary_flag
                );
            }
            emit(out, "hfun.csv", &s)?;
        }
        Cmd::Conjugate { input, grid } => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))
                .map_err(Failure::Usage)?;
            let f = GridFunction::from_csv(&text)?;
            let zg = Grid::geometric(grid.min, grid.max, grid.per_decade)?;
            let g = f.legendre(&zg)?;
            emit(
                out,
                "conjugate.csv",
                &format!("# {CSV_VERSION} conjugate\n{}", g.to_csv()),
            )?;
        }
        Cmd::Mgf => {
            let cfg = load_config(cli)?;
            let j = law(&cfg)?;
            let zg = cfg
                .z_grid
                .ok_or_else(|| Failure::Usage(anyhow!("config: `z_grid` is required for mgf")))?
                .build()?;
            let ms = mgf_solve_with(&j, &zg, &cfg.solver.settings()).map_err(|e| e.at("mgf"))?;
            emit(
                out,
                "mgf.csv",
                &format!("# {CSV_VERSION} mgf\n{}", ms.to_csv()),
            )?;
            eprintln!("iterations {}, residual {:.3e}", ms.iterations, ms.residual);
        }
        Cmd::Tail => {
            let mut cfg = load_config(cli)?;
            cfg.outputs.h = true;
            cfg.outputs.bounds = true;
            cfg.validate()?;
            let dir =
                out.ok_or_else(|| Failure::Usage(anyhow!("--out-dir is required for tail")))?;
            let res = harness::run(&cfg, dir)?;
            print!("{}", res.report.to_csv());
            if !res.summary.passed {
                return Err(Failure::Check(format!(
                    "report invariants failed; see {}",
                    dir.join("summary.json").display()
                )));
            }
        }
        Cmd::LowerBound { x, n_blocks, c } => {
            let cfg = load_config(cli)?;
            let j = law(&cfg)?;
            let n = n_blocks.unwrap_or(cfg.lower.n_blocks);
            let c = c
                .or(cfg.lower.c_param)
                .unwrap_or_else(|| default_c_param(&j));
            let cert = certified_lower(&j, *x, n, c).map_err(|e| e.at("certified_lower"))?;
            emit(
                out,
                "lower_bound.json",
                &(serde_json::to_string_pretty(&cert).map_err(anyhow::Error::from)? + "\n"),
            )?;
        }
        Cmd::CertifyUpper { b, grid, x } => {
            let cfg = load_config(cli)?;
            let j = law(&cfg)?;
            if !(*b > 0.0) {
                return Err(Failure::Usage(anyhow!("--b must be > 0")));
            }
            let zg = Grid::geometric(grid.min, grid.max, grid.per_decade)?;
            let phi_grid = Grid::geometric(grid.min * 1e-4, grid.max * 1e2, 64)?;
            let phi = phi_b(*b, &phi_grid)?;
            let cert = certify_upper(&j, &phi, &zg).map_err(|e| e.at("certify_upper"))?;
            let bounds = x
                .iter()
                .map(|&x| Ok((x, cert.log_bound(&phi, x)?)))
                .collect::<perptail_core::Result<Vec<_>>>()?;
            let body = serde_json::json!({ "b": b, "certificate": cert, "log_bounds": bounds });
            emit(
                out,
                "upper_certificate.json",
                &(serde_json::to_string_pretty(&body).map_err(anyhow::Error::from)? + "\n"),
            )?;
            if !cert.is_certified() {
                return Err(Failure::Check(format!(
                    "φ_B not certified: {:?}",
                    cert.verdict
                )));
            }
        }
        Cmd::Simulate => {
            let cfg = load_config(cli)?;
            let j = law(&cfg)?;
            let mc = cfg
                .mc
                .as_ref()
                .ok_or_else(|| Failure::Usage(anyhow!("config: `mc` is required for simulate")))?;
            let seed = mc.seed.ok_or_else(|| {
                Failure::Usage(anyhow!("mc.seed (or --seed) is required for simulate"))
            })?;
            let r = mc_sample(&j, mc.paths, mc.horizon, seed);
            let mut s = format!("# {CSV_VERSION} samples\nr\n");
            for v in &r {
                s += &format!("{v}\n");
            }
            emit(out, "samples.csv", &s)?;
        }
        Cmd::Verify { suite } => {
            let rep = harness::verify(suite)?;
            for c in &rep.checks {
                println!("{}", c.line());
            }
            if let Some(d) = out {
                std::fs::create_dir_all(d).map_err(anyhow::Error::from)?;
                let json = serde_json::to_string_pretty(&rep).map_err(anyhow::Error::from)?;
                std::fs::write(d.join("verify.json"), json).map_err(anyhow::Error::from)?;
            }
            if !rep.passed {
                let failed: Vec<_> = rep
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(Failure::Check(format!("failed: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
