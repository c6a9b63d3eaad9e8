//! Declarative experiment configuration (JSON).

use serde::{Deserialize, Serialize};

use crate::copulas::JointLaw;
use crate::error::{Error, Result};
use crate::gridfn::Grid;
use crate::tails::{MgfScheme, MgfSettings};

/// `min..max` with `per_decade` log-spaced nodes per factor of ten.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::geometric(self.min, self.max, self.per_decade)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: MgfScheme,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let s = MgfSettings::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            scheme: s.scheme,
        }
    }
}

impl SolverSpec {
    pub fn settings(&self) -> MgfSettings {
        MgfSettings {
            scheme: self.scheme,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub paths: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Stop-loss probes `a` for `E(R − a)₊`.
    #[serde(default)]
    pub probes: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerSpec {
    pub n_blocks: usize,
    /// Defaults to `γ/(γ−1)` for power-law marginals.
    pub c_param: Option<f64>,
}

impl Default for LowerSpec {
    fn default() -> Self {
        Self {
            n_blocks: 64,
            c_param: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub h: bool,
    pub constants: bool,
    pub mgf: bool,
    pub bounds: bool,
    pub simulate: bool,
    /// Names of verification suites to run.
    pub verify: Vec<String>,
}

/// `(α, r)` pairs for the constants table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsGrid {
    pub alpha: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub law: Option<JointLaw>,
    #[serde(default)]
    pub x_grid: Option<GridSpec>,
    #[serde(default)]
    pub z_grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub lower: LowerSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub constants: Option<ConstantsGrid>,
}

fn need<T: Copy>(v: Option<T>, field: &str, why: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("`{field}` is required when {why}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.outputs;
        if let Some(law) = &self.law {
            law.validate()
                .map_err(|e| Error::Config(format!("law: {e}")))?;
        }
        for (name, g) in [("x_grid", &self.x_grid), ("z_grid", &self.z_grid)] {
            if let Some(g) = g {
                g.build()
                    .map_err(|e| Error::Config(format!("{name}: {e}")))?;
            }
        }
        if (o.h || o.bounds || o.mgf || o.simulate) && self.law.is_none() {
            return Err(Error::Config(
                "`law` is required for h, mgf, bounds or simulate".into(),
            ));
        }
        if o.h || o.bounds {
            need(self.x_grid, "x_grid", "h or bounds are requested")?;
        }
        if o.mgf || o.bounds {
            need(self.z_grid, "z_grid", "mgf or bounds are requested")?;
        }
        if o.constants {
            let g = self
                .constants
                .as_ref()
                .ok_or_else(|| Error::Config("`constants` grid is required".into()))?;
            if g.alpha
                .iter()
                .chain(&g.r)
                .any(|v| !(*v > 1.0 && v.is_finite()))
            {
                return Err(Error::Config(
                    "constants: α and r must be finite and > 1".into(),
                ));
            }
        }
        if o.simulate {
            let mc = self.mc.as_ref().ok_or_else(|| {
                Error::Config("`mc` is required when simulate is requested".into())
            })?;
            if mc.seed.is_none() {
                return Err(Error::Config(
                    "mc.seed is required when simulate is requested".into(),
                ));
            }
            if mc.paths < 2 || mc.horizon == 0 {
                return Err(Error::Config(
                    "mc.paths must be >= 2 and mc.horizon >= 1".into(),
                ));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver: tol > 0 and max_iter >= 1".into()));
        }
        if self.lower.n_blocks == 0 {
            return Err(Error::Config("lower.n_blocks must be >= 1".into()));
        }
        if let Some(c) = self.lower.c_param {
            if !(c > 0.0) {
                return Err(Error::Config("lower.c_param must be > 0".into()));
            }
        }
        for s in &o.verify {
            if !super::suites::SUITES.contains(&s.as_str()) {
                return Err(Error::UnknownSuite(s.clone()));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
