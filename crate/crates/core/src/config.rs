//! On-disk configuration schema (TOML).
//!
//! A single file describes the network (`nodes`, `arcs`, `transmission`,
//! `boundary`) and, optionally, the experiment sections used by the CLI
//! drivers (`simulation`, `stationary`, `perturbation`, `initial`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: u32,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcConfig {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    #[serde(rename = "L")]
    pub length: f64,
    pub lambda: f64,
    pub beta: f64,
    #[serde(rename = "D")]
    pub diffusion: f64,
    pub a: f64,
    pub b: f64,
    pub cells: usize,
}

/// Dense Kedem-Katchalsky matrices of one internal node. Row/column `k`
/// refers to arc `arcs[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionConfig {
    pub node: u32,
    pub arcs: Vec<u32>,
    pub alpha: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
}

/// `inf + amp * exp(-rate * t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    #[serde(default)]
    pub inf: f64,
    #[serde(default)]
    pub amp: f64,
    #[serde(default)]
    pub rate: f64,
}

impl DecaySpec {
    pub fn constant(value: f64) -> Self {
        Self {
            inf: value,
            amp: 0.0,
            rate: 0.0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.amp == 0.0 {
            self.inf
        } else {
            self.inf + self.amp * (-self.rate * t).exp()
        }
    }

    /// Exact integral over `[0, t]`.
    pub fn integral(&self, t: f64) -> f64 {
        if self.amp == 0.0 {
            self.inf * t
        } else {
            self.inf * t - self.amp * (-self.rate * t).exp_m1() / self.rate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub node: u32,
    #[serde(default)]
    pub d: f64,
    #[serde(default, rename = "W")]
    pub w: DecaySpec,
    #[serde(default, rename = "P")]
    pub p: DecaySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub t_final: f64,
    /// Time between time-series samples.
    pub cadence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMode {
    #[default]
    FixedPoint,
    Zero,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub mu_s: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub mode: StationaryMode,
    /// User-supplied elliptic gradient constant for the mass thresholds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2_bar: Option<f64>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

/// A constant or an expression in `x` (arc coordinate) and `L` (arc length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialValue {
    Constant(f64),
    Expression(String),
}

impl Default for InitialValue {
    fn default() -> Self {
        InitialValue::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub arc: u32,
    #[serde(default)]
    pub u: InitialValue,
    #[serde(default)]
    pub v: InitialValue,
    #[serde(default)]
    pub psi: InitialValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub nodes: Vec<NodeConfig>,
    pub arcs: Vec<ArcConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transmission: Vec<TransmissionConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<InitialConfig>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Overrides the grid resolution of every arc.
    pub fn with_cells(mut self, cells: usize) -> Self {
        for arc in &mut self.arcs {
            arc.cells = cells;
        }
        self
    }

    pub fn boundary_for(&self, node: u32) -> Option<&BoundaryConfig> {
        self.boundary.iter().find(|b| b.node == node)
    }
}
