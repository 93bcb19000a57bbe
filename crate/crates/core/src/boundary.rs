//! Time-dependent boundary data at external nodes.

use crate::config::{Config, DecaySpec};
use crate::error::{Error, Result};
use crate::graph::Network;

/// Flux data `W_j(t)` and Robin data `P_j(t)` for one exit; both of the
/// form `inf + amp * exp(-rate * t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExitData {
    pub w: DecaySpec,
    pub p: DecaySpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    pub w: f64,
    pub p: f64,
    /// Exact `int_0^t W_j(s) ds`.
    pub w_integral: f64,
}

/// Boundary data indexed like [`Network::external_nodes`]. The Robin
/// weights `d_j` live on the network itself.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub exits: Vec<ExitData>,
}

impl BoundarySpec {
    pub fn zero(net: &Network) -> Self {
        Self {
            exits: vec![ExitData::default(); net.external_nodes().len()],
        }
    }

    pub fn from_config(cfg: &Config, net: &Network) -> Result<Self> {
        let exits = net
            .external_nodes()
            .iter()
            .map(|e| {
                cfg.boundary_for(e.id)
                    .map(|b| ExitData { w: b.w, p: b.p })
                    .unwrap_or_default()
            })
            .collect();
        let spec = Self { exits };
        spec.check()?;
        Ok(spec)
    }

    /// Steady data only (`W_j = W_inf`, `P_j = P_inf`).
    pub fn constant(w: &[f64], p: &[f64]) -> Self {
        Self {
            exits: w
                .iter()
                .zip(p)
                .map(|(&w, &p)| ExitData {
                    w: DecaySpec::constant(w),
                    p: DecaySpec::constant(p),
                })
                .collect(),
        }
    }

    pub fn check(&self) -> Result<()> {
        for (j, e) in self.exits.iter().enumerate() {
            for (name, s) in [("W", e.w), ("P", e.p)] {
                if ![s.inf, s.amp, s.rate].iter().all(|x| x.is_finite()) {
                    return Err(Error::Schema(format!("boundary[{j}].{name}: non-finite value")));
                }
                if s.amp != 0.0 && s.rate <= 0.0 {
                    return Err(Error::Schema(format!(
                        "boundary[{j}].{name}.rate must be positive when amp != 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn w_limits(&self) -> Vec<f64> {
        self.exits.iter().map(|e| e.w.inf).collect()
    }

    pub fn p_limits(&self) -> Vec<f64> {
        self.exits.iter().map(|e| e.p.inf).collect()
    }

    pub fn w_at(&self, t: f64) -> Vec<f64> {
        self.exits.iter().map(|e| e.w.value(t)).collect()
    }

    pub fn p_at(&self, t: f64) -> Vec<f64> {
        self.exits.iter().map(|e| e.p.value(t)).collect()
    }
}

/// Closed-form boundary data and the exact time integral of `W_j`.
pub fn eval_boundary(spec: &BoundarySpec, t: f64) -> Vec<BoundaryValues> {
    debug_assert!(t >= 0.0);
    spec.exits
        .iter()
        .map(|e| BoundaryValues {
            w: e.w.value(t),
            p: e.p.value(t),
            w_integral: e.w.integral(t),
        })
        .collect()
}
