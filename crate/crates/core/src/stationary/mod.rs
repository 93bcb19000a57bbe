//! Stationary solutions `(U, V, Psi)` on acyclic networks.
//!
//! `V` is arcwise constant and fixed by the exit fluxes. For a given `Psi`
//! the momentum equation integrates to `U = E (C - V J)` with
//! `E = exp(Psi / lambda)`; the constants `C_i` follow from the node
//! relations and the mass constraint. The fixed-point map feeds `U` back
//! into the elliptic problem for `Psi`.

pub mod chain;
pub mod residual;
pub mod shooting;
pub mod special;
pub mod thresholds;

use crate::boundary::BoundarySpec;
use crate::dynamics::diagnostics::h1_vertices_sq;
use crate::dynamics::SimState;
use crate::elliptic::EllipticOperator;
use crate::error::{Error, Result};
use crate::graph::{exit_side_set, Network};

pub use chain::{coefficient_chain, CoefficientChain};
pub use residual::{residual_report, ResidualReport};
pub use shooting::shooting_oracle;
pub use special::{special_constant, special_zero};
pub use thresholds::{mu_thresholds, Thresholds};

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    /// Arcwise constant `V_i`.
    pub v: Vec<f64>,
    /// `U_i` at the arc vertices.
    pub u: Vec<Vec<f64>>,
    /// `Psi_i` at the arc vertices.
    pub psi: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub mu_s: f64,
    pub converged: bool,
    pub iterations: usize,
    pub contraction: Vec<f64>,
    /// `min U >= -1e-10`.
    pub nonnegative: bool,
    pub residuals: ResidualReport,
}

impl StationaryProfile {
    /// Cell averages of `U` (the quantity the dynamics evolve).
    pub fn u_cells(&self) -> Vec<Vec<f64>> {
        self.u
            .iter()
            .map(|u| u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            .collect()
    }

    /// The profile as a dynamics state at `t = 0`.
    pub fn to_state(&self, net: &Network) -> Result<SimState> {
        let v = net
            .arcs()
            .iter()
            .zip(&self.v)
            .map(|(a, &v)| vec![v; a.params.cells])
            .collect();
        SimState::from_fields(net, 0.0, self.u_cells(), v, self.psi.clone())
    }

    pub fn min_u(&self) -> f64 {
        self.u.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Arcwise constant `V` from exit fluxes `W` (indexed like the exits).
pub fn compute_v(net: &Network, w: &[f64]) -> Result<Vec<f64>> {
    if !net.is_acyclic() {
        return Err(Error::Cyclic("stationary flux field"));
    }
    if w.len() != net.external_nodes().len() {
        return Err(Error::Dimension(format!(
            "{} flux values for {} exits",
            w.len(),
            net.external_nodes().len()
        )));
    }
    let sum: f64 = w.iter().sum();
    let scale = w.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    if sum.abs() > 1e-12 * scale {
        return Err(Error::IncompatibleFluxes(sum));
    }
    let mut v = vec![0.0; net.arcs().len()];
    for (e, &wj) in net.external_nodes().iter().zip(w) {
        v[e.arc] = wj / (e.eta * net.arcs()[e.arc].params.lambda);
    }
    for (i, arc) in net.arcs().iter().enumerate() {
        if arc.is_internal() {
            let side: f64 = exit_side_set(net, i)?.iter().map(|&j| w[j]).sum();
            v[i] = -side / arc.params.lambda;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Discrete `H^1` distance between two vertex fields.
pub fn h1_distance(net: &Network, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    net.arcs()
        .iter()
        .enumerate()
        .map(|(i, arc)| {
            let d: Vec<f64> = a[i].iter().zip(&b[i]).map(|(x, y)| x - y).collect();
            h1_vertices_sq(&d, arc.params.h())
        })
        .sum::<f64>()
        .sqrt()
}

/// Banach iteration `Psi -> U(Psi) -> Psi` from `Psi = 0` with the
/// asymptotic boundary data of `spec`.
pub fn fixed_point(
    net: &Network,
    spec: &BoundarySpec,
    mu_s: f64,
    opts: FixedPointOptions,
) -> Result<StationaryProfile> {
    net.require_nd()?;
    let w = spec.w_limits();
    let p = spec.p_limits();
    let v = compute_v(net, &w)?;
    let reaction: Vec<f64> = net.arcs().iter().map(|a| a.params.degradation).collect();
    let op = EllipticOperator::new(net, &reaction)?;
    let mut psi: Vec<Vec<f64>> = net.arcs().iter().map(|a| vec![0.0; a.params.cells + 1]).collect();
    let mut contraction = Vec::new();
    let mut last_step: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (_, u) = coefficient_chain(net, &psi, &v, mu_s)?;
        let source: Vec<Vec<f64>> = net
            .arcs()
            .iter()
            .zip(&u)
            .map(|(a, u)| u.iter().map(|x| a.params.production * x).collect())
            .collect();
        let next = op.solve(net, &source, &p)?.psi;
        let step = h1_distance(net, &next, &psi);
        if !step.is_finite() {
            return Err(Error::NoContraction(contraction));
        }
        if let Some(prev) = last_step {
            if prev > 0.0 {
                contraction.push(step / prev);
            }
        }
        last_step = Some(step);
        psi = next;
        if step <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged && contraction.last().is_some_and(|&r| r >= 1.0) {
        return Err(Error::NoContraction(contraction));
    }
    let (chain, u) = coefficient_chain(net, &psi, &v, mu_s)?;
    let mut profile = StationaryProfile {
        v,
        u,
        psi,
        c: chain.c,
        mu_s,
        converged,
        iterations,
        contraction,
        nonnegative: true,
        residuals: ResidualReport::default(),
    };
    profile.nonnegative = profile.min_u() >= -1e-10;
    profile.residuals = residual_report(&profile, net, spec);
    Ok(profile)
}
