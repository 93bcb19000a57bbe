//! Closed-form stationary solutions valid on any network, cycles included.

use super::{residual_report, ResidualReport, StationaryProfile};
use crate::boundary::BoundarySpec;
use crate::config::DecaySpec;
use crate::elliptic::EllipticOperator;
use crate::error::{Error, Result};
use crate::graph::Network;

/// `(U, V, Psi) = (0, 0, Psi_0)` with `Psi_0` solving the elliptic problem
/// with zero source and Robin data `p`.
pub fn special_zero(net: &Network, p: &[f64]) -> Result<StationaryProfile> {
    let reaction: Vec<f64> = net.arcs().iter().map(|a| a.params.degradation).collect();
    let source: Vec<Vec<f64>> = net.arcs().iter().map(|a| vec![0.0; a.params.cells + 1]).collect();
    let psi = EllipticOperator::new(net, &reaction)?.solve(net, &source, p)?.psi;
    let spec = BoundarySpec {
        exits: p
            .iter()
            .map(|&p| crate::boundary::ExitData {
                w: DecaySpec::default(),
                p: DecaySpec::constant(p),
            })
            .collect(),
    };
    let mut profile = StationaryProfile {
        v: vec![0.0; net.arcs().len()],
        u: source,
        psi,
        c: vec![0.0; net.arcs().len()],
        mu_s: 0.0,
        converged: true,
        iterations: 0,
        contraction: Vec::new(),
        nonnegative: true,
        residuals: ResidualReport::default(),
    };
    profile.residuals = residual_report(&profile, net, &spec);
    Ok(profile)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Spatially constant profile `(mu_s/|A|, 0, r mu_s/|A|)` when the data
/// satisfy the compatibility clauses, checked in order:
/// 1. `a_i / b_i = r` on every arc;
/// 2. `P_j = 0` exactly when `d_j = 0`;
/// 3. `P_j / d_j = r mu_s / |A|` where `d_j != 0`;
/// 4. all `W_j = 0`.
pub fn special_constant(net: &Network, spec: &BoundarySpec, mu_s: f64) -> Result<StationaryProfile> {
    let arcs = net.arcs();
    let r = arcs[0].params.production / arcs[0].params.degradation;
    if let Some(a) = arcs
        .iter()
        .find(|a| !close(a.params.production / a.params.degradation, r))
    {
        return Err(Error::ConstantRejected(format!(
            "clause 1: a/b on arc {} differs from a/b = {r} on arc {}",
            a.id, arcs[0].id
        )));
    }
    let level = mu_s / net.total_length();
    let p = spec.p_limits();
    let w = spec.w_limits();
    for (e, &pj) in net.external_nodes().iter().zip(&p) {
        if (pj == 0.0) != (e.d == 0.0) {
            return Err(Error::ConstantRejected(format!(
                "clause 2: exit {} has P = {pj} and d = {}",
                e.id, e.d
            )));
        }
    }
    for (e, &pj) in net.external_nodes().iter().zip(&p) {
        if e.d != 0.0 && !close(pj / e.d, r * level) {
            return Err(Error::ConstantRejected(format!(
                "clause 3: exit {} has P/d = {} but r mu_s/|A| = {}",
                e.id,
                pj / e.d,
                r * level
            )));
        }
    }
    if let Some((e, wj)) = net.external_nodes().iter().zip(&w).find(|(_, w)| **w != 0.0) {
        return Err(Error::ConstantRejected(format!("clause 4: exit {} has W = {wj}", e.id)));
    }
    let mut profile = StationaryProfile {
        v: vec![0.0; arcs.len()],
        u: arcs.iter().map(|a| vec![level; a.params.cells + 1]).collect(),
        psi: arcs.iter().map(|a| vec![r * level; a.params.cells + 1]).collect(),
        c: vec![level; arcs.len()],
        mu_s,
        converged: true,
        iterations: 0,
        contraction: Vec::new(),
        nonnegative: level >= 0.0,
        residuals: ResidualReport::default(),
    };
    profile.residuals = residual_report(&profile, net, spec);
    Ok(profile)
}
