//! Algebraic residuals of a stationary profile on its grid.

use super::StationaryProfile;
use crate::boundary::BoundarySpec;
use crate::elliptic::{end_index, node_residuals, variational_flux};
use crate::graph::Network;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    /// Per arc: `max |-D Psi'' + b Psi - a U|` over interior vertices.
    pub elliptic: Vec<f64>,
    /// Per arc: cell-integrated `lambda U' - U Psi' + beta V`.
    pub momentum: Vec<f64>,
    /// Per internal node: `max_i |-delta_i lambda_i V_i - sum_j sigma_ij (U_j - U_i)|`.
    pub transmission: Vec<f64>,
    /// Per internal node: `max_i |delta_i D_i Psi_i' - sum_j alpha_ij (Psi_j - Psi_i)|`.
    pub kedem: Vec<f64>,
    /// Per exit: `|eta D Psi' + d Psi - P|`.
    pub robin: Vec<f64>,
    /// Per exit: `|eta lambda V - W|`.
    pub flux: Vec<f64>,
    /// `|sum_i int U_i - mu_s|`.
    pub mass: f64,
}

fn vmax(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b))
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [
            vmax(&self.elliptic),
            vmax(&self.momentum),
            vmax(&self.transmission),
            vmax(&self.kedem),
            vmax(&self.robin),
            vmax(&self.flux),
            self.mass,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `(name, value)` pairs of the per-condition maxima.
    pub fn summary(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("elliptic", vmax(&self.elliptic)),
            ("momentum", vmax(&self.momentum)),
            ("transmission", vmax(&self.transmission)),
            ("kedem_katchalsky", vmax(&self.kedem)),
            ("robin", vmax(&self.robin)),
            ("boundary_flux", vmax(&self.flux)),
            ("mass", self.mass),
        ]
    }
}

/// Evaluates every stationary condition on the profile grid, using the
/// asymptotic boundary data of `spec`.
pub fn residual_report(profile: &StationaryProfile, net: &Network, spec: &BoundarySpec) -> ResidualReport {
    let w = spec.w_limits();
    let p = spec.p_limits();
    let mut rep = ResidualReport::default();
    let mut fluxes = Vec::with_capacity(net.arcs().len());
    let mut mass = 0.0;
    for (i, arc) in net.arcs().iter().enumerate() {
        let pr = &arc.params;
        let h = pr.h();
        let (u, psi) = (&profile.u[i], &profile.psi[i]);
        let n = pr.cells;
        let ell = (1..n)
            .map(|k| {
                let lap = (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]) / (h * h);
                (-pr.diffusion * lap + pr.degradation * psi[k] - pr.production * u[k]).abs()
            })
            .fold(0.0, f64::max);
        rep.elliptic.push(ell);
        let damp: Vec<f64> = psi.iter().map(|x| (-x / pr.lambda).exp()).collect();
        let mom = (0..n)
            .map(|k| {
                let jump = u[k + 1] * damp[k + 1] - u[k] * damp[k];
                let avg = 0.5 * (damp[k] + damp[k + 1]);
                ((pr.lambda * jump + pr.beta * profile.v[i] * h * avg) / h).abs()
            })
            .fold(0.0, f64::max);
        rep.momentum.push(mom);
        let g: Vec<f64> = u.iter().map(|x| pr.production * x).collect();
        fluxes.push(variational_flux(pr.diffusion, h, pr.degradation, psi, &g));
        mass += h * (u[1..n].iter().sum::<f64>() + 0.5 * (u[0] + u[n]));
    }
    rep.mass = (mass - profile.mu_s).abs();

    let kc = node_residuals(net, &profile.psi, &fluxes, &p);
    rep.kedem = kc.node.iter().map(|r| vmax(r)).collect();
    rep.robin = kc.robin;

    for node in net.internal_nodes() {
        let vals: Vec<f64> = node
            .members
            .iter()
            .enumerate()
            .map(|(q, &a)| profile.u[a][end_index(net.arcs()[a].params.cells, node.end_of(q))])
            .collect();
        let r = (0..node.degree())
            .map(|q| {
                let a = node.members[q];
                let lambda = net.arcs()[a].params.lambda;
                let coupling: f64 = (0..node.degree()).map(|s| node.sigma[(q, s)] * (vals[s] - vals[q])).sum();
                (-node.delta[q] * lambda * profile.v[a] - coupling).abs()
            })
            .fold(0.0, f64::max);
        rep.transmission.push(r);
    }
    rep.flux = net
        .external_nodes()
        .iter()
        .zip(&w)
        .map(|(e, &wj)| (e.eta * net.arcs()[e.arc].params.lambda * profile.v[e.arc] - wj).abs())
        .collect();
    rep
}
