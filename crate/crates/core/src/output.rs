//! Text outputs: time-series CSV, snapshot and profile tables, TOML reports.
//! Numbers use Rust's locale-independent shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::SimState;
use crate::elliptic::{assemble, EllipticProblem};
use crate::error::Result;
use crate::experiment::{PerturbOutcome, Sample};
use crate::graph::Network;
use crate::stationary::{StationaryProfile, Thresholds};

pub const TIME_SERIES_HEADER: &str = "t,mass,mass_residual,max_node_flux_residual,sup_u,bound_rhs,\
dist_to_stationary_u,dist_to_stationary_v,dist_to_stationary_psi";

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn time_series_csv(samples: &[Sample]) -> String {
    let mut out = String::with_capacity(128 * (samples.len() + 1));
    out.push_str(TIME_SERIES_HEADER);
    out.push('\n');
    for s in samples {
        let (du, dv, dp) = match &s.distance {
            Some(d) => (d.u_sup, d.v_sup, d.psi_sup),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let row = [s.t, s.mass, s.mass_residual, s.max_node_flux_residual, s.sup_u, s.bound_rhs, du, dv, dp];
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Cell-centre table `arc x u v psi` (psi averaged from the vertices).
pub fn snapshot_table(state: &SimState, net: &Network) -> String {
    let mut out = format!("# t = {}\narc x u v psi\n", num(state.t));
    let psi = state.psi_cells();
    for (i, arc) in net.arcs().iter().enumerate() {
        for (k, x) in arc.centres().iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                arc.id,
                num(*x),
                num(state.u[i][k]),
                num(state.v[i][k]),
                num(psi[i][k])
            );
        }
    }
    out
}

/// Vertex table `arc x U V Psi`.
pub fn profile_table(profile: &StationaryProfile, net: &Network) -> String {
    let mut out = String::from("arc x U V Psi\n");
    for (i, arc) in net.arcs().iter().enumerate() {
        for (k, x) in arc.vertices().iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                arc.id,
                num(*x),
                num(profile.u[i][k]),
                num(profile.v[i]),
                num(profile.psi[i][k])
            );
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcSummary {
    pub arc: u32,
    pub c: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub mu_s: f64,
    pub converged: bool,
    pub iterations: usize,
    pub nonnegative: bool,
    pub contraction: Vec<f64>,
    pub residuals: std::collections::BTreeMap<String, f64>,
    pub arcs: Vec<ArcSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

impl ProfileReport {
    pub fn new(profile: &StationaryProfile, net: &Network) -> Self {
        Self {
            mu_s: profile.mu_s,
            converged: profile.converged,
            iterations: profile.iterations,
            nonnegative: profile.nonnegative,
            contraction: profile.contraction.clone(),
            residuals: profile
                .residuals
                .summary()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            arcs: net
                .arcs()
                .iter()
                .enumerate()
                .map(|(i, a)| ArcSummary {
                    arc: a.id,
                    c: profile.c[i],
                    v: profile.v[i],
                })
                .collect(),
            thresholds: None,
        }
    }
}

pub const DISTANCE_HEADER: &str = "t,sup_u,sup_v,sup_psi,h1_u,h1_v,h1_psi,ft";

/// Distance-to-profile series of a perturbation run with the running `F_t`.
pub fn distance_csv(outcome: &PerturbOutcome) -> String {
    let mut out = String::from(DISTANCE_HEADER);
    out.push('\n');
    for (s, ft) in outcome.run.samples.iter().zip(&outcome.ft.prefix) {
        let d = s.distance.unwrap_or_default();
        let row = [s.t, d.u_sup, d.v_sup, d.psi_sup, d.u_h1, d.v_h1, d.psi_h1, *ft];
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbReport {
    pub amplitude: f64,
    pub seed: u64,
    pub t_final: f64,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub decay_ratio: f64,
    pub ft: f64,
    /// `F` over the first half of the run.
    pub ft_half: f64,
    pub max_bound_excess: f64,
}

impl PerturbReport {
    pub fn new(outcome: &PerturbOutcome, amplitude: f64, seed: u64) -> Self {
        let t_final = outcome.run.samples.last().map_or(0.0, |s| s.t);
        let t0 = outcome.run.samples.first().map_or(0.0, |s| s.t);
        Self {
            amplitude,
            seed,
            t_final,
            initial_distance: outcome.initial_distance,
            final_distance: outcome.final_distance,
            decay_ratio: outcome.final_distance / outcome.initial_distance,
            ft: outcome.ft.value,
            ft_half: outcome.ft_at(0.5 * (t0 + t_final)).unwrap_or(f64::NAN),
            max_bound_excess: outcome.run.max_bound_excess,
        }
    }
}

/// Triplet dump of the elliptic operator with reaction coefficients `reaction`.
pub fn matrix_dump(net: &Network, reaction: &[f64]) -> Result<String> {
    let prob = EllipticProblem {
        net,
        reaction: reaction.to_vec(),
        source: net.arcs().iter().map(|a| vec![0.0; a.params.cells + 1]).collect(),
        robin_rhs: vec![0.0; net.external_nodes().len()],
    };
    let mut buf = Vec::new();
    assemble(&prob)?.matrix.write_to(&mut buf)?;
    Ok(String::from_utf8(buf).expect("triplet dump is ASCII"))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| crate::Error::Schema(e.to_string()))
}

pub fn write(path: impl AsRef<Path>, text: &str) -> Result<()> {
    if let Some(dir) = path.as_ref().parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
