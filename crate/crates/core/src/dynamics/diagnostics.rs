//! Monitoring quantities along a trajectory: the a priori sup-norm bound,
//! distances to a stationary profile and the `F_T` functional.

use nalgebra::DMatrix;

use super::{mass, NodeSolver, SimState, Simulator};
use crate::error::{Error, Result};
use crate::graph::{ArcEnd, Network};
use crate::stationary::StationaryProfile;

/// Jump coefficients of one node: `u_q - u_k = sum_r gamma[(q, r)] v_r`
/// with `k` the pivot (member-local indices; the pivot row is zero).
pub fn node_gamma(net: &Network, node: usize) -> Result<DMatrix<f64>> {
    let n = &net.internal_nodes()[node];
    let k = n.pivot.ok_or(Error::Degenerate { node: n.id })?;
    let m = n.degree();
    let others: Vec<usize> = (0..m).filter(|&q| q != k).collect();
    // Laplacian of sigma restricted to the non-pivot members
    let mut lred = DMatrix::zeros(m - 1, m - 1);
    for (a, &p) in others.iter().enumerate() {
        for (b, &q) in others.iter().enumerate() {
            lred[(a, b)] = if p == q {
                (0..m).filter(|&r| r != p).map(|r| n.sigma[(p, r)]).sum()
            } else {
                -n.sigma[(p, q)]
            };
        }
    }
    let inv = lred
        .try_inverse()
        .ok_or(Error::Degenerate { node: n.id })?;
    let mut g = DMatrix::zeros(m, m);
    for (a, &p) in others.iter().enumerate() {
        for (b, &q) in others.iter().enumerate() {
            let lambda = net.arcs()[n.members[q]].params.lambda;
            g[(p, q)] = inv[(a, b)] * n.delta[q] * lambda;
        }
    }
    Ok(g)
}

/// `max |gamma_ij|` over all internal nodes (zero without internal nodes).
pub fn gamma(net: &Network) -> Result<f64> {
    let mut g: f64 = 0.0;
    for k in 0..net.internal_nodes().len() {
        g = g.max(node_gamma(net, k)?.amax());
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBound {
    /// `max_i |u_i|_inf`
    pub lhs: f64,
    /// `|mu|/|A| + 2 sum_j (2 TV(u_j) + 3 gamma |v_j|_inf)`
    pub rhs: f64,
    pub gamma: f64,
}

fn bound_from_traces(net: &Network, state: &SimState, traces: &[Vec<(f64, f64)>], gamma: f64) -> SupBound {
    // traces[arc]: (|trace u - end cell u|, trace v) at internal-node ends
    let mut lhs: f64 = 0.0;
    let mut sum = 0.0;
    for (i, (u, v)) in state.u.iter().zip(&state.v).enumerate() {
        lhs = u.iter().fold(lhs, |a, x| a.max(x.abs()));
        let mut tv: f64 = u.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let mut vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for &(tu, tvv) in &traces[i] {
            vmax = vmax.max(tvv.abs());
            tv += tu;
        }
        sum += 2.0 * tv + 3.0 * gamma * vmax;
    }
    let mu = mass(state, net);
    SupBound {
        lhs,
        rhs: mu.abs() / net.total_length() + 2.0 * sum,
        gamma,
    }
}

fn trace_terms(net: &Network, solvers: &[NodeSolver], state: &SimState) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut out = vec![Vec::new(); net.arcs().len()];
    for (solver, node) in solvers.iter().zip(net.internal_nodes()) {
        let cell = |arc: usize, end: ArcEnd| -> (f64, f64) {
            let (u, v) = (&state.u[arc], &state.v[arc]);
            match end {
                ArcEnd::Start => (u[0], v[0]),
                ArcEnd::End => (u[u.len() - 1], v[v.len() - 1]),
            }
        };
        let w: Vec<f64> = node
            .members
            .iter()
            .enumerate()
            .map(|(p, &a)| {
                let (u, v) = cell(a, node.end_of(p));
                u + node.delta[p] * v
            })
            .collect();
        let t = solver.solve(&w)?;
        for (p, &a) in node.members.iter().enumerate() {
            let (uc, _) = cell(a, node.end_of(p));
            out[a].push(((t.u[p] - uc).abs(), t.v[p]));
        }
    }
    Ok(out)
}

/// Evaluates both sides of the a priori bound for the current state.
/// Node traces are recomputed from the cell values; their jumps to the
/// adjacent cells count toward the total variation.
pub fn sup_bound_check(state: &SimState, net: &Network) -> Result<SupBound> {
    net.require_nd()?;
    let solvers = (0..net.internal_nodes().len())
        .map(|k| NodeSolver::new(net, k))
        .collect::<Result<Vec<_>>>()?;
    let g = gamma(net)?;
    Ok(bound_from_traces(net, state, &trace_terms(net, &solvers, state)?, g))
}

impl Simulator<'_> {
    /// As [`sup_bound_check`], reusing the cached node factorizations.
    pub fn sup_bound(&self, state: &SimState, gamma: f64) -> Result<SupBound> {
        let traces = trace_terms(self.net, &self.nodes, state)?;
        Ok(bound_from_traces(self.net, state, &traces, gamma))
    }
}

/// `sum_k h f_k^2 + sum h ((f_{k+1} - f_k)/h)^2` for cell data.
pub(crate) fn h1_cells_sq(f: &[f64], h: f64) -> f64 {
    let l2: f64 = f.iter().map(|x| h * x * x).sum();
    let d: f64 = f.windows(2).map(|w| (w[1] - w[0]).powi(2) / h).sum();
    l2 + d
}

fn l2_vertices_sq(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    f.iter()
        .enumerate()
        .map(|(k, x)| if k == 0 || k == n { 0.5 * h * x * x } else { h * x * x })
        .sum()
}

pub(crate) fn h1_vertices_sq(f: &[f64], h: f64) -> f64 {
    l2_vertices_sq(f, h) + f.windows(2).map(|w| (w[1] - w[0]).powi(2) / h).sum::<f64>()
}

pub(crate) fn h2_vertices_sq(f: &[f64], h: f64) -> f64 {
    h1_vertices_sq(f, h)
        + f.windows(3)
            .map(|w| h * ((w[2] - 2.0 * w[1] + w[0]) / (h * h)).powi(2))
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distance {
    pub u_sup: f64,
    pub v_sup: f64,
    pub psi_sup: f64,
    pub u_h1: f64,
    pub v_h1: f64,
    pub psi_h1: f64,
}

impl Distance {
    pub fn sup(&self) -> f64 {
        self.u_sup.max(self.v_sup).max(self.psi_sup)
    }

    /// Combined discrete H1 norm of `(u, v, psi)`.
    pub fn h1(&self) -> f64 {
        (self.u_h1.powi(2) + self.v_h1.powi(2) + self.psi_h1.powi(2)).sqrt()
    }
}

struct Deviation {
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

fn deviation(state: &SimState, profile: &StationaryProfile) -> Deviation {
    let uc = profile.u_cells();
    Deviation {
        u: state.u.iter().zip(&uc).map(|(a, b)| diff(a, b)).collect(),
        v: state
            .v
            .iter()
            .zip(&profile.v)
            .map(|(a, &b)| a.iter().map(|x| x - b).collect())
            .collect(),
        psi: state.psi.iter().zip(&profile.psi).map(|(a, b)| diff(a, b)).collect(),
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sup(f: &[Vec<f64>]) -> f64 {
    f.iter().flatten().fold(0.0, |a, x| a.max(x.abs()))
}

/// Distance of `state` from `profile` (cell averages of `U` for `u`).
pub fn distance(state: &SimState, profile: &StationaryProfile, net: &Network) -> Distance {
    let d = deviation(state, profile);
    let mut out = Distance {
        u_sup: sup(&d.u),
        v_sup: sup(&d.v),
        psi_sup: sup(&d.psi),
        ..Default::default()
    };
    for (i, arc) in net.arcs().iter().enumerate() {
        let h = arc.params.h();
        out.u_h1 += h1_cells_sq(&d.u[i], h);
        out.v_h1 += h1_cells_sq(&d.v[i], h);
        out.psi_h1 += h1_vertices_sq(&d.psi[i], h);
    }
    out.u_h1 = out.u_h1.sqrt();
    out.v_h1 = out.v_h1.sqrt();
    out.psi_h1 = out.psi_h1.sqrt();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtValue {
    /// `F_T` over the whole history.
    pub value: f64,
    /// `F_{t_n}` for every sample `n` (zero-length prefix gives the sup terms only).
    pub prefix: Vec<f64>,
}

/// Discrete `F_T` of the deviation `(u - U, v - V, psi - Psi)` over
/// uniformly sampled states.
pub fn ft_functional(history: &[SimState], profile: &StationaryProfile, net: &Network) -> Result<FtValue> {
    if history.len() < 2 {
        return Err(Error::InvalidArgument("F_T needs at least two samples".into()));
    }
    let devs: Vec<Deviation> = history.iter().map(|s| deviation(s, profile)).collect();
    let hs: Vec<f64> = net.arcs().iter().map(|a| a.params.h()).collect();
    let terms: Vec<[f64; 3]> = devs
        .iter()
        .map(|d| {
            let mut t = [0.0; 3];
            for (i, &h) in hs.iter().enumerate() {
                t[0] += h1_cells_sq(&d.u[i], h);
                t[1] += h1_cells_sq(&d.v[i], h);
                t[2] += h2_vertices_sq(&d.psi[i], h);
            }
            t
        })
        .collect();
    let mut sups = [0.0f64; 3];
    let mut integral = 0.0;
    let mut prefix = Vec::with_capacity(history.len());
    for n in 0..history.len() {
        for c in 0..3 {
            sups[c] = sups[c].max(terms[n][c]);
        }
        if n > 0 {
            let dt = history[n].t - history[n - 1].t;
            if !(dt > 0.0) {
                return Err(Error::InvalidArgument("samples must be increasing in time".into()));
            }
            let state_terms = |k: usize| terms[k][0] + terms[k][1] + terms[k][2];
            integral += 0.5 * dt * (state_terms(n - 1) + state_terms(n));
            let (a, b) = (&history[n - 1], &history[n]);
            let mut rates = 0.0;
            for (i, &h) in hs.iter().enumerate() {
                rates += b.v[i].iter().zip(&a.v[i]).map(|(x, y)| h * ((x - y) / dt).powi(2)).sum::<f64>();
                let dpsi: Vec<f64> = b.psi[i].iter().zip(&a.psi[i]).map(|(x, y)| (x - y) / dt).collect();
                rates += h1_vertices_sq(&dpsi, h);
            }
            integral += dt * rates;
        }
        prefix.push((sups.iter().sum::<f64>() + integral).sqrt());
    }
    Ok(FtValue {
        value: *prefix.last().expect("nonempty history"),
        prefix,
    })
}
