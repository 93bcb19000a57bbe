//! Time integration of the hyperbolic-parabolic system on a network.
//!
//! `u`, `v` are cell averages (first-order upwind on the Riemann invariants
//! `u +- v`); `psi` lives on the P1 vertices of the elliptic module. A step
//! is a backward-Euler solve for `psi` followed by the hyperbolic update
//! that uses the fresh gradient.

pub mod diagnostics;
pub mod initial;
pub mod node;

use crate::boundary::BoundarySpec;
use crate::elliptic::{self, EllipticOperator};
use crate::error::{Error, Result};
use crate::graph::{ArcEnd, Network};

pub use diagnostics::{distance, ft_functional, gamma, sup_bound_check, Distance, FtValue, SupBound};
pub use initial::{initial_state, sample_expression};
pub use node::{node_solve_hyperbolic, NodeSolver, NodeTraces};

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Cell averages per arc.
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Vertex values per arc.
    pub psi: Vec<Vec<f64>>,
    /// Cell-centred gradient of `psi`.
    pub psi_x: Vec<Vec<f64>>,
    pub mass_0: f64,
    /// `int_{t_0}^t W_j` per exit.
    pub boundary_integrals: Vec<f64>,
}

impl SimState {
    pub fn zeros(net: &Network) -> Self {
        let cells: Vec<usize> = net.arcs().iter().map(|a| a.params.cells).collect();
        Self {
            t: 0.0,
            u: cells.iter().map(|&n| vec![0.0; n]).collect(),
            v: cells.iter().map(|&n| vec![0.0; n]).collect(),
            psi: cells.iter().map(|&n| vec![0.0; n + 1]).collect(),
            psi_x: cells.iter().map(|&n| vec![0.0; n]).collect(),
            mass_0: 0.0,
            boundary_integrals: vec![0.0; net.external_nodes().len()],
        }
    }

    /// Builds a state at time `t` from cell values of `u`, `v` and vertex
    /// values of `psi`.
    pub fn from_fields(
        net: &Network,
        t: f64,
        u: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        psi: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut s = Self {
            t,
            u,
            v,
            psi,
            psi_x: Vec::new(),
            mass_0: 0.0,
            boundary_integrals: vec![0.0; net.external_nodes().len()],
        };
        s.psi_x = vec![Vec::new(); net.arcs().len()];
        s.check(net)?;
        s.refresh_gradient(net);
        s.mass_0 = mass(&s, net);
        Ok(s)
    }

    pub fn check(&self, net: &Network) -> Result<()> {
        let m = net.arcs().len();
        if self.u.len() != m || self.v.len() != m || self.psi.len() != m || self.psi_x.len() != m {
            return Err(Error::Dimension(format!("state has fields for a different number of arcs than {m}")));
        }
        for (i, arc) in net.arcs().iter().enumerate() {
            let n = arc.params.cells;
            if self.u[i].len() != n || self.v[i].len() != n || self.psi[i].len() != n + 1 {
                return Err(Error::Dimension(format!("arc {}: grid sizes do not match {n} cells", arc.id)));
            }
        }
        Ok(())
    }

    fn refresh_gradient(&mut self, net: &Network) {
        for (i, arc) in net.arcs().iter().enumerate() {
            let h = arc.params.h();
            self.psi_x[i] = self.psi[i].windows(2).map(|w| (w[1] - w[0]) / h).collect();
        }
    }

    /// `psi` averaged onto cell centres.
    pub fn psi_cells(&self) -> Vec<Vec<f64>> {
        self.psi
            .iter()
            .map(|p| p.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            .collect()
    }

    pub fn mass_residual(&self, net: &Network) -> f64 {
        (mass(self, net) - self.mass_0 + self.boundary_integrals.iter().sum::<f64>()).abs()
    }
}

/// Total mass as the cell sum `sum_i h_i sum_k u_ik`.
pub fn mass(state: &SimState, net: &Network) -> f64 {
    net.arcs()
        .iter()
        .zip(&state.u)
        .map(|(a, u)| a.params.h() * u.iter().sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub cfl: f64,
    pub node_conditions: Vec<f64>,
    pub max_node_flux_residual: f64,
    pub max_dissipation_residual: f64,
    pub mass_residual: f64,
    /// Largest `|sum delta D psi'|` over internal nodes after the parabolic solve.
    pub psi_flux_residual: f64,
}

/// `[start, end]` values per arc.
pub type EndValues = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperbolicReport {
    pub max_node_flux_residual: f64,
    pub max_dissipation_residual: f64,
}

/// `max_i lambda_i dt / h_i`.
pub fn cfl_number(net: &Network, dt: f64) -> f64 {
    net.arcs()
        .iter()
        .map(|a| a.params.lambda * dt / a.params.h())
        .fold(0.0, f64::max)
}

/// `min(0.9 min_i h_i / lambda_i, min_i h_i)`.
pub fn default_dt(net: &Network) -> f64 {
    net.arcs()
        .iter()
        .map(|a| (0.9 * a.params.h() / a.params.lambda).min(a.params.h()))
        .fold(f64::INFINITY, f64::min)
}

/// Largest step not exceeding `dt_max` that divides `span` evenly.
pub fn uniform_steps(span: f64, dt_max: f64) -> (f64, usize) {
    let n = ((span / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (span / n as f64, n)
}

fn check_cfl(net: &Network, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let cfl = cfl_number(net, dt);
    if cfl > 1.0 + 1e-12 {
        return Err(Error::Cfl(cfl));
    }
    Ok(cfl)
}

/// Stepping context holding the factorizations that stay fixed between
/// steps.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    net: &'a Network,
    spec: BoundarySpec,
    nodes: Vec<NodeSolver>,
    elliptic: Option<(f64, EllipticOperator)>,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a Network, spec: BoundarySpec) -> Result<Self> {
        spec.check()?;
        if spec.exits.len() != net.external_nodes().len() {
            return Err(Error::Dimension(format!(
                "boundary data for {} exits, network has {}",
                spec.exits.len(),
                net.external_nodes().len()
            )));
        }
        let nodes = (0..net.internal_nodes().len())
            .map(|k| NodeSolver::new(net, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            spec,
            nodes,
            elliptic: None,
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }

    pub fn node_conditions(&self) -> Vec<f64> {
        self.nodes.iter().map(NodeSolver::condition).collect()
    }

    fn operator(&mut self, dt: f64) -> Result<&EllipticOperator> {
        let stale = !matches!(&self.elliptic, Some((d, _)) if *d == dt);
        if stale {
            let reaction: Vec<f64> = self
                .net
                .arcs()
                .iter()
                .map(|a| a.params.degradation + 1.0 / dt)
                .collect();
            self.elliptic = Some((dt, EllipticOperator::new(self.net, &reaction)?));
        }
        Ok(&self.elliptic.as_ref().expect("operator cached").1)
    }

    /// Backward-Euler update of `psi` to `t + dt`; returns the largest node
    /// flux sum of the new `psi`.
    pub fn parabolic_step(&mut self, state: &mut SimState, dt: f64) -> Result<f64> {
        let net = self.net;
        let p = self.spec.p_at(state.t + dt);
        let source: Vec<Vec<f64>> = net
            .arcs()
            .iter()
            .enumerate()
            .map(|(i, arc)| {
                let u = &state.u[i];
                let n = arc.params.cells;
                (0..=n)
                    .map(|k| {
                        let ubar = if k == 0 {
                            u[0]
                        } else if k == n {
                            u[n - 1]
                        } else {
                            0.5 * (u[k - 1] + u[k])
                        };
                        arc.params.production * ubar + state.psi[i][k] / dt
                    })
                    .collect()
            })
            .collect();
        let sol = self.operator(dt)?.solve(net, &source, &p)?;
        let res = elliptic::node_residuals(net, &sol.psi, &sol.end_flux, &p);
        state.psi = sol.psi;
        state.psi_x = sol.psi_x;
        Ok(res.flux_sum.iter().fold(0.0, |a, &b| a.max(b)))
    }

    /// Characteristic traces `(u, v)` at both ends of every arc, from node
    /// solves and exit closures with boundary flux `W(t_w)`.
    pub fn traces(&self, state: &SimState, t_w: f64) -> Result<(EndValues, EndValues, HyperbolicReport)> {
        let net = self.net;
        let m = net.arcs().len();
        let mut tu = vec![[0.0; 2]; m];
        let mut tv = vec![[0.0; 2]; m];
        let mut rep = HyperbolicReport::default();
        let arriving = |arc: usize, end: ArcEnd| -> f64 {
            let (u, v) = (&state.u[arc], &state.v[arc]);
            match end {
                ArcEnd::Start => u[0] - v[0],
                ArcEnd::End => u[u.len() - 1] + v[v.len() - 1],
            }
        };
        for (solver, node) in self.nodes.iter().zip(net.internal_nodes()) {
            let w: Vec<f64> = node
                .members
                .iter()
                .enumerate()
                .map(|(p, &a)| arriving(a, node.end_of(p)))
                .collect();
            let t = solver.solve(&w)?;
            rep.max_node_flux_residual = rep.max_node_flux_residual.max(t.flux_residual);
            rep.max_dissipation_residual = rep.max_dissipation_residual.max(t.dissipation_residual);
            for (p, &a) in node.members.iter().enumerate() {
                let s = slot(node.end_of(p));
                tu[a][s] = t.u[p];
                tv[a][s] = t.v[p];
            }
        }
        let w_now = self.spec.w_at(t_w);
        for (e, &wj) in net.external_nodes().iter().zip(&w_now) {
            let lambda = net.arcs()[e.arc].params.lambda;
            let v = e.eta * wj / lambda;
            let u = arriving(e.arc, e.end()) - e.eta * v;
            let s = slot(e.end());
            tu[e.arc][s] = u;
            tv[e.arc][s] = v;
        }
        Ok((tu, tv, rep))
    }

    /// Upwind update of `(u, v)` over `[t, t + dt]` using the cached
    /// gradient; the exit fluxes are taken at the midpoint of the step.
    pub fn hyperbolic_step(&self, state: &mut SimState, dt: f64) -> Result<HyperbolicReport> {
        check_cfl(self.net, dt)?;
        let (tu, tv, rep) = self.traces(state, state.t + 0.5 * dt)?;
        for (i, arc) in self.net.arcs().iter().enumerate() {
            let p = &arc.params;
            let n = p.cells;
            let h = p.h();
            let (u, v) = (&state.u[i], &state.v[i]);
            let mut fu = vec![0.0; n + 1];
            let mut fv = vec![0.0; n + 1];
            fu[0] = tu[i][0];
            fv[0] = tv[i][0];
            fu[n] = tu[i][1];
            fv[n] = tv[i][1];
            for f in 1..n {
                let right_moving = u[f - 1] + v[f - 1];
                let left_moving = u[f] - v[f];
                fu[f] = 0.5 * (right_moving + left_moving);
                fv[f] = 0.5 * (right_moving - left_moving);
            }
            let decay = (-p.beta * dt).exp();
            let phi = if p.beta == 0.0 {
                dt
            } else {
                -(-p.beta * dt).exp_m1() / p.beta
            };
            let r = p.lambda / h;
            let psi_x = &state.psi_x[i];
            let mut nu = Vec::with_capacity(n);
            let mut nv = Vec::with_capacity(n);
            for k in 0..n {
                nu.push(u[k] - dt * r * (fv[k + 1] - fv[k]));
                let force = u[k] * psi_x[k] - r * (fu[k + 1] - fu[k]);
                nv.push(decay * v[k] + phi * force);
            }
            state.u[i] = nu;
            state.v[i] = nv;
        }
        Ok(rep)
    }

    /// One Lie-split step: `psi` first, then `(u, v)`.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<StepReport> {
        let cfl = check_cfl(self.net, dt)?;
        let psi_flux_residual = self.parabolic_step(state, dt)?;
        let hyp = self.hyperbolic_step(state, dt)?;
        let (t0, t1) = (state.t, state.t + dt);
        for (bi, spec) in state.boundary_integrals.iter_mut().zip(&self.spec.exits) {
            *bi += spec.w.integral(t1) - spec.w.integral(t0);
        }
        state.t = t1;
        Ok(StepReport {
            dt,
            cfl,
            node_conditions: self.node_conditions(),
            max_node_flux_residual: hyp.max_node_flux_residual,
            max_dissipation_residual: hyp.max_dissipation_residual,
            mass_residual: state.mass_residual(self.net),
            psi_flux_residual,
        })
    }
}

fn slot(end: ArcEnd) -> usize {
    match end {
        ArcEnd::Start => 0,
        ArcEnd::End => 1,
    }
}

pub fn parabolic_step(state: &mut SimState, net: &Network, spec: &BoundarySpec, dt: f64) -> Result<f64> {
    Simulator::new(net, spec.clone())?.parabolic_step(state, dt)
}

pub fn hyperbolic_step(state: &mut SimState, net: &Network, spec: &BoundarySpec, dt: f64) -> Result<HyperbolicReport> {
    Simulator::new(net, spec.clone())?.hyperbolic_step(state, dt)
}

pub fn step(state: &mut SimState, net: &Network, spec: &BoundarySpec, dt: f64) -> Result<StepReport> {
    Simulator::new(net, spec.clone())?.step(state, dt)
}
