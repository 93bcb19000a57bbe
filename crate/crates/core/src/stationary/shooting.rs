//! Shooting solver for the stationary boundary-value problem on tiny
//! networks. It integrates the ODEs
//! `D Psi'' = b Psi - a U`, `lambda U' = U Psi' - beta V` directly with RK4
//! from each arc's start and matches all node, exit and mass conditions by
//! Gauss-Newton. It shares no code with the fixed-point path and serves as
//! a test oracle.

use nalgebra::{DMatrix, DVector};

use super::{residual_report, ResidualReport, StationaryProfile};
use crate::boundary::BoundarySpec;
use crate::error::{Error, Result};
use crate::graph::{ArcEnd, ArcParams, Network};

const SUBSTEPS: usize = 4;

/// `(Psi, Psi', U, int U)` sampled at every vertex of the arc grid.
fn integrate(p: &ArcParams, psi0: f64, dpsi0: f64, u0: f64, v: f64) -> Vec<[f64; 4]> {
    let rhs = |y: [f64; 4]| -> [f64; 4] {
        [
            y[1],
            (p.degradation * y[0] - p.production * y[2]) / p.diffusion,
            (y[2] * y[1] - p.beta * v) / p.lambda,
            y[2],
        ]
    };
    let add = |y: [f64; 4], k: [f64; 4], s: f64| -> [f64; 4] {
        [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]]
    };
    let dt = p.h() / SUBSTEPS as f64;
    let mut y = [psi0, dpsi0, u0, 0.0];
    let mut out = Vec::with_capacity(p.cells + 1);
    out.push(y);
    for _ in 0..p.cells {
        for _ in 0..SUBSTEPS {
            let k1 = rhs(y);
            let k2 = rhs(add(y, k1, 0.5 * dt));
            let k3 = rhs(add(y, k2, 0.5 * dt));
            let k4 = rhs(add(y, k3, dt));
            for c in 0..4 {
                y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        out.push(y);
    }
    out
}

struct Problem<'a> {
    net: &'a Network,
    w: Vec<f64>,
    p: Vec<f64>,
    mu_s: f64,
}

impl Problem<'_> {
    fn trajectories(&self, x: &[f64]) -> Vec<Vec<[f64; 4]>> {
        self.net
            .arcs()
            .iter()
            .enumerate()
            .map(|(i, a)| integrate(&a.params, x[4 * i], x[4 * i + 1], x[4 * i + 2], x[4 * i + 3]))
            .collect()
    }

    fn equations(&self, x: &[f64]) -> Vec<f64> {
        let net = self.net;
        let traj = self.trajectories(x);
        let at = |i: usize, end: ArcEnd| -> [f64; 4] {
            match end {
                ArcEnd::Start => traj[i][0],
                ArcEnd::End => traj[i][traj[i].len() - 1],
            }
        };
        let v = |i: usize| x[4 * i + 3];
        let mut f = Vec::new();
        for (e, (&wj, &pj)) in net.external_nodes().iter().zip(self.w.iter().zip(&self.p)) {
            let a = &net.arcs()[e.arc].params;
            let y = at(e.arc, e.end());
            f.push(e.eta * a.diffusion * y[1] + e.d * y[0] - pj);
            f.push(e.eta * a.lambda * v(e.arc) - wj);
        }
        for node in net.internal_nodes() {
            let ys: Vec<[f64; 4]> = node
                .members
                .iter()
                .enumerate()
                .map(|(q, &arc)| at(arc, node.end_of(q)))
                .collect();
            for (q, &arc) in node.members.iter().enumerate() {
                let a = &net.arcs()[arc].params;
                let kc: f64 = (0..node.degree()).map(|s| node.alpha[(q, s)] * (ys[s][0] - ys[q][0])).sum();
                f.push(node.delta[q] * a.diffusion * ys[q][1] - kc);
                let tc: f64 = (0..node.degree()).map(|s| node.sigma[(q, s)] * (ys[s][2] - ys[q][2])).sum();
                f.push(-node.delta[q] * a.lambda * v(arc) - tc);
            }
        }
        let mass: f64 = (0..net.arcs().len()).map(|i| at(i, ArcEnd::End)[3]).sum();
        f.push(mass - self.mu_s);
        f
    }
}

fn norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves the stationary problem on a network of at most three arcs.
/// `U` and `Psi` are reported on the same vertices as the fixed-point grid.
pub fn shooting_oracle(net: &Network, spec: &BoundarySpec, mu_s: f64) -> Result<StationaryProfile> {
    if net.arcs().len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "shooting oracle supports at most 3 arcs, got {}",
            net.arcs().len()
        )));
    }
    if !net.is_acyclic() {
        return Err(Error::Cyclic("shooting oracle"));
    }
    net.require_nd()?;
    let prob = Problem {
        net,
        w: spec.w_limits(),
        p: spec.p_limits(),
        mu_s,
    };
    let m = net.arcs().len();
    let mut x = vec![0.0; 4 * m];
    let level = mu_s / net.total_length();
    for i in 0..m {
        x[4 * i + 2] = level;
    }
    let scale = 1.0 + mu_s.abs() + norm(&prob.w) + norm(&prob.p);
    let mut f = prob.equations(&x);
    let mut iterations = 0;
    while norm(&f) > 1e-13 * scale {
        iterations += 1;
        if iterations > 60 {
            return Err(Error::RootFinder(format!(
                "no convergence after 60 iterations, residual {:e}",
                norm(&f)
            )));
        }
        let mut jac = DMatrix::zeros(f.len(), x.len());
        for c in 0..x.len() {
            let eps = 1e-7 * x[c].abs().max(1.0);
            let mut xp = x.clone();
            xp[c] += eps;
            let mut xm = x.clone();
            xm[c] -= eps;
            let (fp, fm) = (prob.equations(&xp), prob.equations(&xm));
            for r in 0..f.len() {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * eps);
            }
        }
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let dx = jac
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::RootFinder(e.to_string()))?;
        // backtracking keeps the iteration monotone in the residual
        let current = norm(&f);
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
            let ft = prob.equations(&trial);
            if norm(&ft) < current || step < 1e-4 {
                x = trial;
                f = ft;
                break;
            }
            step *= 0.5;
        }
        if !norm(&f).is_finite() {
            return Err(Error::RootFinder("residual is not finite".into()));
        }
    }
    let traj = prob.trajectories(&x);
    let mut profile = StationaryProfile {
        v: (0..m).map(|i| x[4 * i + 3]).collect(),
        u: traj.iter().map(|t| t.iter().map(|y| y[2]).collect()).collect(),
        psi: traj.iter().map(|t| t.iter().map(|y| y[0]).collect()).collect(),
        c: (0..m).map(|i| x[4 * i + 2] * (-x[4 * i] / net.arcs()[i].params.lambda).exp()).collect(),
        mu_s,
        converged: true,
        iterations,
        contraction: Vec::new(),
        nonnegative: true,
        residuals: ResidualReport::default(),
    };
    profile.nonnegative = profile.min_u() >= -1e-10;
    profile.residuals = residual_report(&profile, net, spec);
    Ok(profile)
}
