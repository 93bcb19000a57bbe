//! Integration constants `C_i` expressed through the root pivot constant
//! and closed by the mass constraint.

use crate::dynamics::diagnostics::node_gamma;
use crate::error::{Error, Result};
use crate::graph::{spanning_order, ArcEnd, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientChain {
    /// `ln E_i = Psi_i / lambda_i` at the vertices.
    pub log_e: Vec<Vec<f64>>,
    /// `J_i(x) = (beta_i / lambda_i) int_0^x exp(-Psi_i / lambda_i)` (trapezoid).
    pub j: Vec<Vec<f64>>,
    /// Per internal node, per member: `(Q_{i nu}, O_{i nu})`.
    pub node_coeffs: Vec<Vec<(f64, f64)>>,
    pub q_tilde: Vec<f64>,
    pub o_tilde: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c_root: f64,
    pub c: Vec<f64>,
}

const LOG_LIMIT: f64 = 700.0;

fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    h * (f[1..n].iter().sum::<f64>() + 0.5 * (f[0] + f[n]))
}

/// Builds the chain for `Psi` and returns it with `U` at the vertices.
pub fn coefficient_chain(
    net: &Network,
    psi: &[Vec<f64>],
    v: &[f64],
    mu_s: f64,
) -> Result<(CoefficientChain, Vec<Vec<f64>>)> {
    if !net.is_acyclic() {
        return Err(Error::Cyclic("coefficient chain"));
    }
    net.require_nd()?;
    let m = net.arcs().len();
    let mut log_e = Vec::with_capacity(m);
    let mut j = Vec::with_capacity(m);
    for (i, arc) in net.arcs().iter().enumerate() {
        let p = &arc.params;
        if psi[i].len() != p.cells + 1 {
            return Err(Error::Dimension(format!("arc {}: Psi grid size", arc.id)));
        }
        let le: Vec<f64> = psi[i].iter().map(|x| x / p.lambda).collect();
        if le.iter().any(|x| !x.is_finite() || x.abs() > LOG_LIMIT) {
            return Err(Error::ChainDegenerate(format!(
                "exp(Psi/lambda) overflows on arc {}",
                arc.id
            )));
        }
        let h = p.h();
        let mut ji = Vec::with_capacity(p.cells + 1);
        let mut acc = 0.0;
        ji.push(0.0);
        for w in le.windows(2) {
            acc += 0.5 * h * ((-w[0]).exp() + (-w[1]).exp());
            ji.push(p.beta / p.lambda * acc);
        }
        log_e.push(le);
        j.push(ji);
    }
    let end_vals = |i: usize, end: ArcEnd| -> (f64, f64) {
        let k = match end {
            ArcEnd::Start => 0,
            ArcEnd::End => log_e[i].len() - 1,
        };
        (log_e[i][k], j[i][k])
    };

    let mut node_coeffs = Vec::with_capacity(net.internal_nodes().len());
    for (nu, node) in net.internal_nodes().iter().enumerate() {
        let g = node_gamma(net, nu)?;
        let k = node.pivot.ok_or(Error::Degenerate { node: node.id })?;
        let (le_k, j_k) = end_vals(node.members[k], node.end_of(k));
        let v_k = v[node.members[k]];
        let coeffs = (0..node.degree())
            .map(|q| {
                let arc = node.members[q];
                let (le_q, j_q) = end_vals(arc, node.end_of(q));
                let jump: f64 = (0..node.degree()).map(|r| g[(q, r)] * v[node.members[r]]).sum();
                let ratio = (le_k - le_q).exp();
                let o = -v_k * ratio * j_k + (-le_q).exp() * jump + v[arc] * j_q;
                (ratio, o)
            })
            .collect::<Vec<_>>();
        node_coeffs.push(coeffs);
    }

    let mut q_tilde = vec![f64::NAN; m];
    let mut o_tilde = vec![f64::NAN; m];
    if net.internal_nodes().is_empty() {
        q_tilde[0] = 1.0;
        o_tilde[0] = 0.0;
    } else {
        for entry in spanning_order(net)? {
            let node = &net.internal_nodes()[entry.node];
            let coeffs = &node_coeffs[entry.node];
            let (qk, ok) = match entry.parent_arc {
                None => (1.0, 0.0),
                Some(l) => {
                    let p = node.member_of(l).expect("parent arc is incident");
                    let (q_l, o_l) = coeffs[p];
                    (q_tilde[l] / q_l, (o_tilde[l] - o_l) / q_l)
                }
            };
            for (q, &arc) in node.members.iter().enumerate() {
                if Some(arc) == entry.parent_arc {
                    continue;
                }
                let (q_i, o_i) = coeffs[q];
                q_tilde[arc] = q_i * qk;
                o_tilde[arc] = q_i * ok + o_i;
            }
        }
    }

    let mut lambda2 = 0.0;
    let mut offset = 0.0;
    for (i, arc) in net.arcs().iter().enumerate() {
        let h = arc.params.h();
        let e: Vec<f64> = log_e[i].iter().map(|x| x.exp()).collect();
        lambda2 += q_tilde[i] * trapezoid(&e, h);
        let f: Vec<f64> = e.iter().zip(&j[i]).map(|(e, j)| (o_tilde[i] - v[i] * j) * e).collect();
        offset += trapezoid(&f, h);
    }
    let lambda1 = mu_s - offset;
    if !(lambda2 > 0.0 && lambda2.is_finite() && lambda1.is_finite()) {
        return Err(Error::ChainDegenerate(format!(
            "mass closure denominator {lambda2:e}, numerator {lambda1:e}"
        )));
    }
    let c_root = lambda1 / lambda2;
    let c: Vec<f64> = q_tilde.iter().zip(&o_tilde).map(|(q, o)| q * c_root + o).collect();
    let u: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            log_e[i]
                .iter()
                .zip(&j[i])
                .map(|(le, j)| le.exp() * (c[i] - v[i] * j))
                .collect()
        })
        .collect();
    Ok((
        CoefficientChain {
            log_e,
            j,
            node_coeffs,
            q_tilde,
            o_tilde,
            lambda1,
            lambda2,
            c_root,
            c,
        },
        u,
    ))
}
