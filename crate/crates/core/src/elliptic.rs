//! Reaction-diffusion problem `-D_i psi'' + c_i psi = g_i` on every arc,
//! coupled by Kedem-Katchalsky conditions at internal nodes and Robin
//! conditions at exits.
//!
//! Discretization: continuous P1 elements on each arc with a lumped mass
//! matrix. Endpoint values are owned by the arc (no continuity across a
//! node); nodes couple endpoints only through the `alpha` penalty terms.
//! The solver eliminates each arc's interior (tridiagonal) and factors the
//! dense SPD Schur complement on the `2m` endpoint unknowns.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::graph::{ArcEnd, Network};

/// Sparse matrix in coordinate form. Duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            m[(r, c)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            y[r] += v * x[c];
        }
        y
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (&r, &v) in self.rows.iter().zip(&self.vals) {
            sums[r] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// One `row col value` line per stored entry.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# n = {}", self.n)?;
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EllipticProblem<'a> {
    pub net: &'a Network,
    /// `c_i > 0` per arc.
    pub reaction: Vec<f64>,
    /// `g_i` at the vertices of each arc (`cells + 1` values).
    pub source: Vec<Vec<f64>>,
    /// `P_j` per exit.
    pub robin_rhs: Vec<f64>,
}

impl<'a> EllipticProblem<'a> {
    pub fn check(&self) -> Result<()> {
        let net = self.net;
        if self.reaction.len() != net.arcs().len() {
            return Err(Error::Dimension(format!(
                "{} reaction coefficients for {} arcs",
                self.reaction.len(),
                net.arcs().len()
            )));
        }
        if let Some(c) = self.reaction.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument(format!("reaction coefficient must be positive, got {c}")));
        }
        if self.source.len() != net.arcs().len()
            || self
                .source
                .iter()
                .zip(net.arcs())
                .any(|(g, a)| g.len() != a.params.cells + 1)
        {
            return Err(Error::Dimension("source grid does not match arc vertices".into()));
        }
        if self.robin_rhs.len() != net.external_nodes().len() {
            return Err(Error::Dimension(format!(
                "{} Robin values for {} exits",
                self.robin_rhs.len(),
                net.external_nodes().len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: Triplets,
    pub rhs: Vec<f64>,
    /// First global unknown of each arc.
    pub offsets: Vec<usize>,
}

pub(crate) fn offsets(net: &Network) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(net.arcs().len());
    let mut n = 0;
    for a in net.arcs() {
        offsets.push(n);
        n += a.params.cells + 1;
    }
    (offsets, n)
}

/// Local vertex index of an arc end.
pub(crate) fn end_index(cells: usize, end: ArcEnd) -> usize {
    match end {
        ArcEnd::Start => 0,
        ArcEnd::End => cells,
    }
}

/// Diagonal contribution of the coupling/Robin terms at each arc end.
fn end_penalties(net: &Network) -> Vec<[f64; 2]> {
    let mut pen = vec![[0.0; 2]; net.arcs().len()];
    for e in net.external_nodes() {
        pen[e.arc][end_slot(e.end())] += e.d;
    }
    for node in net.internal_nodes() {
        for (p, &arc) in node.members.iter().enumerate() {
            let sum: f64 = (0..node.degree())
                .filter(|&q| q != p)
                .map(|q| node.alpha[(p, q)])
                .sum();
            pen[arc][end_slot(node.end_of(p))] += sum;
        }
    }
    pen
}

fn end_slot(end: ArcEnd) -> usize {
    match end {
        ArcEnd::Start => 0,
        ArcEnd::End => 1,
    }
}

fn operator_matrix(net: &Network, reaction: &[f64]) -> (Triplets, Vec<usize>) {
    let (offsets, n) = offsets(net);
    let mut m = Triplets::new(n);
    let pen = end_penalties(net);
    for (i, arc) in net.arcs().iter().enumerate() {
        let p = &arc.params;
        let h = p.h();
        let k = p.diffusion / h;
        let c = reaction[i];
        let o = offsets[i];
        for v in 0..=p.cells {
            let w = if v == 0 || v == p.cells { 0.5 * h } else { h };
            let stiff = if v == 0 || v == p.cells { k } else { 2.0 * k };
            let mut diag = stiff + c * w;
            if v == 0 {
                diag += pen[i][0];
            }
            if v == p.cells {
                diag += pen[i][1];
            }
            m.push(o + v, o + v, diag);
            if v < p.cells {
                m.push(o + v, o + v + 1, -k);
                m.push(o + v + 1, o + v, -k);
            }
        }
    }
    for node in net.internal_nodes() {
        for (p, &ap) in node.members.iter().enumerate() {
            let rp = offsets[ap] + end_index(net.arcs()[ap].params.cells, node.end_of(p));
            for (q, &aq) in node.members.iter().enumerate() {
                if p == q {
                    continue;
                }
                let rq = offsets[aq] + end_index(net.arcs()[aq].params.cells, node.end_of(q));
                m.push(rp, rq, -node.alpha[(p, q)]);
            }
        }
    }
    (m, offsets)
}

fn load_vector(net: &Network, offsets: &[usize], n: usize, source: &[Vec<f64>], robin_rhs: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; n];
    for (i, arc) in net.arcs().iter().enumerate() {
        let h = arc.params.h();
        let cells = arc.params.cells;
        for (v, &g) in source[i].iter().enumerate() {
            let w = if v == 0 || v == cells { 0.5 * h } else { h };
            b[offsets[i] + v] = w * g;
        }
    }
    for (e, &p) in net.external_nodes().iter().zip(robin_rhs) {
        let cells = net.arcs()[e.arc].params.cells;
        b[offsets[e.arc] + end_index(cells, e.end())] += p;
    }
    b
}

/// Assembles the symmetric positive-definite system of the problem.
pub fn assemble(prob: &EllipticProblem<'_>) -> Result<AssembledSystem> {
    prob.check()?;
    let (matrix, offsets) = operator_matrix(prob.net, &prob.reaction);
    let rhs = load_vector(prob.net, &offsets, matrix.n, &prob.source, &prob.robin_rhs);
    Ok(AssembledSystem {
        matrix,
        rhs,
        offsets,
    })
}

/// Thomas factorization of a symmetric tridiagonal matrix with constant
/// off-diagonal.
#[derive(Debug, Clone)]
struct Tridiag {
    off: f64,
    denom: Vec<f64>,
    cprime: Vec<f64>,
}

impl Tridiag {
    fn new(diag: &[f64], off: f64) -> Self {
        let n = diag.len();
        let mut denom = Vec::with_capacity(n);
        let mut cprime = Vec::with_capacity(n);
        for i in 0..n {
            let d = if i == 0 {
                diag[0]
            } else {
                diag[i] - off * cprime[i - 1]
            };
            denom.push(d);
            cprime.push(off / d);
        }
        Self { off, denom, cprime }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { self.off * x[i - 1] };
            x[i] = (rhs[i] - prev) / self.denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.cprime[i] * x[i + 1];
        }
        x
    }
}

#[derive(Debug, Clone)]
struct ArcBlock {
    cells: usize,
    /// `D / h`
    k: f64,
    interior: Tridiag,
    z_first: Vec<f64>,
    z_last: Vec<f64>,
}

/// Factored operator for fixed reaction coefficients; reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    reaction: Vec<f64>,
    matrix: Triplets,
    norm: f64,
    offsets: Vec<usize>,
    blocks: Vec<ArcBlock>,
    schur: Cholesky<f64, Dyn>,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    /// Vertex values per arc.
    pub psi: Vec<Vec<f64>>,
    /// Cell-centred gradient per arc.
    pub psi_x: Vec<Vec<f64>>,
    /// Conservative flux `D psi'` at `[x = 0, x = L]`, recovered from the
    /// boundary rows of the discrete system.
    pub end_flux: Vec<[f64; 2]>,
    /// `psi_i(N_nu)` for each internal node, in member order.
    pub node_values: Vec<Vec<f64>>,
    /// `|A x - b|_inf / (|A|_inf |x|_inf + |b|_inf)`.
    pub algebraic_residual: f64,
}

impl EllipticOperator {
    pub fn new(net: &Network, reaction: &[f64]) -> Result<Self> {
        if reaction.len() != net.arcs().len() {
            return Err(Error::Dimension("one reaction coefficient per arc".into()));
        }
        if let Some(c) = reaction.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument(format!("reaction coefficient must be positive, got {c}")));
        }
        let (matrix, offsets) = operator_matrix(net, reaction);
        let pen = end_penalties(net);
        let m = net.arcs().len();
        let mut s = DMatrix::zeros(2 * m, 2 * m);
        let mut blocks = Vec::with_capacity(m);
        for (i, arc) in net.arcs().iter().enumerate() {
            let p = &arc.params;
            let h = p.h();
            let k = p.diffusion / h;
            let c = reaction[i];
            let n_int = p.cells - 1;
            let diag = vec![2.0 * k + c * h; n_int];
            let interior = Tridiag::new(&diag, -k);
            let mut e = vec![0.0; n_int];
            e[0] = 1.0;
            let z_first = interior.solve(&e);
            e[0] = 0.0;
            e[n_int - 1] = 1.0;
            let z_last = interior.solve(&e);
            let end_diag = k + 0.5 * c * h;
            s[(2 * i, 2 * i)] = end_diag + pen[i][0] - k * k * z_first[0];
            s[(2 * i + 1, 2 * i + 1)] = end_diag + pen[i][1] - k * k * z_last[n_int - 1];
            let cross = -k * k * z_last[0];
            s[(2 * i, 2 * i + 1)] = cross;
            s[(2 * i + 1, 2 * i)] = cross;
            blocks.push(ArcBlock {
                cells: p.cells,
                k,
                interior,
                z_first,
                z_last,
            });
        }
        for node in net.internal_nodes() {
            for (p, &ap) in node.members.iter().enumerate() {
                let rp = 2 * ap + end_slot(node.end_of(p));
                for (q, &aq) in node.members.iter().enumerate() {
                    if p != q {
                        let rq = 2 * aq + end_slot(node.end_of(q));
                        s[(rp, rq)] -= node.alpha[(p, q)];
                    }
                }
            }
        }
        let schur = Cholesky::new(s)
            .ok_or_else(|| Error::Solver("endpoint Schur complement is not positive definite".into()))?;
        let norm = matrix.norm_inf();
        Ok(Self {
            reaction: reaction.to_vec(),
            matrix,
            norm,
            offsets,
            blocks,
            schur,
        })
    }

    pub fn matrix(&self) -> &Triplets {
        &self.matrix
    }

    pub fn reaction(&self) -> &[f64] {
        &self.reaction
    }

    fn solve_raw(&self, b: &[f64]) -> Vec<f64> {
        let m = self.blocks.len();
        let mut ys = Vec::with_capacity(m);
        let mut re = DVector::zeros(2 * m);
        for (i, blk) in self.blocks.iter().enumerate() {
            let o = self.offsets[i];
            let y = blk.interior.solve(&b[o + 1..o + blk.cells]);
            re[2 * i] = b[o] + blk.k * y[0];
            re[2 * i + 1] = b[o + blk.cells] + blk.k * y[y.len() - 1];
            ys.push(y);
        }
        let xe = self.schur.solve(&re);
        let mut x = vec![0.0; self.matrix.n];
        for (i, (blk, y)) in self.blocks.iter().zip(ys).enumerate() {
            let o = self.offsets[i];
            let (x0, xn) = (xe[2 * i], xe[2 * i + 1]);
            x[o] = x0;
            x[o + blk.cells] = xn;
            for (j, yj) in y.iter().enumerate() {
                x[o + 1 + j] = yj + blk.k * (x0 * blk.z_first[j] + xn * blk.z_last[j]);
            }
        }
        x
    }

    fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r = ax.iter().zip(b).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let xn = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let denom = self.norm * xn + bn;
        if denom == 0.0 {
            0.0
        } else {
            r / denom
        }
    }

    /// Solves for the given vertex source and Robin data.
    pub fn solve(&self, net: &Network, source: &[Vec<f64>], robin_rhs: &[f64]) -> Result<EllipticSolution> {
        let b = load_vector(net, &self.offsets, self.matrix.n, source, robin_rhs);
        let mut x = self.solve_raw(&b);
        let mut res = self.backward_error(&x, &b);
        if res > 1e-15 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.solve_raw(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            res = self.backward_error(&x, &b);
        }
        if !res.is_finite() || res > 1e-10 {
            return Err(Error::Solver(format!("relative residual {res:.3e} after refinement")));
        }

        let mut psi = Vec::with_capacity(net.arcs().len());
        let mut psi_x = Vec::with_capacity(net.arcs().len());
        let mut end_flux = Vec::with_capacity(net.arcs().len());
        for (i, arc) in net.arcs().iter().enumerate() {
            let o = self.offsets[i];
            let cells = arc.params.cells;
            let v: Vec<f64> = x[o..=o + cells].to_vec();
            let h = arc.params.h();
            psi_x.push(v.windows(2).map(|w| (w[1] - w[0]) / h).collect());
            end_flux.push(variational_flux(
                arc.params.diffusion,
                h,
                self.reaction[i],
                &v,
                &source[i],
            ));
            psi.push(v);
        }
        let node_values = net
            .internal_nodes()
            .iter()
            .map(|node| {
                node.members
                    .iter()
                    .enumerate()
                    .map(|(p, &a)| psi[a][end_index(net.arcs()[a].params.cells, node.end_of(p))])
                    .collect()
            })
            .collect();
        Ok(EllipticSolution {
            psi,
            psi_x,
            end_flux,
            node_values,
            algebraic_residual: res,
        })
    }
}

/// `D psi'` at both ends recovered from the lumped boundary rows:
/// second-order accurate and exactly consistent with the discrete node
/// and Robin conditions.
pub fn variational_flux(diffusion: f64, h: f64, reaction: f64, psi: &[f64], source: &[f64]) -> [f64; 2] {
    let n = psi.len() - 1;
    let k = diffusion / h;
    let start = k * (psi[1] - psi[0]) - 0.5 * h * (reaction * psi[0] - source[0]);
    let end = k * (psi[n] - psi[n - 1]) + 0.5 * h * (reaction * psi[n] - source[n]);
    [start, end]
}

/// `D psi'` at both ends from one-sided second-order differences.
pub fn one_sided_flux(diffusion: f64, h: f64, psi: &[f64]) -> [f64; 2] {
    let n = psi.len() - 1;
    let start = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h);
    let end = (3.0 * psi[n] - 4.0 * psi[n - 1] + psi[n - 2]) / (2.0 * h);
    [diffusion * start, diffusion * end]
}

/// Solves the problem with a freshly factored operator.
pub fn solve(prob: &EllipticProblem<'_>) -> Result<EllipticSolution> {
    prob.check()?;
    EllipticOperator::new(prob.net, &prob.reaction)?.solve(prob.net, &prob.source, &prob.robin_rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientRecovery {
    OneSided,
    Variational,
}

#[derive(Debug, Clone)]
pub struct TransmissionResidual {
    /// `|delta_i D_i psi_i' - sum_j alpha_ij (psi_j - psi_i)|` per node and member.
    pub node: Vec<Vec<f64>>,
    /// `|sum_i delta_i D_i psi_i'|` per node.
    pub flux_sum: Vec<f64>,
    /// `|eta_j D psi' + d_j psi - P_j|` per exit.
    pub robin: Vec<f64>,
}

impl TransmissionResidual {
    pub fn max(&self) -> f64 {
        self.node
            .iter()
            .flatten()
            .chain(&self.flux_sum)
            .chain(&self.robin)
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_node(&self) -> f64 {
        self.node.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }
}

/// Node and Robin residuals with the one-sided gradient (a consistency
/// measure that shrinks with the grid).
pub fn transmission_residual(sol: &EllipticSolution, prob: &EllipticProblem<'_>) -> TransmissionResidual {
    transmission_residual_with(sol, prob, GradientRecovery::OneSided)
}

pub fn transmission_residual_with(
    sol: &EllipticSolution,
    prob: &EllipticProblem<'_>,
    recovery: GradientRecovery,
) -> TransmissionResidual {
    let net = prob.net;
    let fluxes: Vec<[f64; 2]> = match recovery {
        GradientRecovery::Variational => sol.end_flux.clone(),
        GradientRecovery::OneSided => net
            .arcs()
            .iter()
            .zip(&sol.psi)
            .map(|(a, psi)| one_sided_flux(a.params.diffusion, a.params.h(), psi))
            .collect(),
    };
    node_residuals(net, &sol.psi, &fluxes, &prob.robin_rhs)
}

pub(crate) fn node_residuals(
    net: &Network,
    psi: &[Vec<f64>],
    fluxes: &[[f64; 2]],
    robin_rhs: &[f64],
) -> TransmissionResidual {
    let value_at = |arc: usize, end: ArcEnd| psi[arc][end_index(net.arcs()[arc].params.cells, end)];
    let mut node = Vec::new();
    let mut flux_sum = Vec::new();
    for n in net.internal_nodes() {
        let vals: Vec<f64> = n
            .members
            .iter()
            .enumerate()
            .map(|(p, &a)| value_at(a, n.end_of(p)))
            .collect();
        let mut res = Vec::with_capacity(n.degree());
        let mut sum = 0.0;
        for (p, &a) in n.members.iter().enumerate() {
            let f = n.delta[p] * fluxes[a][end_slot(n.end_of(p))];
            sum += f;
            let coupling: f64 = (0..n.degree()).map(|q| n.alpha[(p, q)] * (vals[q] - vals[p])).sum();
            res.push((f - coupling).abs());
        }
        node.push(res);
        flux_sum.push(sum.abs());
    }
    let robin = net
        .external_nodes()
        .iter()
        .zip(robin_rhs)
        .map(|(e, &p)| {
            let f = fluxes[e.arc][end_slot(e.end())];
            (e.eta * f + e.d * value_at(e.arc, e.end()) - p).abs()
        })
        .collect();
    TransmissionResidual {
        node,
        flux_sum,
        robin,
    }
}
