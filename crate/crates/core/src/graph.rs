//! Metric-graph model: arcs carrying the 1D system, internal nodes with
//! Kedem-Katchalsky transmission matrices, external nodes with boundary data.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;

use crate::config::{Config, NodeKind};
use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check of transmission matrices.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcParams {
    pub length: f64,
    pub lambda: f64,
    pub beta: f64,
    pub diffusion: f64,
    /// Production rate `a`.
    pub production: f64,
    /// Degradation rate `b`.
    pub degradation: f64,
    pub cells: usize,
}

impl ArcParams {
    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    fn check(&self, id: u32) -> Result<()> {
        let positive = [
            ("L", self.length),
            ("lambda", self.lambda),
            ("D", self.diffusion),
            ("b", self.degradation),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Validation(format!(
                    "arc {id}: {name} must be positive, got {value}"
                )));
            }
        }
        for (name, value) in [("beta", self.beta), ("a", self.production)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Validation(format!(
                    "arc {id}: {name} must be nonnegative, got {value}"
                )));
            }
        }
        if self.cells < 4 {
            return Err(Error::Validation(format!(
                "arc {id}: cells must be at least 4, got {}",
                self.cells
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Internal(usize),
    External(usize),
}

/// Which end of an arc touches a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcEnd {
    /// `x = 0`
    Start,
    /// `x = L`
    End,
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub id: u32,
    pub from: Endpoint,
    pub to: Endpoint,
    pub params: ArcParams,
}

impl Arc {
    pub fn is_internal(&self) -> bool {
        matches!(
            (self.from, self.to),
            (Endpoint::Internal(_), Endpoint::Internal(_))
        )
    }

    /// Vertex coordinates `x_k = k h`, `k = 0..=cells`.
    pub fn vertices(&self) -> Vec<f64> {
        let h = self.params.h();
        (0..=self.params.cells).map(|k| k as f64 * h).collect()
    }

    /// Cell centres `(k + 1/2) h`, `k = 0..cells`.
    pub fn centres(&self) -> Vec<f64> {
        let h = self.params.h();
        (0..self.params.cells).map(|k| (k as f64 + 0.5) * h).collect()
    }
}

#[derive(Debug, Clone)]
pub struct InternalNode {
    pub id: u32,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
    /// Incident arcs in matrix order.
    pub members: Vec<usize>,
    /// `+1` for incoming members, `-1` for outgoing ones.
    pub delta: Vec<f64>,
    pub alpha: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    /// Member-local pivot index, when the nondegeneracy condition holds.
    pub pivot: Option<usize>,
    pub position: Option<[f64; 2]>,
}

impl InternalNode {
    pub fn degree(&self) -> usize {
        self.members.len()
    }

    pub fn end_of(&self, member: usize) -> ArcEnd {
        if self.delta[member] > 0.0 {
            ArcEnd::End
        } else {
            ArcEnd::Start
        }
    }

    pub fn member_of(&self, arc: usize) -> Option<usize> {
        self.members.iter().position(|&a| a == arc)
    }

    /// Smallest arc id `k` with `sigma[i][k] != 0` for every other member `i`.
    fn find_pivot(&self, arcs: &[Arc]) -> Option<usize> {
        let mut order: Vec<usize> = (0..self.degree()).collect();
        order.sort_by_key(|&m| arcs[self.members[m]].id);
        order.into_iter().find(|&k| self.is_pivot(k))
    }

    pub fn is_pivot(&self, k: usize) -> bool {
        (0..self.degree()).all(|i| i == k || self.sigma[(i, k)] != 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct ExternalNode {
    pub id: u32,
    pub arc: usize,
    /// `+1` if the arc ends at this node, `-1` if it starts here.
    pub eta: f64,
    /// Robin weight.
    pub d: f64,
    pub position: Option<[f64; 2]>,
}

impl ExternalNode {
    pub fn end(&self) -> ArcEnd {
        if self.eta > 0.0 {
            ArcEnd::End
        } else {
            ArcEnd::Start
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanEntry {
    pub node: usize,
    pub parent_arc: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    pub acyclic: bool,
    pub connected: bool,
    pub nd_satisfied: bool,
    /// `(node id, pivot arc id)` per internal node.
    pub pivots: Vec<(u32, Option<u32>)>,
}

impl ValidationReport {
    pub fn is_fatal(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Fatal)
    }

    fn fatal(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Fatal,
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            let tag = match issue.severity {
                Severity::Fatal => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "{tag}: {}", issue.message)?;
        }
        if !self.is_fatal() {
            let nd = if self.nd_satisfied {
                "nondegeneracy condition satisfied"
            } else {
                "nondegeneracy condition violated"
            };
            let cyc = if self.acyclic { "acyclic" } else { "cyclic" };
            writeln!(f, "{nd}, {cyc}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    arcs: Vec<Arc>,
    internal: Vec<InternalNode>,
    external: Vec<ExternalNode>,
    acyclic: bool,
    root: Option<usize>,
    spanning: Vec<SpanEntry>,
    report: ValidationReport,
}

/// Parses and validates a network from TOML text.
pub fn parse_network(config_text: &str) -> Result<Network> {
    let cfg = Config::from_toml(config_text)?;
    Network::from_config(&cfg)
}

impl Network {
    /// Builds the network and runs [`validate_network`]; fatal issues are
    /// returned as an error.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let mut net = Self::build(cfg)?;
        let report = validate_network(&net);
        if report.is_fatal() {
            let msgs: Vec<String> = report
                .issues
                .iter()
                .filter(|i| i.severity == Severity::Fatal)
                .map(|i| i.message.clone())
                .collect();
            return Err(Error::Validation(msgs.join("; ")));
        }
        net.apply_report(report);
        Ok(net)
    }

    /// Builds the network without rejecting on validation failures.
    pub fn build_unchecked(cfg: &Config) -> Result<(Self, ValidationReport)> {
        let mut net = Self::build(cfg)?;
        let report = validate_network(&net);
        if !report.is_fatal() {
            net.apply_report(report.clone());
        }
        Ok((net, report))
    }

    fn apply_report(&mut self, report: ValidationReport) {
        self.acyclic = report.acyclic;
        for (node, (_, pivot)) in self.internal.iter_mut().zip(&report.pivots) {
            node.pivot = pivot.and_then(|id| {
                node.members
                    .iter()
                    .position(|&a| self.arcs[a].id == id)
            });
        }
        self.root = if self.internal.is_empty() {
            None
        } else {
            (0..self.internal.len()).min_by_key(|&n| self.internal[n].id)
        };
        self.spanning = if self.acyclic {
            self.bfs_from_root()
        } else {
            Vec::new()
        };
        self.report = report;
    }

    fn build(cfg: &Config) -> Result<Self> {
        let mut endpoints = BTreeMap::new();
        let mut internal = Vec::new();
        let mut external = Vec::new();
        for node in &cfg.nodes {
            let slot = match node.kind {
                NodeKind::Internal => {
                    internal.push((node.id, node.position));
                    Endpoint::Internal(internal.len() - 1)
                }
                NodeKind::External => {
                    external.push((node.id, node.position));
                    Endpoint::External(external.len() - 1)
                }
            };
            if endpoints.insert(node.id, slot).is_some() {
                return Err(Error::Schema(format!("duplicate node id {}", node.id)));
            }
        }

        let mut arc_cfgs: Vec<_> = cfg.arcs.iter().collect();
        arc_cfgs.sort_by_key(|a| a.id);
        if arc_cfgs.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::Schema("duplicate arc id".into()));
        }
        let lookup = |id: u32, arc: u32, key: &str| {
            endpoints
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Schema(format!("arcs.{key}: arc {arc} refers to unknown node {id}")))
        };
        let mut arcs = Vec::with_capacity(arc_cfgs.len());
        for a in &arc_cfgs {
            let from = lookup(a.from, a.id, "from")?;
            let to = lookup(a.to, a.id, "to")?;
            if a.from == a.to {
                return Err(Error::Validation(format!("arc {} is a self-loop", a.id)));
            }
            let params = ArcParams {
                length: a.length,
                lambda: a.lambda,
                beta: a.beta,
                diffusion: a.diffusion,
                production: a.a,
                degradation: a.b,
                cells: a.cells,
            };
            params.check(a.id)?;
            arcs.push(Arc {
                id: a.id,
                from,
                to,
                params,
            });
        }
        let arc_index: BTreeMap<u32, usize> =
            arcs.iter().enumerate().map(|(i, a)| (a.id, i)).collect();

        let mut internal_nodes = Vec::with_capacity(internal.len());
        for (n, &(id, position)) in internal.iter().enumerate() {
            let incoming: Vec<usize> = (0..arcs.len())
                .filter(|&i| arcs[i].to == Endpoint::Internal(n))
                .collect();
            let outgoing: Vec<usize> = (0..arcs.len())
                .filter(|&i| arcs[i].from == Endpoint::Internal(n))
                .collect();
            let tc = cfg
                .transmission
                .iter()
                .find(|t| t.node == id)
                .ok_or_else(|| Error::Schema(format!("transmission: missing block for internal node {id}")))?;
            let mut members = Vec::with_capacity(tc.arcs.len());
            for aid in &tc.arcs {
                let idx = *arc_index.get(aid).ok_or_else(|| {
                    Error::Schema(format!("transmission.arcs: node {id} lists unknown arc {aid}"))
                })?;
                if members.contains(&idx) {
                    return Err(Error::Schema(format!(
                        "transmission.arcs: node {id} lists arc {aid} twice"
                    )));
                }
                members.push(idx);
            }
            let mut incident: Vec<usize> = incoming.iter().chain(&outgoing).copied().collect();
            incident.sort_unstable();
            let mut listed = members.clone();
            listed.sort_unstable();
            if incident != listed {
                return Err(Error::Schema(format!(
                    "transmission.arcs: node {id} must list exactly its incident arcs"
                )));
            }
            let dim = members.len();
            let alpha = dense(&tc.alpha, dim, "alpha", id)?;
            let sigma = dense(&tc.sigma, dim, "sigma", id)?;
            let delta = members
                .iter()
                .map(|&a| if incoming.contains(&a) { 1.0 } else { -1.0 })
                .collect();
            internal_nodes.push(InternalNode {
                id,
                incoming,
                outgoing,
                members,
                delta,
                alpha,
                sigma,
                pivot: None,
                position,
            });
        }

        for t in &cfg.transmission {
            if !matches!(endpoints.get(&t.node), Some(Endpoint::Internal(_))) {
                return Err(Error::Schema(format!(
                    "transmission.node: {} is not an internal node",
                    t.node
                )));
            }
        }
        for b in &cfg.boundary {
            if !matches!(endpoints.get(&b.node), Some(Endpoint::External(_))) {
                return Err(Error::Schema(format!(
                    "boundary.node: {} is not an external node",
                    b.node
                )));
            }
        }

        let mut external_nodes = Vec::with_capacity(external.len());
        for (j, &(id, position)) in external.iter().enumerate() {
            let touching: Vec<usize> = (0..arcs.len())
                .filter(|&i| {
                    arcs[i].from == Endpoint::External(j) || arcs[i].to == Endpoint::External(j)
                })
                .collect();
            if touching.len() != 1 {
                return Err(Error::Validation(format!(
                    "external node {id} touches {} arcs, expected exactly one",
                    touching.len()
                )));
            }
            let arc = touching[0];
            let eta = if arcs[arc].to == Endpoint::External(j) {
                1.0
            } else {
                -1.0
            };
            let d = cfg.boundary_for(id).map_or(0.0, |b| b.d);
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Validation(format!(
                    "external node {id}: Robin weight d must be nonnegative, got {d}"
                )));
            }
            external_nodes.push(ExternalNode {
                id,
                arc,
                eta,
                d,
                position,
            });
        }

        Ok(Network {
            arcs,
            internal: internal_nodes,
            external: external_nodes,
            acyclic: false,
            root: None,
            spanning: Vec::new(),
            report: ValidationReport::default(),
        })
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn internal_nodes(&self) -> &[InternalNode] {
        &self.internal
    }

    pub fn external_nodes(&self) -> &[ExternalNode] {
        &self.external
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn nd_satisfied(&self) -> bool {
        self.internal.iter().all(|n| n.pivot.is_some())
    }

    /// Fails with the first node lacking a pivot.
    pub fn require_nd(&self) -> Result<()> {
        match self.internal.iter().find(|n| n.pivot.is_none()) {
            Some(n) => Err(Error::Degenerate { node: n.id }),
            None => Ok(()),
        }
    }

    /// Total length `|A|`.
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.params.length).sum()
    }

    pub fn arc_index(&self, id: u32) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    pub fn internal_index(&self, id: u32) -> Option<usize> {
        self.internal.iter().position(|n| n.id == id)
    }

    pub fn external_index(&self, id: u32) -> Option<usize> {
        self.external.iter().position(|n| n.id == id)
    }

    /// `delta^nu_i`, or `None` if the arc is not incident with the node.
    pub fn delta(&self, node: usize, arc: usize) -> Option<f64> {
        let n = &self.internal[node];
        n.member_of(arc).map(|m| n.delta[m])
    }

    /// Copy of the network with a different (admissible) pivot at one node.
    pub fn with_pivot(&self, node: usize, pivot_arc: usize) -> Result<Network> {
        let mut net = self.clone();
        let n = &mut net.internal[node];
        let m = n
            .member_of(pivot_arc)
            .ok_or_else(|| Error::InvalidArgument(format!("arc is not incident with node {}", n.id)))?;
        if !n.is_pivot(m) {
            return Err(Error::InvalidArgument(format!(
                "arc {} is not an admissible pivot at node {}",
                net.arcs[pivot_arc].id, n.id
            )));
        }
        n.pivot = Some(m);
        Ok(net)
    }

    /// Copy of the network with a different root for the spanning order.
    pub fn with_root(&self, node: usize) -> Result<Network> {
        if node >= self.internal.len() {
            return Err(Error::InvalidArgument(format!("no internal node {node}")));
        }
        let mut net = self.clone();
        net.root = Some(node);
        if net.acyclic {
            net.spanning = net.bfs_from_root();
        }
        Ok(net)
    }

    fn vertex(&self, e: Endpoint) -> usize {
        match e {
            Endpoint::Internal(n) => n,
            Endpoint::External(j) => self.internal.len() + j,
        }
    }

    fn vertex_count(&self) -> usize {
        self.internal.len() + self.external.len()
    }

    /// `(neighbour vertex, arc)` pairs per vertex.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (i, arc) in self.arcs.iter().enumerate() {
            let (f, t) = (self.vertex(arc.from), self.vertex(arc.to));
            adj[f].push((t, i));
            adj[t].push((f, i));
        }
        adj
    }

    /// Vertices reachable from `start` without traversing `skip_arc`.
    fn reachable(&self, start: usize, skip_arc: Option<usize>) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, arc) in &adj[v] {
                if Some(arc) != skip_arc && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    fn bfs_from_root(&self) -> Vec<SpanEntry> {
        let Some(root) = self.root else {
            return Vec::new();
        };
        let adj = self.adjacency();
        let n_int = self.internal.len();
        let mut seen = vec![false; n_int];
        let mut order = vec![SpanEntry {
            node: root,
            parent_arc: None,
        }];
        seen[root] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head].node;
            head += 1;
            let mut next: Vec<(usize, usize)> = adj[v]
                .iter()
                .copied()
                .filter(|&(w, _)| w < n_int && !seen[w])
                .collect();
            next.sort_by_key(|&(_, arc)| self.arcs[arc].id);
            for (w, arc) in next {
                if !seen[w] {
                    seen[w] = true;
                    order.push(SpanEntry {
                        node: w,
                        parent_arc: Some(arc),
                    });
                }
            }
        }
        order
    }
}

fn dense(rows: &[Vec<f64>], dim: usize, name: &str, node: u32) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Schema(format!(
            "transmission.{name}: node {node} needs a {dim}x{dim} matrix"
        )));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn check_matrix(m: &DMatrix<f64>, name: &str, node: u32, report: &mut ValidationReport) {
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    let n = m.nrows();
    if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
        report.fatal(format!("{name} has negative or non-finite entries at node {node}"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                report.fatal(format!("{name} not symmetric at node {node}"));
                return;
            }
        }
    }
}

/// Checks coefficient admissibility, connectivity and boundary presence;
/// records the pivot of each node and the acyclic flag.
///
/// A missing pivot is a warning here: the dynamics do not need it, the
/// stationary solver refuses to run without it.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::default();
    for node in &net.internal {
        if node.degree() < 2 {
            report.fatal(format!(
                "internal node {} has {} incident arcs, expected at least 2",
                node.id,
                node.degree()
            ));
        }
        check_matrix(&node.alpha, "alpha", node.id, &mut report);
        check_matrix(&node.sigma, "sigma", node.id, &mut report);
    }

    if net.external.is_empty() {
        report.fatal("no external nodes".into());
    }
    report.connected = net.vertex_count() > 0 && net.reachable(0, None).iter().all(|&s| s);
    if !report.connected {
        report.fatal("graph is not connected".into());
    }
    report.acyclic = report.connected && net.arcs.len() + 1 == net.vertex_count();
    if report.connected && !report.acyclic {
        report.warn("graph has cycles: stationary solver unavailable".into());
    }

    report.nd_satisfied = true;
    for node in &net.internal {
        let pivot = node.find_pivot(&net.arcs);
        if pivot.is_none() {
            report.nd_satisfied = false;
            report.warn(format!(
                "nondegeneracy condition violated at node {}: no pivot arc",
                node.id
            ));
        }
        report
            .pivots
            .push((node.id, pivot.map(|m| net.arcs[node.members[m]].id)));
    }
    report
}

/// External nodes linked to the start node of internal arc `arc` by a path
/// that does not cover `arc` (indices into [`Network::external_nodes`]).
pub fn exit_side_set(net: &Network, arc: usize) -> Result<Vec<usize>> {
    side_set(net, arc, ArcEnd::Start)
}

/// Same as [`exit_side_set`] for either end of the arc.
pub fn side_set(net: &Network, arc: usize, end: ArcEnd) -> Result<Vec<usize>> {
    if !net.acyclic {
        return Err(Error::Cyclic("exit side set"));
    }
    let a = &net.arcs[arc];
    if !a.is_internal() {
        return Err(Error::NotInternalArc(a.id));
    }
    let start = match end {
        ArcEnd::Start => net.vertex(a.from),
        ArcEnd::End => net.vertex(a.to),
    };
    let seen = net.reachable(start, Some(arc));
    let n_int = net.internal.len();
    Ok((0..net.external.len()).filter(|&j| seen[n_int + j]).collect())
}

/// Breadth-first order of internal nodes from the root, each with the arc
/// linking it to its parent.
pub fn spanning_order(net: &Network) -> Result<Vec<SpanEntry>> {
    if !net.acyclic {
        return Err(Error::Cyclic("spanning order"));
    }
    if net.internal.is_empty() {
        return Err(Error::InvalidArgument("network has no internal nodes".into()));
    }
    Ok(net.spanning.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    #[test]
    fn single_arc_is_acyclic() {
        let net = single_arc(1.0, 16);
        assert!(net.is_acyclic());
        assert!(net.internal_nodes().is_empty());
        assert_eq!(net.external_nodes().len(), 2);
        assert_eq!(net.external_nodes()[0].eta, -1.0);
        assert_eq!(net.external_nodes()[1].eta, 1.0);
    }

    #[test]
    fn star_has_one_node_of_degree_three() {
        let net = star3(1.0, 1.0, 16);
        assert_eq!(net.internal_nodes().len(), 1);
        assert_eq!(net.internal_nodes()[0].degree(), 3);
        assert!(net.report().nd_satisfied);
        // pivot is the lowest arc id
        assert_eq!(net.report().pivots, vec![(10, Some(1))]);
    }

    #[test]
    fn asymmetric_sigma_is_rejected() {
        let mut cfg = star3_config(1.0, 1.0, 16);
        cfg.transmission[0].sigma[0][1] = 2.0;
        let err = Network::from_config(&cfg).unwrap_err().to_string();
        assert!(err.contains("sigma not symmetric at node 10"), "{err}");
    }

    #[test]
    fn zero_sigma_violates_nd_as_warning() {
        let net = star3(1.0, 0.0, 16);
        assert!(!net.report().nd_satisfied);
        assert!(net.require_nd().is_err());
        assert!(!net.report().is_fatal());
    }

    #[test]
    fn pivot_skips_arcs_without_full_coupling() {
        // arcs 1,2,3: sigma_12 = 0, so only arc 3 couples to both others
        let mut cfg = star3_config(1.0, 1.0, 16);
        cfg.transmission[0].sigma = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let net = Network::from_config(&cfg).unwrap();
        assert_eq!(net.report().pivots, vec![(10, Some(3))]);
    }

    #[test]
    fn triangle_without_exits_is_rejected() {
        let text = r#"
            nodes = [{ id = 1, kind = "internal" }, { id = 2, kind = "internal" }, { id = 3, kind = "internal" }]
            arcs = [
              { id = 1, from = 1, to = 2, L = 1.0, lambda = 1.0, beta = 1.0, D = 1.0, a = 1.0, b = 1.0, cells = 8 },
              { id = 2, from = 2, to = 3, L = 1.0, lambda = 1.0, beta = 1.0, D = 1.0, a = 1.0, b = 1.0, cells = 8 },
              { id = 3, from = 3, to = 1, L = 1.0, lambda = 1.0, beta = 1.0, D = 1.0, a = 1.0, b = 1.0, cells = 8 },
            ]
            [[transmission]]
            node = 1
            arcs = [1, 3]
            alpha = [[0.0, 1.0], [1.0, 0.0]]
            sigma = [[0.0, 1.0], [1.0, 0.0]]
            [[transmission]]
            node = 2
            arcs = [1, 2]
            alpha = [[0.0, 1.0], [1.0, 0.0]]
            sigma = [[0.0, 1.0], [1.0, 0.0]]
            [[transmission]]
            node = 3
            arcs = [2, 3]
            alpha = [[0.0, 1.0], [1.0, 0.0]]
            sigma = [[0.0, 1.0], [1.0, 0.0]]
        "#;
        let err = parse_network(text).unwrap_err().to_string();
        assert!(err.contains("no external nodes"), "{err}");
    }

    #[test]
    fn cyclic_graph_warns() {
        let net = triangle_with_legs(8);
        assert!(!net.is_acyclic());
        assert!(net
            .report()
            .issues
            .iter()
            .any(|i| i.message.contains("stationary solver unavailable")));
        assert!(spanning_order(&net).is_err());
        assert!(exit_side_set(&net, 0).is_err());
    }

    #[test]
    fn exit_side_set_on_path() {
        // e1 -I1- N1 -I2- N2 -I3- e2
        let net = path3(8);
        let i2 = net.arc_index(2).unwrap();
        let set = exit_side_set(&net, i2).unwrap();
        let ids: Vec<u32> = set.iter().map(|&j| net.external_nodes()[j].id).collect();
        assert_eq!(ids, vec![101]);
        assert!(exit_side_set(&net, net.arc_index(1).unwrap()).is_err());
    }

    #[test]
    fn exit_side_set_on_caterpillar() {
        // two leaves hang off the start node of the spine arc
        let net = caterpillar(8);
        let spine = net.arc_index(3).unwrap();
        let ids: Vec<u32> = exit_side_set(&net, spine)
            .unwrap()
            .iter()
            .map(|&j| net.external_nodes()[j].id)
            .collect();
        assert_eq!(ids, vec![101, 102]);
        let far: Vec<u32> = side_set(&net, spine, ArcEnd::End)
            .unwrap()
            .iter()
            .map(|&j| net.external_nodes()[j].id)
            .collect();
        assert_eq!(far, vec![103, 104]);
    }

    #[test]
    fn spanning_order_single_and_path() {
        let net = star3(1.0, 1.0, 8);
        let order = spanning_order(&net).unwrap();
        assert_eq!(order, vec![SpanEntry { node: 0, parent_arc: None }]);

        let net = path3(8);
        let order = spanning_order(&net).unwrap();
        assert_eq!(order.len(), 2);
        assert_eq!(net.internal_nodes()[order[0].node].id, 1);
        assert_eq!(net.internal_nodes()[order[1].node].id, 2);
        assert_eq!(order[1].parent_arc, net.arc_index(2));
    }

    #[test]
    fn spanning_order_five_node_tree() {
        // N1 - N2, N1 - N3, N2 - N4, N3 - N5 (hand BFS: 1, 2, 3, 4, 5)
        let net = tree5(8);
        let ids: Vec<u32> = spanning_order(&net)
            .unwrap()
            .iter()
            .map(|e| net.internal_nodes()[e.node].id)
            .collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn flux_sum_cancels_for_symmetric_sigma() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..7);
            let mut s = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let x: f64 = rng.random_range(0.0..3.0);
                    s[(i, j)] = x;
                    s[(j, i)] = x;
                }
            }
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            // -delta_i lambda_i v_i = sum_j s_ij (u_j - u_i)
            let total: f64 = (0..n)
                .map(|i| -(0..n).map(|j| s[(i, j)] * (u[j] - u[i])).sum::<f64>())
                .sum();
            let scale: f64 = s.iter().sum::<f64>() * 10.0;
            assert!(total.abs() <= 1e-14 * scale.max(1.0));
        }
    }

    #[test]
    fn exit_sets_partition() {
        for net in [path3(8), caterpillar(8), tree5(8)] {
            for (i, arc) in net.arcs().iter().enumerate() {
                if !arc.is_internal() {
                    continue;
                }
                let a = side_set(&net, i, ArcEnd::Start).unwrap();
                let b = side_set(&net, i, ArcEnd::End).unwrap();
                assert!(a.iter().all(|j| !b.contains(j)));
                let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..net.external_nodes().len()).collect::<Vec<_>>());
            }
            let order = spanning_order(&net).unwrap();
            let mut nodes: Vec<usize> = order.iter().map(|e| e.node).collect();
            nodes.sort_unstable();
            assert_eq!(nodes, (0..net.internal_nodes().len()).collect::<Vec<_>>());
        }
    }
}
