//! Small reference networks used by tests, examples and the Python smoke test.
//! Every arc carries `L = 1` and unit coefficients unless stated otherwise.

use crate::config::{
    ArcConfig, BoundaryConfig, Config, DecaySpec, NodeConfig, NodeKind, TransmissionConfig,
};
use crate::graph::Network;

/// Builds a config with uniform unit arcs and all-pairs transmission
/// matrices (`alpha`, `sigma` off the diagonal, zero on it).
pub fn uniform_config(
    internal: &[u32],
    external: &[u32],
    arcs: &[(u32, u32, u32)],
    cells: usize,
    alpha: f64,
    sigma: f64,
) -> Config {
    let mut nodes: Vec<NodeConfig> = internal
        .iter()
        .map(|&id| NodeConfig {
            id,
            kind: NodeKind::Internal,
            position: None,
        })
        .collect();
    nodes.extend(external.iter().map(|&id| NodeConfig {
        id,
        kind: NodeKind::External,
        position: None,
    }));
    let arcs_cfg: Vec<ArcConfig> = arcs
        .iter()
        .map(|&(id, from, to)| ArcConfig {
            id,
            from,
            to,
            length: 1.0,
            lambda: 1.0,
            beta: 1.0,
            diffusion: 1.0,
            a: 1.0,
            b: 1.0,
            cells,
        })
        .collect();
    let transmission = internal
        .iter()
        .map(|&node| {
            let incident: Vec<u32> = arcs
                .iter()
                .filter(|&&(_, f, t)| f == node || t == node)
                .map(|&(id, _, _)| id)
                .collect();
            let n = incident.len();
            let fill = |v: f64| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|i| (0..n).map(|j| if i == j { 0.0 } else { v }).collect())
                    .collect()
            };
            TransmissionConfig {
                node,
                arcs: incident,
                alpha: fill(alpha),
                sigma: fill(sigma),
            }
        })
        .collect();
    let boundary = external
        .iter()
        .map(|&node| BoundaryConfig {
            node,
            d: 0.0,
            w: DecaySpec::default(),
            p: DecaySpec::default(),
        })
        .collect();
    Config {
        nodes,
        arcs: arcs_cfg,
        transmission,
        boundary,
        simulation: None,
        stationary: None,
        perturbation: None,
        initial: Vec::new(),
    }
}

/// `101 -(1)-> 102`
pub fn single_arc_config(length: f64, cells: usize) -> Config {
    let mut cfg = uniform_config(&[], &[101, 102], &[(1, 101, 102)], cells, 0.0, 0.0);
    cfg.arcs[0].length = length;
    cfg
}

/// `101 -(1)-> 10 -(2)-> 102`, `10 -(3)-> 103`.
pub fn star3_config(alpha: f64, sigma: f64, cells: usize) -> Config {
    uniform_config(
        &[10],
        &[101, 102, 103],
        &[(1, 101, 10), (2, 10, 102), (3, 10, 103)],
        cells,
        alpha,
        sigma,
    )
}

/// `101 -(1)-> 1 -(2)-> 102`
pub fn path2_config(cells: usize) -> Config {
    uniform_config(&[1], &[101, 102], &[(1, 101, 1), (2, 1, 102)], cells, 1.0, 1.0)
}

/// `101 -(1)-> 1 -(2)-> 2 -(3)-> 102`
pub fn path3_config(cells: usize) -> Config {
    uniform_config(
        &[1, 2],
        &[101, 102],
        &[(1, 101, 1), (2, 1, 2), (3, 2, 102)],
        cells,
        1.0,
        1.0,
    )
}

/// Spine `1 -(3)-> 2` with leaves 101, 102 on node 1 and 103, 104 on node 2.
pub fn caterpillar_config(cells: usize) -> Config {
    uniform_config(
        &[1, 2],
        &[101, 102, 103, 104],
        &[
            (1, 101, 1),
            (2, 102, 1),
            (3, 1, 2),
            (4, 2, 103),
            (5, 2, 104),
        ],
        cells,
        1.0,
        1.0,
    )
}

/// Binary-ish tree of five internal nodes with three exits.
pub fn tree5_config(cells: usize) -> Config {
    uniform_config(
        &[1, 2, 3, 4, 5],
        &[101, 102, 103],
        &[
            (1, 1, 2),
            (2, 1, 3),
            (3, 2, 4),
            (4, 3, 5),
            (5, 101, 1),
            (6, 4, 102),
            (7, 5, 103),
        ],
        cells,
        1.0,
        1.0,
    )
}

/// Triangle `1 -> 2 -> 3 -> 1` with one leg per corner.
pub fn triangle_with_legs_config(cells: usize) -> Config {
    uniform_config(
        &[1, 2, 3],
        &[101, 102, 103],
        &[
            (1, 1, 2),
            (2, 2, 3),
            (3, 3, 1),
            (4, 101, 1),
            (5, 2, 102),
            (6, 3, 103),
        ],
        cells,
        1.0,
        1.0,
    )
}

fn net(cfg: Config) -> Network {
    Network::from_config(&cfg).expect("fixture network is valid")
}

pub fn single_arc(length: f64, cells: usize) -> Network {
    net(single_arc_config(length, cells))
}

pub fn star3(alpha: f64, sigma: f64, cells: usize) -> Network {
    net(star3_config(alpha, sigma, cells))
}

pub fn path2(cells: usize) -> Network {
    net(path2_config(cells))
}

pub fn path3(cells: usize) -> Network {
    net(path3_config(cells))
}

pub fn caterpillar(cells: usize) -> Network {
    net(caterpillar_config(cells))
}

pub fn tree5(cells: usize) -> Network {
    net(tree5_config(cells))
}

pub fn triangle_with_legs(cells: usize) -> Network {
    net(triangle_with_legs_config(cells))
}
