//! Mass thresholds separating small and large stationary solutions.
//!
//! The elliptic gradient constant `K2` is not computable from the data, so
//! it is an input and the resulting thresholds are advisory.

use serde::Serialize;

use super::compute_v;
use crate::boundary::BoundarySpec;
use crate::dynamics::gamma;
use crate::error::{Error, Result};
use crate::graph::Network;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub omega: f64,
    /// `1 - 4 |A| K2 sum |P_j| / lambda_min`
    pub kappa: f64,
    /// `kappa > 0`
    pub first_holds: bool,
    /// `Omega < lambda_min kappa^2 / (16 |A| K2 a_max)`
    pub second_holds: bool,
    pub mu_minus: Option<f64>,
    pub mu_plus: Option<f64>,
}

pub fn mu_thresholds(net: &Network, spec: &BoundarySpec, mu_s: f64, k2_bar: f64) -> Result<Thresholds> {
    if !(k2_bar > 0.0 && k2_bar.is_finite()) {
        return Err(Error::InvalidArgument(format!("K2 must be positive, got {k2_bar}")));
    }
    let v = compute_v(net, &spec.w_limits())?;
    let arcs = net.arcs();
    let len = net.total_length();
    let beta_max = arcs.iter().map(|a| a.params.beta).fold(0.0, f64::max);
    let lambda_min = arcs.iter().map(|a| a.params.lambda).fold(f64::INFINITY, f64::min);
    let a_max = arcs.iter().map(|a| a.params.production).fold(0.0, f64::max);
    let g = gamma(net)?;
    let sum_v: f64 = v.iter().map(|x| x.abs()).sum();
    let sum_p: f64 = spec.p_limits().iter().map(|x| x.abs()).sum();

    let omega = mu_s.abs() + 2.0 * len * (2.0 * beta_max / lambda_min * len + 3.0 * g) * sum_v;
    let kappa = 1.0 - 4.0 * len * k2_bar * sum_p / lambda_min;
    let first_holds = kappa > 0.0;
    let (second_holds, mu_minus, mu_plus) = if !first_holds {
        (false, None, None)
    } else if a_max == 0.0 {
        (true, Some(omega / kappa), Some(f64::INFINITY))
    } else {
        let q = 16.0 * len * k2_bar * a_max / lambda_min;
        let holds = omega < kappa * kappa / q;
        if holds {
            let root = (kappa * kappa - q * omega).sqrt();
            let scale = lambda_min / (8.0 * len * k2_bar * a_max);
            (true, Some(scale * (kappa - root)), Some(scale * (kappa + root)))
        } else {
            (false, None, None)
        }
    };
    Ok(Thresholds {
        omega,
        kappa,
        first_holds,
        second_holds,
        mu_minus,
        mu_plus,
    })
}
