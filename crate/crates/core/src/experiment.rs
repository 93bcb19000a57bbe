//! Experiment drivers shared by the CLI and the Python bindings: sampled
//! simulation runs, the perturbation-decay experiment and the oracle
//! cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundarySpec;
use crate::config::{Config, StationaryMode};
use crate::dynamics::{default_dt, distance, ft_functional, gamma, mass, uniform_steps, Distance, FtValue, SimState, Simulator};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::stationary::{fixed_point, shooting_oracle, special_constant, special_zero, FixedPointOptions, StationaryProfile};

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub mass: f64,
    pub mass_residual: f64,
    /// Largest node flux residual over the steps since the previous sample.
    pub max_node_flux_residual: f64,
    pub sup_u: f64,
    pub bound_lhs: f64,
    /// Right side of the a priori sup bound; NaN without the nondegeneracy condition.
    pub bound_rhs: f64,
    pub distance: Option<Distance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_final: f64,
    pub cadence: f64,
    /// Upper bound on the step; the default is [`default_dt`].
    pub dt: Option<f64>,
    /// Times at which full states are kept (rounded up to the sample grid).
    pub snapshots: Vec<f64>,
    /// Keep every sampled state (needed for `F_T`).
    pub keep_history: bool,
}

impl RunOptions {
    pub fn new(t_final: f64, cadence: f64) -> Self {
        Self {
            t_final,
            cadence,
            dt: None,
            snapshots: Vec::new(),
            keep_history: false,
        }
    }

    fn check(&self) -> Result<usize> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !(self.cadence > 0.0 && self.cadence <= self.t_final) {
            return Err(Error::InvalidArgument(format!(
                "cadence must lie in (0, t_final], got {}",
                self.cadence
            )));
        }
        let n = self.t_final / self.cadence;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(Error::InvalidArgument(format!(
                "cadence {} does not divide t_final {}",
                self.cadence, self.t_final
            )));
        }
        Ok(n.round() as usize)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<SimState>,
    pub history: Vec<SimState>,
    pub final_state: SimState,
    pub dt: f64,
    pub steps: usize,
    pub max_node_flux_residual: f64,
    pub max_dissipation_residual: f64,
    pub max_mass_residual: f64,
    /// `max (lhs - rhs)` of the sup bound over all samples (NaN if never evaluated).
    pub max_bound_excess: f64,
}

/// Advances `state` to `t_final`, recording a sample every `cadence`.
pub fn run(
    net: &Network,
    spec: &BoundarySpec,
    mut state: SimState,
    opts: &RunOptions,
    profile: Option<&StationaryProfile>,
) -> Result<RunSummary> {
    let n_samples = opts.check()?;
    state.check(net)?;
    let (dt, per_sample) = uniform_steps(opts.cadence, opts.dt.unwrap_or_else(|| default_dt(net)));
    let mut sim = Simulator::new(net, spec.clone())?;
    let g = if net.nd_satisfied() { Some(gamma(net)?) } else { None };

    let mut out = RunSummary {
        samples: Vec::with_capacity(n_samples + 1),
        snapshots: Vec::new(),
        history: Vec::new(),
        final_state: state.clone(),
        dt,
        steps: 0,
        max_node_flux_residual: 0.0,
        max_dissipation_residual: 0.0,
        max_mass_residual: 0.0,
        max_bound_excess: f64::NAN,
    };
    let mut pending: Vec<f64> = opts.snapshots.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();

    let ctx = Recorder { net, profile, gamma: g, opts, dt };
    ctx.record(&sim, &state, 0.0, &mut out, &mut pending)?;
    let t0 = state.t;
    for n in 1..=n_samples {
        let mut flux = 0.0f64;
        for _ in 0..per_sample {
            let r = sim.step(&mut state, dt)?;
            flux = flux.max(r.max_node_flux_residual);
            out.max_dissipation_residual = out.max_dissipation_residual.max(r.max_dissipation_residual);
            out.steps += 1;
        }
        // pin the sample time to the grid so that rounding does not accumulate
        state.t = t0 + opts.t_final * (n as f64 / n_samples as f64);
        out.max_node_flux_residual = out.max_node_flux_residual.max(flux);
        ctx.record(&sim, &state, flux, &mut out, &mut pending)?;
    }
    out.final_state = state;
    Ok(out)
}

struct Recorder<'a> {
    net: &'a Network,
    profile: Option<&'a StationaryProfile>,
    gamma: Option<f64>,
    opts: &'a RunOptions,
    dt: f64,
}

impl Recorder<'_> {
    fn record(&self, sim: &Simulator<'_>, state: &SimState, flux: f64, out: &mut RunSummary, pending: &mut Vec<f64>) -> Result<()> {
        let (lhs, rhs) = match self.gamma {
            Some(g) => {
                let b = sim.sup_bound(state, g)?;
                let excess = b.lhs - b.rhs;
                out.max_bound_excess = if out.max_bound_excess.is_nan() {
                    excess
                } else {
                    out.max_bound_excess.max(excess)
                };
                (b.lhs, b.rhs)
            }
            None => (f64::NAN, f64::NAN),
        };
        let mass_residual = state.mass_residual(self.net);
        out.max_mass_residual = out.max_mass_residual.max(mass_residual);
        out.samples.push(Sample {
            t: state.t,
            mass: mass(state, self.net),
            mass_residual,
            max_node_flux_residual: flux,
            sup_u: state.u.iter().flatten().fold(0.0, |a, x| a.max(x.abs())),
            bound_lhs: lhs,
            bound_rhs: rhs,
            distance: self.profile.map(|p| distance(state, p, self.net)),
        });
        while pending.last().is_some_and(|&t| t <= state.t + 0.5 * self.dt) {
            pending.pop();
            out.snapshots.push(state.clone());
        }
        if self.opts.keep_history {
            out.history.push(state.clone());
        }
        Ok(())
    }
}

/// Stationary profile requested by the `[stationary]` section.
pub fn stationary_from_config(cfg: &Config, net: &Network, spec: &BoundarySpec) -> Result<StationaryProfile> {
    let st = cfg
        .stationary
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no [stationary] section".into()))?;
    match st.mode {
        StationaryMode::FixedPoint => fixed_point(
            net,
            spec,
            st.mu_s,
            FixedPointOptions {
                tol: st.tol,
                max_iter: st.max_iter,
            },
        ),
        StationaryMode::Zero => special_zero(net, &spec.p_limits()),
        StationaryMode::Constant => special_constant(net, spec, st.mu_s),
    }
}

/// Profile plus a mass-neutral bump: `c_i (sin^2(pi x / L_i) - 1/2)` on `u`,
/// `c_i sin^2(pi x / L_i)` on `psi`, nothing on `v`, with `c_i = ±amplitude`
/// and the sign per arc drawn from `seed`.
pub fn perturbed_state(net: &Network, profile: &StationaryProfile, amplitude: f64, seed: u64) -> Result<SimState> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude must be >= 0, got {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = profile.to_state(net)?;
    let bump = |x: f64, l: f64| (std::f64::consts::PI * x / l).sin().powi(2);
    for (i, arc) in net.arcs().iter().enumerate() {
        let c = if rng.random_bool(0.5) { amplitude } else { -amplitude };
        let l = arc.params.length;
        for (u, x) in state.u[i].iter_mut().zip(arc.centres()) {
            *u += c * (bump(x, l) - 0.5);
        }
        for (p, x) in state.psi[i].iter_mut().zip(arc.vertices()) {
            *p += c * bump(x, l);
        }
    }
    // the bump is mass-neutral on the midpoint grid up to rounding
    state.mass_0 = mass(&state, net);
    Ok(state)
}

#[derive(Debug, Clone)]
pub struct PerturbOutcome {
    pub run: RunSummary,
    pub ft: FtValue,
    pub initial_distance: f64,
    pub final_distance: f64,
}

impl PerturbOutcome {
    /// Sup distances per sample.
    pub fn distances(&self) -> Vec<f64> {
        self.run
            .samples
            .iter()
            .map(|s| s.distance.map_or(f64::NAN, |d| d.sup()))
            .collect()
    }

    /// `F_t` at the first sample with time `>= t`.
    pub fn ft_at(&self, t: f64) -> Option<f64> {
        let k = self.run.samples.iter().position(|s| s.t >= t - 1e-9)?;
        self.ft.prefix.get(k).copied()
    }
}

/// Runs the dynamics from the perturbed profile and tracks the distance to it.
pub fn perturb(
    net: &Network,
    spec: &BoundarySpec,
    profile: &StationaryProfile,
    amplitude: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<PerturbOutcome> {
    let state = perturbed_state(net, profile, amplitude, seed)?;
    let opts = RunOptions {
        keep_history: true,
        ..opts.clone()
    };
    let run = run(net, spec, state, &opts, Some(profile))?;
    let ft = ft_functional(&run.history, profile, net)?;
    let sup = |s: &Sample| s.distance.map_or(f64::NAN, |d| d.sup());
    Ok(PerturbOutcome {
        initial_distance: sup(&run.samples[0]),
        final_distance: sup(&run.samples[run.samples.len() - 1]),
        ft,
        run,
    })
}

/// Field-wise sup discrepancies between the fixed point and the shooting oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub u: f64,
    pub v: f64,
    pub psi: f64,
    pub tol: f64,
}

impl OracleComparison {
    pub fn max(&self) -> f64 {
        self.u.max(self.v).max(self.psi)
    }

    pub fn passed(&self) -> bool {
        self.max() <= self.tol
    }
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn oracle_check(
    net: &Network,
    spec: &BoundarySpec,
    mu_s: f64,
    opts: FixedPointOptions,
    tol: f64,
) -> Result<OracleComparison> {
    let fp = fixed_point(net, spec, mu_s, opts)?;
    let or = shooting_oracle(net, spec, mu_s)?;
    Ok(OracleComparison {
        u: sup_diff(&fp.u, &or.u),
        v: fp.v.iter().zip(&or.v).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        psi: sup_diff(&fp.psi, &or.psi),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::stationary::FixedPointOptions;

    fn single_arc_profile(cells: usize) -> (Network, BoundarySpec, StationaryProfile) {
        let net = single_arc(1.0, cells);
        let spec = BoundarySpec::zero(&net);
        let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
        (net, spec, p)
    }

    #[test]
    fn perturbation_is_mass_neutral() {
        let (net, _, p) = single_arc_profile(40);
        let s = perturbed_state(&net, &p, 0.3, 7).unwrap();
        assert!((mass(&s, &net) - 0.1).abs() < 1e-15);
        assert!(s.v.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn seed_fixes_the_signs() {
        let net = star3(1.0, 1.0, 10);
        let p = special_zero(&net, &[0.0; 3]).unwrap();
        let a = perturbed_state(&net, &p, 1.0, 3).unwrap();
        let b = perturbed_state(&net, &p, 1.0, 3).unwrap();
        assert_eq!(a.psi, b.psi);
        let signs: Vec<bool> = (0..64)
            .map(|s| perturbed_state(&net, &p, 1.0, s).unwrap().psi[0][5] > 0.0)
            .collect();
        assert!(signs.contains(&true) && signs.contains(&false));
    }

    #[test]
    fn zero_amplitude_stays_on_the_profile() {
        let (net, spec, p) = single_arc_profile(40);
        let out = perturb(&net, &spec, &p, 0.0, 1, &RunOptions::new(2.0, 0.5)).unwrap();
        assert!(out.distances().iter().all(|d| *d <= 1e-10), "{:?}", out.distances());
    }

    #[test]
    fn samples_land_on_the_cadence_grid() {
        let net = star3(1.0, 1.0, 10);
        let mut opts = RunOptions::new(1.0, 0.25);
        opts.snapshots = vec![0.0, 0.5, 0.6];
        let out = run(&net, &BoundarySpec::zero(&net), SimState::zeros(&net), &opts, None).unwrap();
        let ts: Vec<f64> = out.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let snaps: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(snaps, vec![0.0, 0.5, 0.75]);
        assert!(out.samples[0].distance.is_none());
    }

    #[test]
    fn cadence_must_divide_the_horizon() {
        let net = single_arc(1.0, 10);
        let err = run(&net, &BoundarySpec::zero(&net), SimState::zeros(&net), &RunOptions::new(1.0, 0.3), None);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
