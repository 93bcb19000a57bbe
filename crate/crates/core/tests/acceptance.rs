//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chemonet::boundary::{BoundarySpec, ExitData};
use chemonet::config::{Config, DecaySpec, InitialConfig, InitialValue};
use chemonet::dynamics::{
    default_dt, initial_state, mass, sup_bound_check, uniform_steps, NodeSolver, SimState, Simulator,
};
use chemonet::experiment::{perturb, run, RunOptions};
use chemonet::fixtures::*;
use chemonet::stationary::{fixed_point, shooting_oracle, special_constant, FixedPointOptions};
use chemonet::Network;

const CELLS: usize = 100;
const BOUND_SLACK: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
    /// Largest `lhs - rhs` of the sup bound seen during the criterion's runs.
    bound_excess: f64,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            bound_excess: f64::NEG_INFINITY,
        }
    }

    fn with_bound(mut self, excess: f64) -> Self {
        self.bound_excess = self.bound_excess.max(excess);
        self
    }
}

fn expr(s: &str) -> InitialValue {
    InitialValue::Expression(s.to_string())
}

fn smooth_star_state(net: &Network) -> SimState {
    let init: Vec<InitialConfig> = net
        .arcs()
        .iter()
        .enumerate()
        .map(|(i, a)| InitialConfig {
            arc: a.id,
            u: expr(&format!("1 + 0.3 * cos({} * pi * x / L)", i + 1)),
            v: expr("0.1 * sin(pi * x / L)"),
            psi: expr("0.2 * x * (L - x)"),
        })
        .collect();
    initial_state(net, &init).unwrap()
}

fn l1_cells(a: &[f64], fine: &[f64], h: f64) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, x)| (x - 0.5 * (fine[2 * i] + fine[2 * i + 1])).abs() * h)
        .sum()
}

fn flux_conservation() -> Outcome {
    let net = star3(1.0, 1.0, 20);
    let spec = BoundarySpec::constant(&[0.02, -0.01, -0.01], &[0.0; 3]);
    let mut sim = Simulator::new(&net, spec).unwrap();
    let mut s = smooth_star_state(&net);
    let dt = default_dt(&net);
    let mut worst = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for n in 0..10_000 {
        let r = sim.step(&mut s, dt).unwrap();
        worst = worst.max(r.max_node_flux_residual);
        if n % 100 == 0 {
            let b = sup_bound_check(&s, &net).unwrap();
            excess = excess.max(b.lhs - b.rhs);
        }
    }
    Outcome::new(worst <= 1e-12, format!("max relative node flux residual {worst:.2e} over 1e4 steps"))
        .with_bound(excess)
}

fn exponential_outflow_error(cells: usize) -> (f64, f64) {
    let net = single_arc(1.0, cells);
    let w = DecaySpec {
        inf: 0.0,
        amp: 1.0,
        rate: 1.0,
    };
    let spec = BoundarySpec {
        exits: vec![ExitData { w, p: DecaySpec::default() }, ExitData::default()],
    };
    let state = initial_state(
        &net,
        &[InitialConfig {
            arc: 1,
            u: InitialValue::Constant(2.0),
            v: InitialValue::Constant(0.0),
            psi: InitialValue::Constant(0.0),
        }],
    )
    .unwrap();
    let out = run(&net, &spec, state, &RunOptions::new(2.0, 0.1), None).unwrap();
    let worst = out
        .samples
        .iter()
        .map(|s| {
            let exact = 2.0 - (1.0 - (-s.t).exp());
            (s.mass - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    (worst, out.max_bound_excess)
}

fn mass_identity() -> Outcome {
    let net = star3(1.0, 1.0, 20);
    let mut sim = Simulator::new(&net, BoundarySpec::zero(&net)).unwrap();
    let mut s = smooth_star_state(&net);
    let mu0 = mass(&s, &net);
    let dt = default_dt(&net);
    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        sim.step(&mut s, dt).unwrap();
        drift = drift.max((mass(&s, &net) - mu0).abs() / mu0);
    }
    let errs: Vec<(f64, f64)> = [CELLS / 2, CELLS, 2 * CELLS].iter().map(|&c| exponential_outflow_error(c)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].0 / w[1].0).log2()).collect();
    let pass = drift <= 1e-12 && errs[1].0 <= 2e-3 && orders.iter().all(|&p| p >= 1.0);
    Outcome::new(
        pass,
        format!(
            "closed drift {drift:.2e}; outflow error {:.2e} at {CELLS} cells, refinement orders {:.2}, {:.2}",
            errs[1].0, orders[0], orders[1]
        ),
    )
    .with_bound(errs.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max))
}

fn random_star(rng: &mut ChaCha8Rng, degree: usize) -> Network {
    let external: Vec<u32> = (0..degree as u32).map(|k| 101 + k).collect();
    let arcs: Vec<(u32, u32, u32)> = external
        .iter()
        .enumerate()
        .map(|(k, &e)| if rng.random_bool(0.5) { (k as u32 + 1, e, 1) } else { (k as u32 + 1, 1, e) })
        .collect();
    let mut cfg: Config = uniform_config(&[1], &external, &arcs, 4, 1.0, 0.0);
    for a in &mut cfg.arcs {
        a.lambda = rng.random_range(0.2..3.0);
    }
    let t = &mut cfg.transmission[0];
    for i in 0..degree {
        for j in (i + 1)..degree {
            // the first member couples to everyone, so the nondegeneracy condition holds
            let s = if i == 0 || rng.random_bool(0.7) { rng.random_range(0.05..4.0) } else { 0.0 };
            t.sigma[i][j] = s;
            t.sigma[j][i] = s;
        }
    }
    Network::from_config(&cfg).unwrap()
}

fn dissipativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut solves = 0;
    for degree in 2..=6 {
        for _ in 0..200 {
            let net = random_star(&mut rng, degree);
            let solver = NodeSolver::new(&net, 0).unwrap();
            for _ in 0..5 {
                let w: Vec<f64> = (0..degree).map(|_| rng.random_range(-3.0..3.0)).collect();
                let t = solver.solve(&w).unwrap();
                worst = worst.max(t.dissipation_residual);
                solves += 1;
            }
        }
    }
    Outcome::new(worst <= 1e-12, format!("max relative defect {worst:.2e} over {solves} node solves"))
}

fn stationary_residuals() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let cases = [
        ("single arc", single_arc(1.0, CELLS), BoundarySpec::constant(&[0.0; 2], &[0.0; 2])),
        (
            "star",
            star3(1.0, 1.0, CELLS),
            BoundarySpec::constant(&[0.02, -0.01, -0.01], &[0.0; 3]),
        ),
    ];
    for (name, net, spec) in cases {
        let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
        let ratio = p.contraction.iter().copied().fold(0.0, f64::max);
        let ok = p.converged && ratio < 0.9 && p.residuals.max() <= 1e-8 && p.residuals.mass <= 1e-10;
        pass &= ok;
        lines.push(format!(
            "{name}: ratio {ratio:.3}, residual {:.2e}, mass {:.2e}",
            p.residuals.max(),
            p.residuals.mass
        ));
    }
    Outcome::new(pass, lines.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let cases = [
        ("single arc", single_arc(1.0, 400), BoundarySpec::constant(&[0.0; 2], &[0.0; 2])),
        ("path", path2(400), BoundarySpec::constant(&[0.01, -0.01], &[0.05, 0.0])),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, net, spec) in cases {
        let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
        let o = shooting_oracle(&net, &spec, 0.1).unwrap();
        let diff = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let (du, dp) = (diff(&p.u, &o.u), diff(&p.psi, &o.psi));
        pass &= du <= 1e-6 && dp <= 1e-6;
        lines.push(format!("{name}: |dU| {du:.2e}, |dPsi| {dp:.2e}"));
    }
    Outcome::new(pass, lines.join("; "))
}

fn cs_network() -> (Network, BoundarySpec) {
    let mut cfg = uniform_config(
        &[1],
        &[101, 102, 103, 104],
        &[(1, 101, 1), (2, 1, 102), (3, 1, 103), (4, 1, 104)],
        CELLS,
        1.0,
        1.0,
    );
    for a in &mut cfg.arcs {
        a.a = 0.5;
    }
    for b in &mut cfg.boundary {
        b.d = 2.0;
        b.p.inf = 0.5;
    }
    let net = Network::from_config(&cfg).unwrap();
    let spec = BoundarySpec::from_config(&cfg, &net).unwrap();
    (net, spec)
}

fn constant_solution() -> Outcome {
    let (net, spec) = cs_network();
    let p = special_constant(&net, &spec, 2.0).unwrap();
    let resid = p.residuals.max();
    let out = run(&net, &spec, p.to_state(&net).unwrap(), &RunOptions::new(10.0, 0.5), Some(&p)).unwrap();
    let drift = out.samples.iter().map(|s| s.distance.unwrap().sup()).fold(0.0, f64::max);
    Outcome::new(
        resid <= 1e-12 && drift <= 1e-10,
        format!("U = {:.3}, Psi = {:.3}, residual {resid:.2e}, drift {drift:.2e} over T = 10", p.u[0][0], p.psi[0][0]),
    )
    .with_bound(out.max_bound_excess)
}

fn asymptotic_stability() -> Outcome {
    let net = single_arc(1.0, CELLS);
    let spec = BoundarySpec::zero(&net);
    let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
    let out = perturb(&net, &spec, &p, 1e-2, 0, &RunOptions::new(100.0, 0.05)).unwrap();
    let at_t = out
        .run
        .samples
        .iter()
        .find(|s| s.t >= 50.0 - 1e-9)
        .map(|s| s.distance.unwrap().sup())
        .unwrap();
    let decay = at_t / out.initial_distance;
    // the sup series oscillates with the damped wave; the combined H1
    // distance is the monotone quantity, tested above the round-off floor
    let h1: Vec<(f64, f64)> = out
        .run
        .samples
        .iter()
        .filter(|s| s.t <= 50.0 + 1e-9)
        .map(|s| (s.t, s.distance.unwrap().h1()))
        .collect();
    let floor = 1e-12;
    let last_rise = h1
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > floor)
        .map(|w| w[1].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone_from = if last_rise.is_finite() { last_rise } else { 0.0 };
    let ratio = out.ft.value / out.ft_at(50.0).unwrap();
    let pass = decay <= 1e-3 && monotone_from < 50.0 && ratio <= 1.05;
    Outcome::new(
        pass,
        format!(
            "sup distance ratio {decay:.2e} at T = 50, H1 distance nonincreasing from t = {monotone_from}, F_2T/F_T = {ratio:.6}"
        ),
    )
    .with_bound(out.run.max_bound_excess)
}

fn hyperbolic_solution(cells: usize) -> Vec<f64> {
    let net = single_arc(1.0, cells);
    let sim = Simulator::new(&net, BoundarySpec::zero(&net)).unwrap();
    let h = 1.0 / cells as f64;
    // exact cell averages of 1 + 0.5 sin(pi x)
    let u = net.arcs()[0]
        .centres()
        .iter()
        .map(|&x| 1.0 + 0.5 * ((PI * (x - 0.5 * h)).cos() - (PI * (x + 0.5 * h)).cos()) / (PI * h))
        .collect();
    let mut s = SimState::from_fields(&net, 0.0, vec![u], vec![vec![0.0; cells]], vec![vec![0.0; cells + 1]]).unwrap();
    let (dt, n) = uniform_steps(0.5, 0.8 * h);
    for _ in 0..n {
        sim.hyperbolic_step(&mut s, dt).unwrap();
    }
    s.u.swap_remove(0)
}

fn parabolic_solution(steps: usize) -> Vec<f64> {
    let net = single_arc(1.0, 20);
    let mut sim = Simulator::new(&net, BoundarySpec::zero(&net)).unwrap();
    let init = [InitialConfig {
        arc: 1,
        u: expr("1 + x"),
        v: InitialValue::Constant(0.0),
        psi: expr("cos(pi * x)"),
    }];
    let mut s = initial_state(&net, &init).unwrap();
    let dt = 0.5 / steps as f64;
    for _ in 0..steps {
        sim.parabolic_step(&mut s, dt).unwrap();
        s.t += dt;
    }
    s.psi.swap_remove(0)
}

fn self_convergence() -> Outcome {
    let sols: Vec<Vec<f64>> = [50, 100, 200, 400].iter().map(|&c| hyperbolic_solution(c)).collect();
    let errs: Vec<f64> = sols.windows(2).map(|w| l1_cells(&w[0], &w[1], 1.0 / w[0].len() as f64)).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let par: Vec<Vec<f64>> = [10, 20, 40].iter().map(|&n| parabolic_solution(n)).collect();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let order = (sup(&par[0], &par[1]) / sup(&par[1], &par[2])).log2();
    let pass = ratios.iter().all(|&r| r >= 1.8) && (0.8..=1.3).contains(&order);
    Outcome::new(
        pass,
        format!(
            "hyperbolic L1 ratios {:.2}, {:.2}; parabolic order in dt {order:.2}",
            ratios[0], ratios[1]
        ),
    )
}

fn zero_fixed_point() -> Outcome {
    let net = star3(1.0, 1.0, 20);
    let mut sim = Simulator::new(&net, BoundarySpec::zero(&net)).unwrap();
    let mut s = SimState::zeros(&net);
    let dt = default_dt(&net);
    for _ in 0..1000 {
        sim.step(&mut s, dt).unwrap();
    }
    let zero = s
        .u
        .iter()
        .chain(&s.v)
        .chain(&s.psi)
        .chain(&s.psi_x)
        .flatten()
        .all(|x| x.to_bits() == 0);
    Outcome::new(zero, "all fields bitwise zero after 1e3 steps".into())
}

fn main() -> ExitCode {
    let started = std::time::Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "flux conservation", flux_conservation()),
        (2, "mass identity", mass_identity()),
        (3, "dissipativity identity", dissipativity()),
        (4, "stationary residuals", stationary_residuals()),
        (5, "oracle equivalence", oracle_equivalence()),
        (6, "constant solution", constant_solution()),
        (7, "asymptotic stability", asymptotic_stability()),
    ];
    let excess = results.iter().map(|r| r.2.bound_excess).fold(f64::NEG_INFINITY, f64::max);
    results.push((
        8,
        "a priori sup bound",
        Outcome::new(
            excess <= BOUND_SLACK,
            format!("max lhs - rhs = {excess:.2e} over the sampled runs of criteria 1, 2, 6, 7"),
        ),
    ));
    results.push((9, "scheme self-convergence", self_convergence()));
    results.push((10, "zero fixed point", zero_fixed_point()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag}  {name}: {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
