use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chemonet::boundary::BoundarySpec;
use chemonet::config::SimulationConfig;
use chemonet::dynamics::{initial_state, SimState};
use chemonet::experiment::{oracle_check, perturb, perturbed_state, run, stationary_from_config, RunOptions};
use chemonet::output::{self, PerturbReport, ProfileReport};
use chemonet::stationary::{mu_thresholds, FixedPointOptions, StationaryProfile};
use chemonet::{Config, Error, Network, Result};

#[derive(Parser)]
#[command(name = "chemonet", version, about = "Chemotaxis on metric graphs with Kedem-Katchalsky transmission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the network; exits nonzero on fatal issues.
    Validate(Common),
    /// Run the dynamics and write the time series and snapshots.
    Simulate(Common),
    /// Compute the stationary profile and write it with a report.
    Stationary(Common),
    /// Perturb the stationary profile and track the decay back to it.
    Perturb(Common),
    /// Compare the fixed point with the shooting oracle (at most 3 arcs).
    OracleCheck(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fixed-point tolerance (oracle-check: pass/fail tolerance).
    #[arg(long)]
    tol: Option<f64>,
    /// Override the final time of the run.
    #[arg(long)]
    tmax: Option<f64>,
    /// Override the number of cells on every arc.
    #[arg(long)]
    cells: Option<usize>,
    /// Also write the elliptic matrix as triplets.
    #[arg(long)]
    dump_matrix: bool,
}

struct Loaded {
    cfg: Config,
    net: Network,
    spec: BoundarySpec,
}

impl Common {
    fn load(&self) -> Result<Loaded> {
        let mut cfg = Config::from_path(&self.config)?;
        if let Some(cells) = self.cells {
            cfg = cfg.with_cells(cells);
        }
        if let (Some(tol), Some(st)) = (self.tol, cfg.stationary.as_mut()) {
            st.tol = tol;
        }
        if let Some(t) = self.tmax {
            match cfg.simulation.as_mut() {
                Some(sim) => {
                    // keep the sample count when the horizon changes
                    sim.cadence *= t / sim.t_final;
                    sim.t_final = t;
                }
                None => {
                    cfg.simulation = Some(SimulationConfig {
                        t_final: t,
                        cadence: t / 100.0,
                        dt: None,
                        snapshots: Vec::new(),
                    })
                }
            }
        }
        let net = Network::from_config(&cfg)?;
        let spec = BoundarySpec::from_config(&cfg, &net)?;
        Ok(Loaded { cfg, net, spec })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        output::write(self.out.join(name), text)
    }
}

fn run_options(cfg: &Config) -> Result<RunOptions> {
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no [simulation] section (or pass --tmax)".into()))?;
    Ok(RunOptions {
        t_final: sim.t_final,
        cadence: sim.cadence,
        dt: sim.dt,
        snapshots: sim.snapshots.clone(),
        keep_history: false,
    })
}

fn validate(c: &Common) -> Result<bool> {
    let cfg = Config::from_path(&c.config)?;
    let (_, report) = Network::build_unchecked(&cfg)?;
    print!("{report}");
    Ok(!report.is_fatal())
}

fn initial(l: &Loaded, profile: Option<&StationaryProfile>) -> Result<SimState> {
    if l.cfg.initial.is_empty() {
        if let (Some(p), Some(pert)) = (profile, &l.cfg.perturbation) {
            return perturbed_state(&l.net, p, pert.amplitude, pert.seed);
        }
    }
    initial_state(&l.net, &l.cfg.initial)
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t}.txt")
}

fn simulate(c: &Common) -> Result<bool> {
    let l = c.load()?;
    let opts = run_options(&l.cfg)?;
    let profile = match &l.cfg.stationary {
        Some(_) => match stationary_from_config(&l.cfg, &l.net, &l.spec) {
            Ok(p) => Some(p),
            Err(e) => {
                eprintln!("warning: no stationary profile ({e}); distance columns are NaN");
                None
            }
        },
        None => None,
    };
    let state = initial(&l, profile.as_ref())?;
    let out = run(&l.net, &l.spec, state, &opts, profile.as_ref())?;
    c.write("time_series.csv", &output::time_series_csv(&out.samples))?;
    for s in &out.snapshots {
        c.write(&snapshot_name(s.t), &output::snapshot_table(s, &l.net))?;
    }
    if c.dump_matrix {
        let reaction: Vec<f64> = l.net.arcs().iter().map(|a| a.params.degradation + 1.0 / out.dt).collect();
        c.write("matrix.txt", &output::matrix_dump(&l.net, &reaction)?)?;
    }
    let last = out.samples.last().expect("at least one sample");
    println!("t = {}, steps = {}, dt = {:e}", last.t, out.steps, out.dt);
    println!("mass = {:e}, max mass residual = {:e}", last.mass, out.max_mass_residual);
    println!("max node flux residual = {:e}", out.max_node_flux_residual);
    println!("max sup-bound excess = {:e}", out.max_bound_excess);
    if let Some(d) = last.distance {
        println!("distance to stationary profile (sup) = {:e}", d.sup());
    }
    Ok(true)
}

fn stationary(c: &Common) -> Result<bool> {
    let l = c.load()?;
    let profile = stationary_from_config(&l.cfg, &l.net, &l.spec)?;
    let mut report = ProfileReport::new(&profile, &l.net);
    if let Some(k2) = l.cfg.stationary.as_ref().and_then(|s| s.k2_bar) {
        report.thresholds = Some(mu_thresholds(&l.net, &l.spec, profile.mu_s, k2)?);
    }
    c.write("profile.txt", &output::profile_table(&profile, &l.net))?;
    c.write("report.toml", &output::to_toml(&report)?)?;
    if c.dump_matrix {
        let reaction: Vec<f64> = l.net.arcs().iter().map(|a| a.params.degradation).collect();
        c.write("matrix.txt", &output::matrix_dump(&l.net, &reaction)?)?;
    }
    println!(
        "converged = {}, iterations = {}, max residual = {:e}, nonnegative = {}",
        profile.converged,
        profile.iterations,
        profile.residuals.max(),
        profile.nonnegative
    );
    if !profile.converged {
        eprintln!("error: fixed point did not converge; ratios {:?}", profile.contraction);
    }
    Ok(profile.converged)
}

fn perturb_cmd(c: &Common) -> Result<bool> {
    let l = c.load()?;
    let opts = run_options(&l.cfg)?;
    let pert = l
        .cfg
        .perturbation
        .clone()
        .ok_or_else(|| Error::InvalidArgument("config has no [perturbation] section".into()))?;
    let profile = stationary_from_config(&l.cfg, &l.net, &l.spec)?;
    let outcome = perturb(&l.net, &l.spec, &profile, pert.amplitude, pert.seed, &opts)?;
    c.write("time_series.csv", &output::time_series_csv(&outcome.run.samples))?;
    c.write("distance.csv", &output::distance_csv(&outcome))?;
    let report = PerturbReport::new(&outcome, pert.amplitude, pert.seed);
    c.write("perturb_report.toml", &output::to_toml(&report)?)?;
    for s in &outcome.run.snapshots {
        c.write(&snapshot_name(s.t), &output::snapshot_table(s, &l.net))?;
    }
    println!(
        "sup distance {:e} -> {:e} (ratio {:e}), F_T = {:e}, F_T/2 = {:e}",
        report.initial_distance, report.final_distance, report.decay_ratio, report.ft, report.ft_half
    );
    Ok(true)
}

fn oracle_cmd(c: &Common) -> Result<bool> {
    let l = c.load()?;
    let st = l
        .cfg
        .stationary
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no [stationary] section".into()))?;
    let opts = FixedPointOptions {
        tol: FixedPointOptions::default().tol,
        max_iter: st.max_iter,
    };
    let cmp = oracle_check(&l.net, &l.spec, st.mu_s, opts, c.tol.unwrap_or(1e-6))?;
    let tag = if cmp.passed() { "PASS" } else { "FAIL" };
    println!(
        "{tag}: max |dU| = {:e}, |dV| = {:e}, |dPsi| = {:e} (tolerance {:e})",
        cmp.u, cmp.v, cmp.psi, cmp.tol
    );
    Ok(cmp.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => validate(c),
        Command::Simulate(c) => simulate(c),
        Command::Stationary(c) => stationary(c),
        Command::Perturb(c) => perturb_cmd(c),
        Command::OracleCheck(c) => oracle_cmd(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
