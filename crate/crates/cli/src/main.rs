use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gridreact::attack::{simulate_attack, AttackError};
use gridreact::detection::{react, DetectionConfig};
use gridreact::grid::{line_flows, solve_dc_power_flow, Grid};
use gridreact::harness::{run_experiment, ExperimentConfig, HarnessError};
use gridreact::io::{
    grid_to_json, parse_grid, parse_matpower, parse_scenario, GroundTruthFile, ObservationFile, OutcomeFile,
};
use gridreact::synth;
use gridreact::verify::{run_suite, Suite, VerifyOptions};
use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "react", version, about = "Attack simulation and line-failure detection on DC power grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the DC power flow and write angles and line flows as CSV.
    Powerflow {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate an attack and write the observation and the ground truth.
    Attack {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's noise or perturbation scale.
        #[arg(long)]
        param: Option<f64>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Observation JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ground-truth JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Recover the attacked area, failed lines and angles from an observation.
    Detect {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        observation: PathBuf,
        #[arg(long = "T", default_value_t = 20)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write per-scenario metrics as CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "T")]
        t: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell means.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the self-check suites; exits with 3 if any check fails.
    Verify(VerifyArgs),
    /// Convert a MATPOWER case file to grid JSON.
    Convert {
        #[arg(long)]
        matpower: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic transmission-style grid.
    Synth {
        #[arg(long, default_value_t = 118)]
        nodes: usize,
        #[arg(long, default_value_t = 1.58)]
        lines_per_node: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run (flow, distortion, replay, exactness, weights, cycle); all when omitted.
    #[arg(long, alias = "lemma")]
    suite: Option<Suite>,
    /// Line count for the weight suite.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
    Verification,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn numerical(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Numerical(e.into())
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_grid(path: &Path) -> Result<Grid> {
    Ok(parse_grid(&read(path)?).with_context(|| format!("parsing {}", path.display()))?)
}

fn pre_state(grid: &Grid) -> Result<DVector<f64>> {
    solve_dc_power_flow(grid, &DVector::from_column_slice(grid.injections())).map_err(numerical)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output types serialize") + "\n"
}

fn attack_failure(e: AttackError) -> Failure {
    match e {
        AttackError::Flow(f) => numerical(f),
        other => Failure::Input(other.into()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Powerflow { grid, out } => {
            let g = load_grid(&grid)?;
            let th = pre_state(&g)?;
            let mut s = String::from("element,id,value\n");
            for (i, v) in th.iter().enumerate() {
                writeln!(s, "theta,{},{v:e}", g.node_id(i)).expect("string write");
            }
            for (l, f) in g.lines().iter().zip(line_flows(&g, &th)) {
                writeln!(s, "flow,{},{f:e}", l.id).expect("string write");
            }
            write_out(out.as_deref(), &s)
        }
        Command::Attack { grid, scenario, param, seed, out, truth } => {
            let g = load_grid(&grid)?;
            let mut sc = parse_scenario(&read(&scenario)?, &g)
                .with_context(|| format!("parsing {}", scenario.display()))?;
            if param.is_some() {
                sc.param = param;
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            let th = pre_state(&g)?;
            let (obs, gt) = simulate_attack(&g, &th, &sc).map_err(attack_failure)?;
            if let Some(p) = truth {
                write_out(Some(&p), &to_json(&GroundTruthFile::from_truth(&g, &gt)))?;
            }
            write_out(out.as_deref(), &to_json(&ObservationFile::from_observation(&g, &obs)))
        }
        Command::Detect { grid, observation, t, seed, out } => {
            let g = load_grid(&grid)?;
            let file: ObservationFile = serde_json::from_str(&read(&observation)?)
                .with_context(|| format!("parsing {}", observation.display()))?;
            let obs = file.to_observation(&g).with_context(|| format!("reading {}", observation.display()))?;
            let cfg = DetectionConfig { t, ..DetectionConfig::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let outcome = react(&g, &obs.theta, &obs.theta_obs, &cfg, &mut rng);
            write_out(out.as_deref(), &to_json(&OutcomeFile::from_outcome(&g, &outcome)))
        }
        Command::Experiment { config, seed, t, jobs, out, summary } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| Failure::Input(e.into()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = t {
                cfg.t = t;
            }
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            let report = run_experiment(&cfg).map_err(|e| match e {
                HarnessError::Flow(f) => numerical(f),
                HarnessError::Attack(AttackError::Flow(f)) => numerical(f),
                other => Failure::Input(other.into()),
            })?;
            if let Some(p) = summary {
                write_out(Some(&p), &report.summary_csv())?;
            } else {
                eprint!("{}", report.summary_csv());
            }
            write_out(out.as_deref(), &report.to_csv())
        }
        Command::Verify(args) => {
            let suites: Vec<Suite> = args.suite.map_or(Suite::ALL.to_vec(), |s| vec![s]);
            let opts = VerifyOptions { seed: args.seed, trials: args.trials, m: args.m };
            let mut ok = true;
            for s in suites {
                for c in run_suite(s, &opts) {
                    println!("{} {:?} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
                    ok &= c.passed;
                }
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Convert { matpower, out } => {
            let g = parse_matpower(&read(&matpower)?).with_context(|| format!("converting {}", matpower.display()))?;
            write_out(out.as_deref(), &(grid_to_json(&g) + "\n"))
        }
        Command::Synth { nodes, lines_per_node, seed, out } => {
            if nodes < 2 || !(lines_per_node.is_finite() && lines_per_node >= 1.0) {
                return Err(Failure::Input(anyhow!("need at least 2 nodes and lines-per-node >= 1")));
            }
            let g = synth::geometric_grid(nodes, lines_per_node, &mut ChaCha8Rng::seed_from_u64(seed));
            write_out(out.as_deref(), &(grid_to_json(&g) + "\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(3)
        }
    }
}
