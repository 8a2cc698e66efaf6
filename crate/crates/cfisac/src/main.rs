//! Command-line front end for the beamforming experiment harness.
//!
//! Exit codes: 0 on success, 1 on solver infeasibility or runtime
//! failures, 2 on usage or config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfisac::baselines::grid_search_oracle;
use cfisac::harness::{self, Algorithm, ExperimentSpec};
use cfisac::scenario::draw_channels;
use cfisac::solver;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "cfisac",
    about = "Cell-free ISAC beamforming: manifold solver, baselines, Monte Carlo harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the scenario RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker pool width (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the sweep axis of a config file.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Emit a directional-gain CSV for one algorithm on the base drop.
    Beampattern {
        config: PathBuf,
        /// Algorithm: ALMCI, ZF, MMSE, or ORACLE.
        #[arg(long)]
        alg: String,
        /// Angle grid step in degrees; must divide 180 evenly.
        #[arg(long, default_value_t = 1.0)]
        angle_step: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the solver gradient against central finite differences on
    /// random instances of the configured scenario.
    Gradcheck {
        config: PathBuf,
        /// Number of random instances.
        #[arg(long, default_value_t = 5)]
        instances: usize,
        /// Tangent directions per instance.
        #[arg(long, default_value_t = 20)]
        dirs: usize,
        /// Failure threshold on the max relative error.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the solver against the exhaustive oracle on a tiny
    /// instance.
    Oracle {
        config: PathBuf,
        /// Grid points per search dimension.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn apply_overrides(
    spec: &mut ExperimentSpec,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) {
    if let Some(s) = seed {
        spec.scenario.rng_seed = s;
    }
    if let Some(t) = trials {
        spec.num_trials = t;
    }
    if let Some(j) = jobs {
        spec.jobs = Some(j);
    }
    // precedence: flag > environment > config
    if let Some(o) = out {
        spec.output_dir = o;
    } else if let Ok(env_dir) = std::env::var("CFISAC_OUT_DIR") {
        if !env_dir.is_empty() {
            spec.output_dir = PathBuf::from(env_dir);
        }
    }
}

fn run(cli: Cli) -> Result<bool, cfisac::Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            jobs,
        } => {
            let mut spec = harness::parse_config(&config)?;
            apply_overrides(&mut spec, seed, trials, out, jobs);
            let agg = harness::run_experiment(&spec)?;
            for s in &agg.summaries {
                println!(
                    "{:>6}: mean sum rate {:.4} bps/Hz over {} trials ({} failed, {} infeasible)",
                    s.algorithm.name(),
                    s.mean_sum_rate_bps_hz,
                    s.trials_completed,
                    s.trials_failed,
                    s.trials_infeasible
                );
            }
            println!("artifacts written to {}", spec.output_dir.display());
            Ok(!agg.any_failure_or_infeasible())
        }
        Command::Sweep {
            config,
            seed,
            trials,
            out,
            jobs,
        } => {
            let mut spec = harness::parse_config(&config)?;
            apply_overrides(&mut spec, seed, trials, out, jobs);
            let results = harness::runner::run_sweep(&spec)?;
            let mut clean = true;
            for (value, agg) in &results {
                for s in &agg.summaries {
                    println!(
                        "value {value:>8}: {:>6} mean sum rate {:.4} bps/Hz",
                        s.algorithm.name(),
                        s.mean_sum_rate_bps_hz
                    );
                }
                clean &= !agg.any_failure_or_infeasible();
            }
            println!("artifacts written to {}", spec.output_dir.display());
            Ok(clean)
        }
        Command::Beampattern {
            config,
            alg,
            angle_step,
            seed,
            out,
        } => {
            let mut spec = harness::parse_config(&config)?;
            apply_overrides(&mut spec, seed, None, out, None);
            let algorithm = Algorithm::from_name(&alg)?;
            let artifact = harness::emit_beampattern(&spec, algorithm, angle_step)?;
            println!("beampattern written to {}", artifact.path.display());
            Ok(artifact.feasible)
        }
        Command::Gradcheck {
            config,
            instances,
            dirs,
            tol,
            seed,
        } => {
            let mut spec = harness::parse_config(&config)?;
            apply_overrides(&mut spec, seed, None, None, None);
            let err = solver::gradient_check_scenario(
                &spec.scenario,
                instances,
                dirs,
                spec.scenario.rng_seed,
            )?;
            println!(
                "max relative gradient error over {instances} instances x {dirs} directions: {err:.3e}"
            );
            Ok(err <= tol)
        }
        Command::Oracle {
            config,
            resolution,
            seed,
        } => {
            let mut spec = harness::parse_config(&config)?;
            apply_overrides(&mut spec, seed, None, None, None);
            let resolution = resolution.unwrap_or(spec.oracle_resolution);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.scenario.rng_seed);
            let channels = draw_channels(&spec.scenario, &mut rng)?;
            let (_, oracle_rate) = grid_search_oracle(&spec.scenario, &channels, resolution)?;
            let (_, report) = solver::solve(&spec.scenario, &channels, &mut rng)?;
            let solver_rate = report.sum_rate();
            let gap = (oracle_rate - solver_rate) / oracle_rate.max(f64::MIN_POSITIVE);
            println!("oracle sum rate: {oracle_rate:.6} bps/Hz (grid {resolution}/dim)");
            println!("solver sum rate: {solver_rate:.6} bps/Hz (gap {:.3}%)", gap * 100.0);
            Ok(report.feasible)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                cfisac::Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
