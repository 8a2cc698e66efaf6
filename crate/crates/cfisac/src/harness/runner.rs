//! Monte Carlo experiment runner.
//!
//! Trials are independent work items: trial `t` seeds its stream with
//! `base_seed XOR t`, draws one channel set, and runs every configured
//! algorithm on that same drop. A worker pool of configurable width
//! executes trials; results are ordered by trial index regardless of
//! completion order, so artifacts are byte-identical across reruns and
//! thread counts. Wall-clock timings appear only in the plain-text
//! report, never in CSV/JSON artifacts.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    apply_sweep_value, sweep_value_label, Algorithm, EmitKind, ExperimentSpec,
};
use super::output::{csv_line, fmt_float, fmt_opt_float};
use crate::baselines::{grid_search_oracle, mmse_beamformer, zf_beamformer};
use crate::error::{Error, Result};
use crate::fp::{self, LiftedProblem};
use crate::scenario::{
    beampattern_sweep, draw_channels, per_ap_power, sum_rate, BeamMatrix, ChannelSet,
    ScenarioConfig,
};
use crate::solver::{self, SolveReport};
use crate::units::watts_to_dbm;

/// Flat per-trial result, one CSV row.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub trial: usize,
    pub algorithm: Algorithm,
    /// "converged" / "iteration-cap" / "infeasible" for the solver, "ok"
    /// for closed forms, "failed: ..." on errors.
    pub status: String,
    pub sum_rate: Option<f64>,
    pub outer_iterations: usize,
    pub alm_iterations: usize,
    pub rcg_iterations: usize,
    /// Largest positive sensing violation, Watts; `None` when the
    /// algorithm never evaluates sensing constraints.
    pub max_violation: Option<f64>,
    pub max_ap_power: Option<f64>,
    pub wall_time: Duration,
}

/// One trial of one algorithm, with the solver report kept for audits.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub outcome: TrialOutcome,
    pub report: Option<SolveReport>,
}

/// Per-algorithm aggregate statistics over completed trials.
#[derive(Clone, Debug, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub trials_completed: usize,
    pub trials_failed: usize,
    pub trials_infeasible: usize,
    pub mean_sum_rate_bps_hz: f64,
    pub std_sum_rate_bps_hz: f64,
    pub mean_outer_iterations: f64,
    pub median_outer_iterations: f64,
    pub mean_rcg_iterations: f64,
    /// Mean/max over trials that evaluate sensing constraints.
    pub mean_max_violation_w: f64,
    pub max_violation_w: f64,
    #[serde(skip)]
    pub mean_wall_time: Duration,
}

/// Everything a run produces, ordered by trial index.
#[derive(Clone, Debug)]
pub struct AggregateResult {
    pub summaries: Vec<AlgorithmSummary>,
    pub records: Vec<TrialRecord>,
}

impl AggregateResult {
    pub fn summary(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    /// True when any trial was flagged infeasible or failed outright.
    pub fn any_failure_or_infeasible(&self) -> bool {
        self.summaries
            .iter()
            .any(|s| s.trials_failed > 0 || s.trials_infeasible > 0)
    }
}

fn run_algorithm(
    algorithm: Algorithm,
    scenario: &ScenarioConfig,
    channels: &ChannelSet,
    rng: &mut ChaCha8Rng,
    oracle_resolution: usize,
    trial: usize,
) -> TrialRecord {
    let start = Instant::now();
    let evaluated: Result<(BeamMatrix, Option<SolveReport>)> = match algorithm {
        Algorithm::Almci => {
            solver::solve(scenario, channels, rng).map(|(beam, report)| (beam, Some(report)))
        }
        Algorithm::Zf => zf_beamformer(channels, scenario.p_max).map(|beam| (beam, None)),
        Algorithm::Mmse => Ok((
            mmse_beamformer(channels, scenario.noise_power, scenario.p_max),
            None,
        )),
        Algorithm::Oracle => {
            grid_search_oracle(scenario, channels, oracle_resolution).map(|(beam, _)| (beam, None))
        }
    };
    let wall_time = start.elapsed();

    match evaluated {
        Err(e) => TrialRecord {
            outcome: TrialOutcome {
                trial,
                algorithm,
                status: format!("failed: {e}"),
                sum_rate: None,
                outer_iterations: 0,
                alm_iterations: 0,
                rcg_iterations: 0,
                max_violation: None,
                max_ap_power: None,
                wall_time,
            },
            report: None,
        },
        Ok((beam, report)) => {
            let rate = sum_rate(&beam, channels, scenario.noise_power, scenario.p_max)
                .expect("consistent shapes");
            let max_power = (0..scenario.num_aps)
                .map(|m| per_ap_power(&beam, m, scenario.p_max).expect("valid AP index"))
                .fold(0.0f64, f64::max);
            let constraint_aware = matches!(algorithm, Algorithm::Almci | Algorithm::Oracle)
                && scenario.num_targets > 0;
            let max_violation = if constraint_aware {
                let worst = (0..scenario.num_targets)
                    .map(|n| {
                        let gain =
                            crate::scenario::beampattern_gain(&beam, channels, n, scenario.p_max)
                                .expect("valid target index");
                        (scenario.sensing_thresholds[n] - gain).max(0.0)
                    })
                    .fold(0.0f64, f64::max);
                Some(worst)
            } else {
                None
            };
            let status = match &report {
                Some(r) if !r.feasible => "infeasible".to_string(),
                Some(r) => r.status.as_str().to_string(),
                None => "ok".to_string(),
            };
            let (outer, alm, rcg) = report
                .as_ref()
                .map(|r| (r.outer_iterations, r.alm_iterations, r.rcg_iterations))
                .unwrap_or((0, 0, 0));
            TrialRecord {
                outcome: TrialOutcome {
                    trial,
                    algorithm,
                    status,
                    sum_rate: Some(rate),
                    outer_iterations: outer,
                    alm_iterations: alm,
                    rcg_iterations: rcg,
                    max_violation,
                    max_ap_power: Some(max_power),
                    wall_time,
                },
                report,
            }
        }
    }
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.scenario.rng_seed ^ trial as u64);
    let channels = match draw_channels(&spec.scenario, &mut rng) {
        Ok(ch) => ch,
        Err(e) => {
            // a bad drop fails every algorithm of this trial
            return spec
                .algorithms
                .iter()
                .map(|&algorithm| TrialRecord {
                    outcome: TrialOutcome {
                        trial,
                        algorithm,
                        status: format!("failed: {e}"),
                        sum_rate: None,
                        outer_iterations: 0,
                        alm_iterations: 0,
                        rcg_iterations: 0,
                        max_violation: None,
                        max_ap_power: None,
                        wall_time: Duration::ZERO,
                    },
                    report: None,
                })
                .collect();
        }
    };
    spec.algorithms
        .iter()
        .map(|&algorithm| {
            run_algorithm(
                algorithm,
                &spec.scenario,
                &channels,
                &mut rng,
                spec.oracle_resolution,
                trial,
            )
        })
        .collect()
}

fn summarize(algorithm: Algorithm, records: &[TrialRecord]) -> AlgorithmSummary {
    let rows: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.outcome.algorithm == algorithm)
        .collect();
    let completed: Vec<&TrialRecord> = rows
        .iter()
        .filter(|r| r.outcome.sum_rate.is_some())
        .copied()
        .collect();
    let failed = rows.len() - completed.len();
    let infeasible = rows
        .iter()
        .filter(|r| r.outcome.status == "infeasible")
        .count();

    let n = completed.len();
    let mean = |xs: &[f64]| -> f64 {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    let rates: Vec<f64> = completed.iter().filter_map(|r| r.outcome.sum_rate).collect();
    let mean_rate = mean(&rates);
    let std_rate = if rates.is_empty() {
        0.0
    } else {
        (rates.iter().map(|x| (x - mean_rate).powi(2)).sum::<f64>() / rates.len() as f64).sqrt()
    };
    let outer: Vec<f64> = completed
        .iter()
        .map(|r| r.outcome.outer_iterations as f64)
        .collect();
    let median_outer = {
        let mut sorted = outer.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        match sorted.len() {
            0 => 0.0,
            len if len % 2 == 1 => sorted[len / 2],
            len => 0.5 * (sorted[len / 2 - 1] + sorted[len / 2]),
        }
    };
    let violations: Vec<f64> = completed
        .iter()
        .filter_map(|r| r.outcome.max_violation)
        .collect();
    let wall_total: Duration = completed.iter().map(|r| r.outcome.wall_time).sum();

    AlgorithmSummary {
        algorithm,
        trials_completed: n,
        trials_failed: failed,
        trials_infeasible: infeasible,
        mean_sum_rate_bps_hz: mean_rate,
        std_sum_rate_bps_hz: std_rate,
        mean_outer_iterations: mean(&outer),
        median_outer_iterations: median_outer,
        mean_rcg_iterations: mean(
            &completed
                .iter()
                .map(|r| r.outcome.rcg_iterations as f64)
                .collect::<Vec<_>>(),
        ),
        mean_max_violation_w: mean(&violations),
        max_violation_w: violations.iter().fold(0.0f64, |a, &v| a.max(v)),
        mean_wall_time: if n > 0 {
            wall_total / n as u32
        } else {
            Duration::ZERO
        },
    }
}

fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = csv_line([
        "trial",
        "algorithm",
        "status",
        "sum_rate_bps_hz",
        "outer_iterations",
        "alm_iterations",
        "rcg_iterations",
        "max_violation_w",
        "max_ap_power_w",
    ]);
    for r in records {
        let o = &r.outcome;
        out.push_str(&csv_line([
            o.trial.to_string(),
            o.algorithm.name().to_string(),
            o.status.clone(),
            fmt_opt_float(o.sum_rate),
            o.outer_iterations.to_string(),
            o.alm_iterations.to_string(),
            o.rcg_iterations.to_string(),
            fmt_opt_float(o.max_violation),
            fmt_opt_float(o.max_ap_power),
        ]));
    }
    out
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    spec: &'a ExperimentSpec,
    algorithms: &'a [AlgorithmSummary],
}

fn report_text(spec: &ExperimentSpec, summaries: &[AlgorithmSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "experiment: {} trials, seed {}\n",
        spec.num_trials, spec.scenario.rng_seed
    ));
    out.push_str(&format!(
        "scenario: M={} L={} K={} N={} p_max={:.3} W noise={:.3e} W\n",
        spec.scenario.num_aps,
        spec.scenario.num_antennas,
        spec.scenario.num_users,
        spec.scenario.num_targets,
        spec.scenario.p_max,
        spec.scenario.noise_power,
    ));
    for s in summaries {
        out.push_str(&format!(
            "{:>6}: mean sum rate {:.4} bps/Hz (std {:.4}), outer iters mean {:.2} median {:.1}, \
             mean wall {:.3} s, failed {}, infeasible {}\n",
            s.algorithm.name(),
            s.mean_sum_rate_bps_hz,
            s.std_sum_rate_bps_hz,
            s.mean_outer_iterations,
            s.median_outer_iterations,
            s.mean_wall_time.as_secs_f64(),
            s.trials_failed,
            s.trials_infeasible,
        ));
    }
    out
}

fn ensure_writable(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

/// Runs every configured algorithm over `num_trials` independent drops and
/// writes the requested artifacts. Identical specs produce byte-identical
/// CSV/JSON artifacts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<AggregateResult> {
    spec.scenario.validate()?;
    spec.scenario.solver.validate()?;
    ensure_writable(&spec.output_dir)?;

    let run_all = || -> Vec<Vec<TrialRecord>> {
        (0..spec.num_trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t))
            .collect()
    };
    let nested = match spec.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let records: Vec<TrialRecord> = nested.into_iter().flatten().collect();

    let summaries: Vec<AlgorithmSummary> = spec
        .algorithms
        .iter()
        .map(|&a| summarize(a, &records))
        .collect();

    if spec.emit.contains(&EmitKind::TrialsCsv) {
        std::fs::write(spec.output_dir.join("trials.csv"), trials_csv(&records))?;
    }
    if spec.emit.contains(&EmitKind::SummaryJson) {
        let doc = SummaryDocument {
            spec,
            algorithms: &summaries,
        };
        let json = serde_json::to_string_pretty(&doc).expect("serializable summary");
        std::fs::write(spec.output_dir.join("summary.json"), json + "\n")?;
    }
    if spec.emit.contains(&EmitKind::BeampatternCsv) {
        for &algorithm in &spec.algorithms {
            emit_beampattern(spec, algorithm, spec.angle_step_deg)?;
        }
    }
    if spec.emit.contains(&EmitKind::SurfaceCsv) {
        emit_cost_surface(spec)?;
    }
    if spec.emit.contains(&EmitKind::ReportText) {
        std::fs::write(
            spec.output_dir.join("report.txt"),
            report_text(spec, &summaries),
        )?;
    }

    Ok(AggregateResult { summaries, records })
}

/// Result of a beampattern emission.
#[derive(Debug)]
pub struct BeampatternArtifact {
    pub path: PathBuf,
    /// False when the solver flagged its run infeasible.
    pub feasible: bool,
}

/// Computes one beamformer on the base-seed drop and writes its per-AP
/// directional gains over `-90..=90` degrees to CSV (gains in dBm).
pub fn emit_beampattern(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    angle_step_deg: f64,
) -> Result<BeampatternArtifact> {
    if !(angle_step_deg > 0.0) {
        return Err(Error::domain("angle step must be positive"));
    }
    let steps = 180.0 / angle_step_deg;
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "angle step {angle_step_deg} does not divide 180 evenly"
        )));
    }
    let rows = steps.round() as usize + 1;
    ensure_writable(&spec.output_dir)?;

    let scenario = &spec.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
    let channels = draw_channels(scenario, &mut rng)?;
    let (beam, feasible) = match algorithm {
        Algorithm::Almci => {
            let (beam, report) = solver::solve(scenario, &channels, &mut rng)?;
            (beam, report.feasible)
        }
        Algorithm::Zf => (zf_beamformer(&channels, scenario.p_max)?, true),
        Algorithm::Mmse => (
            mmse_beamformer(&channels, scenario.noise_power, scenario.p_max),
            true,
        ),
        Algorithm::Oracle => {
            let (beam, _) = grid_search_oracle(scenario, &channels, spec.oracle_resolution)?;
            (beam, true)
        }
    };

    let grid: Vec<f64> = (0..rows)
        .map(|i| (-90.0 + i as f64 * angle_step_deg).to_radians())
        .collect();
    let table = beampattern_sweep(&beam, &channels, &grid, scenario.p_max)?;

    let mut header = vec!["angle_deg".to_string()];
    for m in 0..scenario.num_aps {
        header.push(format!("gain_dbm_ap{}", m + 1));
    }
    let mut out = csv_line(header.iter().map(String::as_str));
    for (i, _) in grid.iter().enumerate() {
        let mut cells = vec![format!("{}", -90.0 + i as f64 * angle_step_deg)];
        for m in 0..scenario.num_aps {
            let gain = table.gains[[i, m]].max(1e-300);
            cells.push(fmt_float(watts_to_dbm(gain)));
        }
        out.push_str(&csv_line(cells.iter().map(String::as_str)));
    }

    let path = spec
        .output_dir
        .join(format!("beampattern_{}.csv", algorithm.name().to_lowercase()));
    std::fs::write(&path, out)?;
    Ok(BeampatternArtifact { path, feasible })
}

fn emit_cost_surface(spec: &ExperimentSpec) -> Result<()> {
    let scenario = &spec.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);
    let channels = draw_channels(scenario, &mut rng)?;
    let (beam, report) = solver::solve(scenario, &channels, &mut rng)?;
    let problem = LiftedProblem::new(
        &channels,
        scenario.p_max,
        scenario.noise_power,
        &scenario.sensing_thresholds,
    );
    let vt = fp::lift(&beam, scenario.p_max, scenario.num_users)?;
    let mu = fp::update_mu(&vt, &problem);
    let grid: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
    let mut dir_rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed ^ 0xc057);
    let surface = solver::cost_surface(
        &vt,
        &report.final_lambda,
        report.final_rho,
        &mu,
        &problem,
        &grid,
        &grid,
        &mut dir_rng,
    );

    let mut out = csv_line(["t1", "t2", "lagrangian"]);
    for (i, &t1) in grid.iter().enumerate() {
        for (j, &t2) in grid.iter().enumerate() {
            out.push_str(&csv_line([
                format!("{t1}"),
                format!("{t2}"),
                fmt_float(surface[[i, j]]),
            ]));
        }
    }
    std::fs::write(spec.output_dir.join("surface.csv"), out)?;
    Ok(())
}

/// Runs the sweep axis of a spec: one sub-experiment per value in
/// `output_dir/<axis>_<value>/`, plus a top-level `sweep.csv`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<(f64, AggregateResult)>> {
    let sweep = spec
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("config has no [experiment.sweep] section".into()))?;
    ensure_writable(&spec.output_dir)?;

    let mut results = Vec::new();
    for &value in &sweep.values {
        let mut sub = spec.clone();
        sub.scenario = apply_sweep_value(&spec.scenario, sweep.axis, value);
        sub.sweep = None;
        sub.output_dir = spec.output_dir.join(sweep_value_label(sweep.axis, value));
        let agg = run_experiment(&sub)?;
        results.push((value, agg));
    }

    let axis_name = match sweep.axis {
        super::config::SweepAxis::NumAntennas => "L",
        super::config::SweepAxis::PMax => "p_max",
        super::config::SweepAxis::NumUsers => "K",
    };
    let mut out = csv_line([
        "sweep_parameter",
        "value",
        "algorithm",
        "trials_completed",
        "trials_failed",
        "mean_sum_rate_bps_hz",
        "std_sum_rate_bps_hz",
        "mean_outer_iterations",
        "median_outer_iterations",
        "mean_max_violation_w",
    ]);
    for (value, agg) in &results {
        for s in &agg.summaries {
            out.push_str(&csv_line([
                axis_name.to_string(),
                format!("{value}"),
                s.algorithm.name().to_string(),
                s.trials_completed.to_string(),
                s.trials_failed.to_string(),
                fmt_float(s.mean_sum_rate_bps_hz),
                fmt_float(s.std_sum_rate_bps_hz),
                fmt_float(s.mean_outer_iterations),
                fmt_float(s.median_outer_iterations),
                fmt_float(s.mean_max_violation_w),
            ]));
        }
    }
    std::fs::write(spec.output_dir.join("sweep.csv"), out)?;
    Ok(results)
}
