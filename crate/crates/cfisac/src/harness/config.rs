//! Strict TOML experiment configuration.
//!
//! Powers are written in dBm and gains in dB; parsing converts everything
//! to linear units. Unknown keys, type mismatches, and missing required
//! fields are rejected with the offending key and line. Omitted solver
//! fields take the documented defaults, and the fully resolved config is
//! echoed into the summary artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ScenarioConfig, TargetPlacement, UserPlacement};
use crate::solver::SolverOptions;
use crate::units::{db_to_linear, dbm_to_watts};

/// Algorithms selectable in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    #[serde(rename = "ALMCI")]
    Almci,
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Almci => "ALMCI",
            Algorithm::Zf => "ZF",
            Algorithm::Mmse => "MMSE",
            Algorithm::Oracle => "ORACLE",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "ALMCI" => Ok(Algorithm::Almci),
            "ZF" => Ok(Algorithm::Zf),
            "MMSE" => Ok(Algorithm::Mmse),
            "ORACLE" => Ok(Algorithm::Oracle),
            _ => Err(Error::Config(format!(
                "unknown algorithm \"{name}\"; expected ALMCI, ZF, MMSE, or ORACLE"
            ))),
        }
    }
}

/// Artifact kinds an experiment can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EmitKind {
    #[serde(rename = "summary-json")]
    SummaryJson,
    #[serde(rename = "trials-csv")]
    TrialsCsv,
    #[serde(rename = "beampattern-csv")]
    BeampatternCsv,
    #[serde(rename = "surface-csv")]
    SurfaceCsv,
    #[serde(rename = "report-text")]
    ReportText,
}

impl EmitKind {
    fn from_name(name: &str) -> Result<Self> {
        match name {
            "summary-json" => Ok(EmitKind::SummaryJson),
            "trials-csv" => Ok(EmitKind::TrialsCsv),
            "beampattern-csv" => Ok(EmitKind::BeampatternCsv),
            "surface-csv" => Ok(EmitKind::SurfaceCsv),
            "report-text" => Ok(EmitKind::ReportText),
            _ => Err(Error::Config(format!(
                "unknown emit kind \"{name}\"; expected summary-json, trials-csv, \
                 beampattern-csv, surface-csv, or report-text"
            ))),
        }
    }
}

/// Swept scenario parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "L")]
    NumAntennas,
    #[serde(rename = "p_max")]
    PMax,
    #[serde(rename = "K")]
    NumUsers,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Axis values: antenna/user counts, or dBm for the power axis.
    pub values: Vec<f64>,
}

/// Fully resolved experiment description.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    pub num_trials: usize,
    pub output_dir: PathBuf,
    pub emit: Vec<EmitKind>,
    pub angle_step_deg: f64,
    pub oracle_resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    scenario: RawScenario,
    #[serde(default)]
    solver: RawSolver,
    experiment: RawExperiment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    num_aps: usize,
    num_antennas: usize,
    num_users: usize,
    num_targets: usize,
    p_max_dbm: f64,
    noise_dbm: f64,
    #[serde(default)]
    sensing_thresholds_dbm: Vec<f64>,
    #[serde(default = "default_pathloss_ref_db")]
    pathloss_ref_db: f64,
    #[serde(default = "default_ref_distance")]
    ref_distance_m: f64,
    #[serde(default = "default_pathloss_exponent")]
    pathloss_exponent: f64,
    #[serde(default = "default_area")]
    area_m: f64,
    ap_positions: Vec<[f64; 2]>,
    rng_seed: u64,
    user_positions: Option<Vec<[f64; 2]>>,
    target_angles_deg: Option<Vec<Vec<f64>>>,
    target_positions: Option<Vec<[f64; 2]>>,
}

fn default_pathloss_ref_db() -> f64 {
    -30.0
}
fn default_ref_distance() -> f64 {
    1.0
}
fn default_pathloss_exponent() -> f64 {
    2.0
}
fn default_area() -> f64 {
    500.0
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    delta1: Option<f64>,
    delta2: Option<f64>,
    outer_rate_tol: Option<f64>,
    epsilon0: Option<f64>,
    epsilon_min: Option<f64>,
    theta_epsilon: Option<f64>,
    rho0: Option<f64>,
    theta_rho: Option<f64>,
    tau: Option<f64>,
    d_min: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    armijo_c: Option<f64>,
    armijo_shrink: Option<f64>,
    alpha_init: Option<f64>,
    max_backtracks: Option<usize>,
    max_rcg_iterations: Option<usize>,
    max_alm_iterations: Option<usize>,
    max_outer_iterations: Option<usize>,
    restarts: Option<usize>,
    reset_alm_per_outer: Option<bool>,
    violation_tol_rel: Option<f64>,
    infeasible_rho_growth: Option<f64>,
}

impl RawSolver {
    fn resolve(self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { opts.$field = v; })*
            };
        }
        take!(
            delta1, delta2, outer_rate_tol, epsilon0, epsilon_min, theta_epsilon, rho0, theta_rho, tau, d_min,
            lambda_min, lambda_max, armijo_c, armijo_shrink, alpha_init, max_backtracks,
            max_rcg_iterations, max_alm_iterations, max_outer_iterations, restarts,
            reset_alm_per_outer, violation_tol_rel, infeasible_rho_growth,
        );
        opts
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    algorithms: Vec<String>,
    #[serde(default = "default_trials")]
    num_trials: usize,
    #[serde(default = "default_output_dir")]
    output_dir: String,
    #[serde(default = "default_emit")]
    emit: Vec<String>,
    #[serde(default = "default_angle_step")]
    angle_step_deg: f64,
    #[serde(default = "default_oracle_resolution")]
    oracle_resolution: usize,
    jobs: Option<usize>,
    sweep: Option<RawSweep>,
}

fn default_trials() -> usize {
    100
}
fn default_output_dir() -> String {
    "out".to_string()
}
fn default_emit() -> Vec<String> {
    vec!["summary-json".to_string(), "trials-csv".to_string()]
}
fn default_angle_step() -> f64 {
    1.0
}
fn default_oracle_resolution() -> usize {
    64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Vec<f64>,
}

/// Parses and validates an experiment file.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses an experiment description from TOML text.
pub fn parse_config_str(text: &str) -> Result<ExperimentSpec> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let scenario = resolve_scenario(raw.scenario, raw.solver.resolve())?;
    scenario.validate()?;
    scenario.solver.validate()?;

    let algorithms = raw
        .experiment
        .algorithms
        .iter()
        .map(|s| Algorithm::from_name(s))
        .collect::<Result<Vec<_>>>()?;
    if algorithms.is_empty() {
        return Err(Error::Config("at least one algorithm is required".into()));
    }
    let emit = raw
        .experiment
        .emit
        .iter()
        .map(|s| EmitKind::from_name(s))
        .collect::<Result<Vec<_>>>()?;
    if raw.experiment.num_trials == 0 {
        return Err(Error::Config("num_trials must be at least 1".into()));
    }
    if emit.contains(&EmitKind::SurfaceCsv) && !algorithms.contains(&Algorithm::Almci) {
        return Err(Error::Config(
            "surface-csv requires ALMCI among the algorithms".into(),
        ));
    }

    let sweep = match raw.experiment.sweep {
        None => None,
        Some(raw_sweep) => Some(resolve_sweep(raw_sweep, &scenario)?),
    };

    Ok(ExperimentSpec {
        scenario,
        algorithms,
        num_trials: raw.experiment.num_trials,
        output_dir: PathBuf::from(raw.experiment.output_dir),
        emit,
        angle_step_deg: raw.experiment.angle_step_deg,
        oracle_resolution: raw.experiment.oracle_resolution,
        jobs: raw.experiment.jobs,
        sweep,
    })
}

fn resolve_scenario(raw: RawScenario, solver: SolverOptions) -> Result<ScenarioConfig> {
    let thresholds = match raw.sensing_thresholds_dbm.len() {
        n if n == raw.num_targets => raw.sensing_thresholds_dbm,
        1 => vec![raw.sensing_thresholds_dbm[0]; raw.num_targets],
        0 if raw.num_targets == 0 => Vec::new(),
        other => {
            return Err(Error::Config(format!(
                "sensing_thresholds_dbm has {other} entries; expected 1 (broadcast) or {}",
                raw.num_targets
            )));
        }
    };

    let users = match raw.user_positions {
        Some(p) => UserPlacement::Positions(p),
        None => UserPlacement::Uniform,
    };
    let targets = match (raw.target_angles_deg, raw.target_positions) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "target_angles_deg and target_positions are mutually exclusive".into(),
            ));
        }
        (Some(angles), None) => TargetPlacement::AnglesDeg(angles),
        (None, Some(p)) => TargetPlacement::Positions(p),
        (None, None) => TargetPlacement::Uniform,
    };

    Ok(ScenarioConfig {
        num_aps: raw.num_aps,
        num_antennas: raw.num_antennas,
        num_users: raw.num_users,
        num_targets: raw.num_targets,
        p_max: dbm_to_watts(raw.p_max_dbm),
        noise_power: dbm_to_watts(raw.noise_dbm),
        sensing_thresholds: thresholds.iter().map(|&t| dbm_to_watts(t)).collect(),
        pathloss_ref: db_to_linear(raw.pathloss_ref_db),
        ref_distance: raw.ref_distance_m,
        pathloss_exponent: raw.pathloss_exponent,
        area: raw.area_m,
        ap_positions: raw.ap_positions,
        users,
        targets,
        rng_seed: raw.rng_seed,
        solver,
    })
}

fn resolve_sweep(raw: RawSweep, scenario: &ScenarioConfig) -> Result<SweepSpec> {
    let axis = match raw.parameter.as_str() {
        "L" => SweepAxis::NumAntennas,
        "p_max" => SweepAxis::PMax,
        "K" => SweepAxis::NumUsers,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep parameter \"{other}\"; expected L, p_max, or K"
            )));
        }
    };
    if raw.values.is_empty() {
        return Err(Error::Config("sweep values must be nonempty".into()));
    }
    if !raw.values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("sweep values must be strictly increasing".into()));
    }
    match axis {
        SweepAxis::NumAntennas | SweepAxis::NumUsers => {
            if raw.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(Error::Config(
                    "antenna/user sweep values must be positive integers".into(),
                ));
            }
        }
        SweepAxis::PMax => {}
    }
    if axis == SweepAxis::NumUsers {
        if let UserPlacement::Positions(_) = scenario.users {
            return Err(Error::Config(
                "sweeping K requires uniform user placement".into(),
            ));
        }
    }
    Ok(SweepSpec {
        axis,
        values: raw.values,
    })
}

/// Applies one sweep value to a scenario, returning the modified copy.
pub fn apply_sweep_value(scenario: &ScenarioConfig, axis: SweepAxis, value: f64) -> ScenarioConfig {
    let mut out = scenario.clone();
    match axis {
        SweepAxis::NumAntennas => out.num_antennas = value as usize,
        SweepAxis::PMax => out.p_max = dbm_to_watts(value),
        SweepAxis::NumUsers => out.num_users = value as usize,
    }
    out
}

/// Human-readable label for a sweep value, used in directory names.
pub fn sweep_value_label(axis: SweepAxis, value: f64) -> String {
    match axis {
        SweepAxis::NumAntennas => format!("L_{}", value as usize),
        SweepAxis::PMax => format!("p_max_{value}dBm"),
        SweepAxis::NumUsers => format!("K_{}", value as usize),
    }
}
