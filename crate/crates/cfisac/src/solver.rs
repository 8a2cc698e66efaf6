//! Constrained beamforming solver: an augmented Lagrangian over the
//! unit-column manifold, minimized by Riemannian conjugate gradient with
//! Armijo backtracking, inside an outer fractional-programming loop that
//! refreshes the auxiliary SINR weights.
//!
//! Nesting, outermost first:
//! 1. FP loop — update `mu`, stop when the reduced objective stabilizes.
//! 2. ALM loop — minimize `L_rho`, update multipliers, tighten the
//!    accuracy schedule, grow the penalty when violations stagnate.
//! 3. RCG loop — Hestenes-Stiefel conjugate gradient with projection
//!    transport and column-normalization retraction.

use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fp::{self, AuxiliaryMu, LiftedProblem};
use crate::linalg::fro_norm;
use crate::manifold::{self, ManifoldPoint, TangentVector};
use crate::scenario::{BeamMatrix, ChannelSet, ScenarioConfig};

/// Solver parameters. Defaults reproduce the reference configuration.
#[derive(Clone, Debug, Serialize)]
pub struct SolverOptions {
    /// Inner gradient-norm tolerance.
    pub delta1: f64,
    /// Outer objective-change tolerance.
    pub delta2: f64,
    /// Detection tolerance of the outer loop on the relative sum-rate
    /// change; the effective outer threshold is `max(delta2,
    /// outer_rate_tol)`. The default matches the reporting precision at
    /// which the algorithm's 4-5 iteration convergence is visible.
    pub outer_rate_tol: f64,
    /// Initial ALM accuracy.
    pub epsilon0: f64,
    /// Floor of the accuracy schedule.
    pub epsilon_min: f64,
    /// Accuracy shrink factor, in (0, 1).
    pub theta_epsilon: f64,
    /// Initial penalty.
    pub rho0: f64,
    /// Penalty growth factor, > 1.
    pub theta_rho: f64,
    /// Sufficient violation-decrease ratio, in (0, 1).
    pub tau: f64,
    /// Minimum iterate distance for the ALM loop.
    pub d_min: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub alpha_init: f64,
    pub max_backtracks: usize,
    pub max_rcg_iterations: usize,
    pub max_alm_iterations: usize,
    pub max_outer_iterations: usize,
    /// Independent random restarts; the best feasible run wins.
    pub restarts: usize,
    /// Reset multipliers/penalty/accuracy at each outer FP iteration
    /// instead of warm-starting them.
    pub reset_alm_per_outer: bool,
    /// Relative sensing-violation tolerance (fraction of each threshold).
    pub violation_tol_rel: f64,
    /// Penalty growth ratio that, combined with a violated cap-limited ALM
    /// loop, flags the instance as infeasible.
    pub infeasible_rho_growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            delta1: 1e-6,
            delta2: 1e-6,
            outer_rate_tol: 1e-4,
            epsilon0: 1e-3,
            epsilon_min: 1e-6,
            theta_epsilon: 0.5,
            rho0: 1.0,
            theta_rho: 4.0,
            tau: 0.5,
            d_min: 1e-10,
            lambda_min: 0.0,
            lambda_max: 100.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            alpha_init: 1.0,
            max_backtracks: 50,
            max_rcg_iterations: 500,
            max_alm_iterations: 50,
            max_outer_iterations: 30,
            restarts: 1,
            reset_alm_per_outer: false,
            violation_tol_rel: 1e-4,
            infeasible_rho_growth: 1e6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_epsilon > 0.0 && self.theta_epsilon < 1.0) {
            return Err(Error::domain("theta_epsilon must lie in (0, 1)"));
        }
        if !(self.theta_rho > 1.0) {
            return Err(Error::domain("theta_rho must exceed 1"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::domain("tau must lie in (0, 1)"));
        }
        if self.lambda_min > self.lambda_max {
            return Err(Error::domain("lambda_min must not exceed lambda_max"));
        }
        for (name, v) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("epsilon0", self.epsilon0),
            ("epsilon_min", self.epsilon_min),
            ("rho0", self.rho0),
            ("d_min", self.d_min),
            ("armijo_c", self.armijo_c),
            ("alpha_init", self.alpha_init),
            ("violation_tol_rel", self.violation_tol_rel),
        ] {
            if !(v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive")));
            }
        }
        if self.outer_rate_tol < 0.0 {
            return Err(Error::domain("outer_rate_tol must be nonnegative"));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::domain("armijo_shrink must lie in (0, 1)"));
        }
        if self.restarts == 0
            || self.max_rcg_iterations == 0
            || self.max_alm_iterations == 0
            || self.max_outer_iterations == 0
        {
            return Err(Error::domain("iteration caps and restarts must be >= 1"));
        }
        Ok(())
    }
}

/// Multiplier/penalty/accuracy state of the ALM loop.
#[derive(Clone, Debug)]
pub struct AlmState {
    pub lambda: Vec<f64>,
    pub rho: f64,
    pub epsilon: f64,
    /// Violation surrogate of the previous iteration, `None` on the first.
    pub sigma: Option<Vec<f64>>,
}

impl AlmState {
    pub fn new(num_targets: usize, opts: &SolverOptions) -> Self {
        AlmState {
            lambda: vec![opts.lambda_min.max(0.0); num_targets],
            rho: opts.rho0,
            epsilon: opts.epsilon0,
            sigma: None,
        }
    }
}

/// The augmented Lagrangian for fixed multipliers, penalty, and FP weights.
pub(crate) struct AlmObjective<'a> {
    pub problem: &'a LiftedProblem,
    pub mu: &'a AuxiliaryMu,
    pub lambda: &'a [f64],
    pub rho: f64,
}

impl AlmObjective<'_> {
    /// `L_rho = f_hat + (rho/2) sum_n max(0, lambda_n/rho + g_n)^2`.
    pub fn value(&self, vt: &ManifoldPoint) -> f64 {
        let mut total = fp::reduced_objective(vt, self.mu, self.problem);
        for (n, &lambda_n) in self.lambda.iter().enumerate() {
            let t = lambda_n / self.rho + fp::sensing_constraint(vt, n, self.problem);
            if t > 0.0 {
                total += 0.5 * self.rho * t * t;
            }
        }
        total
    }

    /// Ambient Wirtinger gradient, scaled so that the real directional
    /// derivative along `Z` equals the metric pairing with `Z`.
    pub fn euclidean_gradient(&self, vt: &ManifoldPoint) -> Array2<Complex64> {
        let p = self.problem;
        let (m_count, k_count, b) = (p.num_aps(), p.num_users(), p.block_len());
        let coup = fp::couplings(vt, p);
        let mut grad: Array2<Complex64> = Array2::zeros((p.rows(), m_count));

        for k in 0..k_count {
            let signal = coup.c[[k, k]].norm_sqr();
            let denom = coup.denom[k];
            let weight = self.mu.shifted(k);
            for i in 0..k_count {
                // quotient rule: direct term for i = k, denominator term for all i
                let mut w = coup.c[[k, i]] * (2.0 * weight * signal / (denom * denom));
                if i == k {
                    w -= coup.c[[k, k]] * (2.0 * weight / denom);
                }
                for m in 0..m_count {
                    for r in 0..b {
                        grad[[i * b + r, m]] += w * p.h_hat[[m, k, r]];
                    }
                }
            }
        }

        if !self.lambda.is_empty() {
            let projections = fp::target_projections(vt, p);
            for (n, &lambda_n) in self.lambda.iter().enumerate() {
                let mut gain = 0.0;
                for m in 0..m_count {
                    for k in 0..k_count {
                        gain += projections[[m, k, n]].norm_sqr();
                    }
                }
                let t = lambda_n / self.rho + (p.thresholds[n] - gain);
                if t > 0.0 {
                    let coef = -2.0 * self.rho * t;
                    for m in 0..m_count {
                        for k in 0..k_count {
                            let w = projections[[m, k, n]] * coef;
                            for r in 0..b {
                                grad[[k * b + r, m]] += w * p.a_hat[[m, n, r]];
                            }
                        }
                    }
                }
            }
        }
        grad
    }

    pub fn riemannian_gradient(&self, vt: &ManifoldPoint) -> TangentVector {
        manifold::project_to_tangent(vt, &self.euclidean_gradient(vt))
    }
}

/// Augmented Lagrangian value at `vt`.
pub fn lagrangian(
    vt: &ManifoldPoint,
    lambda: &[f64],
    rho: f64,
    mu: &AuxiliaryMu,
    problem: &LiftedProblem,
) -> f64 {
    AlmObjective { problem, mu, lambda, rho }.value(vt)
}

/// Ambient (Euclidean) gradient of the augmented Lagrangian.
pub fn euclidean_gradient(
    vt: &ManifoldPoint,
    lambda: &[f64],
    rho: f64,
    mu: &AuxiliaryMu,
    problem: &LiftedProblem,
) -> Array2<Complex64> {
    AlmObjective { problem, mu, lambda, rho }.euclidean_gradient(vt)
}

/// Riemannian gradient: tangent projection of the ambient gradient.
pub fn riemannian_gradient(
    vt: &ManifoldPoint,
    lambda: &[f64],
    rho: f64,
    mu: &AuxiliaryMu,
    problem: &LiftedProblem,
) -> TangentVector {
    AlmObjective { problem, mu, lambda, rho }.riemannian_gradient(vt)
}

/// Clipped first-order multiplier update.
pub fn update_multipliers(
    lambda: &[f64],
    rho: f64,
    constraints: &[f64],
    lambda_min: f64,
    lambda_max: f64,
) -> Vec<f64> {
    lambda
        .iter()
        .zip(constraints.iter())
        .map(|(&l, &g)| (l + rho * g).clamp(lambda_min, lambda_max))
        .collect()
}

/// Keeps the penalty when violations shrank enough (or on the first
/// iteration), otherwise grows it.
pub fn update_penalty(
    rho: f64,
    sigma_prev: Option<&[f64]>,
    sigma_curr: &[f64],
    tau: f64,
    theta_rho: f64,
) -> f64 {
    match sigma_prev {
        None => rho,
        Some(prev) => {
            let max_prev = prev.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
            let max_curr = sigma_curr.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
            if max_curr <= tau * max_prev {
                rho
            } else {
                theta_rho * rho
            }
        }
    }
}

/// Per-iterate record of one RCG run.
#[derive(Clone, Debug, Default)]
pub struct RcgTrace {
    /// Augmented Lagrangian at accepted iterates (length `iterations + 1`).
    pub lagrangian: Vec<f64>,
    /// Riemannian gradient norms at the same iterates.
    pub grad_norm: Vec<f64>,
    /// Accepted step sizes (length `iterations`).
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub stalled: bool,
    pub max_column_norm_error: f64,
    pub max_extracted_power: f64,
}

fn max_extracted_power(vt: &ManifoldPoint, problem: &LiftedProblem) -> f64 {
    let (k_count, b) = (problem.num_users(), problem.block_len());
    let mut worst = 0.0f64;
    for m in 0..vt.0.ncols() {
        let mut power = 0.0;
        for k in 0..k_count {
            for l in 0..b - 1 {
                power += vt.0[[k * b + l, m]].norm_sqr();
            }
        }
        worst = worst.max(power * problem.p_max);
    }
    worst
}

fn lin_comb(ca: f64, a: &TangentVector, cb: f64, b: &TangentVector) -> TangentVector {
    let mut out = a.0.mapv(|z| z * ca);
    out.zip_mut_with(&b.0, |o, &z| *o += z * cb);
    TangentVector(out)
}

/// Backtracking line search enforcing
/// `L(R_x(alpha eta)) <= L(x) - c alpha ||g||^2`.
fn armijo_search(
    obj: &AlmObjective<'_>,
    x: &ManifoldPoint,
    eta: &TangentVector,
    f0: f64,
    grad_norm: f64,
    alpha0: f64,
    opts: &SolverOptions,
) -> Option<(ManifoldPoint, f64, f64)> {
    let mut alpha = alpha0;
    for _ in 0..opts.max_backtracks {
        match manifold::retract(x, eta, alpha) {
            Ok(candidate) => {
                let f_new = obj.value(&candidate);
                if f_new <= f0 - opts.armijo_c * alpha * (grad_norm * grad_norm) {
                    return Some((candidate, f_new, alpha));
                }
            }
            Err(_) => {} // zero column: shrink the step and retry
        }
        alpha *= opts.armijo_shrink;
    }
    None
}

/// Riemannian conjugate gradient on the augmented Lagrangian with fixed
/// multipliers. Returns when the gradient norm drops below `tol`, the
/// iteration cap is reached, or the line search stalls.
pub(crate) fn rcg_inner_loop(
    v0: &ManifoldPoint,
    obj: &AlmObjective<'_>,
    tol: f64,
    opts: &SolverOptions,
) -> (ManifoldPoint, RcgTrace) {
    let mut x = v0.clone();
    let mut f = obj.value(&x);
    let mut grad = obj.riemannian_gradient(&x);
    let mut grad_norm = grad.norm();

    let mut trace = RcgTrace {
        lagrangian: vec![f],
        grad_norm: vec![grad_norm],
        alpha: Vec::new(),
        iterations: 0,
        stalled: false,
        max_column_norm_error: x.feasibility_error(),
        max_extracted_power: max_extracted_power(&x, obj.problem),
    };

    let mut eta = grad.scaled(-1.0);
    let mut alpha_next = opts.alpha_init;
    let mut plateau_steps = 0usize;

    while grad_norm > tol && trace.iterations < opts.max_rcg_iterations {
        if manifold::inner(&grad, &eta) >= 0.0 {
            // conjugate direction lost descent; restart from steepest descent
            eta = grad.scaled(-1.0);
        }
        let accepted = match armijo_search(obj, &x, &eta, f, grad_norm, alpha_next, opts) {
            Some(step) => Some(step),
            None => {
                eta = grad.scaled(-1.0);
                armijo_search(obj, &x, &eta, f, grad_norm, opts.alpha_init, opts)
            }
        };
        let (x_new, f_new, alpha) = match accepted {
            Some(step) => step,
            None => {
                trace.stalled = true;
                break;
            }
        };
        // decreases below double-precision resolution of L mean the line
        // search can no longer measure progress; stop grinding
        if f - f_new <= 1e-14 * f.abs().max(1.0) {
            plateau_steps += 1;
        } else {
            plateau_steps = 0;
        }

        let grad_new = obj.riemannian_gradient(&x_new);
        let grad_old_t = manifold::transport(&x_new, &grad);
        let eta_t = manifold::transport(&x_new, &eta);
        let y = lin_comb(1.0, &grad_new, -1.0, &grad_old_t);

        // Hestenes-Stiefel mixing with steepest-descent safeguard
        let denom = manifold::inner(&eta_t, &y);
        let beta = if denom.abs() < 1e-14 {
            0.0
        } else {
            (manifold::inner(&grad_new, &y) / denom).max(0.0)
        };
        eta = lin_comb(-1.0, &grad_new, beta, &eta_t);

        // Barzilai-Borwein warm start for the next line search
        let s_norm_sq = manifold::inner(&eta_t, &eta_t) * alpha * alpha;
        let s_dot_y = manifold::inner(&eta_t, &y) * alpha;
        alpha_next = if s_dot_y > 0.0 && s_norm_sq > 0.0 {
            (s_norm_sq / s_dot_y).clamp(1e-10, 1e8)
        } else {
            (2.0 * alpha).clamp(1e-10, 1e8)
        };

        x = x_new;
        f = f_new;
        grad = grad_new;
        grad_norm = grad.norm();
        trace.lagrangian.push(f);
        trace.grad_norm.push(grad_norm);
        trace.alpha.push(alpha);
        trace.iterations += 1;
        trace.max_column_norm_error = trace.max_column_norm_error.max(x.feasibility_error());
        trace.max_extracted_power = trace
            .max_extracted_power
            .max(max_extracted_power(&x, obj.problem));
        if plateau_steps >= 3 {
            trace.stalled = true;
            break;
        }
    }
    (x, trace)
}

/// One ALM iteration within an outer FP iteration.
#[derive(Clone, Debug)]
pub struct AlmIterRecord {
    /// Penalty in force during the inner solve.
    pub rho: f64,
    /// Accuracy in force during the inner solve.
    pub epsilon: f64,
    /// Largest positive constraint violation after the inner solve, Watts.
    pub max_violation: f64,
    pub sigma: Vec<f64>,
    /// Multipliers after the clipped update.
    pub lambda: Vec<f64>,
    pub rcg: RcgTrace,
}

/// One outer FP iteration.
#[derive(Clone, Debug)]
pub struct OuterIterRecord {
    /// Sum rate of the extracted physical beamformer, bps/Hz.
    pub sum_rate: f64,
    /// Reduced objective after the auxiliary update.
    pub f_hat: f64,
    pub alm: Vec<AlmIterRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::IterationCap => "iteration-cap",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Full iterate history and exit diagnostics of one solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub outer: Vec<OuterIterRecord>,
    pub status: SolveStatus,
    /// All sensing constraints within tolerance at the final iterate.
    pub feasible: bool,
    /// Final constraint values (threshold minus gain), Watts.
    pub final_violations: Vec<f64>,
    pub final_lambda: Vec<f64>,
    pub final_rho: f64,
    /// Largest column-norm deviation over every accepted iterate.
    pub max_column_norm_error: f64,
    /// Largest extracted per-AP power over every accepted iterate, Watts.
    pub max_extracted_power: f64,
    pub outer_iterations: usize,
    pub alm_iterations: usize,
    pub rcg_iterations: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    /// Sum rate of the final iterate, bps/Hz.
    pub fn sum_rate(&self) -> f64 {
        self.outer.last().map(|r| r.sum_rate).unwrap_or(0.0)
    }

    /// Largest positive sensing violation at the final iterate, Watts.
    pub fn max_violation(&self) -> f64 {
        self.final_violations
            .iter()
            .fold(0.0f64, |a, &g| a.max(g.max(0.0)))
    }

    /// Targets that ended violated without a saturated multiplier; empty
    /// on a clean converged run.
    pub fn stationarity_warnings(&self, thresholds: &[f64], opts: &SolverOptions) -> Vec<usize> {
        self.final_violations
            .iter()
            .enumerate()
            .filter(|(n, &g)| {
                g > opts.violation_tol_rel * thresholds[*n]
                    && self.final_lambda[*n] < opts.lambda_max
            })
            .map(|(n, _)| n)
            .collect()
    }
}

fn solve_single<R: Rng + ?Sized>(
    problem: &LiftedProblem,
    opts: &SolverOptions,
    rng: &mut R,
) -> (BeamMatrix, SolveReport) {
    let start = Instant::now();
    let n_count = problem.num_targets();
    let ln2 = std::f64::consts::LN_2;

    let mut vt = manifold::random_point(problem.rows(), problem.num_aps(), rng);
    let mut mu = fp::update_mu(&vt, problem);
    let mut alm = AlmState::new(n_count, opts);
    let mut rate_prev: f64 = mu.0.iter().map(|g| g.ln_1p() / ln2).sum();

    let mut outer_records = Vec::new();
    let mut status = SolveStatus::IterationCap;
    let mut max_column_norm_error = vt.feasibility_error();
    let mut max_power = max_extracted_power(&vt, problem);
    let mut alm_total = 0usize;
    let mut rcg_total = 0usize;
    let mut last_alm_capped = false;
    // complementarity residual small enough to stop the multiplier loop
    let sigma_tol = problem
        .thresholds
        .iter()
        .fold(f64::INFINITY, |a, &g| a.min(g))
        .min(1.0)
        * opts.violation_tol_rel;

    for outer in 0..opts.max_outer_iterations {
        if opts.reset_alm_per_outer && outer > 0 {
            alm = AlmState::new(n_count, opts);
        }
        let mut alm_records = Vec::new();
        let mut capped = true;
        for _ in 0..opts.max_alm_iterations {
            let tol = alm.epsilon.max(opts.delta1);
            let obj = AlmObjective {
                problem,
                mu: &mu,
                lambda: &alm.lambda,
                rho: alm.rho,
            };
            let (vt_new, trace) = rcg_inner_loop(&vt, &obj, tol, opts);
            max_column_norm_error = max_column_norm_error.max(trace.max_column_norm_error);
            max_power = max_power.max(trace.max_extracted_power);
            rcg_total += trace.iterations;
            alm_total += 1;

            let constraints = fp::sensing_constraints(&vt_new, problem);
            let lambda_new = update_multipliers(
                &alm.lambda,
                alm.rho,
                &constraints,
                opts.lambda_min,
                opts.lambda_max,
            );
            let sigma_new: Vec<f64> = constraints
                .iter()
                .zip(lambda_new.iter())
                .map(|(&g, &l)| g.max(-l / alm.rho))
                .collect();
            let rho_next = update_penalty(
                alm.rho,
                alm.sigma.as_deref(),
                &sigma_new,
                opts.tau,
                opts.theta_rho,
            );
            let epsilon_next = (alm.epsilon * opts.theta_epsilon).max(opts.epsilon_min);
            let max_violation = constraints.iter().fold(0.0f64, |a, &g| a.max(g.max(0.0)));
            alm_records.push(AlmIterRecord {
                rho: alm.rho,
                epsilon: alm.epsilon,
                max_violation,
                sigma: sigma_new.clone(),
                lambda: lambda_new.clone(),
                rcg: trace,
            });

            let moved = {
                let diff = &vt_new.0 - &vt.0;
                fro_norm(&diff.view())
            };
            let inner_settled = {
                let rec = alm_records.last().expect("just pushed");
                rec.rcg.stalled || rec.rcg.grad_norm.last().copied().unwrap_or(0.0) <= tol
            };
            let sigma_settled = sigma_new.iter().all(|s| s.abs() <= sigma_tol);
            alm.lambda = lambda_new;
            alm.sigma = Some(sigma_new);
            alm.rho = rho_next;
            alm.epsilon = epsilon_next;
            vt = vt_new;
            if alm.epsilon <= opts.epsilon_min
                && (moved < opts.d_min || (sigma_settled && inner_settled))
            {
                capped = false;
                break;
            }
        }
        last_alm_capped = capped;

        mu = fp::update_mu(&vt, problem);
        let f_curr = fp::reduced_objective(&vt, &mu, problem);
        let sum_rate: f64 = mu.0.iter().map(|g| g.ln_1p() / ln2).sum();
        outer_records.push(OuterIterRecord {
            sum_rate,
            f_hat: f_curr,
            alm: alm_records,
        });
        // the recovered objective equals the sum rate at the updated
        // auxiliary variables, so the outer test runs on the rate scale
        let outer_tol = opts.delta2.max(opts.outer_rate_tol);
        if (sum_rate - rate_prev).abs() < outer_tol * (1.0 + sum_rate.abs()) {
            status = SolveStatus::Converged;
            break;
        }
        rate_prev = sum_rate;
    }

    let final_violations = fp::sensing_constraints(&vt, problem);
    let feasible = final_violations
        .iter()
        .zip(problem.thresholds.iter())
        .all(|(&g, &th)| g <= opts.violation_tol_rel * th);
    if !feasible && last_alm_capped && alm.rho / opts.rho0 >= opts.infeasible_rho_growth {
        status = SolveStatus::Infeasible;
    }

    let beam = fp::extract(&vt, problem.p_max, problem.num_users());
    let outer_iterations = outer_records.len();
    let report = SolveReport {
        outer: outer_records,
        status,
        feasible,
        final_violations,
        final_lambda: alm.lambda.clone(),
        final_rho: alm.rho,
        max_column_norm_error,
        max_extracted_power: max_power,
        outer_iterations,
        alm_iterations: alm_total,
        rcg_iterations: rcg_total,
        wall_time: start.elapsed(),
    };
    (beam, report)
}

/// Runs the full algorithm on one channel drop. Deterministic given the
/// RNG stream; multiple restarts consume the stream in order and the best
/// feasible run wins.
pub fn solve<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    rng: &mut R,
) -> Result<(BeamMatrix, SolveReport)> {
    config.validate()?;
    config.solver.validate()?;
    if channels.num_aps() != config.num_aps
        || channels.num_users() != config.num_users
        || channels.num_antennas() != config.num_antennas
        || channels.num_targets() != config.num_targets
    {
        return Err(Error::domain("channel dimensions do not match the scenario"));
    }
    let problem = LiftedProblem::new(
        channels,
        config.p_max,
        config.noise_power,
        &config.sensing_thresholds,
    );
    let opts = &config.solver;
    let mut best: Option<(BeamMatrix, SolveReport)> = None;
    for _ in 0..opts.restarts {
        let candidate = solve_single(&problem, opts, rng);
        let replace = match &best {
            None => true,
            Some((_, incumbent)) => {
                (candidate.1.feasible, candidate.1.sum_rate())
                    > (incumbent.feasible, incumbent.sum_rate())
            }
        };
        if replace {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn random_unit_tangent<R: Rng + ?Sized>(vt: &ManifoldPoint, rng: &mut R) -> TangentVector {
    loop {
        let ambient = Array2::from_shape_fn(vt.0.raw_dim(), |_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let z = manifold::project_to_tangent(vt, &ambient);
        let norm = z.norm();
        if norm > 1e-8 {
            return z.scaled(1.0 / norm);
        }
    }
}

fn directional_error(
    obj: &AlmObjective<'_>,
    vt: &ManifoldPoint,
    grad: &TangentVector,
    z: &TangentVector,
) -> f64 {
    let h = 1e-6;
    let plus = obj.value(&manifold::retract(vt, z, h).expect("tiny step"));
    let minus = obj.value(&manifold::retract(vt, z, -h).expect("tiny step"));
    let fd = (plus - minus) / (2.0 * h);
    let dd = manifold::inner(grad, z);
    (dd - fd).abs() / (dd.abs() + 1e-15)
}

fn max_directional_error<R: Rng + ?Sized>(
    obj: &AlmObjective<'_>,
    vt: &ManifoldPoint,
    grad: &TangentVector,
    num_dirs: usize,
    rng: &mut R,
) -> f64 {
    // a central difference of L resolves directional derivatives only
    // down to ~eps|L|/(2h); directions nearly orthogonal to the gradient
    // fall below that floor and carry no signal, so redraw them
    let h = 1e-6;
    let measurable = 4.0 * f64::EPSILON * (1.0 + obj.value(vt).abs()) / (2.0 * h) * 1e6;
    (0..num_dirs)
        .map(|_| {
            let mut z = random_unit_tangent(vt, rng);
            for _ in 0..32 {
                if manifold::inner(grad, &z).abs() >= measurable {
                    break;
                }
                z = random_unit_tangent(vt, rng);
            }
            directional_error(obj, vt, grad, &z)
        })
        .fold(0.0, f64::max)
}

/// Largest relative disagreement between the Riemannian gradient and a
/// central finite difference of the Lagrangian along random tangent
/// directions.
pub fn gradient_check<R: Rng + ?Sized>(
    vt: &ManifoldPoint,
    lambda: &[f64],
    rho: f64,
    mu: &AuxiliaryMu,
    problem: &LiftedProblem,
    num_dirs: usize,
    rng: &mut R,
) -> f64 {
    assert!(num_dirs >= 1);
    let obj = AlmObjective { problem, mu, lambda, rho };
    let grad = obj.riemannian_gradient(vt);
    max_directional_error(&obj, vt, &grad, num_dirs, rng)
}

/// Runs `gradient_check` on freshly drawn random instances of a scenario;
/// multipliers and penalty are randomized so both active and inactive
/// constraint branches are exercised.
pub fn gradient_check_scenario(
    config: &ScenarioConfig,
    num_instances: usize,
    num_dirs: usize,
    base_seed: u64,
) -> Result<f64> {
    use rand::SeedableRng;
    let mut worst = 0.0f64;
    for i in 0..num_instances {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(base_seed ^ i as u64);
        let channels = crate::scenario::draw_channels(config, &mut rng)?;
        let problem = LiftedProblem::new(
            &channels,
            config.p_max,
            config.noise_power,
            &config.sensing_thresholds,
        );
        let vt = manifold::random_point(problem.rows(), problem.num_aps(), &mut rng);
        let mu = fp::update_mu(&vt, &problem);
        let lambda: Vec<f64> = (0..config.num_targets)
            .map(|_| rng.random::<f64>() * 10.0)
            .collect();
        let rho = 1.0 + rng.random::<f64>() * 49.0;
        worst = worst.max(gradient_check(
            &vt, &lambda, rho, &mu, &problem, num_dirs, &mut rng,
        ));
    }
    Ok(worst)
}

/// Samples the Lagrangian over a tangent-plane grid: entry `(i, j)` is
/// `L_rho` at the retraction of `t1[i] d1 + t2[j] d2` from `vt`, with
/// `d1`, `d2` orthonormalized random tangent directions.
pub fn cost_surface<R: Rng + ?Sized>(
    vt: &ManifoldPoint,
    lambda: &[f64],
    rho: f64,
    mu: &AuxiliaryMu,
    problem: &LiftedProblem,
    t1: &[f64],
    t2: &[f64],
    rng: &mut R,
) -> Array2<f64> {
    let obj = AlmObjective { problem, mu, lambda, rho };
    let d1 = random_unit_tangent(vt, rng);
    let mut d2 = random_unit_tangent(vt, rng);
    let overlap = manifold::inner(&d1, &d2);
    d2 = lin_comb(1.0, &d2, -overlap, &d1);
    d2 = d2.scaled(1.0 / d2.norm());

    Array2::from_shape_fn((t1.len(), t2.len()), |(i, j)| {
        let step = lin_comb(t1[i], &d1, t2[j], &d2);
        let point = manifold::retract(vt, &step, 1.0).expect("grid step kept columns nonzero");
        obj.value(&point)
    })
}
