//! Fractional-programming layer: auxiliary SINR variables, the lifted
//! unit-column problem data, the reduced objective and sensing
//! constraints, and the mapping between the physical beamformer and its
//! manifold form.
//!
//! Lifting appends one slack entry per user block to every AP column and
//! normalizes by `sqrt(p_max)`, so the per-AP power inequality becomes a
//! unit-column equality. Extended channels and steering vectors carry a
//! zero in the slack slot, which keeps slack entries inert in every inner
//! product.

use ndarray::{s, Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::herm_dot;
use crate::manifold::ManifoldPoint;
use crate::scenario::{BeamMatrix, ChannelSet};

/// Auxiliary fractional-programming variables, one per user; after an
/// update each entry equals that user's current SINR.
#[derive(Clone, Debug)]
pub struct AuxiliaryMu(pub Vec<f64>);

impl AuxiliaryMu {
    /// The shifted weight `1 + mu_k`.
    pub fn shifted(&self, k: usize) -> f64 {
        1.0 + self.0[k]
    }
}

/// Problem data for the lifted formulation: extended channels and steering
/// vectors (scaled by `sqrt(p_max)`, zero slack slot), thresholds, noise.
#[derive(Clone, Debug)]
pub struct LiftedProblem {
    /// `h_hat[(m, k, ..)]`, length L+1.
    pub h_hat: Array3<Complex64>,
    /// `a_hat[(m, n, ..)]`, length L+1.
    pub a_hat: Array3<Complex64>,
    /// Sensing gain thresholds, Watts.
    pub thresholds: Vec<f64>,
    pub noise_power: f64,
    pub p_max: f64,
}

impl LiftedProblem {
    pub fn new(
        channels: &ChannelSet,
        p_max: f64,
        noise_power: f64,
        thresholds: &[f64],
    ) -> Self {
        let (m_count, k_count, l_count, n_count) = (
            channels.num_aps(),
            channels.num_users(),
            channels.num_antennas(),
            channels.num_targets(),
        );
        assert_eq!(thresholds.len(), n_count, "one threshold per target");
        let amp = p_max.sqrt();
        let mut h_hat = Array3::zeros((m_count, k_count, l_count + 1));
        for m in 0..m_count {
            for k in 0..k_count {
                for l in 0..l_count {
                    h_hat[[m, k, l]] = channels.h[[m, k, l]] * amp;
                }
            }
        }
        let mut a_hat = Array3::zeros((m_count, n_count, l_count + 1));
        for m in 0..m_count {
            for n in 0..n_count {
                for l in 0..l_count {
                    a_hat[[m, n, l]] = channels.steering[[m, n, l]] * amp;
                }
            }
        }
        LiftedProblem {
            h_hat,
            a_hat,
            thresholds: thresholds.to_vec(),
            noise_power,
            p_max,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.h_hat.shape()[0]
    }
    pub fn num_users(&self) -> usize {
        self.h_hat.shape()[1]
    }
    pub fn num_targets(&self) -> usize {
        self.a_hat.shape()[1]
    }
    /// Rows of one user block on the manifold (antennas plus slack).
    pub fn block_len(&self) -> usize {
        self.h_hat.shape()[2]
    }
    /// Total rows of a manifold point.
    pub fn rows(&self) -> usize {
        self.block_len() * self.num_users()
    }
}

/// Coherent user couplings on the lifted point.
pub(crate) struct Couplings {
    /// `c[(k, i)] = sum_m h_hat_mk^H vt[block i, col m]`.
    pub c: Array2<Complex64>,
    /// `d_k = sum_i |c_ki|^2 + noise` (sum over all users including k).
    pub denom: Vec<f64>,
}

pub(crate) fn couplings(vt: &ManifoldPoint, problem: &LiftedProblem) -> Couplings {
    let (m_count, k_count, b) = (problem.num_aps(), problem.num_users(), problem.block_len());
    debug_assert_eq!(vt.0.nrows(), problem.rows());
    debug_assert_eq!(vt.0.ncols(), m_count);
    let mut c = Array2::zeros((k_count, k_count));
    for k in 0..k_count {
        for i in 0..k_count {
            let mut acc = Complex64::default();
            for m in 0..m_count {
                acc += herm_dot(
                    problem.h_hat.slice(s![m, k, ..]),
                    vt.0.slice(s![i * b..(i + 1) * b, m]),
                );
            }
            c[[k, i]] = acc;
        }
    }
    let denom = (0..k_count)
        .map(|k| {
            (0..k_count).map(|i| c[[k, i]].norm_sqr()).sum::<f64>() + problem.noise_power
        })
        .collect();
    Couplings { c, denom }
}

/// Steering projections `b[(m, k, n)] = a_hat_mn^H vt[block k, col m]`.
pub(crate) fn target_projections(vt: &ManifoldPoint, problem: &LiftedProblem) -> Array3<Complex64> {
    let (m_count, k_count, n_count, b) = (
        problem.num_aps(),
        problem.num_users(),
        problem.num_targets(),
        problem.block_len(),
    );
    let mut out = Array3::zeros((m_count, k_count, n_count));
    for m in 0..m_count {
        for n in 0..n_count {
            let a = problem.a_hat.slice(s![m, n, ..]);
            for k in 0..k_count {
                out[[m, k, n]] = herm_dot(a, vt.0.slice(s![k * b..(k + 1) * b, m]));
            }
        }
    }
    out
}

/// Optimal auxiliary update: each entry becomes the current lifted SINR.
pub fn update_mu(vt: &ManifoldPoint, problem: &LiftedProblem) -> AuxiliaryMu {
    let coup = couplings(vt, problem);
    let k_count = problem.num_users();
    let mu = (0..k_count)
        .map(|k| {
            let signal = coup.c[[k, k]].norm_sqr();
            let interference: f64 = (0..k_count)
                .filter(|&i| i != k)
                .map(|i| coup.c[[k, i]].norm_sqr())
                .sum();
            signal / (interference + problem.noise_power)
        })
        .collect();
    AuxiliaryMu(mu)
}

/// Lifts a physical beamformer onto the manifold: normalize by
/// `sqrt(p_max)` and fill the per-user slack slots so every column has
/// exactly unit norm (residual power split equally, zero phase).
pub fn lift(beam: &BeamMatrix, p_max: f64, num_users: usize) -> Result<ManifoldPoint> {
    let rows = beam.v.nrows();
    assert_eq!(rows % num_users, 0, "beam rows must split into user blocks");
    let l_count = rows / num_users;
    let m_count = beam.v.ncols();
    let scale = beam.amplitude_scale(p_max);
    let mut out = Array2::zeros(((l_count + 1) * num_users, m_count));
    for m in 0..m_count {
        let power: f64 = beam
            .v
            .column(m)
            .iter()
            .map(|z| (z * scale).norm_sqr())
            .sum();
        if power > p_max * (1.0 + 1e-9) {
            return Err(Error::PowerViolation {
                ap: m,
                power,
                budget: p_max,
            });
        }
        let slack = ((1.0 - (power / p_max).min(1.0)) / num_users as f64).sqrt();
        for k in 0..num_users {
            for l in 0..l_count {
                out[[k * (l_count + 1) + l, m]] =
                    beam.v[[k * l_count + l, m]] * (scale / p_max.sqrt());
            }
            out[[k * (l_count + 1) + l_count, m]] = Complex64::new(slack, 0.0);
        }
        // enforce the unit-column invariant exactly against rounding
        let norm: f64 = out.column(m).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.column_mut(m).mapv_inplace(|z| z / norm);
        }
    }
    Ok(ManifoldPoint(out))
}

/// Drops slack rows and rescales to the physical beamformer.
pub fn extract(vt: &ManifoldPoint, p_max: f64, num_users: usize) -> BeamMatrix {
    let rows = vt.0.nrows();
    assert_eq!(rows % num_users, 0, "manifold rows must split into user blocks");
    let block = rows / num_users;
    let l_count = block - 1;
    let m_count = vt.0.ncols();
    let amp = p_max.sqrt();
    let mut v = Array2::zeros((l_count * num_users, m_count));
    for m in 0..m_count {
        for k in 0..num_users {
            for l in 0..l_count {
                v[[k * l_count + l, m]] = vt.0[[k * block + l, m]] * amp;
            }
        }
    }
    BeamMatrix {
        v,
        normalized: false,
    }
}

/// Reduced objective of the lifted problem (to be minimized):
/// `-sum_k (1 + mu_k) |c_kk|^2 / (sum_i |c_ki|^2 + noise)`.
pub fn reduced_objective(vt: &ManifoldPoint, mu: &AuxiliaryMu, problem: &LiftedProblem) -> f64 {
    let coup = couplings(vt, problem);
    -(0..problem.num_users())
        .map(|k| mu.shifted(k) * coup.c[[k, k]].norm_sqr() / coup.denom[k])
        .sum::<f64>()
}

/// Sensing constraint value for target `n`: threshold minus lifted
/// beampattern gain; feasible iff nonpositive.
pub fn sensing_constraint(vt: &ManifoldPoint, n: usize, problem: &LiftedProblem) -> f64 {
    let (m_count, k_count, b) = (problem.num_aps(), problem.num_users(), problem.block_len());
    let mut gain = 0.0;
    for m in 0..m_count {
        let a = problem.a_hat.slice(s![m, n, ..]);
        for k in 0..k_count {
            gain += herm_dot(a, vt.0.slice(s![k * b..(k + 1) * b, m])).norm_sqr();
        }
    }
    problem.thresholds[n] - gain
}

/// All sensing constraint values.
pub fn sensing_constraints(vt: &ManifoldPoint, problem: &LiftedProblem) -> Vec<f64> {
    (0..problem.num_targets())
        .map(|n| sensing_constraint(vt, n, problem))
        .collect()
}

/// Lagrangian-dual-transform objective on the physical beamformer:
/// `(1/ln 2) sum_k [ln(1 + mu_k) + (sinr_k - mu_k) / (1 + sinr_k)]`.
/// Maximized over `mu` at `mu = sinr`, where it recovers the sum rate.
pub fn dual_objective(
    beam: &BeamMatrix,
    mu: &AuxiliaryMu,
    channels: &ChannelSet,
    noise_power: f64,
    p_max: f64,
) -> Result<f64> {
    let k_count = channels.num_users();
    assert_eq!(mu.0.len(), k_count, "one auxiliary variable per user");
    if mu.0.iter().any(|&m| m < 0.0) {
        return Err(Error::domain("auxiliary variables must be nonnegative"));
    }
    let mut total = 0.0;
    for k in 0..k_count {
        let gamma = crate::scenario::sinr(beam, channels, k, noise_power, p_max)?;
        total += mu.0[k].ln_1p() + (gamma - mu.0[k]) / (1.0 + gamma);
    }
    Ok(total / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        draw_channels, per_ap_power, sum_rate, ScenarioConfig, TargetPlacement, UserPlacement,
    };
    use crate::solver::SolverOptions;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn test_config(m: usize, l: usize, k: usize, n: usize) -> ScenarioConfig {
        ScenarioConfig {
            num_aps: m,
            num_antennas: l,
            num_users: k,
            num_targets: n,
            p_max: 1.0,
            noise_power: 1e-11,
            sensing_thresholds: vec![0.1; n],
            pathloss_ref: 1e-3,
            ref_distance: 1.0,
            pathloss_exponent: 2.0,
            area: 500.0,
            ap_positions: (0..m)
                .map(|i| [10.0 + 70.0 * i as f64, 10.0 + 70.0 * i as f64])
                .collect(),
            users: UserPlacement::Uniform,
            targets: TargetPlacement::Uniform,
            rng_seed: 7,
            solver: SolverOptions::default(),
        }
    }

    fn setup(
        m: usize,
        l: usize,
        k: usize,
        n: usize,
        seed: u64,
    ) -> (ChannelSet, LiftedProblem) {
        let config = test_config(m, l, k, n);
        let channels = draw_channels(&config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let problem = LiftedProblem::new(
            &channels,
            config.p_max,
            config.noise_power,
            &config.sensing_thresholds,
        );
        (channels, problem)
    }

    fn random_physical_beam<R: Rng>(
        l: usize,
        k: usize,
        m: usize,
        p_max: f64,
        rng: &mut R,
    ) -> BeamMatrix {
        // random directions, each AP at a random fraction of the budget
        let mut v = Array2::from_shape_fn((l * k, m), |_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        for mut col in v.columns_mut() {
            let power: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let target = p_max * (0.2 + 0.75 * rng.random::<f64>());
            let s = (target / power).sqrt();
            col.mapv_inplace(|z| z * s);
        }
        BeamMatrix {
            v,
            normalized: false,
        }
    }

    #[test]
    fn lifted_vectors_scaled_and_zero_slack() {
        let config = test_config(2, 4, 2, 2);
        let channels = draw_channels(&config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let p_max = 2.5;
        let problem = LiftedProblem::new(&channels, p_max, config.noise_power, &[0.1, 0.1]);
        for m in 0..2 {
            for k in 0..2 {
                assert_eq!(problem.h_hat[[m, k, 4]], Complex64::default());
                let full: f64 = problem
                    .h_hat
                    .slice(s![m, k, ..])
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum();
                let base: f64 = channels.h.slice(s![m, k, ..]).iter().map(|z| z.norm_sqr()).sum();
                assert!((full - p_max * base).abs() <= 1e-12 * full.max(1e-300));
            }
            for n in 0..2 {
                assert_eq!(problem.a_hat[[m, n, 4]], Complex64::default());
                let norm: f64 = problem
                    .a_hat
                    .slice(s![m, n, ..])
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum();
                assert!((norm - p_max).abs() <= 1e-12 * p_max);
            }
        }
    }

    #[test]
    fn lift_zero_beam_is_slack_only() {
        let beam = BeamMatrix::zeros(3, 2, 2);
        let vt = lift(&beam, 1.0, 2).unwrap();
        assert!(vt.feasibility_error() < 1e-12);
        for m in 0..2 {
            for k in 0..2 {
                for l in 0..3 {
                    assert_eq!(vt.0[[k * 4 + l, m]], Complex64::default());
                }
                let slack = vt.0[[k * 4 + 3, m]];
                assert!((slack.re - (0.5f64).sqrt()).abs() < 1e-12);
                assert_eq!(slack.im, 0.0);
            }
        }
    }

    #[test]
    fn lift_full_power_has_zero_slack() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        for mut col in beam.v.columns_mut() {
            let power: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            col.mapv_inplace(|z| z / power.sqrt());
        }
        let vt = lift(&beam, 1.0, 2).unwrap();
        for m in 0..2 {
            for k in 0..2 {
                assert!(vt.0[[k * 4 + 3, m]].norm() < 1e-7);
            }
        }
        assert!(vt.feasibility_error() < 1e-12);
    }

    #[test]
    fn lift_rejects_power_violation() {
        let mut beam = BeamMatrix::zeros(2, 1, 1);
        beam.v[[0, 0]] = Complex64::new(1.5, 0.0);
        assert!(matches!(
            lift(&beam, 1.0, 1),
            Err(Error::PowerViolation { ap: 0, .. })
        ));
    }

    #[test]
    fn lift_extract_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beam = random_physical_beam(4, 2, 3, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let back = extract(&vt, 1.0, 2);
        for (a, b) in beam.v.iter().zip(back.v.iter()) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-12));
        }
    }

    #[test]
    fn extract_slack_only_is_zero() {
        let beam = BeamMatrix::zeros(2, 2, 1);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let back = extract(&vt, 1.0, 2);
        assert!(back.v.iter().all(|z| z.norm_sqr() == 0.0));
    }

    #[test]
    fn extract_power_complements_slack_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let back = extract(&vt, 1.0, 2);
        for m in 0..2 {
            let slack_energy: f64 = (0..2).map(|k| vt.0[[k * 4 + 3, m]].norm_sqr()).sum();
            let power = per_ap_power(&back, m, 1.0).unwrap();
            assert!((power - (1.0 - slack_energy)).abs() < 1e-12);
        }
    }

    #[test]
    fn mu_update_zero_user_rows() {
        let (_, problem) = setup(2, 3, 2, 1, 5);
        let beam = BeamMatrix::zeros(3, 2, 2);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let mu = update_mu(&vt, &problem);
        assert_eq!(mu.0, vec![0.0, 0.0]);
    }

    #[test]
    fn mu_update_single_link_analytic() {
        let (channels, problem) = setup(1, 3, 1, 0, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let beam = random_physical_beam(3, 1, 1, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 1).unwrap();
        let mu = update_mu(&vt, &problem);
        let mut inner = Complex64::default();
        for l in 0..3 {
            inner += channels.h[[0, 0, l]].conj() * beam.v[[l, 0]];
        }
        let want = inner.norm_sqr() / problem.noise_power;
        assert!((mu.0[0] - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn mu_matches_physical_sinr() {
        let (channels, problem) = setup(2, 4, 2, 1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let beam = random_physical_beam(4, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let mu = update_mu(&vt, &problem);
        for k in 0..2 {
            let gamma = crate::scenario::sinr(&beam, &channels, k, 1e-11, 1.0).unwrap();
            assert!((mu.0[k] - gamma).abs() <= 1e-10 * gamma.max(1.0));
        }
    }

    #[test]
    fn reduced_objective_slack_only_is_zero() {
        let (_, problem) = setup(2, 3, 2, 1, 10);
        let vt = lift(&BeamMatrix::zeros(3, 2, 2), 1.0, 2).unwrap();
        let mu = AuxiliaryMu(vec![1.0, 2.0]);
        assert_eq!(reduced_objective(&vt, &mu, &problem), 0.0);
    }

    #[test]
    fn reduced_objective_single_user_collapse() {
        let (_, problem) = setup(1, 2, 1, 0, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let beam = random_physical_beam(2, 1, 1, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 1).unwrap();
        let mu = AuxiliaryMu(vec![3.0]);
        let coup = couplings(&vt, &problem);
        let s = coup.c[[0, 0]].norm_sqr();
        let want = -4.0 * s / (s + problem.noise_power);
        let got = reduced_objective(&vt, &mu, &problem);
        assert!((got - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn reduced_objective_matches_scalar_oracle() {
        let (_, problem) = setup(2, 3, 2, 1, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let mu = AuxiliaryMu(vec![0.7, 2.5]);
        let got = reduced_objective(&vt, &mu, &problem);

        // nested-loop recomputation with plain scalar arithmetic
        let b = 4;
        let mut want = 0.0;
        for k in 0..2 {
            let mut powers = [0.0f64; 2];
            for i in 0..2 {
                let (mut re, mut im) = (0.0, 0.0);
                for m in 0..2 {
                    for r in 0..b {
                        let hh = problem.h_hat[[m, k, r]];
                        let vv = vt.0[[i * b + r, m]];
                        re += hh.re * vv.re + hh.im * vv.im;
                        im += hh.re * vv.im - hh.im * vv.re;
                    }
                }
                powers[i] = re * re + im * im;
            }
            let denom = powers[0] + powers[1] + problem.noise_power;
            want -= (1.0 + mu.0[k]) * powers[k] / denom;
        }
        assert!((got - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn sensing_constraint_slack_only_is_threshold() {
        let (_, problem) = setup(2, 3, 1, 2, 15);
        let vt = lift(&BeamMatrix::zeros(3, 1, 2), 1.0, 1).unwrap();
        for n in 0..2 {
            assert_eq!(sensing_constraint(&vt, n, &problem), problem.thresholds[n]);
        }
    }

    #[test]
    fn sensing_constraint_zero_threshold_never_positive() {
        let (_, mut problem) = setup(2, 3, 2, 2, 16);
        problem.thresholds = vec![0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        for n in 0..2 {
            assert!(sensing_constraint(&vt, n, &problem) <= 0.0);
        }
    }

    #[test]
    fn sensing_constraint_consistent_with_physical_gain() {
        let (channels, problem) = setup(2, 4, 2, 3, 18);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let beam = random_physical_beam(4, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        for n in 0..3 {
            let gain = crate::scenario::beampattern_gain(&beam, &channels, n, 1.0).unwrap();
            let got = sensing_constraint(&vt, n, &problem);
            let want = problem.thresholds[n] - gain;
            assert!((got - want).abs() <= 1e-12 * gain.max(1.0));
        }
    }

    #[test]
    fn slack_entries_are_inert() {
        let (_, problem) = setup(2, 3, 2, 2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        // rotate slack phases and redistribute slack magnitude between the
        // two slack slots of each column, preserving column norms
        let mut twisted = vt.clone();
        for m in 0..2 {
            let e0 = twisted.0[[3, m]].norm_sqr();
            let e1 = twisted.0[[7, m]].norm_sqr();
            let total = e0 + e1;
            twisted.0[[3, m]] = Complex64::from_polar((0.9 * total).sqrt(), 1.3);
            twisted.0[[7, m]] = Complex64::from_polar((0.1 * total).sqrt(), -2.1);
        }
        assert!(twisted.feasibility_error() < 1e-12);
        let mu = AuxiliaryMu(vec![0.4, 1.1]);
        assert_eq!(
            reduced_objective(&vt, &mu, &problem),
            reduced_objective(&twisted, &mu, &problem)
        );
        for n in 0..2 {
            assert_eq!(
                sensing_constraint(&vt, n, &problem),
                sensing_constraint(&twisted, n, &problem)
            );
        }
    }

    #[test]
    fn dual_objective_recovers_sum_rate_at_optimum() {
        let (channels, problem) = setup(2, 4, 2, 0, 22);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let beam = random_physical_beam(4, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let mu = update_mu(&vt, &problem);
        let dual = dual_objective(&beam, &mu, &channels, 1e-11, 1.0).unwrap();
        let rate = sum_rate(&beam, &channels, 1e-11, 1.0).unwrap();
        assert!((dual - rate).abs() <= 1e-10 * (1.0 + rate.abs()));
    }

    #[test]
    fn dual_objective_zero_case() {
        let (channels, _) = setup(1, 2, 1, 0, 24);
        let beam = BeamMatrix::zeros(2, 1, 1);
        let mu = AuxiliaryMu(vec![0.0]);
        assert_eq!(
            dual_objective(&beam, &mu, &channels, 1e-11, 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn dual_objective_concave_in_mu() {
        let (channels, _) = setup(2, 3, 2, 0, 25);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        for _ in 0..20 {
            let a = AuxiliaryMu((0..2).map(|_| rng.random::<f64>() * 10.0).collect());
            let b = AuxiliaryMu((0..2).map(|_| rng.random::<f64>() * 10.0).collect());
            let mid = AuxiliaryMu(
                a.0.iter()
                    .zip(b.0.iter())
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect(),
            );
            let fa = dual_objective(&beam, &a, &channels, 1e-11, 1.0).unwrap();
            let fb = dual_objective(&beam, &b, &channels, 1e-11, 1.0).unwrap();
            let fm = dual_objective(&beam, &mid, &channels, 1e-11, 1.0).unwrap();
            assert!(fm >= 0.5 * (fa + fb) - 1e-9 * (1.0 + fa.abs() + fb.abs()));
        }
    }

    #[test]
    fn dual_objective_maximized_at_sinr() {
        let (channels, problem) = setup(2, 3, 2, 0, 27);
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let star = update_mu(&vt, &problem);
        let base = dual_objective(&beam, &star, &channels, 1e-11, 1.0).unwrap();
        for k in 0..2 {
            for delta in [-1e-3, 1e-3] {
                let mut perturbed = star.0.clone();
                perturbed[k] = (perturbed[k] + delta).max(0.0);
                let val =
                    dual_objective(&beam, &AuxiliaryMu(perturbed), &channels, 1e-11, 1.0).unwrap();
                assert!(val <= base + 1e-12 * (1.0 + base.abs()));
            }
        }
    }

    #[test]
    fn reduced_objective_global_phase_invariant() {
        let (_, problem) = setup(2, 3, 2, 1, 29);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let beam = random_physical_beam(3, 2, 2, 1.0, &mut rng);
        let vt = lift(&beam, 1.0, 2).unwrap();
        let rotated = ManifoldPoint(vt.0.mapv(|z| z * Complex64::from_polar(1.0, 0.77)));
        let mu = AuxiliaryMu(vec![1.0, 0.2]);
        let a = reduced_objective(&vt, &mu, &problem);
        let b = reduced_objective(&rotated, &mu, &problem);
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }
}
