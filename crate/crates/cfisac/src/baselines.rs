//! Sensing-ignorant closed-form beamformers and an exhaustive grid oracle
//! for tiny instances.
//!
//! ZF and MMSE only ever read the user channels; target geometry cannot
//! influence them. Both scale each AP to its full power budget.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::solve_square;
use crate::scenario::{self, BeamMatrix, ChannelSet, ScenarioConfig};

/// Closed-form baseline selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Zf,
    Mmse,
}

fn channel_matrix(channels: &ChannelSet, m: usize) -> Array2<Complex64> {
    let (k_count, l_count) = (channels.num_users(), channels.num_antennas());
    Array2::from_shape_fn((l_count, k_count), |(l, k)| channels.h[[m, k, l]])
}

fn stack_and_scale(
    per_ap: Vec<Array2<Complex64>>,
    l_count: usize,
    k_count: usize,
    p_max: f64,
) -> BeamMatrix {
    let m_count = per_ap.len();
    let mut v = Array2::zeros((l_count * k_count, m_count));
    for (m, beams) in per_ap.iter().enumerate() {
        let power: f64 = beams.iter().map(|z| z.norm_sqr()).sum();
        let scale = (p_max / power).sqrt();
        for k in 0..k_count {
            for l in 0..l_count {
                v[[k * l_count + l, m]] = beams[[l, k]] * scale;
            }
        }
    }
    BeamMatrix {
        v,
        normalized: false,
    }
}

/// Zero-forcing beamformer `H_m (H_m^H H_m)^{-1}` per AP, jointly scaled
/// so each AP transmits exactly `p_max`.
pub fn zf_beamformer(channels: &ChannelSet, p_max: f64) -> Result<BeamMatrix> {
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    if l_count < k_count {
        return Err(Error::domain(format!(
            "zero-forcing needs at least as many antennas as users ({l_count} < {k_count})"
        )));
    }
    let mut per_ap = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let h = channel_matrix(channels, m);
        let mut gram = Array2::zeros((k_count, k_count));
        for a in 0..k_count {
            for b in 0..k_count {
                gram[[a, b]] = crate::linalg::herm_dot(h.column(a), h.column(b));
            }
        }
        let identity = Array2::from_shape_fn((k_count, k_count), |(a, b)| {
            Complex64::new(if a == b { 1.0 } else { 0.0 }, 0.0)
        });
        let inv = solve_square(&gram, &identity).ok_or(Error::SingularChannel { ap: m })?;
        per_ap.push(h.dot(&inv));
    }
    Ok(stack_and_scale(per_ap, l_count, k_count, p_max))
}

/// MMSE beamformer `H_m (H_m^H H_m + noise I)^{-1}` per AP, scaled to full
/// per-AP power. The regularized Gram matrix is positive definite for any
/// positive noise power.
pub fn mmse_beamformer(channels: &ChannelSet, noise_power: f64, p_max: f64) -> BeamMatrix {
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    let mut per_ap = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let h = channel_matrix(channels, m);
        let mut gram = Array2::zeros((k_count, k_count));
        for a in 0..k_count {
            for b in 0..k_count {
                gram[[a, b]] = crate::linalg::herm_dot(h.column(a), h.column(b));
            }
            gram[[a, a]] += Complex64::new(noise_power, 0.0);
        }
        let identity = Array2::from_shape_fn((k_count, k_count), |(a, b)| {
            Complex64::new(if a == b { 1.0 } else { 0.0 }, 0.0)
        });
        let inv = solve_square(&gram, &identity)
            .expect("regularized Gram matrix is positive definite");
        per_ap.push(h.dot(&inv));
    }
    stack_and_scale(per_ap, l_count, k_count, p_max)
}

/// Exhaustively searches full-power beamformers on a phase/magnitude grid,
/// discarding sensing-infeasible points, and returns the best feasible
/// beamformer with its sum rate.
///
/// Each AP column is a `sqrt(p_max)`-scaled unit vector, parameterized by
/// hyperspherical magnitude angles, per-entry relative phases, and one
/// lead phase per column after the first (a single global phase is
/// irrelevant to every metric). Refuses instances whose total real
/// dimension `2 L K M` exceeds 6.
pub fn grid_search_oracle(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    resolution: usize,
) -> Result<(BeamMatrix, f64)> {
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    let dim = l_count * k_count;
    let real_dim = 2 * dim * m_count;
    if real_dim > 6 {
        return Err(Error::OracleRefused(format!(
            "real dimension {real_dim} exceeds 6; exhaustive search would not terminate"
        )));
    }
    if resolution < 16 {
        return Err(Error::OracleRefused(format!(
            "resolution {resolution} below the minimum of 16 points per dimension"
        )));
    }

    // per column: (dim - 1) magnitude angles + (dim - 1) relative phases,
    // plus a lead phase for every column after the first
    let params_per_col = 2 * (dim - 1);
    let num_params = params_per_col * m_count + m_count.saturating_sub(1);
    let total: u64 = (resolution as u64)
        .checked_pow(num_params as u32)
        .ok_or_else(|| Error::OracleRefused("grid size overflow".into()))?;

    let amp = config.p_max.sqrt();
    let mut digits = vec![0usize; num_params];
    let mut best: Option<(Array2<Complex64>, f64)> = None;

    for index in 0..total.max(1) {
        let mut rem = index;
        for d in digits.iter_mut() {
            *d = (rem % resolution as u64) as usize;
            rem /= resolution as u64;
        }

        let mut v = Array2::zeros((dim, m_count));
        let mut cursor = 0;
        for m in 0..m_count {
            // hyperspherical magnitudes on the unit sphere
            let mut radii = vec![1.0f64; dim];
            let mut sin_product = 1.0;
            for r in radii.iter_mut().take(dim - 1) {
                let psi = digits[cursor] as f64 / (resolution - 1) as f64
                    * std::f64::consts::FRAC_PI_2;
                cursor += 1;
                *r = sin_product * psi.cos();
                sin_product *= psi.sin();
            }
            radii[dim - 1] = sin_product;

            let mut phases = vec![0.0f64; dim];
            for p in phases.iter_mut().skip(1) {
                *p = digits[cursor] as f64 / resolution as f64 * std::f64::consts::TAU;
                cursor += 1;
            }
            let lead = if m > 0 {
                let chi = digits[cursor] as f64 / resolution as f64 * std::f64::consts::TAU;
                cursor += 1;
                chi
            } else {
                0.0
            };
            for d in 0..dim {
                v[[d, m]] = Complex64::from_polar(radii[d] * amp, lead + phases[d]);
            }
        }

        let beam = BeamMatrix {
            v,
            normalized: false,
        };
        let feasible = (0..channels.num_targets()).all(|n| {
            scenario::beampattern_gain(&beam, channels, n, config.p_max).unwrap()
                >= config.sensing_thresholds[n]
        });
        if !feasible {
            continue;
        }
        let rate = scenario::sum_rate(&beam, channels, config.noise_power, config.p_max)?;
        if best.as_ref().map_or(true, |(_, r)| rate > *r) {
            best = Some((beam.v, rate));
        }
    }

    let (v, rate) = best.ok_or_else(|| {
        Error::domain("no sensing-feasible point on the oracle grid; thresholds too tight")
    })?;
    Ok((
        BeamMatrix {
            v,
            normalized: false,
        },
        rate,
    ))
}

/// Angle between two complex directions, ignoring a global phase.
pub fn direction_angle(a: ndarray::ArrayView1<'_, Complex64>, b: ndarray::ArrayView1<'_, Complex64>) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let overlap = crate::linalg::herm_dot(a, b).norm() / (na * nb);
    overlap.min(1.0).acos()
}
