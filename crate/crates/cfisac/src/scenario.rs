//! Network scenario, random channel generation, and performance metrics.
//!
//! A scenario is a cell-free network of `M` multi-antenna access points
//! jointly serving `K` single-antenna users while illuminating `N` sensing
//! targets. Channels to users are Rayleigh with a distance power-law
//! path-loss; channels toward targets are line-of-sight steering vectors.
//! All powers are linear Watts; dBm appears only at the config/report
//! boundary.

use ndarray::{s, Array1, Array2, Array3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::herm_dot;
use crate::solver::SolverOptions;

/// User placement: explicit coordinates or uniform over the square area.
#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum UserPlacement {
    Uniform,
    Positions(Vec<[f64; 2]>),
}

/// Target placement: uniform, explicit coordinates, or explicit per-AP
/// angle lists in degrees (`angles[m][n]`, used verbatim).
#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum TargetPlacement {
    Uniform,
    Positions(Vec<[f64; 2]>),
    AnglesDeg(Vec<Vec<f64>>),
}

/// Full experiment scenario: network sizes, powers, geometry, and solver
/// options. Immutable after construction.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioConfig {
    pub num_aps: usize,
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_targets: usize,
    /// Per-AP transmit power budget, Watts.
    #[serde(rename = "p_max_w")]
    pub p_max: f64,
    /// Receiver noise power, Watts (common to all users).
    #[serde(rename = "noise_power_w")]
    pub noise_power: f64,
    /// Sensing beampattern-gain thresholds, Watts, one per target.
    #[serde(rename = "sensing_thresholds_w")]
    pub sensing_thresholds: Vec<f64>,
    /// Linear path-loss gain at the reference distance.
    #[serde(rename = "pathloss_ref_linear")]
    pub pathloss_ref: f64,
    /// Reference distance, meters.
    #[serde(rename = "ref_distance_m")]
    pub ref_distance: f64,
    pub pathloss_exponent: f64,
    /// Side of the square deployment area, meters.
    #[serde(rename = "area_m")]
    pub area: f64,
    pub ap_positions: Vec<[f64; 2]>,
    pub users: UserPlacement,
    pub targets: TargetPlacement,
    pub rng_seed: u64,
    pub solver: SolverOptions,
}

impl ScenarioConfig {
    /// Checks dimension and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        if self.num_aps == 0 || self.num_antennas == 0 || self.num_users == 0 {
            return Err(Error::domain("num_aps, num_antennas, num_users must be >= 1"));
        }
        if !(self.p_max > 0.0) {
            return Err(Error::domain("p_max must be positive"));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::domain("noise_power must be positive"));
        }
        if self.sensing_thresholds.len() != self.num_targets {
            return Err(Error::domain(format!(
                "expected {} sensing thresholds, got {}",
                self.num_targets,
                self.sensing_thresholds.len()
            )));
        }
        if self.sensing_thresholds.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::domain("sensing thresholds must be positive"));
        }
        if !(self.pathloss_ref > 0.0) || !(self.ref_distance > 0.0) {
            return Err(Error::domain("pathloss reference gain and distance must be positive"));
        }
        if self.ap_positions.len() != self.num_aps {
            return Err(Error::domain(format!(
                "expected {} AP positions, got {}",
                self.num_aps,
                self.ap_positions.len()
            )));
        }
        match &self.users {
            UserPlacement::Positions(p) if p.len() != self.num_users => {
                return Err(Error::domain(format!(
                    "expected {} user positions, got {}",
                    self.num_users,
                    p.len()
                )));
            }
            UserPlacement::Uniform if !(self.area > 0.0) => {
                return Err(Error::domain("area must be positive for uniform placement"));
            }
            _ => {}
        }
        match &self.targets {
            TargetPlacement::Positions(p) if p.len() != self.num_targets => {
                return Err(Error::domain(format!(
                    "expected {} target positions, got {}",
                    self.num_targets,
                    p.len()
                )));
            }
            TargetPlacement::AnglesDeg(lists) => {
                if lists.len() != self.num_aps
                    || lists.iter().any(|row| row.len() != self.num_targets)
                {
                    return Err(Error::domain(
                        "target angle lists must have one row per AP and one entry per target",
                    ));
                }
            }
            TargetPlacement::Uniform if self.num_targets > 0 && !(self.area > 0.0) => {
                return Err(Error::domain("area must be positive for uniform placement"));
            }
            _ => {}
        }
        Ok(())
    }
}

/// One random channel drop: user channels, target angles, steering
/// vectors, and the deterministic path-loss gains behind the channels.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    /// `h[(m, k, ..)]` — complex channel from AP `m` to user `k`, length L.
    pub h: Array3<Complex64>,
    /// `theta[(m, n)]` — angle of target `n` seen from AP `m`, radians.
    pub theta: Array2<f64>,
    /// `steering[(m, n, ..)]` — unit-norm steering vector toward target `n`.
    pub steering: Array3<Complex64>,
    /// `pathloss[(m, k)]` — linear large-scale gain of link (m, k).
    pub pathloss: Array2<f64>,
}

impl ChannelSet {
    pub fn num_aps(&self) -> usize {
        self.h.shape()[0]
    }
    pub fn num_users(&self) -> usize {
        self.h.shape()[1]
    }
    pub fn num_antennas(&self) -> usize {
        self.h.shape()[2]
    }
    pub fn num_targets(&self) -> usize {
        self.theta.shape()[1]
    }
}

/// Stacked beamforming matrix of shape (L*K, M); column `m` stacks the
/// per-user beams of AP `m`. `normalized` marks the unit-power domain in
/// which the physical beamformer is `sqrt(p_max) * V`.
#[derive(Clone, Debug)]
pub struct BeamMatrix {
    pub v: Array2<Complex64>,
    pub normalized: bool,
}

impl BeamMatrix {
    pub fn zeros(num_antennas: usize, num_users: usize, num_aps: usize) -> Self {
        BeamMatrix {
            v: Array2::zeros((num_antennas * num_users, num_aps)),
            normalized: false,
        }
    }

    /// Amplitude scale mapping stored entries to physical Watts^(1/2).
    pub fn amplitude_scale(&self, p_max: f64) -> f64 {
        if self.normalized {
            p_max.sqrt()
        } else {
            1.0
        }
    }
}

/// Power-law path loss `C0 * (d / D0)^(-nu)` in linear units.
pub fn pathloss(distance: f64, c0: f64, d0: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::domain(format!("nonpositive distance {distance}")));
    }
    if !(d0 > 0.0) {
        return Err(Error::domain("reference distance must be positive"));
    }
    Ok(c0 * (distance / d0).powf(-exponent))
}

/// Half-wavelength ULA steering vector: entry `l` is
/// `exp(j pi l sin(theta)) / sqrt(L)`.
pub fn steering_vector(theta: f64, num_antennas: usize) -> Result<Array1<Complex64>> {
    if num_antennas == 0 {
        return Err(Error::domain("steering vector needs at least one antenna"));
    }
    let norm = 1.0 / (num_antennas as f64).sqrt();
    let phase_step = std::f64::consts::PI * theta.sin();
    Ok(Array1::from_iter((0..num_antennas).map(|l| {
        Complex64::from_polar(norm, phase_step * l as f64)
    })))
}

/// Wraps an angle (radians) into the broadside range [-pi/2, pi/2],
/// preserving `sin` so the steering vector is unchanged.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = theta % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    if a > PI / 2.0 {
        PI - a
    } else if a < -PI / 2.0 {
        -PI - a
    } else {
        a
    }
}

/// Draws one channel realization. Reproducible given the RNG stream:
/// placement (when random) is drawn first, then the Rayleigh fading in
/// (AP, user, antenna) order.
pub fn draw_channels<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    config.validate()?;
    let (m_count, k_count, l_count, n_count) = (
        config.num_aps,
        config.num_users,
        config.num_antennas,
        config.num_targets,
    );

    let user_positions: Vec<[f64; 2]> = match &config.users {
        UserPlacement::Positions(p) => p.clone(),
        UserPlacement::Uniform => (0..k_count)
            .map(|_| [rng.random::<f64>() * config.area, rng.random::<f64>() * config.area])
            .collect(),
    };

    let theta = match &config.targets {
        TargetPlacement::AnglesDeg(lists) => Array2::from_shape_fn((m_count, n_count), |(m, n)| {
            lists[m][n].to_radians()
        }),
        TargetPlacement::Positions(p) => angles_from_positions(&config.ap_positions, p),
        TargetPlacement::Uniform => {
            let positions: Vec<[f64; 2]> = (0..n_count)
                .map(|_| [rng.random::<f64>() * config.area, rng.random::<f64>() * config.area])
                .collect();
            angles_from_positions(&config.ap_positions, &positions)
        }
    };

    let mut pathloss_gains = Array2::zeros((m_count, k_count));
    for m in 0..m_count {
        for k in 0..k_count {
            let dx = config.ap_positions[m][0] - user_positions[k][0];
            let dy = config.ap_positions[m][1] - user_positions[k][1];
            let d = dx.hypot(dy);
            if d == 0.0 {
                return Err(Error::domain(format!(
                    "AP {m} coincides with user {k}; path loss undefined"
                )));
            }
            pathloss_gains[[m, k]] = pathloss(
                d,
                config.pathloss_ref,
                config.ref_distance,
                config.pathloss_exponent,
            )?;
        }
    }

    let mut h = Array3::zeros((m_count, k_count, l_count));
    for m in 0..m_count {
        for k in 0..k_count {
            let amp = pathloss_gains[[m, k]].sqrt();
            for l in 0..l_count {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                h[[m, k, l]] = Complex64::new(re, im) * (amp / 2f64.sqrt());
            }
        }
    }

    let mut steering = Array3::zeros((m_count, n_count, l_count));
    for m in 0..m_count {
        for n in 0..n_count {
            let a = steering_vector(theta[[m, n]], l_count)?;
            steering.slice_mut(s![m, n, ..]).assign(&a);
        }
    }

    Ok(ChannelSet {
        h,
        theta,
        steering,
        pathloss: pathloss_gains,
    })
}

fn angles_from_positions(aps: &[[f64; 2]], targets: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((aps.len(), targets.len()), |(m, n)| {
        let dx = targets[n][0] - aps[m][0];
        let dy = targets[n][1] - aps[m][1];
        wrap_angle(dy.atan2(dx))
    })
}

/// Coherent per-user receive amplitudes `c_i = sum_m h_mk^H v_mi` at
/// physical scale, for a fixed receiving user `k`.
fn receive_amplitudes(
    beam: &BeamMatrix,
    channels: &ChannelSet,
    k: usize,
    p_max: f64,
) -> Result<Vec<Complex64>> {
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    if beam.v.shape() != [l_count * k_count, m_count] {
        return Err(Error::domain(format!(
            "beam shape {:?} inconsistent with channels ({} x {})",
            beam.v.shape(),
            l_count * k_count,
            m_count
        )));
    }
    if k >= k_count {
        return Err(Error::IndexOutOfRange {
            what: "user",
            index: k,
            size: k_count,
        });
    }
    let scale = beam.amplitude_scale(p_max);
    let mut amps = vec![Complex64::default(); k_count];
    for (i, amp) in amps.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for m in 0..m_count {
            acc += herm_dot(
                channels.h.slice(s![m, k, ..]),
                beam.v.slice(s![i * l_count..(i + 1) * l_count, m]),
            );
        }
        *amp = acc * scale;
    }
    Ok(amps)
}

/// SINR of user `k`: coherent signal over interference plus noise.
pub fn sinr(
    beam: &BeamMatrix,
    channels: &ChannelSet,
    k: usize,
    noise_power: f64,
    p_max: f64,
) -> Result<f64> {
    let amps = receive_amplitudes(beam, channels, k, p_max)?;
    let signal = amps[k].norm_sqr();
    let interference: f64 = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    Ok(signal / (interference + noise_power))
}

/// Communication sum rate `sum_k log2(1 + sinr_k)` in bps/Hz.
pub fn sum_rate(
    beam: &BeamMatrix,
    channels: &ChannelSet,
    noise_power: f64,
    p_max: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..channels.num_users() {
        total += sinr(beam, channels, k, noise_power, p_max)?.ln_1p() / std::f64::consts::LN_2;
    }
    Ok(total)
}

/// Transmit beampattern gain toward target `n` in Watts: per-AP quadratic
/// forms added incoherently across APs.
pub fn beampattern_gain(
    beam: &BeamMatrix,
    channels: &ChannelSet,
    n: usize,
    p_max: f64,
) -> Result<f64> {
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    if n >= channels.num_targets() {
        return Err(Error::IndexOutOfRange {
            what: "target",
            index: n,
            size: channels.num_targets(),
        });
    }
    let scale = beam.amplitude_scale(p_max);
    let mut gain = 0.0;
    for m in 0..m_count {
        let a = channels.steering.slice(s![m, n, ..]);
        for k in 0..k_count {
            let proj = herm_dot(a, beam.v.slice(s![k * l_count..(k + 1) * l_count, m]));
            gain += proj.norm_sqr();
        }
    }
    Ok(gain * scale * scale)
}

/// Transmit power of AP `m` in Watts.
pub fn per_ap_power(beam: &BeamMatrix, m: usize, p_max: f64) -> Result<f64> {
    if m >= beam.v.ncols() {
        return Err(Error::IndexOutOfRange {
            what: "AP",
            index: m,
            size: beam.v.ncols(),
        });
    }
    let scale = beam.amplitude_scale(p_max);
    Ok(beam.v.column(m).iter().map(|z| z.norm_sqr()).sum::<f64>() * scale * scale)
}

/// Per-AP directional gains over an angle grid, physical Watts.
#[derive(Clone, Debug)]
pub struct BeampatternTable {
    /// Grid angles, radians.
    pub angles: Vec<f64>,
    /// `gains[(row, m)]` — gain of AP `m` at `angles[row]`.
    pub gains: Array2<f64>,
}

/// Sweeps the per-AP beampattern `sum_k |a(theta)^H v_mk|^2` over a grid.
pub fn beampattern_sweep(
    beam: &BeamMatrix,
    channels: &ChannelSet,
    angle_grid: &[f64],
    p_max: f64,
) -> Result<BeampatternTable> {
    if angle_grid.is_empty() {
        return Err(Error::domain("empty angle grid"));
    }
    let (m_count, k_count, l_count) = (
        channels.num_aps(),
        channels.num_users(),
        channels.num_antennas(),
    );
    let scale = beam.amplitude_scale(p_max);
    let mut gains = Array2::zeros((angle_grid.len(), m_count));
    for (row, &theta) in angle_grid.iter().enumerate() {
        let a = steering_vector(theta, l_count)?;
        for m in 0..m_count {
            let mut g = 0.0;
            for k in 0..k_count {
                let proj = herm_dot(
                    a.view(),
                    beam.v.slice(s![k * l_count..(k + 1) * l_count, m]),
                );
                g += proj.norm_sqr();
            }
            gains[[row, m]] = g * scale * scale;
        }
    }
    Ok(BeampatternTable {
        angles: angle_grid.to_vec(),
        gains,
    })
}
