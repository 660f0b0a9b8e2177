//! Joint sensing and communications: line-of-sight scenarios, the radar
//! SNR proxy and throughput/radar-SNR trade-off envelopes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{drop_rng, noise_for_snr, ChannelSet, DEFAULT_TX_POWER};
use crate::error::{ConfigError, Error, Result};
use crate::numerics::gain;
use crate::precoding::{
    isac_mixed_precoders, power_grid, CommonPrecoder, IsacDesign, IsacOption, PrecoderSet, PrivatePrecoder,
};
use crate::rates::{rsma_rates, sdma_rates, AllocationPolicy};

/// Radar SNR reported for a zero beampattern gain.
pub const RADAR_SNR_FLOOR_DB: f64 = -300.0;

pub const DEFAULT_SWEEP_POINTS: usize = 41;
pub const DEFAULT_ELEMENT_SPACING: f64 = 0.5;

/// Slack used when comparing envelopes.
pub const ENVELOPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioTag {
    /// Users far apart, target between them.
    S1,
    /// Users close together, target off to the side.
    S2,
    /// Users close together, target between them.
    S3,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 3] = [ScenarioTag::S1, ScenarioTag::S2, ScenarioTag::S3];
}

impl FromStr for ScenarioTag {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3" => Ok(Self::S3),
            other => Err(ConfigError::Parse {
                key: "isac_scenario".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
        })
    }
}

/// Uniform linear array serving users and a target at fixed angles
/// (degrees from broadside).
#[derive(Debug, Clone, PartialEq)]
pub struct IsacScenario {
    pub tag: ScenarioTag,
    pub n_tx: usize,
    /// In wavelengths.
    pub element_spacing: f64,
    pub user_angles: Vec<f64>,
    pub target_angle: f64,
    pub snr_db: f64,
}

fn check_angle(angle: f64) -> Result<()> {
    if angle.is_finite() && angle > -90.0 && angle < 90.0 {
        Ok(())
    } else {
        Err(Error::Degenerate("angles must lie strictly between -90 and 90 degrees"))
    }
}

impl IsacScenario {
    pub fn new(tag: ScenarioTag, n_tx: usize, user_angles: Vec<f64>, target_angle: f64, snr_db: f64) -> Result<Self> {
        if n_tx < 2 {
            return Err(Error::Degenerate("scenarios need at least two antennas"));
        }
        if user_angles.is_empty() {
            return Err(Error::Degenerate("scenarios need at least one user"));
        }
        for &a in user_angles.iter().chain(std::iter::once(&target_angle)) {
            check_angle(a)?;
        }
        Ok(Self {
            tag,
            n_tx,
            element_spacing: DEFAULT_ELEMENT_SPACING,
            user_angles,
            target_angle,
            snr_db,
        })
    }

    pub fn target(&self) -> Vec<Complex64> {
        steering_vector(self.target_angle, self.n_tx, self.element_spacing)
    }

    /// Same geometry with a different array size and SNR.
    pub fn with_array(mut self, n_tx: usize, snr_db: f64) -> Result<Self> {
        if n_tx < 2 {
            return Err(Error::Degenerate("scenarios need at least two antennas"));
        }
        self.n_tx = n_tx;
        self.snr_db = snr_db;
        Ok(self)
    }
}

/// The three reference geometries on a two-antenna half-wavelength array at
/// 20 dB.
pub fn default_scenarios() -> Vec<IsacScenario> {
    vec![
        scenario(ScenarioTag::S1),
        scenario(ScenarioTag::S2),
        scenario(ScenarioTag::S3),
    ]
}

pub fn scenario(tag: ScenarioTag) -> IsacScenario {
    let (users, target) = match tag {
        ScenarioTag::S1 => (vec![-50.0, 50.0], 0.0),
        ScenarioTag::S2 => (vec![-10.0, 10.0], 60.0),
        ScenarioTag::S3 => (vec![-10.0, 10.0], 0.0),
    };
    IsacScenario::new(tag, 2, users, target, 20.0).expect("reference scenarios are valid")
}

/// Unit-norm ULA response `a_n = exp(j·2π·d·n·sin θ)/√N`.
///
/// # Panics
/// If `angle_deg` is outside (−90, 90) or `n_tx` is zero.
pub fn steering_vector(angle_deg: f64, n_tx: usize, spacing: f64) -> Vec<Complex64> {
    assert!(n_tx > 0, "steering vector needs at least one antenna");
    assert!(check_angle(angle_deg).is_ok(), "angle {angle_deg} outside (-90, 90)");
    let step = 2.0 * PI * spacing * angle_deg.to_radians().sin();
    let scale = 1.0 / (n_tx as f64).sqrt();
    (0..n_tx)
        .map(|n| Complex64::from_polar(scale, step * n as f64))
        .collect()
}

/// `targetᴴ·R_x·target` in dB, with every stream contributing. Zero gain is
/// reported as [`RADAR_SNR_FLOOR_DB`].
pub fn radar_snr(pre: &PrecoderSet, target: &[Complex64]) -> Result<f64> {
    let total = pre.total_power();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::UndefinedMetric("radar SNR of a silent transmitter"));
    }
    let mut beampattern = 0.0;
    if let Some(c) = &pre.common {
        beampattern += pre.power_common * gain(target, c);
    }
    for (p, &power) in pre.private.iter().zip(&pre.power_private) {
        beampattern += power * gain(target, p);
    }
    if let Some(s) = &pre.sensing {
        beampattern += pre.power_sensing * gain(target, s);
    }
    if beampattern > 0.0 {
        Ok((10.0 * beampattern.log10()).max(RADAR_SNR_FLOOR_DB))
    } else {
        Ok(RADAR_SNR_FLOOR_DB)
    }
}

/// Line-of-sight user channels: unit-norm steering vectors with seeded
/// random phases, noise set by the scenario SNR.
pub fn scenario_channels(scn: &IsacScenario, seed: u64) -> Result<ChannelSet> {
    let mut rng = drop_rng(seed, 0);
    let channels = scn
        .user_angles
        .iter()
        .map(|&angle| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
            steering_vector(angle, scn.n_tx, scn.element_spacing)
                .into_iter()
                .map(|x| x * phase)
                .collect()
        })
        .collect();
    let p = DEFAULT_TX_POWER;
    ChannelSet::new(channels, noise_for_snr(p, 1.0, scn.snr_db), p)
}

/// One configuration of the trade-off sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub mu: f64,
    /// Zero for options without a common stream.
    pub common_fraction: f64,
    pub throughput: f64,
    pub radar_snr_db: f64,
    pub on_envelope: bool,
}

/// Sweep resolution; both grids include their endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub mu_points: usize,
    pub common_points: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            mu_points: DEFAULT_SWEEP_POINTS,
            common_points: DEFAULT_SWEEP_POINTS,
        }
    }
}

impl SweepGrid {
    pub fn uniform(points: usize) -> Self {
        Self {
            mu_points: points,
            common_points: points,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.mu_points < 2 || self.common_points < 2 {
            return Err(ConfigError::OutOfRange {
                key: "isac_grid_points",
                bound: ">= 2".into(),
            });
        }
        Ok(())
    }
}

fn throughput(ch: &ChannelSet, pre: &PrecoderSet, option: IsacOption) -> Result<f64> {
    let report = if option.uses_common_stream() {
        rsma_rates(ch, pre, AllocationPolicy::MaxMin)?
    } else {
        sdma_rates(ch, pre)?
    };
    Ok(report.sum_rate)
}

/// Every swept configuration, μ-major, with the envelope flag set.
pub fn sweep_points(
    scn: &IsacScenario,
    option: IsacOption,
    private: PrivatePrecoder,
    common: CommonPrecoder,
    grid: SweepGrid,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    grid.validate()?;
    let ch = scenario_channels(scn, seed)?;
    let target = scn.target();
    let design = IsacDesign {
        option,
        private,
        common,
        grid_points: grid.common_points,
    };
    let fractions = if option.uses_common_stream() {
        power_grid(grid.common_points)
    } else {
        vec![0.0]
    };

    let mut points = Vec::with_capacity(grid.mu_points * fractions.len());
    for mu in power_grid(grid.mu_points) {
        for &t in &fractions {
            let pre = isac_mixed_precoders(&ch, &target, mu, &design, Some(t))?;
            points.push(SweepPoint {
                mu,
                common_fraction: t,
                throughput: throughput(&ch, &pre, option)?,
                radar_snr_db: radar_snr(&pre, &target)?,
                on_envelope: false,
            });
        }
    }
    for i in nondominated(&points) {
        points[i].on_envelope = true;
    }
    Ok(points)
}

/// Indices of the Pareto-optimal points (both coordinates maximized).
/// Exact duplicates keep only their first occurrence.
pub fn nondominated(points: &[SweepPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        pb.radar_snr_db
            .total_cmp(&pa.radar_snr_db)
            .then(pb.throughput.total_cmp(&pa.throughput))
            .then(a.cmp(&b))
    });
    let mut best = f64::NEG_INFINITY;
    let mut keep = Vec::new();
    for i in order {
        if points[i].throughput > best {
            best = points[i].throughput;
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}

/// Pareto envelope of one design option, sorted by ascending radar SNR.
pub fn pareto_sweep(
    scn: &IsacScenario,
    option: IsacOption,
    private: PrivatePrecoder,
    common: CommonPrecoder,
    grid: SweepGrid,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    let mut envelope: Vec<SweepPoint> = sweep_points(scn, option, private, common, grid, seed)?
        .into_iter()
        .filter(|p| p.on_envelope)
        .collect();
    envelope.sort_by(|a, b| a.radar_snr_db.total_cmp(&b.radar_snr_db));
    Ok(envelope)
}

/// Best envelope throughput reachable at a radar SNR of at least `radar_db`,
/// or `None` if the envelope never gets there.
pub fn throughput_at(envelope: &[SweepPoint], radar_db: f64) -> Option<f64> {
    envelope
        .iter()
        .filter(|p| p.radar_snr_db >= radar_db - ENVELOPE_TOL)
        .map(|p| p.throughput)
        .reduce(f64::max)
}

/// Whether every point of `lower` is matched or beaten in both coordinates
/// by some point of `upper`.
pub fn envelope_dominates(upper: &[SweepPoint], lower: &[SweepPoint]) -> bool {
    lower
        .iter()
        .all(|p| throughput_at(upper, p.radar_snr_db).is_some_and(|t| t >= p.throughput - ENVELOPE_TOL))
}

/// Throughput gain of `upper` over `lower` at the median radar SNR of
/// `lower`'s envelope.
pub fn median_advantage(upper: &[SweepPoint], lower: &[SweepPoint]) -> Option<f64> {
    if lower.is_empty() {
        return None;
    }
    let mid = &lower[lower.len().div_ceil(2) - 1];
    Some(throughput_at(upper, mid.radar_snr_db)? - mid.throughput)
}
