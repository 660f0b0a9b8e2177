//! Precoder construction and power allocation.
//!
//! Private streams use ZF, MRT or MMSE (regularized ZF) beams. The common
//! stream uses either the dominant left singular vector of the normalized
//! channel matrix or a max-min multicast beam found by exhaustive search
//! over the span of the two user channels. Power between the common and
//! private streams is chosen by a uniform grid search that always includes
//! the pure-private (t = 0) and pure-common (t = 1) endpoints.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{ConfigError, Error, Result};
use crate::numerics::{
    dominant_left_singular_vector, gain, inner, norm, normalized, pseudo_inverse, regularized_pseudo_inverse,
    ComplexMatrix,
};
use crate::rates::{rsma_rates, rsma_sum_rate, AllocationPolicy};

/// Steps of the max-min common beam search: power share of the first
/// channel direction, and relative phase.
pub const MAXMIN_SHARE_STEPS: usize = 101;
pub const MAXMIN_PHASE_STEPS: usize = 64;

pub const DEFAULT_POWER_GRID: usize = 101;

const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrivatePrecoder {
    Zf,
    Mrt,
    #[default]
    Mmse,
}

impl FromStr for PrivatePrecoder {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "zf" => Ok(Self::Zf),
            "mrt" => Ok(Self::Mrt),
            "mmse" => Ok(Self::Mmse),
            other => Err(ConfigError::Parse {
                key: "precoder".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for PrivatePrecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zf => "zf",
            Self::Mrt => "mrt",
            Self::Mmse => "mmse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommonPrecoder {
    /// Dominant left singular vector of the normalized channel matrix.
    SingularVector,
    /// Beam maximizing the weakest user's gain (two users at most).
    MaxMin,
}

impl CommonPrecoder {
    /// Max-min for two users or fewer, singular vector otherwise.
    pub fn default_for(n_users: usize) -> Self {
        if n_users <= 2 {
            Self::MaxMin
        } else {
            Self::SingularVector
        }
    }
}

impl FromStr for CommonPrecoder {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "sv" => Ok(Self::SingularVector),
            "maxmin" => Ok(Self::MaxMin),
            other => Err(ConfigError::Parse {
                key: "common_precoder".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for CommonPrecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SingularVector => "sv",
            Self::MaxMin => "maxmin",
        })
    }
}

/// Unit-norm beams and their transmit powers (watts).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub common: Option<Vec<Complex64>>,
    pub private: Vec<Vec<Complex64>>,
    pub sensing: Option<Vec<Complex64>>,
    pub power_common: f64,
    pub power_private: Vec<f64>,
    pub power_sensing: f64,
}

impl PrecoderSet {
    pub fn private_only(private: Vec<Vec<Complex64>>, power_private: Vec<f64>) -> Self {
        Self {
            common: None,
            private,
            sensing: None,
            power_common: 0.0,
            power_private,
            power_sensing: 0.0,
        }
    }

    /// SDMA: the budget split equally over the private streams.
    pub fn sdma(private: Vec<Vec<Complex64>>, budget: f64) -> Self {
        let k = private.len() as f64;
        let powers = vec![budget / k; private.len()];
        Self::private_only(private, powers)
    }

    /// RSMA with a fraction `t` of the budget on the common stream and the
    /// rest split equally over the private streams.
    pub fn rsma(common: Vec<Complex64>, private: Vec<Vec<Complex64>>, t: f64, budget: f64) -> Self {
        let k = private.len() as f64;
        let powers = vec![(1.0 - t) * budget / k; private.len()];
        Self {
            common: Some(common),
            private,
            sensing: None,
            power_common: t * budget,
            power_private: powers,
            power_sensing: 0.0,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power_common + self.power_private.iter().sum::<f64>() + self.power_sensing
    }

    /// Share of the budget on the common stream.
    pub fn common_fraction(&self, budget: f64) -> f64 {
        self.power_common / budget
    }

    /// Checks unit norms, non-negative powers and the power budget.
    pub fn validate(&self, budget: f64) -> Result<()> {
        let unit = |v: &[Complex64]| (norm(v) - 1.0).abs() <= UNIT_NORM_TOL;
        if self.private.len() != self.power_private.len() {
            return Err(Error::Dimension {
                expected: self.private.len(),
                actual: self.power_private.len(),
            });
        }
        let vectors = self.private.iter().chain(&self.common).chain(&self.sensing);
        for v in vectors {
            if !unit(v) {
                return Err(Error::Degenerate("precoder is not unit norm"));
            }
        }
        let powers = self
            .power_private
            .iter()
            .chain([&self.power_common, &self.power_sensing]);
        for p in powers {
            if p.is_nan() || *p < 0.0 {
                return Err(Error::Degenerate("negative stream power"));
            }
        }
        if self.common.is_none() && self.power_common != 0.0 {
            return Err(Error::Degenerate("common power without a common precoder"));
        }
        if self.sensing.is_none() && self.power_sensing != 0.0 {
            return Err(Error::Degenerate("sensing power without a sensing precoder"));
        }
        if self.total_power() > budget * (1.0 + UNIT_NORM_TOL) {
            return Err(Error::Degenerate("power budget exceeded"));
        }
        Ok(())
    }
}

/// One unit-norm private beam per user.
///
/// ZF and MMSE take the columns of `Hᴴ(HHᴴ)⁻¹` and `Hᴴ(HHᴴ + Kσ²/P·I)⁻¹`
/// respectively, where `H` has rows `h_kᴴ`.
pub fn private_precoders(ch: &ChannelSet, kind: PrivatePrecoder) -> Result<Vec<Vec<Complex64>>> {
    let k = ch.n_users();
    match kind {
        PrivatePrecoder::Mrt => ch.channels().iter().map(|h| normalized(h)).collect(),
        PrivatePrecoder::Zf => {
            if k > ch.n_tx() {
                return Err(Error::Singular { ratio: 0.0 });
            }
            columns_normalized(&pseudo_inverse(&ch.matrix())?)
        }
        PrivatePrecoder::Mmse => {
            let lambda = k as f64 * ch.noise_variance() / ch.tx_power();
            columns_normalized(&regularized_pseudo_inverse(&ch.matrix(), lambda)?)
        }
    }
}

fn columns_normalized(m: &ComplexMatrix) -> Result<Vec<Vec<Complex64>>> {
    (0..m.cols()).map(|c| normalized(&m.column(c))).collect()
}

/// Unit-norm common-stream beam.
pub fn common_precoder(ch: &ChannelSet, kind: CommonPrecoder) -> Result<Vec<Complex64>> {
    let directions: Vec<Vec<Complex64>> = ch.channels().iter().filter_map(|h| normalized(h).ok()).collect();
    if directions.is_empty() {
        return Err(Error::Degenerate("all user channels are zero"));
    }
    if ch.n_users() == 1 {
        return Ok(directions.into_iter().next().unwrap());
    }
    match kind {
        CommonPrecoder::SingularVector => dominant_left_singular_vector(&ComplexMatrix::from_columns(&directions)?),
        CommonPrecoder::MaxMin => {
            if ch.n_users() > 2 {
                return Err(
                    ConfigError::Invalid("the max-min common precoder supports at most two users".into()).into(),
                );
            }
            if directions.len() < 2 {
                return Ok(directions.into_iter().next().unwrap());
            }
            Ok(max_min_two_user(ch.channels(), &directions[0], &directions[1]))
        }
    }
}

/// Exhaustive search over `p ∝ √s·e^{jψ}·u1 + √(1−s)·u2`, which spans every
/// direction that matters for two users. The first candidate attaining the
/// best minimum gain wins.
fn max_min_two_user(channels: &[Vec<Complex64>], u1: &[Complex64], u2: &[Complex64]) -> Vec<Complex64> {
    // Everything reduces to a handful of inner products.
    let cross = inner(u1, u2);
    let proj: Vec<(Complex64, Complex64)> = channels.iter().map(|h| (inner(h, u1), inner(h, u2))).collect();

    let phases: Vec<Complex64> = (0..MAXMIN_PHASE_STEPS)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / MAXMIN_PHASE_STEPS as f64))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for si in 0..MAXMIN_SHARE_STEPS {
        let s = si as f64 / (MAXMIN_SHARE_STEPS - 1) as f64;
        let (a_mag, b) = (s.sqrt(), (1.0 - s).sqrt());
        for (pi, phase) in phases.iter().enumerate() {
            let a = phase * a_mag;
            // ‖a·u1 + b·u2‖² = |a|² + b² + 2·Re(conj(a)·b·u1ᴴu2)
            let norm2 = 1.0 + 2.0 * b * (a.conj() * cross).re;
            if norm2 <= 1e-12 {
                continue;
            }
            let mut min_gain = f64::INFINITY;
            for (x, y) in &proj {
                min_gain = min_gain.min((a * x + y * b).norm_sqr());
            }
            let min_gain = min_gain / norm2;
            if min_gain > best.0 {
                let psi = 2.0 * PI * pi as f64 / MAXMIN_PHASE_STEPS as f64;
                best = (min_gain, s, psi);
            }
        }
    }
    let (_, s, psi) = best;
    let a = Complex64::from_polar(s.sqrt(), psi);
    let b = (1.0 - s).sqrt();
    let p: Vec<Complex64> = u1.iter().zip(u2).map(|(x, y)| a * x + b * y).collect();
    normalized(&p).expect("candidate norm checked during search")
}

/// What the common/private split should maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerObjective {
    SumRate,
    /// Smallest user total under the given common-rate allocation.
    MinUserRate(AllocationPolicy),
}

/// Uniform grid `{0, 1/(G−1), …, 1}`.
pub fn power_grid(grid_points: usize) -> Vec<f64> {
    assert!(grid_points >= 2, "power grid needs at least two points");
    (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect()
}

/// Sum-rate-maximizing common-power fraction over a uniform grid, with the
/// private streams sharing the remainder equally. Ties go to the smaller
/// fraction.
pub fn allocate_power(
    ch: &ChannelSet,
    private: &[Vec<Complex64>],
    common: &[Complex64],
    grid_points: usize,
) -> Result<PrecoderSet> {
    allocate_power_for(ch, private, common, grid_points, PowerObjective::SumRate)
}

pub fn allocate_power_for(
    ch: &ChannelSet,
    private: &[Vec<Complex64>],
    common: &[Complex64],
    grid_points: usize,
    objective: PowerObjective,
) -> Result<PrecoderSet> {
    if grid_points < 2 {
        return Err(ConfigError::OutOfRange {
            key: "power_grid_points",
            bound: ">= 2".into(),
        }
        .into());
    }
    best_over_grid(ch, grid_points, objective, |t| {
        PrecoderSet::rsma(common.to_vec(), private.to_vec(), t, ch.tx_power())
    })
}

pub(crate) fn objective_value(ch: &ChannelSet, pre: &PrecoderSet, objective: PowerObjective) -> Result<f64> {
    Ok(match objective {
        PowerObjective::SumRate => rsma_sum_rate(ch, pre),
        PowerObjective::MinUserRate(policy) => rsma_rates(ch, pre, policy)?.min_user_rate(),
    })
}

fn best_over_grid(
    ch: &ChannelSet,
    grid_points: usize,
    objective: PowerObjective,
    build: impl Fn(f64) -> PrecoderSet,
) -> Result<PrecoderSet> {
    let mut best: Option<(f64, PrecoderSet)> = None;
    for t in power_grid(grid_points) {
        let candidate = build(t);
        let value = objective_value(ch, &candidate, objective)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, candidate));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// Precoder design options for joint sensing and communications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IsacOption {
    /// SDMA plus a dedicated sensing beam.
    DedicatedSdma,
    /// RSMA plus a dedicated sensing beam.
    DedicatedRsma,
    /// SDMA beams steered partly toward the target.
    SharedSdma,
    /// RSMA beams steered partly toward the target.
    SharedRsma,
}

impl IsacOption {
    pub const ALL: [IsacOption; 4] = [
        IsacOption::DedicatedSdma,
        IsacOption::DedicatedRsma,
        IsacOption::SharedSdma,
        IsacOption::SharedRsma,
    ];

    pub fn uses_common_stream(self) -> bool {
        matches!(self, IsacOption::DedicatedRsma | IsacOption::SharedRsma)
    }

    pub fn has_sensing_beam(self) -> bool {
        matches!(self, IsacOption::DedicatedSdma | IsacOption::DedicatedRsma)
    }

    /// The same design without the common stream.
    pub fn sdma_counterpart(self) -> IsacOption {
        match self {
            IsacOption::DedicatedRsma => IsacOption::DedicatedSdma,
            IsacOption::SharedRsma => IsacOption::SharedSdma,
            other => other,
        }
    }
}

impl FromStr for IsacOption {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "a.i" => Ok(Self::DedicatedSdma),
            "a.ii" => Ok(Self::DedicatedRsma),
            "b.i" => Ok(Self::SharedSdma),
            "b.ii" => Ok(Self::SharedRsma),
            other => Err(ConfigError::Parse {
                key: "isac_option".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for IsacOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DedicatedSdma => "a.i",
            Self::DedicatedRsma => "a.ii",
            Self::SharedSdma => "b.i",
            Self::SharedRsma => "b.ii",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsacDesign {
    pub option: IsacOption,
    pub private: PrivatePrecoder,
    pub common: CommonPrecoder,
    /// Grid size for the internal common-power search.
    pub grid_points: usize,
}

/// `normalize(√μ·p + √(1−μ)·e^{jθ}·a)` with θ aligning `a` to `p` so the
/// two parts add coherently.
pub fn mix_toward(p: &[Complex64], target: &[Complex64], mu: f64) -> Vec<Complex64> {
    let overlap = inner(target, p);
    let rot = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let (wp, wa) = (mu.sqrt(), (1.0 - mu).sqrt());
    let mixed: Vec<Complex64> = p.iter().zip(target).map(|(x, a)| x * wp + rot * a * wa).collect();
    normalized(&mixed).expect("coherent mixture of unit vectors is nonzero")
}

/// ISAC precoders for one trade-off weight `mu` (1 = pure communications).
///
/// Dedicated options put `(1−μ)·P` on the target beam and `μ·P` on the
/// communication streams. Shared options spend all of `P` on communication
/// streams whose beams are mixed toward the target. `common_fraction` fixes
/// the common-stream share for the RSMA options; `None` searches for the
/// sum-rate-maximizing share.
pub fn isac_mixed_precoders(
    ch: &ChannelSet,
    target: &[Complex64],
    mu: f64,
    design: &IsacDesign,
    common_fraction: Option<f64>,
) -> Result<PrecoderSet> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(ConfigError::OutOfRange {
            key: "mu",
            bound: "[0, 1]".into(),
        }
        .into());
    }
    if target.len() != ch.n_tx() {
        return Err(Error::Dimension {
            expected: ch.n_tx(),
            actual: target.len(),
        });
    }
    let budget = ch.tx_power();
    let private = private_precoders(ch, design.private)?;
    let common = if design.option.uses_common_stream() {
        Some(common_precoder(ch, design.common)?)
    } else {
        None
    };

    let (private, common, comm_budget, sensing) = if design.option.has_sensing_beam() {
        (
            private,
            common,
            mu * budget,
            Some(((1.0 - mu) * budget, target.to_vec())),
        )
    } else {
        let private = private.iter().map(|p| mix_toward(p, target, mu)).collect();
        let common = common.map(|c| mix_toward(&c, target, mu));
        (private, common, budget, None)
    };

    let build = |t: f64| {
        let mut set = match &common {
            Some(c) => PrecoderSet::rsma(c.clone(), private.clone(), t, comm_budget),
            None => PrecoderSet::sdma(private.clone(), comm_budget),
        };
        if let Some((power, beam)) = &sensing {
            set.sensing = Some(beam.clone());
            set.power_sensing = *power;
        }
        set
    };

    match (common.is_some(), common_fraction) {
        (false, _) => Ok(build(0.0)),
        (true, Some(t)) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(ConfigError::OutOfRange {
                    key: "common_fraction",
                    bound: "[0, 1]".into(),
                }
                .into());
            }
            Ok(build(t))
        }
        (true, None) => best_over_grid(ch, design.grid_points.max(2), PowerObjective::SumRate, build),
    }
}

/// `|h_kᴴ p_k|` for every user, used by tests and diagnostics.
pub fn beam_gains(ch: &ChannelSet, beams: &[Vec<Complex64>]) -> Vec<f64> {
    ch.channels()
        .iter()
        .zip(beams)
        .map(|(h, p)| gain(h, p).sqrt())
        .collect()
}
