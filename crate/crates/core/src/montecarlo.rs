//! Drop-level experiment engine.
//!
//! Each drop draws from its own random stream (master seed, drop index),
//! drops are evaluated on a rayon pool and the results are reduced
//! sequentially in drop order. Output is therefore identical for any
//! worker count.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{
    correlated_with, drop_rng, generate_iid_with, generate_pair_with, noise_for_snr, ChannelSet, PairGeometry,
    DEFAULT_TX_POWER,
};
use crate::error::{ConfigError, Error, Result};
use crate::numerics::{norm, normalized};
use crate::precoding::{
    allocate_power, allocate_power_for, common_precoder, power_grid, private_precoders, CommonPrecoder, PowerObjective,
    PrecoderSet, PrivatePrecoder, DEFAULT_POWER_GRID,
};
use crate::rates::{
    allocate_common, noma_as_rsma, noma_rates, rsma_rates, sdma_rates, AllocationPolicy, RateReport, Scheme,
};

/// Cells with fewer drops than this report zero gains.
pub const MIN_CELL_COUNT: usize = 10;

/// SDMA rates below this (bit/s/Hz) make a percentage gain meaningless;
/// such drops are left out of the gain means.
pub const MIN_GAIN_DENOMINATOR: f64 = 1e-6;

/// SDMA percentiles below this are reported through the ">100%" flag.
pub const MIN_PERCENTILE_DENOMINATOR: f64 = 1e-9;

/// Shared knobs of the drop-level experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub snr_db: f64,
    pub private: PrivatePrecoder,
    pub common: CommonPrecoder,
    pub policy: AllocationPolicy,
    pub power_grid_points: usize,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_tx: 2,
            snr_db: 20.0,
            private: PrivatePrecoder::Mmse,
            common: CommonPrecoder::MaxMin,
            policy: AllocationPolicy::MaxMin,
            power_grid_points: DEFAULT_POWER_GRID,
            workers: 0,
        }
    }
}

/// Evaluates `f(0..n)` in parallel and returns results in index order. The
/// error reported is the one with the lowest drop index.
fn par_drops<T, F>(workers: usize, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || -> Vec<Result<T>> { (0..n).into_par_iter().map(&f).collect() };
    let results = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("cannot start {workers} workers: {e}")))?
            .install(run)
    };
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| e.at_drop(i as u64)))
        .collect()
}

fn percent_gain(rsma: f64, sdma: f64) -> f64 {
    100.0 * (rsma - sdma) / sdma
}

/// RSMA (sum-rate power split) and SDMA reports for one drop.
fn compare_schemes(ch: &ChannelSet, config: &ExperimentConfig) -> Result<(RateReport, RateReport)> {
    let private = private_precoders(ch, config.private)?;
    let sdma = sdma_rates(ch, &PrecoderSet::sdma(private.clone(), ch.tx_power()))?;
    let common = common_precoder(ch, config.common)?;
    let pre = allocate_power(ch, &private, &common, config.power_grid_points)?;
    let rsma = rsma_rates(ch, &pre, config.policy)?;
    Ok((rsma, sdma))
}

// ---------------------------------------------------------------------------
// (ρ, α)-binned gains
// ---------------------------------------------------------------------------

/// Per-drop outcome of the binned-gain experiment. Gains are percentages of
/// RSMA over SDMA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropGain {
    pub geometry: PairGeometry,
    pub gain_weak: f64,
    pub gain_strong: f64,
    pub gain_sum: f64,
    /// SDMA rate of some user (or the sum) was too small for a percentage.
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinCell {
    pub n: usize,
    pub n_excluded: usize,
    pub g_w: f64,
    pub g_s: f64,
    pub g_sum: f64,
}

/// Gain statistics binned by spatial correlation and SINR disparity.
///
/// ρ bins are `[lo, hi)` with the last one closed; α bins are `(lo, hi]`
/// with the first one closed. Drops outside the edges are not counted.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    pub rho_edges: Vec<f64>,
    pub alpha_edges: Vec<f64>,
    /// Row-major: `cells[i * (alpha bins) + j]` is ρ bin i, α bin j.
    pub cells: Vec<BinCell>,
}

pub fn validate_edges(rho_edges: &[f64], alpha_edges: &[f64]) -> Result<(), ConfigError> {
    let ascending = |e: &[f64]| e.len() >= 2 && e.windows(2).all(|w| w[0] < w[1]) && e.iter().all(|x| x.is_finite());
    if !ascending(rho_edges) || rho_edges[0] < 0.0 || rho_edges[rho_edges.len() - 1] > 1.0 {
        return Err(ConfigError::OutOfRange {
            key: "rho_edges",
            bound: "at least two strictly ascending values in [0, 1]".into(),
        });
    }
    if !ascending(alpha_edges) || alpha_edges[alpha_edges.len() - 1] > 0.0 {
        return Err(ConfigError::OutOfRange {
            key: "alpha_edges",
            bound: "at least two strictly ascending values <= 0".into(),
        });
    }
    Ok(())
}

fn bin_closed_last(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if x < edges[0] || x > edges[last] {
        return None;
    }
    Some((0..last).find(|&i| x < edges[i + 1]).unwrap_or(last - 1))
}

fn bin_closed_first(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if x < edges[0] || x > edges[last] {
        return None;
    }
    Some((0..last).rev().find(|&i| x > edges[i]).unwrap_or(0))
}

impl BinGrid {
    pub fn n_rho_bins(&self) -> usize {
        self.rho_edges.len() - 1
    }

    pub fn n_alpha_bins(&self) -> usize {
        self.alpha_edges.len() - 1
    }

    pub fn cell(&self, rho_bin: usize, alpha_bin: usize) -> &BinCell {
        &self.cells[rho_bin * self.n_alpha_bins() + alpha_bin]
    }

    /// Cell index `(ρ bin, α bin)` a geometry falls into.
    pub fn locate(&self, geometry: PairGeometry) -> Option<(usize, usize)> {
        Some((
            bin_closed_last(&self.rho_edges, geometry.rho)?,
            bin_closed_first(&self.alpha_edges, geometry.alpha_db)?,
        ))
    }

    /// Bins drops in order. Gains are means of per-drop percentages over the
    /// non-excluded drops; cells holding fewer than [`MIN_CELL_COUNT`] drops
    /// report zeros.
    pub fn aggregate(rho_edges: Vec<f64>, alpha_edges: Vec<f64>, drops: &[DropGain]) -> Result<Self> {
        validate_edges(&rho_edges, &alpha_edges)?;
        let n_cells = (rho_edges.len() - 1) * (alpha_edges.len() - 1);
        let mut grid = BinGrid {
            rho_edges,
            alpha_edges,
            cells: vec![BinCell::default(); n_cells],
        };
        let mut sums = vec![(0usize, 0.0, 0.0, 0.0); n_cells];
        for d in drops {
            let Some((i, j)) = grid.locate(d.geometry) else {
                continue;
            };
            let idx = i * grid.n_alpha_bins() + j;
            grid.cells[idx].n += 1;
            if d.excluded {
                grid.cells[idx].n_excluded += 1;
                continue;
            }
            let s = &mut sums[idx];
            s.0 += 1;
            s.1 += d.gain_weak;
            s.2 += d.gain_strong;
            s.3 += d.gain_sum;
        }
        for (cell, (count, w, s, sum)) in grid.cells.iter_mut().zip(sums) {
            if cell.n >= MIN_CELL_COUNT && count > 0 {
                let c = count as f64;
                cell.g_w = w / c;
                cell.g_s = s / c;
                cell.g_sum = sum / c;
            }
        }
        Ok(grid)
    }
}

/// One binned-gain drop: sample (ρ, α) uniformly within the edge ranges,
/// build the pair and compare the schemes.
pub fn binned_drop(
    config: &ExperimentConfig,
    rho_range: (f64, f64),
    alpha_range: (f64, f64),
    seed: u64,
    index: u64,
) -> Result<DropGain> {
    let mut rng = drop_rng(seed, index);
    let rho = rho_range.0 + (rho_range.1 - rho_range.0) * rng.random::<f64>();
    let alpha = alpha_range.0 + (alpha_range.1 - alpha_range.0) * rng.random::<f64>();
    let geometry = PairGeometry::new(rho, alpha)?;
    let ch = generate_pair_with(&mut rng, geometry, config.n_tx, config.snr_db)?;
    let (rsma, sdma) = compare_schemes(&ch, config)?;

    let strong = ch.stronger_of(0, 1);
    let weak = 1 - strong;
    let excluded = sdma.user_totals.iter().any(|&r| r < MIN_GAIN_DENOMINATOR) || sdma.sum_rate < MIN_GAIN_DENOMINATOR;
    let (gain_weak, gain_strong, gain_sum) = if excluded {
        (0.0, 0.0, 0.0)
    } else {
        (
            percent_gain(rsma.user_totals[weak], sdma.user_totals[weak]),
            percent_gain(rsma.user_totals[strong], sdma.user_totals[strong]),
            percent_gain(rsma.sum_rate, sdma.sum_rate),
        )
    };
    Ok(DropGain {
        geometry,
        gain_weak,
        gain_strong,
        gain_sum,
        excluded,
    })
}

/// Binned RSMA-over-SDMA gains for two-user drops with (ρ, α) drawn
/// uniformly over the span of the bin edges.
pub fn run_binned_gains(
    config: &ExperimentConfig,
    rho_edges: &[f64],
    alpha_edges: &[f64],
    n_drops: u64,
    seed: u64,
) -> Result<BinGrid> {
    validate_edges(rho_edges, alpha_edges)?;
    let rho_range = (rho_edges[0], rho_edges[rho_edges.len() - 1]);
    let alpha_range = (alpha_edges[0], alpha_edges[alpha_edges.len() - 1]);
    let drops = par_drops(config.workers, n_drops, |i| {
        binned_drop(config, rho_range, alpha_range, seed, i)
    })?;
    BinGrid::aggregate(rho_edges.to_vec(), alpha_edges.to_vec(), &drops)
}

// ---------------------------------------------------------------------------
// Percentile user rates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PercentileMetric {
    /// Individual user rates pooled over all users and drops.
    UserRate,
    /// Smallest user rate of each drop.
    WeakestUser,
}

impl std::fmt::Display for PercentileMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::UserRate => "user_rate",
            Self::WeakestUser => "weakest_user_rate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercentileRow {
    pub percentile: u32,
    pub metric: PercentileMetric,
    pub sdma: f64,
    pub rsma: f64,
    /// Percentage gain. When the SDMA value is below
    /// [`MIN_PERCENTILE_DENOMINATOR`] this is pinned to 100 and the flag set.
    pub gain_pct: f64,
    /// Gain exceeds 100%.
    pub gt100: bool,
}

pub const PERCENTILES: [u32; 2] = [5, 50];

/// Nearest-rank percentile: element `⌈p/100·N⌉` (1-based) of the ascending
/// sort.
pub fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    let rank = ((percentile / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Percentile rows comparing two rate samples.
pub fn percentile_rows(
    sdma_users: Vec<f64>,
    rsma_users: Vec<f64>,
    sdma_weakest: Vec<f64>,
    rsma_weakest: Vec<f64>,
) -> Vec<PercentileRow> {
    let samples = [
        (PercentileMetric::UserRate, sorted(sdma_users), sorted(rsma_users)),
        (
            PercentileMetric::WeakestUser,
            sorted(sdma_weakest),
            sorted(rsma_weakest),
        ),
    ];
    let mut rows = Vec::new();
    for p in PERCENTILES {
        for (metric, s, r) in &samples {
            let sdma = nearest_rank(s, p as f64);
            let rsma = nearest_rank(r, p as f64);
            let (gain_pct, gt100) = if sdma < MIN_PERCENTILE_DENOMINATOR {
                (100.0, true)
            } else {
                let g = percent_gain(rsma, sdma);
                (g, g > 100.0)
            };
            rows.push(PercentileRow {
                percentile: p,
                metric: *metric,
                sdma,
                rsma,
                gain_pct,
                gt100,
            });
        }
    }
    rows
}

/// i.i.d. drop, optionally forcing users 0 and 1 into a highly correlated
/// pair with ρ drawn uniformly from `[0, max_rho]`.
fn percentile_drop_channels(
    rng: &mut impl Rng,
    config: &ExperimentConfig,
    n_users: usize,
    forced_pair_rho: Option<f64>,
) -> Result<ChannelSet> {
    let ch = generate_iid_with(rng, n_users, config.n_tx, config.snr_db)?;
    let Some(max_rho) = forced_pair_rho else {
        return Ok(ch);
    };
    if n_users < 2 || config.n_tx < 2 {
        return Ok(ch);
    }
    let rho = max_rho * rng.random::<f64>();
    let mut channels = ch.channels().to_vec();
    let anchor = normalized(&channels[0])?;
    channels[1] = correlated_with(rng, &anchor, rho, norm(&channels[1]));
    ChannelSet::new(channels, ch.noise_variance(), ch.tx_power())
}

/// 5th and 50th percentile gains of RSMA over SDMA for K-user i.i.d. drops.
pub fn run_percentile_gains(
    config: &ExperimentConfig,
    n_users: usize,
    n_drops: u64,
    seed: u64,
    forced_pair_rho: Option<f64>,
) -> Result<Vec<PercentileRow>> {
    if !matches!(n_users, 2 | 4) {
        return Err(ConfigError::OutOfRange {
            key: "n_users",
            bound: "2 or 4 for percentile_gains".into(),
        }
        .into());
    }
    if n_drops < 100 {
        return Err(ConfigError::OutOfRange {
            key: "n_drops",
            bound: ">= 100 for percentile_gains".into(),
        }
        .into());
    }
    let per_drop = par_drops(config.workers, n_drops, |i| {
        let mut rng = drop_rng(seed, i);
        let ch = percentile_drop_channels(&mut rng, config, n_users, forced_pair_rho)?;
        compare_schemes(&ch, config)
    })?;

    let mut sdma_users = Vec::with_capacity(per_drop.len() * n_users);
    let mut rsma_users = Vec::with_capacity(per_drop.len() * n_users);
    let mut sdma_weakest = Vec::with_capacity(per_drop.len());
    let mut rsma_weakest = Vec::with_capacity(per_drop.len());
    for (rsma, sdma) in &per_drop {
        sdma_users.extend_from_slice(&sdma.user_totals);
        rsma_users.extend_from_slice(&rsma.user_totals);
        sdma_weakest.push(sdma.min_user_rate());
        rsma_weakest.push(rsma.min_user_rate());
    }
    Ok(percentile_rows(sdma_users, rsma_users, sdma_weakest, rsma_weakest))
}

// ---------------------------------------------------------------------------
// Two-user fairness cases
// ---------------------------------------------------------------------------

/// `{0.1, 0.5, 0.9} × {0, −5, −10} dB`.
pub fn default_pair_cases() -> Vec<PairGeometry> {
    let mut cases = Vec::with_capacity(9);
    for rho in [0.1, 0.5, 0.9] {
        for alpha in [0.0, -5.0, -10.0] {
            cases.push(PairGeometry { rho, alpha_db: alpha });
        }
    }
    cases
}

/// Average per-user throughputs of one pair case. User 1 is the stronger.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCaseResult {
    pub case_id: usize,
    pub geometry: PairGeometry,
    pub rsma: [f64; 2],
    pub sdma: [f64; 2],
    pub noma: [f64; 2],
}

impl PairCaseResult {
    pub fn by_scheme(&self) -> [(Scheme, [f64; 2]); 3] {
        [
            (Scheme::Rsma, self.rsma),
            (Scheme::Sdma, self.sdma),
            (Scheme::Noma, self.noma),
        ]
    }
}

/// Best min-rate NOMA report over the power-split grid.
fn best_noma(ch: &ChannelSet, precoder: &[Complex64], grid_points: usize) -> Result<(f64, RateReport)> {
    let mut best: Option<(f64, RateReport)> = None;
    for split in power_grid(grid_points) {
        let r = noma_rates(ch, split, precoder)?;
        if best.as_ref().is_none_or(|(v, _)| r.min_user_rate() > *v) {
            best = Some((split, r));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Per-drop user totals of (RSMA, SDMA, NOMA). RSMA maximizes the minimum
/// user rate over a search space holding both the SDMA configuration
/// (t = 0) and every NOMA configuration on the NOMA grid.
pub fn pair_case_drop(ch: &ChannelSet, config: &ExperimentConfig) -> Result<[RateReport; 3]> {
    let private = private_precoders(ch, config.private)?;
    let sdma = sdma_rates(ch, &PrecoderSet::sdma(private.clone(), ch.tx_power()))?;
    let common = common_precoder(ch, config.common)?;
    let (_, noma) = best_noma(ch, &common, config.power_grid_points)?;

    let objective = PowerObjective::MinUserRate(AllocationPolicy::MaxMin);
    let split = allocate_power_for(ch, &private, &common, config.power_grid_points, objective)?;
    let mut rsma = rsma_rates(ch, &split, AllocationPolicy::MaxMin)?;
    for t in power_grid(config.power_grid_points) {
        let candidate = rsma_rates(ch, &noma_as_rsma(ch, t, &common), AllocationPolicy::MaxMin)?;
        if candidate.min_user_rate() > rsma.min_user_rate() {
            rsma = candidate;
        }
    }
    Ok([rsma, sdma, noma])
}

/// Averages per-user throughputs over `n_drops` realizations of each case.
pub fn run_pair_cases(
    cases: &[PairGeometry],
    config: &ExperimentConfig,
    n_drops: u64,
    seed: u64,
) -> Result<Vec<PairCaseResult>> {
    if cases.is_empty() {
        return Err(ConfigError::Invalid("no pair cases given".into()).into());
    }
    if n_drops == 0 {
        return Err(ConfigError::OutOfRange {
            key: "n_drops",
            bound: ">= 1".into(),
        }
        .into());
    }
    let total = cases.len() as u64 * n_drops;
    let reports = par_drops(config.workers, total, |i| {
        let case = (i / n_drops) as usize;
        let drop = i % n_drops;
        let mut rng = drop_rng(seed, ((case as u64) << 32) | drop);
        let ch = generate_pair_with(&mut rng, cases[case], config.n_tx, config.snr_db)?;
        pair_case_drop(&ch, config)
    })?;

    Ok(cases
        .iter()
        .enumerate()
        .map(|(case_id, geometry)| {
            let chunk = &reports[case_id * n_drops as usize..(case_id + 1) * n_drops as usize];
            let mean = |s: usize| -> [f64; 2] {
                let mut acc = [0.0; 2];
                for r in chunk {
                    acc[0] += r[s].user_totals[0];
                    acc[1] += r[s].user_totals[1];
                }
                [acc[0] / n_drops as f64, acc[1] / n_drops as f64]
            };
            PairCaseResult {
                case_id: case_id + 1,
                geometry: *geometry,
                rsma: mean(0),
                sdma: mean(1),
                noma: mean(2),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Overloaded network: 2 antennas, 4 users
// ---------------------------------------------------------------------------

pub const OVERLOADED_TX: usize = 2;
pub const OVERLOADED_USERS: usize = 4;

/// Users sharing the SDMA slots: (even slots, odd slots).
pub const SDMA_SLOT_GROUPS: [[usize; 2]; 2] = [[0, 1], [2, 3]];
/// Users with private streams under RSMA; the others ride the common stream.
pub const RSMA_PRIVATE_USERS: [usize; 2] = [0, 3];
pub const RSMA_COMMON_USERS: [usize; 2] = [1, 2];

/// Per-slot user throughputs for SDMA with two-group scheduling and for
/// RSMA serving everyone every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct OverloadedTrace {
    pub sdma: Vec<[f64; OVERLOADED_USERS]>,
    pub rsma: Vec<[f64; OVERLOADED_USERS]>,
}

impl OverloadedTrace {
    fn slots(&self, scheme: Scheme) -> &[[f64; OVERLOADED_USERS]] {
        match scheme {
            Scheme::Sdma => &self.sdma,
            _ => &self.rsma,
        }
    }

    pub fn min_per_slot(&self, scheme: Scheme) -> Vec<f64> {
        self.slots(scheme)
            .iter()
            .map(|s| s.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn time_average(&self, scheme: Scheme) -> [f64; OVERLOADED_USERS] {
        let slots = self.slots(scheme);
        let mut avg = [0.0; OVERLOADED_USERS];
        for s in slots {
            for (a, r) in avg.iter_mut().zip(s) {
                *a += r;
            }
        }
        avg.map(|a| a / slots.len() as f64)
    }

    /// Smallest time-averaged user throughput.
    pub fn time_averaged_min(&self, scheme: Scheme) -> f64 {
        self.time_average(scheme).into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn check_overloaded_shape(n_tx: usize, n_users: usize) -> Result<(), ConfigError> {
    if n_tx != OVERLOADED_TX || n_users != OVERLOADED_USERS {
        return Err(ConfigError::Invalid(format!(
            "overloaded experiment needs n_tx = {OVERLOADED_TX} and n_users = {OVERLOADED_USERS}, got n_tx = {n_tx}, n_users = {n_users}"
        )));
    }
    Ok(())
}

/// Two strong near-orthogonal users (1 and 4) and two weaker users (2 and
/// 3) sharing one direction, under a seeded random rotation of the array
/// and random per-user phases. Rotations and phases leave every rate
/// unchanged.
pub fn overloaded_scenario(snr_db: f64, seed: u64) -> Result<ChannelSet> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let weak = 0.1f64.sqrt() * std::f64::consts::FRAC_1_SQRT_2;
    let base = [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(weak, 0.0), c(weak, 0.0)],
        [c(weak, 0.0), c(weak, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
    ];
    let mut rng = drop_rng(seed, 0);
    // Random 2x2 unitary: [[a, -conj(b)], [b, conj(a)]] with |a|²+|b|² = 1.
    let theta = std::f64::consts::FRAC_PI_2 * rng.random::<f64>();
    let a = Complex64::from_polar(theta.cos(), std::f64::consts::TAU * rng.random::<f64>());
    let b = Complex64::from_polar(theta.sin(), std::f64::consts::TAU * rng.random::<f64>());
    let channels = base
        .iter()
        .map(|h| {
            let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
            vec![
                (a * h[0] - b.conj() * h[1]) * phase,
                (b * h[0] + a.conj() * h[1]) * phase,
            ]
        })
        .collect();
    let p = DEFAULT_TX_POWER;
    ChannelSet::new(channels, noise_for_snr(p, 1.0, snr_db), p)
}

fn sdma_slot(ch: &ChannelSet, users: [usize; 2]) -> Result<[f64; OVERLOADED_USERS]> {
    let sub = ch.subset(&users);
    let private = private_precoders(&sub, PrivatePrecoder::Zf)?;
    let report = sdma_rates(&sub, &PrecoderSet::sdma(private, sub.tx_power()))?;
    let mut rates = [0.0; OVERLOADED_USERS];
    for (u, r) in users.iter().zip(&report.user_totals) {
        rates[*u] = *r;
    }
    Ok(rates)
}

/// RSMA serving all four users: ZF private streams for users 1 and 4,
/// users 2 and 3 entirely on the common stream. The common rate must be
/// decodable by all four users and is shared max-min between users 2 and
/// 3. The power split maximizes the smallest user throughput.
pub fn overloaded_rsma(ch: &ChannelSet, common_kind: CommonPrecoder, grid_points: usize) -> Result<RateReport> {
    check_overloaded_shape(ch.n_tx(), ch.n_users())?;
    let private_pair = private_precoders(&ch.subset(&RSMA_PRIVATE_USERS), PrivatePrecoder::Zf)?;
    let common = common_precoder(ch, common_kind)?;
    let budget = ch.tx_power();

    let mut best: Option<RateReport> = None;
    for t in power_grid(grid_points) {
        let mut private = vec![common.clone(); OVERLOADED_USERS];
        let mut power_private = vec![0.0; OVERLOADED_USERS];
        for (beam, &u) in private_pair.iter().zip(&RSMA_PRIVATE_USERS) {
            private[u] = beam.clone();
            power_private[u] = (1.0 - t) * budget / RSMA_PRIVATE_USERS.len() as f64;
        }
        let pre = PrecoderSet {
            common: Some(common.clone()),
            private,
            sensing: None,
            power_common: t * budget,
            power_private,
            power_sensing: 0.0,
        };
        let raw = rsma_rates(ch, &pre, AllocationPolicy::MaxMin)?;
        let carried: Vec<f64> = RSMA_COMMON_USERS.iter().map(|&u| raw.private_rates[u]).collect();
        let share = allocate_common(raw.common_rate, &carried, AllocationPolicy::MaxMin);
        let mut alloc = vec![0.0; OVERLOADED_USERS];
        for (&u, c) in RSMA_COMMON_USERS.iter().zip(share) {
            alloc[u] = c;
        }
        let report = RateReport::assemble(Scheme::Rsma, raw.common_rate, alloc, raw.private_rates);
        if best.as_ref().is_none_or(|b| report.min_user_rate() > b.min_user_rate()) {
            best = Some(report);
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Slot-by-slot throughputs on a static channel. SDMA serves users 1 and 2
/// in even slots and users 3 and 4 in odd slots with ZF; RSMA serves all
/// four every slot.
pub fn run_overloaded(
    ch: &ChannelSet,
    common_kind: CommonPrecoder,
    grid_points: usize,
    n_slots: usize,
) -> Result<OverloadedTrace> {
    check_overloaded_shape(ch.n_tx(), ch.n_users())?;
    if n_slots == 0 {
        return Err(ConfigError::OutOfRange {
            key: "n_slots",
            bound: ">= 1".into(),
        }
        .into());
    }
    let even = sdma_slot(ch, SDMA_SLOT_GROUPS[0])?;
    let odd = sdma_slot(ch, SDMA_SLOT_GROUPS[1])?;
    let rsma = overloaded_rsma(ch, common_kind, grid_points)?;
    let mut rsma_slot = [0.0; OVERLOADED_USERS];
    rsma_slot.copy_from_slice(&rsma.user_totals);

    Ok(OverloadedTrace {
        sdma: (0..n_slots).map(|s| if s % 2 == 0 { even } else { odd }).collect(),
        rsma: vec![rsma_slot; n_slots],
    })
}

/// Shape check for the overloaded experiment without running it.
pub fn check_overloaded_config(n_tx: usize, n_users: usize) -> Result<()> {
    check_overloaded_shape(n_tx, n_users).map_err(Error::from)
}
