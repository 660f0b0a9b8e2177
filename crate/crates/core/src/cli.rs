//! Run configuration, experiment dispatch and CSV output.
//!
//! Configurations are flat `key = value` documents with `#` comments and
//! comma-separated lists:
//!
//! ```text
//! experiment = binned_gains
//! n_drops = 50000
//! rho_edges = 0, 0.2, 0.5, 0.8, 1
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{ConfigError, Error, Result};
use crate::isac::{self, ScenarioTag, SweepGrid, DEFAULT_SWEEP_POINTS};
use crate::montecarlo::{self, ExperimentConfig, OVERLOADED_USERS};
use crate::precoding::{CommonPrecoder, IsacOption, PrivatePrecoder, DEFAULT_POWER_GRID};
use crate::rates::{AllocationPolicy, Scheme};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_DROPS: u64 = 10_000;
pub const DEFAULT_SLOTS: usize = 10;
pub const DEFAULT_RHO_EDGES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
pub const DEFAULT_ALPHA_EDGES: [f64; 4] = [-30.0, -20.0, -10.0, 0.0];

const RATE_DIGITS: usize = 6;
const DB_DIGITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BinnedGains,
    PercentileGains,
    PairCases,
    Overloaded,
    Isac,
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "binned_gains" => Ok(Self::BinnedGains),
            "percentile_gains" => Ok(Self::PercentileGains),
            "pair_cases" => Ok(Self::PairCases),
            "overloaded" => Ok(Self::Overloaded),
            "isac" => Ok(Self::Isac),
            other => Err(ConfigError::Parse {
                key: "experiment".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BinnedGains => "binned_gains",
            Self::PercentileGains => "percentile_gains",
            Self::PairCases => "pair_cases",
            Self::Overloaded => "overloaded",
            Self::Isac => "isac",
        })
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Drops per run; per case for `pair_cases`.
    pub n_drops: u64,
    pub n_tx: usize,
    pub n_users: usize,
    pub snr_db: f64,
    pub precoder: PrivatePrecoder,
    pub common_precoder: CommonPrecoder,
    pub allocation_policy: AllocationPolicy,
    pub power_grid_points: usize,
    pub rho_edges: Vec<f64>,
    pub alpha_edges: Vec<f64>,
    pub isac_option: Option<IsacOption>,
    /// `None` runs every reference scenario.
    pub isac_scenario: Option<ScenarioTag>,
    pub isac_grid_points: usize,
    /// Forces users 1 and 2 of each percentile drop into a pair with
    /// correlation parameter at most this value.
    pub pair_rho_max: Option<f64>,
    pub n_slots: usize,
    /// 0 uses one worker per core.
    pub workers: usize,
    pub output_path: PathBuf,
}

const KEYS: [&str; 19] = [
    "experiment",
    "seed",
    "n_drops",
    "n_tx",
    "n_users",
    "snr_db",
    "precoder",
    "common_precoder",
    "allocation_policy",
    "power_grid_points",
    "rho_edges",
    "alpha_edges",
    "isac_option",
    "isac_scenario",
    "isac_grid_points",
    "pair_rho_max",
    "n_slots",
    "workers",
    "output_path",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn at_least<T: PartialOrd + fmt::Display>(key: &'static str, value: T, min: T) -> Result<T, ConfigError> {
    if value < min {
        return Err(ConfigError::OutOfRange {
            key,
            bound: format!(">= {min}"),
        });
    }
    Ok(value)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax(i + 1));
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        if entries.insert(key, value).is_some() {
            return Err(ConfigError::Invalid(format!("duplicate key `{key}`")));
        }
    }
    let get = |k: &str| entries.get(k).copied();

    let experiment: Experiment = parse_value(
        "experiment",
        get("experiment").ok_or(ConfigError::MissingKey("experiment"))?,
    )?;
    let seed = get("seed").map_or(Ok(DEFAULT_SEED), |v| parse_value("seed", v))?;
    let n_drops = get("n_drops").map_or(Ok(DEFAULT_DROPS), |v| parse_value("n_drops", v))?;
    let n_tx = get("n_tx").map_or(Ok(2), |v| parse_value("n_tx", v))?;
    let default_users = match experiment {
        Experiment::Overloaded => OVERLOADED_USERS,
        _ => 2,
    };
    let n_users = get("n_users").map_or(Ok(default_users), |v| parse_value("n_users", v))?;
    let snr_db = get("snr_db").map_or(Ok(20.0), |v| parse_value("snr_db", v))?;
    let precoder = get("precoder").map_or(Ok(PrivatePrecoder::default()), str::parse)?;
    let common_precoder = get("common_precoder").map_or(Ok(CommonPrecoder::default_for(n_users)), str::parse)?;
    let allocation_policy = get("allocation_policy").map_or(Ok(AllocationPolicy::default()), str::parse)?;
    let power_grid_points =
        get("power_grid_points").map_or(Ok(DEFAULT_POWER_GRID), |v| parse_value("power_grid_points", v))?;
    let rho_edges = get("rho_edges").map_or(Ok(DEFAULT_RHO_EDGES.to_vec()), |v| parse_list("rho_edges", v))?;
    let alpha_edges = get("alpha_edges").map_or(Ok(DEFAULT_ALPHA_EDGES.to_vec()), |v| parse_list("alpha_edges", v))?;
    let isac_option = get("isac_option").map(str::parse).transpose()?;
    let isac_scenario = get("isac_scenario").map(str::parse).transpose()?;
    let isac_grid_points =
        get("isac_grid_points").map_or(Ok(DEFAULT_SWEEP_POINTS), |v| parse_value("isac_grid_points", v))?;
    let pair_rho_max = get("pair_rho_max")
        .map(|v| parse_value("pair_rho_max", v))
        .transpose()?;
    let n_slots = get("n_slots").map_or(Ok(DEFAULT_SLOTS), |v| parse_value("n_slots", v))?;
    let workers = get("workers").map_or(Ok(0), |v| parse_value("workers", v))?;
    let output_path = get("output_path").map_or_else(|| PathBuf::from(format!("{experiment}.csv")), PathBuf::from);

    let config = SimConfig {
        experiment,
        seed,
        n_drops,
        n_tx,
        n_users,
        snr_db,
        precoder,
        common_precoder,
        allocation_policy,
        power_grid_points,
        rho_edges,
        alpha_edges,
        isac_option,
        isac_scenario,
        isac_grid_points,
        pair_rho_max,
        n_slots,
        workers,
        output_path,
    };
    config.validate()?;
    Ok(config)
}

impl SimConfig {
    /// Checks every bound, including the experiment-specific ones.
    pub fn validate(&self) -> Result<(), ConfigError> {
        at_least("n_drops", self.n_drops, 1)?;
        at_least("n_tx", self.n_tx, 1)?;
        at_least("n_users", self.n_users, 1)?;
        at_least("power_grid_points", self.power_grid_points, 2)?;
        at_least("isac_grid_points", self.isac_grid_points, 2)?;
        at_least("n_slots", self.n_slots, 1)?;
        if !self.snr_db.is_finite() {
            return Err(ConfigError::OutOfRange {
                key: "snr_db",
                bound: "finite".into(),
            });
        }
        if let Some(r) = self.pair_rho_max {
            if !(0.0..=1.0).contains(&r) {
                return Err(ConfigError::OutOfRange {
                    key: "pair_rho_max",
                    bound: "[0, 1]".into(),
                });
            }
        }
        if self.output_path.as_os_str().is_empty() {
            return Err(ConfigError::OutOfRange {
                key: "output_path",
                bound: "non-empty".into(),
            });
        }
        if self.common_precoder == CommonPrecoder::MaxMin && self.n_users > 2 {
            return Err(ConfigError::OutOfRange {
                key: "common_precoder",
                bound: "maxmin needs n_users <= 2".into(),
            });
        }
        if self.precoder == PrivatePrecoder::Zf && self.n_users > self.n_tx && self.experiment != Experiment::Overloaded
        {
            return Err(ConfigError::OutOfRange {
                key: "precoder",
                bound: "zf needs n_users <= n_tx".into(),
            });
        }
        match (self.experiment, self.isac_option) {
            (Experiment::Isac, None) => return Err(ConfigError::MissingKey("isac_option")),
            (Experiment::Isac, Some(_)) => {}
            (_, Some(_)) => {
                return Err(ConfigError::Invalid(
                    "key `isac_option` is only valid with experiment = isac".into(),
                ))
            }
            (_, None) => {}
        }
        if self.isac_scenario.is_some() && self.experiment != Experiment::Isac {
            return Err(ConfigError::Invalid(
                "key `isac_scenario` is only valid with experiment = isac".into(),
            ));
        }

        let two_users = |what: &str| -> Result<(), ConfigError> {
            if self.n_users != 2 {
                return Err(ConfigError::OutOfRange {
                    key: "n_users",
                    bound: format!("2 for {what}"),
                });
            }
            at_least("n_tx", self.n_tx, 2)?;
            Ok(())
        };
        match self.experiment {
            Experiment::BinnedGains => {
                two_users("binned_gains")?;
                montecarlo::validate_edges(&self.rho_edges, &self.alpha_edges)?;
            }
            Experiment::PairCases => two_users("pair_cases")?,
            Experiment::PercentileGains => {
                if !matches!(self.n_users, 2 | 4) {
                    return Err(ConfigError::OutOfRange {
                        key: "n_users",
                        bound: "2 or 4 for percentile_gains".into(),
                    });
                }
                at_least("n_drops", self.n_drops, 100)?;
            }
            Experiment::Overloaded => {
                montecarlo::check_overloaded_config(self.n_tx, self.n_users).map_err(|e| match e {
                    Error::Config(c) => c,
                    other => ConfigError::Invalid(other.to_string()),
                })?
            }
            Experiment::Isac => {
                if self.n_users != 2 {
                    return Err(ConfigError::OutOfRange {
                        key: "n_users",
                        bound: "2 for isac".into(),
                    });
                }
                at_least("n_tx", self.n_tx, 2)?;
            }
        }
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_tx: self.n_tx,
            snr_db: self.snr_db,
            private: self.precoder,
            common: self.common_precoder,
            policy: self.allocation_policy,
            power_grid_points: self.power_grid_points,
            workers: self.workers,
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

/// Serializes every key, so that parsing the output gives back `self`.
impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment = {}", self.experiment)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "n_drops = {}", self.n_drops)?;
        writeln!(f, "n_tx = {}", self.n_tx)?;
        writeln!(f, "n_users = {}", self.n_users)?;
        writeln!(f, "snr_db = {}", self.snr_db)?;
        writeln!(f, "precoder = {}", self.precoder)?;
        writeln!(f, "common_precoder = {}", self.common_precoder)?;
        writeln!(f, "allocation_policy = {}", self.allocation_policy)?;
        writeln!(f, "power_grid_points = {}", self.power_grid_points)?;
        writeln!(f, "rho_edges = {}", join(&self.rho_edges))?;
        writeln!(f, "alpha_edges = {}", join(&self.alpha_edges))?;
        if let Some(o) = self.isac_option {
            writeln!(f, "isac_option = {o}")?;
        }
        if let Some(s) = self.isac_scenario {
            writeln!(f, "isac_scenario = {s}")?;
        }
        writeln!(f, "isac_grid_points = {}", self.isac_grid_points)?;
        if let Some(r) = self.pair_rho_max {
            writeln!(f, "pair_rho_max = {r}")?;
        }
        writeln!(f, "n_slots = {}", self.n_slots)?;
        writeln!(f, "workers = {}", self.workers)?;
        writeln!(f, "output_path = {}", self.output_path.display())
    }
}

/// `x` to `digits` significant digits, `%g` style.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn rate(x: f64) -> String {
    format_sig(x, RATE_DIGITS)
}

fn db(x: f64) -> String {
    format_sig(x, DB_DIGITS)
}

/// Outcome of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: Experiment,
    /// Channel realizations (or sweep points) evaluated.
    pub evaluations: u64,
    pub wall_time: Duration,
    pub output_path: PathBuf,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} evaluations in {:.3} s, wrote {}",
            self.experiment,
            self.evaluations,
            self.wall_time.as_secs_f64(),
            self.output_path.display()
        )
    }
}

/// Runs the experiment and returns the CSV text with the number of
/// evaluations behind it.
pub fn render_csv(config: &SimConfig) -> Result<(String, u64)> {
    config.validate()?;
    let exp = config.experiment_config();
    let mut out = String::new();
    let evaluations = match config.experiment {
        Experiment::BinnedGains => {
            let grid = montecarlo::run_binned_gains(
                &exp,
                &config.rho_edges,
                &config.alpha_edges,
                config.n_drops,
                config.seed,
            )?;
            out.push_str("rho_lo,rho_hi,alpha_lo,alpha_hi,n,g_w,g_s,g_sum,n_excluded\n");
            for i in 0..grid.n_rho_bins() {
                for j in 0..grid.n_alpha_bins() {
                    let c = grid.cell(i, j);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        rate(grid.rho_edges[i]),
                        rate(grid.rho_edges[i + 1]),
                        db(grid.alpha_edges[j]),
                        db(grid.alpha_edges[j + 1]),
                        c.n,
                        rate(c.g_w),
                        rate(c.g_s),
                        rate(c.g_sum),
                        c.n_excluded
                    );
                }
            }
            config.n_drops
        }
        Experiment::PercentileGains => {
            let rows = montecarlo::run_percentile_gains(
                &exp,
                config.n_users,
                config.n_drops,
                config.seed,
                config.pair_rho_max,
            )?;
            out.push_str("percentile,metric,sdma_value,rsma_value,gain_pct,gt100_flag\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.percentile,
                    r.metric,
                    rate(r.sdma),
                    rate(r.rsma),
                    rate(r.gain_pct),
                    u8::from(r.gt100)
                );
            }
            config.n_drops
        }
        Experiment::PairCases => {
            let cases = montecarlo::default_pair_cases();
            let results = montecarlo::run_pair_cases(&cases, &exp, config.n_drops, config.seed)?;
            out.push_str("case_id,rho,alpha_db,scheme,user1_rate,user2_rate\n");
            for r in &results {
                for (scheme, rates) in r.by_scheme() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.case_id,
                        rate(r.geometry.rho),
                        db(r.geometry.alpha_db),
                        scheme,
                        rate(rates[0]),
                        rate(rates[1])
                    );
                }
            }
            config.n_drops * cases.len() as u64
        }
        Experiment::Overloaded => {
            let ch = montecarlo::overloaded_scenario(config.snr_db, config.seed)?;
            let trace =
                montecarlo::run_overloaded(&ch, config.common_precoder, config.power_grid_points, config.n_slots)?;
            out.push_str("slot,scheme,user,rate\n");
            for slot in 0..config.n_slots {
                for (scheme, rates) in [(Scheme::Sdma, &trace.sdma[slot]), (Scheme::Rsma, &trace.rsma[slot])] {
                    for (user, r) in rates.iter().enumerate() {
                        let _ = writeln!(out, "{slot},{scheme},{},{}", user + 1, rate(*r));
                    }
                }
            }
            config.n_slots as u64
        }
        Experiment::Isac => {
            let option = config.isac_option.ok_or(ConfigError::MissingKey("isac_option"))?;
            let tags = config.isac_scenario.map_or(ScenarioTag::ALL.to_vec(), |t| vec![t]);
            out.push_str("option,scenario,mu,common_fraction,throughput,radar_snr_db,on_envelope\n");
            let mut count = 0;
            for tag in tags {
                let scn = isac::scenario(tag).with_array(config.n_tx, config.snr_db)?;
                let points = isac::sweep_points(
                    &scn,
                    option,
                    config.precoder,
                    config.common_precoder,
                    SweepGrid::uniform(config.isac_grid_points),
                    config.seed,
                )?;
                for p in &points {
                    let _ = writeln!(
                        out,
                        "{option},{tag},{},{},{},{},{}",
                        rate(p.mu),
                        rate(p.common_fraction),
                        rate(p.throughput),
                        db(p.radar_snr_db),
                        u8::from(p.on_envelope)
                    );
                }
                count += points.len() as u64;
            }
            count
        }
    };
    Ok((out, evaluations))
}

/// Replaces `path` with `contents` in one rename; a failure leaves any
/// existing file untouched.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Runs the configured experiment and writes its CSV.
pub fn run(config: &SimConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let (csv, evaluations) = render_csv(config)?;
    write_atomic(&config.output_path, &csv)?;
    Ok(RunSummary {
        experiment: config.experiment,
        evaluations,
        wall_time: start.elapsed(),
        output_path: config.output_path.clone(),
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}
