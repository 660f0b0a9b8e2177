//! Achievable rates (bit/s/Hz) for RSMA with an ideal SIC receiver, SDMA
//! (treat interference as noise) and two-user power-domain NOMA.
//!
//! A sensing stream, when present, reaches every user as interference that
//! cannot be cancelled.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::error::{ConfigError, Error, Result};
use crate::numerics::gain;
use crate::precoding::PrecoderSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Rsma,
    Sdma,
    Noma,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Rsma => "rsma",
            Scheme::Sdma => "sdma",
            Scheme::Noma => "noma",
        })
    }
}

/// How the common rate is shared between users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllocationPolicy {
    /// Water-fill to maximize the smallest user total.
    #[default]
    MaxMin,
    /// Everything to the user with the smallest private rate.
    AllToWeakest,
    EqualSplit,
}

impl FromStr for AllocationPolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "maxmin" => Ok(Self::MaxMin),
            "all_to_weakest" => Ok(Self::AllToWeakest),
            "equal" => Ok(Self::EqualSplit),
            other => Err(ConfigError::Parse {
                key: "allocation_policy".into(),
                value: other.into(),
            }),
        }
    }
}

impl fmt::Display for AllocationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MaxMin => "maxmin",
            Self::AllToWeakest => "all_to_weakest",
            Self::EqualSplit => "equal",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme: Scheme,
    pub common_rate: f64,
    pub common_allocation: Vec<f64>,
    pub private_rates: Vec<f64>,
    pub user_totals: Vec<f64>,
    pub sum_rate: f64,
}

impl RateReport {
    pub(crate) fn assemble(
        scheme: Scheme,
        common_rate: f64,
        common_allocation: Vec<f64>,
        private_rates: Vec<f64>,
    ) -> Self {
        let user_totals: Vec<f64> = common_allocation
            .iter()
            .zip(&private_rates)
            .map(|(c, r)| c + r)
            .collect();
        let sum_rate = user_totals.iter().sum();
        Self {
            scheme,
            common_rate,
            common_allocation,
            private_rates,
            user_totals,
            sum_rate,
        }
    }

    pub fn min_user_rate(&self) -> f64 {
        self.user_totals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Splits the common rate `common_rate` among users according to `policy`.
/// The parts always sum to `common_rate`.
pub fn allocate_common(common_rate: f64, private_rates: &[f64], policy: AllocationPolicy) -> Vec<f64> {
    let k = private_rates.len();
    let mut alloc = vec![0.0; k];
    if k == 0 {
        return alloc;
    }
    match policy {
        AllocationPolicy::EqualSplit => alloc.fill(common_rate / k as f64),
        AllocationPolicy::AllToWeakest => {
            let mut weakest = 0;
            for (i, r) in private_rates.iter().enumerate() {
                if *r < private_rates[weakest] {
                    weakest = i;
                }
            }
            alloc[weakest] = common_rate;
        }
        AllocationPolicy::MaxMin => {
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| private_rates[a].total_cmp(&private_rates[b]));
            // Raise the lowest `filled` users to a common water level.
            let mut base = 0.0;
            let mut level = 0.0;
            let mut filled = 0;
            for m in 1..=k {
                base += private_rates[order[m - 1]];
                let candidate = (common_rate + base) / m as f64;
                filled = m;
                level = candidate;
                if m == k || candidate <= private_rates[order[m]] {
                    break;
                }
            }
            for &i in &order[..filled] {
                alloc[i] = (level - private_rates[i]).max(0.0);
            }
        }
    }
    alloc
}

fn check_shapes(ch: &ChannelSet, pre: &PrecoderSet) -> Result<()> {
    let k = ch.n_users();
    if pre.private.len() != k || pre.power_private.len() != k {
        return Err(Error::Dimension {
            expected: k,
            actual: pre.private.len().min(pre.power_private.len()),
        });
    }
    let n = ch.n_tx();
    let vectors = pre.private.iter().chain(&pre.common).chain(&pre.sensing);
    for v in vectors {
        if v.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: v.len(),
            });
        }
    }
    if pre.power_common > 0.0 && pre.common.is_none() {
        return Err(Error::Degenerate("common power without a common precoder"));
    }
    if pre.power_sensing > 0.0 && pre.sensing.is_none() {
        return Err(Error::Degenerate("sensing power without a sensing precoder"));
    }
    Ok(())
}

fn sensing_interference(h: &[Complex64], pre: &PrecoderSet) -> f64 {
    match &pre.sensing {
        Some(s) if pre.power_sensing > 0.0 => pre.power_sensing * gain(h, s),
        _ => 0.0,
    }
}

/// Per-user private rates, treating other private streams and the sensing
/// stream as noise (the common stream has already been cancelled).
fn private_rates(ch: &ChannelSet, pre: &PrecoderSet) -> Vec<f64> {
    let sigma2 = ch.noise_variance();
    (0..ch.n_users())
        .map(|k| {
            let h = ch.channel(k);
            let signal = pre.power_private[k] * gain(h, &pre.private[k]);
            let mut interference = sigma2 + sensing_interference(h, pre);
            for (j, p) in pre.private.iter().enumerate() {
                if j != k {
                    interference += pre.power_private[j] * gain(h, p);
                }
            }
            (1.0 + signal / interference).log2()
        })
        .collect()
}

/// Per-user rate at which the common stream is decodable.
fn common_rates_per_user(ch: &ChannelSet, pre: &PrecoderSet) -> Vec<f64> {
    let Some(pc) = pre.common.as_ref().filter(|_| pre.power_common > 0.0) else {
        return vec![0.0; ch.n_users()];
    };
    let sigma2 = ch.noise_variance();
    ch.channels()
        .iter()
        .map(|h| {
            let signal = pre.power_common * gain(h, pc);
            let interference = pre
                .private
                .iter()
                .zip(&pre.power_private)
                .map(|(p, pw)| pw * gain(h, p))
                .sum::<f64>()
                + sensing_interference(h, pre)
                + sigma2;
            (1.0 + signal / interference).log2()
        })
        .collect()
}

/// Rates of one-layer RSMA with SIC. The common rate is the smallest
/// per-user decodable rate; it is then shared by `policy`.
pub fn rsma_rates(ch: &ChannelSet, pre: &PrecoderSet, policy: AllocationPolicy) -> Result<RateReport> {
    check_shapes(ch, pre)?;
    let common_rate = common_rates_per_user(ch, pre).into_iter().fold(f64::INFINITY, f64::min);
    let private = private_rates(ch, pre);
    let alloc = allocate_common(common_rate, &private, policy);
    Ok(RateReport::assemble(Scheme::Rsma, common_rate, alloc, private))
}

/// Sum rate of RSMA. Equal to `rsma_rates(..).sum_rate` for every policy.
pub(crate) fn rsma_sum_rate(ch: &ChannelSet, pre: &PrecoderSet) -> f64 {
    let common = common_rates_per_user(ch, pre).into_iter().fold(f64::INFINITY, f64::min);
    common + private_rates(ch, pre).iter().sum::<f64>()
}

/// SDMA rates: every user decodes only its own stream.
pub fn sdma_rates(ch: &ChannelSet, pre: &PrecoderSet) -> Result<RateReport> {
    check_shapes(ch, pre)?;
    if pre.power_common > 0.0 {
        return Err(Error::Degenerate("SDMA precoders carry no common stream"));
    }
    let k = ch.n_users();
    Ok(RateReport::assemble(
        Scheme::Sdma,
        0.0,
        vec![0.0; k],
        private_rates(ch, pre),
    ))
}

/// Two-user NOMA on one shared precoder. The weak user's message gets
/// `power_split·P` and must be decodable by both users; the strong user
/// removes it before decoding its own.
///
/// Reported in RSMA terms: the weak message is the common stream, owned
/// entirely by the weak user.
pub fn noma_rates(ch: &ChannelSet, power_split: f64, precoder: &[Complex64]) -> Result<RateReport> {
    if ch.n_users() != 2 {
        return Err(
            ConfigError::Invalid(format!("NOMA is defined for exactly two users, got {}", ch.n_users())).into(),
        );
    }
    if !(0.0..=1.0).contains(&power_split) {
        return Err(Error::Degenerate("NOMA power split must lie in [0, 1]"));
    }
    if precoder.len() != ch.n_tx() {
        return Err(Error::Dimension {
            expected: ch.n_tx(),
            actual: precoder.len(),
        });
    }
    let strong = ch.stronger_of(0, 1);
    let weak = 1 - strong;
    let p_weak = power_split * ch.tx_power();
    let p_strong = (1.0 - power_split) * ch.tx_power();
    let sigma2 = ch.noise_variance();

    let weak_rate = [strong, weak]
        .iter()
        .map(|&k| {
            let g = gain(ch.channel(k), precoder);
            (1.0 + p_weak * g / (p_strong * g + sigma2)).log2()
        })
        .fold(f64::INFINITY, f64::min);
    let strong_rate = (1.0 + p_strong * gain(ch.channel(strong), precoder) / sigma2).log2();

    let mut alloc = vec![0.0; 2];
    alloc[weak] = weak_rate;
    let mut private = vec![0.0; 2];
    private[strong] = strong_rate;
    Ok(RateReport::assemble(Scheme::Noma, weak_rate, alloc, private))
}

/// The RSMA precoder set that reproduces NOMA: the weak user's message is
/// carried entirely by the common stream and the strong user's entirely by
/// its private stream, both on `precoder`.
pub fn noma_as_rsma(ch: &ChannelSet, power_split: f64, precoder: &[Complex64]) -> PrecoderSet {
    let strong = ch.stronger_of(0, 1);
    let mut power_private = vec![0.0; 2];
    power_private[strong] = (1.0 - power_split) * ch.tx_power();
    PrecoderSet {
        common: Some(precoder.to_vec()),
        private: vec![precoder.to_vec(); 2],
        sensing: None,
        power_common: power_split * ch.tx_power(),
        power_private,
        power_sensing: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_pair, PairGeometry};
    use crate::precoding::{private_precoders, PrivatePrecoder};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn orthogonal_pair(noise: f64, power: f64) -> ChannelSet {
        ChannelSet::new(
            vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
            noise,
            power,
        )
        .unwrap()
    }

    fn hand_example() -> (ChannelSet, PrecoderSet) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ch = orthogonal_pair(1.0, 2.0);
        let pre = PrecoderSet {
            common: Some(vec![c(s, 0.), c(s, 0.)]),
            private: vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
            sensing: None,
            power_common: 1.0,
            power_private: vec![0.5, 0.5],
            power_sensing: 0.0,
        };
        (ch, pre)
    }

    #[test]
    fn rsma_hand_worked_example() {
        // SINR_c = 1·0.5 / (0.5·1 + 1) = 1/3; SINR_p = 0.5 / 1
        let (ch, pre) = hand_example();
        let r = rsma_rates(&ch, &pre, AllocationPolicy::MaxMin).unwrap();
        assert!((r.common_rate - 0.41504).abs() < 5e-6);
        assert!((r.private_rates[0] - 0.58496).abs() < 5e-6);
        assert!((r.private_rates[1] - 0.58496).abs() < 5e-6);
        assert!((r.sum_rate - 1.58496).abs() < 5e-6);
        assert!((r.common_allocation.iter().sum::<f64>() - r.common_rate).abs() < 1e-12);
    }

    #[test]
    fn rsma_scale_invariance() {
        let (ch, pre) = hand_example();
        let scaled = PrecoderSet {
            power_common: pre.power_common * 2.0,
            power_private: pre.power_private.iter().map(|p| p * 2.0).collect(),
            ..pre.clone()
        };
        let a = rsma_rates(&ch, &pre, AllocationPolicy::MaxMin).unwrap();
        let b = rsma_rates(&ch.scaled_power(2.0), &scaled, AllocationPolicy::MaxMin).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rsma_without_common_power_is_sdma() {
        let (ch, mut pre) = hand_example();
        pre.power_common = 0.0;
        let r = rsma_rates(&ch, &pre, AllocationPolicy::MaxMin).unwrap();
        let s = sdma_rates(&ch, &pre).unwrap();
        assert_eq!(r.user_totals, s.user_totals);
        assert_eq!(r.common_rate, 0.0);
    }

    #[test]
    fn sdma_examples() {
        let ch = orthogonal_pair(1.0, 2.0);
        let pre = PrecoderSet::private_only(private_precoders(&ch, PrivatePrecoder::Zf).unwrap(), vec![1.0, 1.0]);
        let r = sdma_rates(&ch, &pre).unwrap();
        assert!((r.private_rates[0] - 1.0).abs() < 1e-12);
        assert!((r.sum_rate - 2.0).abs() < 1e-12);

        let single = ChannelSet::new(vec![vec![c(0.6, 0.), c(0., 0.8)]], 1.0, 3.0).unwrap();
        let pre = PrecoderSet::private_only(private_precoders(&single, PrivatePrecoder::Mrt).unwrap(), vec![3.0]);
        assert!((sdma_rates(&single, &pre).unwrap().private_rates[0] - 2.0).abs() < 1e-12);

        let silent = PrecoderSet::private_only(private_precoders(&ch, PrivatePrecoder::Zf).unwrap(), vec![0.0, 0.0]);
        assert_eq!(sdma_rates(&ch, &silent).unwrap().sum_rate, 0.0);
    }

    #[test]
    fn sdma_rejects_common_power() {
        let (ch, pre) = hand_example();
        assert!(sdma_rates(&ch, &pre).is_err());
    }

    #[test]
    fn noma_hand_worked_example() {
        let ch = ChannelSet::new(vec![vec![c(1., 0.), c(0., 0.)], vec![c(0.5, 0.), c(0., 0.)]], 1.0, 2.0).unwrap();
        let p = [c(1., 0.), c(0., 0.)];
        let r = noma_rates(&ch, 0.9, &p).unwrap();
        assert!((r.common_rate - 0.51457).abs() < 5e-6);
        assert_eq!(r.common_allocation[1], r.common_rate);
        assert!((r.private_rates[0] - 0.26303).abs() < 5e-6);
        assert_eq!(r.private_rates[1], 0.0);

        let r = noma_rates(&ch, 0.0, &p).unwrap();
        assert_eq!(r.common_rate, 0.0);
        assert!((r.private_rates[0] - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn noma_requires_two_users() {
        let ch = ChannelSet::new(vec![vec![c(1., 0.)]], 1.0, 1.0).unwrap();
        assert!(matches!(noma_rates(&ch, 0.5, &[c(1., 0.)]), Err(Error::Config(_))));
    }

    #[test]
    fn noma_matches_its_rsma_embedding() {
        for seed in 0..200 {
            let ch = generate_pair(PairGeometry::new(0.3, -4.0).unwrap(), 2, 15.0, seed).unwrap();
            let p = crate::numerics::normalized(ch.channel(1)).unwrap();
            let split = 0.05 + 0.9 * (seed as f64 / 200.0);
            let noma = noma_rates(&ch, split, &p).unwrap();
            let rsma = rsma_rates(&ch, &noma_as_rsma(&ch, split, &p), AllocationPolicy::AllToWeakest).unwrap();
            for (a, b) in noma.user_totals.iter().zip(&rsma.user_totals) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn allocation_examples() {
        let a = allocate_common(1.0, &[0.2, 0.8], AllocationPolicy::MaxMin);
        assert!((a[0] - 0.8).abs() < 1e-12 && (a[1] - 0.2).abs() < 1e-12);

        let a = allocate_common(0.2, &[0.2, 0.8], AllocationPolicy::MaxMin);
        assert!((a[0] - 0.2).abs() < 1e-12 && a[1] == 0.0);

        assert_eq!(
            allocate_common(1.0, &[0.3, 0.9], AllocationPolicy::EqualSplit),
            vec![0.5, 0.5]
        );
        assert_eq!(
            allocate_common(1.0, &[0.3, 0.3], AllocationPolicy::AllToWeakest),
            vec![1.0, 0.0]
        );
        assert_eq!(
            allocate_common(1.0, &[0.9, 0.3], AllocationPolicy::AllToWeakest),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn maxmin_allocation_fills_in_sorted_order() {
        // levels 0.1, 0.5, 0.6, 2.0 with 1.0 to spend: raise the first three
        // to (1.0 + 1.2) / 3.
        let r = [0.5, 2.0, 0.1, 0.6];
        let a = allocate_common(1.0, &r, AllocationPolicy::MaxMin);
        let level = 2.2 / 3.0;
        assert!((a[0] + r[0] - level).abs() < 1e-12);
        assert!((a[2] + r[2] - level).abs() < 1e-12);
        assert!((a[3] + r[3] - level).abs() < 1e-12);
        assert_eq!(a[1], 0.0);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn allocation_sums_to_common_rate(
                rc in 0.0f64..10.0,
                privates in prop::collection::vec(0.0f64..10.0, 1..8),
                policy in prop_oneof![
                    Just(AllocationPolicy::MaxMin),
                    Just(AllocationPolicy::AllToWeakest),
                    Just(AllocationPolicy::EqualSplit),
                ],
            ) {
                let a = allocate_common(rc, &privates, policy);
                prop_assert!(a.iter().all(|&x| x >= 0.0));
                prop_assert!((a.iter().sum::<f64>() - rc).abs() < 1e-12);
            }

            #[test]
            fn maxmin_allocation_is_optimal_against_equal_split(
                rc in 0.0f64..10.0,
                privates in prop::collection::vec(0.0f64..10.0, 1..8),
            ) {
                let min_total = |a: &[f64]| privates.iter().zip(a).map(|(r, c)| r + c).fold(f64::INFINITY, f64::min);
                let mm = allocate_common(rc, &privates, AllocationPolicy::MaxMin);
                for other in [AllocationPolicy::AllToWeakest, AllocationPolicy::EqualSplit] {
                    prop_assert!(min_total(&mm) >= min_total(&allocate_common(rc, &privates, other)) - 1e-12);
                }
            }

            #[test]
            fn noise_increase_never_raises_rates(
                seed in any::<u64>(),
                rho in 0.0f64..1.0,
                t in 0.0f64..1.0,
                factor in 1.0f64..100.0,
            ) {
                let ch = generate_pair(PairGeometry::new(rho, -3.0).unwrap(), 2, 10.0, seed).unwrap();
                let noisy = ch.with_noise_variance(ch.noise_variance() * factor).unwrap();
                let private = private_precoders(&ch, PrivatePrecoder::Mrt).unwrap();
                let common = crate::precoding::common_precoder(&ch, crate::precoding::CommonPrecoder::SingularVector).unwrap();
                let pre = PrecoderSet::rsma(common, private, t, ch.tx_power());
                let a = rsma_rates(&ch, &pre, AllocationPolicy::EqualSplit).unwrap();
                let b = rsma_rates(&noisy, &pre, AllocationPolicy::EqualSplit).unwrap();
                prop_assert!(b.common_rate <= a.common_rate + 1e-12);
                for (x, y) in a.private_rates.iter().zip(&b.private_rates) {
                    prop_assert!(y <= &(x + 1e-12));
                }
            }
        }
    }
}
