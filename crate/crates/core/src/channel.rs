//! Channel containers, synthetic channel generation and the pairwise
//! geometry metrics (spatial correlation ρ and SINR disparity α) used to
//! bin system-level results.
//!
//! Every generator is a pure function of its parameters and a seed. The
//! random source is ChaCha8 with one stream per drop, so drops can be
//! generated in any order or on any thread and still come out identical.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{inner, norm, norm_sqr, normalized, ComplexMatrix};

/// Transmit power budget used by the synthetic generators (watts).
pub const DEFAULT_TX_POWER: f64 = 1.0;

/// Per-drop channel state: K single-antenna users served by an
/// `n_tx`-antenna transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    n_tx: usize,
    channels: Vec<Vec<Complex64>>,
    noise_variance: f64,
    tx_power: f64,
}

impl ChannelSet {
    pub fn new(channels: Vec<Vec<Complex64>>, noise_variance: f64, tx_power: f64) -> Result<Self> {
        let n_tx = channels
            .first()
            .map(Vec::len)
            .ok_or(Error::Degenerate("channel set needs at least one user"))?;
        if n_tx == 0 {
            return Err(Error::Degenerate("channel vectors are empty"));
        }
        for h in &channels {
            if h.len() != n_tx {
                return Err(Error::Dimension {
                    expected: n_tx,
                    actual: h.len(),
                });
            }
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Degenerate("channel has non-finite entries"));
            }
        }
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(Error::Degenerate("noise variance must be positive"));
        }
        if !(tx_power > 0.0 && tx_power.is_finite()) {
            return Err(Error::Degenerate("transmit power must be positive"));
        }
        Ok(Self {
            n_tx,
            channels,
            noise_variance,
            tx_power,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_users(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        &self.channels[k]
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    /// `P / σ²` in linear scale.
    pub fn snr(&self) -> f64 {
        self.tx_power / self.noise_variance
    }

    /// Matrix whose k-th row is `h_kᴴ`, so `(H p)_k = h_kᴴ p`.
    pub fn matrix(&self) -> ComplexMatrix {
        let rows: Vec<Vec<Complex64>> = self
            .channels
            .iter()
            .map(|h| h.iter().map(|z| z.conj()).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).expect("validated at construction")
    }

    /// A channel set restricted to the given users, in the given order.
    pub fn subset(&self, users: &[usize]) -> ChannelSet {
        ChannelSet {
            n_tx: self.n_tx,
            channels: users.iter().map(|&k| self.channels[k].clone()).collect(),
            noise_variance: self.noise_variance,
            tx_power: self.tx_power,
        }
    }

    /// Same channels with σ² and P both multiplied by `factor`.
    pub fn scaled_power(&self, factor: f64) -> ChannelSet {
        ChannelSet {
            noise_variance: self.noise_variance * factor,
            tx_power: self.tx_power * factor,
            ..self.clone()
        }
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<ChannelSet> {
        ChannelSet::new(self.channels.clone(), noise_variance, self.tx_power)
    }

    /// Index of the user with the larger channel norm among `a` and `b`;
    /// `a` wins ties.
    pub fn stronger_of(&self, a: usize, b: usize) -> usize {
        if norm_sqr(&self.channels[b]) > norm_sqr(&self.channels[a]) {
            b
        } else {
            a
        }
    }
}

/// Pairwise geometry of a two-user drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    /// 0 for aligned channels, 1 for orthogonal ones.
    pub rho: f64,
    /// Weak-to-strong channel power ratio in dB, never positive.
    pub alpha_db: f64,
}

impl PairGeometry {
    pub fn new(rho: f64, alpha_db: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Degenerate("rho must lie in [0, 1]"));
        }
        if !(alpha_db <= 0.0 && alpha_db.is_finite()) {
            return Err(Error::Degenerate("alpha must be a finite non-positive dB value"));
        }
        Ok(Self { rho, alpha_db })
    }
}

/// Sine of the principal angle between two channels.
///
/// Evaluated as the norm of the component of `h2` orthogonal to `h1`,
/// which stays accurate near alignment where `√(1 − cos²)` does not.
pub fn spatial_correlation(h1: &[Complex64], h2: &[Complex64]) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::Dimension {
            expected: h1.len(),
            actual: h2.len(),
        });
    }
    let n1 = norm_sqr(h1);
    let n2 = norm_sqr(h2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Degenerate("zero channel vector"));
    }
    let proj = inner(h1, h2) / n1;
    let residual: f64 = h1.iter().zip(h2).map(|(a, b)| (b - proj * a).norm_sqr()).sum();
    Ok((residual / n2).sqrt().clamp(0.0, 1.0))
}

/// `10·log10(min(‖h_a‖², ‖h_b‖²) / max(‖h_a‖², ‖h_b‖²))`.
pub fn sinr_disparity(h_a: &[Complex64], h_b: &[Complex64]) -> Result<f64> {
    let a = norm_sqr(h_a);
    let b = norm_sqr(h_b);
    if a == 0.0 || b == 0.0 {
        return Err(Error::Degenerate("zero channel vector"));
    }
    Ok(10.0 * (a.min(b) / a.max(b)).log10())
}

/// Random source for drop `index` of a run seeded with `seed`.
pub fn drop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One circularly-symmetric complex Gaussian sample of the given variance
/// (Box–Muller).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt() * (variance / 2.0).sqrt();
    let theta = 2.0 * PI * u2;
    Complex64::new(r * theta.cos(), r * theta.sin())
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> Vec<Complex64> {
    (0..len).map(|_| complex_gaussian(rng, variance)).collect()
}

pub(crate) fn noise_for_snr(tx_power: f64, reference_gain: f64, snr_db: f64) -> f64 {
    tx_power * reference_gain / 10f64.powf(snr_db / 10.0)
}

/// Draws a unit vector orthogonal to the unit vector `u`.
pub(crate) fn random_orthogonal_unit<R: Rng + ?Sized>(rng: &mut R, u: &[Complex64]) -> Vec<Complex64> {
    loop {
        let g = gaussian_vector(rng, u.len(), 1.0);
        let proj = inner(u, &g);
        let mut e: Vec<Complex64> = g.iter().zip(u).map(|(x, y)| x - proj * y).collect();
        // A second projection pass removes the rounding left by the first.
        let proj = inner(u, &e);
        for (x, y) in e.iter_mut().zip(u) {
            *x -= proj * y;
        }
        if norm(&e) > 1e-6 {
            return normalized(&e).expect("nonzero");
        }
    }
}

/// `β·(√(1−ρ²)·e^{jφ}·u + ρ·e⊥)` for unit `u`, drawing φ and e⊥ from `rng`.
pub(crate) fn correlated_with<R: Rng + ?Sized>(rng: &mut R, u: &[Complex64], rho: f64, beta: f64) -> Vec<Complex64> {
    let phi = 2.0 * PI * rng.random::<f64>();
    let rot = Complex64::from_polar((1.0 - rho * rho).sqrt(), phi);
    let e_perp = random_orthogonal_unit(rng, u);
    u.iter().zip(&e_perp).map(|(a, e)| (rot * a + e * rho) * beta).collect()
}

/// Two-user drop with prescribed geometry, drawn from `rng`.
pub fn generate_pair_with<R: Rng + ?Sized>(
    rng: &mut R,
    geom: PairGeometry,
    n_tx: usize,
    snr_db: f64,
) -> Result<ChannelSet> {
    if n_tx < 2 {
        return Err(Error::Degenerate("pair generation needs at least two antennas"));
    }
    let h1 = normalized(&gaussian_vector(rng, n_tx, 1.0))?;
    let beta = 10f64.powf(geom.alpha_db / 20.0);
    let h2 = correlated_with(rng, &h1, geom.rho, beta);
    let p = DEFAULT_TX_POWER;
    ChannelSet::new(vec![h1, h2], noise_for_snr(p, 1.0, snr_db), p)
}

/// Two-user drop whose ρ and α equal `geom`. User 0 is the stronger one
/// (`‖h1‖² = 1`) and `P‖h1‖²/σ²` equals `snr_db`.
pub fn generate_pair(geom: PairGeometry, n_tx: usize, snr_db: f64, seed: u64) -> Result<ChannelSet> {
    generate_pair_with(&mut drop_rng(seed, 0), geom, n_tx, snr_db)
}

/// K users with i.i.d. CN(0, 1/n_tx) entries, drawn from `rng`.
pub fn generate_iid_with<R: Rng + ?Sized>(rng: &mut R, n_users: usize, n_tx: usize, snr_db: f64) -> Result<ChannelSet> {
    if n_users == 0 || n_tx == 0 {
        return Err(Error::Degenerate("need at least one user and one antenna"));
    }
    let variance = 1.0 / n_tx as f64;
    let channels = (0..n_users).map(|_| gaussian_vector(rng, n_tx, variance)).collect();
    let p = DEFAULT_TX_POWER;
    ChannelSet::new(channels, noise_for_snr(p, 1.0, snr_db), p)
}

/// i.i.d. Rayleigh drop; σ² is set against a reference `‖h‖² = 1`.
pub fn generate_iid(n_users: usize, n_tx: usize, snr_db: f64, seed: u64) -> Result<ChannelSet> {
    generate_iid_with(&mut drop_rng(seed, 0), n_users, n_tx, snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(
            spatial_correlation(&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(1., 0.)]).unwrap(),
            1.0
        );
        assert_eq!(
            spatial_correlation(&[c(1., 0.), c(0., 0.)], &[c(3., 0.), c(0., 0.)]).unwrap(),
            0.0
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = spatial_correlation(&[c(1., 0.), c(0., 0.)], &[c(s, 0.), c(s, 0.)]).unwrap();
        assert!((rho - s).abs() < 1e-12);
    }

    #[test]
    fn correlation_rejects_zero_vector() {
        assert!(spatial_correlation(&[c(0., 0.), c(0., 0.)], &[c(1., 0.), c(0., 0.)]).is_err());
    }

    #[test]
    fn disparity_examples() {
        let a = [c(1., 0.), c(0., 1.)];
        let b = [c(0., 1.), c(1., 0.)];
        assert_eq!(sinr_disparity(&a, &b).unwrap(), 0.0);

        let s = 0.1f64.sqrt();
        let weak = [c(s, 0.), c(0., 0.)];
        let strong = [c(1., 0.), c(0., 0.)];
        assert!((sinr_disparity(&strong, &weak).unwrap() + 10.0).abs() < 1e-12);
        assert_eq!(
            sinr_disparity(&strong, &weak).unwrap(),
            sinr_disparity(&weak, &strong).unwrap()
        );
        assert!(sinr_disparity(&[c(0., 0.)], &[c(1., 0.)]).is_err());
    }

    #[test]
    fn pair_boundary_geometries() {
        let aligned = generate_pair(PairGeometry::new(0.0, -3.0).unwrap(), 4, 20.0, 3).unwrap();
        assert!(spatial_correlation(aligned.channel(0), aligned.channel(1)).unwrap() < 1e-9);

        let orth = generate_pair(PairGeometry::new(1.0, -3.0).unwrap(), 4, 20.0, 3).unwrap();
        assert!(inner(orth.channel(0), orth.channel(1)).norm() < 1e-9);
    }

    #[test]
    fn pair_round_trip_example() {
        let ch = generate_pair(PairGeometry::new(0.5, -6.0).unwrap(), 2, 20.0, 7).unwrap();
        let rho = spatial_correlation(ch.channel(0), ch.channel(1)).unwrap();
        let alpha = sinr_disparity(ch.channel(0), ch.channel(1)).unwrap();
        assert!((rho - 0.5).abs() < 1e-9);
        assert!((alpha + 6.0).abs() < 1e-9);
        assert!((norm_sqr(ch.channel(0)) - 1.0).abs() < 1e-12);
        // 20 dB with P = 1, ‖h1‖² = 1
        assert!((ch.snr() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn pair_needs_two_antennas() {
        assert!(generate_pair(PairGeometry::new(0.5, 0.0).unwrap(), 1, 10.0, 1).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(PairGeometry::new(1.2, 0.0).is_err());
        assert!(PairGeometry::new(0.5, 1.0).is_err());
    }

    #[test]
    fn iid_is_deterministic_and_seed_sensitive() {
        let a = generate_iid(4, 4, 10.0, 11).unwrap();
        let b = generate_iid(4, 4, 10.0, 11).unwrap();
        let other = generate_iid(4, 4, 10.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn iid_mean_channel_power() {
        // law of large numbers oracle: E‖h‖² = n_tx · (1/n_tx) = 1
        let n = 10_000u64;
        let mut rng = drop_rng(5, 0);
        let mean: f64 = (0..n)
            .map(|_| norm_sqr(generate_iid_with(&mut rng, 1, 4, 10.0).unwrap().channel(0)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn channel_set_validation() {
        assert!(ChannelSet::new(vec![], 1.0, 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(1., 0.)], vec![c(1., 0.), c(0., 0.)]], 1.0, 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(1., 0.)]], 0.0, 1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(1., 0.)]], 1.0, -1.0).is_err());
        assert!(ChannelSet::new(vec![vec![c(f64::NAN, 0.)]], 1.0, 1.0).is_err());
    }

    fn arb_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
            .prop_map(|v| v.into_iter().map(|(r, i)| c(r, i)).collect())
            .prop_filter("nonzero", |v: &Vec<Complex64>| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn correlation_is_scale_invariant(
            h1 in arb_vec(3),
            h2 in arb_vec(3),
            (m1, a1) in (0.1f64..10.0, 0.0f64..6.3),
            (m2, a2) in (0.1f64..10.0, 0.0f64..6.3),
        ) {
            let s1 = Complex64::from_polar(m1, a1);
            let s2 = Complex64::from_polar(m2, a2);
            let g1: Vec<_> = h1.iter().map(|z| z * s1).collect();
            let g2: Vec<_> = h2.iter().map(|z| z * s2).collect();
            let base = spatial_correlation(&h1, &h2).unwrap();
            prop_assert!((spatial_correlation(&g1, &g2).unwrap() - base).abs() < 1e-12);
        }

        #[test]
        fn pair_generation_round_trips(
            rho in 0.0f64..=1.0,
            alpha in -30.0f64..=0.0,
            seed in any::<u64>(),
            n_tx in 2usize..6,
        ) {
            let ch = generate_pair(PairGeometry::new(rho, alpha).unwrap(), n_tx, 15.0, seed).unwrap();
            let r = spatial_correlation(ch.channel(0), ch.channel(1)).unwrap();
            let a = sinr_disparity(ch.channel(0), ch.channel(1)).unwrap();
            prop_assert!((r - rho).abs() < 1e-9, "rho {} vs {}", r, rho);
            prop_assert!((a - alpha).abs() < 1e-9, "alpha {} vs {}", a, alpha);
        }
    }
}
