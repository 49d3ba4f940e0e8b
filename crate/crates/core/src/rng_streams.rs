//! Deterministic splittable random streams.
//!
//! A [`Stream`] is a pure function of its [`SeedSpec`] (root seed plus a
//! path of child indices): the cipher key is a hash of that seed spec, so
//! distinct paths yield statistically independent streams, derivation is
//! O(1), and no stream depends on the order other streams were created.
//! Replication engines derive one child stream per work chunk, which makes
//! every estimate reproducible bit for bit regardless of scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("exponential rate must be positive and finite, got {0}")]
    InvalidRate(f64),
}

/// Stream identity: a root seed plus a path of child indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub path: Vec<u64>,
}

impl SeedSpec {
    pub fn new(root_seed: u64) -> Self {
        SeedSpec {
            root_seed,
            path: Vec::new(),
        }
    }

    /// Same root with `index` appended to the path.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        SeedSpec {
            root_seed: self.root_seed,
            path,
        }
    }
}

/// A counted, deterministic random stream.
///
/// Implements [`RngCore`], so distribution adapters can draw from it; the
/// draw counter advances with every raw word consumed.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spec: SeedSpec,
    draws: u64,
}

impl Stream {
    pub fn from_spec(spec: &SeedSpec) -> Self {
        let mut h = Sha256::new();
        h.update(b"llr-stream-v1");
        h.update(spec.root_seed.to_le_bytes());
        h.update((spec.path.len() as u64).to_le_bytes());
        for p in &spec.path {
            h.update(p.to_le_bytes());
        }
        let key: [u8; 32] = h.finalize().into();
        Stream {
            rng: ChaCha8Rng::from_seed(key),
            spec: spec.clone(),
            draws: 0,
        }
    }

    pub fn spec(&self) -> &SeedSpec {
        &self.spec
    }

    /// Raw 64-bit words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on [0, 1) with 53 random bits; exactly one raw draw.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Exponential with the given rate by inverse CDF; exactly one raw draw.
    pub fn exponential(&mut self, rate: f64) -> Result<f64, StreamError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(StreamError::InvalidRate(rate));
        }
        Ok(exponential_inverse_cdf(self.uniform(), rate))
    }

    /// Standard normal via the ziggurat sampler.
    pub fn standard_normal(&mut self) -> f64 {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, self)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.draws += dest.len().div_ceil(8) as u64;
        self.rng.fill_bytes(dest);
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Stream for `seed.child(index)`.
pub fn derive_stream(seed: &SeedSpec, index: u64) -> Stream {
    Stream::from_spec(&seed.child(index))
}

/// Inverse CDF of the exponential law: (1 - u) survival, so u in [0, 1).
pub fn exponential_inverse_cdf(u: f64, rate: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&u));
    -(-u).ln_1p() / rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_composition_matches_direct_spec() {
        let base = SeedSpec::new(12345).child(0);
        let via_child = derive_stream(&base, 3);
        let direct = Stream::from_spec(&SeedSpec {
            root_seed: 12345,
            path: vec![0, 3],
        });
        let mut a = via_child;
        let mut b = direct;
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derivation_is_order_independent() {
        let root = SeedSpec::new(7);
        let mut first_then_second = (derive_stream(&root, 0), derive_stream(&root, 1));
        let mut second_then_first = (derive_stream(&root, 1), derive_stream(&root, 0));
        assert_eq!(first_then_second.0.next_u64(), second_then_first.1.next_u64());
        assert_eq!(first_then_second.1.next_u64(), second_then_first.0.next_u64());
    }

    #[test]
    fn golden_first_draws() {
        // Captured at crate creation; any change here is a silent break in
        // stream derivation and therefore in every recorded result.
        let mut s = Stream::from_spec(&SeedSpec::new(42));
        for g in GOLDEN_42 {
            assert_eq!(s.next_u64(), g);
        }
        let mut c = derive_stream(&SeedSpec::new(42), 0);
        assert_eq!(c.next_u64(), GOLDEN_42_CHILD0);
    }

    // Values frozen from the first build; see golden_first_draws.
    const GOLDEN_42: [u64; 4] = [
        2128715815001615472,
        13290210057241342461,
        18293184854921682524,
        17298151281061213247,
    ];
    const GOLDEN_42_CHILD0: u64 = 4892792202698792663;

    #[test]
    fn uniform_mean_and_range() {
        let mut s = Stream::from_spec(&SeedSpec::new(2024));
        let n = 1000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        let tol = 4.0 * (1.0 / 12.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean {mean} outside 0.5 +- {tol}");
        assert_eq!(s.draws(), n);
    }

    #[test]
    fn exponential_mean_and_forced_value() {
        let mut s = Stream::from_spec(&SeedSpec::new(99));
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += s.exponential(1.0).unwrap();
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 4.0e-3, "mean {mean}");

        // Forced uniform: u = 1 - e^-2 must map to exactly 2/rate.
        let u = 1.0 - (-2.0f64).exp();
        assert!((exponential_inverse_cdf(u, 1.0) - 2.0).abs() < 1e-12);
        assert!((exponential_inverse_cdf(u, 4.0) - 0.5).abs() < 1e-12);

        assert_eq!(s.exponential(0.0), Err(StreamError::InvalidRate(0.0)));
        assert!(s.exponential(f64::NAN).is_err());
        assert!(s.exponential(-1.0).is_err());
    }

    #[test]
    fn normal_mean_and_variance() {
        let mut s = Stream::from_spec(&SeedSpec::new(555));
        let n = 1_000_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.standard_normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn sibling_streams_are_uncorrelated() {
        let root = SeedSpec::new(31337);
        let mut a = derive_stream(&root, 0);
        let mut b = derive_stream(&root, 1);
        let n = 1_000_000;
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.uniform();
            let y = b.uniform();
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let va = saa / nf - (sa / nf) * (sa / nf);
        let vb = sbb / nf - (sb / nf) * (sb / nf);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.004, "corr {corr}");
    }

    #[test]
    fn clone_preserves_position() {
        let mut s = Stream::from_spec(&SeedSpec::new(1));
        s.uniform();
        let mut t = s.clone();
        assert_eq!(s.next_u64(), t.next_u64());
    }
}
