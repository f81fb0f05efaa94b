//! Named, seeded random streams.
//!
//! Each concern (radio noise, MAC back-off, protocol choices, topology,
//! traffic, mobility) draws from its own ChaCha8 stream. Two runs that differ
//! only in protocol therefore see the same topology, traffic and radio noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::KernelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamId {
    Radio,
    Mac,
    Protocol,
    Topology,
    Traffic,
    Mobility,
}

impl StreamId {
    pub const ALL: [StreamId; 6] = [
        StreamId::Radio,
        StreamId::Mac,
        StreamId::Protocol,
        StreamId::Topology,
        StreamId::Traffic,
        StreamId::Mobility,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StreamId::Radio => "radio",
            StreamId::Mac => "mac",
            StreamId::Protocol => "protocol",
            StreamId::Topology => "topology",
            StreamId::Traffic => "traffic",
            StreamId::Mobility => "mobility",
        }
    }

    fn index(self) -> u64 {
        match self {
            StreamId::Radio => 1,
            StreamId::Mac => 2,
            StreamId::Protocol => 3,
            StreamId::Topology => 4,
            StreamId::Traffic => 5,
            StreamId::Mobility => 6,
        }
    }
}

/// A reproducible random source identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: StreamId,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.index());
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` when the range is empty.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        if hi <= lo {
            return lo;
        }
        self.rng.random_range(lo..=hi)
    }

    /// Zero-mean normal draw with standard deviation `sigma`.
    pub fn normal(&mut self, sigma: f64) -> Result<f64, KernelError> {
        if !(sigma >= 0.0) {
            return Err(KernelError::NegativeSigma(sigma));
        }
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let z: f64 = self.rng.sample(StandardNormal);
        Ok(sigma * z)
    }

    /// Index drawn proportionally to `weights`; `None` when the total mass is
    /// zero or not finite.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        let target = self.uniform() * total;
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = Some(i);
                if target < acc {
                    return Some(i);
                }
            }
        }
        last_positive
    }
}

/// Derive a well-mixed 64-bit seed from a base seed and a list of labels.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x9E37_79B9_7F4A_7C15);
    for &p in parts {
        state = splitmix64(state ^ p.wrapping_mul(0xD1B5_4A32_D192_ED03));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash for string labels used in seed derivation.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_exactly_zero() {
        let mut s = RandomStream::new(7, StreamId::Radio);
        for _ in 0..100 {
            assert_eq!(s.normal(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut s = RandomStream::new(7, StreamId::Radio);
        assert!(matches!(s.normal(-1.0), Err(KernelError::NegativeSigma(_))));
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(42, StreamId::Traffic);
        let mut b = RandomStream::new(42, StreamId::Traffic);
        let xa: Vec<f64> = (0..1000).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..1000).map(|_| b.uniform()).collect();
        assert_eq!(xa, xb);
        assert!(xa.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn streams_are_independent_labels() {
        let mut a = RandomStream::new(42, StreamId::Radio);
        let mut b = RandomStream::new(42, StreamId::Protocol);
        let xa: Vec<f64> = (0..16).map(|_| a.uniform()).collect();
        let xb: Vec<f64> = (0..16).map(|_| b.uniform()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn normal_moments() {
        let mut s = RandomStream::new(2024, StreamId::Radio);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal(1.0).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "sd {}", var.sqrt());
    }

    #[test]
    fn weighted_index_respects_zero_mass() {
        let mut s = RandomStream::new(1, StreamId::Protocol);
        assert_eq!(s.weighted_index(&[0.0, 0.0]), None);
        for _ in 0..100 {
            assert_eq!(s.weighted_index(&[0.0, 3.0, 0.0]), Some(1));
        }
    }

    #[test]
    fn derived_seeds_differ_by_part() {
        assert_ne!(derive_seed(1, &[9]), derive_seed(1, &[16]));
        assert_eq!(derive_seed(1, &[9, 2]), derive_seed(1, &[9, 2]));
    }
}
