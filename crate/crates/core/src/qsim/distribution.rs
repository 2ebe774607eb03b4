use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Probability of every computational-basis outcome of an `n`-bit register.
///
/// Stored densely by basis index (qubit `k` is bit `k`). Bitstrings are
/// written qubit 0 first, so `"01"` means qubit 0 read 0 and qubit 1 read 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    num_bits: usize,
    probs: Vec<f64>,
}

pub fn index_to_bitstring(index: usize, num_bits: usize) -> String {
    (0..num_bits)
        .map(|k| if (index >> k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    bits.chars()
        .enumerate()
        .try_fold(0usize, |acc, (k, ch)| match ch {
            '0' => Ok(acc),
            '1' => Ok(acc | (1 << k)),
            other => Err(invalid(format!("bitstring {bits:?} contains {other:?}"))),
        })
}

impl OutcomeDistribution {
    /// Wraps a dense probability vector, checking normalization.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || !probs.len().is_power_of_two() {
            return Err(invalid("probability vector length must be a power of two"));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0 + NORM_TOL).contains(*p)) {
            return Err(invalid(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        let num_bits = probs.len().trailing_zeros() as usize;
        Ok(OutcomeDistribution { num_bits, probs })
    }

    /// Builds a distribution from `(bitstring, probability)` pairs; unlisted outcomes get zero.
    pub fn from_bitstrings<'a>(
        num_bits: usize,
        entries: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Self> {
        let mut probs = vec![0.0; 1 << num_bits];
        for (bits, p) in entries {
            if bits.len() != num_bits {
                return Err(Error::DimensionMismatch {
                    expected: num_bits,
                    got: bits.len(),
                });
            }
            probs[bitstring_to_index(bits)?] += p;
        }
        Self::from_probs(probs)
    }

    pub fn uniform(num_bits: usize) -> Self {
        let dim = 1usize << num_bits;
        OutcomeDistribution {
            num_bits,
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    /// Clamps round-off negatives and renormalizes. Used on simulator output.
    pub(crate) fn from_diagonal(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        let num_bits = probs.len().trailing_zeros() as usize;
        OutcomeDistribution { num_bits, probs }
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, bits: &str) -> f64 {
        bitstring_to_index(bits)
            .ok()
            .and_then(|i| self.probs.get(i).copied())
            .unwrap_or(0.0)
    }

    /// Non-zero outcomes as `(bitstring, probability)`, in basis-index order.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (index_to_bitstring(i, self.num_bits), p))
            .collect()
    }
}

/// Draws `shots` multinomial samples. Deterministic for a fixed seed.
pub fn sample(
    dist: &OutcomeDistribution,
    shots: u64,
    rng_seed: u64,
) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(invalid("shots must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = BTreeMap::new();
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &p) in dist.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng)
        };
        if k > 0 {
            counts.insert(index_to_bitstring(i, dist.num_bits), k);
        }
        remaining -= k;
        mass -= p;
    }
    // round-off can leave a few shots when the last outcomes carry ~1e-16 of mass
    if remaining > 0 {
        let last = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        *counts
            .entry(index_to_bitstring(last, dist.num_bits))
            .or_insert(0) += remaining;
    }
    Ok(counts)
}
