//! Parameter types for the heterogeneous key predistribution scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum(mu) = 1`.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Class distribution `mu` together with the per-class ring sizes `K`.
///
/// Invariants: at least one class, every `mu[i] > 0`, `sum(mu) = 1` within
/// [`PROBABILITY_SUM_TOLERANCE`], every `K[i] >= 1` and `K` nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMix", into = "RawMix")]
pub struct ClassMix {
    probs: Vec<f64>,
    ring_sizes: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawMix {
    probs: Vec<f64>,
    ring_sizes: Vec<u64>,
}

impl TryFrom<RawMix> for ClassMix {
    type Error = Error;

    fn try_from(raw: RawMix) -> Result<Self> {
        ClassMix::new(raw.probs, raw.ring_sizes)
    }
}

impl From<ClassMix> for RawMix {
    fn from(mix: ClassMix) -> Self {
        RawMix {
            probs: mix.probs,
            ring_sizes: mix.ring_sizes,
        }
    }
}

impl ClassMix {
    pub fn new(probs: Vec<f64>, ring_sizes: Vec<u64>) -> Result<Self> {
        validate_probs(&probs)?;
        if ring_sizes.len() != probs.len() {
            return Err(Error::LengthMismatch {
                field: "ring sizes",
                expected: probs.len(),
                actual: ring_sizes.len(),
            });
        }
        for (index, &k) in ring_sizes.iter().enumerate() {
            if k == 0 {
                return Err(Error::ZeroRingSize { index });
            }
            if index > 0 && k < ring_sizes[index - 1] {
                return Err(Error::NonMonotoneRings {
                    index,
                    prev_index: index - 1,
                    previous: ring_sizes[index - 1],
                    current: k,
                });
            }
        }
        Ok(ClassMix { probs, ring_sizes })
    }

    /// Number of classes `r`.
    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn ring_sizes(&self) -> &[u64] {
        &self.ring_sizes
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs[class]
    }

    pub fn ring_size(&self, class: usize) -> u64 {
        self.ring_sizes[class]
    }

    /// Smallest ring size `K[1]`.
    pub fn smallest_ring(&self) -> u64 {
        self.ring_sizes[0]
    }

    /// Largest ring size `K[r]`.
    pub fn largest_ring(&self) -> u64 {
        self.ring_sizes[self.ring_sizes.len() - 1]
    }

    /// Random ring size `|Σ|`: `K[j]` with probability `mu[j]`.
    pub fn ring_size_rv(&self) -> RingSizeRv<'_> {
        RingSizeRv { mix: self }
    }

    /// `E|Σ| = Σ_j mu[j]·K[j]`.
    pub fn ring_size_mean(&self) -> f64 {
        self.ring_size_rv().mean()
    }

    pub(crate) fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes() {
            return Err(Error::ClassOutOfRange {
                index: class,
                classes: self.num_classes(),
            });
        }
        Ok(())
    }
}

/// Checks the class distribution alone (no ring sizes).
pub(crate) fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::NoClasses);
    }
    for (index, &value) in probs.iter().enumerate() {
        // also rejects NaN
        if !(value > 0.0) {
            return Err(Error::NonPositiveProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::ProbabilitySum { sum });
    }
    Ok(())
}

/// View of the ring size as a random variable over the class distribution.
#[derive(Debug, Clone, Copy)]
pub struct RingSizeRv<'a> {
    mix: &'a ClassMix,
}

impl RingSizeRv<'_> {
    /// `(value, probability)` pairs in class order.
    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.mix
            .ring_sizes
            .iter()
            .copied()
            .zip(self.mix.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(k, mu)| mu * k as f64).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.support()
            .map(|(k, mu)| {
                let d = k as f64 - mean;
                mu * d * d
            })
            .sum()
    }

    /// `P[|Σ| = value]`, summed over classes sharing the value.
    pub fn pmf(&self, value: u64) -> f64 {
        self.support()
            .filter(|&(k, _)| k == value)
            .map(|(_, mu)| mu)
            .sum()
    }
}

/// Full parameter set `θ = (mu, K, P)` for one network size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme", into = "RawScheme")]
pub struct SchemeParams {
    mix: ClassMix,
    pool_size: u64,
}

#[derive(Serialize, Deserialize)]
struct RawScheme {
    probs: Vec<f64>,
    ring_sizes: Vec<u64>,
    pool_size: u64,
}

impl TryFrom<RawScheme> for SchemeParams {
    type Error = Error;

    fn try_from(raw: RawScheme) -> Result<Self> {
        SchemeParams::new(ClassMix::new(raw.probs, raw.ring_sizes)?, raw.pool_size)
    }
}

impl From<SchemeParams> for RawScheme {
    fn from(theta: SchemeParams) -> Self {
        RawScheme {
            probs: theta.mix.probs,
            ring_sizes: theta.mix.ring_sizes,
            pool_size: theta.pool_size,
        }
    }
}

impl SchemeParams {
    pub fn new(mix: ClassMix, pool_size: u64) -> Result<Self> {
        if mix.largest_ring() >= pool_size {
            return Err(Error::RingNotBelowPool {
                largest: mix.largest_ring(),
                pool: pool_size,
            });
        }
        Ok(SchemeParams { mix, pool_size })
    }

    pub fn mix(&self) -> &ClassMix {
        &self.mix
    }

    /// Key pool size `P`.
    pub fn pool_size(&self) -> u64 {
        self.pool_size
    }

    pub fn num_classes(&self) -> usize {
        self.mix.num_classes()
    }

    pub fn ring_size(&self, class: usize) -> u64 {
        self.mix.ring_size(class)
    }

    /// True when some pair of classes is forced to share a key
    /// (`K[r] + K[r] > P`), i.e. the graph has deterministic edges.
    pub fn has_saturated_pairs(&self) -> bool {
        2 * self.mix.largest_ring() > self.pool_size
    }
}

/// Validates raw scheme parameters.
///
/// `classes` is the declared class count `r`; both vectors must have that
/// length. Ring sizes must already be nondecreasing, they are never
/// reordered.
pub fn validate_scheme(
    classes: usize,
    probs: &[f64],
    ring_sizes: &[u64],
    pool_size: u64,
) -> Result<SchemeParams> {
    if classes == 0 {
        return Err(Error::NoClasses);
    }
    if probs.len() != classes {
        return Err(Error::LengthMismatch {
            field: "probabilities",
            expected: classes,
            actual: probs.len(),
        });
    }
    if ring_sizes.len() != classes {
        return Err(Error::LengthMismatch {
            field: "ring sizes",
            expected: classes,
            actual: ring_sizes.len(),
        });
    }
    let mix = ClassMix::new(probs.to_vec(), ring_sizes.to_vec())?;
    SchemeParams::new(mix, pool_size)
}
