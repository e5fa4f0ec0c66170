//! Deterministic summation and convergence-order measurement.

use crate::fm;
use alloc::vec::Vec;

/// Pairwise (tree) summation in the addend order given.
///
/// All lattice integrals in the crate reduce through this association
/// (directly or via [`PairwiseAccumulator`], which it delegates to), so
/// two reductions of the same values in the same order agree bit-exactly
/// regardless of whether the addends were materialized or streamed, and
/// the rounding error stays `O(eps * log len)` instead of the
/// `O(eps * len)` of naive left-to-right accumulation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    let mut acc = PairwiseAccumulator::new();
    for v in values {
        acc.add(*v);
    }
    acc.total()
}

/// Incremental pairwise accumulator for streaming reductions.
///
/// Sums blocks of 32 values directly and combines blocks along binary
/// carry levels, so the association depends only on the number of addends
/// seen — never on how the caller chunks its loop.
#[derive(Clone, Debug)]
pub struct PairwiseAccumulator {
    block: [f64; 32],
    fill: usize,
    levels: Vec<f64>,
    count: u64,
}

impl Default for PairwiseAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl PairwiseAccumulator {
    pub fn new() -> Self {
        PairwiseAccumulator {
            block: [0.0; 32],
            fill: 0,
            levels: Vec::new(),
            count: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        self.block[self.fill] = v;
        self.fill += 1;
        if self.fill == 32 {
            let mut acc = 0.0;
            for x in &self.block {
                acc += x;
            }
            self.fill = 0;
            self.push_block(acc);
        }
    }

    fn push_block(&mut self, mut acc: f64) {
        let mut carry = self.count;
        self.count += 1;
        let mut level = 0;
        while carry & 1 == 1 {
            acc += self.levels[level];
            self.levels[level] = 0.0;
            carry >>= 1;
            level += 1;
        }
        if level == self.levels.len() {
            self.levels.push(acc);
        } else {
            self.levels[level] = acc;
        }
    }

    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.fill {
            acc += self.block[i];
        }
        // Sum the binary levels from fine to coarse.
        for v in &self.levels {
            acc += v;
        }
        acc
    }
}

/// One resolution step of a refinement study.
#[derive(Clone, Copy, Debug)]
pub struct RefinementSample {
    /// Grid spacing (or any consistent resolution parameter).
    pub h: f64,
    /// Error against the reference at this resolution.
    pub error: f64,
}

/// Least-squares slope of `log error` against `log h`: the measured
/// convergence order of a refinement study. Samples with zero error are
/// clamped to `1e-300` (they only improve the order).
pub fn measured_order(samples: &[RefinementSample]) -> f64 {
    assert!(samples.len() >= 2, "need at least two refinement samples");
    let lx: Vec<f64> = samples.iter().map(|s| fm::ln(s.h)).collect();
    let ly: Vec<f64> = samples
        .iter()
        .map(|s| fm::ln(fm::max(s.error.abs(), 1e-300)))
        .collect();
    let m = samples.len() as f64;
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|x| x * x).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| x * y).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    fm::abs(a - b) / fm::max(fm::max(fm::abs(a), fm::abs(b)), floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_on_integers() {
        let vals: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&vals), 499_500.0);
    }

    #[test]
    fn accumulator_matches_pairwise() {
        // Ill-conditioned alternating values; the accumulator must
        // reproduce pairwise_sum bit-for-bit.
        let vals: Vec<f64> = (0..12345)
            .map(|i| {
                let x = (i as f64) * 0.7390851332151607;
                if i % 2 == 0 {
                    x
                } else {
                    -x * 0.9999999
                }
            })
            .collect();
        let mut acc = PairwiseAccumulator::new();
        for v in &vals {
            acc.add(*v);
        }
        assert_eq!(acc.total(), pairwise_sum(&vals));
    }

    #[test]
    fn order_fit_recovers_slope() {
        let samples: Vec<RefinementSample> = [16.0, 32.0, 64.0]
            .iter()
            .map(|nn| RefinementSample {
                h: 1.0 / nn,
                error: 3.0 / (nn * nn),
            })
            .collect();
        let p = measured_order(&samples);
        assert!((p - 2.0).abs() < 1e-12, "order {p}");
    }
}
