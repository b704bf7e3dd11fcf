//! Sufficient statistics, Student-t intervals and seed splitting.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Count, sum and sum of squares. Merging is commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &RunningStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    /// Unbiased sample variance, clamped at zero.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        Some(((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0))
    }

    /// Half-width of the two-sided Student-t interval on the mean.
    pub fn half_width(&self, level: f64) -> Option<f64> {
        let var = self.variance()?;
        let n = self.count as f64;
        Some(t_quantile(level, n - 1.0) * (var / n).sqrt())
    }

    pub fn estimate(&self, level: f64) -> Option<Estimate> {
        Some(Estimate { mean: self.mean()?, half_width: self.half_width(level).unwrap_or(f64::INFINITY), n: self.count })
    }
}

/// Two-sided critical value `t_{(1+level)/2, df}`.
pub fn t_quantile(level: f64, df: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    t.inverse_cdf(0.5 + level / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: u64,
}

/// Replicate seed for `(base, grid, rep)`. SplitMix64 finalisation applied
/// to a golden-ratio-weighted combination of the three indices.
pub fn split_seed(base: u64, grid: u64, rep: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = mix(base ^ GOLDEN);
    z = mix(z ^ grid.wrapping_mul(GOLDEN));
    mix(z ^ rep.wrapping_mul(GOLDEN).rotate_left(17))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
