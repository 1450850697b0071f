//! Robustified rank: counting singular values above a threshold, and the
//! diagnostics used to pick that threshold from recorded data.
//!
//! A singular value counts when it is *strictly* greater than `rho`; a value
//! exactly at the threshold does not. The count is additionally floored at
//! the numeric rank tolerance, so `rho = 0` reproduces the ordinary numeric
//! rank instead of counting rounding noise.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{rank_tolerance, sorted_singular_values};

/// Singular values in non-increasing order, plus the shape they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl SingularSpectrum {
    pub fn of(m: &DMatrix<f64>) -> Self {
        Self {
            values: sorted_singular_values(m),
            rows: m.nrows(),
            cols: m.ncols(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// 1-based access: `sigma(1)` is the largest value. Out-of-range indices
    /// (including 0) read as zero.
    pub fn sigma(&self, index: usize) -> f64 {
        index
            .checked_sub(1)
            .and_then(|i| self.values.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn numeric_tolerance(&self) -> f64 {
        rank_tolerance(self.rows, self.cols, self.max())
    }

    /// Number of singular values strictly above `max(rho, numeric tolerance)`.
    pub fn robustified_rank(&self, rho: f64) -> usize {
        assert!(rho >= 0.0, "threshold must be non-negative, got {rho}");
        let cut = rho.max(self.numeric_tolerance());
        // Values are sorted, so the count is the first index at or below the cut.
        self.values.partition_point(|&s| s > cut)
    }

    /// Admissible thresholds separating the top `required_rank` values.
    pub fn threshold_window(&self, required_rank: usize) -> Result<Option<ThresholdWindow>> {
        let r = required_rank;
        if r == 0 || r > self.len() {
            return Err(Error::InvalidArgument(format!(
                "required rank {r} must lie in 1..={}",
                self.len()
            )));
        }
        let upper = self.sigma(r);
        let lower = if r == self.len() { 0.0 } else { self.sigma(r + 1) };
        // Gaps at rounding level are treated as ties.
        if upper - lower > self.numeric_tolerance() {
            Ok(Some(ThresholdWindow { lower, upper }))
        } else {
            Ok(None)
        }
    }
}

/// Interval `[lower, upper)` of thresholds whose robustified rank equals the
/// requested rank: `sigma_{r+1} <= rho < sigma_r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdWindow {
    pub lower: f64,
    pub upper: f64,
}

impl ThresholdWindow {
    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.lower && rho < self.upper
    }

    pub fn geometric_mid(&self) -> f64 {
        if self.lower > 0.0 {
            (self.lower * self.upper).sqrt()
        } else {
            0.5 * self.upper
        }
    }
}

pub fn singular_spectrum(m: &DMatrix<f64>) -> SingularSpectrum {
    SingularSpectrum::of(m)
}

pub fn robustified_rank(m: &DMatrix<f64>, rho: f64) -> usize {
    SingularSpectrum::of(m).robustified_rank(rho)
}

pub fn threshold_window(m: &DMatrix<f64>, required_rank: usize) -> Result<Option<ThresholdWindow>> {
    SingularSpectrum::of(m).threshold_window(required_rank)
}
