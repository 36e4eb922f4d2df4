// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Batch-means statistics for Monte-Carlo estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of batches accepted for a standard error.
pub const MIN_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Distance from `value` in units of the standard error. A zero error
    /// with an exact match counts as zero deviations.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }

    pub fn within(&self, value: f64, sigmas: f64) -> bool {
        self.z_score(value) <= sigmas
    }
}

/// Mean and standard error from equally sized batch means.
pub fn from_batch_means(batch_means: &[f64]) -> Estimate {
    let b = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = if batch_means.len() > 1 {
        batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0)
    } else {
        f64::INFINITY
    };
    Estimate {
        mean,
        stderr: (var / b).sqrt(),
    }
}

/// Splits `samples` into `batches` contiguous equal batches and returns the
/// batch-means estimate. Trailing samples that do not fill a batch are
/// dropped.
pub fn batch_estimate(samples: &[f64], batches: usize) -> Result<Estimate> {
    check_batches(samples.len(), batches)?;
    let size = samples.len() / batches;
    let means: Vec<f64> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    Ok(from_batch_means(&means))
}

pub fn check_batches(samples: usize, batches: usize) -> Result<()> {
    if batches < MIN_BATCHES || samples < batches {
        return Err(Error::InsufficientStatistics(format!(
            "{samples} samples in {batches} batches (need at least {MIN_BATCHES} non-empty batches)"
        )));
    }
    Ok(())
}

/// Contiguous batch ranges covering `0..total`, sizes differing by at most 1.
pub fn batch_ranges(total: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let base = total / batches;
    let extra = total % batches;
    let mut start = 0;
    (0..batches)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_error() {
        let e = batch_estimate(&[2.0; 100], 20).unwrap();
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
        assert!(e.within(2.0, 1.0));
    }

    #[test]
    fn too_few_batches_rejected() {
        assert!(batch_estimate(&[1.0; 100], 10).is_err());
        assert!(batch_estimate(&[1.0; 10], 20).is_err());
    }

    #[test]
    fn ranges_cover_everything() {
        let r = batch_ranges(103, 20);
        assert_eq!(r.len(), 20);
        assert_eq!(r[0].start, 0);
        assert_eq!(r.last().unwrap().end, 103);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
    }
}
