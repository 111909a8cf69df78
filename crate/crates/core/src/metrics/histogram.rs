use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Bucket counts over `[0, width * counts.len())`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Lower edge of each bucket.
    pub fn lows(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|i| i as f64 * self.width)
    }
}

/// Left-closed, right-open buckets of `width` starting at 0.
///
/// With `upper = Some(u)` there are `ceil(u / width)` buckets and values at
/// or above `u` land in the last one; otherwise the range grows to cover
/// the largest score. Negative scores count toward the first bucket.
pub fn histogram(scores: &[f64], width: f64, upper: Option<f64>) -> Result<Histogram> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Config(alloc::format!("bucket width must be positive, got {width}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("histogram scores"));
    }
    // guards against 0.15 / 0.05 = 2.9999999999999996
    let index = |s: f64| libm::floor(s / width + 1e-9).max(0.0) as usize;
    let n = match upper {
        Some(u) => libm::ceil(u / width - 1e-9).max(1.0) as usize,
        None => scores.iter().map(|&s| index(s) + 1).max().unwrap_or(0),
    };
    let mut counts = vec![0usize; n];
    for &s in scores {
        let i = index(s).min(n.saturating_sub(1));
        counts[i] += 1;
    }
    Ok(Histogram { width, counts })
}
