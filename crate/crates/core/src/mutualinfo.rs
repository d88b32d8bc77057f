//! Plug-in entropy and mutual information, in nats.
//!
//! Continuous inputs are discretized into equal-frequency bins before
//! counting; discrete inputs are counted as they are.

use crate::error::{Error, Result};

/// Upper bound on the number of equal-frequency bins for a continuous column.
pub const MAX_BINS: usize = 16;

/// A column together with how it should be counted.
#[derive(Clone, Copy, Debug)]
pub struct Series<'a> {
    pub values: &'a [f64],
    pub discrete: bool,
}

impl<'a> Series<'a> {
    pub fn discrete(values: &'a [f64]) -> Self {
        Series {
            values,
            discrete: true,
        }
    }

    pub fn continuous(values: &'a [f64]) -> Self {
        Series {
            values,
            discrete: false,
        }
    }
}

/// Maps values to `0..distinct` in ascending value order.
pub fn dense_codes(values: &[f64]) -> Vec<u32> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| a.total_cmp(b).is_eq());
    values
        .iter()
        .map(|v| sorted.partition_point(|s| s.total_cmp(v).is_lt()) as u32)
        .collect()
}

/// Equal-frequency bins with `B = min(16, distinct)`. With at most 16
/// distinct values every value is its own bin; otherwise a value's bin is
/// taken from the centre of its run in sorted order, so ties never straddle
/// bins.
pub fn equal_frequency_codes(values: &[f64]) -> Vec<u32> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup_by(|a, b| a.total_cmp(b).is_eq());
    if distinct.len() <= MAX_BINS {
        return dense_codes(values);
    }
    let bins = MAX_BINS as f64;
    values
        .iter()
        .map(|v| {
            let first = sorted.partition_point(|s| s.total_cmp(v).is_lt());
            let last = sorted.partition_point(|s| s.total_cmp(v).is_le());
            let centre = (first + last) as f64 / 2.0;
            ((centre * bins / n as f64) as u32).min(MAX_BINS as u32 - 1)
        })
        .collect()
}

fn codes(s: Series<'_>) -> Vec<u32> {
    if s.discrete {
        dense_codes(s.values)
    } else {
        equal_frequency_codes(s.values)
    }
}

/// `-Σ p ln p` over counts that sum to `n`. Counts are summed in sorted
/// order so the result depends only on the multiset of counts.
fn entropy_from_counts(mut counts: Vec<usize>, n: usize) -> f64 {
    counts.sort_unstable();
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

fn counts_of<T: Ord + Copy>(mut keys: Vec<T>) -> Vec<usize> {
    keys.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let j = i + keys[i..].partition_point(|k| *k == keys[i]);
        out.push(j - i);
        i = j;
    }
    out
}

/// Entropy of a discrete column. Empty input has zero entropy.
pub fn entropy(values: &[f64]) -> f64 {
    series_entropy(Series::discrete(values))
}

pub fn series_entropy(s: Series<'_>) -> f64 {
    let n = s.values.len();
    if n == 0 {
        return 0.0;
    }
    entropy_from_counts(counts_of(codes(s)), n)
}

/// `max(0, H(a) + H(b) - H(a, b))`, symmetric in its arguments bit for bit.
pub fn mutual_information(a: Series<'_>, b: Series<'_>) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::LengthMismatch {
            left: a.values.len(),
            right: b.values.len(),
        });
    }
    let n = a.values.len();
    if n == 0 {
        return Ok(0.0);
    }
    let ca = codes(a);
    let cb = codes(b);
    // Swapping a and b transposes the joint table but keeps its count
    // multiset, and counts are summed in sorted order.
    let joint: Vec<(u32, u32)> = ca.iter().copied().zip(cb.iter().copied()).collect();
    let ha = entropy_from_counts(counts_of(ca), n);
    let hb = entropy_from_counts(counts_of(cb), n);
    let hab = entropy_from_counts(counts_of(joint), n);
    Ok((ha + hb - hab).max(0.0))
}
