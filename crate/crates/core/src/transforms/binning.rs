//! Supervised discretization of one continuous column with a best-first
//! single-feature decision tree.

use crate::error::{Error, Result};
use crate::mutualinfo::Series;

/// Default maximum number of categories produced by binning.
pub const DEFAULT_MAX_LEAVES: usize = 8;

/// Minimum leaf size: `max(5, 5% of n)`, reduced to `n / max_leaves` when the
/// column is too short to honour it, and never below one row.
pub fn min_leaf_size(n: usize, max_leaves: usize) -> usize {
    let preferred = 5usize.max(n.div_ceil(20));
    preferred.min(n / max_leaves.max(1)).max(1)
}

/// Fits a tree of at most `max_leaves` leaves on `(col -> target)` and returns
/// each row's leaf index, leaves numbered left to right along `col`.
///
/// Leaves are grown best-first: at each round the leaf whose best split
/// removes the most impurity (gini for a discrete target, squared error for a
/// continuous one) is split. Splits with no impurity reduction are never
/// taken, so a constant column, or one already pure, yields a single code.
pub fn bin_with_tree(col: &[f64], target: Series<'_>, max_leaves: usize) -> Result<Vec<f64>> {
    if max_leaves < 2 {
        return Err(Error::Config(format!(
            "max_leaves must be at least 2, got {max_leaves}"
        )));
    }
    if col.len() != target.values.len() {
        return Err(Error::LengthMismatch {
            left: col.len(),
            right: target.values.len(),
        });
    }
    let n = col.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let min_leaf = min_leaf_size(n, max_leaves);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
    let xs: Vec<f64> = order.iter().map(|&i| col[i]).collect();
    let impurity = Impurity::new(&order, target);

    // Leaves are contiguous ranges of the sorted order.
    let mut leaves: Vec<(usize, usize)> = vec![(0, n)];
    while leaves.len() < max_leaves {
        let mut best: Option<(usize, usize, f64)> = None; // (leaf, split pos, gain)
        for (li, &(lo, hi)) in leaves.iter().enumerate() {
            if let Some((pos, gain)) = best_split(&xs, &impurity, lo, hi, min_leaf) {
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((li, pos, gain));
                }
            }
        }
        let Some((li, pos, _)) = best else { break };
        let (lo, hi) = leaves[li];
        leaves[li] = (lo, pos);
        leaves.insert(li + 1, (pos, hi));
    }

    let mut codes = vec![0.0; n];
    for (code, &(lo, hi)) in leaves.iter().enumerate() {
        for &row in &order[lo..hi] {
            codes[row] = code as f64;
        }
    }
    Ok(codes)
}

fn best_split(
    xs: &[f64],
    imp: &Impurity,
    lo: usize,
    hi: usize,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    if hi - lo < 2 * min_leaf {
        return None;
    }
    let parent = imp.cost(lo, hi);
    let tol = 1e-12 * parent.abs().max(1.0);
    let mut best: Option<(usize, f64)> = None;
    for pos in (lo + min_leaf)..=(hi - min_leaf) {
        if xs[pos - 1] == xs[pos] {
            continue;
        }
        let gain = parent - imp.cost(lo, pos) - imp.cost(pos, hi);
        if gain > tol && best.is_none_or(|(_, g)| gain > g) {
            best = Some((pos, gain));
        }
    }
    best
}

/// Prefix sums giving O(1) (classes) impurity of any sorted range.
enum Impurity {
    /// `counts[i * classes + c]` = rows of class `c` among the first `i`.
    Gini {
        classes: usize,
        counts: Vec<u32>,
    },
    Variance {
        sum: Vec<f64>,
        sum_sq: Vec<f64>,
    },
}

impl Impurity {
    fn new(order: &[usize], target: Series<'_>) -> Self {
        let n = order.len();
        if target.discrete {
            let codes = crate::mutualinfo::dense_codes(target.values);
            let classes = codes.iter().copied().max().map_or(1, |m| m as usize + 1);
            let mut counts = vec![0u32; (n + 1) * classes];
            for (i, &row) in order.iter().enumerate() {
                let (prev, next) = counts.split_at_mut((i + 1) * classes);
                next[..classes].copy_from_slice(&prev[i * classes..]);
                next[codes[row] as usize] += 1;
            }
            Impurity::Gini { classes, counts }
        } else {
            let mut sum = vec![0.0; n + 1];
            let mut sum_sq = vec![0.0; n + 1];
            for (i, &row) in order.iter().enumerate() {
                let y = target.values[row];
                sum[i + 1] = sum[i] + y;
                sum_sq[i + 1] = sum_sq[i] + y * y;
            }
            Impurity::Variance { sum, sum_sq }
        }
    }

    /// Size-weighted impurity of rows `lo..hi` of the sorted order.
    fn cost(&self, lo: usize, hi: usize) -> f64 {
        let m = (hi - lo) as f64;
        match self {
            Impurity::Gini { classes, counts } => {
                let mut sq = 0.0;
                for c in 0..*classes {
                    let k = (counts[hi * classes + c] - counts[lo * classes + c]) as f64;
                    sq += k * k;
                }
                m - sq / m
            }
            Impurity::Variance { sum, sum_sq } => {
                let s = sum[hi] - sum[lo];
                ((sum_sq[hi] - sum_sq[lo]) - s * s / m).max(0.0)
            }
        }
    }
}
