use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Averaging {
    #[default]
    Macro,
    /// Per-class F1 weighted by true support.
    Weighted,
}

/// F1 over the union of labels seen in `y_true` and `y_pred`. Precision or
/// recall with a zero denominator counts as 0.
pub fn f1_score(y_true: &[f64], y_pred: &[f64], averaging: Averaging) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty(
            "f1_score needs at least one prediction".into(),
        ));
    }
    let mut labels: Vec<f64> = y_true.iter().chain(y_pred).copied().collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    let index = |v: f64| labels.partition_point(|l| l.total_cmp(&v).is_lt());
    let k = labels.len();
    let (mut tp, mut fp, mut fn_) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let (ti, pi) = (index(t), index(p));
        if ti == pi {
            tp[ti] += 1;
        } else {
            fp[pi] += 1;
            fn_[ti] += 1;
        }
    }
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for c in 0..k {
        let precision = if tp[c] + fp[c] > 0 {
            tp[c] as f64 / (tp[c] + fp[c]) as f64
        } else {
            0.0
        };
        let recall = if tp[c] + fn_[c] > 0 {
            tp[c] as f64 / (tp[c] + fn_[c]) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let w = match averaging {
            Averaging::Macro => 1.0,
            Averaging::Weighted => (tp[c] + fn_[c]) as f64,
        };
        total += w * f1;
        weight_sum += w;
    }
    Ok(if weight_sum > 0.0 {
        total / weight_sum
    } else {
        0.0
    })
}

/// `1 − Σ|y − ŷ| / Σ|y − ȳ|`.
pub fn one_minus_rae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty(
            "one_minus_rae needs at least one prediction".into(),
        ));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let denom: f64 = y_true.iter().map(|y| (y - mean).abs()).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let num: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).abs()).sum();
    Ok(1.0 - num / denom)
}
