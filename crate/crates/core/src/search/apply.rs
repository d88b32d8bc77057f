use crate::agents::{DiscAction, GenAction};
use crate::error::{Error, Result};
use crate::mutualinfo::{mutual_information, Series};
use crate::tabular::{Column, Dataset};
use crate::transforms::{generate, target_series};

/// Result of applying one step's decisions to a feature set.
#[derive(Clone, Debug)]
pub struct Applied {
    pub dataset: Dataset,
    /// For each input feature, the index in `dataset` of the column that
    /// carries its slot forward (itself or its replacement), if any.
    pub successor: Vec<Option<usize>>,
    /// True when the decisions left nothing and the input set was kept.
    pub flagged: bool,
}

/// Runs every operator in `t1`; identity operators yield `None`.
pub fn generate_all(
    d: &Dataset,
    t1: &[GenAction],
    max_leaves: usize,
) -> Result<Vec<Option<Column>>> {
    if t1.len() != d.n_features() {
        return Err(Error::LengthMismatch {
            left: t1.len(),
            right: d.n_features(),
        });
    }
    t1.iter()
        .enumerate()
        .map(|(i, a)| Ok(generate(d, i, a.op, a.partner, max_leaves)?.map(|g| g.into_column())))
        .collect()
}

/// A constant column carries no information and is never kept.
pub fn is_degenerate(col: &Column) -> bool {
    col.values.windows(2).all(|w| w[0] == w[1])
}

/// Mutual information between a feature and the target.
pub fn target_relevance(d: &Dataset, col: &Column) -> Result<f64> {
    mutual_information(
        Series {
            values: &col.values,
            discrete: col.is_discrete(),
        },
        target_series(d),
    )
}

/// The set algebra of one step.
///
/// Per feature `i` with generated column `g_i`: Delete keeps the original,
/// Replace puts `g_i` in its slot, Add keeps the original and appends `g_i`
/// after all slots. Degenerate generated columns count as absent, except that
/// Replace still discards the original. Columns with an already-present name
/// are dropped. While the set exceeds `cap`, the generated column with the
/// least mutual information with the target is removed (the later one on
/// ties). An empty outcome keeps `d` and sets `flagged`.
pub fn apply_generated(
    d: &Dataset,
    generated: &[Option<Column>],
    t2: &[DiscAction],
    cap: usize,
) -> Result<Applied> {
    let n = d.n_features();
    for len in [generated.len(), t2.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                left: len,
                right: n,
            });
        }
    }
    // (column, slot owner)
    let mut candidates: Vec<(Column, Option<usize>)> = Vec::with_capacity(2 * n);
    let mut extras = Vec::new();
    for (i, (g, &action)) in generated.iter().zip(t2).enumerate() {
        let g = g.as_ref();
        let usable = g.filter(|c| !is_degenerate(c));
        match (g, action) {
            (None, _) | (Some(_), DiscAction::Delete) => {
                candidates.push((d.feature(i).clone(), Some(i)))
            }
            (Some(_), DiscAction::Replace) => {
                if let Some(g) = usable {
                    candidates.push((g.clone(), Some(i)));
                }
            }
            (Some(_), DiscAction::Add) => {
                candidates.push((d.feature(i).clone(), Some(i)));
                if let Some(g) = usable {
                    extras.push((g.clone(), None));
                }
            }
        }
    }
    candidates.extend(extras);

    let mut kept: Vec<Column> = Vec::new();
    let mut successor = vec![None; n];
    for (col, owner) in candidates {
        let at = match kept.iter().position(|k| k.name == col.name) {
            Some(j) => j,
            None => {
                kept.push(col);
                kept.len() - 1
            }
        };
        if let Some(i) = owner {
            successor[i] = Some(at);
        }
    }
    if kept.is_empty() {
        return Ok(Applied {
            dataset: d.clone(),
            successor: (0..n).map(Some).collect(),
            flagged: true,
        });
    }

    let mut relevance: Vec<Option<f64>> = kept
        .iter()
        .map(|c| {
            (!c.expr.is_original())
                .then(|| target_relevance(d, c))
                .transpose()
        })
        .collect::<Result<_>>()?;
    while kept.len() > cap {
        let mut worst: Option<(usize, f64)> = None;
        for (j, r) in relevance.iter().enumerate() {
            if let Some(r) = *r {
                if worst.is_none_or(|(_, w)| r <= w) {
                    worst = Some((j, r));
                }
            }
        }
        let Some((j, _)) = worst else { break };
        kept.remove(j);
        relevance.remove(j);
        for s in successor.iter_mut() {
            *s = match *s {
                Some(k) if k == j => None,
                Some(k) if k > j => Some(k - 1),
                other => other,
            };
        }
    }
    Ok(Applied {
        dataset: d.with_features(kept)?,
        successor,
        flagged: false,
    })
}

/// Generates and applies in one go.
pub fn apply_actions(
    d: &Dataset,
    t1: &[GenAction],
    t2: &[DiscAction],
    cap: usize,
    max_leaves: usize,
) -> Result<Applied> {
    let generated = generate_all(d, t1, max_leaves)?;
    apply_generated(d, &generated, t2, cap)
}

/// Keeps the `k` columns most informative about the target (earlier columns
/// win ties), preserving order.
pub fn top_k_by_relevance(d: &Dataset, k: usize) -> Result<(Dataset, Vec<Option<usize>>)> {
    let scores = d
        .features()
        .iter()
        .map(|c| target_relevance(d, c))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order.into_iter().take(k.max(1)).collect();
    keep.sort_unstable();
    let mut remap = vec![None; scores.len()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = Some(new);
    }
    let cols = keep.iter().map(|&j| d.feature(j).clone()).collect();
    Ok((d.with_features(cols)?, remap))
}
