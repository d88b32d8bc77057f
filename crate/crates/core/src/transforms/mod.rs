//! The operator algebra applied to feature columns.
//!
//! Continuous columns take unary arithmetic (`abs`, `square`, `log`, ...) or
//! binary arithmetic with a partner column; discrete columns can be crossed
//! with another discrete column, or with a continuous one after tree binning.
//! Every output is finite: singular inputs go through ε-guards and the result
//! is clamped to ±[`CLAMP`].

mod binning;
mod expr;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use binning::{bin_with_tree, min_leaf_size, DEFAULT_MAX_LEAVES};
pub use expr::{expression_order, FeatureExpression};

use crate::error::{Error, Result};
use crate::mutualinfo::{self, Series};
use crate::tabular::{Column, ColumnKind, Dataset};

/// Guard added to magnitudes before `log` and reciprocals.
pub const EPS: f64 = 1e-6;
/// Magnitude bound applied after every operator.
pub const CLAMP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorId {
    Abs,
    None,
    Square,
    Inverse,
    Log,
    Sqrt,
    Cube,
    Add,
    Sub,
    Mul,
    Div,
    Cross,
    /// Identity for discrete features: no new column this step.
    AddD,
}

/// Action head of continuous features, in Q-network output order.
pub const CONTINUOUS_OPS: [OperatorId; 11] = [
    OperatorId::Abs,
    OperatorId::None,
    OperatorId::Square,
    OperatorId::Inverse,
    OperatorId::Log,
    OperatorId::Sqrt,
    OperatorId::Cube,
    OperatorId::Add,
    OperatorId::Sub,
    OperatorId::Mul,
    OperatorId::Div,
];

/// Action head of discrete features.
pub const DISCRETE_OPS: [OperatorId; 2] = [OperatorId::Cross, OperatorId::AddD];

pub const ALL_OPS: [OperatorId; 13] = [
    OperatorId::Abs,
    OperatorId::None,
    OperatorId::Square,
    OperatorId::Inverse,
    OperatorId::Log,
    OperatorId::Sqrt,
    OperatorId::Cube,
    OperatorId::Add,
    OperatorId::Sub,
    OperatorId::Mul,
    OperatorId::Div,
    OperatorId::Cross,
    OperatorId::AddD,
];

impl OperatorId {
    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Abs => "abs",
            OperatorId::None => "none",
            OperatorId::Square => "square",
            OperatorId::Inverse => "inverse",
            OperatorId::Log => "log",
            OperatorId::Sqrt => "sqrt",
            OperatorId::Cube => "cube",
            OperatorId::Add => "add",
            OperatorId::Sub => "sub",
            OperatorId::Mul => "mul",
            OperatorId::Div => "div",
            OperatorId::Cross => "cross",
            OperatorId::AddD => "addd",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ALL_OPS.iter().copied().find(|op| op.name() == s)
    }

    /// Position in [`ALL_OPS`]; used to index operator embeddings.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn arity(self) -> usize {
        if self.is_binary() || self == OperatorId::Cross {
            2
        } else {
            1
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            OperatorId::Add | OperatorId::Sub | OperatorId::Mul | OperatorId::Div
        )
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, OperatorId::Cross | OperatorId::AddD)
    }

    /// Operators that leave the feature set unchanged.
    pub fn is_identity(self) -> bool {
        matches!(self, OperatorId::None | OperatorId::AddD)
    }

    pub fn needs_partner(self) -> bool {
        self.arity() == 2
    }

    /// The identity action of the head this operator belongs to.
    pub fn identity_for(self) -> OperatorId {
        if self.is_discrete() {
            OperatorId::AddD
        } else {
            OperatorId::None
        }
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn guard(x: f64) -> f64 {
    if x.is_nan() {
        CLAMP
    } else {
        x.clamp(-CLAMP, CLAMP)
    }
}

/// `sign*(x) / (|x| + ε)` with `sign*(0) = 1`.
fn guarded_inverse(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    sign / (x.abs() + EPS)
}

pub fn apply_unary(col: &[f64], op: OperatorId) -> Result<Vec<f64>> {
    let f: fn(f64) -> f64 = match op {
        OperatorId::Abs => f64::abs,
        OperatorId::None => |x| x,
        OperatorId::Square => |x| x * x,
        OperatorId::Inverse => guarded_inverse,
        OperatorId::Log => |x| (x.abs() + EPS).ln(),
        OperatorId::Sqrt => |x| x.abs().sqrt(),
        OperatorId::Cube => |x| x * x * x,
        _ => {
            return Err(Error::InvalidOperator {
                op: op.name().into(),
                reason: "not a unary continuous operator".into(),
            })
        }
    };
    if op == OperatorId::None {
        return Ok(col.to_vec());
    }
    Ok(col.iter().map(|&x| guard(f(x))).collect())
}

pub fn apply_binary(a: &[f64], b: &[f64], op: OperatorId) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let f: fn(f64, f64) -> f64 = match op {
        OperatorId::Add => |x, y| x + y,
        OperatorId::Sub => |x, y| x - y,
        OperatorId::Mul => |x, y| x * y,
        OperatorId::Div => |x, y| x * guarded_inverse(y),
        _ => {
            return Err(Error::InvalidOperator {
                op: op.name().into(),
                reason: "not a binary continuous operator".into(),
            })
        }
    };
    Ok(a.iter().zip(b).map(|(&x, &y)| guard(f(x, y))).collect())
}

/// Crossed categories: each distinct observed `(a, b)` pair becomes a code,
/// numbered by first appearance.
pub fn cross(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut codes: HashMap<(u64, u64), usize> = HashMap::new();
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let next = codes.len();
            *codes.entry((x.to_bits(), y.to_bits())).or_insert(next) as f64
        })
        .collect())
}

/// A column produced by one operator application.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedFeature {
    pub values: Vec<f64>,
    pub kind: ColumnKind,
    pub expr: FeatureExpression,
    /// Index of the feature the operator was chosen for.
    pub parent: usize,
}

impl GeneratedFeature {
    pub fn into_column(self) -> Column {
        Column {
            name: self.expr.to_string(),
            kind: self.kind,
            values: self.values,
            expr: self.expr,
            categories: None,
        }
    }
}

fn pearson_abs(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).abs();
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

/// `I(a, b) / sqrt(H(a) H(b))`, zero when either side is constant.
fn normalized_mi(a: &[f64], b: &[f64]) -> f64 {
    let ha = mutualinfo::entropy(a);
    let hb = mutualinfo::entropy(b);
    if ha <= 0.0 || hb <= 0.0 {
        return 0.0;
    }
    let mi =
        mutualinfo::mutual_information(Series::discrete(a), Series::discrete(b)).unwrap_or(0.0);
    mi / (ha * hb).sqrt()
}

/// Values of feature `j` as a crossing operand: discrete features as-is,
/// continuous ones after tree binning against the target.
fn cross_operand(
    d: &Dataset,
    j: usize,
    max_leaves: usize,
) -> Result<(Vec<f64>, FeatureExpression)> {
    let col = d.feature(j);
    if col.is_discrete() {
        Ok((col.values.clone(), col.expr.clone()))
    } else {
        let binned = bin_with_tree(&col.values, target_series(d), max_leaves)?;
        Ok((binned, FeatureExpression::bin(max_leaves, col.expr.clone())))
    }
}

pub(crate) fn target_series(d: &Dataset) -> Series<'_> {
    Series {
        values: &d.target().values,
        discrete: d.is_classification(),
    }
}

/// Second operand for a binary or cross operator applied to `focal`.
///
/// Continuous: the other continuous feature with the largest absolute
/// Pearson correlation to `focal`. Discrete: the other feature (discrete, or
/// continuous after binning) with the largest normalized mutual information.
/// Ties go to the lowest index.
pub fn select_partner(
    d: &Dataset,
    focal: usize,
    needed: ColumnKind,
    max_leaves: usize,
) -> Result<usize> {
    let focal_values = &d.feature(focal).values;
    let mut best: Option<(usize, f64)> = None;
    for j in 0..d.n_features() {
        if j == focal {
            continue;
        }
        let col = d.feature(j);
        let score = match needed {
            ColumnKind::Continuous if !col.is_discrete() => pearson_abs(focal_values, &col.values),
            ColumnKind::Discrete => {
                let (values, _) = cross_operand(d, j, max_leaves)?;
                normalized_mi(focal_values, &values)
            }
            _ => continue,
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j).ok_or_else(|| Error::NoPartner {
        focal,
        kind: needed.to_string(),
    })
}

/// Applies `op` to feature `focal` (with `partner` for two-operand
/// operators). Identity operators produce no feature.
pub fn generate(
    d: &Dataset,
    focal: usize,
    op: OperatorId,
    partner: Option<usize>,
    max_leaves: usize,
) -> Result<Option<GeneratedFeature>> {
    if op.is_identity() {
        return Ok(None);
    }
    let col = d.feature(focal);
    if col.is_discrete() != op.is_discrete() {
        return Err(Error::InvalidOperator {
            op: op.name().into(),
            reason: format!("feature {:?} is {}", col.name, col.kind),
        });
    }
    let partner = if op.needs_partner() {
        let p = partner.ok_or_else(|| Error::InvalidOperator {
            op: op.name().into(),
            reason: "missing partner".into(),
        })?;
        if p == focal || p >= d.n_features() {
            return Err(Error::InvalidOperator {
                op: op.name().into(),
                reason: format!("invalid partner {p}"),
            });
        }
        Some(p)
    } else {
        None
    };

    let (values, kind, expr) = match (op, partner) {
        (OperatorId::Cross, Some(p)) => {
            let (pv, pexpr) = cross_operand(d, p, max_leaves)?;
            (
                cross(&col.values, &pv)?,
                ColumnKind::Discrete,
                FeatureExpression::binary(op, col.expr.clone(), pexpr),
            )
        }
        (_, Some(p)) => {
            let other = d.feature(p);
            if other.is_discrete() {
                return Err(Error::InvalidOperator {
                    op: op.name().into(),
                    reason: format!("partner {:?} is discrete", other.name),
                });
            }
            (
                apply_binary(&col.values, &other.values, op)?,
                ColumnKind::Continuous,
                FeatureExpression::binary(op, col.expr.clone(), other.expr.clone()),
            )
        }
        (_, None) => (
            apply_unary(&col.values, op)?,
            ColumnKind::Continuous,
            FeatureExpression::unary(op, col.expr.clone()),
        ),
    };
    Ok(Some(GeneratedFeature {
        values,
        kind,
        expr,
        parent: focal,
    }))
}

/// Recomputes an expression from the original columns of `original`.
/// Binning is refit against `original`'s target, exactly as during search.
pub fn evaluate_expression(
    e: &FeatureExpression,
    original: &Dataset,
) -> Result<(Vec<f64>, ColumnKind)> {
    match e {
        FeatureExpression::Original(name) => original
            .features()
            .iter()
            .find(|c| &c.name == name)
            .map(|c| (c.values.clone(), c.kind))
            .ok_or_else(|| Error::Expression {
                pos: 0,
                message: format!("unknown column {name:?}"),
            }),
        FeatureExpression::Bin { max_leaves, child } => {
            let (v, _) = evaluate_expression(child, original)?;
            Ok((
                bin_with_tree(&v, target_series(original), *max_leaves)?,
                ColumnKind::Discrete,
            ))
        }
        FeatureExpression::Apply { op, children } => {
            let vals = children
                .iter()
                .map(|c| evaluate_expression(c, original).map(|(v, _)| v))
                .collect::<Result<Vec<_>>>()?;
            match (op, vals.as_slice()) {
                (OperatorId::Cross, [a, b]) => Ok((cross(a, b)?, ColumnKind::Discrete)),
                (op, [a, b]) => Ok((apply_binary(a, b, *op)?, ColumnKind::Continuous)),
                (op, [a]) => Ok((apply_unary(a, *op)?, ColumnKind::Continuous)),
                _ => Err(Error::Expression {
                    pos: 0,
                    message: format!("{op} with {} children", vals.len()),
                }),
            }
        }
    }
}
