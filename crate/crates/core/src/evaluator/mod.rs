//! Downstream evaluation: learners, cross-validated scores and a score cache.

mod forest;
mod linear;
mod metrics;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

pub use forest::{ForestParams, RandomForest};
pub use linear::{LinearModel, LINEAR_ITERATIONS, LINEAR_LEARNING_RATE};
pub use metrics::{f1_score, one_minus_rae, Averaging};

use crate::error::{Error, Result};
use crate::seeds::{derive_seed, streams};
use crate::tabular::{Dataset, FoldPlan, Task};

/// Column-major numeric features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n_rows) {
            return Err(Error::LengthMismatch {
                left: n_rows,
                right: c.len(),
            });
        }
        Ok(FeatureMatrix { columns, n_rows })
    }

    /// Features of `d`, ordered by column name so that the matrix depends
    /// only on the set of features, not their order in `d`. Generated columns
    /// are named by their canonical expression, so an exported table read
    /// back from disk yields the same matrix.
    pub fn from_dataset(d: &Dataset) -> Self {
        let mut cols: Vec<(&str, &Vec<f64>)> = d
            .features()
            .iter()
            .map(|c| (c.name.as_str(), &c.values))
            .collect();
        cols.sort_by(|a, b| a.0.cmp(b.0));
        FeatureMatrix {
            columns: cols.into_iter().map(|(_, v)| v.clone()).collect(),
            n_rows: d.n_rows(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TargetInfo {
    pub task: Task,
    pub n_classes: usize,
}

impl TargetInfo {
    pub fn classes(n_classes: usize) -> Self {
        TargetInfo {
            task: Task::Classification,
            n_classes,
        }
    }

    pub fn regression() -> Self {
        TargetInfo {
            task: Task::Regression,
            n_classes: 0,
        }
    }

    pub fn of(d: &Dataset) -> Self {
        match d.task() {
            Task::Classification => TargetInfo::classes(d.n_classes()),
            Task::Regression => TargetInfo::regression(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    #[default]
    RandomForest,
    /// Logistic regression for classification; least squares for regression.
    LogisticRegression,
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" | "random-forest" => Ok(LearnerKind::RandomForest),
            "logreg" | "logistic-regression" => Ok(LearnerKind::LogisticRegression),
            other => Err(Error::Config(format!(
                "unknown learner {other:?} (expected rf or logreg)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureRule {
    /// `max(1, floor(sqrt(p)))` candidate features per split.
    #[default]
    Sqrt,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: FeatureRule,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::RandomForest,
            trees: 50,
            max_depth: None,
            features_per_split: FeatureRule::Sqrt,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// A model trained on one split.
pub trait Predict {
    fn predict(&self, x: &FeatureMatrix) -> Vec<f64>;
}

/// Anything that can be fitted on a training split.
pub trait Learner {
    type Model: Predict;
    fn fit(
        &self,
        x: &FeatureMatrix,
        y: &[f64],
        target: TargetInfo,
        seed: u64,
    ) -> Result<Self::Model>;
}

pub enum TrainedModel {
    Forest(RandomForest),
    Linear(LinearModel),
}

impl Predict for TrainedModel {
    fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        match self {
            TrainedModel::Forest(f) => f.predict(x),
            TrainedModel::Linear(l) => l.predict(x),
        }
    }
}

impl Learner for LearnerConfig {
    type Model = TrainedModel;

    fn fit(
        &self,
        x: &FeatureMatrix,
        y: &[f64],
        target: TargetInfo,
        seed: u64,
    ) -> Result<TrainedModel> {
        self.validate()?;
        Ok(match self.kind {
            LearnerKind::RandomForest => {
                let p = x.n_cols();
                let max_features = match self.features_per_split {
                    FeatureRule::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
                    FeatureRule::All => p,
                };
                TrainedModel::Forest(RandomForest::fit(
                    x,
                    y,
                    target,
                    ForestParams {
                        trees: self.trees,
                        max_depth: self.max_depth,
                        max_features,
                    },
                    seed,
                ))
            }
            LearnerKind::LogisticRegression => {
                TrainedModel::Linear(LinearModel::fit(x, y, target)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    F1Macro,
    F1Weighted,
    OneMinusRae,
}

impl Metric {
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Classification => Metric::F1Macro,
            Task::Regression => Metric::OneMinusRae,
        }
    }

    pub fn check_task(self, task: Task) -> Result<()> {
        let ok = matches!(
            (self, task),
            (Metric::F1Macro | Metric::F1Weighted, Task::Classification)
                | (Metric::OneMinusRae, Task::Regression)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::MetricTaskMismatch(format!(
                "metric {self} cannot score a {} task",
                match task {
                    Task::Classification => "classification",
                    Task::Regression => "regression",
                }
            )))
        }
    }

    pub fn compute(self, y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
        match self {
            Metric::F1Macro => f1_score(y_true, y_pred, Averaging::Macro),
            Metric::F1Weighted => f1_score(y_true, y_pred, Averaging::Weighted),
            Metric::OneMinusRae => one_minus_rae(y_true, y_pred),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F1Macro => "f1-macro",
            Metric::F1Weighted => "f1-weighted",
            Metric::OneMinusRae => "1rae",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1-macro" | "f1" => Ok(Metric::F1Macro),
            "f1-weighted" => Ok(Metric::F1Weighted),
            "1rae" | "1-rae" => Ok(Metric::OneMinusRae),
            other => Err(Error::Config(format!(
                "unknown metric {other:?} (expected f1-macro, f1-weighted or 1rae)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub metric: Metric,
}

/// Out-of-fold predictions: each fold is predicted by a model trained on the
/// other folds only.
pub fn cross_val_predict<L: Learner>(
    x: &FeatureMatrix,
    y: &[f64],
    target: TargetInfo,
    learner: &L,
    folds: &FoldPlan,
    seed: u64,
) -> Result<Vec<f64>> {
    if folds.assignments().len() != x.n_rows() || y.len() != x.n_rows() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: folds.assignments().len(),
        });
    }
    let mut pred = vec![0.0; x.n_rows()];
    for fold in 0..folds.k() {
        let (train, test) = folds.split(fold);
        let ytrain: Vec<f64> = train.iter().map(|&r| y[r]).collect();
        if target.task == Task::Classification {
            let mut seen = vec![false; target.n_classes];
            for &c in &ytrain {
                seen[c as usize] = true;
            }
            if let Some(class) = seen.iter().position(|s| !s) {
                return Err(Error::MissingTrainingClass { fold, class });
            }
        }
        let model = learner.fit(
            &x.select_rows(&train),
            &ytrain,
            target,
            derive_seed(seed, streams::CV_FOLD, fold as u64),
        )?;
        for (&r, p) in test.iter().zip(model.predict(&x.select_rows(&test))) {
            pred[r] = p;
        }
    }
    Ok(pred)
}

/// Cross-validated score of `d` under `folds`, pooled over all out-of-fold
/// predictions.
pub fn evaluate_cv(
    d: &Dataset,
    lc: &LearnerConfig,
    folds: &FoldPlan,
    metric: Metric,
) -> Result<Score> {
    metric.check_task(d.task())?;
    lc.validate()?;
    if d.n_features() == 0 {
        return Err(Error::Empty("no feature columns to evaluate".into()));
    }
    let x = FeatureMatrix::from_dataset(d);
    let y = &d.target().values;
    let pred = cross_val_predict(&x, y, TargetInfo::of(d), lc, folds, lc.seed)?;
    Ok(Score {
        value: metric.compute(y, &pred)?,
        metric,
    })
}

fn hash_of<T: Hash>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

/// Cache key: the sorted multiset of feature expressions, the learner, the
/// metric, the fold plan and the target.
pub fn cache_key(d: &Dataset, lc: &LearnerConfig, folds: &FoldPlan, metric: Metric) -> String {
    let mut exprs: Vec<String> = d.features().iter().map(|c| c.expr.to_string()).collect();
    exprs.sort();
    let target: Vec<u64> = d.target().values.iter().map(|v| v.to_bits()).collect();
    format!(
        "{}\u{1f}{lc:?}\u{1f}{metric}\u{1f}{:016x}\u{1f}{:016x}",
        exprs.join("\u{1e}"),
        hash_of(&(folds.k(), folds.assignments())),
        hash_of(&target)
    )
}

/// Memoized [`evaluate_cv`]. Readers share the map; insertions take the lock
/// exclusively.
#[derive(Debug, Default)]
pub struct ScoreCache {
    map: RwLock<HashMap<String, Score>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn evaluate(
        &self,
        d: &Dataset,
        lc: &LearnerConfig,
        folds: &FoldPlan,
        metric: Metric,
    ) -> Result<Score> {
        let key = cache_key(d, lc, folds, metric);
        if let Some(s) = self.map.read().expect("score cache poisoned").get(&key) {
            return Ok(*s);
        }
        let s = evaluate_cv(d, lc, folds, metric)?;
        self.map
            .write()
            .expect("score cache poisoned")
            .insert(key, s);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("score cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
