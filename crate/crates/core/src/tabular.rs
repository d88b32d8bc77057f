//! Column-typed tables: schema parsing, CSV loading, stratified fold plans
//! and fixed-length per-column descriptors.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{rng_for, streams};
use crate::transforms::FeatureExpression;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnKind {
    Discrete,
    Continuous,
    Target,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Discrete => "discrete",
            ColumnKind::Continuous => "continuous",
            ColumnKind::Target => "target",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Classification,
    Regression,
}

/// One column of a [`Dataset`].
///
/// Discrete columns hold integral category codes stored as `f64`;
/// `categories[code]` is the original label when the column came from a file.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
    pub expr: FeatureExpression,
    pub categories: Option<Vec<String>>,
}

impl Column {
    /// An original (order-0) column.
    pub fn original(name: impl Into<String>, kind: ColumnKind, values: Vec<f64>) -> Self {
        let name = name.into();
        Column {
            expr: FeatureExpression::original(&name),
            name,
            kind,
            values,
            categories: None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind == ColumnKind::Discrete
    }
}

/// A table of feature columns plus exactly one target column.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<Column>,
    target: Column,
    task: Task,
}

impl Dataset {
    pub fn new(features: Vec<Column>, mut target: Column, task: Task) -> Result<Self> {
        let n = target.values.len();
        if n < 2 {
            return Err(Error::schema(format!("need at least 2 rows, got {n}")));
        }
        target.kind = ColumnKind::Target;
        check_values(&target, task == Task::Classification)?;
        for col in &features {
            if col.kind == ColumnKind::Target {
                return Err(Error::schema(format!(
                    "feature column {:?} is declared as a target; exactly one target is allowed",
                    col.name
                )));
            }
            if col.values.len() != n {
                return Err(Error::LengthMismatch {
                    left: col.values.len(),
                    right: n,
                });
            }
            check_values(col, col.is_discrete())?;
        }
        Ok(Dataset {
            features,
            target,
            task,
        })
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &Column {
        &self.features[i]
    }

    pub fn target(&self) -> &Column {
        &self.target
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_rows(&self) -> usize {
        self.target.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn is_classification(&self) -> bool {
        self.task == Task::Classification
    }

    /// Same target and task, different feature columns.
    pub fn with_features(&self, features: Vec<Column>) -> Result<Self> {
        Dataset::new(features, self.target.clone(), self.task)
    }

    /// Number of distinct target classes (classification only; 0 otherwise).
    pub fn n_classes(&self) -> usize {
        if !self.is_classification() {
            return 0;
        }
        self.target
            .values
            .iter()
            .fold(0usize, |acc, &v| acc.max(v as usize + 1))
    }

    /// Human-readable label of a target class code.
    pub fn class_label(&self, code: usize) -> String {
        self.target
            .categories
            .as_ref()
            .and_then(|c| c.get(code).cloned())
            .unwrap_or_else(|| code.to_string())
    }
}

fn check_values(col: &Column, discrete: bool) -> Result<()> {
    for (row, &v) in col.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::schema_at("non-finite value", row, &col.name));
        }
        if discrete && (v < 0.0 || v.fract() != 0.0) {
            return Err(Error::schema_at(
                format!("discrete code {v} is not a non-negative integer"),
                row,
                &col.name,
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

/// Declared kind of every column in a CSV file.
///
/// Text form, one `name=kind` pair per line; `#` starts a comment. Kinds:
/// `discrete`, `continuous`, `target:discrete` (classification),
/// `target:continuous` (regression). A bare `target` means
/// `target:discrete`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SchemaSpec {
    entries: Vec<(String, SchemaKind)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaKind {
    Discrete,
    Continuous,
    Target { discrete: bool },
}

impl SchemaSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, kind: SchemaKind) -> Self {
        self.entries.push((name.into(), kind));
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn get(&self, name: &str) -> Option<SchemaKind> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn entries(&self) -> &[(String, SchemaKind)] {
        &self.entries
    }

    /// Schema text matching [`FromStr`]. Names are written verbatim.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, kind) in &self.entries {
            let kind = match kind {
                SchemaKind::Discrete => "discrete",
                SchemaKind::Continuous => "continuous",
                SchemaKind::Target { discrete: true } => "target:discrete",
                SchemaKind::Target { discrete: false } => "target:continuous",
            };
            out.push_str(name);
            out.push('=');
            out.push_str(kind);
            out.push('\n');
        }
        out
    }

    /// The schema describing an in-memory dataset.
    pub fn of_dataset(d: &Dataset) -> Self {
        let mut spec = SchemaSpec::new();
        for col in d.features() {
            let kind = if col.is_discrete() {
                SchemaKind::Discrete
            } else {
                SchemaKind::Continuous
            };
            spec = spec.with(col.name.clone(), kind);
        }
        spec.with(
            d.target().name.clone(),
            SchemaKind::Target {
                discrete: d.is_classification(),
            },
        )
    }
}

impl FromStr for SchemaSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut spec = SchemaSpec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            // Kinds never contain '=', so split on the last one and let column
            // names carry any character.
            let (name, kind) = line.rsplit_once('=').ok_or_else(|| {
                Error::schema(format!("schema line {}: expected name=kind", lineno + 1))
            })?;
            let name = name.trim();
            let kind = match kind.trim().to_ascii_lowercase().as_str() {
                "discrete" => SchemaKind::Discrete,
                "continuous" => SchemaKind::Continuous,
                "target" | "target:discrete" => SchemaKind::Target { discrete: true },
                "target:continuous" => SchemaKind::Target { discrete: false },
                other => {
                    return Err(Error::schema(format!(
                        "schema line {}: unknown kind {other:?}",
                        lineno + 1
                    )))
                }
            };
            if spec.get(name).is_some() {
                return Err(Error::schema(format!("column {name:?} declared twice")));
            }
            spec.entries.push((name.to_string(), kind));
        }
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// CSV loading
// ---------------------------------------------------------------------------

pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

/// Reads a header-first CSV. Discrete columns (and a discrete target) are
/// label-encoded by first appearance; missing cells are rejected.
pub fn read_csv<R: Read>(reader: R, schema: &SchemaSpec) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::schema("zero rows"));
    }

    let mut kinds = Vec::with_capacity(header.len());
    for name in &header {
        let kind = schema.get(name).ok_or_else(|| Error::Schema {
            message: "column missing from schema".into(),
            row: None,
            column: Some(name.clone()),
        })?;
        kinds.push(kind);
    }
    for (name, _) in schema.entries() {
        if !header.contains(name) {
            return Err(Error::Schema {
                message: "schema column missing from file".into(),
                row: None,
                column: Some(name.clone()),
            });
        }
    }
    let targets: Vec<usize> = kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| matches!(k, SchemaKind::Target { .. }))
        .map(|(i, _)| i)
        .collect();
    if targets.len() != 1 {
        return Err(Error::schema(format!(
            "exactly one target column required, found {}",
            targets.len()
        )));
    }
    let target_idx = targets[0];

    let mut builders: Vec<ColumnBuilder> = kinds.iter().map(|k| ColumnBuilder::new(*k)).collect();
    let mut rows = 0usize;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        // Data rows are 1-based after the header, matching what editors show.
        let line = row + 2;
        if record.len() != header.len() {
            return Err(Error::Schema {
                message: format!("expected {} cells, found {}", header.len(), record.len()),
                row: Some(line),
                column: None,
            });
        }
        for (i, cell) in record.iter().enumerate() {
            builders[i].push(cell, line, &header[i])?;
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::schema("zero rows"));
    }

    let mut features = Vec::new();
    let mut target = None;
    let mut task = Task::Regression;
    for (i, b) in builders.into_iter().enumerate() {
        let (kind, values, categories) = b.finish();
        let col = Column {
            name: header[i].clone(),
            expr: FeatureExpression::original(&header[i]),
            kind,
            values,
            categories,
        };
        if i == target_idx {
            if let SchemaKind::Target { discrete: true } = kinds[i] {
                task = Task::Classification;
            }
            target = Some(col);
        } else {
            features.push(col);
        }
    }
    Dataset::new(features, target.expect("target index validated"), task)
}

struct ColumnBuilder {
    discrete: bool,
    target: bool,
    values: Vec<f64>,
    codes: HashMap<String, usize>,
    labels: Vec<String>,
}

impl ColumnBuilder {
    fn new(kind: SchemaKind) -> Self {
        let (discrete, target) = match kind {
            SchemaKind::Discrete => (true, false),
            SchemaKind::Continuous => (false, false),
            SchemaKind::Target { discrete } => (discrete, true),
        };
        ColumnBuilder {
            discrete,
            target,
            values: Vec::new(),
            codes: HashMap::new(),
            labels: Vec::new(),
        }
    }

    fn push(&mut self, cell: &str, line: usize, name: &str) -> Result<()> {
        if cell.is_empty() {
            return Err(Error::schema_at("missing value", line, name));
        }
        if self.discrete {
            let next = self.labels.len();
            let code = *self.codes.entry(cell.to_string()).or_insert(next);
            if code == next {
                self.labels.push(cell.to_string());
            }
            self.values.push(code as f64);
        } else {
            let v: f64 = cell.parse().map_err(|_| {
                Error::schema_at(format!("cannot parse {cell:?} as a number"), line, name)
            })?;
            if !v.is_finite() {
                return Err(Error::schema_at("non-finite value", line, name));
            }
            self.values.push(v);
        }
        Ok(())
    }

    fn finish(self) -> (ColumnKind, Vec<f64>, Option<Vec<String>>) {
        let kind = match (self.target, self.discrete) {
            (true, _) => ColumnKind::Target,
            (false, true) => ColumnKind::Discrete,
            (false, false) => ColumnKind::Continuous,
        };
        let categories = self.discrete.then_some(self.labels);
        (kind, self.values, categories)
    }
}

// ---------------------------------------------------------------------------
// Fold plans
// ---------------------------------------------------------------------------

/// Assignment of every row to one of `k` cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// `(train_rows, test_rows)` for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Number of quantile bins used to stratify a regression target.
pub const REGRESSION_STRATA: usize = 5;

/// Stratified `k`-fold plan. Classification stratifies on the class, regression
/// on `min(5, distinct)` quantile bins of the target.
pub fn split_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = d.n_rows();
    if k < 2 {
        return Err(Error::Config(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    if n < k {
        return Err(Error::Config(format!("{n} rows cannot fill {k} folds")));
    }
    let strata = strata_of(d, k)?;
    let n_strata = strata.iter().copied().max().unwrap_or(0) + 1;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_strata];
    for (row, &s) in strata.iter().enumerate() {
        groups[s].push(row);
    }

    // Strata are laid out back to back and dealt round-robin, so each
    // stratum's rows spread over folds with counts differing by at most one,
    // and so do the overall fold sizes.
    let mut rng = rng_for(seed, streams::FOLDS, 0);
    let mut assignments = vec![0usize; n];
    let mut pos = 0usize;
    for group in &mut groups {
        group.shuffle(&mut rng);
        for &row in group.iter() {
            assignments[row] = pos % k;
            pos += 1;
        }
    }
    Ok(FoldPlan { k, assignments })
}

fn strata_of(d: &Dataset, k: usize) -> Result<Vec<usize>> {
    let y = &d.target().values;
    if d.is_classification() {
        let mut counts = vec![0usize; d.n_classes()];
        for &v in y {
            counts[v as usize] += 1;
        }
        for (class, &count) in counts.iter().enumerate() {
            if count > 0 && count < k {
                return Err(Error::SmallClass {
                    class: d.class_label(class),
                    count,
                    folds: k,
                });
            }
        }
        return Ok(y.iter().map(|&v| v as usize).collect());
    }
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let bins = REGRESSION_STRATA.min(sorted.len()).max(1);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut strata = vec![0usize; y.len()];
    for (rank, &row) in order.iter().enumerate() {
        strata[row] = rank * bins / y.len();
    }
    Ok(strata)
}

// ---------------------------------------------------------------------------
// Column descriptors
// ---------------------------------------------------------------------------

/// Number of summary statistics per column.
pub const DESCRIPTOR_LEN: usize = 8;

/// `[mean, std, min, max, q25, q50, q75, distinct/n]`.
pub type ColumnDescriptor = [f64; DESCRIPTOR_LEN];

pub fn column_descriptor(d: &Dataset, col: usize) -> ColumnDescriptor {
    let c = d.feature(col);
    describe(&c.values, c.is_discrete())
}

/// Descriptor of raw values. Continuous columns are summarised directly;
/// discrete columns are summarised through their category frequencies, so the
/// result does not depend on which code a category happened to receive.
pub fn describe(values: &[f64], discrete: bool) -> ColumnDescriptor {
    let n = values.len();
    if n == 0 {
        return [0.0; DESCRIPTOR_LEN];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = 1usize;
    for w in sorted.windows(2) {
        if w[0] != w[1] {
            distinct += 1;
        }
    }
    let ratio = distinct as f64 / n as f64;

    let sample = if discrete {
        let mut freqs = Vec::with_capacity(distinct);
        let mut run = 1usize;
        for i in 1..=n {
            if i < n && sorted[i] == sorted[i - 1] {
                run += 1;
            } else {
                freqs.push(run as f64 / n as f64);
                run = 1;
            }
        }
        freqs.sort_by(f64::total_cmp);
        freqs
    } else {
        sorted
    };
    // A constant column has zero dispersion by construction; floating-point
    // mean/variance noise is not allowed to leak into the std slot.
    let constant = sample.first() == sample.last();
    let m = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / m;
    let std = if constant {
        0.0
    } else {
        (sample.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m).sqrt()
    };
    let mean = if constant { sample[0] } else { mean };

    [
        mean,
        std,
        sample[0],
        sample[sample.len() - 1],
        quantile(&sample, 0.25),
        quantile(&sample, 0.50),
        quantile(&sample, 0.75),
        ratio,
    ]
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_gwh() -> SchemaSpec {
        "gender=discrete\nweight=continuous\nhealthy=target:discrete\n"
            .parse()
            .unwrap()
    }

    #[test]
    fn loads_three_column_file() {
        let csv = "gender,weight,healthy\nm,70.5,yes\nf,55,no\nm,90,no\n";
        let d = read_csv(csv.as_bytes(), &schema_gwh()).unwrap();
        assert_eq!(d.n_features(), 2);
        let discrete = d.features().iter().filter(|c| c.is_discrete()).count();
        assert_eq!((discrete, d.n_features() - discrete), (1, 1));
        assert_eq!(d.task(), Task::Classification);
        assert_eq!(d.target().values, vec![0.0, 1.0, 1.0]);
        assert_eq!(d.feature(1).values, vec![70.5, 55.0, 90.0]);
    }

    #[test]
    fn first_appearance_encoding() {
        let csv = "c,y\nb,1\na,2\nb,3\n";
        let schema: SchemaSpec = "c=discrete\ny=target:continuous".parse().unwrap();
        let d = read_csv(csv.as_bytes(), &schema).unwrap();
        assert_eq!(d.feature(0).values, vec![0.0, 1.0, 0.0]);
        assert_eq!(
            d.feature(0).categories.as_deref(),
            Some(&["b".to_string(), "a".to_string()][..])
        );
        assert_eq!(d.task(), Task::Regression);
    }

    #[test]
    fn empty_file_is_zero_rows() {
        let err = read_csv("".as_bytes(), &schema_gwh()).unwrap_err();
        assert!(err.to_string().contains("zero rows"), "{err}");
        let err = read_csv("gender,weight,healthy\n".as_bytes(), &schema_gwh()).unwrap_err();
        assert!(err.to_string().contains("zero rows"), "{err}");
    }

    #[test]
    fn schema_errors_carry_location() {
        let csv = "gender,weight,healthy\nm,70,yes\nf,abc,no\n";
        match read_csv(csv.as_bytes(), &schema_gwh()).unwrap_err() {
            Error::Schema { row, column, .. } => {
                assert_eq!(row, Some(3));
                assert_eq!(column.as_deref(), Some("weight"));
            }
            e => panic!("unexpected {e}"),
        }
        let csv = "gender,weight,healthy\nm,,yes\nf,1,no\n";
        assert!(read_csv(csv.as_bytes(), &schema_gwh())
            .unwrap_err()
            .to_string()
            .contains("missing value"));
        let csv = "gender,height,healthy\nm,1,yes\nf,1,no\n";
        assert!(read_csv(csv.as_bytes(), &schema_gwh()).is_err());
        let two_targets: SchemaSpec = "a=target\nb=target:continuous".parse().unwrap();
        let err = read_csv("a,b\n1,2\n3,4\n".as_bytes(), &two_targets).unwrap_err();
        assert!(err.to_string().contains("exactly one target"), "{err}");
        let no_target: SchemaSpec = "a=discrete\nb=continuous".parse().unwrap();
        assert!(read_csv("a,b\n1,2\n3,4\n".as_bytes(), &no_target).is_err());
    }

    #[test]
    fn schema_round_trips_through_text() {
        let s = schema_gwh();
        let again: SchemaSpec = s.to_text().parse().unwrap();
        assert_eq!(s, again);
        assert!("x=weird".parse::<SchemaSpec>().is_err());
        assert!("x".parse::<SchemaSpec>().is_err());
    }

    fn classification(labels: &[usize]) -> Dataset {
        let n = labels.len();
        let x = Column::original(
            "x",
            ColumnKind::Continuous,
            (0..n).map(|i| i as f64).collect(),
        );
        let y = Column::original(
            "y",
            ColumnKind::Target,
            labels.iter().map(|&l| l as f64).collect(),
        );
        Dataset::new(vec![x], y, Task::Classification).unwrap()
    }

    #[test]
    fn balanced_binary_folds() {
        let d = classification(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let plan = split_folds(&d, 5, 3).unwrap();
        for f in 0..5 {
            let (_, test) = plan.split(f);
            let ones = test
                .iter()
                .filter(|&&r| d.target().values[r] == 1.0)
                .count();
            assert_eq!((test.len(), ones), (2, 1));
        }
        assert_eq!(plan, split_folds(&d, 5, 3).unwrap());
    }

    #[test]
    fn eleven_rows_five_folds() {
        // Enumerated: 11 = 5*2 + 1, so exactly one fold receives a third row.
        let d = classification(&[0; 11]);
        let mut sizes = split_folds(&d, 5, 9).unwrap().sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn small_class_is_named() {
        let d = Dataset::new(
            vec![Column::original("x", ColumnKind::Continuous, vec![1.0; 7])],
            Column {
                categories: Some(vec!["common".into(), "rare".into()]),
                ..Column::original("y", ColumnKind::Target, vec![0., 0., 0., 0., 0., 1., 1.])
            },
            Task::Classification,
        )
        .unwrap();
        let err = split_folds(&d, 5, 0).unwrap_err();
        assert!(err.to_string().contains("rare"), "{err}");
        assert!(split_folds(&d, 1, 0).is_err());
    }

    #[test]
    fn descriptor_of_one_to_four() {
        let d = describe(&[4.0, 2.0, 1.0, 3.0], false);
        let std = 1.25f64.sqrt();
        let expected = [2.5, std, 1.0, 4.0, 1.75, 2.5, 3.25, 1.0];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn descriptor_of_constant_column() {
        let d = describe(&[0.1; 7], false);
        assert_eq!(d[0], 0.1);
        assert_eq!(d[1], 0.0);
        assert_eq!((d[2], d[3]), (0.1, 0.1));
        assert_eq!(d[7], 1.0 / 7.0);
    }

    #[test]
    fn discrete_descriptor_ignores_code_assignment() {
        let a = describe(&[0.0, 0.0, 1.0, 2.0], true);
        let b = describe(&[2.0, 2.0, 0.0, 1.0], true);
        assert_eq!(a, b);
        // frequencies {0.25, 0.25, 0.5}
        assert!((a[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a[3], 0.5);
        assert_eq!(a[7], 0.75);
    }
}
