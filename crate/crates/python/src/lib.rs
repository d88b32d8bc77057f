//! Python bindings: score a table, run the feature search, and write
//! synthetic data. Tables are read from a CSV file plus a schema file, the
//! same inputs the command-line tool takes.

use std::path::Path;

use dualfeat::evaluator::{evaluate_cv, LearnerConfig, LearnerKind, Metric};
use dualfeat::search::{dataset_csv, run_search, Ablation, SearchConfig};
use dualfeat::synthetic::product_regression;
use dualfeat::tabular::{load_csv, split_folds, Dataset, SchemaSpec};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(dualfeat_py, DualfeatError, PyValueError);

fn py_err(e: dualfeat::Error) -> PyErr {
    DualfeatError::new_err(e.to_string())
}

fn load(data: &str, schema: &str) -> PyResult<Dataset> {
    let spec = SchemaSpec::load(schema).map_err(py_err)?;
    load_csv(data, &spec).map_err(py_err)
}

fn learner(kind: &str, trees: usize, seed: u64) -> PyResult<LearnerConfig> {
    Ok(LearnerConfig {
        kind: kind.parse::<LearnerKind>().map_err(py_err)?,
        trees,
        seed,
        ..LearnerConfig::default()
    })
}

fn metric(name: Option<&str>) -> PyResult<Option<Metric>> {
    name.map(str::parse::<Metric>).transpose().map_err(py_err)
}

/// Cross-validated score of a table without any search.
#[pyfunction]
#[pyo3(signature = (data, schema, learner="rf", trees=50, metric=None, seed=0, folds=5))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    py: Python<'_>,
    data: &str,
    schema: &str,
    learner: &str,
    trees: usize,
    metric: Option<&str>,
    seed: u64,
    folds: usize,
) -> PyResult<f64> {
    let lc = self::learner(learner, trees, seed)?;
    lc.validate().map_err(py_err)?;
    let requested = self::metric(metric)?;
    let d = load(data, schema)?;
    py.detach(|| {
        let m = requested.unwrap_or_else(|| Metric::default_for(d.task()));
        m.check_task(d.task())?;
        let plan = split_folds(&d, folds, seed)?;
        Ok(evaluate_cv(&d, &lc, &plan, m)?.value)
    })
    .map_err(py_err)
}

/// Result of [`search`]: scores, the best feature set and its history.
#[pyclass(frozen, module = "dualfeat_py")]
struct SearchOutcome {
    #[pyo3(get)]
    base_score: f64,
    #[pyo3(get)]
    best_score: f64,
    #[pyo3(get)]
    metric: String,
    /// Feature column names of the best set, in order.
    #[pyo3(get)]
    columns: Vec<String>,
    /// Expression of each best-set column in terms of the input columns.
    #[pyo3(get)]
    expressions: Vec<String>,
    /// Best score so far after each epoch.
    #[pyo3(get)]
    convergence: Vec<f64>,
    csv: String,
}

#[pymethods]
impl SearchOutcome {
    /// The best feature set with its target, as CSV text.
    fn to_csv(&self) -> String {
        self.csv.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SearchOutcome({} {:.4} -> {:.4}, {} features)",
            self.metric,
            self.base_score,
            self.best_score,
            self.columns.len()
        )
    }
}

/// Searches for a better feature set.
#[pyfunction]
#[pyo3(signature = (
    data, schema, epochs=200, steps=6, seed=0, learner="rf", trees=50,
    ablation=None, metric=None, cap=None, folds=5,
))]
#[allow(clippy::too_many_arguments)]
fn search(
    py: Python<'_>,
    data: &str,
    schema: &str,
    epochs: usize,
    steps: usize,
    seed: u64,
    learner: &str,
    trees: usize,
    ablation: Option<&str>,
    metric: Option<&str>,
    cap: Option<usize>,
    folds: usize,
) -> PyResult<SearchOutcome> {
    let cfg = SearchConfig {
        epochs,
        steps,
        seed,
        learner: self::learner(learner, trees, seed)?,
        metric: self::metric(metric)?,
        ablation: ablation
            .map(str::parse::<Ablation>)
            .transpose()
            .map_err(py_err)?,
        cap,
        folds,
        ..SearchConfig::default()
    };
    let d = load(data, schema)?;
    let r = py.detach(|| run_search(&d, &cfg)).map_err(py_err)?;
    Ok(SearchOutcome {
        base_score: r.base_score,
        best_score: r.best_score,
        metric: r.metric.to_string(),
        columns: r.best.features().iter().map(|c| c.name.clone()).collect(),
        expressions: r
            .best
            .features()
            .iter()
            .map(|c| c.expr.to_string())
            .collect(),
        csv: dataset_csv(&r.best).map_err(py_err)?,
        convergence: r.convergence,
    })
}

/// Writes `data.csv` and `schema.txt` for `y = x1·x2 + noise·ε` with
/// standard normal features into `directory` and returns both paths.
#[pyfunction]
#[pyo3(signature = (directory, rows=500, features=5, noise=0.05, seed=0))]
fn synthetic_regression(
    directory: &str,
    rows: usize,
    features: usize,
    noise: f64,
    seed: u64,
) -> PyResult<(String, String)> {
    let d = product_regression(rows, features, noise, seed).map_err(py_err)?;
    let dir = Path::new(directory);
    let (data, schema) = (dir.join("data.csv"), dir.join("schema.txt"));
    let write = |path: &Path, text: String| {
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(path, text))
            .map_err(|e| DualfeatError::new_err(format!("cannot write {}: {e}", path.display())))
    };
    write(&data, dataset_csv(&d).map_err(py_err)?)?;
    write(&schema, SchemaSpec::of_dataset(&d).to_text())?;
    Ok((data.display().to_string(), schema.display().to_string()))
}

#[pymodule]
fn dualfeat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DualfeatError", m.py().get_type::<DualfeatError>())?;
    m.add_class::<SearchOutcome>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_regression, m)?)?;
    Ok(())
}
