//! Seeded synthetic tables with known structure, for demos and end-to-end
//! checks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::seeds::{rng_for, streams};
use crate::tabular::{Column, ColumnKind, Dataset, Task};

/// `features` i.i.d. standard-normal columns `x1, x2, …` and a regression
/// target `y = x1·x2 + noise·ε` with standard-normal `ε`.
pub fn product_regression(rows: usize, features: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, streams::SYNTHETIC, 0);
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows); features.max(2)];
    let mut y = Vec::with_capacity(rows);
    for _ in 0..rows {
        for c in cols.iter_mut() {
            c.push(rng.sample::<f64, _>(StandardNormal));
        }
        let e: f64 = rng.sample(StandardNormal);
        y.push(cols[0].last().unwrap() * cols[1].last().unwrap() + noise * e);
    }
    let features = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::original(format!("x{}", j + 1), ColumnKind::Continuous, v))
        .collect();
    Dataset::new(
        features,
        Column::original("y", ColumnKind::Target, y),
        Task::Regression,
    )
}

/// Two classes decided by the sign of `x1·x2`, plus a three-level discrete
/// column `g` that shifts the decision slightly.
pub fn product_classification(rows: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, streams::SYNTHETIC, 1);
    let (mut a, mut b, mut c, mut g, mut y) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..rows {
        let x1: f64 = rng.sample(StandardNormal);
        let x2: f64 = rng.sample(StandardNormal);
        let x3: f64 = rng.sample(StandardNormal);
        let level = rng.random_range(0..3usize);
        let e: f64 = rng.sample(StandardNormal);
        let s = x1 * x2 + 0.3 * (level as f64 - 1.0) + 0.2 * e;
        a.push(x1);
        b.push(x2);
        c.push(x3);
        g.push(level as f64);
        y.push(if s > 0.0 { 1.0 } else { 0.0 });
    }
    let features = vec![
        Column::original("x1", ColumnKind::Continuous, a),
        Column::original("x2", ColumnKind::Continuous, b),
        Column::original("x3", ColumnKind::Continuous, c),
        Column::original("g", ColumnKind::Discrete, g),
    ];
    Dataset::new(
        features,
        Column::original("y", ColumnKind::Target, y),
        Task::Classification,
    )
}
