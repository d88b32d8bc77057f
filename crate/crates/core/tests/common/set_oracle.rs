//! Brute-force oracle for the step set algebra: a name-level hand trace of
//! delete/replace/add, dedup, cap pruning and the empty-set fallback.

use std::collections::HashSet;

use dualfeat::agents::{DiscAction, DISC_ACTIONS};
use dualfeat::search::{apply_generated, target_relevance};
use dualfeat::tabular::{Column, ColumnKind, Dataset, Task};
use dualfeat::transforms::FeatureExpression;

pub fn derived(expr: &str, values: Vec<f64>) -> Column {
    let mut c = Column::original(expr, ColumnKind::Continuous, values);
    c.expr = expr.parse::<FeatureExpression>().unwrap();
    c
}

pub fn base(k: usize) -> Dataset {
    let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let b = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let c = vec![0.1, 0.4, 0.2, 0.8, 0.3, 0.9, 0.5, 0.7];
    let sq: Vec<f64> = a.iter().map(|v| v * v).collect();
    let cols = vec![
        Column::original("a", ColumnKind::Continuous, a),
        Column::original("b", ColumnKind::Continuous, b),
        Column::original("c", ColumnKind::Continuous, c),
        derived("square(a)", sq),
    ];
    let y = Column::original(
        "y",
        ColumnKind::Target,
        vec![0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0],
    );
    Dataset::new(cols.into_iter().take(k).collect(), y, Task::Classification).unwrap()
}

/// Candidate generated columns per feature slot for two scenarios.
fn generated(d: &Dataset, scenario: usize) -> Vec<Option<Column>> {
    let log_b = derived("log(b)", vec![1.1, 0.0, 1.4, 0.0, 1.6, 2.2, 0.7, 1.8]);
    let pool = match scenario {
        // duplicate of an existing column, a fresh column, a constant, a
        // duplicate of another generated column
        0 => vec![
            Some(derived(
                "square(a)",
                d.feature(0).values.iter().map(|v| v * v).collect(),
            )),
            Some(log_b.clone()),
            Some(derived("cube(c)", vec![2.0; 8])),
            Some(log_b),
        ],
        _ => vec![
            None,
            Some(derived(
                "abs(b)",
                vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0],
            )),
            Some(derived(
                "sqrt(c)",
                vec![0.3, 0.6, 0.4, 0.9, 0.5, 0.95, 0.7, 0.8],
            )),
            Some(derived(
                "inverse(square(a))",
                vec![1.0, 0.25, 0.11, 0.06, 0.04, 0.03, 0.02, 0.016],
            )),
        ],
    };
    pool.into_iter().take(d.n_features()).collect()
}

fn constant(c: &Column) -> bool {
    c.values.iter().all(|&v| v == c.values[0])
}

/// Returns (names, flagged).
fn oracle(
    d: &Dataset,
    gens: &[Option<Column>],
    actions: &[DiscAction],
    cap: usize,
) -> (Vec<String>, bool) {
    let mut list: Vec<&Column> = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        let orig = d.feature(i);
        match (&gens[i], a) {
            (None, _) | (_, DiscAction::Delete) | (_, DiscAction::Add) => list.push(orig),
            (Some(g), DiscAction::Replace) => {
                if !constant(g) {
                    list.push(g)
                }
            }
        }
    }
    for (i, a) in actions.iter().enumerate() {
        if let (Some(g), DiscAction::Add) = (&gens[i], a) {
            if !constant(g) {
                list.push(g);
            }
        }
    }
    let mut seen = HashSet::new();
    let list: Vec<&Column> = list
        .into_iter()
        .filter(|c| seen.insert(c.name.clone()))
        .collect();
    if list.is_empty() {
        return (d.features().iter().map(|c| c.name.clone()).collect(), true);
    }
    let over = list.len().saturating_sub(cap);
    let mut generated: Vec<(f64, usize)> = list
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.expr.is_original())
        .map(|(p, c)| (target_relevance(d, c).unwrap(), p))
        .collect();
    generated.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)));
    let dropped: HashSet<usize> = generated.iter().take(over).map(|&(_, p)| p).collect();
    let names = list
        .iter()
        .enumerate()
        .filter(|(p, _)| !dropped.contains(p))
        .map(|(_, c)| c.name.clone())
        .collect();
    (names, false)
}

fn assignments(k: usize) -> Vec<Vec<DiscAction>> {
    (0..3usize.pow(k as u32))
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let a = DISC_ACTIONS[code % 3];
                    code /= 3;
                    a
                })
                .collect()
        })
        .collect()
}

/// Runs every assignment for k = 1..=4, both scenarios and four caps,
/// panicking on the first disagreement. Returns the number of cases.
pub fn check_all_assignments() -> usize {
    let mut checked = 0;
    for k in 1..=4 {
        let d = base(k);
        for scenario in 0..2 {
            let gens = generated(&d, scenario);
            for cap in [k, k + 1, k + 2, usize::MAX] {
                for actions in assignments(k) {
                    let out = apply_generated(&d, &gens, &actions, cap).unwrap();
                    let got: Vec<String> = out
                        .dataset
                        .features()
                        .iter()
                        .map(|c| c.name.clone())
                        .collect();
                    let (want, flagged) = oracle(&d, &gens, &actions, cap);
                    assert_eq!(
                        got, want,
                        "k={k} scenario={scenario} cap={cap} actions={actions:?}"
                    );
                    assert_eq!(out.flagged, flagged);
                    assert!(out.dataset.n_features() <= cap.max(d.n_features()));
                    assert_eq!(out.dataset.target(), d.target());
                    for (i, s) in out.successor.iter().enumerate() {
                        if let Some(j) = s {
                            let slot = &out.dataset.features()[*j].name;
                            let expected = match (&gens[i], actions[i]) {
                                (Some(g), DiscAction::Replace) if !out.flagged => &g.name,
                                _ => &d.feature(i).name,
                            };
                            assert_eq!(slot, expected);
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    checked
}
