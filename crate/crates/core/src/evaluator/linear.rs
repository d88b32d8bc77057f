//! Linear downstream models trained by full-batch Adam on standardized
//! features: multinomial logistic regression for classification and least
//! squares for regression.

use super::{FeatureMatrix, TargetInfo};
use crate::error::Result;
use crate::nnkernel::{softmax_rows, AdamConfig, AdamState, Linear, Parameters, Tensor2};
use crate::tabular::Task;

pub const LINEAR_ITERATIONS: usize = 300;
pub const LINEAR_LEARNING_RATE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct LinearModel {
    layer: Linear,
    mean: Vec<f64>,
    scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    task: Task,
}

fn design(x: &FeatureMatrix, mean: &[f64], scale: &[f64]) -> Tensor2 {
    let (n, p) = (x.n_rows(), x.n_cols());
    let mut t = Tensor2::zeros(n, p);
    for j in 0..p {
        for (r, &v) in x.column(j).iter().enumerate() {
            t.set(r, j, (v - mean[j]) / scale[j]);
        }
    }
    t
}

fn mean_and_scale(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

impl LinearModel {
    pub fn fit(x: &FeatureMatrix, y: &[f64], target: TargetInfo) -> Result<Self> {
        let p = x.n_cols();
        let (mean, scale): (Vec<f64>, Vec<f64>) =
            (0..p).map(|j| mean_and_scale(x.column(j))).unzip();
        let xs = design(x, &mean, &scale);
        let n = x.n_rows() as f64;
        let outputs = match target.task {
            Task::Classification => target.n_classes.max(1),
            Task::Regression => 1,
        };
        let (y_mean, y_scale) = match target.task {
            Task::Classification => (0.0, 1.0),
            Task::Regression => mean_and_scale(y),
        };
        let mut layer = Linear::zeros(p, outputs);
        let mut adam = AdamState::new(
            &layer,
            AdamConfig {
                lr: LINEAR_LEARNING_RATE,
                ..AdamConfig::default()
            },
        );
        for _ in 0..LINEAR_ITERATIONS {
            let out = layer.forward(&xs);
            let mut dy = match target.task {
                Task::Classification => {
                    // d(mean cross-entropy)/d(logits) = (softmax − onehot) / n
                    let mut probs = softmax_rows(&out);
                    for (r, &c) in y.iter().enumerate() {
                        let v = probs.get(r, c as usize);
                        probs.set(r, c as usize, v - 1.0);
                    }
                    probs
                }
                Task::Regression => {
                    let mut d = out.clone();
                    for (r, &t) in y.iter().enumerate() {
                        d.data[r] = 2.0 * (out.data[r] - (t - y_mean) / y_scale);
                    }
                    d
                }
            };
            dy.scale(1.0 / n);
            let mut grad = layer.zeroed();
            layer.backward(&xs, &dy, &mut grad);
            adam.update(&mut layer, &grad)?;
        }
        Ok(LinearModel {
            layer,
            mean,
            scale,
            y_mean,
            y_scale,
            task: target.task,
        })
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        let out = self.layer.forward(&design(x, &self.mean, &self.scale));
        (0..out.rows)
            .map(|r| match self.task {
                Task::Classification => {
                    let row = out.row(r);
                    let mut best = 0;
                    for (k, &v) in row.iter().enumerate() {
                        if v > row[best] {
                            best = k;
                        }
                    }
                    best as f64
                }
                Task::Regression => out.data[r] * self.y_scale + self.y_mean,
            })
            .collect()
    }
}
