//! Bagged CART trees: bootstrap rows per tree, a random feature subset per
//! split, gini or squared-error impurity, and fully grown trees unless a depth
//! limit is set.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureMatrix, TargetInfo};
use crate::seeds::{rng_for, streams};
use crate::tabular::Task;

#[derive(Clone, Copy, Debug)]
enum Node {
    /// `k` leaf values start at `offset` in [`Tree::leaf_values`]: class
    /// proportions for classification, the mean for regression.
    Leaf { offset: u32 },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
    leaf_values: Vec<f64>,
}

impl Tree {
    fn leaf(&self, x: &FeatureMatrix, row: usize) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { offset } => return offset as usize,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x.value(row, feature as usize) <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomForest {
    trees: Vec<Tree>,
    /// Values per leaf: class count, or 1 for regression.
    width: usize,
    task: Task,
}

#[derive(Clone, Copy, Debug)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub max_features: usize,
}

/// Dense per-feature ranks, so node sorting compares integers.
fn ranks(x: &FeatureMatrix) -> Vec<Vec<u32>> {
    (0..x.n_cols())
        .map(|j| crate::mutualinfo::dense_codes(x.column(j)))
        .collect()
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    ranks: &'a [Vec<u32>],
    /// Classification: class codes as indices. Regression: targets.
    y: &'a [f64],
    weight: Vec<f64>,
    width: usize,
    task: Task,
    params: ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    leaf_values: Vec<f64>,
}

/// Weighted sufficient statistics of a set of rows.
#[derive(Clone, Debug)]
struct Stats {
    total: f64,
    /// Class weights (classification) or `[Σwy, Σwy²]` (regression).
    acc: Vec<f64>,
}

impl Builder<'_> {
    fn stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats {
            total: 0.0,
            acc: vec![
                0.0;
                if self.task == Task::Classification {
                    self.width
                } else {
                    2
                }
            ],
        };
        for &r in rows {
            let w = self.weight[r];
            s.total += w;
            match self.task {
                Task::Classification => s.acc[self.y[r] as usize] += w,
                Task::Regression => {
                    s.acc[0] += w * self.y[r];
                    s.acc[1] += w * self.y[r] * self.y[r];
                }
            }
        }
        s
    }

    fn is_pure(&self, s: &Stats) -> bool {
        match self.task {
            Task::Classification => s.acc.iter().filter(|&&c| c > 0.0).count() <= 1,
            Task::Regression => {
                let sse = s.acc[1] - s.acc[0] * s.acc[0] / s.total;
                sse <= 1e-12 * s.acc[1].abs().max(1e-300)
            }
        }
    }

    fn push_leaf(&mut self, s: &Stats) -> Node {
        let offset = self.leaf_values.len() as u32;
        match self.task {
            Task::Classification => self.leaf_values.extend(s.acc.iter().map(|c| c / s.total)),
            Task::Regression => self.leaf_values.push(s.acc[0] / s.total),
        }
        Node::Leaf { offset }
    }

    /// Best `(feature, threshold)` for `rows`, scanning features in random
    /// order until `max_features` non-constant ones have been examined.
    fn best_split(&mut self, rows: &[usize], parent: &Stats) -> Option<(usize, f64)> {
        let p = self.x.n_cols();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut self.rng);
        let mut examined = 0;
        let mut best: Option<(usize, f64, f64)> = None; // feature, threshold, score
        let mut sorted = rows.to_vec();
        for &f in &order {
            if examined >= self.params.max_features {
                break;
            }
            let rank = &self.ranks[f];
            let (lo, hi) = rows.iter().fold((u32::MAX, 0), |(lo, hi), &r| {
                (lo.min(rank[r]), hi.max(rank[r]))
            });
            if lo == hi {
                continue;
            }
            examined += 1;
            sorted.copy_from_slice(rows);
            sorted.sort_unstable_by_key(|&r| rank[r]);
            if let Some((pos, score)) = self.sweep(&sorted, rank, parent) {
                if best.is_none_or(|(_, _, s)| score > s) {
                    let a = self.x.value(sorted[pos - 1], f);
                    let b = self.x.value(sorted[pos], f);
                    let mut t = a + (b - a) / 2.0;
                    if t >= b {
                        t = a;
                    }
                    best = Some((f, t, score));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    /// Returns the split position maximizing the impurity-reduction proxy:
    /// `Σ_k c_k² / w` summed over both children (gini), or `(Σwy)² / w`
    /// summed over both children (squared error).
    fn sweep(&self, sorted: &[usize], rank: &[u32], parent: &Stats) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut wl = 0.0;
        match self.task {
            Task::Classification => {
                let mut left = vec![0.0; self.width];
                let mut right = parent.acc.clone();
                let mut sq_l = 0.0;
                let mut sq_r: f64 = right.iter().map(|c| c * c).sum();
                for i in 1..sorted.len() {
                    let r = sorted[i - 1];
                    let w = self.weight[r];
                    let c = self.y[r] as usize;
                    sq_l += (left[c] + w) * (left[c] + w) - left[c] * left[c];
                    sq_r += (right[c] - w) * (right[c] - w) - right[c] * right[c];
                    left[c] += w;
                    right[c] -= w;
                    wl += w;
                    if rank[sorted[i]] == rank[r] {
                        continue;
                    }
                    let wr = parent.total - wl;
                    let score = sq_l / wl + sq_r / wr;
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((i, score));
                    }
                }
            }
            Task::Regression => {
                let mut sl = 0.0;
                for i in 1..sorted.len() {
                    let r = sorted[i - 1];
                    let w = self.weight[r];
                    sl += w * self.y[r];
                    wl += w;
                    if rank[sorted[i]] == rank[r] {
                        continue;
                    }
                    let wr = parent.total - wl;
                    let sr = parent.acc[0] - sl;
                    let score = sl * sl / wl + sr * sr / wr;
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((i, score));
                    }
                }
            }
        }
        best
    }

    fn build(mut self, mut rows: Vec<usize>) -> Tree {
        // (node index, range in `rows`, depth)
        self.nodes.push(Node::Leaf { offset: 0 });
        let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
        while let Some((node, lo, hi, depth)) = stack.pop() {
            let slice = &rows[lo..hi];
            let stats = self.stats(slice);
            let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
            let split = if depth_ok && hi - lo >= 2 && !self.is_pure(&stats) {
                let slice = slice.to_vec();
                self.best_split(&slice, &stats)
            } else {
                None
            };
            let Some((feature, threshold)) = split else {
                self.nodes[node] = self.push_leaf(&stats);
                continue;
            };
            let x = self.x;
            let part = &mut rows[lo..hi];
            let mut mid = 0;
            for i in 0..part.len() {
                if x.value(part[i], feature) <= threshold {
                    part.swap(i, mid);
                    mid += 1;
                }
            }
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { offset: 0 });
            self.nodes.push(Node::Leaf { offset: 0 });
            self.nodes[node] = Node::Split {
                feature: feature as u32,
                threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, lo + mid, hi, depth + 1));
            stack.push((left, lo, lo + mid, depth + 1));
        }
        Tree {
            nodes: self.nodes,
            leaf_values: self.leaf_values,
        }
    }
}

impl RandomForest {
    /// Classification targets must be codes `0..target.n_classes`.
    pub fn fit(
        x: &FeatureMatrix,
        y: &[f64],
        target: TargetInfo,
        params: ForestParams,
        seed: u64,
    ) -> Self {
        let ranks = ranks(x);
        let n = x.n_rows();
        let width = match target.task {
            Task::Classification => target.n_classes.max(1),
            Task::Regression => 1,
        };
        let max_features = params.max_features.clamp(1, x.n_cols().max(1));
        let params = ForestParams {
            max_features,
            ..params
        };
        let trees = (0..params.trees.max(1))
            .map(|t| {
                let mut rng = rng_for(seed, streams::TREE, t as u64);
                let mut weight = vec![0.0; n];
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1.0;
                }
                let rows: Vec<usize> = (0..n).filter(|&r| weight[r] > 0.0).collect();
                Builder {
                    x,
                    ranks: &ranks,
                    y,
                    weight,
                    width,
                    task: target.task,
                    params,
                    rng,
                    nodes: Vec::new(),
                    leaf_values: Vec::new(),
                }
                .build(rows)
            })
            .collect();
        RandomForest {
            trees,
            width,
            task: target.task,
        }
    }

    /// Class with the highest mean leaf proportion (lowest code on ties), or
    /// the mean of the trees' leaf means.
    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        let mut acc = vec![0.0; self.width];
        (0..x.n_rows())
            .map(|row| {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for t in &self.trees {
                    let off = t.leaf(x, row);
                    for (a, v) in acc.iter_mut().zip(&t.leaf_values[off..off + self.width]) {
                        *a += v;
                    }
                }
                match self.task {
                    Task::Classification => {
                        let mut best = 0;
                        for (k, &v) in acc.iter().enumerate() {
                            if v > acc[best] {
                                best = k;
                            }
                        }
                        best as f64
                    }
                    Task::Regression => acc[0] / self.trees.len() as f64,
                }
            })
            .collect()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
