use rand::Rng;

use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Variance floor inside layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// A model whose trainable state is a fixed list of tensors.
///
/// The order of [`Parameters::tensors`] is stable; gradients are stored in a
/// value of the same type so the two lists line up.
pub trait Parameters {
    fn tensors(&self) -> Vec<&Tensor2>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor2>;

    fn zeroed(&self) -> Self
    where
        Self: Clone,
    {
        let mut g = self.clone();
        for t in g.tensors_mut() {
            t.fill(0.0);
        }
        g
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// `y = x·W + b`, with `W` stored `in × out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub w: Tensor2,
    pub b: Tensor2,
}

impl Linear {
    pub fn new<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        Linear {
            w: Tensor2::xavier(input, output, rng),
            b: Tensor2::zeros(1, output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Linear {
            w: Tensor2::zeros(input, output),
            b: Tensor2::zeros(1, output),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w.rows
    }

    pub fn output_width(&self) -> usize {
        self.w.cols
    }

    pub fn forward(&self, x: &Tensor2) -> Tensor2 {
        let mut y = x.matmul(&self.w);
        y.add_row(&self.b);
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Tensor2, dy: &Tensor2, grad: &mut Linear) -> Tensor2 {
        grad.w.add_assign(&x.t_matmul(dy));
        grad.b.add_assign(&dy.column_sums());
        dy.matmul_t(&self.w)
    }
}

impl Parameters for Linear {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Per-row normalization followed by an elementwise affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gain: Tensor2,
    pub bias: Tensor2,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    xhat: Tensor2,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(width: usize) -> Self {
        LayerNorm {
            gain: Tensor2::filled(1, width, 1.0),
            bias: Tensor2::zeros(1, width),
        }
    }

    pub fn forward(&self, x: &Tensor2) -> (Tensor2, LayerNormCache) {
        let mut xhat = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows);
        let d = x.cols as f64;
        for r in 0..x.rows {
            let row = xhat.row_mut(r);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.iter_mut().for_each(|v| *v = (*v - mean) * s);
            inv_std.push(s);
        }
        let mut y = xhat.clone();
        for r in 0..y.rows {
            for ((v, g), b) in y
                .row_mut(r)
                .iter_mut()
                .zip(&self.gain.data)
                .zip(&self.bias.data)
            {
                *v = *v * g + b;
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &LayerNormCache, dy: &Tensor2, grad: &mut LayerNorm) -> Tensor2 {
        let d = dy.cols as f64;
        let mut dx = Tensor2::zeros(dy.rows, dy.cols);
        for r in 0..dy.rows {
            let xh = cache.xhat.row(r);
            let g = dy.row(r);
            let dxhat: Vec<f64> = g.iter().zip(&self.gain.data).map(|(g, w)| g * w).collect();
            for c in 0..dy.cols {
                grad.gain.data[c] += g[c] * xh[c];
                grad.bias.data[c] += g[c];
            }
            let mean_d = dxhat.iter().sum::<f64>() / d;
            let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d;
            for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                *o = cache.inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
            }
        }
        dx
    }
}

impl Parameters for LayerNorm {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.gain, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.gain, &mut self.bias]
    }
}

pub fn relu(x: &Tensor2) -> Tensor2 {
    x.map(|v| v.max(0.0))
}

/// Gradient of ReLU given its pre-activation input.
pub fn relu_backward(pre: &Tensor2, dy: &Tensor2) -> Tensor2 {
    Tensor2 {
        rows: dy.rows,
        cols: dy.cols,
        data: pre
            .data
            .iter()
            .zip(&dy.data)
            .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(x: &Tensor2) -> Tensor2 {
    let mut y = x.clone();
    for r in 0..y.rows {
        let row = y.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - max).exp());
        let mut terms = row.to_vec();
        let total = super::tensor::order_free_sum(&mut terms);
        row.iter_mut().for_each(|v| *v /= total);
    }
    y
}

/// Gradient through `y = softmax_rows(x)`, given `y`.
pub fn softmax_backward(y: &Tensor2, dy: &Tensor2) -> Tensor2 {
    let mut dx = Tensor2::zeros(y.rows, y.cols);
    for r in 0..y.rows {
        let (yr, gr) = (y.row(r), dy.row(r));
        let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = yr[c] * (gr[c] - inner);
        }
    }
    dx
}

/// Position-wise feed-forward block: affine, ReLU, affine.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForward {
    pub l1: Linear,
    pub l2: Linear,
}

#[derive(Clone, Debug)]
pub struct FeedForwardCache {
    x: Tensor2,
    pre: Tensor2,
    act: Tensor2,
}

impl FeedForward {
    pub fn new<R: Rng>(width: usize, hidden: usize, rng: &mut R) -> Self {
        FeedForward {
            l1: Linear::new(width, hidden, rng),
            l2: Linear::new(hidden, width, rng),
        }
    }

    pub fn forward(&self, x: &Tensor2) -> (Tensor2, FeedForwardCache) {
        let pre = self.l1.forward(x);
        let act = relu(&pre);
        let y = self.l2.forward(&act);
        (
            y,
            FeedForwardCache {
                x: x.clone(),
                pre,
                act,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &FeedForwardCache,
        dy: &Tensor2,
        grad: &mut FeedForward,
    ) -> Tensor2 {
        let dact = self.l2.backward(&cache.act, dy, &mut grad.l2);
        let dpre = relu_backward(&cache.pre, &dact);
        self.l1.backward(&cache.x, &dpre, &mut grad.l1)
    }
}

impl Parameters for FeedForward {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut t = self.l1.tensors();
        t.extend(self.l2.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut t = self.l1.tensors_mut();
        t.extend(self.l2.tensors_mut());
        t
    }
}

/// One hidden ReLU layer shared by several linear output heads.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub hidden: Linear,
    pub heads: Vec<Linear>,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    x: Tensor2,
    pre: Tensor2,
    act: Tensor2,
}

impl Mlp {
    pub fn new<R: Rng>(input: usize, hidden: usize, head_sizes: &[usize], rng: &mut R) -> Self {
        Mlp {
            hidden: Linear::new(input, hidden, rng),
            heads: head_sizes
                .iter()
                .map(|&k| Linear::new(hidden, k, rng))
                .collect(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.hidden.input_width()
    }

    /// Outputs of every head for every row of `x`.
    pub fn forward(&self, x: &Tensor2) -> Result<(Vec<Tensor2>, MlpCache)> {
        if x.cols != self.input_width() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_width(),
                x.cols
            )));
        }
        let pre = self.hidden.forward(x);
        let act = relu(&pre);
        let outs = self.heads.iter().map(|h| h.forward(&act)).collect();
        Ok((
            outs,
            MlpCache {
                x: x.clone(),
                pre,
                act,
            },
        ))
    }

    /// `d_heads[h]` is the upstream gradient for head `h` (same shape as its
    /// output). Returns `dL/dx`.
    pub fn backward(
        &self,
        cache: &MlpCache,
        d_heads: &[Tensor2],
        grad: &mut Mlp,
    ) -> Result<Tensor2> {
        if d_heads.len() != self.heads.len() {
            return Err(Error::Shape(format!(
                "{} head gradients for {} heads",
                d_heads.len(),
                self.heads.len()
            )));
        }
        let mut dact = Tensor2::zeros(cache.act.rows, cache.act.cols);
        for ((head, g), dy) in self.heads.iter().zip(grad.heads.iter_mut()).zip(d_heads) {
            if dy.shape() != (cache.act.rows, head.output_width()) {
                return Err(Error::Shape("head gradient shape mismatch".into()));
            }
            dact.add_assign(&head.backward(&cache.act, dy, g));
        }
        let dpre = relu_backward(&cache.pre, &dact);
        Ok(self.hidden.backward(&cache.x, &dpre, &mut grad.hidden))
    }
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut t = self.hidden.tensors();
        for h in &self.heads {
            t.extend(h.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut t = self.hidden.tensors_mut();
        for h in &mut self.heads {
            t.extend(h.tensors_mut());
        }
        t
    }
}
