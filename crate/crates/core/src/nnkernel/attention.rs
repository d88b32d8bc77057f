use rand::Rng;

use super::layers::{
    softmax_backward, softmax_rows, FeedForward, FeedForwardCache, LayerNorm, LayerNormCache,
    Parameters,
};
use super::tensor::{order_free_sum, Tensor2};
use crate::error::{Error, Result};

/// Scaled dot-product attention over `heads` slices of width `d_model / heads`,
/// followed by an output projection. No biases and no positional terms, so
/// permuting the input rows permutes the output rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiHeadAttention {
    pub wq: Tensor2,
    pub wk: Tensor2,
    pub wv: Tensor2,
    pub wo: Tensor2,
    pub heads: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    x: Tensor2,
    q: Tensor2,
    k: Tensor2,
    v: Tensor2,
    concat: Tensor2,
    /// Softmax weights, one `tokens × tokens` matrix per head.
    pub weights: Vec<Tensor2>,
}

fn check_heads(d_model: usize, heads: usize) -> Result<()> {
    if heads == 0 || !d_model.is_multiple_of(heads) {
        return Err(Error::Config(format!(
            "model width {d_model} is not divisible by {heads} heads"
        )));
    }
    Ok(())
}

impl MultiHeadAttention {
    pub fn new<R: Rng>(d_model: usize, heads: usize, rng: &mut R) -> Result<Self> {
        check_heads(d_model, heads)?;
        Ok(MultiHeadAttention {
            wq: Tensor2::xavier(d_model, d_model, rng),
            wk: Tensor2::xavier(d_model, d_model, rng),
            wv: Tensor2::xavier(d_model, d_model, rng),
            wo: Tensor2::xavier(d_model, d_model, rng),
            heads,
        })
    }

    pub fn from_weights(
        wq: Tensor2,
        wk: Tensor2,
        wv: Tensor2,
        wo: Tensor2,
        heads: usize,
    ) -> Result<Self> {
        let d = wq.rows;
        for w in [&wq, &wk, &wv, &wo] {
            if w.shape() != (d, d) {
                return Err(Error::Shape(
                    "attention weights must be square and equal".into(),
                ));
            }
        }
        check_heads(d, heads)?;
        Ok(MultiHeadAttention {
            wq,
            wk,
            wv,
            wo,
            heads,
        })
    }

    pub fn d_model(&self) -> usize {
        self.wq.rows
    }

    pub fn d_k(&self) -> usize {
        self.d_model() / self.heads
    }

    pub fn forward(&self, x: &Tensor2) -> (Tensor2, AttentionCache) {
        let q = x.matmul(&self.wq);
        let k = x.matmul(&self.wk);
        let v = x.matmul(&self.wv);
        let dk = self.d_k();
        let scale = 1.0 / (dk as f64).sqrt();
        let t = x.rows;
        let mut concat = Tensor2::zeros(t, self.d_model());
        let mut weights = Vec::with_capacity(self.heads);
        let mut terms = vec![0.0; t];
        for h in 0..self.heads {
            let (qh, kh, vh) = (
                q.columns(h * dk, dk),
                k.columns(h * dk, dk),
                v.columns(h * dk, dk),
            );
            let mut scores = qh.matmul_t(&kh);
            scores.scale(scale);
            let a = softmax_rows(&scores);
            for i in 0..t {
                for c in 0..dk {
                    for (j, term) in terms.iter_mut().enumerate() {
                        *term = a.get(i, j) * vh.get(j, c);
                    }
                    concat.set(i, h * dk + c, order_free_sum(&mut terms));
                }
            }
            weights.push(a);
        }
        let out = concat.matmul(&self.wo);
        (
            out,
            AttentionCache {
                x: x.clone(),
                q,
                k,
                v,
                concat,
                weights,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &AttentionCache,
        dy: &Tensor2,
        grad: &mut MultiHeadAttention,
    ) -> Tensor2 {
        let dk = self.d_k();
        let scale = 1.0 / (dk as f64).sqrt();
        grad.wo.add_assign(&cache.concat.t_matmul(dy));
        let dconcat = dy.matmul_t(&self.wo);
        let t = dy.rows;
        let mut dq = Tensor2::zeros(t, self.d_model());
        let mut dkm = Tensor2::zeros(t, self.d_model());
        let mut dv = Tensor2::zeros(t, self.d_model());
        for (h, a) in cache.weights.iter().enumerate() {
            let (qh, kh, vh) = (
                cache.q.columns(h * dk, dk),
                cache.k.columns(h * dk, dk),
                cache.v.columns(h * dk, dk),
            );
            let dout = dconcat.columns(h * dk, dk);
            let da = dout.matmul_t(&vh);
            dv.add_columns(h * dk, &a.t_matmul(&dout));
            let mut ds = softmax_backward(a, &da);
            ds.scale(scale);
            dq.add_columns(h * dk, &ds.matmul(&kh));
            dkm.add_columns(h * dk, &ds.t_matmul(&qh));
        }
        grad.wq.add_assign(&cache.x.t_matmul(&dq));
        grad.wk.add_assign(&cache.x.t_matmul(&dkm));
        grad.wv.add_assign(&cache.x.t_matmul(&dv));
        let mut dx = dq.matmul_t(&self.wq);
        dx.add_assign(&dkm.matmul_t(&self.wk));
        dx.add_assign(&dv.matmul_t(&self.wv));
        dx
    }
}

impl Parameters for MultiHeadAttention {
    fn tensors(&self) -> Vec<&Tensor2> {
        vec![&self.wq, &self.wk, &self.wv, &self.wo]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        vec![&mut self.wq, &mut self.wk, &mut self.wv, &mut self.wo]
    }
}

/// Attention, add & norm, feed-forward, add & norm.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderBlock {
    pub attn: MultiHeadAttention,
    pub ln1: LayerNorm,
    pub ffn: FeedForward,
    pub ln2: LayerNorm,
}

#[derive(Clone, Debug)]
pub struct EncoderBlockCache {
    pub attn: AttentionCache,
    ln1: LayerNormCache,
    ffn: FeedForwardCache,
    ln2: LayerNormCache,
}

impl EncoderBlock {
    pub fn new<R: Rng>(d_model: usize, heads: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(EncoderBlock {
            attn: MultiHeadAttention::new(d_model, heads, rng)?,
            ln1: LayerNorm::new(d_model),
            ffn: FeedForward::new(d_model, hidden, rng),
            ln2: LayerNorm::new(d_model),
        })
    }

    pub fn forward(&self, x: &Tensor2) -> (Tensor2, EncoderBlockCache) {
        let (a, attn) = self.attn.forward(x);
        let (h, ln1) = self.ln1.forward(&x.add(&a));
        let (f, ffn) = self.ffn.forward(&h);
        let (y, ln2) = self.ln2.forward(&h.add(&f));
        (
            y,
            EncoderBlockCache {
                attn,
                ln1,
                ffn,
                ln2,
            },
        )
    }

    pub fn backward(
        &self,
        cache: &EncoderBlockCache,
        dy: &Tensor2,
        grad: &mut EncoderBlock,
    ) -> Tensor2 {
        let dsum2 = self.ln2.backward(&cache.ln2, dy, &mut grad.ln2);
        let mut dh = self.ffn.backward(&cache.ffn, &dsum2, &mut grad.ffn);
        dh.add_assign(&dsum2);
        let dsum1 = self.ln1.backward(&cache.ln1, &dh, &mut grad.ln1);
        let mut dx = self.attn.backward(&cache.attn, &dsum1, &mut grad.attn);
        dx.add_assign(&dsum1);
        dx
    }
}

impl Parameters for EncoderBlock {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut t = self.attn.tensors();
        t.extend(self.ln1.tensors());
        t.extend(self.ffn.tensors());
        t.extend(self.ln2.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut t = self.attn.tensors_mut();
        t.extend(self.ln1.tensors_mut());
        t.extend(self.ffn.tensors_mut());
        t.extend(self.ln2.tensors_mut());
        t
    }
}
