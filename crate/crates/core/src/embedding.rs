//! The state encoder: one token per feature (plus one for the target) built
//! from column descriptors, marked with a sinusoidal kind encoding, and mixed
//! by self-attention encoder blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnkernel::{EncoderBlock, EncoderBlockCache, Linear, Parameters, Tensor2};
use crate::tabular::{describe, ColumnKind, Dataset, DESCRIPTOR_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Amplitude of the kind encoding.
    pub gamma_enc: f64,
    pub d_model: usize,
    pub heads: usize,
    /// Hidden width of the feed-forward sublayer.
    pub hidden: usize,
    /// Number of encoder blocks; zero gives a projection-only encoder.
    pub depth: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            gamma_enc: 1.0,
            d_model: 8,
            heads: 8,
            hidden: 128,
            depth: 1,
        }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "d_model {} must be a positive multiple of heads {}",
                self.d_model, self.heads
            )));
        }
        if self.hidden == 0 {
            return Err(Error::Config(
                "encoder hidden width must be positive".into(),
            ));
        }
        if !self.gamma_enc.is_finite() {
            return Err(Error::Config("gamma_enc must be finite".into()));
        }
        Ok(())
    }
}

/// Kind marker: −1 discrete, 1 continuous, 0 target.
pub fn kind_position(kind: ColumnKind) -> f64 {
    match kind {
        ColumnKind::Discrete => -1.0,
        ColumnKind::Continuous => 1.0,
        ColumnKind::Target => 0.0,
    }
}

/// `γ_enc · sin(p_f / 10^(i / (d_model − 1)))`.
pub fn feature_encoding(p_f: f64, i: usize, cfg: &EncodingConfig) -> f64 {
    let exponent = if cfg.d_model > 1 {
        i as f64 / (cfg.d_model - 1) as f64
    } else {
        0.0
    };
    cfg.gamma_enc * (p_f / 10f64.powf(exponent)).sin()
}

/// What the encoder reads: standardized descriptors and kind markers, one
/// row per feature followed by the target row.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderInput {
    pub descriptors: Tensor2,
    pub positions: Vec<f64>,
}

fn squash(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

impl EncoderInput {
    /// Descriptors are compressed with `sign(x)·ln(1 + |x|)`, then z-scored
    /// per statistic across all rows (a statistic with zero spread becomes 0).
    pub fn from_dataset(d: &Dataset) -> Self {
        let mut rows: Vec<[f64; DESCRIPTOR_LEN]> = d
            .features()
            .iter()
            .map(|c| describe(&c.values, c.is_discrete()))
            .collect();
        rows.push(describe(&d.target().values, d.is_classification()));
        let mut positions: Vec<f64> = d.features().iter().map(|c| kind_position(c.kind)).collect();
        positions.push(kind_position(ColumnKind::Target));

        let n = rows.len() as f64;
        for row in rows.iter_mut() {
            row.iter_mut().for_each(|v| *v = squash(*v));
        }
        for s in 0..DESCRIPTOR_LEN {
            let mut col: Vec<f64> = rows.iter().map(|r| r[s]).collect();
            let mean = crate::nnkernel::order_free_sum(&mut col) / n;
            let mut dev: Vec<f64> = rows.iter().map(|r| (r[s] - mean).powi(2)).collect();
            let std = (crate::nnkernel::order_free_sum(&mut dev) / n).sqrt();
            for row in rows.iter_mut() {
                row[s] = if std > 1e-12 {
                    (row[s] - mean) / std
                } else {
                    0.0
                };
            }
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        EncoderInput {
            descriptors: Tensor2 {
                rows: rows.len(),
                cols: DESCRIPTOR_LEN,
                data,
            },
            positions,
        }
    }

    pub fn tokens(&self) -> usize {
        self.positions.len()
    }
}

/// Token matrix with one row per feature and the target row last.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEmbedding {
    pub tokens: Tensor2,
    pub d_model: usize,
}

impl StateEmbedding {
    pub fn token(&self, i: usize) -> &[f64] {
        self.tokens.row(i)
    }
}

/// Descriptor projection, kind encoding and `depth` encoder blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub config: EncodingConfig,
    pub proj: Linear,
    pub blocks: Vec<EncoderBlock>,
}

#[derive(Clone, Debug)]
pub struct EncoderCache {
    input: Tensor2,
    blocks: Vec<EncoderBlockCache>,
}

impl EncoderCache {
    /// Attention weights of each block, one matrix per head.
    pub fn attention_weights(&self) -> Vec<&[Tensor2]> {
        self.blocks
            .iter()
            .map(|b| b.attn.weights.as_slice())
            .collect()
    }
}

impl Encoder {
    pub fn new<R: Rng>(config: EncodingConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let proj = Linear::new(DESCRIPTOR_LEN, config.d_model, rng);
        let blocks = (0..config.depth)
            .map(|_| EncoderBlock::new(config.d_model, config.heads, config.hidden, rng))
            .collect::<Result<_>>()?;
        Ok(Encoder {
            config,
            proj,
            blocks,
        })
    }

    fn kind_encoding(&self, positions: &[f64]) -> Tensor2 {
        let d = self.config.d_model;
        let mut e = Tensor2::zeros(positions.len(), d);
        for (r, &p) in positions.iter().enumerate() {
            for i in 0..d {
                e.set(r, i, feature_encoding(p, i, &self.config));
            }
        }
        e
    }

    pub fn forward(&self, input: &EncoderInput) -> (StateEmbedding, EncoderCache) {
        let mut x = self.proj.forward(&input.descriptors);
        x.add_assign(&self.kind_encoding(&input.positions));
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (y, c) = b.forward(&x);
            x = y;
            caches.push(c);
        }
        (
            StateEmbedding {
                tokens: x,
                d_model: self.config.d_model,
            },
            EncoderCache {
                input: input.descriptors.clone(),
                blocks: caches,
            },
        )
    }

    /// Accumulates parameter gradients for upstream token gradients.
    pub fn backward(&self, cache: &EncoderCache, dtokens: &Tensor2, grad: &mut Encoder) {
        let mut g = dtokens.clone();
        for ((b, c), gb) in self
            .blocks
            .iter()
            .zip(&cache.blocks)
            .zip(grad.blocks.iter_mut())
            .rev()
        {
            g = b.backward(c, &g, gb);
        }
        self.proj.backward(&cache.input, &g, &mut grad.proj);
    }
}

impl Parameters for Encoder {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut t = self.proj.tensors();
        for b in &self.blocks {
            t.extend(b.tensors());
        }
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut t = self.proj.tensors_mut();
        for b in &mut self.blocks {
            t.extend(b.tensors_mut());
        }
        t
    }
}

/// Embeds `d` with `encoder`.
pub fn encode_dataset(d: &Dataset, encoder: &Encoder) -> StateEmbedding {
    encoder.forward(&EncoderInput::from_dataset(d)).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkernel::gradcheck::{check_parameters, probe_loss, DEFAULT_STEP};
    use crate::tabular::{Column, Task};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(cols: Vec<(&str, ColumnKind, Vec<f64>)>) -> Dataset {
        let n = cols[0].2.len();
        let features = cols
            .into_iter()
            .map(|(n, k, v)| Column::original(n, k, v))
            .collect();
        let y = Column::original(
            "y",
            ColumnKind::Target,
            (0..n).map(|i| (i % 2) as f64).collect(),
        );
        Dataset::new(features, y, Task::Classification).unwrap()
    }

    fn encoder(seed: u64) -> Encoder {
        Encoder::new(
            EncodingConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    #[test]
    fn kind_encoding_values() {
        let cfg = EncodingConfig::default();
        for i in 0..8 {
            assert_eq!(feature_encoding(0.0, i, &cfg), 0.0);
            assert_eq!(
                feature_encoding(-1.0, i, &cfg),
                -feature_encoding(1.0, i, &cfg)
            );
        }
        assert!((feature_encoding(1.0, 0, &cfg) - 0.841471).abs() < 1e-6);
        let loud = EncodingConfig {
            gamma_enc: 2.5,
            ..cfg
        };
        assert!((feature_encoding(1.0, 0, &loud) - 2.5 * 1f64.sin()).abs() < 1e-12);
        assert!((feature_encoding(1.0, 7, &cfg) - 0.1f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn kind_changes_token() {
        let v = vec![0.0, 1.0, 1.0, 0.0, 2.0, 1.0];
        let d = dataset(vec![
            ("a", ColumnKind::Discrete, v.clone()),
            ("b", ColumnKind::Continuous, v),
        ]);
        let input = EncoderInput::from_dataset(&d);
        let mut as_cont = input.clone();
        as_cont.positions[0] = 1.0;
        let e = encoder(1);
        let (t1, _) = e.forward(&input);
        let (t2, _) = e.forward(&as_cont);
        assert_ne!(t1.token(0), t2.token(0));
    }

    #[test]
    fn shape_and_single_feature_block() {
        let d = dataset(vec![(
            "x",
            ColumnKind::Continuous,
            vec![1.0, 2.0, 3.0, 5.0],
        )]);
        let e = encoder(2);
        let (s, cache) = e.forward(&EncoderInput::from_dataset(&d));
        assert_eq!(s.tokens.shape(), (2, 8));
        assert!(s.tokens.is_finite());
        for head in cache.attention_weights()[0] {
            assert_eq!(head.shape(), (2, 2));
            for r in 0..2 {
                assert!((head.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(encode_dataset(&d, &e), s);
    }

    #[test]
    fn feature_permutation_permutes_tokens() {
        let cols = vec![
            (
                "a",
                ColumnKind::Continuous,
                vec![0.5, 1.5, -2.0, 3.0, 0.1, 9.0],
            ),
            (
                "b",
                ColumnKind::Discrete,
                vec![0.0, 1.0, 1.0, 2.0, 0.0, 1.0],
            ),
            (
                "c",
                ColumnKind::Continuous,
                vec![10.0, 11.0, 10.5, 12.0, 13.0, 10.0],
            ),
        ];
        let mut rev = cols.clone();
        rev.reverse();
        let e = encoder(3);
        let s = encode_dataset(&dataset(cols), &e);
        let r = encode_dataset(&dataset(rev), &e);
        assert_eq!(r.tokens, s.tokens.select_rows(&[2, 1, 0, 3]));
    }

    #[test]
    fn encoder_gradient_check() {
        let d = dataset(vec![
            (
                "a",
                ColumnKind::Continuous,
                vec![0.5, 1.5, -2.0, 3.0, 0.1, 9.0],
            ),
            (
                "b",
                ColumnKind::Discrete,
                vec![0.0, 1.0, 1.0, 2.0, 0.0, 1.0],
            ),
        ]);
        let input = EncoderInput::from_dataset(&d);
        let cfg = EncodingConfig {
            hidden: 16,
            ..EncodingConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = Encoder::new(cfg, &mut rng).unwrap();
        let c = Tensor2::xavier(3, 8, &mut rng);
        let (_, cache) = e.forward(&input);
        let mut grad = e.zeroed();
        e.backward(&cache, &c, &mut grad);
        let err = check_parameters(&e, &grad, DEFAULT_STEP, |m| {
            probe_loss(&m.forward(&input).0.tokens, &c)
        });
        assert!(err < 1e-4, "{err}");
    }
}
