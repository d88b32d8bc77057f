use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use super::dqn::{QModel, TargetSync};
use crate::embedding::{Encoder, EncoderCache, EncoderInput, EncodingConfig};
use crate::error::{Error, Result};
use crate::nnkernel::{AdamConfig, AdamState, Mlp, MlpCache, Parameters, Tensor2};
use crate::transforms::{OperatorId, ALL_OPS};

/// Width of the learned operator embedding fed to the discrimination agent.
pub const OP_EMBEDDING_WIDTH: usize = 8;
/// Hidden width of the Q-network.
pub const Q_HIDDEN: usize = 128;

/// Encoder, optional operator table and a multi-head Q-network. Every
/// feature token is scored independently with shared weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenQNet {
    pub encoder: Encoder,
    /// One row per operator in [`ALL_OPS`] order.
    pub op_table: Option<Tensor2>,
    pub mlp: Mlp,
}

/// A single decision point: feature `row` of the table described by `input`,
/// scored on output head `head`, optionally conditioned on an operator.
#[derive(Clone, Debug)]
pub struct TokenState {
    pub input: Arc<EncoderInput>,
    pub row: usize,
    pub head: usize,
    pub op: Option<OperatorId>,
}

#[derive(Clone, Debug)]
pub struct QueryCache {
    encoder: EncoderCache,
    mlp: MlpCache,
}

impl TokenQNet {
    pub fn new<R: Rng>(
        encoding: EncodingConfig,
        heads: &[usize],
        op_embedding: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let encoder = Encoder::new(encoding, rng)?;
        let op_table =
            op_embedding.then(|| Tensor2::xavier(ALL_OPS.len(), OP_EMBEDDING_WIDTH, rng));
        let width = encoding.d_model + if op_embedding { OP_EMBEDDING_WIDTH } else { 0 };
        let mlp = Mlp::new(width, Q_HIDDEN, heads, rng);
        Ok(TokenQNet {
            encoder,
            op_table,
            mlp,
        })
    }

    pub fn head_sizes(&self) -> Vec<usize> {
        self.mlp.heads.iter().map(|h| h.output_width()).collect()
    }

    fn query_rows(
        &self,
        tokens: &Tensor2,
        queries: &[(usize, Option<OperatorId>)],
    ) -> Result<Tensor2> {
        let rows = queries
            .iter()
            .map(|&(row, op)| {
                if row >= tokens.rows {
                    return Err(Error::Shape(format!("token {row} of {}", tokens.rows)));
                }
                let mut x = tokens.row(row).to_vec();
                match (&self.op_table, op) {
                    (Some(table), Some(op)) => x.extend_from_slice(table.row(op.index())),
                    (None, None) => {}
                    _ => {
                        return Err(Error::Shape(
                            "operator conditioning does not match the network".into(),
                        ))
                    }
                }
                Ok(x)
            })
            .collect::<Result<Vec<_>>>()?;
        Tensor2::from_rows(&rows)
    }

    /// Head outputs for each query (one row per query) over one shared table.
    pub fn forward(
        &self,
        input: &EncoderInput,
        queries: &[(usize, Option<OperatorId>)],
    ) -> Result<(Vec<Tensor2>, QueryCache)> {
        let (emb, encoder) = self.encoder.forward(input);
        let x = self.query_rows(&emb.tokens, queries)?;
        let (outs, mlp) = self.mlp.forward(&x)?;
        Ok((outs, QueryCache { encoder, mlp }))
    }

    /// Accumulates parameter gradients given upstream gradients of the head
    /// outputs produced by [`TokenQNet::forward`].
    pub fn backward(
        &self,
        cache: &QueryCache,
        queries: &[(usize, Option<OperatorId>)],
        d_heads: &[Tensor2],
        n_tokens: usize,
        grad: &mut TokenQNet,
    ) -> Result<()> {
        let dx = self.mlp.backward(&cache.mlp, d_heads, &mut grad.mlp)?;
        let d_model = self.encoder.config.d_model;
        let mut dtokens = Tensor2::zeros(n_tokens, d_model);
        for (q, &(row, op)) in queries.iter().enumerate() {
            let g = dx.row(q);
            for (t, v) in dtokens.row_mut(row).iter_mut().zip(&g[..d_model]) {
                *t += v;
            }
            if let (Some(table), Some(op)) = (grad.op_table.as_mut(), op) {
                for (t, v) in table.row_mut(op.index()).iter_mut().zip(&g[d_model..]) {
                    *t += v;
                }
            }
        }
        self.encoder
            .backward(&cache.encoder, &dtokens, &mut grad.encoder);
        Ok(())
    }
}

impl Parameters for TokenQNet {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut t = self.encoder.tensors();
        t.extend(self.op_table.iter());
        t.extend(self.mlp.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.op_table.iter_mut());
        t.extend(self.mlp.tensors_mut());
        t
    }
}

/// [`TokenQNet`] plus its optimizer and optional lagged bootstrap copy.
#[derive(Clone, Debug)]
pub struct TokenAgent {
    pub net: TokenQNet,
    pub adam: AdamState,
    pub target: Option<TargetSync<TokenQNet>>,
    pub updates: usize,
}

impl TokenAgent {
    pub fn new(net: TokenQNet, adam: AdamConfig, target_sync: Option<usize>) -> Self {
        TokenAgent {
            adam: AdamState::new(&net, adam),
            target: target_sync.map(|every| TargetSync {
                net: net.clone(),
                every: every.max(1),
            }),
            net,
            updates: 0,
        }
    }

    /// Q-values for several states sharing one encoder input, in order.
    pub fn q_batch(
        &self,
        input: &EncoderInput,
        states: &[(usize, usize, Option<OperatorId>)],
    ) -> Result<Vec<Vec<f64>>> {
        q_rows(&self.net, input, states)
    }
}

fn q_rows(
    net: &TokenQNet,
    input: &EncoderInput,
    states: &[(usize, usize, Option<OperatorId>)],
) -> Result<Vec<Vec<f64>>> {
    if states.is_empty() {
        return Ok(Vec::new());
    }
    let queries: Vec<_> = states.iter().map(|&(row, _, op)| (row, op)).collect();
    let (outs, _) = net.forward(input, &queries)?;
    states
        .iter()
        .enumerate()
        .map(|(i, &(_, head, _))| {
            outs.get(head)
                .map(|o| o.row(i).to_vec())
                .ok_or_else(|| Error::Shape(format!("no output head {head}")))
        })
        .collect()
}

fn single(net: &TokenQNet, s: &TokenState) -> Result<Vec<f64>> {
    Ok(q_rows(net, &s.input, &[(s.row, s.head, s.op)])?.remove(0))
}

impl QModel for TokenAgent {
    type State = TokenState;

    fn q_values(&self, s: &TokenState) -> Result<Vec<f64>> {
        single(&self.net, s)
    }

    fn bootstrap_value(&self, s: &TokenState) -> Result<f64> {
        let net = self.target.as_ref().map_or(&self.net, |t| &t.net);
        Ok(single(net, s)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    fn fit(&mut self, items: &[(&TokenState, usize, f64)]) -> Result<f64> {
        if items.is_empty() {
            return Err(Error::Empty("fit needs at least one item".into()));
        }
        // Items over the same table share one encoder pass.
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut by_input: HashMap<*const EncoderInput, usize> = HashMap::new();
        for (i, (s, _, _)) in items.iter().enumerate() {
            let g = *by_input.entry(Arc::as_ptr(&s.input)).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        let b = items.len() as f64;
        let sizes = self.net.head_sizes();
        let mut grad = self.net.zeroed();
        let mut loss = 0.0;
        for members in &groups {
            let input = &items[members[0]].0.input;
            let queries: Vec<_> = members
                .iter()
                .map(|&i| (items[i].0.row, items[i].0.op))
                .collect();
            let (outs, cache) = self.net.forward(input, &queries)?;
            let mut d_heads: Vec<Tensor2> = sizes
                .iter()
                .map(|&k| Tensor2::zeros(members.len(), k))
                .collect();
            for (q, &i) in members.iter().enumerate() {
                let (s, a, y) = items[i];
                let head = outs
                    .get(s.head)
                    .ok_or_else(|| Error::Shape(format!("no output head {}", s.head)))?;
                if a >= head.cols {
                    return Err(Error::Shape(format!(
                        "action {a} outside head of size {}",
                        head.cols
                    )));
                }
                let err = head.get(q, a) - y;
                loss += err * err / b;
                d_heads[s.head].set(q, a, 2.0 * err / b);
            }
            self.net
                .backward(&cache, &queries, &d_heads, input.tokens(), &mut grad)?;
        }
        self.adam.update(&mut self.net, &grad)?;
        self.updates += 1;
        if let Some(t) = &mut self.target {
            if self.updates.is_multiple_of(t.every) {
                t.net = self.net.clone();
            }
        }
        Ok(loss)
    }
}
