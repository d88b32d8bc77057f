use rand::Rng;

use super::replay::Transition;
use crate::error::{Error, Result};
use crate::nnkernel::{AdamConfig, AdamState, Mlp, Parameters, Tensor2};

/// A trainable action-value function.
pub trait QModel {
    type State;

    /// Q-values of every legal action in `s`.
    fn q_values(&self, s: &Self::State) -> Result<Vec<f64>>;

    /// `max_a Q(s, a)` used for bootstrapping; may come from a lagged copy.
    fn bootstrap_value(&self, s: &Self::State) -> Result<f64> {
        let q = self.q_values(s)?;
        Ok(q.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// One optimizer step on `mean((Q(s, a) − target)²)` over `items`;
    /// returns that loss evaluated before the step.
    fn fit(&mut self, items: &[(&Self::State, usize, f64)]) -> Result<f64>;
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// With probability `eps` a uniform action, otherwise the greedy one. The
/// exploration draw is always taken so the random stream does not depend on
/// the Q-values.
pub fn epsilon_greedy<R: Rng>(q: &[f64], eps: f64, rng: &mut R) -> usize {
    let explore = rng.random::<f64>() < eps;
    if explore {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// TD regression targets `r` (terminal) or `r + γ·max_a' Q(s', a')`.
pub fn td_targets<M: QModel>(
    model: &M,
    batch: &[&Transition<M::State>],
    gamma: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| match &t.next {
            None => Ok(t.reward),
            Some(next) => Ok(t.reward + gamma * model.bootstrap_value(next)?),
        })
        .collect()
}

/// One temporal-difference update. Targets are computed first and held
/// fixed, so no gradient flows through the bootstrap term.
pub fn dqn_update<M: QModel>(
    model: &mut M,
    batch: &[&Transition<M::State>],
    gamma: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("dqn_update needs a non-empty batch".into()));
    }
    let targets = td_targets(model, batch, gamma)?;
    let items: Vec<(&M::State, usize, f64)> = batch
        .iter()
        .zip(targets)
        .map(|(t, y)| (&t.state, t.action, y))
        .collect();
    model.fit(&items)
}

/// Optional lagged copy of a network used for bootstrapping, refreshed every
/// `every` updates.
#[derive(Clone, Debug)]
pub struct TargetSync<N> {
    pub net: N,
    pub every: usize,
}

/// A Q-network over plain feature vectors: one hidden ReLU layer and a single
/// linear head.
#[derive(Clone, Debug)]
pub struct VectorQNet {
    pub mlp: Mlp,
    pub adam: AdamState,
    pub target: Option<TargetSync<Mlp>>,
    pub updates: usize,
}

impl VectorQNet {
    pub fn new<R: Rng>(
        inputs: usize,
        hidden: usize,
        actions: usize,
        adam: AdamConfig,
        rng: &mut R,
    ) -> Self {
        let mlp = Mlp::new(inputs, hidden, &[actions], rng);
        VectorQNet {
            adam: AdamState::new(&mlp, adam),
            mlp,
            target: None,
            updates: 0,
        }
    }

    pub fn with_target_sync(mut self, every: usize) -> Self {
        self.target = Some(TargetSync {
            net: self.mlp.clone(),
            every: every.max(1),
        });
        self
    }
}

impl QModel for VectorQNet {
    type State = Vec<f64>;

    fn q_values(&self, s: &Vec<f64>) -> Result<Vec<f64>> {
        let (out, _) = self.mlp.forward(&Tensor2::row_vector(s))?;
        Ok(out[0].data.clone())
    }

    fn bootstrap_value(&self, s: &Vec<f64>) -> Result<f64> {
        let net = self.target.as_ref().map_or(&self.mlp, |t| &t.net);
        let (out, _) = net.forward(&Tensor2::row_vector(s))?;
        Ok(out[0]
            .data
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    fn fit(&mut self, items: &[(&Vec<f64>, usize, f64)]) -> Result<f64> {
        let rows: Vec<Vec<f64>> = items.iter().map(|(s, _, _)| (*s).clone()).collect();
        let x = Tensor2::from_rows(&rows)?;
        let (out, cache) = self.mlp.forward(&x)?;
        let b = items.len() as f64;
        let mut d = Tensor2::zeros(out[0].rows, out[0].cols);
        let mut loss = 0.0;
        for (i, &(_, a, y)) in items.iter().enumerate() {
            let err = out[0].get(i, a) - y;
            loss += err * err / b;
            d.set(i, a, 2.0 * err / b);
        }
        let mut grad = self.mlp.zeroed();
        self.mlp.backward(&cache, &[d], &mut grad)?;
        self.adam.update(&mut self.mlp, &grad)?;
        self.updates += 1;
        if let Some(t) = &mut self.target {
            if self.updates.is_multiple_of(t.every) {
                t.net = self.mlp.clone();
            }
        }
        Ok(loss)
    }
}
