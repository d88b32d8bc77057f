//! The two deep Q-learning agents.
//!
//! Both agents score every feature token independently with shared weights;
//! a "sequence" is just the per-feature decisions side by side. The
//! generation agent picks an operator from the head matching the feature's
//! kind, the discrimination agent sees the token joined with a learned
//! embedding of that operator and picks delete, replace or add.

mod dqn;
mod network;
mod replay;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

pub use dqn::{argmax, dqn_update, epsilon_greedy, td_targets, QModel, TargetSync, VectorQNet};
pub use network::{QueryCache, TokenAgent, TokenQNet, TokenState, OP_EMBEDDING_WIDTH, Q_HIDDEN};
pub use replay::{ReplayBuffer, Transition, DEFAULT_BATCH, DEFAULT_CAPACITY};

use crate::embedding::{EncoderInput, EncodingConfig};
use crate::error::{Error, Result};
use crate::nnkernel::AdamConfig;
use crate::tabular::{ColumnKind, Dataset};
use crate::transforms::{select_partner, OperatorId, CONTINUOUS_OPS, DISCRETE_OPS};

/// Output head used for continuous features.
pub const CONTINUOUS_HEAD: usize = 0;
/// Output head used for discrete features.
pub const DISCRETE_HEAD: usize = 1;

/// Operators selectable on generation head `head`.
pub fn head_ops(head: usize) -> &'static [OperatorId] {
    if head == DISCRETE_HEAD {
        &DISCRETE_OPS
    } else {
        &CONTINUOUS_OPS
    }
}

/// Generation head for a feature kind.
pub fn head_for(kind: ColumnKind) -> usize {
    if kind == ColumnKind::Discrete {
        DISCRETE_HEAD
    } else {
        CONTINUOUS_HEAD
    }
}

/// One entry of the operator sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenAction {
    pub op: OperatorId,
    pub partner: Option<usize>,
    /// Operator the policy picked before any degradation for a missing
    /// partner; this is what the transition records.
    pub chosen: OperatorId,
}

impl GenAction {
    /// Index of the chosen operator within its head.
    pub fn action_index(&self) -> usize {
        let ops = head_ops(head_for(if self.chosen.is_discrete() {
            ColumnKind::Discrete
        } else {
            ColumnKind::Continuous
        }));
        ops.iter().position(|&o| o == self.chosen).unwrap_or(0)
    }
}

pub type OperatorSequence = Vec<GenAction>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DiscAction {
    Delete,
    Replace,
    Add,
}

pub const DISC_ACTIONS: [DiscAction; 3] =
    [DiscAction::Delete, DiscAction::Replace, DiscAction::Add];

impl DiscAction {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DiscAction::Delete => "delete",
            DiscAction::Replace => "replace",
            DiscAction::Add => "add",
        }
    }
}

impl fmt::Display for DiscAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DISC_ACTIONS
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown discriminator action {s:?}")))
    }
}

pub type DiscriminatorSequence = Vec<DiscAction>;

/// Exponential ε decay from `start` to `end`, reaching `end` after
/// `decay_fraction` of the epochs and holding it afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 0.9,
            end: 0.1,
            decay_fraction: 0.8,
        }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        EpsilonSchedule {
            start: eps,
            end: eps,
            decay_fraction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        let decays = self.start > self.end;
        if !ok(self.start)
            || !ok(self.end)
            || self.end > self.start
            || (decays && self.end <= 0.0)
            || self.decay_fraction.is_nan()
            || self.decay_fraction <= 0.0
        {
            return Err(Error::Config(format!("invalid epsilon schedule {self:?}")));
        }
        Ok(())
    }

    pub fn value(&self, epoch: usize, epochs: usize) -> f64 {
        if self.start <= self.end {
            return self.start;
        }
        let horizon = (self.decay_fraction * epochs.max(1) as f64).max(1.0);
        let t = (epoch as f64 / horizon).min(1.0);
        (self.start * (self.end / self.start).powf(t)).max(self.end)
    }
}

/// Builds the per-feature states of one table for the generation agent.
pub fn generation_states(d: &Dataset, input: &Arc<EncoderInput>) -> Vec<TokenState> {
    d.features()
        .iter()
        .enumerate()
        .map(|(row, col)| TokenState {
            input: input.clone(),
            row,
            head: head_for(col.kind),
            op: None,
        })
        .collect()
}

/// Builds the per-feature states of one table for the discrimination agent.
pub fn discrimination_states(input: &Arc<EncoderInput>, t1: &[GenAction]) -> Vec<TokenState> {
    t1.iter()
        .enumerate()
        .map(|(row, a)| TokenState {
            input: input.clone(),
            row,
            head: 0,
            op: Some(a.op),
        })
        .collect()
}

fn batch_q(agent: &TokenAgent, states: &[TokenState]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    let keys: Vec<_> = states.iter().map(|s| (s.row, s.head, s.op)).collect();
    agent.q_batch(&first.input, &keys)
}

/// The operator-proposing agent: heads of 11 continuous and 2 discrete
/// operators over each feature token.
#[derive(Clone, Debug)]
pub struct GenerationAgent {
    pub q: TokenAgent,
}

impl GenerationAgent {
    pub fn new<R: Rng>(
        encoding: EncodingConfig,
        adam: AdamConfig,
        target_sync: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let net = TokenQNet::new(
            encoding,
            &[CONTINUOUS_OPS.len(), DISCRETE_OPS.len()],
            false,
            rng,
        )?;
        Ok(GenerationAgent {
            q: TokenAgent::new(net, adam, target_sync),
        })
    }

    /// Q-values per feature over that feature's head.
    pub fn q_values(&self, d: &Dataset, input: &Arc<EncoderInput>) -> Result<Vec<Vec<f64>>> {
        batch_q(&self.q, &generation_states(d, input))
    }

    /// ε-greedy operator per feature. Binary and cross operators receive a
    /// partner; when none exists the action degrades to the kind's identity.
    pub fn act<R: Rng>(
        &self,
        d: &Dataset,
        input: &Arc<EncoderInput>,
        eps: f64,
        max_leaves: usize,
        rng: &mut R,
    ) -> Result<OperatorSequence> {
        let q = self.q_values(d, input)?;
        q.iter()
            .enumerate()
            .map(|(i, qi)| {
                let ops = head_ops(head_for(d.feature(i).kind));
                let chosen = ops[epsilon_greedy(qi, eps, rng)];
                resolve_partner(d, i, chosen, max_leaves)
            })
            .collect()
    }
}

/// Attaches a partner to `chosen` or degrades it when none is available.
pub fn resolve_partner(
    d: &Dataset,
    focal: usize,
    chosen: OperatorId,
    max_leaves: usize,
) -> Result<GenAction> {
    if !chosen.needs_partner() {
        return Ok(GenAction {
            op: chosen,
            partner: None,
            chosen,
        });
    }
    let needed = if chosen.is_discrete() {
        ColumnKind::Discrete
    } else {
        ColumnKind::Continuous
    };
    match select_partner(d, focal, needed, max_leaves) {
        Ok(p) => Ok(GenAction {
            op: chosen,
            partner: Some(p),
            chosen,
        }),
        Err(Error::NoPartner { .. }) => Ok(GenAction {
            op: chosen.identity_for(),
            partner: None,
            chosen,
        }),
        Err(e) => Err(e),
    }
}

/// The keep-or-drop agent: token joined with an operator embedding, three
/// actions.
#[derive(Clone, Debug)]
pub struct DiscriminationAgent {
    pub q: TokenAgent,
}

impl DiscriminationAgent {
    pub fn new<R: Rng>(
        encoding: EncodingConfig,
        adam: AdamConfig,
        target_sync: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let net = TokenQNet::new(encoding, &[DISC_ACTIONS.len()], true, rng)?;
        Ok(DiscriminationAgent {
            q: TokenAgent::new(net, adam, target_sync),
        })
    }

    pub fn q_values(&self, input: &Arc<EncoderInput>, t1: &[GenAction]) -> Result<Vec<Vec<f64>>> {
        batch_q(&self.q, &discrimination_states(input, t1))
    }

    pub fn act<R: Rng>(
        &self,
        input: &Arc<EncoderInput>,
        t1: &[GenAction],
        eps: f64,
        rng: &mut R,
    ) -> Result<DiscriminatorSequence> {
        if t1.len() + 1 != input.tokens() {
            return Err(Error::LengthMismatch {
                left: t1.len(),
                right: input.tokens() - 1,
            });
        }
        Ok(self
            .q_values(input, t1)?
            .iter()
            .map(|q| DISC_ACTIONS[epsilon_greedy(q, eps, rng)])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, Task};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mixed(n_cont: usize, n_disc: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 30;
        let mut cols = Vec::new();
        for j in 0..n_cont {
            cols.push(Column::original(
                format!("c{j}"),
                ColumnKind::Continuous,
                (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect(),
            ));
        }
        for j in 0..n_disc {
            cols.push(Column::original(
                format!("d{j}"),
                ColumnKind::Discrete,
                (0..n).map(|_| rng.random_range(0..3) as f64).collect(),
            ));
        }
        let y = Column::original(
            "y",
            ColumnKind::Discrete,
            (0..n).map(|i| (i % 2) as f64).collect(),
        );
        Dataset::new(cols, y, Task::Classification).unwrap()
    }

    fn agents(seed: u64) -> (GenerationAgent, DiscriminationAgent) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = EncodingConfig::default();
        (
            GenerationAgent::new(cfg, AdamConfig::default(), None, &mut rng).unwrap(),
            DiscriminationAgent::new(cfg, AdamConfig::default(), None, &mut rng).unwrap(),
        )
    }

    #[test]
    fn epsilon_schedule_shape() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.value(0, 200), 0.9);
        assert!((s.value(160, 200) - 0.1).abs() < 1e-12);
        assert_eq!(s.value(199, 200), 0.1);
        assert!((s.value(80, 200) - 0.3).abs() < 1e-12);
        assert_eq!(EpsilonSchedule::constant(0.0).value(5, 10), 0.0);
        assert!(EpsilonSchedule {
            start: 0.1,
            end: 0.9,
            decay_fraction: 0.8
        }
        .validate()
        .is_err());
    }

    #[test]
    fn greedy_matches_separate_forward() {
        let d = mixed(3, 2, 1);
        let input = Arc::new(EncoderInput::from_dataset(&d));
        let (g, disc) = agents(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t1 = g.act(&d, &input, 0.0, 8, &mut rng).unwrap();
        let q = g.q_values(&d, &input).unwrap();
        for (a, qi) in t1.iter().zip(&q) {
            assert_eq!(a.action_index(), argmax(qi));
        }
        let t2 = disc.act(&input, &t1, 0.0, &mut rng).unwrap();
        let qd = disc.q_values(&input, &t1).unwrap();
        for (a, qi) in t2.iter().zip(&qd) {
            assert_eq!(a.index(), argmax(qi));
        }
        let mut other = ChaCha8Rng::seed_from_u64(99);
        assert_eq!(g.act(&d, &input, 0.0, 8, &mut other).unwrap(), t1);
    }

    #[test]
    fn full_exploration_covers_each_head() {
        let d = mixed(1, 1, 3);
        let input = Arc::new(EncoderInput::from_dataset(&d));
        let (g, disc) = agents(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cont = [0usize; 11];
        let mut disc_ops = [0usize; 2];
        let mut q = [0usize; 3];
        for _ in 0..1100 {
            let t1 = g.act(&d, &input, 1.0, 8, &mut rng).unwrap();
            cont[CONTINUOUS_OPS
                .iter()
                .position(|&o| o == t1[0].chosen)
                .unwrap()] += 1;
            disc_ops[DISCRETE_OPS
                .iter()
                .position(|&o| o == t1[1].chosen)
                .unwrap()] += 1;
            for a in disc.act(&input, &t1, 1.0, &mut rng).unwrap() {
                q[a.index()] += 1;
            }
        }
        assert!(
            cont.iter().all(|&c| (c as i64 - 100).abs() < 40),
            "{cont:?}"
        );
        assert!(
            disc_ops.iter().all(|&c| (c as i64 - 550).abs() < 80),
            "{disc_ops:?}"
        );
        assert!(q.iter().all(|&c| (c as i64 - 733).abs() < 100), "{q:?}");
    }

    #[test]
    fn missing_partner_degrades() {
        // A lone continuous feature has no arithmetic partner; a lone
        // discrete feature can still cross with a binned continuous one.
        let d = mixed(1, 1, 6);
        let a = resolve_partner(&d, 0, OperatorId::Mul, 8).unwrap();
        assert_eq!(
            (a.op, a.partner, a.chosen),
            (OperatorId::None, None, OperatorId::Mul)
        );
        let c = resolve_partner(&d, 1, OperatorId::Cross, 8).unwrap();
        assert_eq!((c.op, c.partner), (OperatorId::Cross, Some(0)));
        let only = mixed(0, 1, 6);
        let c = resolve_partner(&only, 0, OperatorId::Cross, 8).unwrap();
        assert_eq!((c.op, c.partner), (OperatorId::AddD, None));
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = mixed(3, 1, 7);
        let input = Arc::new(EncoderInput::from_dataset(&d));
        let run = || {
            let (mut g, _) = agents(8);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let t1 = g.act(&d, &input, 0.5, 8, &mut rng).unwrap();
            let mut buf = ReplayBuffer::new(DEFAULT_CAPACITY);
            for (s, a) in generation_states(&d, &input).into_iter().zip(&t1) {
                buf.push(Transition {
                    state: s,
                    action: a.action_index(),
                    reward: 0.1,
                    next: None,
                });
            }
            let batch = buf.sample(DEFAULT_BATCH, &mut rng).unwrap();
            let loss = dqn_update(&mut g.q, &batch, 0.99).unwrap();
            (t1, loss, g.q.net)
        };
        let (a, b) = (run(), run());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        assert_eq!(a.2, b.2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn actions_match_feature_kind(n_cont in 0usize..4, n_disc in 0usize..3, seed in 0u64..1000, eps in 0.0f64..=1.0) {
            prop_assume!(n_cont + n_disc > 0);
            let d = mixed(n_cont, n_disc, seed);
            let input = Arc::new(EncoderInput::from_dataset(&d));
            let (g, _) = agents(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t1 = g.act(&d, &input, eps, 8, &mut rng).unwrap();
            prop_assert_eq!(t1.len(), d.n_features());
            for (i, a) in t1.iter().enumerate() {
                let discrete = d.feature(i).is_discrete();
                prop_assert_eq!(a.op.is_discrete(), discrete);
                prop_assert_eq!(a.chosen.is_discrete(), discrete);
                prop_assert_eq!(a.partner.is_some(), a.op.needs_partner());
                prop_assert!(a.partner != Some(i));
            }
        }
    }
}
