//! The search loop: each epoch starts from the original table and runs a
//! fixed number of steps. A step embeds the working set, lets the generation
//! agent propose operators and the discrimination agent decide their fate,
//! scores the result by cross-validation, hands out rewards and trains both
//! agents from replay. The best-scoring set seen anywhere is returned.

mod apply;
mod report;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

pub use apply::{
    apply_actions, apply_generated, generate_all, is_degenerate, target_relevance,
    top_k_by_relevance, Applied,
};
pub use report::{
    convergence_csv, dataset_csv, expressions_csv, order_counts, order_report, order_report_csv,
    rewards_csv, trace_csv, OrderReport,
};

use crate::agents::{
    dqn_update, head_for, DiscAction, DiscriminationAgent, EpsilonSchedule, GenAction,
    GenerationAgent, ReplayBuffer, TokenState, Transition, DEFAULT_BATCH, DEFAULT_CAPACITY,
};
use crate::embedding::{EncoderInput, EncodingConfig};
use crate::error::{Error, Result};
use crate::evaluator::{LearnerConfig, Metric, ScoreCache};
use crate::mutualinfo::Series;
use crate::nnkernel::AdamConfig;
use crate::rewards::{discrimination_reward, generation_reward, RewardMode, RewardWeights};
use crate::seeds::{rng_for, streams};
use crate::tabular::{split_folds, Column, ColumnKind, Dataset, FoldPlan};
use crate::transforms::{evaluate_expression, target_series, DEFAULT_MAX_LEAVES};

/// Component removed in an ablation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Ablation {
    /// Discriminator replaced by keeping the most target-informative
    /// features (as many as the original table had).
    NoDiscriminator,
    /// Encoder without attention blocks.
    NoAttention,
    /// Discrete features treated as continuous codes; no crossing.
    NoDiscrete,
}

impl Ablation {
    pub fn label(self) -> &'static str {
        match self {
            Ablation::NoDiscriminator => "DARL-k",
            Ablation::NoAttention => "DARL-t",
            Ablation::NoDiscrete => "DARL-c",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k" | "darl-k" => Ok(Ablation::NoDiscriminator),
            "t" | "darl-t" => Ok(Ablation::NoAttention),
            "c" | "darl-c" => Ok(Ablation::NoDiscrete),
            _ => Err(Error::Config(format!(
                "unknown ablation {s:?}; expected k, t or c"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    pub epochs: usize,
    pub steps: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub reward_mode: RewardMode,
    pub encoding: EncodingConfig,
    pub learner: LearnerConfig,
    /// `None` picks the task's default.
    pub metric: Option<Metric>,
    pub folds: usize,
    pub gamma_disc: f64,
    pub epsilon: EpsilonSchedule,
    /// Maximum feature count; `None` means four times the original count.
    pub cap: Option<usize>,
    pub ablation: Option<Ablation>,
    /// Carry the working set across epochs instead of resetting it.
    pub chain_epochs: bool,
    pub adam: AdamConfig,
    pub replay_capacity: usize,
    pub batch: usize,
    /// Refresh a lagged bootstrap network every this many updates.
    pub target_sync: Option<usize>,
    pub max_leaves: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epochs: 200,
            steps: 6,
            seed: 0,
            weights: RewardWeights::default(),
            reward_mode: RewardMode::default(),
            encoding: EncodingConfig::default(),
            learner: LearnerConfig::default(),
            metric: None,
            folds: 5,
            gamma_disc: 0.99,
            epsilon: EpsilonSchedule::default(),
            cap: None,
            ablation: None,
            chain_epochs: false,
            adam: AdamConfig::default(),
            replay_capacity: DEFAULT_CAPACITY,
            batch: DEFAULT_BATCH,
            target_sync: None,
            max_leaves: DEFAULT_MAX_LEAVES,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, d: &Dataset) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("need at least 2 folds".into()));
        }
        if self.replay_capacity == 0 || self.batch == 0 {
            return Err(Error::Config(
                "replay capacity and batch must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma_disc) {
            return Err(Error::Config(format!(
                "discount {} outside [0, 1]",
                self.gamma_disc
            )));
        }
        if self.max_leaves < 2 {
            return Err(Error::Config("max_leaves must be at least 2".into()));
        }
        if let Some(cap) = self.cap {
            if cap < d.n_features() {
                return Err(Error::Config(format!(
                    "feature cap {cap} is below the original feature count {}",
                    d.n_features()
                )));
            }
        }
        self.weights.validate()?;
        self.encoding.validate()?;
        self.learner.validate()?;
        self.epsilon.validate()?;
        if let Some(m) = self.metric {
            m.check_task(d.task())?;
        }
        Ok(())
    }

    pub fn resolved_cap(&self, d: &Dataset) -> usize {
        self.cap.unwrap_or(4 * d.n_features()).max(d.n_features())
    }

    pub fn resolved_metric(&self, d: &Dataset) -> Metric {
        self.metric.unwrap_or_else(|| Metric::default_for(d.task()))
    }
}

/// One row of the run trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub score: f64,
    pub r1: f64,
    pub mean_r2: f64,
    pub epsilon: f64,
    /// Features before the step.
    pub input_features: usize,
    /// Features after the step.
    pub feature_count: usize,
    pub best_score: f64,
    pub flagged: bool,
    pub error: String,
}

/// Reward terms of one feature at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RewardRecord {
    pub epoch: usize,
    pub step: usize,
    pub feature: String,
    pub op: String,
    pub action: String,
    pub r_del: f64,
    pub r_rep: f64,
    pub r_add: f64,
    pub r_imp: f64,
    pub r2: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub base_score: f64,
    pub best_score: f64,
    pub metric: Metric,
    /// Best feature set with the target.
    pub best: Dataset,
    pub trace: Vec<StepRecord>,
    pub rewards: Vec<RewardRecord>,
    /// Best score so far after each epoch.
    pub convergence: Vec<f64>,
    pub generation: GenerationAgent,
    pub discrimination: Option<DiscriminationAgent>,
    pub generation_transitions: usize,
    pub discrimination_transitions: usize,
    pub evaluations: usize,
}

impl SearchResult {
    pub fn order_report(&self) -> OrderReport {
        order_report(self)
    }
}

fn series(c: &Column) -> Series<'_> {
    Series {
        values: &c.values,
        discrete: c.is_discrete(),
    }
}

/// Treats every discrete feature as a continuous code.
pub fn without_discrete(d: &Dataset) -> Result<Dataset> {
    let cols = d
        .features()
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if c.kind == ColumnKind::Discrete {
                c.kind = ColumnKind::Continuous;
            }
            c
        })
        .collect();
    d.with_features(cols)
}

/// Checks that every feature re-evaluates from `original` to its stored
/// values.
pub fn verify_expressions(best: &Dataset, original: &Dataset) -> Result<()> {
    for col in best.features() {
        let (values, _) = evaluate_expression(&col.expr, original)?;
        if values
            .iter()
            .zip(&col.values)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::Expression {
                pos: 0,
                message: format!("{} does not reproduce its stored values", col.expr),
            });
        }
    }
    Ok(())
}

struct Discriminated {
    state: TokenState,
    action: usize,
    reward: f64,
    successor: Option<usize>,
}

struct Run<'a> {
    cfg: &'a SearchConfig,
    original: Dataset,
    original_input: Arc<EncoderInput>,
    folds: FoldPlan,
    metric: Metric,
    cap: usize,
    cache: ScoreCache,
    generation: GenerationAgent,
    discrimination: Option<DiscriminationAgent>,
    gen_buffer: ReplayBuffer<Transition<TokenState>>,
    disc_buffer: ReplayBuffer<Transition<TokenState>>,
    pending: Vec<Discriminated>,
    gen_pushed: usize,
    disc_pushed: usize,
}

struct StepOutcome {
    working: Dataset,
    input: Arc<EncoderInput>,
    score: f64,
    r1: f64,
    mean_r2: f64,
    flagged: bool,
}

impl Run<'_> {
    fn score(&self, d: &Dataset) -> Result<f64> {
        Ok(self
            .cache
            .evaluate(d, &self.cfg.learner, &self.folds, self.metric)?
            .value)
    }

    /// Finishes discriminator transitions from the previous step now that
    /// the next operator sequence is known.
    fn flush_pending(&mut self, next: Option<(&Arc<EncoderInput>, &[GenAction])>) {
        for p in std::mem::take(&mut self.pending) {
            let next_state = match (next, p.successor) {
                (Some((input, t1)), Some(row)) => Some(TokenState {
                    input: input.clone(),
                    row,
                    head: 0,
                    op: Some(t1[row].op),
                }),
                _ => None,
            };
            self.disc_buffer.push(Transition {
                state: p.state,
                action: p.action,
                reward: p.reward,
                next: next_state,
            });
            self.disc_pushed += 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step<R: Rng>(
        &mut self,
        epoch: usize,
        step: usize,
        working: &Dataset,
        input: &Arc<EncoderInput>,
        score_ori: f64,
        eps: f64,
        rng: &mut R,
        rewards: &mut Vec<RewardRecord>,
    ) -> Result<StepOutcome> {
        let cfg = self.cfg;
        let last = step + 1 == cfg.steps;
        let t1: Vec<GenAction> = self
            .generation
            .act(working, input, eps, cfg.max_leaves, rng)?;
        self.flush_pending(Some((input, &t1)));
        let generated = generate_all(working, &t1, cfg.max_leaves)?;

        let (t2, applied) = match &self.discrimination {
            Some(disc) => {
                let t2 = disc.act(input, &t1, eps, rng)?;
                let applied = apply_generated(working, &generated, &t2, self.cap)?;
                (Some(t2), applied)
            }
            None => {
                let all_add = vec![DiscAction::Add; t1.len()];
                let grown = apply_generated(working, &generated, &all_add, usize::MAX)?;
                let (kept, remap) = top_k_by_relevance(&grown.dataset, self.original.n_features())?;
                let successor = grown
                    .successor
                    .iter()
                    .map(|s| s.and_then(|j| remap[j]))
                    .collect();
                (
                    None,
                    Applied {
                        dataset: kept,
                        successor,
                        flagged: grown.flagged,
                    },
                )
            }
        };

        let score_new = self.score(&applied.dataset)?;
        let r1 = generation_reward(score_new, score_ori);
        let next_input = Arc::new(EncoderInput::from_dataset(&applied.dataset));

        let y = target_series(working);
        let mut r2_sum = 0.0;
        for (i, a) in t1.iter().enumerate() {
            let f = working.feature(i);
            let g = generated[i].as_ref();
            let b = discrimination_reward(
                series(f),
                g.map(|c| series(c)),
                y,
                score_new,
                score_ori,
                &cfg.weights,
            )?;
            let action = t2.as_ref().map_or(DiscAction::Add, |t2| t2[i]);
            let r2 = b.for_action(action, cfg.reward_mode, &cfg.weights);
            r2_sum += r2;
            rewards.push(RewardRecord {
                epoch,
                step,
                feature: f.name.clone(),
                op: a.op.name().to_string(),
                action: if t2.is_some() {
                    action.name().to_string()
                } else {
                    "filter".to_string()
                },
                r_del: b.r_del,
                r_rep: b.r_rep,
                r_add: b.r_add,
                r_imp: b.r_imp,
                r2,
            });

            let successor = if last { None } else { applied.successor[i] };
            self.gen_buffer.push(Transition {
                state: TokenState {
                    input: input.clone(),
                    row: i,
                    head: head_for(f.kind),
                    op: None,
                },
                action: a.action_index(),
                reward: r1,
                next: successor.map(|row| TokenState {
                    input: next_input.clone(),
                    row,
                    head: head_for(applied.dataset.feature(row).kind),
                    op: None,
                }),
            });
            self.gen_pushed += 1;
            if let Some(t2) = &t2 {
                self.pending.push(Discriminated {
                    state: TokenState {
                        input: input.clone(),
                        row: i,
                        head: 0,
                        op: Some(a.op),
                    },
                    action: t2[i].index(),
                    reward: r2,
                    successor,
                });
            }
        }
        if last {
            self.flush_pending(None);
        }

        let batch = self.gen_buffer.sample(cfg.batch, rng)?;
        dqn_update(&mut self.generation.q, &batch, cfg.gamma_disc)?;
        if let Some(disc) = &mut self.discrimination {
            if !self.disc_buffer.is_empty() {
                let batch = self.disc_buffer.sample(cfg.batch, rng)?;
                dqn_update(&mut disc.q, &batch, cfg.gamma_disc)?;
            }
        }

        Ok(StepOutcome {
            working: applied.dataset,
            input: next_input,
            score: score_new,
            r1,
            mean_r2: if t1.is_empty() {
                0.0
            } else {
                r2_sum / t1.len() as f64
            },
            flagged: applied.flagged,
        })
    }
}

/// Runs the full search on `d`.
pub fn run_search(d: &Dataset, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate(d)?;
    if d.n_features() == 0 {
        return Err(Error::Empty("dataset has no features".into()));
    }
    let mut cfg = cfg.clone();
    let original = match cfg.ablation {
        Some(Ablation::NoDiscrete) => without_discrete(d)?,
        _ => d.clone(),
    };
    if cfg.ablation == Some(Ablation::NoAttention) {
        cfg.encoding.depth = 0;
    }
    let cfg = &cfg;
    let metric = cfg.resolved_metric(&original);
    metric.check_task(original.task())?;
    let folds = split_folds(&original, cfg.folds, cfg.seed)?;

    let mut init = rng_for(cfg.seed, streams::GEN_INIT, 0);
    let generation = GenerationAgent::new(cfg.encoding, cfg.adam, cfg.target_sync, &mut init)?;
    let discrimination = if cfg.ablation == Some(Ablation::NoDiscriminator) {
        None
    } else {
        let mut init = rng_for(cfg.seed, streams::DISC_INIT, 0);
        Some(DiscriminationAgent::new(
            cfg.encoding,
            cfg.adam,
            cfg.target_sync,
            &mut init,
        )?)
    };
    let mut rng = rng_for(cfg.seed, streams::ACTIONS, 0);

    let original_input = Arc::new(EncoderInput::from_dataset(&original));
    let mut run = Run {
        cfg,
        cap: cfg.resolved_cap(&original),
        cache: ScoreCache::new(),
        original_input,
        folds,
        metric,
        generation,
        discrimination,
        gen_buffer: ReplayBuffer::new(cfg.replay_capacity),
        disc_buffer: ReplayBuffer::new(cfg.replay_capacity),
        pending: Vec::new(),
        gen_pushed: 0,
        disc_pushed: 0,
        original,
    };

    let base_score = run.score(&run.original)?;
    let mut best_score = base_score;
    let mut best = run.original.clone();
    let mut trace = Vec::with_capacity(cfg.epochs * cfg.steps);
    let mut rewards = Vec::new();
    let mut convergence = Vec::with_capacity(cfg.epochs);

    let mut working = run.original.clone();
    let mut input = run.original_input.clone();
    let mut score = base_score;
    for epoch in 0..cfg.epochs {
        if epoch == 0 || !cfg.chain_epochs {
            working = run.original.clone();
            input = run.original_input.clone();
            score = base_score;
        }
        let eps = cfg.epsilon.value(epoch, cfg.epochs);
        for step in 0..cfg.steps {
            let record = match run.step(
                epoch,
                step,
                &working,
                &input,
                score,
                eps,
                &mut rng,
                &mut rewards,
            ) {
                Ok(out) => {
                    if out.score > best_score {
                        best_score = out.score;
                        best = out.working.clone();
                    }
                    let rec = StepRecord {
                        epoch,
                        step,
                        score: out.score,
                        r1: out.r1,
                        mean_r2: out.mean_r2,
                        epsilon: eps,
                        input_features: working.n_features(),
                        feature_count: out.working.n_features(),
                        best_score,
                        flagged: out.flagged,
                        error: String::new(),
                    };
                    working = out.working;
                    input = out.input;
                    score = out.score;
                    rec
                }
                Err(e) => {
                    run.flush_pending(None);
                    StepRecord {
                        epoch,
                        step,
                        score,
                        r1: 0.0,
                        mean_r2: 0.0,
                        epsilon: eps,
                        input_features: working.n_features(),
                        feature_count: working.n_features(),
                        best_score,
                        flagged: true,
                        error: e.to_string(),
                    }
                }
            };
            trace.push(record);
        }
        convergence.push(best_score);
    }

    Ok(SearchResult {
        base_score,
        best_score,
        metric,
        best,
        trace,
        rewards,
        convergence,
        evaluations: run.cache.len(),
        generation: run.generation,
        discrimination: run.discrimination,
        generation_transitions: run.gen_pushed,
        discrimination_transitions: run.disc_pushed,
    })
}

/// Runs the search with one component removed.
pub fn run_ablation(d: &Dataset, cfg: &SearchConfig, variant: Ablation) -> Result<SearchResult> {
    let cfg = SearchConfig {
        ablation: Some(variant),
        ..cfg.clone()
    };
    run_search(d, &cfg)
}
