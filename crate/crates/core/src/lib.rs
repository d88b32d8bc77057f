//! Automated feature generation for tabular data driven by two cooperating
//! deep Q-learning agents.
//!
//! A *generation* agent proposes one transformation per feature (unary and
//! binary arithmetic for continuous columns, crossing for discrete ones), a
//! *discrimination* agent decides whether each generated column is deleted,
//! replaces its parent, or is added alongside it, and a small self-attention
//! encoder turns the current table into the state both agents observe.
//! Cross-validated downstream scores and mutual-information terms provide
//! the rewards.
//!
//! Module map:
//!
//! - [`tabular`]: CSV loading, schemas, stratified folds, column descriptors
//! - [`transforms`]: operator algebra, tree binning, expression trees
//! - [`mutualinfo`]: plug-in entropy and mutual information
//! - [`nnkernel`]: dense layers, attention, backprop, Adam, checkpoints
//! - [`embedding`]: the state encoder
//! - [`agents`]: replay buffer, DQN update, the two agents
//! - [`rewards`]: generation and discrimination rewards
//! - [`evaluator`]: random forest, linear models, F1 / 1-RAE, CV, score cache
//! - [`search`]: the epoch/step loop, ablations, reports and exports
//! - [`synthetic`]: seeded tables with known structure

pub mod agents;
pub mod embedding;
pub mod error;
pub mod evaluator;
pub mod mutualinfo;
pub mod nnkernel;
pub mod rewards;
pub mod search;
pub mod synthetic;
pub mod tabular;
pub mod transforms;

mod seeds;

pub use error::{Error, Result};
pub use seeds::derive_seed;
