//! Rewards for the two agents.
//!
//! The generation agent receives the change in downstream score. The
//! discrimination agent combines four terms for each generated feature:
//! how much target information the new column loses relative to its parent
//! (`r_del`, favouring Delete), the opposite (`r_rep`, favouring Replace), its
//! redundancy with the parent (`r_add`, penalizing Add), and the score change
//! (`r_imp`).

use serde::{Deserialize, Serialize};

use crate::agents::DiscAction;
use crate::error::{Error, Result};
use crate::mutualinfo::{mutual_information, Series};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_w: f64,
    pub delta: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 0.1,
            beta: 0.1,
            gamma_w: 1.0,
            delta: 0.01,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma_w", self.gamma_w),
            ("delta", self.delta),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!(
                    "reward weight {name} must be positive, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// How the four discrimination terms are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardMode {
    /// Every term contributes regardless of the action taken.
    #[default]
    Unconditional,
    /// Only the term matching the action taken, plus `r_imp`.
    Masked,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_del: f64,
    pub r_rep: f64,
    pub r_add: f64,
    pub r_imp: f64,
    pub r2: f64,
}

impl RewardBreakdown {
    /// `r2 = α·r_del + β·r_rep + γ_w·r_imp − δ·r_add`.
    pub fn combine(r_del: f64, r_rep: f64, r_add: f64, r_imp: f64, w: &RewardWeights) -> Self {
        RewardBreakdown {
            r_del,
            r_rep,
            r_add,
            r_imp,
            r2: w.alpha * r_del + w.beta * r_rep + w.gamma_w * r_imp - w.delta * r_add,
        }
    }

    /// The reward credited for `action` under `mode`.
    pub fn for_action(&self, action: DiscAction, mode: RewardMode, w: &RewardWeights) -> f64 {
        match mode {
            RewardMode::Unconditional => self.r2,
            RewardMode::Masked => {
                let own = match action {
                    DiscAction::Delete => w.alpha * self.r_del,
                    DiscAction::Replace => w.beta * self.r_rep,
                    DiscAction::Add => -w.delta * self.r_add,
                };
                own + w.gamma_w * self.r_imp
            }
        }
    }
}

pub fn generation_reward(score_new: f64, score_ori: f64) -> f64 {
    score_new - score_ori
}

/// Reward terms for one feature. `f_new` is `None` when the generation agent
/// chose an identity operator; the information terms are then zero.
pub fn discrimination_reward(
    f_ori: Series<'_>,
    f_new: Option<Series<'_>>,
    y: Series<'_>,
    score_new: f64,
    score_ori: f64,
    w: &RewardWeights,
) -> Result<RewardBreakdown> {
    let r_imp = score_new - score_ori;
    let Some(f_new) = f_new else {
        return Ok(RewardBreakdown::combine(0.0, 0.0, 0.0, r_imp, w));
    };
    for s in [f_new, y] {
        if s.values.len() != f_ori.values.len() {
            return Err(Error::LengthMismatch {
                left: f_ori.values.len(),
                right: s.values.len(),
            });
        }
    }
    let r_del = mutual_information(f_ori, y)? - mutual_information(f_new, y)?;
    let r_add = mutual_information(f_ori, f_new)?;
    Ok(RewardBreakdown::combine(r_del, -r_del, r_add, r_imp, w))
}
