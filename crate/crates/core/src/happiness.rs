//! The happiness signal and its decompositions.
//!
//! Happiness of a step is the temporal difference error of the agent's own
//! estimate, `ĥ = r_t + γ V̂(h') − V̂(h)`. Positive means happy.
//!
//! Given a subjective model whose expected return is `V̂`, the same number
//! splits exactly into
//!
//! ```text
//! ĥ = (r_t − E[r_t | h])  +  γ (V̂(h') − E[V̂(h a o r) | h])
//!      \_____payout____/       \__________good news__________/
//! ```
//!
//! and, when the true environment is known, each bracket splits again into
//! *luck* (realised minus objective expectation) and *pessimism* (objective
//! minus subjective expectation). All expectations are exact enumerations.

use serde::{Deserialize, Serialize};

use crate::env::{MarkovEnv, Policy, Step};
use crate::error::{invalid, Error, Result};
use crate::value::{HistoryContext, NextStepBelief, SubjectiveModel, TabularEstimate};

/// `r + γ v_next − v_prev`.
pub fn happiness_td(reward: f64, v_next: f64, v_prev: f64, discount: f64) -> Result<f64> {
    if !(reward.is_finite() && v_next.is_finite() && v_prev.is_finite()) {
        return Err(invalid("happiness inputs must be finite"));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(invalid(format!("discount {discount} not in (0, 1)")));
    }
    Ok(reward + discount * v_next - v_prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoutNews {
    pub payout: f64,
    /// Already multiplied by the discount.
    pub good_news: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuckPessimism {
    pub luck_payout: f64,
    pub pessimism_payout: f64,
    /// Not discounted: `luck_news + pessimism_news = good_news / γ`.
    pub luck_news: f64,
    pub pessimism_news: f64,
}

pub fn split_payout_news(
    reward: f64,
    v_next: f64,
    belief: &NextStepBelief,
    discount: f64,
) -> PayoutNews {
    PayoutNews {
        payout: reward - belief.expected_reward,
        good_news: discount * (v_next - belief.expected_next_value),
    }
}

pub fn split_luck_pessimism(
    reward: f64,
    v_next: f64,
    subjective: &NextStepBelief,
    objective: &NextStepBelief,
) -> LuckPessimism {
    LuckPessimism {
        luck_payout: reward - objective.expected_reward,
        pessimism_payout: objective.expected_reward - subjective.expected_reward,
        luck_news: v_next - objective.expected_next_value,
        pessimism_news: objective.expected_next_value - subjective.expected_next_value,
    }
}

/// Payout and good news of a realised step under `model`.
pub fn decompose_payout_goodnews(
    reward: f64,
    v_next: f64,
    model: &SubjectiveModel,
    ctx: HistoryContext<'_>,
) -> Result<PayoutNews> {
    let belief = model.belief(ctx)?;
    Ok(split_payout_news(reward, v_next, &belief, model.discount()))
}

/// Objective one-step expectations `E^π_μ[r | s]` and `E^π_μ[V̂(s') | s]`
/// for a state-value table `values`.
pub fn objective_belief(
    env: &MarkovEnv,
    policy: &Policy,
    q: Option<&TabularEstimate>,
    state: usize,
    values: &[f64],
) -> Result<NextStepBelief> {
    env.check_state(state)?;
    if values.len() < env.n_states() {
        return Err(Error::MissingState(values.len()));
    }
    let probs = policy.action_probs(state, env.n_actions(), q)?;
    let mut belief = NextStepBelief {
        expected_reward: 0.0,
        expected_next_value: 0.0,
    };
    for (a, pa) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
        belief.expected_reward += pa * env.expected_reward(state, a);
        belief.expected_next_value += pa * env.expect_next(state, a, |next| values[next]);
    }
    Ok(belief)
}

/// Luck / pessimism split of a step taken from `state` in the true `env`
/// under `policy`, for an agent holding the MDP model `model`.
pub fn decompose_luck_pessimism(
    reward: f64,
    v_next: f64,
    model: &SubjectiveModel,
    env: &MarkovEnv,
    policy: &Policy,
    state: usize,
) -> Result<LuckPessimism> {
    let SubjectiveModel::Mdp { values, .. } = model else {
        return Err(Error::UnsupportedModel(
            "luck and pessimism need a state-based model".into(),
        ));
    };
    let subjective = model.belief(HistoryContext::State(state))?;
    let objective = objective_belief(env, policy, None, state, values)?;
    Ok(split_luck_pessimism(reward, v_next, &subjective, &objective))
}

/// One row of instrumentation: happiness plus whatever decomposition the
/// available structure allows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HappinessRecord {
    pub t: usize,
    pub happiness: f64,
    pub payout: Option<f64>,
    pub good_news: Option<f64>,
    pub luck_payout: Option<f64>,
    pub pessimism_payout: Option<f64>,
    pub luck_news: Option<f64>,
    pub pessimism_news: Option<f64>,
}

impl HappinessRecord {
    pub fn bare(t: usize, happiness: f64) -> Self {
        Self {
            t,
            happiness,
            payout: None,
            good_news: None,
            luck_payout: None,
            pessimism_payout: None,
            luck_news: None,
            pessimism_news: None,
        }
    }

    pub fn with_payout_news(mut self, split: PayoutNews) -> Self {
        self.payout = Some(split.payout);
        self.good_news = Some(split.good_news);
        self
    }

    pub fn with_luck_pessimism(mut self, split: LuckPessimism) -> Self {
        self.luck_payout = Some(split.luck_payout);
        self.pessimism_payout = Some(split.pessimism_payout);
        self.luck_news = Some(split.luck_news);
        self.pessimism_news = Some(split.pessimism_news);
        self
    }

    /// Largest violation of the three additive identities among the
    /// components that are present.
    pub fn identity_error(&self, discount: f64) -> f64 {
        let mut worst: f64 = 0.0;
        if let (Some(p), Some(g)) = (self.payout, self.good_news) {
            worst = worst.max((self.happiness - (p + g)).abs());
            if let (Some(lp), Some(pp)) = (self.luck_payout, self.pessimism_payout) {
                worst = worst.max((p - (lp + pp)).abs());
            }
            if let (Some(ln), Some(pn)) = (self.luck_news, self.pessimism_news) {
                worst = worst.max((g / discount - (ln + pn)).abs());
            }
        }
        worst
    }
}

/// Affine reward change `r ↦ c r + d` with the matching value change
/// `v ↦ c v + d / (1 − γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScaling {
    pub c: f64,
    pub d: f64,
}

impl RewardScaling {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !d.is_finite() {
            return Err(invalid(format!("scaling needs c > 0 and finite d, got c={c}, d={d}")));
        }
        Ok(Self { c, d })
    }

    pub fn reward(&self, r: f64) -> f64 {
        self.c * r + self.d
    }

    pub fn value(&self, v: f64, discount: f64) -> f64 {
        self.c * v + self.d / (1.0 - discount)
    }
}

/// Rescales an environment's rewards and an estimate's entries together.
pub fn scale_problem(
    env: &MarkovEnv,
    estimate: &TabularEstimate,
    c: f64,
    d: f64,
) -> Result<(MarkovEnv, TabularEstimate)> {
    let scaling = RewardScaling::new(c, d)?;
    let gamma = env.discount();
    Ok((
        env.map_rewards(|r| scaling.reward(r)),
        estimate.map(|v| scaling.value(v, gamma)),
    ))
}

/// Happiness of agent B's step as judged by agent A's state values.
pub fn cross_happiness(step: &Step, values_a: &[f64], discount: f64) -> Result<f64> {
    let v_prev = *values_a
        .get(step.state)
        .ok_or(Error::MissingState(step.state))?;
    let v_next = *values_a
        .get(step.next_state)
        .ok_or(Error::MissingState(step.next_state))?;
    happiness_td(step.reward, v_next, v_prev, discount)
}
