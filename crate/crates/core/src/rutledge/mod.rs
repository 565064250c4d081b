//! Momentary well-being in a risky-choice task.
//!
//! Each trial offers a certain reward (CR) or a 50/50 gamble between two
//! outcomes; every two to three trials the subject rates their happiness
//! on a 0–100 scale. Three predictors of those ratings are provided:
//!
//! - [`HappinessModel::Ours`]: per-trial happiness from the payout /
//!   good-news split, with the subject expecting `max(CR, EV)` and valuing
//!   the future by the running average reward;
//! - [`HappinessModel::Rutledge`]: a weighted sum of CR, EV and the
//!   gamble's reward prediction error;
//! - [`HappinessModel::CumulativeReward`]: the rewards themselves.
//!
//! Per-trial terms are aggregated with geometric discounting and the
//! discount is fitted per subject by grid search on Pearson's r.
//!
//! The Rutledge model's temporal bookkeeping is not pinned down by the
//! weights alone; here all three terms share the fitted decay.

pub mod io;
pub mod stats;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::value::empirical_value_estimate;

pub use stats::{big_r_squared, pearson_r, r_squared, z_score};

/// Largest gain or loss possible in a single trial.
pub const MAX_ABS_OUTCOME: f64 = 220.0;
pub const RATING_MIN: f64 = 0.0;
pub const RATING_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Certain,
    Gamble,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub certain_reward: f64,
    pub gamble_low: f64,
    pub gamble_high: f64,
    pub choice: Choice,
    pub outcome: f64,
    /// Rating given right after this trial, if the subject was asked.
    pub reported_happiness: Option<f64>,
}

impl Trial {
    pub fn new(
        certain_reward: f64,
        gamble_low: f64,
        gamble_high: f64,
        choice: Choice,
        outcome: f64,
        reported_happiness: Option<f64>,
    ) -> Result<Self> {
        let trial = Self {
            certain_reward,
            gamble_low,
            gamble_high,
            choice,
            outcome,
            reported_happiness,
        };
        trial.validate()?;
        Ok(trial)
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.certain_reward, self.gamble_low, self.gamble_high, self.outcome];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("trial values must be finite"));
        }
        if self.outcome.abs() > MAX_ABS_OUTCOME {
            return Err(invalid(format!("outcome {} exceeds ±{MAX_ABS_OUTCOME}", self.outcome)));
        }
        let consistent = match self.choice {
            Choice::Certain => self.outcome == self.certain_reward,
            Choice::Gamble => self.outcome == self.gamble_low || self.outcome == self.gamble_high,
        };
        if !consistent {
            return Err(invalid(format!(
                "outcome {} impossible for {:?} choice",
                self.outcome, self.choice
            )));
        }
        if let Some(r) = self.reported_happiness {
            if !(RATING_MIN..=RATING_MAX).contains(&r) {
                return Err(invalid(format!("rating {r} outside [0, 100]")));
            }
        }
        Ok(())
    }

    /// Expected value of the gamble.
    pub fn expected_value(&self) -> f64 {
        0.5 * (self.gamble_low + self.gamble_high)
    }

    /// Reward prediction error of a resolved gamble, zero for a certain choice.
    pub fn prediction_error(&self) -> f64 {
        match self.choice {
            Choice::Certain => 0.0,
            Choice::Gamble => self.outcome - self.expected_value(),
        }
    }
}

/// The expectation a subject forms before the outcome: `max(CR, EV)`.
pub fn subjective_expected_reward(trial: &Trial) -> f64 {
    trial.certain_reward.max(trial.expected_value())
}

/// Power-law valuation of outcomes with heavier losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossAversion {
    pub lambda: f64,
    pub gain_exponent: f64,
    pub loss_exponent: f64,
}

impl LossAversion {
    /// Population means reported for the task: λ = 1.7, gains^1.05, losses^1.01.
    pub const TASK_MEANS: LossAversion = LossAversion {
        lambda: 1.7,
        gain_exponent: 1.05,
        loss_exponent: 1.01,
    };

    pub fn apply(&self, outcome: f64) -> f64 {
        loss_aversion(outcome, self.lambda, self.gain_exponent, self.loss_exponent)
    }
}

/// `outcome^a` for gains, `−λ (−outcome)^b` otherwise.
pub fn loss_aversion(outcome: f64, lambda: f64, a: f64, b: f64) -> f64 {
    if outcome > 0.0 {
        outcome.powf(a)
    } else {
        -lambda * (-outcome).powf(b)
    }
}

/// How a subject converts points into reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    #[default]
    Linear,
    LossAverse(LossAversion),
}

impl Utility {
    pub fn apply(&self, points: f64) -> f64 {
        match self {
            Utility::Linear => points,
            Utility::LossAverse(la) => la.apply(points),
        }
    }
}

/// Happiness of one trial for a subject who has so far received
/// `history` (already in reward units).
///
/// The subject expects `max(CR, EV)`; its value estimate is the running
/// average reward over `1 − γ`, so the expected estimate after the trial is
/// the estimate with the expected reward appended. Happiness is payout
/// plus `γ` times the resulting good news.
pub fn trial_happiness(trial: &Trial, history: &[f64], gamma: f64) -> f64 {
    trial_happiness_with(trial, history, gamma, &Utility::Linear)
}

pub fn trial_happiness_with(trial: &Trial, history: &[f64], gamma: f64, utility: &Utility) -> f64 {
    let reward = utility.apply(trial.outcome);
    let expected = utility
        .apply(trial.certain_reward)
        .max(0.5 * (utility.apply(trial.gamble_low) + utility.apply(trial.gamble_high)));
    let payout = reward - expected;

    let mut after = history.to_vec();
    after.push(reward);
    let v_after = empirical_value_estimate(&after, gamma);
    *after.last_mut().expect("just pushed") = expected;
    let v_expected = empirical_value_estimate(&after, gamma);

    payout + gamma * (v_after - v_expected)
}

/// `Σ_{k=1..t} γ^{t−k} x_k` over the first `t` entries.
pub fn predicted_happiness(series: &[f64], gamma: f64, t: usize) -> Result<f64> {
    if t > series.len() {
        return Err(invalid(format!("t = {t} beyond series of length {}", series.len())));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid(format!("aggregation discount {gamma} not in [0, 1)")));
    }
    Ok(series[..t]
        .iter()
        .enumerate()
        .map(|(k, x)| gamma.powi((t - 1 - k) as i32) * x)
        .sum())
}

/// Discounted running sums `P_t = γ P_{t−1} + x_t` for every `t`.
fn discounted_running_sums(series: &[f64], gamma: f64) -> Vec<f64> {
    let mut acc = 0.0;
    series
        .iter()
        .map(|x| {
            acc = gamma * acc + x;
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RutledgeWeights {
    pub certain: f64,
    pub expected_value: f64,
    pub prediction_error: f64,
}

impl RutledgeWeights {
    /// Weights for z-scored ratings: CR 0.52, EV 0.35, RPE 0.8.
    pub const PUBLISHED: RutledgeWeights = RutledgeWeights {
        certain: 0.52,
        expected_value: 0.35,
        prediction_error: 0.8,
    };
}

/// Per-trial term `w_CR CR [certain] + w_EV EV [gamble] + w_RPE RPE [gamble]`.
fn rutledge_term(trial: &Trial, w: &RutledgeWeights) -> f64 {
    match trial.choice {
        Choice::Certain => w.certain * trial.certain_reward,
        Choice::Gamble => w.expected_value * trial.expected_value() + w.prediction_error * trial.prediction_error(),
    }
}

/// Rutledge prediction after every trial, with shared decay `gamma`.
pub fn rutledge_model(trials: &[Trial], weights: &RutledgeWeights, gamma: f64) -> Vec<f64> {
    let terms: Vec<f64> = trials.iter().map(|t| rutledge_term(t, weights)).collect();
    discounted_running_sums(&terms, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HappinessModel {
    Ours { utility: Utility },
    Rutledge { weights: RutledgeWeights },
    CumulativeReward,
}

impl HappinessModel {
    pub const OURS: HappinessModel = HappinessModel::Ours {
        utility: Utility::Linear,
    };
    pub const OURS_LOSS_AVERSE: HappinessModel = HappinessModel::Ours {
        utility: Utility::LossAverse(LossAversion::TASK_MEANS),
    };
    pub const RUTLEDGE: HappinessModel = HappinessModel::Rutledge {
        weights: RutledgeWeights::PUBLISHED,
    };

    pub fn name(&self) -> &'static str {
        match self {
            HappinessModel::Ours {
                utility: Utility::Linear,
            } => "ours",
            HappinessModel::Ours { .. } => "ours_loss_averse",
            HappinessModel::Rutledge { .. } => "rutledge",
            HappinessModel::CumulativeReward => "cumulative",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ours" => Some(Self::OURS),
            "ours_loss_averse" => Some(Self::OURS_LOSS_AVERSE),
            "rutledge" => Some(Self::RUTLEDGE),
            "cumulative" | "cumulative_reward" => Some(Self::CumulativeReward),
            _ => None,
        }
    }

    /// Per-trial (undiscounted) terms the model aggregates.
    pub fn trial_terms(&self, trials: &[Trial], gamma: f64) -> Vec<f64> {
        match self {
            HappinessModel::Ours { utility } => {
                let mut history = Vec::with_capacity(trials.len());
                trials
                    .iter()
                    .map(|trial| {
                        let h = trial_happiness_with(trial, &history, gamma, utility);
                        history.push(utility.apply(trial.outcome));
                        h
                    })
                    .collect()
            }
            HappinessModel::Rutledge { weights } => trials.iter().map(|t| rutledge_term(t, weights)).collect(),
            HappinessModel::CumulativeReward => trials.iter().map(|t| t.outcome).collect(),
        }
    }

    /// Predicted happiness after each trial; `gamma` both values the future
    /// (our model) and aggregates past trials.
    pub fn predict(&self, trials: &[Trial], gamma: f64) -> Vec<f64> {
        discounted_running_sums(&self.trial_terms(trials, gamma), gamma)
    }
}

/// One subject's play: trials plus the rating collected before trial 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTrace {
    pub id: u64,
    pub initial_rating: Option<f64>,
    pub trials: Vec<Trial>,
}

impl SubjectTrace {
    /// All ratings in time order as `(trial index, rating)`; the initial
    /// rating has no trial index.
    pub fn ratings(&self) -> Vec<(Option<usize>, f64)> {
        self.initial_rating
            .map(|r| (None, r))
            .into_iter()
            .chain(
                self.trials
                    .iter()
                    .enumerate()
                    .filter_map(|(i, t)| t.reported_happiness.map(|r| (Some(i), r))),
            )
            .collect()
    }

    /// Ratings used for fitting: everything after the first rating.
    pub fn fitting_points(&self) -> Vec<(usize, f64)> {
        self.ratings()
            .into_iter()
            .skip(1)
            .filter_map(|(i, r)| i.map(|i| (i, r)))
            .collect()
    }

    /// True when the fitting ratings carry no signal.
    pub fn is_degenerate(&self) -> bool {
        let points = self.fitting_points();
        points.len() < 2 || points.iter().all(|(_, r)| *r == points[0].1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub gamma: f64,
    pub pearson_r: f64,
    pub r_squared: f64,
    #[serde(rename = "big_R_squared")]
    pub big_r_squared: f64,
}

pub const GAMMA_GRID_STEPS: usize = 100;

/// `0, 0.01, …, 0.99`.
pub fn gamma_grid() -> impl Iterator<Item = f64> {
    (0..GAMMA_GRID_STEPS).map(|i| i as f64 / GAMMA_GRID_STEPS as f64)
}

/// Correlation between the model's predictions and the fitting ratings at
/// a fixed discount.
pub fn score(subject: &SubjectTrace, model: &HappinessModel, gamma: f64) -> Result<FitResult> {
    let points = subject.fitting_points();
    let ratings: Vec<f64> = points.iter().map(|(_, r)| *r).collect();
    let predictions = model.predict(&subject.trials, gamma);
    let at_prompts: Vec<f64> = points.iter().map(|(i, _)| predictions[*i]).collect();
    let r = pearson_r(&at_prompts, &ratings)?;
    Ok(FitResult {
        gamma,
        pearson_r: r,
        r_squared: r * r,
        big_r_squared: big_r_squared(&ratings, &at_prompts)?,
    })
}

/// Grid search for the discount maximising Pearson's r. Ties keep the
/// smallest discount; discounts where the predictions are constant are
/// skipped.
pub fn fit_gamma(subject: &SubjectTrace, model: &HappinessModel) -> Result<FitResult> {
    if subject.fitting_points().len() < 2 {
        return Err(invalid(format!("subject {} has fewer than two usable ratings", subject.id)));
    }
    if subject.is_degenerate() {
        return Err(Error::DegenerateSubject(subject.id.to_string()));
    }
    let mut best: Option<FitResult> = None;
    for gamma in gamma_grid() {
        let fit = match score(subject, model, gamma) {
            Ok(fit) => fit,
            Err(Error::UndefinedCorrelation(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|b| fit.pearson_r > b.pearson_r) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| {
        Error::UndefinedCorrelation(format!(
            "{} predictions are constant for subject {} at every discount",
            model.name(),
            subject.id
        ))
    })
}
