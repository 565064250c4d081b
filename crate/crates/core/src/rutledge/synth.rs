//! Synthetic subjects for the gamble task.
//!
//! Trial menu: the certain reward is `±5k` for `k` uniform on `1..=11`.
//! The gamble straddles it, `lo = CR − 4u` and `hi = CR + 4v` with `u, v`
//! uniform on `1..=17`, so every outcome is a multiple of four away from CR
//! and stays well inside ±220. Because CR is symmetric around zero the
//! a-priori value `E[max(CR, EV)]` is `2 E[max(0, v − u)] = (K² − 1)/(3K)`
//! with `K = 17`, about 5.65 points.
//!
//! Choices follow a logistic rule on `EV − CR`. A rating is requested after
//! a gap of two or three trials, eleven times over thirty trials, plus one
//! rating before the first trial. Post-trial ratings are the ground-truth
//! model's predictions mapped affinely onto `[10, 90]`, plus Gaussian noise
//! proportional to their spread, clamped to `[0, 100]`. The opening rating
//! is uniform on `[0, 100]`; it is dropped before fitting anyway.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Choice, HappinessModel, SubjectTrace, Trial, RATING_MAX, RATING_MIN};
use crate::env::{rng_stream, RngStream};
use crate::error::{invalid, Result};

pub const TRIALS_PER_PLAY: usize = 30;
const CR_STEP: f64 = 5.0;
const CR_LEVELS: i32 = 11;
const GAMBLE_STEP: f64 = 4.0;
const GAMBLE_LEVELS: i32 = 17;
/// Gaps between post-trial prompts; they sum to 30.
const PROMPT_GAPS: [usize; 11] = [3, 3, 3, 3, 3, 3, 3, 3, 2, 2, 2];
const SCALED_LOW: f64 = 10.0;
const SCALED_HIGH: f64 = 90.0;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Model whose predictions become the ratings.
    pub truth: HappinessModel,
    pub truth_gamma: f64,
    /// Rating noise as a fraction of the noiseless ratings' standard deviation.
    pub noise: f64,
    /// Logistic choice temperature in points.
    pub temperature: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            truth: HappinessModel::OURS,
            truth_gamma: 0.7,
            noise: 0.0,
            temperature: 10.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.truth_gamma) {
            return Err(invalid(format!("truth_gamma {} not in [0, 1)", self.truth_gamma)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid(format!("noise {} must be finite and non-negative", self.noise)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid(format!("temperature {} must be positive", self.temperature)));
        }
        Ok(())
    }
}

/// Exact a-priori value of a trial under the menu above.
pub fn menu_expected_value() -> f64 {
    let k = GAMBLE_LEVELS as f64;
    GAMBLE_STEP / 4.0 * (k * k - 1.0) / (3.0 * k)
}

/// Mean of `max(CR, EV)` over all trials of all subjects.
pub fn mean_a_priori_value(subjects: &[SubjectTrace]) -> Option<f64> {
    let values: Vec<f64> = subjects
        .iter()
        .flat_map(|s| s.trials.iter().map(super::subjective_expected_reward))
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn draw_trial(rng: &mut RngStream, temperature: f64) -> Trial {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let cr = sign * CR_STEP * rng.random_range(1..=CR_LEVELS) as f64;
    let lo = cr - GAMBLE_STEP * rng.random_range(1..=GAMBLE_LEVELS) as f64;
    let hi = cr + GAMBLE_STEP * rng.random_range(1..=GAMBLE_LEVELS) as f64;
    let ev = 0.5 * (lo + hi);
    let p_gamble = 1.0 / (1.0 + (-(ev - cr) / temperature).exp());
    let (choice, outcome) = if rng.random::<f64>() < p_gamble {
        (Choice::Gamble, if rng.random::<bool>() { hi } else { lo })
    } else {
        (Choice::Certain, cr)
    };
    Trial {
        certain_reward: cr,
        gamble_low: lo,
        gamble_high: hi,
        choice,
        outcome,
        reported_happiness: None,
    }
}

fn prompt_indices(rng: &mut RngStream) -> Vec<usize> {
    let mut gaps = PROMPT_GAPS;
    gaps.shuffle(rng);
    gaps.iter()
        .scan(0, |t, g| {
            *t += g;
            Some(*t - 1)
        })
        .collect()
}

fn population_std(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Generates subject `id` from its own stream of `seed`.
pub fn synth_subject(id: u64, config: &GeneratorConfig, seed: u64) -> Result<SubjectTrace> {
    config.validate()?;
    let mut rng = rng_stream(seed, id);
    for _ in 0..MAX_REDRAWS {
        let mut trials: Vec<Trial> = (0..TRIALS_PER_PLAY)
            .map(|_| draw_trial(&mut rng, config.temperature))
            .collect();
        let prompts = prompt_indices(&mut rng);
        let initial_rating = rng.random_range(RATING_MIN..=RATING_MAX);

        let predictions = config.truth.predict(&trials, config.truth_gamma);
        let at_prompts: Vec<f64> = prompts.iter().map(|&i| predictions[i]).collect();
        let lo = at_prompts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = at_prompts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 1e-9 * hi.abs().max(lo.abs()).max(1.0) {
            continue;
        }
        let scaled: Vec<f64> = at_prompts
            .iter()
            .map(|p| SCALED_LOW + (SCALED_HIGH - SCALED_LOW) * (p - lo) / (hi - lo))
            .collect();
        let sigma = config.noise * population_std(&scaled);
        let noise = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
        for (&i, s) in prompts.iter().zip(&scaled) {
            let rating = if sigma > 0.0 { s + noise.sample(&mut rng) } else { *s };
            trials[i].reported_happiness = Some(rating.clamp(RATING_MIN, RATING_MAX));
        }
        return Ok(SubjectTrace {
            id,
            initial_rating: Some(initial_rating),
            trials,
        });
    }
    Err(invalid(format!(
        "{} predictions stayed constant for subject {id} after {MAX_REDRAWS} draws",
        config.truth.name()
    )))
}

/// `n` subjects with ids `0..n`, each from stream `id` of `seed`.
pub fn synth_subjects(n: usize, config: &GeneratorConfig, seed: u64) -> Result<Vec<SubjectTrace>> {
    (0..n as u64).map(|id| synth_subject(id, config, seed)).collect()
}
