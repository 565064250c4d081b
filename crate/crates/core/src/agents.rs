//! Tabular learners and the instrumented simulation loop.
//!
//! Every step records happiness from the estimate *before* that step's
//! learning update, so for greedy steps the recorded value is exactly the
//! temporal difference error the learner then uses.

use serde::{Deserialize, Serialize};

use crate::env::{act, rng_stream, step, MarkovEnv, Policy, StepTrace, ALPHA, BETA, S0, S1};
use crate::error::{invalid, Result};
use crate::happiness::{
    happiness_td, split_luck_pessimism, split_payout_news, HappinessRecord,
};
use crate::value::{NextStepBelief, TabularEstimate, ValueRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    QLearning,
    Sarsa,
    /// No learning: the initial table is kept and read with `rule`.
    FixedEstimate { rule: ValueRule },
}

impl Algorithm {
    pub fn value_rule(&self) -> ValueRule {
        match self {
            Algorithm::QLearning => ValueRule::Greedy,
            Algorithm::Sarsa => ValueRule::OnPolicy,
            Algorithm::FixedEstimate { rule } => *rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    /// Probability of a uniformly random action.
    pub exploration: f64,
    pub initial_q: TabularEstimate,
    pub horizon: usize,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid(format!("learning rate {} not in (0, 1]", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(invalid(format!("exploration {} not in [0, 1]", self.exploration)));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        Ok(())
    }
}

/// `q(s,a) += α (r + γ max_a' q(s',a') − q(s,a))`. Returns the TD error.
pub fn q_learning_update(
    q: &mut TabularEstimate,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    learning_rate: f64,
    discount: f64,
) -> f64 {
    let td = reward + discount * q.max_value(next_state) - q.get(state, action);
    q.set(state, action, q.get(state, action) + learning_rate * td);
    td
}

/// `q(s,a) += α (r + γ q(s',a') − q(s,a))`. Returns the TD error.
#[allow(clippy::too_many_arguments)]
pub fn sarsa_update(
    q: &mut TabularEstimate,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    next_action: usize,
    learning_rate: f64,
    discount: f64,
) -> f64 {
    let td = reward + discount * q.get(next_state, next_action) - q.get(state, action);
    q.set(state, action, q.get(state, action) + learning_rate * td);
    td
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub trace: StepTrace,
    pub records: Vec<HappinessRecord>,
    pub final_q: TabularEstimate,
}

/// Runs an ε-greedy learner for `config.horizon` steps from the start state.
///
/// Each record carries the full decomposition. The agent's subjective
/// one-step belief is the one implied by its Q table: it expects the true
/// mean reward of the action its value is anchored on (the greedy action
/// for [`ValueRule::Greedy`], the selected action for
/// [`ValueRule::OnPolicy`]) and attributes the rest of `V̂` to the future.
/// The objective expectations use the true environment and the behaviour
/// policy, so luck averages to zero under the actual dynamics.
pub fn run_instrumented(env: &MarkovEnv, config: &LearnerConfig, seed: u64) -> Result<Run> {
    config.validate()?;
    config.initial_q.check_shape(env)?;
    let gamma = env.discount();
    let n_actions = env.n_actions();
    let rule = config.algorithm.value_rule();
    let behaviour = Policy::epsilon_greedy(config.exploration)?;
    let mut rng = rng_stream(seed, 0);

    let mut q = config.initial_q.clone();
    let mut trace = StepTrace::new(seed);
    let mut records = Vec::with_capacity(config.horizon);

    let mut state = env.start_state();
    let mut action = act(&behaviour, state, n_actions, Some(&q), &mut rng)?;

    for t in 1..=config.horizon {
        let (next_state, reward) = step(env, state, action, &mut rng)?;
        // SARSA commits to its next action before updating; for the greedy
        // rule the next action is picked after the update, as in Q-learning.
        let on_policy_next = match rule {
            ValueRule::OnPolicy => Some(act(&behaviour, next_state, n_actions, Some(&q), &mut rng)?),
            ValueRule::Greedy => None,
        };

        let v_prev = q.state_value(state, rule, action);
        let v_next = q.state_value(next_state, rule, on_policy_next.unwrap_or(0));
        let happiness = happiness_td(reward, v_next, v_prev, gamma)?;

        let (subjective, objective) =
            step_beliefs(env, &q, &behaviour, rule, state, action, v_prev)?;
        let record = HappinessRecord::bare(t, happiness)
            .with_payout_news(split_payout_news(reward, v_next, &subjective, gamma))
            .with_luck_pessimism(split_luck_pessimism(reward, v_next, &subjective, &objective));
        records.push(record);
        trace.push(state, action, reward, next_state);

        match config.algorithm {
            Algorithm::QLearning => {
                q_learning_update(&mut q, state, action, reward, next_state, config.learning_rate, gamma);
            }
            Algorithm::Sarsa => {
                let next_action = on_policy_next.expect("on-policy rule picks the next action");
                sarsa_update(
                    &mut q,
                    state,
                    action,
                    reward,
                    next_state,
                    next_action,
                    config.learning_rate,
                    gamma,
                );
            }
            Algorithm::FixedEstimate { .. } => {}
        }

        state = next_state;
        action = match on_policy_next {
            Some(a) => a,
            None => act(&behaviour, state, n_actions, Some(&q), &mut rng)?,
        };
    }

    Ok(Run {
        trace,
        records,
        final_q: q,
    })
}

fn step_beliefs(
    env: &MarkovEnv,
    q: &TabularEstimate,
    behaviour: &Policy,
    rule: ValueRule,
    state: usize,
    action: usize,
    v_prev: f64,
) -> Result<(NextStepBelief, NextStepBelief)> {
    let gamma = env.discount();
    let n_actions = env.n_actions();
    match rule {
        ValueRule::Greedy => {
            let anchor = q.greedy_action(state);
            let subjective = NextStepBelief::implied(v_prev, env.expected_reward(state, anchor), gamma);
            // before acting: average over the behaviour policy's choice
            let probs = behaviour.action_probs(state, n_actions, Some(q))?;
            let mut objective = NextStepBelief {
                expected_reward: 0.0,
                expected_next_value: 0.0,
            };
            for (a, pa) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                objective.expected_reward += pa * env.expected_reward(state, a);
                objective.expected_next_value += pa * env.expect_next(state, a, |s| q.max_value(s));
            }
            Ok((subjective, objective))
        }
        ValueRule::OnPolicy => {
            let subjective = NextStepBelief::implied(v_prev, env.expected_reward(state, action), gamma);
            let next_value = |s: usize| -> Result<f64> {
                let probs = behaviour.action_probs(s, n_actions, Some(q))?;
                Ok(probs.iter().zip(q.row(s)).map(|(p, v)| p * v).sum())
            };
            let mut expected_next_value = 0.0;
            for (s, p) in env.transition(state, action).iter().enumerate() {
                if *p > 0.0 {
                    expected_next_value += p * next_value(s)?;
                }
            }
            let objective = NextStepBelief {
                expected_reward: env.expected_reward(state, action),
                expected_next_value,
            };
            Ok((subjective, objective))
        }
    }
}

/// Initial tables of the two-state value-initialisation example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialisation {
    /// `Q(s0,α)=0, Q(s0,β)=−ε, Q(s1,α)=ε, Q(s1,β)=0`: never leaves `s0`.
    Pessimistic,
    /// As above but `Q(s0,β)=+ε`: moves to `s1` on the first step.
    Optimistic,
}

pub fn fig1_initial_q(init: Initialisation, offset: f64) -> TabularEstimate {
    let mut q = TabularEstimate::filled(2, 2, 0.0);
    q.set(S0, ALPHA, 0.0);
    q.set(
        S0,
        BETA,
        match init {
            Initialisation::Pessimistic => -offset,
            Initialisation::Optimistic => offset,
        },
    );
    q.set(S1, ALPHA, offset);
    q.set(S1, BETA, 0.0);
    q
}

/// Greedy Q-learning on the two-state example.
pub fn fig2_config(init: Initialisation, offset: f64, learning_rate: f64, steps: usize) -> LearnerConfig {
    LearnerConfig {
        algorithm: Algorithm::QLearning,
        learning_rate,
        exploration: 0.0,
        initial_q: fig1_initial_q(init, offset),
        horizon: steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::build_fig1_env;

    const TOL: f64 = 1e-9;

    #[test]
    fn q_learning_update_by_hand() {
        let mut q = TabularEstimate::filled(2, 2, 0.0);
        q_learning_update(&mut q, 1, 0, 2.0, 1, 0.1, 0.5);
        assert!((q.get(1, 0) - 0.2).abs() < 1e-12);
        assert_eq!(q.get(0, 0), 0.0);
        assert_eq!(q.get(0, 1), 0.0);
        assert_eq!(q.get(1, 1), 0.0);

        let mut zero = TabularEstimate::filled(1, 1, 0.0);
        q_learning_update(&mut zero, 0, 0, 0.0, 0, 1.0, 0.5);
        assert_eq!(zero.get(0, 0), 0.0);
    }

    #[test]
    fn self_loop_iterates_to_four() {
        let mut q = TabularEstimate::filled(2, 2, 0.0);
        let mut prev = 0.0;
        for _ in 0..2000 {
            q_learning_update(&mut q, S1, ALPHA, 2.0, S1, 0.1, 0.5);
            let expected: f64 = prev + 0.1 * (2.0 - 0.5 * prev);
            assert!((q.get(S1, ALPHA) - expected).abs() < 1e-12);
            prev = expected;
        }
        assert!((q.get(S1, ALPHA) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn sarsa_update_by_hand() {
        let mut q = TabularEstimate::filled(2, 2, 0.0);
        sarsa_update(&mut q, 0, 1, -1.0, 1, 0, 0.5, 0.5);
        assert!((q.get(0, 1) + 0.5).abs() < 1e-12);

        let mut a = TabularEstimate::from_rows(vec![vec![0.3, -0.2], vec![1.0, 0.4]]).unwrap();
        let mut b = a.clone();
        let greedy = a.greedy_action(1);
        q_learning_update(&mut a, 0, 1, 0.7, 1, 0.3, 0.9);
        sarsa_update(&mut b, 0, 1, 0.7, 1, greedy, 0.3, 0.9);
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_sarsa_matches_q_learning_on_fig1() {
        let env = build_fig1_env();
        for init in [Initialisation::Optimistic, Initialisation::Pessimistic] {
            let mut config = fig2_config(init, 0.1, 0.1, 200);
            let q_run = run_instrumented(&env, &config, 3).unwrap();
            config.algorithm = Algorithm::Sarsa;
            let s_run = run_instrumented(&env, &config, 3).unwrap();
            assert_eq!(q_run.final_q, s_run.final_q);
            assert_eq!(q_run.trace.steps, s_run.trace.steps);
            for (a, b) in q_run.records.iter().zip(&s_run.records) {
                assert_eq!(a.happiness, b.happiness);
            }
        }
    }

    #[test]
    fn pessimistic_run_is_flat() {
        let env = build_fig1_env();
        let run = run_instrumented(&env, &fig2_config(Initialisation::Pessimistic, 0.1, 0.1, 100), 0).unwrap();
        assert_eq!(run.records.len(), 100);
        assert!(run.records.iter().all(|r| r.happiness == 0.0));
        assert!(run.trace.steps.iter().all(|s| s.reward == 0.0 && s.next_state == S0));
    }

    #[test]
    fn optimistic_run_first_steps() {
        let env = build_fig1_env();
        let run = run_instrumented(&env, &fig2_config(Initialisation::Optimistic, 0.1, 0.1, 100), 0).unwrap();
        assert!((run.records[0].happiness + 1.05).abs() < TOL);
        assert!((run.records[1].happiness - 1.95).abs() < TOL);
        for w in run.records[1..].windows(2) {
            assert!((w[1].happiness - 0.95 * w[0].happiness).abs() < TOL);
        }
        assert!(run.trace.is_chained());
    }

    #[test]
    fn records_decompose_exactly() {
        let env = build_fig1_env();
        let mut config = fig2_config(Initialisation::Optimistic, 0.3, 0.2, 300);
        config.exploration = 0.25;
        for algorithm in [Algorithm::QLearning, Algorithm::Sarsa] {
            config.algorithm = algorithm;
            let run = run_instrumented(&env, &config, 17).unwrap();
            for r in &run.records {
                assert!(r.identity_error(0.5) < TOL);
            }
            if algorithm == Algorithm::Sarsa {
                // conditioned on the chosen action, deterministic dynamics leave no reward luck
                assert!(run.records.iter().all(|r| r.luck_payout == Some(0.0)));
            }
        }
    }

    #[test]
    fn greedy_runs_in_deterministic_env_have_no_luck() {
        let env = build_fig1_env();
        let run = run_instrumented(&env, &fig2_config(Initialisation::Optimistic, 0.1, 0.1, 50), 0).unwrap();
        for r in &run.records {
            assert_eq!(r.luck_payout, Some(0.0));
            assert_eq!(r.luck_news, Some(0.0));
            assert_eq!(r.payout, Some(0.0));
        }
    }

    #[test]
    fn config_validation() {
        let mut config = fig2_config(Initialisation::Optimistic, 0.1, 0.1, 10);
        config.learning_rate = 0.0;
        assert!(config.validate().is_err());
        config.learning_rate = 1.0;
        config.exploration = -0.1;
        assert!(config.validate().is_err());
        config.exploration = 0.0;
        config.horizon = 0;
        assert!(config.validate().is_err());
    }
}
