//! Finite Markov environments, policies and seeded stochastic stepping.
//!
//! Observations coincide with states. All tables are dense and indexed by
//! `usize`; a transition row `transition(s, a)` is a probability vector over
//! next states and rewards may depend on the full `(s, a, s')` triple.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::value::TabularEstimate;

/// Tolerance on probability rows summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// The pseudo-random generator every simulation draws from.
pub type RngStream = ChaCha8Rng;

/// Independent stream for `(seed, stream_index)`, e.g. one per episode or
/// per trial. Streams with different indices never overlap.
pub fn rng_stream(seed: u64, stream_index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    rng
}

/// A finite Markov decision process with a known transition and reward law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvDocument", into = "EnvDocument")]
pub struct MarkovEnv {
    n_states: usize,
    n_actions: usize,
    // [s][a][s'] flattened
    transition: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
    start_state: usize,
}

impl MarkovEnv {
    /// Builds an environment from nested `[s][a][s']` tables.
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<Vec<f64>>>,
        discount: f64,
        start_state: usize,
    ) -> Result<Self> {
        let n_states = transition.len();
        if n_states == 0 {
            return Err(invalid("environment needs at least one state"));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(invalid("environment needs at least one action"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(invalid(format!("discount {discount} not in (0, 1)")));
        }
        if start_state >= n_states {
            return Err(invalid(format!("start state {start_state} out of range")));
        }
        if reward.len() != n_states {
            return Err(invalid("reward table has wrong number of states"));
        }

        let mut flat_p = Vec::with_capacity(n_states * n_actions * n_states);
        let mut flat_r = Vec::with_capacity(n_states * n_actions * n_states);
        for s in 0..n_states {
            if transition[s].len() != n_actions || reward[s].len() != n_actions {
                return Err(invalid(format!("state {s}: expected {n_actions} actions")));
            }
            for a in 0..n_actions {
                let row = &transition[s][a];
                let rewards = &reward[s][a];
                if row.len() != n_states || rewards.len() != n_states {
                    return Err(invalid(format!(
                        "({s}, {a}): expected {n_states} next-state entries"
                    )));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(invalid(format!("({s}, {a}): negative or non-finite probability")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(invalid(format!("({s}, {a}): probabilities sum to {total}")));
                }
                if rewards.iter().any(|r| !r.is_finite()) {
                    return Err(invalid(format!("({s}, {a}): non-finite reward")));
                }
                flat_p.extend_from_slice(row);
                flat_r.extend_from_slice(rewards);
            }
        }

        Ok(Self {
            n_states,
            n_actions,
            transition: flat_p,
            reward: flat_r,
            discount,
            start_state,
        })
    }

    /// Deterministic environment: `next[s][a]` is the successor and
    /// `reward[s][a]` the reward of that transition.
    pub fn deterministic(
        next: &[Vec<usize>],
        reward: &[Vec<f64>],
        discount: f64,
        start_state: usize,
    ) -> Result<Self> {
        let n = next.len();
        let mut p = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for (s, row) in next.iter().enumerate() {
            let rewards = reward
                .get(s)
                .ok_or_else(|| invalid("reward table has wrong number of states"))?;
            if rewards.len() != row.len() {
                return Err(invalid(format!("state {s}: reward row length mismatch")));
            }
            let mut p_s = Vec::with_capacity(row.len());
            let mut r_s = Vec::with_capacity(row.len());
            for (&target, &rew) in row.iter().zip(rewards) {
                if target >= n {
                    return Err(invalid(format!("successor {target} out of range")));
                }
                let mut dist = vec![0.0; n];
                dist[target] = 1.0;
                p_s.push(dist);
                r_s.push(vec![rew; n]);
            }
            p.push(p_s);
            r.push(r_s);
        }
        Self::new(p, r, discount, start_state)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    fn offset(&self, state: usize, action: usize) -> usize {
        (state * self.n_actions + action) * self.n_states
    }

    /// Probability vector over next states.
    pub fn transition(&self, state: usize, action: usize) -> &[f64] {
        let o = self.offset(state, action);
        &self.transition[o..o + self.n_states]
    }

    /// Rewards indexed by next state.
    pub fn rewards(&self, state: usize, action: usize) -> &[f64] {
        let o = self.offset(state, action);
        &self.reward[o..o + self.n_states]
    }

    pub fn reward(&self, state: usize, action: usize, next_state: usize) -> f64 {
        self.rewards(state, action)[next_state]
    }

    /// `E[r | s, a]` under the true law.
    pub fn expected_reward(&self, state: usize, action: usize) -> f64 {
        self.transition(state, action)
            .iter()
            .zip(self.rewards(state, action))
            .map(|(p, r)| p * r)
            .sum()
    }

    /// `Σ_{s'} P(s'|s,a) f(s')`.
    pub fn expect_next(&self, state: usize, action: usize, f: impl Fn(usize) -> f64) -> f64 {
        self.transition(state, action)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(next, p)| p * f(next))
            .sum()
    }

    /// True when every transition row puts all mass on a single successor.
    pub fn is_deterministic(&self) -> bool {
        self.transition.chunks(self.n_states).all(|row| row.contains(&1.0))
    }

    pub fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n_states {
            Ok(())
        } else {
            Err(invalid(format!("state {state} out of range (n_states = {})", self.n_states)))
        }
    }

    pub fn check_action(&self, action: usize) -> Result<()> {
        if action < self.n_actions {
            Ok(())
        } else {
            Err(invalid(format!("action {action} out of range (n_actions = {})", self.n_actions)))
        }
    }

    /// Same dynamics, every reward mapped through `f`.
    pub fn map_rewards(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            reward: self.reward.iter().map(|r| f(*r)).collect(),
            ..self.clone()
        }
    }

    fn nested(&self, flat: &[f64]) -> Vec<Vec<Vec<f64>>> {
        flat.chunks(self.n_actions * self.n_states)
            .map(|s| s.chunks(self.n_states).map(<[f64]>::to_vec).collect())
            .collect()
    }
}

/// Samples a transition. Consumes exactly one uniform draw from `rng`.
pub fn step(
    env: &MarkovEnv,
    state: usize,
    action: usize,
    rng: &mut RngStream,
) -> Result<(usize, f64)> {
    env.check_state(state)?;
    env.check_action(action)?;
    let next = sample_index(env.transition(state, action), rng);
    Ok((next, env.reward(state, action, next)))
}

fn sample_index(probs: &[f64], rng: &mut RngStream) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // rounding left u above the final cumulative sum
    last_positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Deterministic { actions: Vec<usize> },
    Stochastic { probs: Vec<Vec<f64>> },
    Greedy,
    EpsilonGreedy { epsilon: f64 },
}

impl Policy {
    pub fn deterministic(actions: Vec<usize>) -> Self {
        Policy::Deterministic { actions }
    }

    pub fn stochastic(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(invalid(format!("policy row {s} has a negative entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(invalid(format!("policy row {s} sums to {total}")));
            }
        }
        Ok(Policy::Stochastic { probs })
    }

    pub fn epsilon_greedy(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid(format!("epsilon {epsilon} not in [0, 1]")));
        }
        Ok(Policy::EpsilonGreedy { epsilon })
    }

    pub fn needs_estimate(&self) -> bool {
        matches!(self, Policy::Greedy | Policy::EpsilonGreedy { .. })
    }

    /// Action distribution at `state`.
    pub fn action_probs(
        &self,
        state: usize,
        n_actions: usize,
        q: Option<&TabularEstimate>,
    ) -> Result<Vec<f64>> {
        match self {
            Policy::Deterministic { actions } => {
                let a = *actions
                    .get(state)
                    .ok_or_else(|| invalid(format!("policy has no entry for state {state}")))?;
                if a >= n_actions {
                    return Err(invalid(format!("policy action {a} out of range")));
                }
                let mut probs = vec![0.0; n_actions];
                probs[a] = 1.0;
                Ok(probs)
            }
            Policy::Stochastic { probs } => {
                let row = probs
                    .get(state)
                    .ok_or_else(|| invalid(format!("policy has no entry for state {state}")))?;
                if row.len() != n_actions {
                    return Err(invalid(format!("policy row {state} has wrong length")));
                }
                Ok(row.clone())
            }
            Policy::Greedy => {
                let q = require_q(q)?;
                let mut probs = vec![0.0; n_actions];
                probs[q.greedy_action(state)] = 1.0;
                Ok(probs)
            }
            Policy::EpsilonGreedy { epsilon } => {
                let q = require_q(q)?;
                let mut probs = vec![epsilon / n_actions as f64; n_actions];
                probs[q.greedy_action(state)] += 1.0 - epsilon;
                Ok(probs)
            }
        }
    }
}

fn require_q(q: Option<&TabularEstimate>) -> Result<&TabularEstimate> {
    q.ok_or_else(|| invalid("greedy policies need a Q estimate"))
}

/// Chooses an action. Greedy ties go to the lowest action index.
///
/// Epsilon-greedy consumes one uniform draw to decide whether to explore and
/// a second one only when it does; the table policies draw nothing except
/// the stochastic table (one draw).
pub fn act(
    policy: &Policy,
    state: usize,
    n_actions: usize,
    q: Option<&TabularEstimate>,
    rng: &mut RngStream,
) -> Result<usize> {
    match policy {
        Policy::Deterministic { .. } => {
            let probs = policy.action_probs(state, n_actions, q)?;
            Ok(probs.iter().position(|p| *p == 1.0).unwrap_or(0))
        }
        Policy::Stochastic { .. } => {
            let probs = policy.action_probs(state, n_actions, q)?;
            Ok(sample_index(&probs, rng))
        }
        Policy::Greedy => Ok(require_q(q)?.greedy_action(state)),
        Policy::EpsilonGreedy { epsilon } => {
            let q = require_q(q)?;
            let explore: f64 = rng.random();
            if explore < *epsilon {
                Ok(rng.random_range(0..n_actions))
            } else {
                Ok(q.greedy_action(state))
            }
        }
    }
}

/// The two-state example: `α` loops in place (reward 0 at `s0`, 2 at `s1`),
/// `β` switches states with reward −1. Discount 0.5, start `s0`.
pub fn build_fig1_env() -> MarkovEnv {
    MarkovEnv::deterministic(
        &[vec![S0, S1], vec![S1, S0]],
        &[vec![0.0, -1.0], vec![2.0, -1.0]],
        0.5,
        S0,
    )
    .expect("two-state example is well formed")
}

pub const S0: usize = 0;
pub const S1: usize = 1;
/// Action index of `α` in [`build_fig1_env`].
pub const ALPHA: usize = 0;
/// Action index of `β` in [`build_fig1_env`].
pub const BETA: usize = 1;

/// One interaction `(s_t, a_t, r_t, s_{t+1})`, with `t` starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepTrace {
    pub steps: Vec<Step>,
    pub rng_seed: u64,
}

impl StepTrace {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            steps: Vec::new(),
            rng_seed,
        }
    }

    pub fn push(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        let t = self.steps.len() + 1;
        self.steps.push(Step {
            t,
            state,
            action,
            reward,
            next_state,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Consecutive steps chain and `t` counts up from 1.
    pub fn is_chained(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| s.t == i + 1)
            && self
                .steps
                .windows(2)
                .all(|w| w[0].next_state == w[1].state)
    }
}

/// On-disk environment document.
///
/// ```json
/// {
///   "n_states": 2, "n_actions": 2, "gamma": 0.5, "start": 0,
///   "transitions": [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]],
///   "rewards":     [[0.0, -1.0], [2.0, -1.0]]
/// }
/// ```
///
/// `transitions[s][a][s']` are probabilities. `rewards` is either
/// `[s][a]` (reward independent of the successor) or `[s][a][s']`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    #[serde(default)]
    pub start: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: RewardTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardTable {
    PerTransition(Vec<Vec<Vec<f64>>>),
    PerStateAction(Vec<Vec<f64>>),
}

impl TryFrom<EnvDocument> for MarkovEnv {
    type Error = Error;

    fn try_from(doc: EnvDocument) -> Result<Self> {
        let rewards = match doc.rewards {
            RewardTable::PerTransition(r) => r,
            RewardTable::PerStateAction(r) => r
                .into_iter()
                .map(|row| row.into_iter().map(|x| vec![x; doc.n_states]).collect())
                .collect(),
        };
        let env = MarkovEnv::new(doc.transitions, rewards, doc.gamma, doc.start)?;
        if env.n_states != doc.n_states || env.n_actions != doc.n_actions {
            return Err(invalid(format!(
                "declared shape {}x{} does not match tables {}x{}",
                doc.n_states, doc.n_actions, env.n_states, env.n_actions
            )));
        }
        Ok(env)
    }
}

impl From<MarkovEnv> for EnvDocument {
    fn from(env: MarkovEnv) -> Self {
        EnvDocument {
            n_states: env.n_states,
            n_actions: env.n_actions,
            gamma: env.discount,
            start: env.start_state,
            transitions: env.nested(&env.transition),
            rewards: RewardTable::PerTransition(env.nested(&env.reward)),
        }
    }
}
