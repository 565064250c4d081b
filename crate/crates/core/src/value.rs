//! Exact value computation for known MDPs and the agent-side estimators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::env::{MarkovEnv, Policy};
use crate::error::{invalid, Error, Result};

/// Stopping threshold for value iteration (sup-norm change between sweeps).
pub const VALUE_ITERATION_TOLERANCE: f64 = 1e-12;
pub const VALUE_ITERATION_MAX_SWEEPS: usize = 1_000_000;

/// How an agent turns its Q table into the scalar `V̂(s)` used for happiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueRule {
    /// `V̂(s) = max_a q(s, a)`: the evaluation target of Q-learning.
    Greedy,
    /// `V̂(s) = q(s, a)` for the action actually selected at `s` (SARSA).
    OnPolicy,
}

/// Dense Q table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TabularEstimate {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
}

impl TabularEstimate {
    pub fn filled(n_states: usize, n_actions: usize, value: f64) -> Self {
        Self {
            n_states,
            n_actions,
            q: vec![value; n_states * n_actions],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("Q table must be non-empty"));
        }
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(invalid("Q table rows have different lengths"));
        }
        let q: Vec<f64> = rows.into_iter().flatten().collect();
        if q.iter().any(|x| !x.is_finite()) {
            return Err(invalid("Q table has non-finite entries"));
        }
        Ok(Self {
            n_states,
            n_actions,
            q,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.q[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Lowest-index argmax.
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state)[self.greedy_action(state)]
    }

    /// `V̂(s)` under `rule`; `chosen` is the action selected at `s` and is only
    /// read by [`ValueRule::OnPolicy`].
    pub fn state_value(&self, state: usize, rule: ValueRule, chosen: usize) -> f64 {
        match rule {
            ValueRule::Greedy => self.max_value(state),
            ValueRule::OnPolicy => self.get(state, chosen),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            q: self.q.iter().map(|x| f(*x)).collect(),
            ..self.clone()
        }
    }

    pub fn check_shape(&self, env: &MarkovEnv) -> Result<()> {
        if self.n_states == env.n_states() && self.n_actions == env.n_actions() {
            Ok(())
        } else {
            Err(invalid(format!(
                "Q table is {}x{} but environment is {}x{}",
                self.n_states,
                self.n_actions,
                env.n_states(),
                env.n_actions()
            )))
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.n_actions).map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for TabularEstimate {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<TabularEstimate> for Vec<Vec<f64>> {
    fn from(q: TabularEstimate) -> Self {
        q.rows()
    }
}

/// `V^π` for a table policy, by a direct solve of `(I − γ P_π) V = R_π`.
pub fn true_policy_value(env: &MarkovEnv, policy: &Policy) -> Result<Vec<f64>> {
    if policy.needs_estimate() {
        return Err(invalid("true_policy_value needs a table policy"));
    }
    let probs = (0..env.n_states())
        .map(|s| policy.action_probs(s, env.n_actions(), None))
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluate_action_probs(env, &probs))
}

/// Policy evaluation for explicit per-state action distributions.
pub fn evaluate_action_probs(env: &MarkovEnv, probs: &[Vec<f64>]) -> Vec<f64> {
    let n = env.n_states();
    let gamma = env.discount();
    let mut system = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in 0..n {
        for (a, pa) in probs[s].iter().enumerate() {
            if *pa == 0.0 {
                continue;
            }
            rhs[s] += pa * env.expected_reward(s, a);
            for (next, p) in env.transition(s, a).iter().enumerate() {
                system[(s, next)] -= gamma * pa * p;
            }
        }
    }
    // I − γP is strictly diagonally dominant for γ < 1, hence invertible.
    let solution = system
        .lu()
        .solve(&rhs)
        .expect("I - γP is nonsingular for γ < 1");
    solution.iter().copied().collect()
}

/// One-step lookahead `Q(s,a) = Σ_{s'} P(s'|s,a) [r(s,a,s') + γ V(s')]`.
pub fn q_from_values(env: &MarkovEnv, values: &[f64]) -> TabularEstimate {
    let gamma = env.discount();
    let mut q = TabularEstimate::filled(env.n_states(), env.n_actions(), 0.0);
    for s in 0..env.n_states() {
        for a in 0..env.n_actions() {
            let backup: f64 = env
                .transition(s, a)
                .iter()
                .zip(env.rewards(s, a))
                .zip(values)
                .map(|((p, r), v)| p * (r + gamma * v))
                .sum();
            q.set(s, a, backup);
        }
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalValues {
    pub v: Vec<f64>,
    pub q: TabularEstimate,
    pub sweeps: usize,
}

/// Value iteration until the sup-norm change drops below
/// [`VALUE_ITERATION_TOLERANCE`].
pub fn optimal_values(env: &MarkovEnv) -> OptimalValues {
    let mut v = vec![0.0; env.n_states()];
    let mut sweeps = 0;
    loop {
        let q = q_from_values(env, &v);
        let next: Vec<f64> = (0..env.n_states()).map(|s| q.max_value(s)).collect();
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        sweeps += 1;
        if delta < VALUE_ITERATION_TOLERANCE || sweeps >= VALUE_ITERATION_MAX_SWEEPS {
            break;
        }
    }
    // Polish: evaluate the greedy policy exactly and keep it if it is at
    // least as close to the Bellman fixed point.
    let q = q_from_values(env, &v);
    let greedy = Policy::deterministic((0..env.n_states()).map(|s| q.greedy_action(s)).collect());
    if let Ok(exact) = true_policy_value(env, &greedy) {
        if bellman_optimality_residual(env, &exact) <= bellman_optimality_residual(env, &v) {
            v = exact;
        }
    }
    let q = q_from_values(env, &v);
    OptimalValues { v, q, sweeps }
}

/// `max_s |V(s) − max_a Q_V(s,a)|`.
pub fn bellman_optimality_residual(env: &MarkovEnv, v: &[f64]) -> f64 {
    let q = q_from_values(env, v);
    (0..env.n_states())
        .map(|s| (v[s] - q.max_value(s)).abs())
        .fold(0.0, f64::max)
}

/// Fixed point of on-policy learning under an ε-greedy behaviour policy:
/// `Q = Q^π` where `π` is ε-greedy with respect to `Q` itself. Found by
/// policy iteration over ε-greedy policies, starting from `Q*`.
pub fn epsilon_greedy_fixed_point(env: &MarkovEnv, epsilon: f64) -> Result<TabularEstimate> {
    let policy = Policy::epsilon_greedy(epsilon)?;
    let mut q = optimal_values(env).q;
    for _ in 0..1000 {
        let probs = (0..env.n_states())
            .map(|s| policy.action_probs(s, env.n_actions(), Some(&q)))
            .collect::<Result<Vec<_>>>()?;
        let v = evaluate_action_probs(env, &probs);
        let next = q_from_values(env, &v);
        let stable = (0..env.n_states()).all(|s| next.greedy_action(s) == q.greedy_action(s));
        q = next;
        if stable {
            return Ok(q);
        }
    }
    Err(invalid("ε-greedy policy iteration did not stabilise"))
}

/// `V̂ = mean(rewards) / (1 − γ)`; an empty history is valued at 0.
pub fn empirical_value_estimate(rewards: &[f64], discount: f64) -> f64 {
    if rewards.is_empty() {
        return 0.0;
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    mean / (1.0 - discount)
}

/// What an agent conditions on when forming its one-step expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistoryContext<'a> {
    /// Markov agents: the current state, action not yet chosen.
    State(usize),
    /// Reward-averaging agents: every reward seen so far.
    Rewards(&'a [f64]),
}

/// The two one-step subjective expectations that split happiness:
/// `E[r_t | h]` and `E[V̂(h a o r) | h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NextStepBelief {
    pub expected_reward: f64,
    pub expected_next_value: f64,
}

impl NextStepBelief {
    /// The belief implied by a bare estimate: the agent expects
    /// `expected_reward` and attributes the rest of `V̂(h)` to the future.
    /// Satisfies `V̂(h) = E[r] + γ E[V̂']` by construction, which is the only
    /// constraint a model-free agent's value places on its subjective law.
    pub fn implied(v_hat: f64, expected_reward: f64, discount: f64) -> Self {
        Self {
            expected_reward,
            expected_next_value: (v_hat - expected_reward) / discount,
        }
    }

    /// `E[r] + γ E[V̂']`, which equals `V̂(h)` for a consistent belief.
    pub fn implied_value(&self, discount: f64) -> f64 {
        self.expected_reward + discount * self.expected_next_value
    }
}

/// A probability law over future rewards whose expected discounted return
/// is the agent's value estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum SubjectiveModel {
    /// The agent believes `model` and follows the table `policy`;
    /// its estimate is `V^π` under `model`.
    Mdp {
        model: MarkovEnv,
        policy: Policy,
        values: Vec<f64>,
    },
    /// Future rewards are i.i.d. draws from the empirical distribution of
    /// the rewards seen so far.
    Empirical { discount: f64 },
}

impl SubjectiveModel {
    pub fn mdp(model: MarkovEnv, policy: Policy) -> Result<Self> {
        let values = true_policy_value(&model, &policy)?;
        Ok(SubjectiveModel::Mdp {
            model,
            policy,
            values,
        })
    }

    pub fn empirical(discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount < 1.0) {
            return Err(invalid(format!("discount {discount} not in (0, 1)")));
        }
        Ok(SubjectiveModel::Empirical { discount })
    }

    pub fn discount(&self) -> f64 {
        match self {
            SubjectiveModel::Mdp { model, .. } => model.discount(),
            SubjectiveModel::Empirical { discount } => *discount,
        }
    }

    /// The paired estimate `V̂(h)`.
    pub fn estimate(&self, ctx: HistoryContext<'_>) -> Result<f64> {
        match (self, ctx) {
            (SubjectiveModel::Mdp { values, .. }, HistoryContext::State(s)) => {
                values.get(s).copied().ok_or(Error::MissingState(s))
            }
            (SubjectiveModel::Empirical { discount }, HistoryContext::Rewards(rewards)) => {
                Ok(empirical_value_estimate(rewards, *discount))
            }
            _ => Err(mismatch()),
        }
    }

    /// Exact one-step expectations, by enumeration of the model's
    /// next-step distribution.
    pub fn belief(&self, ctx: HistoryContext<'_>) -> Result<NextStepBelief> {
        match (self, ctx) {
            (
                SubjectiveModel::Mdp {
                    model,
                    policy,
                    values,
                },
                HistoryContext::State(s),
            ) => {
                model.check_state(s)?;
                let probs = policy.action_probs(s, model.n_actions(), None)?;
                let mut expected_reward = 0.0;
                let mut expected_next_value = 0.0;
                for (a, pa) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                    expected_reward += pa * model.expected_reward(s, a);
                    expected_next_value += pa * model.expect_next(s, a, |next| values[next]);
                }
                Ok(NextStepBelief {
                    expected_reward,
                    expected_next_value,
                })
            }
            (SubjectiveModel::Empirical { discount }, HistoryContext::Rewards(rewards)) => {
                if rewards.is_empty() {
                    return Err(Error::UnsupportedModel(
                        "empirical model has no next-step distribution before the first reward"
                            .into(),
                    ));
                }
                let weight = 1.0 / rewards.len() as f64;
                let mut extended = rewards.to_vec();
                extended.push(0.0);
                let mut expected_reward = 0.0;
                let mut expected_next_value = 0.0;
                for r in rewards {
                    *extended.last_mut().expect("non-empty") = *r;
                    expected_reward += weight * r;
                    expected_next_value += weight * empirical_value_estimate(&extended, *discount);
                }
                Ok(NextStepBelief {
                    expected_reward,
                    expected_next_value,
                })
            }
            _ => Err(mismatch()),
        }
    }
}

fn mismatch() -> Error {
    Error::UnsupportedModel("history context does not match the model".into())
}
