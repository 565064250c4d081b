//! Exact-enumeration checks of the structural happiness properties.
//!
//! Each `verify_*` samples random finite MDPs from a seeded stream and
//! checks a property at every state (or every reachable step) by summing
//! over the finite next-step distribution. Monte Carlo appears only as an
//! independent cross-check.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::agents::{run_instrumented, Algorithm, LearnerConfig};
use crate::env::{act, rng_stream, step, MarkovEnv, Policy, RngStream};
use crate::error::{invalid, Result};
use crate::happiness::{
    decompose_luck_pessimism, decompose_payout_goodnews, happiness_td, objective_belief,
    scale_problem, split_luck_pessimism, split_payout_news,
};
use crate::value::{
    epsilon_greedy_fixed_point, optimal_values, true_policy_value, HistoryContext, SubjectiveModel,
    TabularEstimate, ValueRule,
};

/// Tolerance for the exact identities.
pub const EXACT_TOL: f64 = 1e-9;
/// Upper bound on the expected happiness of an off-policy agent holding `V*`.
pub const OFF_POLICY_BOUND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomMdpConfig {
    pub min_states: usize,
    pub max_states: usize,
    pub min_actions: usize,
    pub max_actions: usize,
    pub discount: f64,
}

impl Default for RandomMdpConfig {
    fn default() -> Self {
        Self {
            min_states: 2,
            max_states: 6,
            min_actions: 2,
            max_actions: 3,
            discount: 0.9,
        }
    }
}

/// Transition rows uniform on the simplex, rewards uniform on `[−1, 1]`.
pub fn random_mdp(rng: &mut RngStream, config: &RandomMdpConfig) -> MarkovEnv {
    let n_states = rng.random_range(config.min_states..=config.max_states);
    let n_actions = rng.random_range(config.min_actions..=config.max_actions);
    let mut transitions = Vec::with_capacity(n_states);
    let mut rewards = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut p_s = Vec::with_capacity(n_actions);
        let mut r_s = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            p_s.push(simplex_point(rng, n_states));
            r_s.push((0..n_states).map(|_| rng.random_range(-1.0..=1.0)).collect());
        }
        transitions.push(p_s);
        rewards.push(r_s);
    }
    MarkovEnv::new(transitions, rewards, config.discount, 0).expect("sampled rows are valid")
}

fn simplex_point(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|x| x / total).collect();
    // absorb rounding into the largest entry so the row sums to one
    let drift = 1.0 - row.iter().sum::<f64>();
    let largest = (0..n)
        .max_by(|&a, &b| row[a].total_cmp(&row[b]))
        .expect("non-empty row");
    row[largest] += drift;
    row
}

/// A random table policy: deterministic or uniform-on-the-simplex rows.
pub fn random_table_policy(rng: &mut RngStream, n_states: usize, n_actions: usize, deterministic: bool) -> Policy {
    if deterministic {
        Policy::deterministic((0..n_states).map(|_| rng.random_range(0..n_actions)).collect())
    } else {
        Policy::Stochastic {
            probs: (0..n_states).map(|_| simplex_point(rng, n_actions)).collect(),
        }
    }
}

/// `Σ_a π(a|s) Σ_{s'} P(s'|s,a) (r(s,a,s') + γ V(s') − V(s))`.
pub fn exact_step_expectation(
    env: &MarkovEnv,
    policy: &Policy,
    q: Option<&TabularEstimate>,
    values: &[f64],
    state: usize,
) -> Result<f64> {
    let belief = objective_belief(env, policy, q, state, values)?;
    Ok(belief.expected_reward + env.discount() * belief.expected_next_value - values[state])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarsaComparison {
    pub epsilon: f64,
    pub steps: usize,
    pub mean_q_learning: f64,
    pub se_q_learning: f64,
    pub mean_sarsa: f64,
    pub se_sarsa: f64,
    pub combined_se: f64,
    pub q_learning_negative: bool,
}

/// Result of one verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub claim: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<SarsaComparison>,
}

impl Report {
    fn new(claim: &str, trials: usize) -> Self {
        Self {
            claim: claim.to_string(),
            trials,
            max_deviation: 0.0,
            pass: true,
            checks: Some(0),
            counterexample: None,
            monte_carlo: None,
            comparison: None,
        }
    }

    /// Records one check; the first failure keeps its description.
    fn record(&mut self, deviation: f64, ok: bool, describe: impl FnOnce() -> String) {
        if let Some(n) = self.checks.as_mut() {
            *n += 1;
        }
        if deviation > self.max_deviation || deviation.is_nan() {
            self.max_deviation = deviation;
        }
        if !ok && self.pass {
            self.pass = false;
            self.counterexample = Some(describe());
        }
    }
}

fn describe_mdp(trial: usize, env: &MarkovEnv, policy: &Policy, detail: String) -> String {
    format!(
        "trial {trial}: {detail}; env = {}; policy = {}",
        serde_json::to_string(env).unwrap_or_default(),
        serde_json::to_string(policy).unwrap_or_default()
    )
}

/// Happiness equals payout plus good news for model-based agents, and the
/// luck / pessimism parts add up; luck has zero mean under the true law.
///
/// Per trial: a true MDP, a table policy, and two subjective models (the
/// true MDP and an unrelated random MDP of the same shape). Every step with
/// positive probability is enumerated. An empirical reward-averaging model
/// is checked on a random reward history as well.
pub fn verify_prop1(trials: usize, seed: u64) -> Result<Report> {
    let config = RandomMdpConfig::default();
    let mut report = Report::new("happiness = payout + good news for model-based agents", trials);

    for trial in 0..trials {
        let mut rng = rng_stream(seed, trial as u64);
        let env = random_mdp(&mut rng, &config);
        let (n, m) = (env.n_states(), env.n_actions());
        let policy = random_table_policy(&mut rng, n, m, trial % 2 == 0);
        let mut believed = random_mdp(
            &mut rng,
            &RandomMdpConfig {
                min_states: n,
                max_states: n,
                min_actions: m,
                max_actions: m,
                ..config
            },
        );
        if trial % 3 == 0 {
            // share dynamics, disagree on rewards only
            believed = env.map_rewards(|r| 0.5 * r - 0.25);
        }

        for model_env in [env.clone(), believed] {
            let model = SubjectiveModel::mdp(model_env, policy.clone())?;
            let SubjectiveModel::Mdp { values, .. } = &model else { unreachable!() };
            let gamma = env.discount();
            for s in 0..n {
                let probs = policy.action_probs(s, m, None)?;
                let mut luck_mean = 0.0;
                for (a, pa) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                    for (next, p) in env.transition(s, a).iter().enumerate().filter(|(_, p)| **p > 0.0) {
                        let r = env.reward(s, a, next);
                        let h = happiness_td(r, values[next], values[s], gamma)?;
                        let split = decompose_payout_goodnews(r, values[next], &model, HistoryContext::State(s))?;
                        let lp = decompose_luck_pessimism(r, values[next], &model, &env, &policy, s)?;
                        let dev = (h - (split.payout + split.good_news))
                            .abs()
                            .max((split.payout - (lp.luck_payout + lp.pessimism_payout)).abs())
                            .max((split.good_news / gamma - (lp.luck_news + lp.pessimism_news)).abs());
                        report.record(dev, dev < EXACT_TOL, || {
                            describe_mdp(trial, &env, &policy, format!("step ({s}, {a}, {next}) deviation {dev:e}"))
                        });
                        luck_mean += pa * p * (lp.luck_payout + gamma * lp.luck_news);
                    }
                }
                let dev = luck_mean.abs();
                report.record(dev, dev < EXACT_TOL, || {
                    describe_mdp(trial, &env, &policy, format!("state {s}: mean luck {luck_mean:e}"))
                });
            }
        }

        let discount = rng.random_range(0.05..0.95);
        let empirical = SubjectiveModel::empirical(discount)?;
        let len = rng.random_range(1..=20);
        let history: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ctx = HistoryContext::Rewards(&history);
        let v_prev = empirical.estimate(ctx)?;
        for r in [history[0], rng.random_range(-10.0..10.0)] {
            let mut extended = history.clone();
            extended.push(r);
            let v_next = empirical.estimate(HistoryContext::Rewards(&extended))?;
            let h = happiness_td(r, v_next, v_prev, discount)?;
            let split = decompose_payout_goodnews(r, v_next, &empirical, ctx)?;
            let dev = (h - (split.payout + split.good_news)).abs();
            report.record(dev, dev < EXACT_TOL, || {
                format!("trial {trial}: empirical model, history {history:?}, reward {r}, deviation {dev:e}")
            });
        }
    }
    Ok(report)
}

/// Agents whose estimate is `V^π` have zero expected happiness at every
/// state. `mc_samples` steps, split across the trials, provide a sampled
/// cross-check of the pooled mean (skipped when zero).
pub fn verify_prop2(trials: usize, seed: u64, mc_samples: usize) -> Result<Report> {
    let config = RandomMdpConfig::default();
    let mut report = Report::new("informed agents have zero expected happiness", trials);
    let mut mc_sum = 0.0;
    let mut mc_sum_sq = 0.0;
    let mut mc_count = 0usize;
    let per_trial = mc_samples.checked_div(trials).unwrap_or(0);

    for trial in 0..trials {
        let mut rng = rng_stream(seed, trial as u64);
        let env = random_mdp(&mut rng, &config);
        let policy = random_table_policy(&mut rng, env.n_states(), env.n_actions(), trial % 2 == 0);
        let values = true_policy_value(&env, &policy)?;
        for s in 0..env.n_states() {
            let e = exact_step_expectation(&env, &policy, None, &values, s)?;
            report.record(e.abs(), e.abs() < EXACT_TOL, || {
                describe_mdp(trial, &env, &policy, format!("state {s}: expectation {e:e}"))
            });
        }

        let extra = if trial + 1 == trials { mc_samples - per_trial * trials } else { 0 };
        let mut sim = rng_stream(seed ^ 0x9e37_79b9_7f4a_7c15, trial as u64);
        let mut state = env.start_state();
        for _ in 0..per_trial + extra {
            let a = act(&policy, state, env.n_actions(), None, &mut sim)?;
            let (next, r) = step(&env, state, a, &mut sim)?;
            let h = happiness_td(r, values[next], values[state], env.discount())?;
            mc_sum += h;
            mc_sum_sq += h * h;
            mc_count += 1;
            state = next;
        }
    }

    if mc_count > 1 {
        let n = mc_count as f64;
        let mean = mc_sum / n;
        let var = (mc_sum_sq - n * mean * mean) / (n - 1.0);
        let std_error = (var.max(0.0) / n).sqrt();
        let pass = mean.abs() <= 3.0 * std_error;
        if !pass && report.pass {
            report.pass = false;
            report.counterexample = Some(format!("Monte Carlo mean {mean:e} exceeds 3 SE ({std_error:e})"));
        }
        report.monte_carlo = Some(MonteCarloCheck {
            samples: mc_count,
            mean,
            std_error,
            pass,
        });
    }
    Ok(report)
}

/// An agent holding `V*` but following another policy is unhappy in
/// expectation, and exactly neutral where the behaviour is optimal.
/// `max_deviation` is the largest of the positive expectations and the
/// absolute expectations at optimally-behaving states.
pub fn verify_prop3(trials: usize, policies_per_mdp: usize, seed: u64) -> Result<Report> {
    let config = RandomMdpConfig::default();
    let mut report = Report::new("off-policy agents holding V* have non-positive expected happiness", trials);

    for trial in 0..trials {
        let mut rng = rng_stream(seed, trial as u64);
        let env = random_mdp(&mut rng, &config);
        let opt = optimal_values(&env);
        for k in 0..policies_per_mdp {
            let behaviour = random_table_policy(&mut rng, env.n_states(), env.n_actions(), k % 2 == 0);
            for s in 0..env.n_states() {
                let e = exact_step_expectation(&env, &behaviour, None, &opt.v, s)?;
                let probs = behaviour.action_probs(s, env.n_actions(), None)?;
                let optimal_here = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .all(|(a, _)| opt.q.get(s, a) >= opt.v[s] - EXACT_TOL);
                let (dev, ok) = if optimal_here {
                    (e.abs(), e <= OFF_POLICY_BOUND && e.abs() < EXACT_TOL)
                } else {
                    (e.max(0.0), e <= OFF_POLICY_BOUND)
                };
                report.record(dev, ok, || {
                    describe_mdp(trial, &env, &behaviour, format!("state {s}: expectation {e:e}, optimal={optimal_here}"))
                });
            }
        }
    }
    Ok(report)
}

/// Scale grid exercised by [`verify_scaling`].
pub const SCALE_FACTORS: [f64; 3] = [0.5, 2.0, 10.0];
pub const SHIFTS: [f64; 3] = [-3.0, 0.0, 7.0];

/// Rescaling rewards by `c r + d` (with the estimate rescaled to match)
/// multiplies every step's happiness by `c`, so its sign never changes.
/// Learners are run side by side on the original and rescaled problems
/// with the same seed; `max_deviation` is `max |ĥ_scaled − c ĥ|`.
pub fn verify_scaling(trials: usize, seed: u64, steps: usize) -> Result<Report> {
    let config = RandomMdpConfig::default();
    let mut report = Report::new("rescaled rewards scale happiness by c", trials);

    for trial in 0..trials {
        let mut rng = rng_stream(seed, trial as u64);
        let env = random_mdp(&mut rng, &config);
        let rows = (0..env.n_states())
            .map(|_| (0..env.n_actions()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let initial_q = TabularEstimate::from_rows(rows)?;
        let algorithm = if trial % 2 == 0 { Algorithm::QLearning } else { Algorithm::Sarsa };
        let learner = LearnerConfig {
            algorithm,
            learning_rate: 0.1,
            exploration: 0.1,
            initial_q,
            horizon: steps,
        };
        let base = run_instrumented(&env, &learner, seed.wrapping_add(trial as u64))?;

        for c in SCALE_FACTORS {
            for d in SHIFTS {
                let (scaled_env, scaled_q) = scale_problem(&env, &learner.initial_q, c, d)?;
                let scaled_learner = LearnerConfig {
                    initial_q: scaled_q,
                    ..learner.clone()
                };
                let scaled = run_instrumented(&scaled_env, &scaled_learner, seed.wrapping_add(trial as u64))?;
                for (a, b) in base.records.iter().zip(&scaled.records) {
                    let dev = (b.happiness - c * a.happiness).abs();
                    let sign_ok = a.happiness.abs() < EXACT_TOL
                        || a.happiness.signum() == b.happiness.signum();
                    report.record(dev, dev < EXACT_TOL && sign_ok, || {
                        format!(
                            "trial {trial}, c={c}, d={d}, t={}: h={:e}, scaled={:e}",
                            a.t, a.happiness, b.happiness
                        )
                    });
                }
                if base.trace.steps.iter().map(|s| (s.state, s.action)).ne(scaled
                    .trace
                    .steps
                    .iter()
                    .map(|s| (s.state, s.action)))
                {
                    report.record(0.0, false, || {
                        format!("trial {trial}, c={c}, d={d}: rescaled run took different actions")
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Post-convergence comparison of an off-policy (Q-learning) and an
/// on-policy (SARSA) agent following the same ε-greedy behaviour.
///
/// Both estimates are frozen at their converged tables, computed exactly:
/// `Q*` for Q-learning and the ε-greedy fixed point for SARSA. Each agent is
/// then run for `steps` steps with the same seed and its per-step happiness
/// averaged. The claim passes when SARSA's mean is no lower than
/// Q-learning's minus three combined standard errors.
pub fn verify_sarsa_happier(env: &MarkovEnv, epsilon: f64, steps: usize, seed: u64) -> Result<Report> {
    if steps < 2 {
        return Err(invalid("comparison needs at least two steps"));
    }
    let q_star = optimal_values(env).q;
    let q_sarsa = epsilon_greedy_fixed_point(env, epsilon)?;
    let frozen = |rule: ValueRule, initial_q: TabularEstimate| LearnerConfig {
        algorithm: Algorithm::FixedEstimate { rule },
        learning_rate: 1.0,
        exploration: epsilon,
        initial_q,
        horizon: steps,
    };
    let off = run_instrumented(env, &frozen(ValueRule::Greedy, q_star), seed)?;
    let on = run_instrumented(env, &frozen(ValueRule::OnPolicy, q_sarsa), seed)?;

    let (mean_q, se_q) = mean_and_se(off.records.iter().map(|r| r.happiness));
    let (mean_s, se_s) = mean_and_se(on.records.iter().map(|r| r.happiness));
    let combined_se = (se_q * se_q + se_s * se_s).sqrt();
    let pass = mean_s >= mean_q - 3.0 * combined_se;

    let mut report = Report::new("SARSA is at least as happy as Q-learning after convergence", 1);
    report.checks = None;
    report.max_deviation = (mean_q - mean_s).max(0.0);
    report.pass = pass;
    if !pass {
        report.counterexample = Some(format!(
            "mean SARSA {mean_s:e} < mean Q-learning {mean_q:e} − 3·{combined_se:e}"
        ));
    }
    report.comparison = Some(SarsaComparison {
        epsilon,
        steps,
        mean_q_learning: mean_q,
        se_q_learning: se_q,
        mean_sarsa: mean_s,
        se_sarsa: se_s,
        combined_se,
        q_learning_negative: mean_q < 0.0,
    });
    Ok(report)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Exact luck and payout/news split for every enumerable step of an agent
/// holding `model` in `env` under table `policy`. Returns the largest
/// identity violation; used by the property tests.
pub fn max_identity_violation(env: &MarkovEnv, model: &SubjectiveModel, policy: &Policy) -> Result<f64> {
    let SubjectiveModel::Mdp { values, .. } = model else {
        return Err(invalid("needs a state-based model"));
    };
    let gamma = env.discount();
    let mut worst: f64 = 0.0;
    for s in 0..env.n_states() {
        let subjective = model.belief(HistoryContext::State(s))?;
        let objective = objective_belief(env, policy, None, s, values)?;
        let probs = policy.action_probs(s, env.n_actions(), None)?;
        for (a, _) in probs.iter().enumerate().filter(|(_, p)| **p > 0.0) {
            for (next, _) in env.transition(s, a).iter().enumerate().filter(|(_, p)| **p > 0.0) {
                let r = env.reward(s, a, next);
                let h = happiness_td(r, values[next], values[s], gamma)?;
                let pn = split_payout_news(r, values[next], &subjective, gamma);
                let lp = split_luck_pessimism(r, values[next], &subjective, &objective);
                worst = worst
                    .max((h - pn.payout - pn.good_news).abs())
                    .max((pn.payout - lp.luck_payout - lp.pessimism_payout).abs())
                    .max((pn.good_news / gamma - lp.luck_news - lp.pessimism_news).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_fig1_env, ALPHA, BETA, S0, S1};

    #[test]
    fn fig1_off_policy_expectations() {
        let env = build_fig1_env();
        let v_star = optimal_values(&env).v;
        let stay = Policy::deterministic(vec![ALPHA, ALPHA]);
        let e = exact_step_expectation(&env, &stay, None, &v_star, S0).unwrap();
        assert!((e + 0.5).abs() < 1e-9);
        let best = Policy::deterministic(vec![BETA, ALPHA]);
        for s in [S0, S1] {
            assert!(exact_step_expectation(&env, &best, None, &v_star, s).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn zero_env_zero_expectation() {
        let env = build_fig1_env().map_rewards(|_| 0.0);
        let policy = Policy::deterministic(vec![BETA, BETA]);
        for s in [S0, S1] {
            assert_eq!(exact_step_expectation(&env, &policy, None, &[0.0, 0.0], s).unwrap(), 0.0);
        }
    }

    #[test]
    fn random_mdps_are_valid_and_reproducible() {
        let config = RandomMdpConfig::default();
        for i in 0..50 {
            let a = random_mdp(&mut rng_stream(9, i), &config);
            let b = random_mdp(&mut rng_stream(9, i), &config);
            assert_eq!(a, b);
            assert!((2..=6).contains(&a.n_states()));
            assert!((2..=3).contains(&a.n_actions()));
            for s in 0..a.n_states() {
                for act in 0..a.n_actions() {
                    let total: f64 = a.transition(s, act).iter().sum();
                    assert!((total - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(verify_prop1(10, 4).unwrap().pass);
        let p2 = verify_prop2(10, 4, 10_000).unwrap();
        assert!(p2.pass, "{p2:?}");
        assert!(verify_prop3(10, 4, 4).unwrap().pass);
        assert!(verify_scaling(3, 4, 50).unwrap().pass);
    }

    #[test]
    fn greedy_comparison_is_neutral() {
        let env = build_fig1_env();
        let report = verify_sarsa_happier(&env, 0.0, 1000, 1).unwrap();
        let cmp = report.comparison.unwrap();
        assert_eq!(cmp.mean_q_learning, 0.0);
        assert_eq!(cmp.mean_sarsa, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn mean_and_se_small_cases() {
        let (m, se) = mean_and_se([1.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
        assert_eq!(mean_and_se(std::iter::empty()), (0.0, 0.0));
    }
}
