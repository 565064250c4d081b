//! Exact solvers checked against simulation and against their defining
//! equations.

use hedonia::env::{act, build_fig1_env, rng_stream, step, Policy};
use hedonia::props::{mean_and_se, random_mdp, random_table_policy, RandomMdpConfig};
use hedonia::value::{
    bellman_optimality_residual, epsilon_greedy_fixed_point, optimal_values, q_from_values, true_policy_value,
};

/// Discounted return from `start`, truncated once `γ^t` is negligible.
fn sampled_return(env: &hedonia::env::MarkovEnv, policy: &Policy, start: usize, seed: u64, episode: u64) -> f64 {
    let mut rng = rng_stream(seed, episode);
    let gamma = env.discount();
    let mut state = start;
    let mut weight = 1.0;
    let mut total = 0.0;
    while weight > 1e-10 {
        let a = act(policy, state, env.n_actions(), None, &mut rng).unwrap();
        let (next, r) = step(env, state, a, &mut rng).unwrap();
        total += weight * r;
        weight *= gamma;
        state = next;
    }
    total
}

#[test]
fn policy_values_match_monte_carlo() {
    let config = RandomMdpConfig::default();
    for trial in 0..10 {
        let mut rng = rng_stream(100, trial);
        let env = random_mdp(&mut rng, &config);
        let policy = random_table_policy(&mut rng, env.n_states(), env.n_actions(), false);
        let exact = true_policy_value(&env, &policy).unwrap();
        let s = env.start_state();
        let (mean, se) = mean_and_se((0..4000).map(|e| sampled_return(&env, &policy, s, trial, e)));
        assert!(
            (mean - exact[s]).abs() < 4.0 * se,
            "trial {trial}: exact {} vs Monte Carlo {mean} ± {se}",
            exact[s]
        );
    }
}

#[test]
fn value_iteration_satisfies_bellman_optimality() {
    let config = RandomMdpConfig::default();
    for trial in 0..50 {
        let mut rng = rng_stream(200, trial);
        let env = random_mdp(&mut rng, &config);
        let opt = optimal_values(&env);
        assert!(bellman_optimality_residual(&env, &opt.v) < 1e-10);
        let greedy: Vec<usize> = (0..env.n_states()).map(|s| opt.q.greedy_action(s)).collect();
        let v_greedy = true_policy_value(&env, &Policy::deterministic(greedy)).unwrap();
        for (a, b) in v_greedy.iter().zip(&opt.v) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn sarsa_fixed_point_is_self_consistent() {
    let eps = 0.2;
    let env = build_fig1_env();
    let q = epsilon_greedy_fixed_point(&env, eps).unwrap();
    let policy = Policy::epsilon_greedy(eps).unwrap();
    let v: Vec<f64> = (0..env.n_states())
        .map(|s| {
            let probs = policy.action_probs(s, env.n_actions(), Some(&q)).unwrap();
            probs.iter().enumerate().map(|(a, p)| p * q.get(s, a)).sum()
        })
        .collect();
    let backup = q_from_values(&env, &v);
    for s in 0..env.n_states() {
        for a in 0..env.n_actions() {
            assert!((backup.get(s, a) - q.get(s, a)).abs() < 1e-9);
        }
    }
    // ε-greedy on the two-state example still prefers s1's self-loop
    assert_eq!(q.greedy_action(1), 0);
}
