//! Happiness depends on the reward scale: `r ↦ c r + d` multiplies it by
//! `c` and leaves its sign alone, so two agents' happiness is only
//! comparable on a shared scale. Judging one agent's transitions with
//! another agent's values is possible when they share a state space.
//!
//!     cargo run -p hedonia --example scaling_and_commensurability

use hedonia::agents::{run_instrumented, Algorithm, LearnerConfig};
use hedonia::env::build_fig1_env;
use hedonia::happiness::{cross_happiness, scale_problem};
use hedonia::value::{optimal_values, TabularEstimate};

fn main() -> hedonia::Result<()> {
    let env = build_fig1_env();
    let learner = LearnerConfig {
        algorithm: Algorithm::QLearning,
        learning_rate: 0.2,
        exploration: 0.2,
        initial_q: TabularEstimate::filled(2, 2, 0.0),
        horizon: 8,
    };
    let base = run_instrumented(&env, &learner, 4)?;

    for (c, d) in [(2.0, 0.0), (10.0, 7.0), (0.5, -3.0)] {
        let (env2, q2) = scale_problem(&env, &learner.initial_q, c, d)?;
        let scaled = run_instrumented(&env2, &LearnerConfig { initial_q: q2, ..learner.clone() }, 4)?;
        let worst = base
            .records
            .iter()
            .zip(&scaled.records)
            .map(|(a, b)| (b.happiness - c * a.happiness).abs())
            .fold(0.0, f64::max);
        println!("c = {c:>4}, d = {d:>4}: max |ĥ' − c ĥ| = {worst:.1e}");
    }

    // the same steps, judged by an agent that knows the optimal values
    let v_star = optimal_values(&env).v;
    println!("step   learner ĥ   V* ĥ");
    for (step, rec) in base.trace.steps.iter().zip(&base.records) {
        let judged = cross_happiness(step, &v_star, env.discount())?;
        println!("{:>4}   {:+.4}     {:+.4}", step.t, rec.happiness, judged);
    }
    Ok(())
}
