//! After convergence an ε-greedy Q-learner evaluates its own exploratory
//! moves against the greedy policy and is unhappy on average; SARSA values
//! the policy it actually follows and is not.
//!
//!     cargo run --release -p hedonia --example off_policy_unhappiness

use hedonia::env::build_fig1_env;
use hedonia::props::verify_sarsa_happier;

fn main() -> hedonia::Result<()> {
    let env = build_fig1_env();
    for epsilon in [0.05, 0.2, 0.5] {
        let report = verify_sarsa_happier(&env, epsilon, 10_000, 1)?;
        let c = report.comparison.expect("comparison present");
        println!(
            "ε = {epsilon:<4}  Q-learning {:+.4} ± {:.4}   SARSA {:+.4} ± {:.4}   {}",
            c.mean_q_learning,
            c.se_q_learning,
            c.mean_sarsa,
            c.se_sarsa,
            if report.pass { "SARSA no less happy" } else { "SARSA less happy" }
        );
    }
    Ok(())
}
