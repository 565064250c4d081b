//! Greedy Q-learning on the two-state example from two initial tables.
//!
//! The pessimist never tries the costly move to `s1` and stays at zero
//! reward and zero happiness. The optimist pays −1 once, is disappointed,
//! then collects 2 per step while its happiness decays by `1 − γα` per step
//! as the table converges.
//!
//!     cargo run -p hedonia --example optimism_vs_pessimism

use hedonia::agents::{fig2_config, run_instrumented, Initialisation};
use hedonia::env::build_fig1_env;

fn main() -> hedonia::Result<()> {
    let env = build_fig1_env();
    let (epsilon, alpha, steps) = (0.1, 0.1, 100);

    for init in [Initialisation::Optimistic, Initialisation::Pessimistic] {
        let run = run_instrumented(&env, &fig2_config(init, epsilon, alpha, steps), 0)?;
        let total_reward: f64 = run.trace.steps.iter().map(|s| s.reward).sum();
        println!("{init:?}: total reward {total_reward}");
        for rec in run.records.iter().take(5) {
            println!("  t={:<3} ĥ = {:+.6}", rec.t, rec.happiness);
        }
        let last = run.records.last().unwrap();
        println!("  t={:<3} ĥ = {:+.6}", last.t, last.happiness);
        if init == Initialisation::Optimistic {
            let h = &run.records;
            println!("  ratio ĥ(3)/ĥ(2) = {:.6}", h[2].happiness / h[1].happiness);
        }
    }
    println!("expected t=1: {}, t=2: {}", -1.0 - 0.5 * epsilon, 2.0 - 0.5 * epsilon);
    Ok(())
}
