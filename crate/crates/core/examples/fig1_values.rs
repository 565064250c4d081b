//! Exact values on the two-state example.
//!
//! `s0 --α--> s0` pays 0, `s0 --β--> s1` costs 1, `s1 --α--> s1` pays 2 and
//! `s1 --β--> s0` costs 1, with γ = 0.5.
//!
//!     cargo run -p hedonia --example fig1_values

use hedonia::env::{build_fig1_env, Policy, ALPHA, BETA, S0, S1};
use hedonia::value::{bellman_optimality_residual, optimal_values, true_policy_value};

fn main() -> hedonia::Result<()> {
    let env = build_fig1_env();
    let opt = optimal_values(&env);
    println!("V*(s0) = {:.6}, V*(s1) = {:.6}  ({} sweeps)", opt.v[S0], opt.v[S1], opt.sweeps);
    println!("Bellman residual {:e}", bellman_optimality_residual(&env, &opt.v));
    for (name, s) in [("s0", S0), ("s1", S1)] {
        println!(
            "Q*({name}, α) = {:.4}, Q*({name}, β) = {:.4}",
            opt.q.get(s, ALPHA),
            opt.q.get(s, BETA)
        );
    }

    // staying put forever is worth nothing
    let stay = true_policy_value(&env, &Policy::deterministic(vec![ALPHA, ALPHA]))?;
    println!("V^stay = {stay:?}");

    let optimal = true_policy_value(&env, &Policy::deterministic(vec![BETA, ALPHA]))?;
    println!("V^(β, α) = {optimal:?}");
    Ok(())
}
