//! Loading an environment and a learner from JSON and writing a trace CSV,
//! the same path `hedonia run` takes.
//!
//!     cargo run -p hedonia --example custom_env_json [ENV.json] [CONFIG.json]

use std::path::PathBuf;

use hedonia::cli::{cmd_run, TRACE_HEADER};
use hedonia::value::optimal_values;

fn main() -> hedonia::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args().skip(1);
    let env_path = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("chain.json"));
    let config_path = args.next().map(PathBuf::from).unwrap_or_else(|| data.join("sarsa.json"));

    let env = hedonia::env::MarkovEnv::load_json(&env_path)?;
    println!(
        "{}: {} states, {} actions, γ = {}; V* = {:?}",
        env_path.display(),
        env.n_states(),
        env.n_actions(),
        env.discount(),
        optimal_values(&env).v
    );

    let out = std::env::temp_dir().join("hedonia-custom-trace.csv");
    let run = cmd_run(&env_path, &config_path, 0, &out)?;
    let n = run.records.len() as f64;
    let mean = |f: &dyn Fn(&hedonia::happiness::HappinessRecord) -> Option<f64>| {
        run.records.iter().filter_map(f).sum::<f64>() / n
    };
    println!("{} steps written to {}", run.records.len(), out.display());
    println!("columns: {}", TRACE_HEADER.join(","));
    println!("mean happiness {:+.4}", mean(&|r| Some(r.happiness)));
    println!("mean payout    {:+.4}", mean(&|r| r.payout));
    println!("mean luck      {:+.4}", mean(&|r| r.luck_payout));
    println!("final Q: {:?}", run.final_q.rows());
    Ok(())
}
