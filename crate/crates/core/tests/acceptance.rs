//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs under `cargo test`; use `cargo test --test acceptance` to run it alone.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hedonia::agents::{fig2_config, run_instrumented, Initialisation};
use hedonia::env::{build_fig1_env, Policy, ALPHA, S0, S1};
use hedonia::props::{verify_prop1, verify_prop2, verify_prop3, verify_sarsa_happier, verify_scaling};
use hedonia::rutledge::synth::{synth_subjects, GeneratorConfig};
use hedonia::rutledge::{big_r_squared, fit_gamma, loss_aversion, pearson_r, r_squared, HappinessModel};
use hedonia::value::{optimal_values, true_policy_value};

const SEED: u64 = 1;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn fig1_values() -> Outcome {
    let env = build_fig1_env();
    let v = optimal_values(&env).v;
    let v0 = true_policy_value(&env, &Policy::deterministic(vec![ALPHA, ALPHA])).unwrap();
    check(
        (v[S0] - 1.0).abs() < 1e-9 && (v[S1] - 4.0).abs() < 1e-9 && v0[S0] == 0.0,
        format!("V* = ({}, {}), V^π0(s0) = {}", v[S0], v[S1], v0[S0]),
    )
}

fn example4_exact_steps() -> Outcome {
    let env = build_fig1_env();
    let mut worst: f64 = 0.0;
    for eps in [0.05, 0.1, 0.5] {
        let run = run_instrumented(&env, &fig2_config(Initialisation::Optimistic, eps, 0.1, 100), 0).unwrap();
        worst = worst
            .max((run.records[0].happiness - (-1.0 - 0.5 * eps)).abs())
            .max((run.records[1].happiness - (2.0 - 0.5 * eps)).abs());
    }
    let pess = run_instrumented(&env, &fig2_config(Initialisation::Pessimistic, 0.1, 0.1, 100), 0).unwrap();
    let flat = pess.records.len() == 100
        && pess.records.iter().all(|r| r.happiness == 0.0)
        && pess.trace.steps.iter().all(|s| s.reward == 0.0);
    check(
        worst < 1e-9 && flat,
        format!("max error {worst:e}; pessimistic flat: {flat}"),
    )
}

fn fig2_shape() -> Outcome {
    let env = build_fig1_env();
    let run = run_instrumented(&env, &fig2_config(Initialisation::Optimistic, 0.1, 0.1, 100), 0).unwrap();
    let h: Vec<f64> = run.records.iter().map(|r| r.happiness).collect();
    let positive = h[1..].iter().all(|x| *x > 0.0);
    let mut worst_ratio: f64 = 0.0;
    let mut decreasing = true;
    for (i, w) in h[1..].windows(2).enumerate() {
        let loop_step = run.trace.steps[i + 1].state == S1 && run.trace.steps[i + 2].state == S1;
        decreasing &= w[1] < w[0];
        if loop_step {
            worst_ratio = worst_ratio.max((w[1] / w[0] - 0.95).abs());
        }
    }
    let last = h[99];
    check(
        positive && decreasing && worst_ratio < 1e-9 && last < 0.02,
        format!("ratio error {worst_ratio:e}; ĥ(100) = {last:.5}"),
    )
}

fn prop1() -> Outcome {
    let r = verify_prop1(100, SEED).unwrap();
    check(
        r.pass && r.max_deviation < 1e-9,
        format!("{} checks, max deviation {:e}", r.checks.unwrap_or(0), r.max_deviation),
    )
}

fn prop2() -> Outcome {
    let r = verify_prop2(100, SEED, 100_000).unwrap();
    let mc = r.monte_carlo.clone().unwrap();
    check(
        r.pass && r.max_deviation < 1e-9 && mc.pass && mc.mean.abs() <= 3.0 * mc.std_error,
        format!(
            "max deviation {:e}; Monte Carlo mean {:.2e} ± {:.2e}",
            r.max_deviation, mc.mean, mc.std_error
        ),
    )
}

fn prop3() -> Outcome {
    let r = verify_prop3(100, 10, SEED).unwrap();
    check(
        r.pass,
        format!("{} state checks, max deviation {:e}", r.checks.unwrap_or(0), r.max_deviation),
    )
}

fn scaling() -> Outcome {
    let r = verify_scaling(100, SEED, 200).unwrap();
    check(
        r.pass && r.max_deviation < 1e-9,
        format!("{} steps compared, max |ĥ' − cĥ| {:e}", r.checks.unwrap_or(0), r.max_deviation),
    )
}

fn sarsa_vs_q() -> Outcome {
    let r = verify_sarsa_happier(&build_fig1_env(), 0.2, 10_000, SEED).unwrap();
    let c = r.comparison.clone().unwrap();
    check(
        r.pass && c.q_learning_negative,
        format!(
            "Q-learning {:.4} ± {:.4}, SARSA {:.4} ± {:.4}",
            c.mean_q_learning, c.se_q_learning, c.mean_sarsa, c.se_sarsa
        ),
    )
}

fn statistics() -> Outcome {
    let x = [1.0, 4.0, -2.0, 3.5, 0.5];
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let r3 = pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
    let ok = (pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-12
        && (big_r_squared(&x, &x).unwrap() - 1.0).abs() < 1e-12
        && (pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-12
        && (r3 - 0.9934).abs() < 1e-4
        && (r_squared(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap() - r3 * r3).abs() < 1e-12
        && (loss_aversion(10.0, 1.7, 1.05, 1.01) - 11.22018).abs() < 1e-4
        && (loss_aversion(-10.0, 1.7, 1.05, 1.01) + 17.39598).abs() < 1e-4
        && loss_aversion(0.0, 1.7, 1.05, 1.01) == 0.0;
    check(ok, format!("3-point r = {r3:.6}"))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn recovery() -> Outcome {
    let n = 1000;
    let clean = synth_subjects(n, &GeneratorConfig::default(), 7).unwrap();
    let recovered = clean
        .iter()
        .filter(|s| {
            let f = fit_gamma(s, &HappinessModel::OURS).unwrap();
            (f.gamma - 0.7).abs() <= 0.01 + 1e-12 && f.pearson_r > 0.999
        })
        .count();

    let noisy_cfg = GeneratorConfig {
        noise: 0.5,
        ..GeneratorConfig::default()
    };
    let noisy = synth_subjects(n, &noisy_cfg, 7).unwrap();
    let mean_r = |model: &HappinessModel| {
        let rs: Vec<f64> = noisy
            .iter()
            .filter_map(|s| fit_gamma(s, model).ok().map(|f| f.pearson_r))
            .collect();
        mean(&rs)
    };
    let ours = mean_r(&HappinessModel::OURS);
    let rut = mean_r(&HappinessModel::RUTLEDGE);
    let cum = mean_r(&HappinessModel::CumulativeReward);
    check(
        recovered * 100 >= 99 * n && ours > rut && ours > cum,
        format!("recovered {recovered}/{n}; noisy mean r: ours {ours:.4}, rutledge {rut:.4}, cumulative {cum:.4}"),
    )
}

fn run_bin(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hedonia"))
        .args(args)
        .env_remove("HEDONIA_SEED")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let env_json = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/chain.json");
    let config_json = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/sarsa.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
        let ok = run_bin(&["fig2", "--out", &d("fig2")])
            && run_bin(&["verify", "--prop", "scaling", "--trials", "5", "--seed", "3", "--out", &d("verify/report.json")])
            && run_bin(&["rutledge", "--subjects", "20", "--noise", "0.5", "--seed", "3", "--out", &d("rutledge")])
            && run_bin(&["run", "--env", env_json, "--config", config_json, "--seed", "3", "--out", &d("run/trace.csv")]);
        if !ok {
            return check(false, "a command failed");
        }
        let files: Vec<_> = ["fig2", "verify", "rutledge", "run"]
            .iter()
            .flat_map(|sub| files_under(&dir.path().join(sub)))
            .collect();
        runs.push(files);
    }
    check(
        runs[0] == runs[1],
        format!("{} output files compared", runs[0].len()),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("two-state example: optimal values", fig1_values, Duration::from_secs(1)),
        ("two-state example: exact first steps", example4_exact_steps, Duration::from_secs(1)),
        ("two-state example: happiness decay shape", fig2_shape, Duration::from_secs(1)),
        ("happiness = payout + good news", prop1, Duration::from_secs(10)),
        ("informed agents: zero expected happiness", prop2, Duration::from_secs(30)),
        ("V* agents off-policy: non-positive expectation", prop3, Duration::from_secs(60)),
        ("affine reward scaling", scaling, Duration::from_secs(5)),
        ("Q-learning vs SARSA after convergence", sarsa_vs_q, Duration::from_secs(10)),
        ("correlation statistics and loss aversion", statistics, Duration::from_secs(1)),
        ("well-being model recovery", recovery, Duration::from_secs(120)),
        ("CLI determinism", determinism, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let ok = outcome.ok && took <= budget;
        failures += usize::from(!ok);
        println!(
            "{} {name}: {} ({:.2}s of {}s)",
            if ok { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
