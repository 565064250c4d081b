//! Experiment drivers behind the `hedonia` binary.
//!
//! Every command is a plain function taking an options struct, so the same
//! runs are available from library code. Output formats:
//!
//! - trace CSV: `t,state,action,reward,happiness,payout,good_news,`
//!   `luck_payout,pessimism_payout,luck_news,pessimism_news`, one row per
//!   step, blank where a component is unavailable;
//! - verification report: the JSON form of [`Report`];
//! - well-being fits: see [`crate::rutledge::io`], plus `summary.json`, an
//!   array of `{model, mean_r, median_r2, median_R2, fitted, rejected}`.
//!
//! Reals are printed with nine significant digits. Given the same options
//! and seed, every command writes byte-identical files.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{fig2_config, run_instrumented, Initialisation, LearnerConfig, Run};
use crate::env::{build_fig1_env, MarkovEnv, StepTrace};
use crate::error::{invalid, Error, Result};
use crate::happiness::HappinessRecord;
use crate::props::{verify_prop1, verify_prop2, verify_prop3, verify_sarsa_happier, verify_scaling, Report};
use crate::rutledge::io::{save_fits, save_subjects, FitRow};
use crate::rutledge::stats::median;
use crate::rutledge::synth::{synth_subjects, GeneratorConfig};
use crate::rutledge::{fit_gamma, HappinessModel};

pub const TRACE_HEADER: [&str; 11] = [
    "t",
    "state",
    "action",
    "reward",
    "happiness",
    "payout",
    "good_news",
    "luck_payout",
    "pessimism_payout",
    "luck_news",
    "pessimism_news",
];

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// dropped, exponent form outside `1e-4 ≤ |x| < 1e9`. Zero of either sign
/// prints as `0`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: W, trace: &StepTrace, records: &[HappinessRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (step, rec) in trace.steps.iter().zip(records) {
        w.write_record([
            rec.t.to_string(),
            step.state.to_string(),
            step.action.to_string(),
            format_sig(step.reward),
            format_sig(rec.happiness),
            opt(rec.payout),
            opt(rec.good_news),
            opt(rec.luck_payout),
            opt(rec.pessimism_payout),
            opt(rec.luck_news),
            opt(rec.pessimism_news),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn save_trace(path: &Path, run: &Run) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_trace(file, &run.trace, &run.records).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Options of the value-initialisation experiment on the two-state example.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Options {
    /// Offset `ε` of the initial Q table.
    pub epsilon: f64,
    pub alpha: f64,
    pub steps: usize,
    pub out: PathBuf,
}

impl Default for Fig2Options {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            alpha: 0.1,
            steps: 100,
            out: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Output {
    pub optimistic: Run,
    pub pessimistic: Run,
    pub optimistic_csv: PathBuf,
    pub pessimistic_csv: PathBuf,
}

/// Runs the optimistic and pessimistic greedy Q-learners and writes
/// `optimistic.csv` and `pessimistic.csv` into `opts.out`.
pub fn cmd_fig2(opts: &Fig2Options) -> Result<Fig2Output> {
    let env = build_fig1_env();
    let run = |init| run_instrumented(&env, &fig2_config(init, opts.epsilon, opts.alpha, opts.steps), 0);
    let optimistic = run(Initialisation::Optimistic)?;
    let pessimistic = run(Initialisation::Pessimistic)?;
    create_dir(&opts.out)?;
    let optimistic_csv = opts.out.join("optimistic.csv");
    let pessimistic_csv = opts.out.join("pessimistic.csv");
    save_trace(&optimistic_csv, &optimistic)?;
    save_trace(&pessimistic_csv, &pessimistic)?;
    Ok(Fig2Output {
        optimistic,
        pessimistic,
        optimistic_csv,
        pessimistic_csv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    PayoutNews,
    InformedZero,
    OffPolicyNonPositive,
    Scaling,
    SarsaHappier,
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Claim::PayoutNews),
            "2" => Ok(Claim::InformedZero),
            "3" => Ok(Claim::OffPolicyNonPositive),
            "scaling" => Ok(Claim::Scaling),
            "sarsa" => Ok(Claim::SarsaHappier),
            other => Err(invalid(format!("unknown claim {other:?}; expected 1, 2, 3, scaling or sarsa"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub claim: Claim,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Behaviour policies per MDP for claim 3.
    pub policies: usize,
    /// Monte Carlo steps for claim 2.
    pub mc_samples: usize,
    /// Steps per run for the scaling and SARSA checks.
    pub steps: Option<usize>,
    /// Exploration rate for the SARSA comparison.
    pub exploration: f64,
}

impl VerifyOptions {
    pub fn new(claim: Claim) -> Self {
        Self {
            claim,
            trials: 100,
            seed: 0,
            out: None,
            policies: 10,
            mc_samples: 100_000,
            steps: None,
            exploration: 0.2,
        }
    }
}

/// Runs one verification suite and writes its report as JSON when
/// `opts.out` is set. The report's `pass` field is the verdict.
pub fn cmd_verify(opts: &VerifyOptions) -> Result<Report> {
    let report = match opts.claim {
        Claim::PayoutNews => verify_prop1(opts.trials, opts.seed)?,
        Claim::InformedZero => verify_prop2(opts.trials, opts.seed, opts.mc_samples)?,
        Claim::OffPolicyNonPositive => verify_prop3(opts.trials, opts.policies, opts.seed)?,
        Claim::Scaling => verify_scaling(opts.trials, opts.seed, opts.steps.unwrap_or(200))?,
        Claim::SarsaHappier => verify_sarsa_happier(
            &build_fig1_env(),
            opts.exploration,
            opts.steps.unwrap_or(10_000),
            opts.seed,
        )?,
    };
    if let Some(path) = &opts.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        save_json(path, &report)?;
    }
    Ok(report)
}

/// Per-model aggregate over fitted subjects; `None` when nobody was fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub mean_r: Option<f64>,
    pub median_r2: Option<f64>,
    #[serde(rename = "median_R2")]
    pub median_big_r2: Option<f64>,
    pub fitted: usize,
    pub rejected: usize,
}

pub const FITTED_MODELS: [HappinessModel; 3] = [
    HappinessModel::OURS,
    HappinessModel::RUTLEDGE,
    HappinessModel::CumulativeReward,
];

#[derive(Debug, Clone, PartialEq)]
pub struct RutledgeOptions {
    pub subjects: usize,
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RutledgeOutput {
    pub fits: Vec<FitRow>,
    pub summary: Vec<ModelSummary>,
}

/// Generates synthetic subjects, fits every model to every subject and
/// writes `subjects.csv`, `fits.csv` and `summary.json` into `opts.out`.
/// Subjects a model cannot be fitted to are counted as rejected.
pub fn cmd_rutledge(opts: &RutledgeOptions) -> Result<RutledgeOutput> {
    let subjects = synth_subjects(opts.subjects, &opts.generator, opts.seed)?;
    let mut fits = Vec::new();
    let mut rejected = [0usize; FITTED_MODELS.len()];
    for subject in &subjects {
        for (m, model) in FITTED_MODELS.iter().enumerate() {
            match fit_gamma(subject, model) {
                Ok(fit) => fits.push(FitRow {
                    subject_id: subject.id,
                    model: model.name().to_string(),
                    fit,
                }),
                Err(Error::DegenerateSubject(_) | Error::UndefinedCorrelation(_) | Error::InvalidArgument(_)) => {
                    rejected[m] += 1
                }
                Err(e) => return Err(e),
            }
        }
    }
    let summary = FITTED_MODELS
        .iter()
        .zip(rejected)
        .map(|(model, rejected)| summarise(model.name(), &fits, rejected))
        .collect();

    create_dir(&opts.out)?;
    save_subjects(&opts.out.join("subjects.csv"), &subjects)?;
    save_fits(&opts.out.join("fits.csv"), &fits)?;
    save_json(&opts.out.join("summary.json"), &summary)?;
    Ok(RutledgeOutput { fits, summary })
}

fn summarise(model: &str, fits: &[FitRow], rejected: usize) -> ModelSummary {
    let mine: Vec<_> = fits.iter().filter(|f| f.model == model).map(|f| f.fit).collect();
    let r: Vec<f64> = mine.iter().map(|f| f.pearson_r).collect();
    let r2: Vec<f64> = mine.iter().map(|f| f.r_squared).collect();
    let big: Vec<f64> = mine.iter().map(|f| f.big_r_squared).collect();
    ModelSummary {
        model: model.to_string(),
        mean_r: (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64),
        median_r2: median(&r2),
        median_big_r2: median(&big),
        fitted: mine.len(),
        rejected,
    }
}

/// JSON document accepted by `--config`: a learner for `run`, a subject
/// generator for `rutledge`, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub learner: Option<LearnerConfig>,
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
}

impl ConfigDocument {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// Runs the configured learner on a JSON environment and writes its trace.
pub fn cmd_run(env_path: &Path, config_path: &Path, seed: u64, out: &Path) -> Result<Run> {
    let env = MarkovEnv::load_json(env_path)?;
    let learner = ConfigDocument::load(config_path)?
        .learner
        .ok_or_else(|| invalid(format!("{}: no \"learner\" section", config_path.display())))?;
    let run = run_instrumented(&env, &learner, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_trace(out, &run)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(-1.05), "-1.05");
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig(123456789.0), "123456789");
        assert_eq!(format_sig(1234567890.0), "1.23456789e+09");
        assert_eq!(format_sig(0.0001), "0.0001");
        assert_eq!(format_sig(0.00001234), "1.234e-05");
        assert_eq!(format_sig(-2.5e-300), "-2.5e-300");
        assert_eq!(format_sig(99.9999999999), "100");
    }

    #[test]
    fn claims_parse() {
        assert_eq!("2".parse::<Claim>().unwrap(), Claim::InformedZero);
        assert_eq!("sarsa".parse::<Claim>().unwrap(), Claim::SarsaHappier);
        assert!("4".parse::<Claim>().is_err());
    }

    #[test]
    fn trace_rows_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_fig2(&Fig2Options {
            steps: 3,
            out: dir.path().to_path_buf(),
            ..Fig2Options::default()
        })
        .unwrap();
        let text = std::fs::read_to_string(&out.optimistic_csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,0,1,-1,-1.05,"));

        let mut buf = Vec::new();
        let mut trace = StepTrace::new(0);
        trace.push(0, 1, 2.0, 1);
        write_trace(&mut buf, &trace, &[HappinessRecord::bare(1, 0.5)]).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("1,0,1,2,0.5,,,,,,\n"));
    }

    #[test]
    fn empty_summary_has_nulls() {
        let s = summarise("ours", &[], 0);
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["mean_r"].is_null());
        assert!(json["median_R2"].is_null());
    }
}
