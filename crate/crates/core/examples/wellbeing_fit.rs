//! Predicting self-reported happiness in a gamble task.
//!
//! Synthetic subjects are generated from one model, then every model is fit
//! to every subject by choosing the discount that maximises the
//! correlation between its predictions and the ratings.
//!
//!     cargo run --release -p hedonia --example wellbeing_fit

use hedonia::rutledge::stats::median;
use hedonia::rutledge::synth::{mean_a_priori_value, synth_subjects, GeneratorConfig};
use hedonia::rutledge::{fit_gamma, HappinessModel};

fn main() -> hedonia::Result<()> {
    let models = [HappinessModel::OURS, HappinessModel::RUTLEDGE, HappinessModel::CumulativeReward];
    for noise in [0.0, 0.5, 1.0] {
        let config = GeneratorConfig {
            noise,
            ..GeneratorConfig::default()
        };
        let subjects = synth_subjects(300, &config, 7)?;
        println!(
            "noise {noise}: {} subjects, mean a-priori trial value {:.2}",
            subjects.len(),
            mean_a_priori_value(&subjects).unwrap_or(f64::NAN)
        );
        for model in &models {
            let fits: Vec<_> = subjects.iter().filter_map(|s| fit_gamma(s, model).ok()).collect();
            let r: Vec<f64> = fits.iter().map(|f| f.pearson_r).collect();
            let gammas: Vec<f64> = fits.iter().map(|f| f.gamma).collect();
            println!(
                "  {:<10} mean r {:.3}   median γ {:.2}",
                model.name(),
                r.iter().sum::<f64>() / r.len() as f64,
                median(&gammas).unwrap_or(f64::NAN)
            );
        }
    }

    // loss-averse valuation changes the predicted series but not the fitting
    let subjects = synth_subjects(100, &GeneratorConfig::default(), 8)?;
    let r: Vec<f64> = subjects
        .iter()
        .filter_map(|s| fit_gamma(s, &HappinessModel::OURS_LOSS_AVERSE).ok())
        .map(|f| f.pearson_r)
        .collect();
    println!("loss-averse variant on linear subjects: mean r {:.3}", r.iter().sum::<f64>() / r.len() as f64);
    Ok(())
}
