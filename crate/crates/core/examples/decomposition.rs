//! Splitting happiness into payout and good news, and each of those into
//! luck and pessimism.
//!
//! The scenario: a trial participant is either given a drug (pleasant
//! doses now, lasting harm later) or a placebo. The first pleasant dose is
//! evidence for the drug branch: the payout is positive but the news is
//! bad enough to make the step unhappy. Later doses pay more and more,
//! yet carry no news, so happiness is zero.
//!
//!     cargo run -p hedonia --example decomposition

use hedonia::env::{MarkovEnv, Policy};
use hedonia::happiness::{decompose_luck_pessimism, decompose_payout_goodnews, happiness_td};
use hedonia::value::{HistoryContext, SubjectiveModel};

const ENROLLED: usize = 0;
const DOSE: [usize; 3] = [1, 2, 3];
const HARMED: usize = 4;
const PLACEBO: usize = 5;
const HEALTHY: usize = 6;

fn trial_env(p_drug: f64) -> hedonia::Result<MarkovEnv> {
    let n = 7;
    let mut next = vec![vec![vec![0.0; n]]; n];
    let mut reward = vec![vec![vec![0.0; n]]; n];
    next[ENROLLED][0][DOSE[0]] = p_drug;
    next[ENROLLED][0][PLACEBO] = 1.0 - p_drug;
    reward[ENROLLED][0][DOSE[0]] = 1.0;
    for (k, &d) in DOSE.iter().enumerate() {
        let after = DOSE.get(k + 1).copied().unwrap_or(HARMED);
        next[d][0][after] = 1.0;
        reward[d][0][after] = (k + 2) as f64;
    }
    next[HARMED][0][HARMED] = 1.0;
    reward[HARMED][0][HARMED] = -2.0;
    next[PLACEBO][0][HEALTHY] = 1.0;
    next[HEALTHY][0][HEALTHY] = 1.0;
    MarkovEnv::new(next, reward, 0.9, ENROLLED)
}

fn main() -> hedonia::Result<()> {
    let env = trial_env(0.5)?;
    let policy = Policy::deterministic(vec![0; env.n_states()]);
    let informed = SubjectiveModel::mdp(env.clone(), policy.clone())?;
    let SubjectiveModel::Mdp { values, .. } = &informed else { unreachable!() };
    let gamma = env.discount();

    println!("drug branch, informed participant:");
    let path = [(ENROLLED, DOSE[0]), (DOSE[0], DOSE[1]), (DOSE[1], DOSE[2]), (DOSE[2], HARMED), (HARMED, HARMED)];
    for (s, s_next) in path {
        let r = env.reward(s, 0, s_next);
        let h = happiness_td(r, values[s_next], values[s], gamma)?;
        let split = decompose_payout_goodnews(r, values[s_next], &informed, HistoryContext::State(s))?;
        println!(
            "  r = {r:+.1}  ĥ = {h:+.4}  payout {:+.4}  good news {:+.4}",
            split.payout, split.good_news
        );
    }

    // a participant who believes the drug is unlikely: same rewards,
    // different expectations
    let hopeful = SubjectiveModel::mdp(trial_env(0.1)?, policy.clone())?;
    let SubjectiveModel::Mdp { values: hv, .. } = &hopeful else { unreachable!() };
    let r = env.reward(ENROLLED, 0, DOSE[0]);
    let lp = decompose_luck_pessimism(r, hv[DOSE[0]], &hopeful, &env, &policy, ENROLLED)?;
    println!("first dose, participant expecting a 10% chance of the drug:");
    println!(
        "  luck: payout {:+.4}, news {:+.4}; pessimism: payout {:+.4}, news {:+.4}",
        lp.luck_payout, lp.luck_news, lp.pessimism_payout, lp.pessimism_news
    );
    Ok(())
}
