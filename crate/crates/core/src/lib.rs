//! Happiness for reinforcement-learning agents, measured as the temporal
//! difference error of the agent's own value estimate.
//!
//! The crate is organised bottom-up:
//!
//! - [`env`]: finite Markov environments, policies and seeded stepping.
//! - [`value`]: exact policy evaluation, value iteration and the agent-side
//!   estimators (Q tables, empirical reward averages).
//! - [`happiness`]: the happiness signal itself, its payout / good-news
//!   split, the luck / pessimism split, reward rescaling and cross-agent
//!   evaluation.
//! - [`agents`]: Q-learning and SARSA with a per-step happiness recorder.
//! - [`props`]: exact-enumeration checks of the structural properties
//!   (informed agents have zero expected happiness, off-policy agents are
//!   unhappy in expectation, ...), plus random MDP generation.
//! - [`rutledge`]: the gamble-task well-being model, synthetic subjects,
//!   and the correlation statistics used to fit it.
//! - [`cli`]: the experiment drivers behind the `hedonia` binary, with
//!   their CSV/JSON output formats.
//!
//! Runnable walkthroughs live in `examples/`; start with
//! `cargo run -p hedonia --example fig1_values`.

pub mod agents;
pub mod cli;
pub mod env;
pub mod error;
pub mod happiness;
pub mod props;
pub mod rutledge;
pub mod value;

pub use error::{Error, Result};
