//! Closed-loop experiments on the two-link arm: initial data collection,
//! the three dataset update strategies, paired Monte-Carlo runs and result
//! export.

pub mod collect;
pub mod config;
pub mod episode;
pub mod error;
pub mod export;
pub mod monte_carlo;
pub mod reference;
pub mod seeds;

pub use config::{ScenarioConfig, Strategy};
pub use episode::{run_episode, stage_cost, EpisodeResult, StepRecord};
pub use error::{HarnessError, Result};
pub use export::export_results;
pub use monte_carlo::{run_monte_carlo, MonteCarlo, StrategySummary};
