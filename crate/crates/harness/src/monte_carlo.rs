//! Paired Monte-Carlo comparison of the update strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Max, Min, OrderStatistics};

use crate::config::{ScenarioConfig, Strategy};
use crate::episode::{run_episode, EpisodeResult};
use crate::error::{HarnessError, Result};
use crate::seeds::run_seeds;

/// Cost statistics of one strategy over its successful episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub samples: Vec<f64>,
    pub failed: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    pub min: f64,
    pub max: f64,
}

impl StrategySummary {
    /// Statistics are NaN when every episode failed.
    pub fn from_costs(strategy: Strategy, samples: Vec<f64>, failed: usize) -> Self {
        let mut data = Data::new(samples.clone());
        Self {
            strategy,
            failed,
            median: data.median(),
            lower_quartile: data.lower_quartile(),
            upper_quartile: data.upper_quartile(),
            min: data.min(),
            max: data.max(),
            samples,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub seeds: Vec<u64>,
    /// Ordered by strategy (config order), then run index.
    pub episodes: Vec<EpisodeResult>,
    pub summaries: Vec<StrategySummary>,
}

pub fn summarize(strategies: &[Strategy], episodes: &[EpisodeResult]) -> Vec<StrategySummary> {
    strategies
        .iter()
        .map(|&s| {
            let mine: Vec<&EpisodeResult> = episodes.iter().filter(|e| e.strategy == s).collect();
            let failed = mine.iter().filter(|e| e.failed()).count();
            if failed > 0 {
                log::warn!("{s}: {failed} of {} episodes failed and are excluded from the statistics", mine.len());
            }
            let costs = mine.iter().filter(|e| !e.failed()).map(|e| e.j_tot).collect();
            StrategySummary::from_costs(s, costs, failed)
        })
        .collect()
}

/// Runs every configured strategy for `cfg.runs` seeds on `workers` threads
/// (0 picks the rayon default). Results do not depend on the worker count.
pub fn run_monte_carlo(cfg: &ScenarioConfig, workers: usize) -> Result<MonteCarlo> {
    let seeds = run_seeds(cfg.master_seed, cfg.runs);
    let jobs: Vec<(Strategy, usize, u64)> = cfg
        .strategies
        .iter()
        .flat_map(|&s| seeds.iter().enumerate().map(move |(i, &seed)| (s, i, seed)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    let episodes = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, run, seed)| run_episode(cfg, s, run, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let summaries = summarize(&cfg.strategies, &episodes);
    Ok(MonteCarlo {
        seeds,
        episodes,
        summaries,
    })
}
