//! Result files.
//!
//! ```text
//! out/
//!   manifest.json        version, effective config, per-run seeds
//!   config.toml          effective config; `deepc run --config` reproduces the run
//!   costs.csv            strategy,run,seed,j_tot,failed
//!   summary.csv          per-strategy quartiles of j_tot
//!   decisions.csv        rank-test decisions of the proposed method
//!   episodes/<strategy>_<run>.jsonl
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::monte_carlo::MonteCarlo;

pub const COSTS_HEADER: [&str; 5] = ["strategy", "run", "seed", "j_tot", "failed"];
pub const DECISIONS_HEADER: [&str; 9] = [
    "strategy",
    "run",
    "step",
    "accepted",
    "robust_rank",
    "required_rank",
    "sigma_at_required",
    "sigma_after_required",
    "warm_up",
];

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a ScenarioConfig,
    seeds: &'a [u64],
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| HarnessError::io("<csv buffer>", e.into_error()))
}

pub fn episode_file_name(strategy: &str, run: usize) -> String {
    format!("{strategy}_{run:04}.jsonl")
}

/// Writes all result files under `out_dir`, creating it when missing, and
/// returns the written paths.
pub fn export_results(cfg: &ScenarioConfig, mc: &MonteCarlo, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let episodes_dir = out_dir.join("episodes");
    fs::create_dir_all(&episodes_dir).map_err(|e| HarnessError::io(&episodes_dir, e))?;
    let mut written = Vec::new();

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seeds: &mc.seeds,
    };
    let path = out_dir.join("manifest.json");
    write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(path);

    let path = out_dir.join("config.toml");
    write(&path, cfg.to_toml_string())?;
    written.push(path);

    let costs = csv_bytes(&COSTS_HEADER, |w| {
        for e in &mc.episodes {
            w.write_record([
                e.strategy.to_string(),
                e.run.to_string(),
                e.seed.to_string(),
                e.j_tot.to_string(),
                u8::from(e.failed()).to_string(),
            ])?;
        }
        Ok(())
    })?;
    let path = out_dir.join("costs.csv");
    write(&path, costs)?;
    written.push(path);

    let summary = csv_bytes(
        &["strategy", "ok", "failed", "median", "lower_quartile", "upper_quartile", "min", "max"],
        |w| {
            for s in &mc.summaries {
                w.write_record([
                    s.strategy.to_string(),
                    s.samples.len().to_string(),
                    s.failed.to_string(),
                    s.median.to_string(),
                    s.lower_quartile.to_string(),
                    s.upper_quartile.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    let path = out_dir.join("summary.csv");
    write(&path, summary)?;
    written.push(path);

    let decisions = csv_bytes(&DECISIONS_HEADER, |w| {
        for e in &mc.episodes {
            for d in &e.decisions {
                w.write_record([
                    e.strategy.to_string(),
                    e.run.to_string(),
                    d.step.to_string(),
                    u8::from(d.accepted).to_string(),
                    d.robust_rank.to_string(),
                    d.required_rank.to_string(),
                    d.sigma_at_required.to_string(),
                    d.sigma_after_required.to_string(),
                    u8::from(d.warm_up).to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    let path = out_dir.join("decisions.csv");
    write(&path, decisions)?;
    written.push(path);

    for e in &mc.episodes {
        let path = episodes_dir.join(episode_file_name(e.strategy.as_str(), e.run));
        write(&path, e.log_lines()?)?;
        written.push(path);
    }
    Ok(written)
}
