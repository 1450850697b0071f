use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deepc_core::hankel::build_mosaic_hankel;
use deepc_core::plant::{NoiseModel, NoiseSource};
use deepc_core::rank::SingularSpectrum;
use deepc_core::trajectory::{read_trajectories_csv, write_trajectories_csv, Dataset};
use deepc_harness::collect::collect_initial_data;
use deepc_harness::seeds::{stream_rng, COLLECTION_STREAM, NOISE_STREAM};
use deepc_harness::{export_results, run_monte_carlo, HarnessError, Result, ScenarioConfig, Strategy};

#[derive(Parser)]
#[command(name = "deepc", version, about = "Data-driven predictive control experiments on a two-link arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo comparison of the dataset update strategies.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `runs`.
        #[arg(long)]
        runs: Option<usize>,
        /// Runs a single strategy instead of the configured list.
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Singular values of the stacked data matrix built from a trajectory CSV,
    /// printed as `index,singular_value`. The admissible threshold window for
    /// rank `R` goes to stderr.
    RankScan {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        rank: usize,
        /// Window length `L`; defaults to the scenario's `Tp + Tf`.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Random-torque data collection from the lower equilibrium, written as a
    /// one-trajectory CSV.
    Collect {
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        bound: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output noise bound (rad).
        #[arg(long, default_value_t = 1e-3)]
        noise: f64,
        /// Scenario file for plant parameters and sampling.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(
    config: PathBuf,
    runs: Option<usize>,
    strategy: Option<Strategy>,
    out: PathBuf,
    seed: Option<u64>,
    parallel: usize,
) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(s) = strategy {
        cfg.restrict_to(s);
    }
    cfg.validate()?;
    let mc = run_monte_carlo(&cfg, parallel)?;
    export_results(&cfg, &mc, &out)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "strategy,ok,failed,median,lower_quartile,upper_quartile")
        .map_err(|e| HarnessError::io("<stdout>", e))?;
    for s in &mc.summaries {
        writeln!(
            stdout,
            "{},{},{},{},{},{}",
            s.strategy,
            s.samples.len(),
            s.failed,
            s.median,
            s.lower_quartile,
            s.upper_quartile
        )
        .map_err(|e| HarnessError::io("<stdout>", e))?;
    }
    Ok(())
}

fn rank_scan(data: PathBuf, rank: usize, depth: Option<usize>) -> Result<()> {
    let file = File::open(&data).map_err(|e| HarnessError::io(&data, e))?;
    let trajectories = read_trajectories_csv(BufReader::new(file))?;
    let depth = depth.unwrap_or_else(|| ScenarioConfig::default().depth());
    let dm = build_mosaic_hankel(&Dataset::new(trajectories, depth)?)?;
    let spectrum = SingularSpectrum::of(dm.entries());
    let mut stdout = BufWriter::new(io::stdout().lock());
    let io_err = |e| HarnessError::io("<stdout>", e);
    writeln!(stdout, "index,singular_value").map_err(io_err)?;
    for (i, s) in spectrum.values().iter().enumerate() {
        writeln!(stdout, "{},{s}", i + 1).map_err(io_err)?;
    }
    stdout.flush().map_err(io_err)?;
    match spectrum.threshold_window(rank)? {
        Some(w) => eprintln!("rank {rank}: rho in [{}, {}), geometric midpoint {}", w.lower, w.upper, w.geometric_mid()),
        None => eprintln!("rank {rank}: no threshold separates sigma_{rank} from sigma_{}", rank + 1),
    }
    Ok(())
}

fn collect(steps: usize, bound: f64, out: PathBuf, seed: u64, noise: f64, config: Option<PathBuf>) -> Result<()> {
    let cfg = match config {
        Some(p) => ScenarioConfig::load(&p)?,
        None => ScenarioConfig::default(),
    };
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(HarnessError::Config(format!("--bound must be finite and >= 0, got {bound}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(HarnessError::Config(format!("--noise must be finite and >= 0, got {noise}")));
    }
    if steps == 0 {
        return Err(HarnessError::Config("--steps must be positive".into()));
    }
    let mut noise = NoiseSource::with_stream(&NoiseModel { bound: noise, seed }, NOISE_STREAM);
    let mut inputs = stream_rng(seed, COLLECTION_STREAM);
    let collected = collect_initial_data(&cfg.plant, cfg.dt, cfg.substeps, steps, bound, 1, &mut inputs, &mut noise)?;
    let file = File::create(&out).map_err(|e| HarnessError::io(&out, e))?;
    write_trajectories_csv(std::slice::from_ref(&collected.run), BufWriter::new(file))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            runs,
            strategy,
            out,
            seed,
            parallel,
        } => run(config, runs, strategy, out, seed, parallel),
        Command::RankScan { data, rank, depth } => rank_scan(data, rank, depth),
        Command::Collect {
            steps,
            bound,
            out,
            seed,
            noise,
            config,
        } => collect(steps, bound, out, seed, noise, config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
