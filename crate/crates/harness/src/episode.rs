//! One closed-loop reference-tracking episode.

use deepc_core::adapter::{init_adapter, InitPolicy, UpdateDecision};
use deepc_core::controller::{ControllerConfig, DeepcController, PastWindow};
use deepc_core::plant::{self, measure, NoiseModel, NoiseSource};
use deepc_core::Error as CoreError;
use nalgebra::{DVector, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collect::collect_initial_data;
use crate::config::{ScenarioConfig, Strategy};
use crate::error::Result;
use crate::reference::{build_reference, reference_window};
use crate::seeds::{stream_rng, COLLECTION_STREAM, EXCITATION_STREAM, NOISE_STREAM};

/// One line of the episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub reference: [f64; 2],
    /// True joint angles at the sample instant.
    pub theta: [f64; 2],
    pub theta_dot: [f64; 2],
    /// Measured output `theta + noise`.
    pub output: [f64; 2],
    /// Torque applied to the plant.
    pub input: [f64; 2],
    /// First optimal input, or the held input after a solver failure.
    pub ocp_input: [f64; 2],
    pub excitation: [f64; 2],
    /// The input was moved onto the magnitude or rate bounds.
    pub clipped: bool,
    pub solver_ok: bool,
    pub objective: Option<f64>,
    pub alpha_norm: Option<f64>,
    pub mu_norm: Option<f64>,
    pub iterations: usize,
    /// Dataset update after this sample; `None` when no decision was taken.
    pub accepted: Option<bool>,
    pub stage_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub strategy: Strategy,
    pub run: usize,
    pub seed: u64,
    /// Sum of the logged stage costs.
    pub j_tot: f64,
    /// Reason the episode stopped early.
    pub failure: Option<String>,
    pub solver_failures: usize,
    pub steps: Vec<StepRecord>,
    /// Rank-test decisions (proposed method only).
    pub decisions: Vec<UpdateDecision>,
}

impl EpisodeResult {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Episode log as JSON lines, one [`StepRecord`] per line.
    pub fn log_lines(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn quad(w: &nalgebra::DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(w * v))
}

/// `|y - r|_Q^2 + |u|_R^2 + |u - u_prev|_Rd^2`.
pub fn stage_cost(cfg: &ControllerConfig, y: &[f64; 2], r: &[f64; 2], u: &[f64; 2], u_prev: &[f64; 2]) -> f64 {
    let e = DVector::from_fn(2, |i, _| y[i] - r[i]);
    let du = DVector::from_fn(2, |i, _| u[i] - u_prev[i]);
    let u = DVector::from_column_slice(u);
    quad(&cfg.q, &e) + quad(&cfg.r, &u) + quad(&cfg.r_delta, &du)
}

fn arr(v: &Vector2<f64>) -> [f64; 2] {
    [v[0], v[1]]
}

/// Runs `strategy` for one seed. Solver failures hold the previous input;
/// the episode is marked failed once they exceed the configured budget or the
/// plant diverges, and the partial log is kept.
pub fn run_episode(cfg: &ScenarioConfig, strategy: Strategy, run: usize, seed: u64) -> Result<EpisodeResult> {
    let ccfg = cfg.controller_config();
    let (tp, tf) = (ccfg.past_horizon, ccfg.future_horizon);
    let reference = build_reference(&cfg.reference, cfg.dt, cfg.episode_length)?;
    let mut noise = NoiseSource::with_stream(
        &NoiseModel {
            bound: cfg.noise.bound,
            seed,
        },
        NOISE_STREAM,
    );
    let mut collection_rng = stream_rng(seed, COLLECTION_STREAM);
    let mut excitation_rng = stream_rng(seed, EXCITATION_STREAM);

    let collected = collect_initial_data(
        &cfg.plant,
        cfg.dt,
        cfg.substeps,
        cfg.data_collection.steps,
        cfg.data_collection.input_bound,
        cfg.depth(),
        &mut collection_rng,
        &mut noise,
    )?;
    let mut adapter = init_adapter(
        collected.dataset,
        InitPolicy::FromDataTail,
        cfg.adaptation.rho,
        cfg.adaptation.n_estimate,
    )?;
    let mut controller = DeepcController::new(ccfg.clone())?;
    let mut state = collected.final_state;
    let last = adapter.last_input();
    let mut u_prev = [last[0], last[1]];

    let mut result = EpisodeResult {
        strategy,
        run,
        seed,
        j_tot: 0.0,
        failure: None,
        solver_failures: 0,
        steps: Vec::with_capacity(cfg.episode_length),
        decisions: Vec::new(),
    };

    for k in 0..cfg.episode_length {
        let y = arr(&measure(&state, &mut noise));
        let (inputs, outputs) = adapter.history(tp)?;
        let past = PastWindow {
            inputs,
            outputs,
            prev_input: DVector::from_column_slice(&u_prev),
        };
        let window = reference_window(&reference, k, tf);
        let (ocp_input, diag) = match controller.step(adapter.dataset(), &past, &window) {
            Ok(s) => ([s.u_applied[0], s.u_applied[1]], Some(s)),
            Err(CoreError::Solver { status, iterations }) => {
                result.solver_failures += 1;
                log::debug!("run {run} {strategy} step {k}: solver {status:?} after {iterations} iterations, holding input");
                (u_prev, None)
            }
            Err(e) => return Err(e.into()),
        };

        let excitation = match (strategy, cfg.excitation_bound) {
            (Strategy::Au, Some(b)) if b > 0.0 => [
                excitation_rng.random_range(-b..=b),
                excitation_rng.random_range(-b..=b),
            ],
            _ => [0.0; 2],
        };
        let mut input = [0.0; 2];
        let mut clipped = false;
        for i in 0..2 {
            let raw = ocp_input[i] + excitation[i];
            let lo = (-ccfg.u_max).max(u_prev[i] - ccfg.du_max);
            let hi = ccfg.u_max.min(u_prev[i] + ccfg.du_max);
            input[i] = raw.clamp(lo, hi);
            clipped |= input[i] != raw;
        }

        let r = arr(&reference[k]);
        let stage = stage_cost(&ccfg, &y, &r, &input, &u_prev);
        result.j_tot += stage;

        let u_vec = DVector::from_column_slice(&input);
        adapter.record_step(&u_vec, &DVector::from_column_slice(&y))?;
        let accepted = match strategy {
            Strategy::Pm => {
                let d = adapter.decide_and_update();
                let a = (!d.warm_up).then_some(d.accepted);
                result.decisions.push(d);
                a
            }
            Strategy::Au => {
                adapter.replace_with_candidate()?;
                Some(true)
            }
            Strategy::Nu => None,
        };

        result.steps.push(StepRecord {
            step: k,
            reference: r,
            theta: arr(&state.theta),
            theta_dot: arr(&state.theta_dot),
            output: y,
            input,
            ocp_input,
            excitation,
            clipped,
            solver_ok: diag.is_some(),
            objective: diag.as_ref().map(|s| s.ocp_objective),
            alpha_norm: diag.as_ref().map(|s| s.alpha_norm),
            mu_norm: diag.as_ref().map(|s| s.mu_norm),
            iterations: diag.as_ref().map_or(0, |s| s.iterations),
            accepted,
            stage_cost: stage,
        });

        if result.solver_failures > cfg.max_solver_failures {
            result.failure = Some(format!(
                "{} solver failures by step {k} exceed the budget of {}",
                result.solver_failures, cfg.max_solver_failures
            ));
            break;
        }
        match plant::step(&cfg.plant, &state, &Vector2::new(input[0], input[1]), cfg.dt, cfg.substeps) {
            Ok(next) => state = next,
            Err(e) => {
                result.failure = Some(format!("step {k}: {e}"));
                break;
            }
        }
        u_prev = input;
    }
    if let Some(f) = &result.failure {
        log::warn!("run {run} {strategy} failed: {f}");
    }
    Ok(result)
}
