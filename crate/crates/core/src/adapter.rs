//! Online adaptation of the data representation.
//!
//! The adapter keeps `N` trajectories of length `L` and a rolling window of the
//! `L` most recent input-output samples. After every recorded sample a
//! candidate dataset is formed by dropping the oldest trajectory and appending
//! the window; the candidate replaces the current dataset only when the
//! robustified rank of its stacked mosaic Hankel matrix reaches `n + m*L`.
//!
//! `n` is the caller's state-dimension estimate. Overestimating it makes
//! acceptance stricter; underestimating it can admit data matrices that no
//! longer describe the system.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::build_mosaic_hankel;
use crate::rank::SingularSpectrum;
use crate::trajectory::{Dataset, Trajectory};

/// How the recent window is seeded when the adapter starts.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPolicy {
    /// Copy the last `L` samples of the final dataset trajectory; used when
    /// control starts right after data collection.
    FromDataTail,
    /// Fill with a steady-state pair matching the plant's initial condition.
    ArtificialSteadyState {
        input: DVector<f64>,
        output: DVector<f64>,
    },
    /// Fill with arbitrary constants; predictions are off for `L` steps.
    Constant {
        input: DVector<f64>,
        output: DVector<f64>,
    },
}

/// Record of one adaptation decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateDecision {
    /// Index of the most recently recorded sample.
    pub step: u64,
    pub accepted: bool,
    pub robust_rank: usize,
    pub required_rank: usize,
    /// `sigma_{required_rank}` of the candidate (0 during warm-up).
    pub sigma_at_required: f64,
    /// `sigma_{required_rank + 1}` of the candidate (0 when absent).
    pub sigma_after_required: f64,
    /// Decision suppressed because fewer than `L` measured samples exist.
    pub warm_up: bool,
    /// The candidate's new trajectory still reuses samples that were already
    /// part of the initial dataset.
    pub overlaps_initial_data: bool,
}

#[derive(Clone, Debug)]
pub struct AdapterState {
    dataset: Dataset,
    window: VecDeque<(DVector<f64>, DVector<f64>)>,
    rho: f64,
    n_estimate: usize,
    /// Measured samples currently in the window (artificial seeds excluded).
    measured: usize,
    /// Window samples still shared with the initial dataset.
    inherited: usize,
    step_count: u64,
}

impl AdapterState {
    pub fn new(
        initial: Dataset,
        policy: InitPolicy,
        rho: f64,
        n_estimate: usize,
    ) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!("threshold rho must be finite and >= 0, got {rho}")));
        }
        if n_estimate == 0 {
            return Err(Error::InvalidArgument("state-dimension estimate must be positive".into()));
        }
        let depth = initial.depth();
        if let Some(t) = initial.trajectories().iter().find(|t| t.len() != depth) {
            return Err(Error::Dimension(format!(
                "adapter trajectories must have length exactly L = {depth}, found {}",
                t.len()
            )));
        }
        let (m, p) = (initial.input_dim(), initial.output_dim());
        let required = n_estimate + m * depth;
        if initial.len() < required {
            return Err(Error::InsufficientData {
                available: initial.len(),
                required,
                depth,
            });
        }

        let (window, measured, inherited) = match policy {
            InitPolicy::FromDataTail => {
                let last = initial.trajectories().last().expect("non-empty dataset");
                let window = (0..depth)
                    .map(|k| {
                        (
                            last.inputs().column(k).into_owned(),
                            last.outputs().column(k).into_owned(),
                        )
                    })
                    .collect();
                (window, depth, depth)
            }
            InitPolicy::ArtificialSteadyState { input, output }
            | InitPolicy::Constant { input, output } => {
                if input.len() != m || output.len() != p {
                    return Err(Error::Dimension(format!(
                        "seed pair has dimensions ({}, {}), expected ({m}, {p})",
                        input.len(),
                        output.len()
                    )));
                }
                (
                    std::iter::repeat((input, output)).take(depth).collect(),
                    0,
                    0,
                )
            }
        };

        Ok(Self {
            dataset: initial,
            window,
            rho,
            n_estimate,
            measured,
            inherited,
            step_count: 0,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn set_rho(&mut self, rho: f64) {
        assert!(rho >= 0.0, "threshold must be non-negative");
        self.rho = rho;
    }

    pub fn n_estimate(&self) -> usize {
        self.n_estimate
    }

    pub fn depth(&self) -> usize {
        self.dataset.depth()
    }

    pub fn input_dim(&self) -> usize {
        self.dataset.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.dataset.output_dim()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// `n + m * L`.
    pub fn required_rank(&self) -> usize {
        self.n_estimate + self.input_dim() * self.depth()
    }

    /// True once `L` measured samples have been recorded (or inherited).
    pub fn window_full(&self) -> bool {
        self.measured >= self.depth()
    }

    /// The current `L`-sample window, including any artificial seed samples.
    pub fn recent_window(&self) -> Trajectory {
        let (u, y): (Vec<_>, Vec<_>) = self.window.iter().cloned().unzip();
        Trajectory::from_samples(&u, &y).expect("window samples are consistent")
    }

    /// The last `count` samples as `(inputs m x count, outputs p x count)`.
    pub fn history(&self, count: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if count == 0 || count > self.window.len() {
            return Err(Error::Dimension(format!(
                "history of {count} samples requested, window holds {}",
                self.window.len()
            )));
        }
        let start = self.window.len() - count;
        let (m, p) = (self.input_dim(), self.output_dim());
        let u = DMatrix::from_fn(m, count, |i, k| self.window[start + k].0[i]);
        let y = DMatrix::from_fn(p, count, |i, k| self.window[start + k].1[i]);
        Ok((u, y))
    }

    pub fn last_input(&self) -> DVector<f64> {
        self.window.back().expect("window is never empty").0.clone()
    }

    /// Appends one measured sample, dropping the oldest once `L` are held.
    pub fn record_step(&mut self, input: &DVector<f64>, output: &DVector<f64>) -> Result<()> {
        if input.len() != self.input_dim() || output.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "sample has dimensions ({}, {}), expected ({}, {})",
                input.len(),
                output.len(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        self.window.push_back((input.clone(), output.clone()));
        if self.window.len() > self.depth() {
            self.window.pop_front();
        }
        self.measured = (self.measured + 1).min(self.depth());
        self.inherited = self.inherited.saturating_sub(1);
        self.step_count += 1;
        Ok(())
    }

    /// `{traj_2, ..., traj_N, recent window}`; does not modify the state.
    pub fn propose_candidate(&self) -> Result<Dataset> {
        if !self.window_full() {
            return Err(Error::WarmUp {
                recorded: self.measured,
                depth: self.depth(),
            });
        }
        let mut trajectories: Vec<Trajectory> =
            self.dataset.trajectories().iter().skip(1).cloned().collect();
        trajectories.push(self.recent_window());
        Dataset::new(trajectories, self.depth())
    }

    /// Evaluates the robustified rank condition on the candidate and adopts it
    /// when the condition holds. The current dataset is left untouched on
    /// rejection.
    pub fn decide_and_update(&mut self) -> UpdateDecision {
        let step = self.step_count.saturating_sub(1);
        let required_rank = self.required_rank();
        let overlaps_initial_data = self.inherited > 0;
        let candidate = match self.propose_candidate() {
            Ok(c) => c,
            Err(_) => {
                return UpdateDecision {
                    step,
                    accepted: false,
                    robust_rank: 0,
                    required_rank,
                    sigma_at_required: 0.0,
                    sigma_after_required: 0.0,
                    warm_up: true,
                    overlaps_initial_data,
                }
            }
        };
        let dm = build_mosaic_hankel(&candidate).expect("candidate has valid shape");
        let spectrum = SingularSpectrum::of(dm.entries());
        let robust_rank = spectrum.robustified_rank(self.rho);
        let accepted = robust_rank >= required_rank;
        if overlaps_initial_data {
            log::debug!(
                "step {step}: candidate window shares {} samples with the initial dataset",
                self.inherited
            );
        }
        if accepted {
            self.dataset = candidate;
        }
        UpdateDecision {
            step,
            accepted,
            robust_rank,
            required_rank,
            sigma_at_required: spectrum.sigma(required_rank),
            sigma_after_required: spectrum.sigma(required_rank + 1),
            warm_up: false,
            overlaps_initial_data,
        }
    }

    /// Adopts the candidate unconditionally (the always-update strategy).
    pub fn replace_with_candidate(&mut self) -> Result<()> {
        self.dataset = self.propose_candidate()?;
        Ok(())
    }
}

pub fn init_adapter(
    initial: Dataset,
    policy: InitPolicy,
    rho: f64,
    n_estimate: usize,
) -> Result<AdapterState> {
    AdapterState::new(initial, policy, rho, n_estimate)
}

pub const DECISION_LOG_HEADER: [&str; 6] = [
    "step",
    "accepted",
    "robust_rank",
    "required_rank",
    "sigma_at_required",
    "sigma_after_required",
];

/// Writes decisions as CSV with [`DECISION_LOG_HEADER`] columns.
pub fn write_decision_log<W: Write>(decisions: &[UpdateDecision], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DECISION_LOG_HEADER)?;
    for d in decisions {
        w.write_record([
            d.step.to_string(),
            u8::from(d.accepted).to_string(),
            d.robust_rank.to_string(),
            d.required_rank.to_string(),
            d.sigma_at_required.to_string(),
            d.sigma_after_required.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
