//! Scenario configuration, read from TOML.
//!
//! Every table is optional and defaults to the two-link arm scenario; see
//! `configs/two_link.toml` for the full schema with default values.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use deepc_core::controller::ControllerConfig;
use deepc_core::plant::RobotParams;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::reference::ReferenceSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Rank-tested online updates.
    Pm,
    /// Update every step, with random input excitation.
    Au,
    /// Keep the initial dataset.
    Nu,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Pm, Strategy::Au, Strategy::Nu];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Pm => "pm",
            Strategy::Au => "au",
            Strategy::Nu => "nu",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pm" => Ok(Strategy::Pm),
            "au" => Ok(Strategy::Au),
            "nu" => Ok(Strategy::Nu),
            other => Err(HarnessError::Config(format!("unknown strategy {other:?}, expected pm, au or nu"))),
        }
    }
}

/// Controller weights as diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub past_horizon: usize,
    pub future_horizon: usize,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub r_delta: Vec<f64>,
    pub lambda_alpha: f64,
    pub lambda_mu: f64,
    pub u_max: f64,
    pub du_max: f64,
    pub svd_truncation: Option<usize>,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            past_horizon: 4,
            future_horizon: 10,
            q: vec![1.0, 1.0],
            r: vec![1e-5, 2e-5],
            r_delta: vec![2e-4, 4e-4],
            lambda_alpha: 5e-5,
            lambda_mu: 1e3,
            u_max: 5.0,
            du_max: 1.0,
            svd_truncation: None,
            qp_tol: 1e-6,
            qp_max_iter: 5000,
        }
    }
}

impl ControllerSection {
    pub fn to_controller_config(&self) -> ControllerConfig {
        let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
        ControllerConfig {
            past_horizon: self.past_horizon,
            future_horizon: self.future_horizon,
            q: diag(&self.q),
            r: diag(&self.r),
            r_delta: diag(&self.r_delta),
            lambda_alpha: self.lambda_alpha,
            lambda_mu: self.lambda_mu,
            u_max: self.u_max,
            du_max: self.du_max,
            svd_truncation: self.svd_truncation,
            qp_tol: self.qp_tol,
            qp_max_iter: self.qp_max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// Infinity-norm bound of the additive output noise (rad).
    pub bound: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { bound: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectionSection {
    /// Length `T` of the initial random-input run.
    pub steps: usize,
    /// Infinity-norm bound of the random torques (N m).
    pub input_bound: f64,
}

impl Default for CollectionSection {
    fn default() -> Self {
        Self {
            steps: 55,
            input_bound: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptationSection {
    pub rho: f64,
    pub n_estimate: usize,
}

impl Default for AdaptationSection {
    fn default() -> Self {
        Self {
            rho: 0.005,
            n_estimate: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Strategies to run, each on the same per-run seeds.
    pub strategies: Vec<Strategy>,
    pub episode_length: usize,
    pub dt: f64,
    /// RK4 substeps per sample.
    pub substeps: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// Bound of the always-update excitation (N m); required iff `au` runs.
    /// An omitted key means the default bound when `au` runs and none
    /// otherwise.
    #[serde(default)]
    pub excitation_bound: Option<f64>,
    /// Solver failures tolerated per episode before it is marked failed.
    pub max_solver_failures: usize,
    pub controller: ControllerSection,
    pub plant: RobotParams,
    pub noise: NoiseSection,
    pub data_collection: CollectionSection,
    pub adaptation: AdaptationSection,
    pub reference: ReferenceSchedule,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            episode_length: 1000,
            dt: 0.01,
            substeps: 10,
            runs: 100,
            master_seed: 0,
            excitation_bound: Some(0.25),
            max_solver_failures: 50,
            controller: ControllerSection::default(),
            plant: RobotParams::default(),
            noise: NoiseSection::default(),
            data_collection: CollectionSection::default(),
            adaptation: AdaptationSection::default(),
            reference: ReferenceSchedule::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        let explicit_bound = table.contains_key("excitation_bound");
        let mut cfg: Self = table.try_into()?;
        if !explicit_bound && cfg.strategies.contains(&Strategy::Au) {
            cfg.excitation_bound = Self::default().excitation_bound;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    /// Restricts the run to one strategy, dropping the excitation bound when
    /// it is no longer needed.
    pub fn restrict_to(&mut self, strategy: Strategy) {
        self.strategies = vec![strategy];
        if strategy != Strategy::Au {
            self.excitation_bound = None;
        } else if self.excitation_bound.is_none() {
            self.excitation_bound = Some(0.25);
        }
    }

    pub fn controller_config(&self) -> ControllerConfig {
        self.controller.to_controller_config()
    }

    pub fn depth(&self) -> usize {
        self.controller.past_horizon + self.controller.future_horizon
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.strategies.is_empty() {
            return fail("at least one strategy is required".into());
        }
        let mut sorted = self.strategies.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.strategies.len() {
            return fail("strategies must not repeat".into());
        }
        let has_au = self.strategies.contains(&Strategy::Au);
        match (has_au, self.excitation_bound) {
            (true, None) => return fail("excitation_bound is required when the au strategy runs".into()),
            (false, Some(_)) => return fail("excitation_bound is only allowed when the au strategy runs".into()),
            (true, Some(b)) if !(b >= 0.0 && b.is_finite()) => {
                return fail(format!("excitation_bound must be finite and >= 0, got {b}"))
            }
            _ => {}
        }
        if self.episode_length == 0 {
            return fail("episode_length must be positive".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if self.substeps == 0 {
            return fail("substeps must be positive".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        let c = &self.controller;
        for (name, v) in [("q", &c.q), ("r", &c.r), ("r_delta", &c.r_delta)] {
            if v.len() != 2 {
                return fail(format!("controller.{name} must list 2 diagonal entries, got {}", v.len()));
            }
        }
        self.controller_config()
            .validate()
            .map_err(|e| HarnessError::Config(format!("controller: {e}")))?;
        self.plant
            .validate()
            .map_err(|e| HarnessError::Config(format!("plant: {e}")))?;
        if !(self.noise.bound >= 0.0 && self.noise.bound.is_finite()) {
            return fail(format!("noise.bound must be finite and >= 0, got {}", self.noise.bound));
        }
        let dc = &self.data_collection;
        if dc.steps < self.depth() {
            return fail(format!(
                "data_collection.steps = {} is shorter than L = {}",
                dc.steps,
                self.depth()
            ));
        }
        if !(dc.input_bound >= 0.0 && dc.input_bound.is_finite()) {
            return fail(format!("data_collection.input_bound must be finite and >= 0, got {}", dc.input_bound));
        }
        let a = &self.adaptation;
        if !(a.rho >= 0.0 && a.rho.is_finite()) {
            return fail(format!("adaptation.rho must be finite and >= 0, got {}", a.rho));
        }
        if a.n_estimate == 0 {
            return fail("adaptation.n_estimate must be positive".into());
        }
        let columns = dc.steps - self.depth() + 1;
        let required = a.n_estimate + 2 * self.depth();
        if columns < required {
            return fail(format!(
                "data_collection.steps = {} gives {columns} trajectories, at least n + m*L = {required} are needed",
                dc.steps
            ));
        }
        self.reference.segment_steps(self.dt, self.episode_length)?;
        Ok(())
    }
}
