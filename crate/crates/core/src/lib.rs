//! Data-driven system representations and predictive control.
//!
//! Trajectories of an unknown system are arranged into (mosaic) Hankel
//! matrices whose column span stands in for a model. The representation is
//! refreshed online whenever recent closed-loop data keeps the data matrix
//! informative, as measured by a thresholded singular-value count, and feeds a
//! regularized predictive controller solved as a dense QP. A two-link arm
//! simulator is included for closed-loop experiments.

pub mod adapter;
pub mod controller;
pub mod error;
pub mod hankel;
pub mod linalg;
pub mod lti;
pub mod plant;
pub mod qp;
pub mod rank;
pub mod trajectory;

pub use adapter::{init_adapter, AdapterState, InitPolicy, UpdateDecision};
pub use controller::{
    build_ocp, compute_control, truncate_data_matrix, ControlStep, ControllerConfig,
    DeepcController, PastWindow,
};
pub use error::{Error, Result};
pub use hankel::{
    build_hankel, build_mosaic_hankel, check_generalized_pe, generalized_pe_rank,
    is_persistently_exciting, trajectory_membership, DataMatrix, Membership,
};
pub use lti::{simulate_lti, LtiSystem};
pub use plant::{NoiseModel, NoiseSource, PlantState, RobotParams};
pub use qp::{QpProblem, QpSettings, QpSolution, QpStatus};
pub use rank::{robustified_rank, singular_spectrum, threshold_window, SingularSpectrum, ThresholdWindow};
pub use trajectory::{Dataset, Trajectory};
