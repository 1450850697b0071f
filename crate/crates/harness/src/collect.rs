//! Initial data collection with random torques.

use deepc_core::plant::{self, measure, NoiseSource, PlantState, RobotParams};
use deepc_core::trajectory::{Dataset, Trajectory};
use nalgebra::{DVector, Vector2};
use rand::Rng;

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Collected {
    /// The full measured run (`T` samples).
    pub run: Trajectory,
    /// `T - L + 1` overlapping windows of the run.
    pub dataset: Dataset,
    /// Plant state after the last input.
    pub final_state: PlantState,
}

/// Applies i.i.d. torques uniform on `[-input_bound, input_bound]^2` from the
/// lower equilibrium for `steps` samples and slices the measured run into
/// Hankel windows of length `depth`.
#[allow(clippy::too_many_arguments)]
pub fn collect_initial_data<R: Rng + ?Sized>(
    params: &RobotParams,
    dt: f64,
    substeps: usize,
    steps: usize,
    input_bound: f64,
    depth: usize,
    inputs: &mut R,
    noise: &mut NoiseSource,
) -> Result<Collected> {
    let mut state = PlantState::lower_equilibrium();
    let mut us = Vec::with_capacity(steps);
    let mut ys = Vec::with_capacity(steps);
    for _ in 0..steps {
        let u = if input_bound > 0.0 {
            Vector2::new(
                inputs.random_range(-input_bound..=input_bound),
                inputs.random_range(-input_bound..=input_bound),
            )
        } else {
            Vector2::zeros()
        };
        let y = measure(&state, noise);
        state = plant::step(params, &state, &u, dt, substeps)?;
        us.push(DVector::from_column_slice(u.as_slice()));
        ys.push(DVector::from_column_slice(y.as_slice()));
    }
    let run = Trajectory::from_samples(&us, &ys)?;
    let dataset = Dataset::from_sliding_windows(&run, depth)?;
    Ok(Collected {
        run,
        dataset,
        final_state: state,
    })
}
