//! Two-link planar arm with viscous joint damping.
//!
//! ```text
//! M(theta) theta_dd + C(theta, theta_d) + G(theta) = tau
//! ```
//!
//! Point masses sit at the link tips. `theta_1` is measured from the upward
//! vertical, so the arm hangs at rest at `theta = (-pi, 0)`. The Coriolis
//! vector is the one obtained from the Lagrangian of this model:
//!
//! ```text
//! C_1 = -m2 l1 l2 (2 theta_d1 theta_d2 + theta_d2^2) sin(theta_2) + d1 theta_d1
//! C_2 =  m2 l1 l2 theta_d1^2 sin(theta_2)                       + d2 theta_d2
//! ```
//!
//! `g` enters `G` as a gravitational acceleration in m/s^2.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub d1: f64,
    pub d2: f64,
    pub g: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            m1: 0.3,
            m2: 0.1,
            l1: 0.4,
            l2: 0.2,
            d1: 0.001,
            d2: 0.001,
            g: 9.81,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("m1", self.m1), ("m2", self.m2), ("l1", self.l1), ("l2", self.l2), ("g", self.g)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("d1", self.d1), ("d2", self.d2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Same arm with both damping constants set to zero.
    pub fn undamped(self) -> Self {
        Self { d1: 0.0, d2: 0.0, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantState {
    pub theta: Vector2<f64>,
    pub theta_dot: Vector2<f64>,
}

impl PlantState {
    pub fn new(theta: Vector2<f64>, theta_dot: Vector2<f64>) -> Self {
        Self { theta, theta_dot }
    }

    /// Hanging rest position `(-pi, 0)`.
    pub fn lower_equilibrium() -> Self {
        Self::new(Vector2::new(-std::f64::consts::PI, 0.0), Vector2::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(self.theta_dot.iter()).all(|v| v.is_finite())
    }
}

pub fn mass_matrix(p: &RobotParams, theta: &Vector2<f64>) -> Matrix2<f64> {
    let mt = p.m1 + p.m2;
    let c2 = theta[1].cos();
    let m22 = p.m2 * p.l2 * p.l2;
    let m12 = m22 + p.m2 * p.l1 * p.l2 * c2;
    let m11 = mt * p.l1 * p.l1 + m22 + 2.0 * p.m2 * p.l1 * p.l2 * c2;
    Matrix2::new(m11, m12, m12, m22)
}

/// Coriolis, centrifugal and damping torques.
pub fn coriolis(p: &RobotParams, theta: &Vector2<f64>, theta_dot: &Vector2<f64>) -> Vector2<f64> {
    let h = p.m2 * p.l1 * p.l2 * theta[1].sin();
    let (w1, w2) = (theta_dot[0], theta_dot[1]);
    Vector2::new(
        -h * (2.0 * w1 * w2 + w2 * w2) + p.d1 * w1,
        h * w1 * w1 + p.d2 * w2,
    )
}

pub fn gravity(p: &RobotParams, theta: &Vector2<f64>) -> Vector2<f64> {
    let mt = p.m1 + p.m2;
    let s12 = (theta[0] + theta[1]).sin();
    Vector2::new(
        -mt * p.g * p.l1 * theta[0].sin() - p.m2 * p.g * p.l2 * s12,
        -p.m2 * p.g * p.l2 * s12,
    )
}

/// `theta_dd = M^-1 (tau - C - G)`.
pub fn acceleration(
    p: &RobotParams,
    theta: &Vector2<f64>,
    theta_dot: &Vector2<f64>,
    tau: &Vector2<f64>,
) -> Result<Vector2<f64>> {
    let finite = theta.iter().chain(theta_dot.iter()).chain(tau.iter()).all(|v| v.is_finite());
    if !finite {
        return Err(Error::Diverged(format!(
            "non-finite arguments: theta = {theta:?}, theta_dot = {theta_dot:?}, tau = {tau:?}"
        )));
    }
    let rhs = tau - coriolis(p, theta, theta_dot) - gravity(p, theta);
    mass_matrix(p, theta)
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| Error::InvalidArgument("inertia matrix is not positive definite".into()))
}

fn derivative(p: &RobotParams, s: &PlantState, tau: &Vector2<f64>) -> Result<PlantState> {
    Ok(PlantState::new(s.theta_dot, acceleration(p, &s.theta, &s.theta_dot, tau)?))
}

fn axpy(s: &PlantState, h: f64, k: &PlantState) -> PlantState {
    PlantState::new(s.theta + k.theta * h, s.theta_dot + k.theta_dot * h)
}

/// Integrates over `dt` with `tau` held constant, using `substeps` classical
/// Runge-Kutta steps.
pub fn step(
    p: &RobotParams,
    state: &PlantState,
    tau: &Vector2<f64>,
    dt: f64,
    substeps: usize,
) -> Result<PlantState> {
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and substeps >= 1, got dt = {dt}, substeps = {substeps}"
        )));
    }
    let h = dt / substeps as f64;
    let mut s = *state;
    for _ in 0..substeps {
        let k1 = derivative(p, &s, tau)?;
        let k2 = derivative(p, &axpy(&s, 0.5 * h, &k1), tau)?;
        let k3 = derivative(p, &axpy(&s, 0.5 * h, &k2), tau)?;
        let k4 = derivative(p, &axpy(&s, h, &k3), tau)?;
        s = PlantState::new(
            s.theta + (k1.theta + (k2.theta + k3.theta) * 2.0 + k4.theta) * (h / 6.0),
            s.theta_dot + (k1.theta_dot + (k2.theta_dot + k3.theta_dot) * 2.0 + k4.theta_dot) * (h / 6.0),
        );
    }
    if !s.is_finite() {
        return Err(Error::Diverged(format!("state became non-finite: {s:?}")));
    }
    Ok(s)
}

/// Kinetic plus potential energy, with zero potential at the hanging rest
/// position.
pub fn mechanical_energy(p: &RobotParams, s: &PlantState) -> f64 {
    let kinetic = 0.5 * s.theta_dot.dot(&(mass_matrix(p, &s.theta) * s.theta_dot));
    let potential = (p.m1 + p.m2) * p.g * p.l1 * (1.0 + s.theta[0].cos())
        + p.m2 * p.g * p.l2 * (1.0 + (s.theta[0] + s.theta[1]).cos());
    kinetic + potential
}

/// Bounded measurement noise, uniform on the infinity-norm ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub bound: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct NoiseSource {
    bound: f64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(model: &NoiseModel) -> Self {
        Self::with_stream(model, 0)
    }

    /// Independent sequence for the same seed, selected by `stream`.
    pub fn with_stream(model: &NoiseModel, stream: u64) -> Self {
        assert!(model.bound >= 0.0, "noise bound must be non-negative");
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(stream);
        Self { bound: model.bound, rng }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sample(&mut self) -> Vector2<f64> {
        if self.bound == 0.0 {
            return Vector2::zeros();
        }
        let b = self.bound;
        Vector2::new(self.rng.random_range(-b..=b), self.rng.random_range(-b..=b))
    }
}

/// `y = theta + eps`.
pub fn measure(state: &PlantState, noise: &mut NoiseSource) -> Vector2<f64> {
    state.theta + noise.sample()
}
