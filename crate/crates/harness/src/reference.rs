//! Piecewise-linear joint-angle reference.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Hold at `initial`, ramp to `intermediate`, hold, ramp to `end`, hold until
/// the episode ends. Durations are in seconds and must be whole multiples of
/// the sampling time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSchedule {
    pub initial: [f64; 2],
    pub intermediate: [f64; 2],
    pub end: [f64; 2],
    pub initial_hold: f64,
    pub ramp_up: f64,
    pub hold: f64,
    pub ramp_down: f64,
}

impl Default for ReferenceSchedule {
    fn default() -> Self {
        Self {
            initial: [-PI, 0.0],
            intermediate: [-FRAC_PI_2, FRAC_PI_2],
            end: [0.0, 0.0],
            initial_hold: 0.0,
            ramp_up: 3.0,
            hold: 3.5,
            ramp_down: 3.0,
        }
    }
}

/// Sample ranges of the schedule segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segments {
    pub initial_hold: (usize, usize),
    pub ramp_up: (usize, usize),
    pub hold: (usize, usize),
    pub ramp_down: (usize, usize),
    pub final_hold: (usize, usize),
}

fn whole_steps(name: &str, seconds: f64, dt: f64) -> Result<usize> {
    if !(seconds >= 0.0 && seconds.is_finite()) {
        return Err(HarnessError::Config(format!("reference.{name} must be finite and >= 0, got {seconds}")));
    }
    let steps = (seconds / dt).round();
    if (steps * dt - seconds).abs() > 1e-9 * seconds.max(1.0) {
        return Err(HarnessError::Config(format!(
            "reference.{name} = {seconds} s is not a multiple of dt = {dt} s"
        )));
    }
    Ok(steps as usize)
}

impl ReferenceSchedule {
    pub fn segment_steps(&self, dt: f64, episode_length: usize) -> Result<Segments> {
        let a = whole_steps("initial_hold", self.initial_hold, dt)?;
        let b = a + whole_steps("ramp_up", self.ramp_up, dt)?;
        let c = b + whole_steps("hold", self.hold, dt)?;
        let d = c + whole_steps("ramp_down", self.ramp_down, dt)?;
        if d > episode_length {
            return Err(HarnessError::Config(format!(
                "reference segments need {d} samples but the episode has {episode_length}"
            )));
        }
        for v in [self.initial, self.intermediate, self.end].iter().flatten() {
            if !v.is_finite() {
                return Err(HarnessError::Config("reference waypoints must be finite".into()));
            }
        }
        Ok(Segments {
            initial_hold: (0, a),
            ramp_up: (a, b),
            hold: (b, c),
            ramp_down: (c, d),
            final_hold: (d, episode_length),
        })
    }
}

fn lerp(a: [f64; 2], b: [f64; 2], j: usize, n: usize) -> Vector2<f64> {
    let t = j as f64 / n as f64;
    Vector2::new(a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
}

/// One reference sample per step, `episode_length` in total.
pub fn build_reference(schedule: &ReferenceSchedule, dt: f64, episode_length: usize) -> Result<Vec<Vector2<f64>>> {
    let s = schedule.segment_steps(dt, episode_length)?;
    let v = |w: [f64; 2]| Vector2::new(w[0], w[1]);
    let out = (0..episode_length)
        .map(|k| {
            if k < s.initial_hold.1 {
                v(schedule.initial)
            } else if k < s.ramp_up.1 {
                lerp(schedule.initial, schedule.intermediate, k - s.ramp_up.0, s.ramp_up.1 - s.ramp_up.0)
            } else if k < s.hold.1 {
                v(schedule.intermediate)
            } else if k < s.ramp_down.1 {
                lerp(schedule.intermediate, schedule.end, k - s.ramp_down.0, s.ramp_down.1 - s.ramp_down.0)
            } else {
                v(schedule.end)
            }
        })
        .collect();
    Ok(out)
}

/// `p x horizon` slice starting at `k`; samples past the end repeat the last
/// reference value.
pub fn reference_window(reference: &[Vector2<f64>], k: usize, horizon: usize) -> DMatrix<f64> {
    let last = reference.len() - 1;
    DMatrix::from_fn(2, horizon, |i, j| reference[(k + j).min(last)][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_segments_fill_ten_seconds() {
        let s = ReferenceSchedule::default().segment_steps(0.01, 1000).unwrap();
        assert_eq!(s.ramp_up, (0, 300));
        assert_eq!(s.hold, (300, 650));
        assert_eq!(s.ramp_down, (650, 950));
        assert_eq!(s.final_hold, (950, 1000));
    }

    #[test]
    fn overlong_schedule_is_a_config_error() {
        let sched = ReferenceSchedule {
            hold: 5.0,
            ..Default::default()
        };
        assert_eq!(sched.segment_steps(0.01, 1000).unwrap_err().exit_code(), 1);
        let odd = ReferenceSchedule {
            hold: 3.505,
            ..Default::default()
        };
        assert!(odd.segment_steps(0.01, 1000).is_err());
    }

    #[test]
    fn window_clamps_at_the_end() {
        let r = build_reference(&ReferenceSchedule::default(), 0.01, 1000).unwrap();
        let w = reference_window(&r, 995, 10);
        assert_eq!(w.ncols(), 10);
        assert!(w.iter().all(|&v| v == 0.0));
    }
}
