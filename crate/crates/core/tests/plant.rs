use deepc_core::plant::{
    acceleration, mass_matrix, measure, mechanical_energy, step, NoiseModel, NoiseSource,
    PlantState, RobotParams,
};
use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;

/// Jacobians of the two point-mass positions, from the kinematics
/// `p1 = l1 (sin t1, cos t1)`, `p2 = p1 + l2 (sin(t1 + t2), cos(t1 + t2))`.
fn jacobians(p: &RobotParams, q: &Vector2<f64>) -> (Matrix2<f64>, Matrix2<f64>) {
    let (c1, s1) = (q[0].cos(), q[0].sin());
    let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
    let j1 = Matrix2::new(p.l1 * c1, 0.0, -p.l1 * s1, 0.0);
    let j2 = Matrix2::new(p.l1 * c1 + p.l2 * c12, p.l2 * c12, -p.l1 * s1 - p.l2 * s12, -p.l2 * s12);
    (j1, j2)
}

fn kinematic_mass(p: &RobotParams, q: &Vector2<f64>) -> Matrix2<f64> {
    let (j1, j2) = jacobians(p, q);
    j1.transpose() * j1 * p.m1 + j2.transpose() * j2 * p.m2
}

fn kinematic_potential(p: &RobotParams, q: &Vector2<f64>) -> f64 {
    p.m1 * p.g * p.l1 * q[0].cos() + p.m2 * p.g * (p.l1 * q[0].cos() + p.l2 * (q[0] + q[1]).cos())
}

/// Euler-Lagrange equations with the inertia and potential derivatives taken
/// by central differences:
/// `M qdd + Mdot qd - 1/2 d/dq (qd' M qd) + dV/dq + D qd = tau`.
fn lagrangian_acceleration(p: &RobotParams, q: &Vector2<f64>, qd: &Vector2<f64>, tau: &Vector2<f64>) -> Vector2<f64> {
    let h = 1e-6;
    let mut m_dot = Matrix2::zeros();
    let mut dt_dq = Vector2::zeros();
    let mut dv_dq = Vector2::zeros();
    for k in 0..2 {
        let mut e = Vector2::zeros();
        e[k] = h;
        let (mp, mm) = (kinematic_mass(p, &(q + e)), kinematic_mass(p, &(q - e)));
        let dm = (mp - mm) / (2.0 * h);
        m_dot += dm * qd[k];
        dt_dq[k] = 0.5 * qd.dot(&(dm * qd));
        dv_dq[k] = (kinematic_potential(p, &(q + e)) - kinematic_potential(p, &(q - e))) / (2.0 * h);
    }
    let damping = Vector2::new(p.d1 * qd[0], p.d2 * qd[1]);
    let rhs = tau - m_dot * qd + dt_dq - dv_dq - damping;
    kinematic_mass(p, q).try_inverse().unwrap() * rhs
}

fn endpoint(p: &RobotParams, s0: &PlantState, substeps: usize) -> PlantState {
    (0..100).fold(*s0, |s, _| step(p, &s, &Vector2::new(0.2, -0.1), 0.01, substeps).unwrap())
}

#[test]
fn inertia_matches_kinematics() {
    let p = RobotParams::default();
    for i in 0..20 {
        let q = Vector2::new(0.3 * i as f64 - 3.0, 0.17 * i as f64 - 1.5);
        assert!((mass_matrix(&p, &q) - kinematic_mass(&p, &q)).amax() < 1e-15);
    }
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let p = RobotParams::default();
    let s0 = PlantState::lower_equilibrium();
    let mut s = s0;
    for _ in 0..100 {
        s = step(&p, &s, &Vector2::zeros(), 0.01, 10).unwrap();
    }
    assert!((s.theta - s0.theta).amax() <= 2.0 * f64::EPSILON * std::f64::consts::PI);
    // sin(-pi) evaluates to -1.2e-16, a residual torque at rounding level.
    assert!(s.theta_dot.amax() <= 100.0 * f64::EPSILON, "{:?}", s.theta_dot);
}

#[test]
fn undamped_energy_is_conserved() {
    let p = RobotParams::default().undamped();
    let starts = [
        PlantState::new(Vector2::new(-2.0, 0.5), Vector2::new(1.0, -2.0)),
        PlantState::new(Vector2::new(-1.0, 1.5), Vector2::zeros()),
        PlantState::new(Vector2::new(-3.0, -0.4), Vector2::new(-0.5, 3.0)),
    ];
    for s0 in starts {
        let e0 = mechanical_energy(&p, &s0);
        let mut s = s0;
        for _ in 0..100 {
            s = step(&p, &s, &Vector2::zeros(), 0.01, 10).unwrap();
        }
        let drift = (mechanical_energy(&p, &s) - e0).abs() / e0;
        assert!(drift < 1e-6, "drift {drift:e}");
    }
}

#[test]
fn runge_kutta_is_fourth_order() {
    let p = RobotParams::default();
    let s0 = PlantState::new(Vector2::new(-std::f64::consts::FRAC_PI_2, 1.0), Vector2::new(1.0, -1.0));
    let reference = endpoint(&p, &s0, 256);
    let subs = [1usize, 2, 4, 8];
    let pts: Vec<(f64, f64)> = subs
        .iter()
        .map(|&n| {
            let e = endpoint(&p, &s0, n);
            let err = (e.theta - reference.theta).norm() + (e.theta_dot - reference.theta_dot).norm();
            ((0.01 / n as f64).ln(), err.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((3.7..=4.3).contains(&slope), "slope {slope}");
}

#[test]
fn held_torque_matches_split_integration() {
    let p = RobotParams::default();
    let s0 = PlantState::new(Vector2::new(-2.5, 0.3), Vector2::new(0.4, 0.1));
    let tau = Vector2::new(0.3, -0.2);
    let whole = step(&p, &s0, &tau, 0.01, 10).unwrap();
    let split = (0..10).fold(s0, |s, _| step(&p, &s, &tau, 0.001, 1).unwrap());
    assert_eq!(whole, split);
}

#[test]
fn noise_is_bounded_and_reproducible() {
    let model = NoiseModel { bound: 1e-3, seed: 42 };
    let s = PlantState::lower_equilibrium();
    let mut a = NoiseSource::new(&model);
    let mut b = NoiseSource::new(&model);
    let mut other = NoiseSource::with_stream(&model, 1);
    let mut differs = false;
    for _ in 0..10_000 {
        let ya = measure(&s, &mut a);
        assert!((ya - s.theta).amax() <= 1e-3);
        assert_eq!(ya, measure(&s, &mut b));
        differs |= measure(&s, &mut other) != ya;
    }
    assert!(differs);
}

#[test]
fn divergence_is_reported() {
    let p = RobotParams::default();
    let s = PlantState::new(Vector2::new(0.0, 0.0), Vector2::new(f64::INFINITY, 0.0));
    assert!(step(&p, &s, &Vector2::zeros(), 0.01, 10).is_err());
}

fn angle() -> impl Strategy<Value = f64> {
    -7.0f64..7.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_lagrangian_oracle(t1 in angle(), t2 in angle(), w1 in -5.0f64..5.0, w2 in -5.0f64..5.0, u1 in -5.0f64..5.0, u2 in -5.0f64..5.0) {
        let p = RobotParams::default();
        let (q, qd, tau) = (Vector2::new(t1, t2), Vector2::new(w1, w2), Vector2::new(u1, u2));
        let a = acceleration(&p, &q, &qd, &tau).unwrap();
        let b = lagrangian_acceleration(&p, &q, &qd, &tau);
        prop_assert!((a - b).amax() <= 1e-6 * (1.0 + b.amax()), "{a:?} vs {b:?}");
    }

    #[test]
    fn inertia_is_symmetric_positive_definite(t1 in angle(), t2 in angle()) {
        let m = mass_matrix(&RobotParams::default(), &Vector2::new(t1, t2));
        prop_assert_eq!(m[(0, 1)], m[(1, 0)]);
        prop_assert!(m.cholesky().is_some());
    }

    #[test]
    fn damped_energy_never_increases(t1 in angle(), t2 in angle(), w1 in -3.0f64..3.0, w2 in -3.0f64..3.0) {
        let p = RobotParams { d1: 0.01, d2: 0.01, ..Default::default() };
        let mut s = PlantState::new(Vector2::new(t1, t2), Vector2::new(w1, w2));
        let mut e = mechanical_energy(&p, &s);
        for _ in 0..50 {
            s = step(&p, &s, &Vector2::zeros(), 0.01, 10).unwrap();
            let next = mechanical_energy(&p, &s);
            prop_assert!(next <= e + 1e-9 * (1.0 + e));
            e = next;
        }
    }
}
