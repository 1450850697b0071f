//! Solver-independent KKT certificate.
//!
//! All measures are scaled so they are comparable to a relative tolerance:
//!
//! - stationarity: `||H z + f + A_eq' y + A_in' l||_inf / (1 + max of the term norms)`
//! - primal equality: `||A_eq z - b_eq||_inf / (1 + ||b_eq||_inf)`
//! - primal inequality: `||max(A_in z - b_in, 0)||_inf / (1 + ||b_in||_inf)`
//! - dual feasibility: `||max(-l, 0)||_inf`
//! - complementarity: `max_i |l_i (b_in - A_in z)_i| / ((1 + ||l||_inf)(1 + ||b_in||_inf))`

use nalgebra::DVector;

use super::QpProblem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_equality: f64,
    pub primal_inequality: f64,
    pub dual_feasibility: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        [
            self.stationarity,
            self.primal_equality,
            self.primal_inequality,
            self.dual_feasibility,
            self.complementarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn kkt_report(
    problem: &QpProblem,
    z: &DVector<f64>,
    eq_multipliers: &DVector<f64>,
    ineq_multipliers: &DVector<f64>,
) -> KktReport {
    let hz = problem.h() * z;
    let eq_term = problem.a_eq().transpose() * eq_multipliers;
    let in_term = problem.a_in().transpose() * ineq_multipliers;
    let grad = &hz + problem.f() + &eq_term + &in_term;
    let grad_scale = 1.0
        + [inf_norm(&hz), inf_norm(problem.f()), inf_norm(&eq_term), inf_norm(&in_term)]
            .into_iter()
            .fold(0.0, f64::max);

    let eq_res = problem.a_eq() * z - problem.b_eq();
    let slack = problem.b_in() - problem.a_in() * z;
    let b_in_scale = 1.0 + inf_norm(problem.b_in());

    let violation = slack.iter().fold(0.0, |acc: f64, s| acc.max(-s));
    let dual = ineq_multipliers.iter().fold(0.0, |acc: f64, l| acc.max(-l));
    let comp = slack
        .iter()
        .zip(ineq_multipliers.iter())
        .fold(0.0, |acc: f64, (s, l)| acc.max((s * l).abs()));

    KktReport {
        stationarity: inf_norm(&grad) / grad_scale,
        primal_equality: inf_norm(&eq_res) / (1.0 + inf_norm(problem.b_eq())),
        primal_inequality: violation.max(0.0) / b_in_scale,
        dual_feasibility: dual.max(0.0),
        complementarity: comp / ((1.0 + inf_norm(ineq_multipliers)) * b_in_scale),
    }
}
