//! Dense convex quadratic programming.
//!
//! ```text
//!     minimize     1/2 z' H z + f' z
//!     subject to   A_eq z  = b_eq
//!                  A_in z <= b_in
//! ```
//!
//! Strictly convex problems are solved by a dual active-set method (Goldfarb
//! and Idnani). When `H` is only positive semidefinite the solver runs
//! proximal-point iterations, each a strictly convex subproblem, until the
//! original problem's KKT conditions hold. Every `Optimal` result has been
//! certified by [`kkt::kkt_report`], which shares no code with the solver.

mod dual;
pub mod dump;
pub mod kkt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    h: DMatrix<f64>,
    f: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    a_in: DMatrix<f64>,
    b_in: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        h: DMatrix<f64>,
        f: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
        a_in: DMatrix<f64>,
        b_in: DVector<f64>,
    ) -> Result<Self> {
        let d = f.len();
        if h.shape() != (d, d) {
            return Err(Error::Dimension(format!("H is {:?}, expected {d}x{d}", h.shape())));
        }
        if a_eq.ncols() != d || a_eq.nrows() != b_eq.len() {
            return Err(Error::Dimension(format!(
                "A_eq is {:?} with b_eq of length {}",
                a_eq.shape(),
                b_eq.len()
            )));
        }
        if a_in.ncols() != d || a_in.nrows() != b_in.len() {
            return Err(Error::Dimension(format!(
                "A_in is {:?} with b_in of length {}",
                a_in.shape(),
                b_in.len()
            )));
        }
        let scale = h.amax().max(1.0);
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "H is not symmetric (max |H - H'| = {asym:e})"
            )));
        }
        let finite = h.iter().chain(f.iter()).chain(a_eq.iter()).chain(b_eq.iter())
            .chain(a_in.iter()).chain(b_in.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("QP data contains non-finite values".into()));
        }
        Ok(Self { h, f, a_eq, b_eq, a_in, b_in })
    }

    /// Problem without constraints.
    pub fn unconstrained(h: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        let d = f.len();
        Self::new(
            h,
            f,
            DMatrix::zeros(0, d),
            DVector::zeros(0),
            DMatrix::zeros(0, d),
            DVector::zeros(0),
        )
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    pub fn a_eq(&self) -> &DMatrix<f64> {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &DVector<f64> {
        &self.b_eq
    }

    pub fn a_in(&self) -> &DMatrix<f64> {
        &self.a_in
    }

    pub fn b_in(&self) -> &DVector<f64> {
        &self.b_in
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn n_in(&self) -> usize {
        self.b_in.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.f.dot(z)
    }

    /// Same problem with the objective multiplied by `c`.
    pub fn scaled_objective(&self, c: f64) -> Self {
        Self {
            h: &self.h * c,
            f: &self.f * c,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    /// Largest scaled KKT violation, see [`kkt::KktReport::max`].
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Multipliers `y` of `A_eq z = b_eq` in `H z + f + A_eq' y + A_in' lambda = 0`.
    pub eq_multipliers: DVector<f64>,
    /// Multipliers `lambda >= 0` of `A_in z <= b_in`.
    pub ineq_multipliers: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct QpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Previous solution. Inequalities active there are tried first, and for
    /// semidefinite problems it seeds the proximal center.
    pub warm_start: Option<DVector<f64>>,
}

impl QpSettings {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            warm_start: None,
        }
    }

    pub fn with_warm_start(mut self, z: DVector<f64>) -> Self {
        self.warm_start = Some(z);
        self
    }
}

impl Default for QpSettings {
    fn default() -> Self {
        Self::new(1e-8, 1000)
    }
}

/// Solves `problem`. Never returns `Optimal` without a passing KKT certificate.
pub fn solve(problem: &QpProblem, settings: &QpSettings) -> QpSolution {
    let mut sol = match nalgebra::Cholesky::new(problem.h.clone()) {
        Some(chol) => dual::solve_strictly_convex(problem, &chol, settings),
        None => dual::solve_semidefinite(problem, settings),
    };
    if sol.status != QpStatus::Infeasible {
        let report = kkt::kkt_report(problem, &sol.z, &sol.eq_multipliers, &sol.ineq_multipliers);
        sol.kkt_residual = report.max();
        if sol.status == QpStatus::Optimal && sol.kkt_residual > settings.tol {
            log::debug!("QP solution failed certification: {report:?}");
            sol.status = QpStatus::MaxIterations;
        }
    }
    sol.objective = problem.objective(&sol.z);
    sol
}
