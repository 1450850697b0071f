//! Goldfarb-Idnani dual active-set method.
//!
//! Constraints are handled internally in the form `n' z >= c`; inequalities
//! `a' z <= b` become `n = -a, c = -b` and equalities are oriented so the
//! starting point violates them from below. The factorization keeps
//! `J = L^-T Q` and an upper-triangular `R` with `J' N = [R; 0]` for the active
//! normals `N`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kkt::kkt_report;
use super::{QpProblem, QpSettings, QpSolution, QpStatus};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Constraint {
    Eq { row: usize, sign: f64 },
    In(usize),
}

enum Failure {
    Infeasible,
    MaxIterations,
}

enum Added {
    Yes,
    Redundant,
}

struct DualSolver<'a> {
    problem: &'a QpProblem,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    active: Vec<Constraint>,
    u: Vec<f64>,
    z: DVector<f64>,
    objective: f64,
    iterations: usize,
    max_iter: usize,
    tol: f64,
}

impl<'a> DualSolver<'a> {
    /// `l` is the lower Cholesky factor of the (possibly shifted) Hessian and
    /// `f` the matching linear term.
    fn new(problem: &'a QpProblem, l: &DMatrix<f64>, f: &DVector<f64>, settings: &QpSettings) -> Self {
        let d = problem.dim();
        let l_inv = l
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .expect("Cholesky factor has a positive diagonal");
        let j = l_inv.transpose();
        let z = -(&j * (j.tr_mul(f)));
        let objective = 0.5 * f.dot(&z);
        Self {
            problem,
            j,
            r: DMatrix::zeros(d, d),
            active: Vec::new(),
            u: Vec::new(),
            z,
            objective,
            iterations: 0,
            max_iter: settings.max_iter,
            tol: settings.tol,
        }
    }

    fn normal(&self, c: Constraint) -> (DVector<f64>, f64) {
        match c {
            Constraint::Eq { row, sign } => (
                self.problem.a_eq().row(row).transpose() * sign,
                self.problem.b_eq()[row] * sign,
            ),
            Constraint::In(i) => (
                -self.problem.a_in().row(i).transpose(),
                -self.problem.b_in()[i],
            ),
        }
    }

    fn run(&mut self, hint: &[bool]) -> Result<(), Failure> {
        for row in 0..self.problem.n_eq() {
            let s = self.problem.a_eq().row(row).transpose().dot(&self.z) - self.problem.b_eq()[row];
            let sign = if s > 0.0 { -1.0 } else { 1.0 };
            if let Added::Redundant = self.add(Constraint::Eq { row, sign })? {
                log::trace!("equality row {row} is redundant");
            }
        }
        while let Some(i) = self.most_violated(hint) {
            self.add(Constraint::In(i))?;
        }
        Ok(())
    }

    /// Most violated inactive inequality, preferring hinted constraints.
    fn most_violated(&self, hint: &[bool]) -> Option<usize> {
        let a = self.problem.a_in();
        let b = self.problem.b_in();
        let viol = a * &self.z - b;
        let mut best: Option<(bool, f64, usize)> = None;
        for i in 0..b.len() {
            if self.active.contains(&Constraint::In(i)) {
                continue;
            }
            let scale = a.row(i).norm();
            if scale == 0.0 || viol[i] <= 1e-2 * self.tol * (1.0 + b[i].abs()) {
                continue;
            }
            let key = (hint.get(i).copied().unwrap_or(false), viol[i] / scale, i);
            best = match best {
                Some(cur) if (cur.0, cur.1) >= (key.0, key.1) => Some(cur),
                _ => Some(key),
            };
        }
        best.map(|(_, _, i)| i)
    }

    fn add(&mut self, p: Constraint) -> Result<Added, Failure> {
        let (np, cp) = self.normal(p);
        let dim = self.problem.dim();
        let mut u_plus = 0.0;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iter {
                return Err(Failure::MaxIterations);
            }
            let q = self.active.len();
            let d = self.j.tr_mul(&np);
            let d2 = d.rows(q, dim - q);
            let d2_sq = d2.norm_squared();
            let z_dir = self.j.columns(q, dim - q) * d2;
            let r = self.dual_direction(&d, q);

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (k, c) in self.active.iter().enumerate() {
                if let Constraint::In(_) = c {
                    if r[k] > 0.0 {
                        let ratio = self.u[k] / r[k];
                        if ratio < t1 {
                            t1 = ratio;
                            drop_at = Some(k);
                        }
                    }
                }
            }

            let s = np.dot(&self.z) - cp;
            let t2 = if d2_sq <= 1e-24 * d.norm_squared() {
                f64::INFINITY
            } else {
                -s / d2_sq
            };

            if t1.is_infinite() && t2.is_infinite() {
                if matches!(p, Constraint::Eq { .. }) && s.abs() <= self.tol * (1.0 + cp.abs()) {
                    return Ok(Added::Redundant);
                }
                return Err(Failure::Infeasible);
            }

            let t = t1.min(t2);
            if t2.is_finite() {
                let previous = self.objective;
                self.z.axpy(t, &z_dir, 1.0);
                self.objective += t * d2_sq * (0.5 * t + u_plus);
                debug_assert!(
                    self.objective >= previous - 1e-9 * (1.0 + previous.abs()),
                    "dual objective decreased: {previous} -> {}",
                    self.objective
                );
            }
            for (uk, rk) in self.u.iter_mut().zip(r.iter()) {
                *uk -= t * rk;
            }
            u_plus += t;

            if t2 <= t1 {
                self.push_active(p, d, u_plus);
                return Ok(Added::Yes);
            }
            let k = drop_at.expect("finite partial step has a blocking constraint");
            self.u[k] = 0.0;
            self.drop_active(k);
        }
    }

    /// Solves `R r = d[..q]`.
    fn dual_direction(&self, d: &DVector<f64>, q: usize) -> DVector<f64> {
        let mut r = d.rows(0, q).into_owned();
        for i in (0..q).rev() {
            let mut acc = r[i];
            for k in i + 1..q {
                acc -= self.r[(i, k)] * r[k];
            }
            r[i] = acc / self.r[(i, i)];
        }
        r
    }

    fn rotate_j(&mut self, a: usize, b: usize, c: f64, s: f64) {
        for row in 0..self.j.nrows() {
            let x = self.j[(row, a)];
            let y = self.j[(row, b)];
            self.j[(row, a)] = c * x + s * y;
            self.j[(row, b)] = -s * x + c * y;
        }
    }

    fn push_active(&mut self, p: Constraint, mut d: DVector<f64>, multiplier: f64) {
        let q = self.active.len();
        let dim = self.problem.dim();
        for k in (q + 1..dim).rev() {
            let (a, b) = (d[k - 1], d[k]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            d[k - 1] = h;
            d[k] = 0.0;
            self.rotate_j(k - 1, k, c, s);
        }
        for i in 0..=q {
            self.r[(i, q)] = d[i];
        }
        self.active.push(p);
        self.u.push(multiplier);
    }

    fn drop_active(&mut self, k: usize) {
        let q = self.active.len();
        for col in k..q - 1 {
            for row in 0..q {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for jcol in k..q.saturating_sub(1) {
            let (a, b) = (self.r[(jcol, jcol)], self.r[(jcol + 1, jcol)]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for col in jcol..q - 1 {
                let x = self.r[(jcol, col)];
                let y = self.r[(jcol + 1, col)];
                self.r[(jcol, col)] = c * x + s * y;
                self.r[(jcol + 1, col)] = -s * x + c * y;
            }
            self.r[(jcol + 1, jcol)] = 0.0;
            self.rotate_j(jcol, jcol + 1, c, s);
        }
        self.active.remove(k);
        self.u.remove(k);
    }

    fn multipliers(&self) -> (DVector<f64>, DVector<f64>) {
        let mut y = DVector::zeros(self.problem.n_eq());
        let mut lambda = DVector::zeros(self.problem.n_in());
        for (c, &u) in self.active.iter().zip(&self.u) {
            match *c {
                Constraint::Eq { row, sign } => y[row] = -sign * u,
                Constraint::In(i) => lambda[i] = u,
            }
        }
        (y, lambda)
    }

    /// Re-solves the equality-constrained KKT system on the final active set.
    /// Returns `None` if the result is no better than the current iterate.
    fn polish(&self, problem: &QpProblem) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let d = problem.dim();
        let q = self.active.len();
        let mut kkt = DMatrix::zeros(d + q, d + q);
        let mut rhs = DVector::zeros(d + q);
        kkt.view_mut((0, 0), (d, d)).copy_from(problem.h());
        rhs.rows_mut(0, d).copy_from(&(-problem.f()));
        for (k, &c) in self.active.iter().enumerate() {
            let (n, cval) = self.normal(c);
            kkt.view_mut((0, d + k), (d, 1)).copy_from(&n);
            kkt.view_mut((d + k, 0), (1, d)).copy_from(&n.transpose());
            rhs[d + k] = cval;
        }
        let sol = kkt.lu().solve(&rhs)?;
        let z = sol.rows(0, d).into_owned();
        // Stationarity reads H z + f - N u = 0, so the system's unknowns are -u.
        let mut y = DVector::zeros(problem.n_eq());
        let mut lambda = DVector::zeros(problem.n_in());
        for (k, c) in self.active.iter().enumerate() {
            let u = -sol[d + k];
            match *c {
                Constraint::Eq { row, sign } => y[row] = -sign * u,
                Constraint::In(i) => lambda[i] = u,
            }
        }
        Some((z, y, lambda))
    }
}

fn warm_start_hint(problem: &QpProblem, settings: &QpSettings) -> Vec<bool> {
    match &settings.warm_start {
        Some(z) if z.len() == problem.dim() => {
            let slack = problem.b_in() - problem.a_in() * z;
            slack
                .iter()
                .zip(problem.b_in().iter())
                .map(|(s, b)| s.abs() <= 1e-6 * (1.0 + b.abs()))
                .collect()
        }
        _ => vec![false; problem.n_in()],
    }
}

fn finish(
    solver: &DualSolver<'_>,
    status: QpStatus,
    z: DVector<f64>,
    y: DVector<f64>,
    lambda: DVector<f64>,
) -> QpSolution {
    QpSolution {
        objective: 0.0,
        z,
        status,
        kkt_residual: f64::INFINITY,
        iterations: solver.iterations,
        eq_multipliers: y,
        ineq_multipliers: lambda,
    }
}

pub(super) fn solve_strictly_convex(
    problem: &QpProblem,
    chol: &Cholesky<f64, Dyn>,
    settings: &QpSettings,
) -> QpSolution {
    let hint = warm_start_hint(problem, settings);
    let mut solver = DualSolver::new(problem, &chol.l(), problem.f(), settings);
    let outcome = solver.run(&hint);
    let (y, lambda) = solver.multipliers();
    match outcome {
        Err(Failure::Infeasible) => finish(&solver, QpStatus::Infeasible, solver.z.clone(), y, lambda),
        Err(Failure::MaxIterations) => {
            finish(&solver, QpStatus::MaxIterations, solver.z.clone(), y, lambda)
        }
        Ok(()) => {
            let residual = kkt_report(problem, &solver.z, &y, &lambda).max();
            if residual > settings.tol {
                if let Some((z, py, pl)) = solver.polish(problem) {
                    if kkt_report(problem, &z, &py, &pl).max() < residual {
                        return finish(&solver, QpStatus::Optimal, z, py, pl);
                    }
                }
            }
            finish(&solver, QpStatus::Optimal, solver.z.clone(), y, lambda)
        }
    }
}

/// Proximal-point iterations `z+ = argmin q(z) + eps/2 ||z - z_k||^2` over the
/// original constraints. Each subproblem is strictly convex; the sequence
/// converges to a minimizer of the semidefinite problem when one exists.
pub(super) fn solve_semidefinite(problem: &QpProblem, settings: &QpSettings) -> QpSolution {
    let d = problem.dim();
    let eps = 1e-4 * problem.h().amax().max(1.0);
    let shifted = problem.h() + DMatrix::identity(d, d) * eps;
    let Some(chol) = Cholesky::new(shifted) else {
        // H has a negative eigenvalue below -eps: not convex.
        return QpSolution {
            z: DVector::zeros(d),
            objective: 0.0,
            status: QpStatus::MaxIterations,
            kkt_residual: f64::INFINITY,
            iterations: 0,
            eq_multipliers: DVector::zeros(problem.n_eq()),
            ineq_multipliers: DVector::zeros(problem.n_in()),
        };
    };
    let l = chol.l();
    let mut center = settings
        .warm_start
        .clone()
        .filter(|z| z.len() == d)
        .unwrap_or_else(|| DVector::zeros(d));
    let mut total_iterations = 0;
    let mut last = None;
    while total_iterations < settings.max_iter {
        let f = problem.f() - &center * eps;
        let inner = QpSettings {
            tol: settings.tol,
            max_iter: settings.max_iter - total_iterations,
            warm_start: Some(center.clone()),
        };
        let hint = warm_start_hint(problem, &inner);
        let mut solver = DualSolver::new(problem, &l, &f, &inner);
        let outcome = solver.run(&hint);
        total_iterations += solver.iterations.max(1);
        let (y, lambda) = solver.multipliers();
        let status = match outcome {
            Err(Failure::Infeasible) => QpStatus::Infeasible,
            Err(Failure::MaxIterations) => QpStatus::MaxIterations,
            Ok(()) => QpStatus::Optimal,
        };
        let z = solver.z.clone();
        let certified =
            status == QpStatus::Optimal && kkt_report(problem, &z, &y, &lambda).max() <= settings.tol;
        let mut sol = finish(&solver, status, z.clone(), y, lambda);
        sol.iterations = total_iterations;
        match status {
            QpStatus::Infeasible => return sol,
            QpStatus::Optimal if certified => return sol,
            QpStatus::MaxIterations => {
                last = Some(sol);
                break;
            }
            QpStatus::Optimal => {}
        }
        if !z.iter().all(|v| v.is_finite()) {
            break;
        }
        center = z;
        sol.status = QpStatus::MaxIterations;
        last = Some(sol);
    }
    let mut sol = last.unwrap_or_else(|| QpSolution {
        z: center,
        objective: 0.0,
        status: QpStatus::MaxIterations,
        kkt_residual: f64::INFINITY,
        iterations: total_iterations,
        eq_multipliers: DVector::zeros(problem.n_eq()),
        ineq_multipliers: DVector::zeros(problem.n_in()),
    });
    sol.status = QpStatus::MaxIterations;
    sol
}
