//! Regularized data-enabled predictive control.
//!
//! With `L = Tp + Tf`, the data matrix is split row-wise into past and future
//! input blocks `U_p, U_f` and output blocks `Y_p, Y_f`. Each step solves
//!
//! ```text
//! minimize    sum_i ||y_i - r_i||_Q^2 + ||u_i||_R^2 + ||u_i - u_{i-1}||_Rd^2
//!             + lambda_alpha ||alpha||^2 + lambda_mu ||mu||^2
//! subject to  U_p alpha = u_p,   U_f alpha = u_f,
//!             Y_p alpha = y_p + mu,   Y_f alpha = y_f,
//!             |u_i|_inf <= u_max,   |u_i - u_{i-1}|_inf <= du_max
//! ```
//!
//! over `z = (u_f, y_f, alpha, mu)`, with `u_{-1}` the last applied input.
//! Only the first predicted input is applied.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{build_mosaic_hankel, DataMatrix};
use crate::linalg::thin_svd;
use crate::qp::kkt::KktReport;
use crate::qp::{self, QpProblem, QpSettings, QpStatus};
use crate::trajectory::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerConfig {
    pub past_horizon: usize,
    pub future_horizon: usize,
    /// Output weight (`p x p`).
    pub q: DMatrix<f64>,
    /// Input weight (`m x m`).
    pub r: DMatrix<f64>,
    /// Input-rate weight (`m x m`).
    pub r_delta: DMatrix<f64>,
    pub lambda_alpha: f64,
    pub lambda_mu: f64,
    pub u_max: f64,
    pub du_max: f64,
    /// Replace the data matrix by its best rank-`r` approximation.
    pub svd_truncation: Option<usize>,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
}

impl ControllerConfig {
    /// Settings used for the two-link arm.
    pub fn two_link_defaults() -> Self {
        Self {
            past_horizon: 4,
            future_horizon: 10,
            q: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0])),
            r: DMatrix::from_diagonal(&DVector::from_vec(vec![1e-5, 2e-5])),
            r_delta: DMatrix::from_diagonal(&DVector::from_vec(vec![2e-4, 4e-4])),
            lambda_alpha: 5e-5,
            lambda_mu: 1e3,
            u_max: 5.0,
            du_max: 1.0,
            svd_truncation: None,
            qp_tol: 1e-6,
            qp_max_iter: 5000,
        }
    }

    /// `Tp + Tf`.
    pub fn depth(&self) -> usize {
        self.past_horizon + self.future_horizon
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.past_horizon == 0 || self.future_horizon == 0 {
            return Err(Error::InvalidArgument("horizons must be at least 1".into()));
        }
        let m = self.r.nrows();
        for (name, w, dim) in [("Q", &self.q, self.q.nrows()), ("R", &self.r, m), ("R_delta", &self.r_delta, m)] {
            if w.shape() != (dim, dim) || dim == 0 {
                return Err(Error::Dimension(format!("{name} is {:?}, expected {dim}x{dim}", w.shape())));
            }
            check_psd(name, w)?;
        }
        for (name, v) in [
            ("lambda_alpha", self.lambda_alpha),
            ("lambda_mu", self.lambda_mu),
            ("u_max", self.u_max),
            ("du_max", self.du_max),
            ("qp_tol", self.qp_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.qp_max_iter == 0 {
            return Err(Error::InvalidArgument("qp_max_iter must be positive".into()));
        }
        if self.svd_truncation == Some(0) {
            return Err(Error::InvalidArgument("truncation rank must be positive".into()));
        }
        Ok(())
    }
}

fn check_psd(name: &str, w: &DMatrix<f64>) -> Result<()> {
    let scale = w.amax().max(1.0);
    if (w - w.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!("{name} is not symmetric")));
    }
    let min_eig = w.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "{name} is not positive semidefinite (eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// The `Tp` most recent samples and the last applied input.
#[derive(Clone, Debug, PartialEq)]
pub struct PastWindow {
    /// `m x Tp`, oldest sample first.
    pub inputs: DMatrix<f64>,
    /// `p x Tp`.
    pub outputs: DMatrix<f64>,
    pub prev_input: DVector<f64>,
}

/// Index ranges of the blocks in the decision vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OcpLayout {
    pub input_dim: usize,
    pub output_dim: usize,
    pub past_horizon: usize,
    pub future_horizon: usize,
    pub columns: usize,
}

impl OcpLayout {
    pub fn u_f(&self) -> Range<usize> {
        0..self.input_dim * self.future_horizon
    }

    pub fn y_f(&self) -> Range<usize> {
        let s = self.u_f().end;
        s..s + self.output_dim * self.future_horizon
    }

    pub fn alpha(&self) -> Range<usize> {
        let s = self.y_f().end;
        s..s + self.columns
    }

    pub fn mu(&self) -> Range<usize> {
        let s = self.alpha().end;
        s..s + self.output_dim * self.past_horizon
    }

    pub fn dim(&self) -> usize {
        self.mu().end
    }
}

/// A built OCP. The tracking cost at `z` is `problem.objective(z) + constant`.
#[derive(Clone, Debug)]
pub struct Ocp {
    pub problem: QpProblem,
    pub constant: f64,
    pub layout: OcpLayout,
}

impl Ocp {
    pub fn cost(&self, z: &DVector<f64>) -> f64 {
        self.problem.objective(z) + self.constant
    }
}

fn add_block(h: &mut DMatrix<f64>, row: usize, col: usize, block: &DMatrix<f64>) {
    let mut view = h.view_mut((row, col), block.shape());
    view += block;
}

/// `reference` is `p x Tf`; column `i` is the target for prediction step `i`.
pub fn build_ocp(
    dm: &DataMatrix,
    past: &PastWindow,
    reference: &DMatrix<f64>,
    cfg: &ControllerConfig,
) -> Result<Ocp> {
    let (m, p) = (dm.input_dim(), dm.output_dim());
    let (tp, tf) = (cfg.past_horizon, cfg.future_horizon);
    if dm.depth() != tp + tf {
        return Err(Error::Dimension(format!(
            "data matrix depth {} differs from Tp + Tf = {}",
            dm.depth(),
            tp + tf
        )));
    }
    if cfg.q.shape() != (p, p) || cfg.r.shape() != (m, m) || cfg.r_delta.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "weights are Q {:?}, R {:?}, R_delta {:?} for m = {m}, p = {p}",
            cfg.q.shape(),
            cfg.r.shape(),
            cfg.r_delta.shape()
        )));
    }
    if past.inputs.shape() != (m, tp) || past.outputs.shape() != (p, tp) || past.prev_input.len() != m {
        return Err(Error::Dimension(format!(
            "past window is inputs {:?}, outputs {:?}, previous input {}; expected ({m}, {tp}), ({p}, {tp}), {m}",
            past.inputs.shape(),
            past.outputs.shape(),
            past.prev_input.len()
        )));
    }
    if reference.shape() != (p, tf) {
        return Err(Error::Dimension(format!(
            "reference is {:?}, expected ({p}, {tf})",
            reference.shape()
        )));
    }

    let layout = OcpLayout {
        input_dim: m,
        output_dim: p,
        past_horizon: tp,
        future_horizon: tf,
        columns: dm.ncols(),
    };
    let d = layout.dim();
    let (u0, y0, a0, mu0) = (layout.u_f().start, layout.y_f().start, layout.alpha().start, layout.mu().start);

    let mut h = DMatrix::zeros(d, d);
    let mut f = DVector::zeros(d);
    let mut constant = 0.0;

    for i in 0..tf {
        let yi = y0 + i * p;
        add_block(&mut h, yi, yi, &(&cfg.q * 2.0));
        let ri = reference.column(i);
        let qr = &cfg.q * ri;
        f.rows_mut(yi, p).axpy(-2.0, &qr, 1.0);
        constant += ri.dot(&qr);

        let ui = u0 + i * m;
        add_block(&mut h, ui, ui, &(&cfg.r * 2.0 + &cfg.r_delta * 2.0));
        if i == 0 {
            let rd_prev = &cfg.r_delta * &past.prev_input;
            f.rows_mut(ui, m).axpy(-2.0, &rd_prev, 1.0);
            constant += past.prev_input.dot(&rd_prev);
        } else {
            let prev = ui - m;
            add_block(&mut h, prev, prev, &(&cfg.r_delta * 2.0));
            add_block(&mut h, ui, prev, &(&cfg.r_delta * -2.0));
            add_block(&mut h, prev, ui, &(&cfg.r_delta * -2.0));
        }
    }
    for k in layout.alpha() {
        h[(k, k)] = 2.0 * cfg.lambda_alpha;
    }
    for k in layout.mu() {
        h[(k, k)] = 2.0 * cfg.lambda_mu;
    }

    // Rows follow the data matrix: U_p, U_f, Y_p, Y_f.
    let entries = dm.entries();
    let n_rows = (m + p) * (tp + tf);
    let mut a_eq = DMatrix::zeros(n_rows, d);
    let mut b_eq = DVector::zeros(n_rows);
    a_eq.view_mut((0, a0), (n_rows, layout.columns)).copy_from(entries);
    let up_rows = m * tp;
    let uf_rows = m * tf;
    let yp_start = up_rows + uf_rows;
    let yf_start = yp_start + p * tp;
    b_eq.rows_mut(0, up_rows).copy_from_slice(past.inputs.as_slice());
    for k in 0..uf_rows {
        a_eq[(up_rows + k, u0 + k)] = -1.0;
    }
    for k in 0..p * tp {
        a_eq[(yp_start + k, mu0 + k)] = -1.0;
    }
    b_eq.rows_mut(yp_start, p * tp).copy_from_slice(past.outputs.as_slice());
    for k in 0..p * tf {
        a_eq[(yf_start + k, y0 + k)] = -1.0;
    }

    // Two-sided magnitude bounds, then two-sided rate bounds.
    let nu = m * tf;
    let mut a_in = DMatrix::zeros(4 * nu, d);
    let mut b_in = DVector::zeros(4 * nu);
    for k in 0..nu {
        a_in[(2 * k, u0 + k)] = 1.0;
        a_in[(2 * k + 1, u0 + k)] = -1.0;
        b_in[2 * k] = cfg.u_max;
        b_in[2 * k + 1] = cfg.u_max;
    }
    let base = 2 * nu;
    for k in 0..nu {
        let (up, lo) = (base + 2 * k, base + 2 * k + 1);
        a_in[(up, u0 + k)] = 1.0;
        a_in[(lo, u0 + k)] = -1.0;
        b_in[up] = cfg.du_max;
        b_in[lo] = cfg.du_max;
        if k >= m {
            a_in[(up, u0 + k - m)] = -1.0;
            a_in[(lo, u0 + k - m)] = 1.0;
        } else {
            b_in[up] += past.prev_input[k];
            b_in[lo] -= past.prev_input[k];
        }
    }

    let problem = QpProblem::new(h, f, a_eq, b_eq, a_in, b_in)?;
    Ok(Ocp { problem, constant, layout })
}

/// Best rank-`rank` approximation of the data matrix.
pub fn truncate_data_matrix(dm: &DataMatrix, rank: usize) -> Result<DataMatrix> {
    let k = dm.nrows().min(dm.ncols());
    if rank > k {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {rank} exceeds the smaller dimension {k}"
        )));
    }
    let svd = thin_svd(dm.entries());
    let mut approx = DMatrix::zeros(dm.nrows(), dm.ncols());
    for i in 0..rank {
        approx += svd.u.column(i) * svd.v_t.row(i) * svd.singular_values[i];
    }
    DataMatrix::from_entries(approx, dm.input_dim(), dm.output_dim(), dm.depth())
}

#[derive(Clone, Debug)]
pub struct ControlStep {
    pub u_applied: DVector<f64>,
    /// `m x Tf`.
    pub predicted_inputs: DMatrix<f64>,
    /// `p x Tf`.
    pub predicted_outputs: DMatrix<f64>,
    pub alpha_norm: f64,
    pub mu_norm: f64,
    /// Tracking plus regularization cost of the optimum.
    pub ocp_objective: f64,
    pub solver_status: QpStatus,
    pub iterations: usize,
    pub kkt: KktReport,
    pub solution: DVector<f64>,
}

fn solve_ocp(ocp: &Ocp, cfg: &ControllerConfig, warm_start: Option<&DVector<f64>>) -> Result<ControlStep> {
    let mut settings = QpSettings::new(cfg.qp_tol, cfg.qp_max_iter);
    if let Some(z) = warm_start.filter(|z| z.len() == ocp.layout.dim()) {
        settings = settings.with_warm_start(z.clone());
    }
    let sol = qp::solve(&ocp.problem, &settings);
    if sol.status != QpStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            iterations: sol.iterations,
        });
    }
    let l = &ocp.layout;
    let (m, p, tf) = (l.input_dim, l.output_dim, l.future_horizon);
    let u_f = sol.z.rows_range(l.u_f());
    let predicted_inputs = DMatrix::from_column_slice(m, tf, u_f.as_slice());
    let predicted_outputs = DMatrix::from_column_slice(p, tf, sol.z.rows_range(l.y_f()).as_slice());
    let kkt = qp::kkt::kkt_report(&ocp.problem, &sol.z, &sol.eq_multipliers, &sol.ineq_multipliers);
    Ok(ControlStep {
        u_applied: predicted_inputs.column(0).into_owned(),
        predicted_inputs,
        predicted_outputs,
        alpha_norm: sol.z.rows_range(l.alpha()).norm(),
        mu_norm: sol.z.rows_range(l.mu()).norm(),
        ocp_objective: ocp.cost(&sol.z),
        solver_status: sol.status,
        iterations: sol.iterations,
        kkt,
        solution: sol.z,
    })
}

fn data_matrix(dataset: &Dataset, cfg: &ControllerConfig) -> Result<DataMatrix> {
    let dm = build_mosaic_hankel(dataset)?;
    match cfg.svd_truncation {
        Some(r) => truncate_data_matrix(&dm, r),
        None => Ok(dm),
    }
}

/// One control step from scratch; see [`DeepcController`] for warm starts.
pub fn compute_control(
    dataset: &Dataset,
    past: &PastWindow,
    reference: &DMatrix<f64>,
    cfg: &ControllerConfig,
) -> Result<ControlStep> {
    let ocp = build_ocp(&data_matrix(dataset, cfg)?, past, reference, cfg)?;
    solve_ocp(&ocp, cfg, None)
}

/// Controller for one control loop; reuses the previous optimum as a warm
/// start.
#[derive(Clone, Debug)]
pub struct DeepcController {
    cfg: ControllerConfig,
    last_solution: Option<DVector<f64>>,
}

impl DeepcController {
    pub fn new(cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, last_solution: None })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn step(
        &mut self,
        dataset: &Dataset,
        past: &PastWindow,
        reference: &DMatrix<f64>,
    ) -> Result<ControlStep> {
        let ocp = build_ocp(&data_matrix(dataset, &self.cfg)?, past, reference, &self.cfg)?;
        let result = solve_ocp(&ocp, &self.cfg, self.last_solution.as_ref());
        self.last_solution = result.as_ref().ok().map(|s| s.solution.clone());
        result
    }
}
