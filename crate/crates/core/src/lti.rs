//! Discrete-time LTI systems, used to generate exact data for oracles and
//! closed-loop tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, spectral_norm};

/// `x_{k+1} = A x_k + B u_k`, `y_k = C x_k + D u_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A must be square, got {:?}", a.shape())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "B is {:?} and C is {:?}, expected {n} rows / columns",
                b.shape(),
                c.shape()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::Dimension(format!(
                "D is {:?}, expected {:?}",
                d.shape(),
                (c.nrows(), b.ncols())
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// `col(C, CA, ..., CA^{j-1})`.
    pub fn observability_matrix(&self, blocks: usize) -> DMatrix<f64> {
        let (n, p) = (self.state_dim(), self.output_dim());
        let mut obs = DMatrix::zeros(p * blocks, n);
        let mut block = self.c.clone();
        for i in 0..blocks {
            obs.view_mut((i * p, 0), (p, n)).copy_from(&block);
            block = &block * &self.a;
        }
        obs
    }

    /// `[B, AB, ..., A^{n-1} B]`.
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.state_dim(), self.input_dim());
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for i in 0..n {
            ctrb.view_mut((0, i * m), (n, m)).copy_from(&block);
            block = &self.a * &block;
        }
        ctrb
    }

    pub fn is_controllable(&self) -> bool {
        numeric_rank(&self.controllability_matrix()) == self.state_dim()
    }

    /// Random system with entries uniform on `[-1, 1]`, `A` rescaled to
    /// spectral norm `0.95`, redrawn until `(A, B)` is controllable and
    /// `(C, A)` observable.
    pub fn random_stable<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, p: usize) -> Self {
        let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0));
        loop {
            let a = draw(n, n);
            let norm = spectral_norm(&a);
            if norm == 0.0 {
                continue;
            }
            let sys = Self {
                a: a * (0.95 / norm),
                b: draw(n, m),
                c: draw(p, n),
                d: draw(p, m),
            };
            if sys.is_controllable() && sys.lag().is_ok() {
                return sys;
            }
        }
    }

    /// Smallest `j <= n` whose `j`-block observability matrix has rank `n`.
    pub fn lag(&self) -> Result<usize> {
        let n = self.state_dim();
        let mut rank = 0;
        for j in 1..=n {
            rank = numeric_rank(&self.observability_matrix(j));
            if rank == n {
                return Ok(j);
            }
        }
        Err(Error::Unobservable { rank, order: n })
    }

    /// Runs the state recursion from `x0` over `inputs` (`m x T`), returning
    /// the outputs (`p x T`).
    pub fn simulate(&self, x0: &DVector<f64>, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x0.len() != self.state_dim() || inputs.nrows() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "x0 has length {} (n = {}), inputs have {} rows (m = {})",
                x0.len(),
                self.state_dim(),
                inputs.nrows(),
                self.input_dim()
            )));
        }
        let mut outputs = DMatrix::zeros(self.output_dim(), inputs.ncols());
        let mut x = x0.clone();
        for (k, u) in inputs.column_iter().enumerate() {
            outputs.set_column(k, &(&self.c * &x + &self.d * u));
            x = &self.a * &x + &self.b * u;
        }
        Ok(outputs)
    }

    /// State after running `inputs` from `x0`.
    pub fn final_state(&self, x0: &DVector<f64>, inputs: &DMatrix<f64>) -> DVector<f64> {
        inputs
            .column_iter()
            .fold(x0.clone(), |x, u| &self.a * &x + &self.b * u)
    }
}

/// Free-function form of [`LtiSystem::simulate`].
pub fn simulate_lti(
    sys: &LtiSystem,
    x0: &DVector<f64>,
    inputs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    sys.simulate(x0, inputs)
}
