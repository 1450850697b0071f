//! Hankel and mosaic Hankel data matrices, excitation conditions, and
//! trajectory membership in the column span of a data matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_norm_lstsq, numeric_rank};
use crate::trajectory::{Dataset, Trajectory};

/// Depth-`depth` Hankel matrix of a sequence stored column-wise (`s x T`).
///
/// Block row `i`, column `j` (both 0-based) holds sample `i + j`, so the result
/// is `(s * depth) x (T - depth + 1)`.
pub fn build_hankel(seq: &DMatrix<f64>, depth: usize) -> Result<DMatrix<f64>> {
    let (s, len) = seq.shape();
    if depth == 0 || depth > len {
        return Err(Error::Dimension(format!(
            "Hankel depth {depth} must lie in 1..={len}"
        )));
    }
    let cols = len - depth + 1;
    let mut h = DMatrix::zeros(s * depth, cols);
    for j in 0..cols {
        // Column-major storage makes a window of `depth` samples contiguous.
        h.column_mut(j)
            .copy_from_slice(seq.columns(j, depth).into_owned().as_slice());
    }
    Ok(h)
}

/// Stacked input-over-output mosaic Hankel matrix of a dataset.
///
/// Rows `0 .. m*L` form the input block, rows `m*L ..` the output block. Each
/// column is one length-`L` window of a single source trajectory; columns are
/// ordered by trajectory, then by window start.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<f64>,
    input_dim: usize,
    output_dim: usize,
    depth: usize,
}

impl DataMatrix {
    pub fn from_entries(
        entries: DMatrix<f64>,
        input_dim: usize,
        output_dim: usize,
        depth: usize,
    ) -> Result<Self> {
        if entries.nrows() != (input_dim + output_dim) * depth {
            return Err(Error::Dimension(format!(
                "data matrix has {} rows, expected (m + p) * L = {}",
                entries.nrows(),
                (input_dim + output_dim) * depth
            )));
        }
        Ok(Self {
            entries,
            input_dim,
            output_dim,
            depth,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn input_block(&self) -> DMatrix<f64> {
        self.entries
            .rows(0, self.input_dim * self.depth)
            .into_owned()
    }

    pub fn output_block(&self) -> DMatrix<f64> {
        self.entries
            .rows(self.input_dim * self.depth, self.output_dim * self.depth)
            .into_owned()
    }

    /// De-stacks column `j` back into an `L`-long trajectory.
    pub fn window(&self, j: usize) -> Result<Trajectory> {
        if j >= self.ncols() {
            return Err(Error::Dimension(format!(
                "column {j} out of range ({} columns)",
                self.ncols()
            )));
        }
        let col = self.entries.column(j);
        let (m, p, l) = (self.input_dim, self.output_dim, self.depth);
        Trajectory::new(
            DMatrix::from_column_slice(m, l, col.rows(0, m * l).into_owned().as_slice()),
            DMatrix::from_column_slice(p, l, col.rows(m * l, p * l).into_owned().as_slice()),
        )
    }
}

/// Builds the stacked mosaic Hankel matrix of `dataset` at its own depth.
pub fn build_mosaic_hankel(dataset: &Dataset) -> Result<DataMatrix> {
    let l = dataset.depth();
    let (m, p) = (dataset.input_dim(), dataset.output_dim());
    let mut entries = DMatrix::zeros((m + p) * l, dataset.column_count());
    let mut col = 0;
    for traj in dataset.trajectories() {
        let hu = build_hankel(traj.inputs(), l)?;
        let hy = build_hankel(traj.outputs(), l)?;
        let width = hu.ncols();
        entries.view_mut((0, col), (m * l, width)).copy_from(&hu);
        entries.view_mut((m * l, col), (p * l, width)).copy_from(&hy);
        col += width;
    }
    DataMatrix::from_entries(entries, m, p, l)
}

/// True iff the depth-`order` Hankel matrix of `inputs` (`m x T`) has full
/// row rank `m * order`.
pub fn is_persistently_exciting(inputs: &DMatrix<f64>, order: usize) -> Result<bool> {
    let h = build_hankel(inputs, order)?;
    if h.ncols() < h.nrows() {
        return Ok(false);
    }
    Ok(numeric_rank(&h) == inputs.nrows() * order)
}

/// Numeric rank of the stacked data matrix.
pub fn generalized_pe_rank(dm: &DataMatrix) -> usize {
    numeric_rank(dm.entries())
}

/// Generalized persistency of excitation: rank equals `n + m * L` for the
/// supplied state-dimension estimate `order`.
pub fn check_generalized_pe(dm: &DataMatrix, order: usize) -> bool {
    generalized_pe_rank(dm) == order + dm.input_dim() * dm.depth()
}

/// Outcome of a membership test.
#[derive(Clone, Debug)]
pub struct Membership {
    pub member: bool,
    /// `|| dm * alpha - w ||_2`.
    pub residual: f64,
    /// `residual / (1 + ||w||_2)`, the quantity compared against the tolerance.
    pub relative_residual: f64,
    pub alpha: DVector<f64>,
}

/// Tests whether an `L`-long window lies in the column span of `dm`.
///
/// `alpha` is the minimum-norm least-squares coefficient vector; membership
/// holds when the residual is at most `tolerance * (1 + ||w||)`.
pub fn trajectory_membership(
    dm: &DataMatrix,
    window: &Trajectory,
    tolerance: f64,
) -> Result<Membership> {
    if window.len() != dm.depth()
        || window.input_dim() != dm.input_dim()
        || window.output_dim() != dm.output_dim()
    {
        return Err(Error::Dimension(format!(
            "window (m={}, p={}, L={}) does not match data matrix (m={}, p={}, L={})",
            window.input_dim(),
            window.output_dim(),
            window.len(),
            dm.input_dim(),
            dm.output_dim(),
            dm.depth()
        )));
    }
    let w = window.stacked();
    let alpha = min_norm_lstsq(dm.entries(), &w);
    let residual = (dm.entries() * &alpha - &w).norm();
    let relative_residual = residual / (1.0 + w.norm());
    Ok(Membership {
        member: relative_residual <= tolerance,
        residual,
        relative_residual,
        alpha,
    })
}
