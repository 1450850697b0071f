//! Input-output trajectories, datasets, and their CSV / JSON layouts.
//!
//! CSV layout, one row per time step:
//!
//! ```text
//! trajectory_id,u1,...,um,y1,...,yp
//! 0,0.12,-0.03,-3.1416,0.0001
//! ```
//!
//! Rows sharing a `trajectory_id` form one trajectory in row order; trajectories
//! appear in the order their id is first seen. The JSON mirror is
//! `{"depth": L, "trajectories": [{"inputs": [[..]], "outputs": [[..]]}]}` with
//! one inner array per time step.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A paired input/output sequence. Samples are stored column-wise:
/// `inputs` is `m x T`, `outputs` is `p x T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    inputs: DMatrix<f64>,
    outputs: DMatrix<f64>,
}

impl Trajectory {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>) -> Result<Self> {
        if inputs.ncols() != outputs.ncols() {
            return Err(Error::Dimension(format!(
                "trajectory has {} input samples but {} output samples",
                inputs.ncols(),
                outputs.ncols()
            )));
        }
        if inputs.ncols() == 0 {
            return Err(Error::Dimension("trajectory must contain at least one sample".into()));
        }
        if inputs.nrows() == 0 || outputs.nrows() == 0 {
            return Err(Error::Dimension("input and output dimensions must be positive".into()));
        }
        Ok(Self { inputs, outputs })
    }

    /// Builds a trajectory from per-sample vectors.
    pub fn from_samples(inputs: &[DVector<f64>], outputs: &[DVector<f64>]) -> Result<Self> {
        let m = inputs.first().map_or(0, |u| u.len());
        let p = outputs.first().map_or(0, |y| y.len());
        if inputs.iter().any(|u| u.len() != m) || outputs.iter().any(|y| y.len() != p) {
            return Err(Error::Dimension("samples have inconsistent vector dimensions".into()));
        }
        let u = DMatrix::from_fn(m, inputs.len(), |i, k| inputs[k][i]);
        let y = DMatrix::from_fn(p, outputs.len(), |i, k| outputs[k][i]);
        Self::new(u, y)
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.nrows()
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples `start .. start + len` as a new trajectory.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(Error::Dimension(format!(
                "slice {start}..{} out of range for trajectory of length {}",
                start + len,
                self.len()
            )));
        }
        Self::new(
            self.inputs.columns(start, len).into_owned(),
            self.outputs.columns(start, len).into_owned(),
        )
    }

    /// `col(u_1, ..., u_T, y_1, ..., y_T)`, the layout of one data-matrix column.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len() + self.outputs.len(),
            self.inputs.iter().chain(self.outputs.iter()).copied(),
        )
    }
}

/// An ordered collection of trajectories sharing input and output dimensions,
/// each at least `depth` samples long.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    depth: usize,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("window depth must be positive".into()));
        }
        let Some(first) = trajectories.first() else {
            return Err(Error::InvalidArgument("dataset needs at least one trajectory".into()));
        };
        let (m, p) = (first.input_dim(), first.output_dim());
        for (i, t) in trajectories.iter().enumerate() {
            if t.input_dim() != m || t.output_dim() != p {
                return Err(Error::Dimension(format!(
                    "trajectory {i} has dimensions (m={}, p={}), expected (m={m}, p={p})",
                    t.input_dim(),
                    t.output_dim()
                )));
            }
            if t.len() < depth {
                return Err(Error::Dimension(format!(
                    "trajectory {i} has length {} < depth {depth}",
                    t.len()
                )));
            }
        }
        Ok(Self {
            trajectories,
            depth,
        })
    }

    /// Slices one long run into its `T - L + 1` overlapping length-`depth`
    /// windows, so that the mosaic Hankel matrix of the result equals the
    /// classical Hankel matrix of `run`.
    pub fn from_sliding_windows(run: &Trajectory, depth: usize) -> Result<Self> {
        if depth == 0 || depth > run.len() {
            return Err(Error::Dimension(format!(
                "depth {depth} invalid for trajectory of length {}",
                run.len()
            )));
        }
        let windows = (0..=run.len() - depth)
            .map(|start| run.slice(start, depth))
            .collect::<Result<Vec<_>>>()?;
        Self::new(windows, depth)
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.trajectories[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.trajectories[0].output_dim()
    }

    /// Number of data-matrix columns, `sum_i (T_i - L + 1)`.
    pub fn column_count(&self) -> usize {
        self.trajectories
            .iter()
            .map(|t| t.len() - self.depth + 1)
            .sum()
    }

    pub fn into_trajectories(self) -> Vec<Trajectory> {
        self.trajectories
    }
}

fn csv_header(m: usize, p: usize) -> Vec<String> {
    std::iter::once("trajectory_id".to_string())
        .chain((1..=m).map(|i| format!("u{i}")))
        .chain((1..=p).map(|i| format!("y{i}")))
        .collect()
}

/// Writes trajectories in the CSV layout, numbering them `0..`.
pub fn write_trajectories_csv<W: Write>(trajectories: &[Trajectory], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (m, p) = trajectories
        .first()
        .map_or((0, 0), |t| (t.input_dim(), t.output_dim()));
    w.write_record(csv_header(m, p))?;
    for (id, t) in trajectories.iter().enumerate() {
        if t.input_dim() != m || t.output_dim() != p {
            return Err(Error::Dimension(format!(
                "trajectory {id} dimensions differ from the first trajectory"
            )));
        }
        for k in 0..t.len() {
            let mut row = Vec::with_capacity(1 + m + p);
            row.push(id.to_string());
            row.extend(t.inputs().column(k).iter().map(|v| v.to_string()));
            row.extend(t.outputs().column(k).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads trajectories from the CSV layout. Input and output dimensions are
/// inferred from the `u*` and `y*` header columns.
pub fn read_trajectories_csv<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("trajectory_id") {
        return Err(Error::Format("first CSV column must be `trajectory_id`".into()));
    }
    let m = headers.iter().filter(|h| h.trim().starts_with('u')).count();
    let p = headers.iter().filter(|h| h.trim().starts_with('y')).count();
    if m == 0 || p == 0 || headers.len() != 1 + m + p {
        return Err(Error::Format(format!(
            "expected header trajectory_id,u1..um,y1..yp, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut order: Vec<String> = Vec::new();
    let mut samples: Vec<(Vec<DVector<f64>>, Vec<DVector<f64>>)> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let id = record.get(0).unwrap_or_default().trim().to_string();
        let values = record
            .iter()
            .skip(1)
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("row {}: cannot parse `{s}`: {e}", line + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let slot = match order.iter().position(|o| *o == id) {
            Some(i) => i,
            None => {
                order.push(id);
                samples.push((Vec::new(), Vec::new()));
                samples.len() - 1
            }
        };
        samples[slot].0.push(DVector::from_column_slice(&values[..m]));
        samples[slot].1.push(DVector::from_column_slice(&values[m..]));
    }
    samples
        .iter()
        .map(|(u, y)| Trajectory::from_samples(u, y))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRecord {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetRecord {
    depth: usize,
    trajectories: Vec<TrajectoryRecord>,
}

fn columns_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(t: &Trajectory) -> Self {
        Self {
            inputs: columns_of(t.inputs()),
            outputs: columns_of(t.outputs()),
        }
    }
}

impl TryFrom<TrajectoryRecord> for Trajectory {
    type Error = Error;

    fn try_from(r: TrajectoryRecord) -> Result<Self> {
        let u: Vec<_> = r.inputs.iter().map(|v| DVector::from_column_slice(v)).collect();
        let y: Vec<_> = r.outputs.iter().map(|v| DVector::from_column_slice(v)).collect();
        Trajectory::from_samples(&u, &y)
    }
}

pub fn write_dataset_json<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let record = DatasetRecord {
        depth: dataset.depth(),
        trajectories: dataset.trajectories().iter().map(Into::into).collect(),
    };
    serde_json::to_writer(writer, &record)?;
    Ok(())
}

pub fn read_dataset_json<R: Read>(reader: R) -> Result<Dataset> {
    let record: DatasetRecord = serde_json::from_reader(reader)?;
    let trajectories = record
        .trajectories
        .into_iter()
        .map(Trajectory::try_from)
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(trajectories, record.depth)
}
