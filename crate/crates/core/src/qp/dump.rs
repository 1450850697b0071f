//! Plain-text problem dump for cross-checking against external solvers.
//!
//! Each block is written as a dense MatrixMarket array preceded by a
//! `% block NAME` comment line; vectors are written as `n x 1` arrays.

use std::io::Write;

use nalgebra::DMatrix;

use super::QpProblem;
use crate::error::Result;

fn write_block<W: Write>(w: &mut W, name: &str, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "% block {name}")?;
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    // Array format is column-major, same as nalgebra storage.
    for v in m.iter() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

pub fn write_matrix_market<W: Write>(problem: &QpProblem, mut w: W) -> Result<()> {
    let col = |v: &nalgebra::DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_block(&mut w, "H", problem.h())?;
    write_block(&mut w, "f", &col(problem.f()))?;
    write_block(&mut w, "A_eq", problem.a_eq())?;
    write_block(&mut w, "b_eq", &col(problem.b_eq()))?;
    write_block(&mut w, "A_in", problem.a_in())?;
    write_block(&mut w, "b_in", &col(problem.b_in()))?;
    w.flush()?;
    Ok(())
}
