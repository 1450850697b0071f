//! Small dense linear-algebra helpers shared by the rank and membership code.
//!
//! Singular value decompositions go through `faer`: nalgebra's bidiagonal
//! QR iteration occasionally returns an inaccurate factorization for
//! rank-deficient input, which is exactly the case rank tests care about.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `m = u * diag(singular_values) * v_t`, values non-increasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn thin_svd(m: &DMatrix<f64>) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(r, 0),
            singular_values: Vec::new(),
            v_t: DMatrix::zeros(0, c),
        };
    }
    let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = f.thin_svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Svd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| s[j]).collect(),
        v_t: DMatrix::from_fn(k, c, |i, j| v[(j, order[i])]),
    }
}

/// Singular values of `m` sorted in non-increasing order.
pub fn sorted_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut values = f.singular_values().expect("SVD of a finite matrix converges");
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Largest singular value; 0 for an empty matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    sorted_singular_values(m).first().copied().unwrap_or(0.0)
}

/// Scale-invariant rank tolerance: `max(rows, cols) * eps * sigma_max`.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Numeric rank of `m` using [`rank_tolerance`].
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    let values = sorted_singular_values(m);
    let Some(&sigma_max) = values.first() else {
        return 0;
    };
    let tol = rank_tolerance(m.nrows(), m.ncols(), sigma_max);
    values.iter().filter(|&&s| s > tol).count()
}

/// Minimum-norm least-squares solution of `m x = b` via the SVD.
///
/// Singular values at or below the numeric rank tolerance are treated as zero,
/// so rank-deficient systems return the pseudo-inverse solution.
pub fn min_norm_lstsq(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = thin_svd(m);
    let Some(&sigma_max) = svd.singular_values.first() else {
        return DVector::zeros(m.ncols());
    };
    if sigma_max == 0.0 {
        return DVector::zeros(m.ncols());
    }
    let tol = rank_tolerance(m.nrows(), m.ncols(), sigma_max);
    let mut x = DVector::zeros(m.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let coeff = svd.u.column(i).dot(b) / s;
            x.axpy(coeff, &svd.v_t.row(i).transpose(), 1.0);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_integer_matrices_is_exact() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0]);
        assert_eq!(numeric_rank(&m), 2);
        assert_eq!(numeric_rank(&DMatrix::<f64>::zeros(4, 2)), 0);
        assert_eq!(numeric_rank(&DMatrix::<f64>::identity(5, 5)), 5);
    }

    #[test]
    fn svd_reconstructs_rank_deficient_input() {
        // Hankel data of a first-order system with feedthrough: rank 5 of 6
        // columns, a case where nalgebra's own SVD is off by 4e-3.
        let u = [-0.52009, -0.29599, 0.32769, -0.14747, -0.45591, 0.68059, -0.06005, 0.67591, -0.03379];
        let (a, d) = (0.95, 0.94698);
        let mut x = 0.4;
        let mut y = [0.0; 9];
        for k in 0..9 {
            y[k] = 0.7741 * x + d * u[k];
            x = a * x - 0.5629 * u[k];
        }
        let m = DMatrix::from_fn(8, 6, |i, j| if i < 4 { u[i + j] } else { y[i - 4 + j] });
        let svd = thin_svd(&m);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone())) * &svd.v_t;
        assert!((rebuilt - &m).amax() < 1e-13);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(numeric_rank(&m), 5);
    }

    #[test]
    fn lstsq_returns_minimum_norm_solution() {
        // x1 + x2 = 2 has minimum-norm solution (1, 1).
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = min_norm_lstsq(&m, &DVector::from_vec(vec![2.0]));
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
