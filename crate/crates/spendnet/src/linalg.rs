//! Small dense linear-algebra kernels shared by the solvers.
//!
//! The networks handled by this crate are tiny (a handful of agents), so a
//! straightforward row-major `Vec<Vec<f64>>` representation with Gaussian
//! elimination is both fast enough and easy to audit.

use crate::error::{Error, Result};

/// Relative pivot floor below which elimination treats a system as singular.
pub const SINGULAR_PIVOT_FLOOR: f64 = 1e-12;

/// Multiplies a dense row-major matrix by a vector.
///
/// Panics on shape mismatch; callers validate shapes at construction time.
pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| {
            assert_eq!(row.len(), x.len(), "matrix/vector shape mismatch");
            row.iter().zip(x).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Largest absolute componentwise difference between two equal-length vectors.
pub fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dot product of two equal-length vectors.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the square system `A z = b` by Gaussian elimination with partial
/// pivoting.
///
/// The inputs are consumed as scratch space. Pivots smaller than
/// [`SINGULAR_PIVOT_FLOOR`] relative to the largest input entry raise
/// [`Error::SingularSystem`].
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "solve_dense expects a square n x n system, got {} rows and rhs of length {}",
            n,
            b.len()
        )));
    }

    let scale = a.iter().flatten().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularSystem(
            "coefficient matrix is zero or non-finite".into(),
        ));
    }
    let floor = SINGULAR_PIVOT_FLOOR * scale;

    for col in 0..n {
        // Partial pivoting: bring the largest remaining entry into place.
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .expect("pivot comparison on finite values")
            })
            .expect("non-empty pivot candidates");
        if a[pivot_row][col].abs() <= floor {
            return Err(Error::SingularSystem(format!(
                "pivot {:e} in column {} below floor {:e}",
                a[pivot_row][col], col, floor
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        let pivot = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let upper = a[col][k];
                a[row][k] -= factor * upper;
            }
            b[row] -= factor * b[col];
        }
    }

    // Back substitution.
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * z[k];
        }
        z[row] = acc / a[row][row];
    }
    Ok(z)
}
