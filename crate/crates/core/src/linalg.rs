//! Thin helpers over nalgebra: truncated-SVD least squares, null spaces
//! and numeric ranks with the cutoff policy used across the crate:
//! `tau = max(rows, cols) * sigma_max * 1e-10`.

use nalgebra::{DMatrix, DVector};

pub const CUTOFF_FACTOR: f64 = 1e-10;

fn svd_of(m: &DMatrix<f64>) -> nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    m.clone().svd(true, true)
}

fn cutoff(m: &DMatrix<f64>, svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    m.nrows().max(m.ncols()) as f64 * sigma_max * CUTOFF_FACTOR
}

/// Numeric rank under the cutoff policy.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = svd_of(m);
    let tau = cutoff(m, &svd);
    svd.singular_values.iter().filter(|s| **s > tau).count()
}

/// Minimum-norm least-squares solution and its residual norm.
/// Returns `(solution, residual_l2)`.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if m.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    let svd = svd_of(m);
    let tau = cutoff(m, &svd);
    let x = svd
        .solve(b, tau)
        .unwrap_or_else(|_| DVector::zeros(m.ncols()));
    let residual = (m * &x - b).norm();
    (x, residual)
}

/// Orthonormal basis of the null space. The matrix is padded with zero
/// rows when wide so the thin SVD still exposes every right-singular
/// vector.
pub fn nullspace(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = svd_of(&padded);
    let tau = cutoff(&padded, &svd);
    let v_t = svd.v_t.as_ref().expect("svd computed with vectors");
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tau {
            basis.push(v_t.row(i).transpose());
        }
    }
    // Rows of V^T beyond the singular-value count are also null directions.
    for i in svd.singular_values.len()..v_t.nrows() {
        basis.push(v_t.row(i).transpose());
    }
    basis
}

/// Moore-Penrose pseudo-inverse under the cutoff policy.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = svd_of(m);
    let tau = cutoff(m, &svd);
    svd.pseudo_inverse(tau)
        .unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_zero_matrix() {
        let m = DMatrix::<f64>::zeros(4, 3);
        let basis = nullspace(&m);
        assert_eq!(basis.len(), 3);
    }

    #[test]
    fn nullspace_of_identity_block() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(nullspace(&m).is_empty());
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        // x + y + z = 0 has a 2-dimensional solution space
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let basis = nullspace(&m);
        assert_eq!(basis.len(), 2);
        for v in basis {
            assert!((m.clone() * v).norm() < 1e-12);
        }
    }

    #[test]
    fn least_squares_residual() {
        // unsolvable: x = 1 and x = 2
        let m = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0]);
        let (x, res) = least_squares(&m, &b);
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert!((res - (0.5f64 * 0.5 + 0.5 * 0.5).sqrt()).abs() < 1e-12);
    }
}
