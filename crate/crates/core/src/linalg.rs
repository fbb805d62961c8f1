//! Thin wrappers over nalgebra used by the regression and forecasting code.

use nalgebra::{Complex, DMatrix, DVector};

/// Iteration cap per matrix dimension for the Schur decomposition; the
/// unbounded variant can cycle forever on some companion matrices.
const SCHUR_ITERS_PER_DIM: usize = 200;

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `rcond * s_max`. Returns the solution and the numerical rank.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> (DVector<f64>, usize) {
    let (u, s, v) = truncated_svd(a, rcond);
    if s.is_empty() {
        return (DVector::zeros(a.ncols()), 0);
    }
    let w = u.tr_mul(b).component_div(&s);
    (v * w, s.len())
}

/// Thin SVD `(u, s, v_t)` computed by faer; nalgebra's bidiagonal SVD can
/// return factors that do not reproduce rank-deficient inputs.
fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let r = m.min(n);
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    match fa.thin_svd() {
        Ok(svd) => {
            let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
            (
                DMatrix::from_fn(m, r, |i, j| u[(i, j)]),
                DVector::from_fn(r, |i, _| s[i]),
                DMatrix::from_fn(r, n, |i, j| v[(j, i)]),
            )
        }
        // no convergence: report a zero matrix so callers treat it as rank 0
        Err(_) => (DMatrix::zeros(m, r), DVector::zeros(r), DMatrix::zeros(r, n)),
    }
}

/// Truncated SVD factors `(u_r, s_r, v_r)` keeping singular values above
/// `rcond * s_max`.
pub(crate) fn truncated_svd(
    a: &DMatrix<f64>,
    rcond: f64,
) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (u, s, v_t) = thin_svd(a);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let s_max = order.first().map_or(0.0, |&i| s[i]);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| s[i] > rcond * s_max && s[i] > 0.0)
        .collect();
    let r = keep.len();
    let mut u_r = DMatrix::zeros(a.nrows(), r);
    let mut v_r = DMatrix::zeros(a.ncols(), r);
    let mut s_r = DVector::zeros(r);
    for (c, &i) in keep.iter().enumerate() {
        u_r.set_column(c, &u.column(i));
        v_r.set_column(c, &v_t.row(i).transpose());
        s_r[c] = s[i];
    }
    (u_r, s_r, v_r)
}

/// Spectral radius of the companion matrix of
/// `y(n) = sum_i coeffs[i] y(n - 1 - i)`.
pub(crate) fn companion_spectral_radius(coeffs: &[f64]) -> f64 {
    let m = coeffs.len();
    if m == 0 {
        return 0.0;
    }
    let mut c = DMatrix::zeros(m, m);
    for (j, &a) in coeffs.iter().enumerate() {
        c[(0, j)] = a;
    }
    for i in 1..m {
        c[(i, i - 1)] = 1.0;
    }
    eigenvalues(&c).map_or(f64::INFINITY, |ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Complex eigenvalues of a square matrix, or `None` when the QR iteration
/// stalls on the matrix, its transpose and a rotated similar matrix.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let n = m.nrows();
    let iters = SCHUR_ITERS_PER_DIM * n.max(1);
    // any fixed orthogonal basis works; this one is dense
    let q = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13 + 1) as f64).sin()).qr().q();
    [m.clone(), m.transpose(), q.transpose() * m * &q]
        .into_iter()
        .find_map(|a| a.try_schur(f64::EPSILON, iters))
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_geometric_matrix_is_reproduced() {
        for rho in [0.9934368003128403f64, 0.9513694458083889, 0.99] {
            for start in [145, 200, 250] {
                let x = DMatrix::from_fn(75, 30, |r, c| rho.powi(start + (r + c) as i32));
                let (u, s, v) = truncated_svd(&x, 1e-8);
                assert_eq!(s.len(), 1);
                let rec = &u * DMatrix::from_diagonal(&s) * v.transpose();
                assert!((rec - &x).norm() <= 1e-12 * x.norm(), "rho {rho}, start {start}");
            }
        }
    }

    #[test]
    fn companion_of_roots_of_unity_terminates() {
        // y(n) = y(n - 20): every root lies on the unit circle
        let mut c = vec![0.0; 20];
        c[19] = 1.0;
        assert!((companion_spectral_radius(&c) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, rank) = lstsq(&a, &b, 1e-12);
        assert_eq!(rank, 2);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_min_norm_on_collinear_columns() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![2.0, 4.0]);
        let (x, rank) = lstsq(&a, &b, 1e-12);
        assert_eq!(rank, 1);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn companion_radius_of_known_recurrences() {
        // y(n) = 0.5 y(n-1): root 0.5
        assert!((companion_spectral_radius(&[0.5]) - 0.5).abs() < 1e-12);
        // oscillator y(n) = 2cos(w) y(n-1) - y(n-2): roots on the unit circle
        let w: f64 = 0.3;
        let r = companion_spectral_radius(&[2.0 * w.cos(), -1.0]);
        assert!((r - 1.0).abs() < 1e-9);
    }
}
