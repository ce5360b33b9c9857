//! Small dense kernels shared by the factored algebra: two-pass Gram-Schmidt
//! against an existing orthonormal basis, and a one-sided Jacobi SVD.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis `P` of the column space of `(I - B Bᵀ) A`, plus the
/// coefficients `R = Pᵀ (I - B Bᵀ) A`.
///
/// `basis` must have orthonormal columns (it may have zero columns). Each
/// residual column whose norm falls below `tol * ‖A‖_F` after projection
/// contributes no basis vector, so `P` may have fewer than `c` columns.
pub(crate) fn complement_basis(
    basis: &DMatrix<f64>,
    a: &DMatrix<f64>,
    tol: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = a.nrows();
    let c = a.ncols();
    let mut residual = project_out(basis, a);
    residual = project_out(basis, &residual);

    let threshold = tol * a.norm();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(c);
    for j in 0..c {
        if cols.len() + basis.ncols() >= m {
            break;
        }
        let mut v = residual.column(j).clone_owned();
        for _ in 0..2 {
            for q in &cols {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
            if basis.ncols() > 0 {
                let coeff = basis.tr_mul(&v);
                v.gemv(-1.0, basis, &coeff, 1.0);
            }
        }
        let norm = v.norm();
        if norm > threshold && norm > 0.0 {
            cols.push(v / norm);
        }
    }

    let p = if cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    let r = p.tr_mul(&residual);
    (p, r)
}

/// `(I - B Bᵀ) A`.
fn project_out(basis: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return a.clone();
    }
    let coeff = basis.tr_mul(a);
    let mut out = a.clone();
    out.gemm(-1.0, basis, &coeff, 1.0);
    out
}

/// Max-entry deviation of `QᵀQ` from the identity.
pub(crate) fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let gram = q.tr_mul(q);
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

pub(crate) struct DenseSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 80;

/// Economy SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Singular values come back sorted non-increasing. Numerically-zero values
/// (below `σ_max · ε · max(rows, cols)`) are dropped along with their vectors,
/// so the zero matrix yields empty factors.
pub(crate) fn jacobi_svd(k: &DMatrix<f64>) -> DenseSvd {
    if k.nrows() < k.ncols() {
        let t = jacobi_svd(&k.transpose());
        return DenseSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }

    let rows = k.nrows();
    let cols = k.ncols();
    let mut a = k.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let eps = f64::EPSILON * rows.max(1) as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let sigma_max = order.first().map_or(0.0, |&j| norms[j]);
    let cutoff = sigma_max * f64::EPSILON * rows.max(cols) as f64;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| norms[j] > cutoff && norms[j] > 0.0)
        .collect();

    let mut u_out = DMatrix::zeros(rows, kept.len());
    let mut v_out = DMatrix::zeros(cols, kept.len());
    let mut sigma = DVector::zeros(kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        sigma[dst] = norms[src];
        u_out.set_column(dst, &(a.column(src) / norms[src]));
        v_out.set_column(dst, &v.column(src));
    }
    DenseSvd {
        u: u_out,
        sigma,
        v: v_out,
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)];
        let y = m[(r, j)];
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_of_vectors_in_span_is_empty() {
        let basis = DMatrix::from_column_slice(4, 2, &[1., 0., 0., 0., 0., 1., 0., 0.]);
        let a = DMatrix::from_column_slice(4, 1, &[3., -2., 0., 0.]);
        let (p, r) = complement_basis(&basis, &a, 1e-12);
        assert_eq!(p.ncols(), 0);
        assert_eq!(r.nrows(), 0);
    }

    #[test]
    fn jacobi_handles_wide_and_zero() {
        let k = DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let svd = jacobi_svd(&k);
        let rebuilt = &svd.u * DMatrix::from_diagonal(&svd.sigma) * svd.v.transpose();
        assert!((rebuilt - k).norm() < 1e-13);

        let z = jacobi_svd(&DMatrix::zeros(3, 2));
        assert_eq!(z.sigma.len(), 0);
        assert_eq!(z.u.shape(), (3, 0));
    }
}
