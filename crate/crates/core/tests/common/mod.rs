//! Independent reference implementations ("oracles") used across the
//! integration tests. Everything here is deliberately written in the most
//! literal style possible, favoring obviousness over speed, and shares no
//! code with the library internals.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Textbook Cox-de Boor recursion for a single B-spline value. Half-open
/// support convention, so callers should evaluate strictly inside the domain.
pub fn naive_bspline(knots: &[f64], i: usize, order: usize, t: f64) -> f64 {
    if order == 1 {
        return if knots[i] <= t && t < knots[i + 1] { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let d1 = knots[i + order - 1] - knots[i];
    if d1 > 0.0 {
        value += (t - knots[i]) / d1 * naive_bspline(knots, i, order - 1, t);
    }
    let d2 = knots[i + order] - knots[i + 1];
    if d2 > 0.0 {
        value += (knots[i + order] - t) / d2 * naive_bspline(knots, i + 1, order - 1, t);
    }
    value
}

/// Midpoint Riemann sum of the product of two tabulated functions over
/// [lo, hi]: rows of `values` are function values at the midpoints.
pub fn riemann_product_matrix(values: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let n_points = values.nrows();
    let k = values.ncols();
    let dt = (hi - lo) / n_points as f64;
    let mut m = DMatrix::zeros(k, k);
    for p in 0..n_points {
        for i in 0..k {
            let vi = values[(p, i)];
            if vi == 0.0 {
                continue;
            }
            for j in 0..k {
                m[(i, j)] += vi * values[(p, j)] * dt;
            }
        }
    }
    m
}

/// Midpoints of `n` equal subintervals of [lo, hi].
pub fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let dt = (hi - lo) / n as f64;
    (0..n).map(|i| lo + dt * (i as f64 + 0.5)).collect()
}

/// Least squares via explicitly formed normal equations solved by Gaussian
/// elimination with partial pivoting.
pub fn normal_equations_solve(b: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let bt_b = b.transpose() * b;
    let bt_y = b.transpose() * y;
    gaussian_solve(&bt_b, &bt_y)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gaussian_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut b = rhs.clone();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            m.swap_rows(col, pivot);
            b.swap_rows(col, pivot);
        }
        let diag = m[(col, col)];
        assert!(diag.abs() > 1e-300, "oracle solve hit a singular pivot");
        for row in col + 1..n {
            let factor = m[(row, col)] / diag;
            for c in col..n {
                m[(row, c)] -= factor * m[(col, c)];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= m[(row, c)] * x[c];
        }
        x[row] = acc / m[(row, row)];
    }
    x
}

/// Hand-rolled Cholesky factorization (lower factor), independent of any
/// linear-algebra library.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Forward substitution: solve L x = b for lower-triangular L.
pub fn forward_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = DVector::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Back substitution: solve L' x = b for lower-triangular L.
pub fn backward_solve_transposed(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= l[(j, i)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Cyclic Jacobi eigenvalue iteration for symmetric matrices. Returns
/// (eigenvalues, eigenvectors as columns), in descending eigenvalue order.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (m.norm() + 1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (eigenvalues, vectors)
}

/// Generalized symmetric eigenvalues of (M_e, M): eigenvalues of
/// inv(L) M_e inv(L'), descending, where M = L L'. Built entirely from the
/// oracle Cholesky, triangular solves, and Jacobi iteration above.
pub fn generalized_eigen_oracle(m_e: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let l = cholesky_lower(m).expect("oracle: M must be positive definite");
    // W = inv(L) M_e inv(L'): column k of inv(L) M_e is forward_solve of the column.
    let mut li_me = DMatrix::zeros(n, n);
    for k in 0..n {
        let col = DVector::from_column_slice(m_e.column(k).as_slice());
        li_me.set_column(k, &forward_solve(&l, &col));
    }
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n {
        let row = DVector::from_iterator(n, li_me.row(k).iter().copied());
        let solved = forward_solve(&l, &row);
        for j in 0..n {
            w[(k, j)] = solved[j];
        }
    }
    // Symmetrize rounding noise before the Jacobi sweep.
    let wt = w.transpose();
    let sym = (w + wt) * 0.5;
    jacobi_eigen(&sym).0
}

/// Generalized symmetric eigenpairs of (M_e, M): eigenvalues descending and
/// eigenvector columns mapped back through L', so they are M-orthonormal.
pub fn generalized_eigen_pairs(
    m_e: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let l = cholesky_lower(m).expect("oracle: M must be positive definite");
    let mut li_me = DMatrix::zeros(n, n);
    for k in 0..n {
        let col = DVector::from_column_slice(m_e.column(k).as_slice());
        li_me.set_column(k, &forward_solve(&l, &col));
    }
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n {
        let row = DVector::from_iterator(n, li_me.row(k).iter().copied());
        let solved = forward_solve(&l, &row);
        for j in 0..n {
            w[(k, j)] = solved[j];
        }
    }
    let wt = w.transpose();
    let sym = (w + wt) * 0.5;
    let (values, vectors) = jacobi_eigen(&sym);
    let mut back = DMatrix::zeros(n, n);
    for k in 0..n {
        let col = DVector::from_column_slice(vectors.column(k).as_slice());
        back.set_column(k, &backward_solve_transposed(&l, &col));
    }
    (values, back)
}

/// Deterministic uniform f64 in [lo, hi) from a splitmix-style counter,
/// for tests that want cheap reproducible inputs without an RNG dependency.
pub fn splitmix_uniform(state: &mut u64, lo: f64, hi: f64) -> f64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    let unit = (z >> 11) as f64 / (1u64 << 53) as f64;
    lo + unit * (hi - lo)
}
