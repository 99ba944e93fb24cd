//! B-spline bases on a closed interval: Cox-de Boor evaluation, exact Gram
//! and curvature-penalty matrices, and least-squares projection of sampled
//! curves onto the basis.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// B-spline basis of a given order on `[t_min, t_max]` with equally spaced
/// interior knots; boundary knots carry multiplicity `order` so the basis is
/// clamped. Dimension is `n_interior + order`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    t_min: f64,
    t_max: f64,
    order: usize,
    n_interior: usize,
    /// Full knot vector: `order` copies of t_min, the interior knots, then
    /// `order` copies of t_max.
    knots: Vec<f64>,
}

/// Evaluation and operator matrices of a basis on a fixed grid.
pub struct BasisMatrices {
    /// D x K basis values at the grid points.
    pub b: DMatrix<f64>,
    /// D x K second derivatives at the grid points.
    pub b2: DMatrix<f64>,
    /// K x K Gram matrix, G_ij = integral of B_i B_j.
    pub g: DMatrix<f64>,
    /// K x K penalty matrix, P_ij = integral of B_i'' B_j''.
    pub p: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisDescriptor {
    t_min: f64,
    t_max: f64,
    order: usize,
    n_interior_knots: usize,
}

impl Serialize for SplineBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisDescriptor {
            t_min: self.t_min,
            t_max: self.t_max,
            order: self.order,
            n_interior_knots: self.n_interior,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SplineBasis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = BasisDescriptor::deserialize(d)?;
        make_basis((desc.t_min, desc.t_max), desc.n_interior_knots, desc.order)
            .map_err(serde::de::Error::custom)
    }
}

impl SplineBasis {
    /// Basis dimension K = interior knots + order.
    pub fn dim(&self) -> usize {
        self.n_interior + self.order
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_interior_knots(&self) -> usize {
        self.n_interior
    }

    /// Full knot vector including boundary multiplicities.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn check_point(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.t_min || t > self.t_max {
            return Err(Error::PointOutsideDomain { point: t, lo: self.t_min, hi: self.t_max });
        }
        Ok(())
    }

    /// Index of the knot span containing t, restricted to spans of positive
    /// length; the right boundary maps to the last positive span.
    fn span_index(&self, t: f64) -> usize {
        let lo = self.order - 1;
        let hi = self.order - 1 + self.n_interior;
        let mut mu = lo;
        while mu < hi && t >= self.knots[mu + 1] {
            mu += 1;
        }
        mu
    }

    /// Values of all order-j basis functions over this knot vector at t
    /// (j <= order), returned as a dense length (knots - j) vector. Uses the
    /// triangular Cox-de Boor scheme; only the j functions alive on the span
    /// of t are nonzero.
    fn eval_row_order(&self, j: usize, t: f64) -> DVector<f64> {
        debug_assert!(j >= 1 && j <= self.order);
        let mu = self.span_index(t);
        let mut values = vec![0.0; j];
        let mut left = vec![0.0; j];
        let mut right = vec![0.0; j];
        values[0] = 1.0;
        for r in 1..j {
            left[r] = t - self.knots[mu + 1 - r];
            right[r] = self.knots[mu + r] - t;
            let mut saved = 0.0;
            for i in 0..r {
                // The window spans the positive knot interval of t, so the
                // denominator is bounded away from zero.
                let den = right[i + 1] + left[r - i];
                let temp = values[i] / den;
                values[i] = saved + right[i + 1] * temp;
                saved = left[r - i] * temp;
            }
            values[r] = saved;
        }
        let n_funcs = self.knots.len() - j;
        let first = mu + 1 - j;
        let mut row = DVector::zeros(n_funcs);
        for (offset, v) in values.into_iter().enumerate() {
            row[first + offset] = v;
        }
        row
    }

    /// One row of eval_basis: the K order-`order` basis values at t.
    fn eval_row(&self, t: f64) -> DVector<f64> {
        self.eval_row_order(self.order, t)
    }

    /// Sparse banded matrix mapping order-(j-1) basis values to the first
    /// derivative of the order-j basis: rows index the order-j functions.
    fn deriv_weight_matrix(&self, j: usize) -> DMatrix<f64> {
        let n_hi = self.knots.len() - j;
        let n_lo = n_hi + 1;
        let degree = (j - 1) as f64;
        let mut w = DMatrix::zeros(n_hi, n_lo);
        for i in 0..n_hi {
            let d1 = self.knots[i + j - 1] - self.knots[i];
            if d1 > 0.0 {
                w[(i, i)] = degree / d1;
            }
            let d2 = self.knots[i + j] - self.knots[i + 1];
            if d2 > 0.0 {
                w[(i, i + 1)] = -degree / d2;
            }
        }
        w
    }

    /// Combination matrix turning order-(order-2) basis values into second
    /// derivatives of the full-order basis.
    fn deriv2_weights(&self) -> DMatrix<f64> {
        self.deriv_weight_matrix(self.order) * self.deriv_weight_matrix(self.order - 1)
    }

    /// Start points of the knot spans of positive length.
    fn positive_spans(&self) -> impl Iterator<Item = usize> + '_ {
        (self.order - 1)..=(self.order - 1 + self.n_interior)
    }

    /// Integral over the domain of products of rows produced by `row_at`,
    /// using Gauss-Legendre quadrature per knot span with `order` nodes
    /// (exact for the piecewise-polynomial integrands used here).
    fn quadrature_product(&self, row_at: impl Fn(f64) -> DVector<f64>) -> DMatrix<f64> {
        let k = self.dim();
        let (nodes, weights) = gauss_legendre(self.order);
        let mut m = DMatrix::zeros(k, k);
        for s in self.positive_spans() {
            let (lo, hi) = (self.knots[s], self.knots[s + 1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in nodes.iter().zip(&weights) {
                let row = row_at(mid + half * x);
                m.syger(w * half, &row, &row, 1.0);
            }
        }
        // syger fills one triangle; mirror it.
        for i in 0..k {
            for j in 0..i {
                m[(j, i)] = m[(i, j)];
            }
        }
        m
    }
}

/// Build a clamped B-spline basis with equally spaced interior knots.
pub fn make_basis(domain: (f64, f64), n_interior_knots: usize, order: usize) -> Result<SplineBasis> {
    let (a, b) = domain;
    if !a.is_finite() || !b.is_finite() || b <= a {
        return Err(Error::InvalidArgument(format!(
            "degenerate domain [{a}, {b}]: need finite bounds with t_min < t_max"
        )));
    }
    if order < 2 {
        return Err(Error::InvalidArgument(format!("order {order} < 2 is not supported")));
    }
    let mut knots = Vec::with_capacity(2 * order + n_interior_knots);
    knots.extend(std::iter::repeat_n(a, order));
    let step = (b - a) / (n_interior_knots as f64 + 1.0);
    for i in 1..=n_interior_knots {
        knots.push(a + step * i as f64);
    }
    knots.extend(std::iter::repeat_n(b, order));
    Ok(SplineBasis { t_min: a, t_max: b, order, n_interior: n_interior_knots, knots })
}

/// Evaluate all basis functions at the given points: entry (d, i) = B_i(t_d).
/// Each row sums to 1 (partition of unity).
pub fn eval_basis(basis: &SplineBasis, points: &[f64]) -> Result<DMatrix<f64>> {
    let k = basis.dim();
    let mut out = DMatrix::zeros(points.len(), k);
    for (d, &t) in points.iter().enumerate() {
        basis.check_point(t)?;
        out.set_row(d, &basis.eval_row(t).transpose());
    }
    Ok(out)
}

/// Evaluate second derivatives of all basis functions: entry (d, i) = B_i''(t_d).
pub fn eval_basis_deriv2(basis: &SplineBasis, points: &[f64]) -> Result<DMatrix<f64>> {
    if basis.order < 3 {
        return Err(Error::InvalidArgument(format!(
            "second derivatives need order >= 3, basis has order {}",
            basis.order
        )));
    }
    let w2 = basis.deriv2_weights();
    let k = basis.dim();
    let mut out = DMatrix::zeros(points.len(), k);
    for (d, &t) in points.iter().enumerate() {
        basis.check_point(t)?;
        let low = basis.eval_row_order(basis.order - 2, t);
        out.set_row(d, &(&w2 * low).transpose());
    }
    Ok(out)
}

/// Exact Gram matrix G_ij = integral of B_i(t) B_j(t) dt over the domain.
/// Symmetric positive definite.
pub fn gram_matrix(basis: &SplineBasis) -> DMatrix<f64> {
    basis.quadrature_product(|t| basis.eval_row(t))
}

/// Exact curvature penalty P_ij = integral of B_i''(t) B_j''(t) dt.
/// Symmetric positive semidefinite; its null space is the coefficient
/// subspace of affine functions (dimension 2 for cubic order).
pub fn penalty_matrix(basis: &SplineBasis) -> Result<DMatrix<f64>> {
    if basis.order < 3 {
        return Err(Error::InvalidArgument(format!(
            "curvature penalty needs order >= 3, basis has order {}",
            basis.order
        )));
    }
    let w2 = basis.deriv2_weights();
    Ok(basis.quadrature_product(|t| &w2 * basis.eval_row_order(basis.order - 2, t)))
}

/// Grid surrogate of the Gram matrix: B'B summed over the grid points, with
/// B the eval_basis matrix. Scaled by the grid spacing this converges to
/// `gram_matrix` as the grid refines; exposed for the legacy formulation
/// that works directly on grid values.
pub fn grid_gram(basis: &SplineBasis, grid: &[f64]) -> Result<DMatrix<f64>> {
    let b = eval_basis(basis, grid)?;
    Ok(b.transpose() * &b)
}

/// Least-squares projection of sampled curves onto the basis: returns the
/// N x K coefficient matrix whose rows minimize the squared discrepancy
/// between each curve's grid values and the spline's grid values.
pub fn project_curves(
    basis: &SplineBasis,
    grid: &[f64],
    curves: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let d = grid.len();
    let k = basis.dim();
    if curves.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "curves have {} columns but the grid has {} points",
            curves.ncols(),
            d
        )));
    }
    if d < k {
        return Err(Error::InvalidArgument(format!(
            "grid has {d} points but the basis has dimension {k}; projection needs at least K points"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Data("grid points must be strictly ascending".into()));
    }
    let b = eval_basis(basis, grid)?;
    let svd = b.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * f64::EPSILON * d.max(k) as f64;
    if svd.rank(tol) < k {
        return Err(Error::Numerical(
            "projection design matrix is rank-deficient; use fewer knots or a denser grid".into(),
        ));
    }
    let coeffs = svd
        .solve(&curves.transpose(), tol)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    Ok(coeffs.transpose())
}

/// Evaluation and operator matrices for a basis on a grid, bundled.
pub fn basis_matrices(basis: &SplineBasis, grid: &[f64]) -> Result<BasisMatrices> {
    Ok(BasisMatrices {
        b: eval_basis(basis, grid)?,
        b2: eval_basis_deriv2(basis, grid)?,
        g: gram_matrix(basis),
        p: penalty_matrix(basis)?,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = nf * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn dimension_is_interior_plus_order() {
        assert_eq!(make_basis((0.0, 1.0), 0, 4).unwrap().dim(), 4);
        assert_eq!(make_basis((850.0, 1050.0), 40, 4).unwrap().dim(), 44);
        assert_eq!(make_basis((0.0, 1.0), 6, 4).unwrap().dim(), 10);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(make_basis((1.0, 1.0), 3, 4).is_err());
        assert!(make_basis((2.0, 1.0), 3, 4).is_err());
        assert!(make_basis((0.0, f64::NAN), 3, 4).is_err());
        assert!(make_basis((0.0, 1.0), 3, 1).is_err());
    }

    #[test]
    fn order_one_rows_are_span_indicators() {
        let basis = make_basis((0.0, 1.0), 3, 4).unwrap();
        // Order-1 functions over the same knots are indicators of the spans;
        // exactly one is 1 at any interior point.
        let row = basis.eval_row_order(1, 0.3);
        let ones: Vec<usize> = (0..row.len()).filter(|&i| row[i] != 0.0).collect();
        assert_eq!(ones.len(), 1);
        assert_eq!(row[ones[0]], 1.0);
    }

    #[test]
    fn rows_sum_to_one_across_the_domain() {
        let basis = make_basis((0.0, 1.0), 6, 4).unwrap();
        let points: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let b = eval_basis(&basis, &points).unwrap();
        for d in 0..points.len() {
            assert_abs_diff_eq!(b.row(d).sum(), 1.0, epsilon = 1e-12);
            assert!(b.row(d).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn out_of_domain_point_is_named() {
        let basis = make_basis((0.0, 1.0), 2, 4).unwrap();
        match eval_basis(&basis, &[0.5, 1.5]) {
            Err(Error::PointOutsideDomain { point, .. }) => assert_eq!(point, 1.5),
            other => panic!("expected out-of-domain error, got {other:?}"),
        }
    }

    /// Coefficients reproducing a polynomial on the basis, via projection on
    /// a dense grid (exact for degree < order).
    fn poly_coeffs(basis: &SplineBasis, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let (a, b) = basis.domain();
        let grid: Vec<f64> = (0..200).map(|i| a + (b - a) * i as f64 / 199.0).collect();
        let values = DMatrix::from_fn(1, grid.len(), |_, j| f(grid[j]));
        project_curves(basis, &grid, &values).unwrap().row(0).transpose()
    }

    #[test]
    fn linear_function_has_zero_second_derivative() {
        let basis = make_basis((0.0, 1.0), 5, 4).unwrap();
        let c = poly_coeffs(&basis, |t| 2.0 * t + 1.0);
        let points: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let b2 = eval_basis_deriv2(&basis, &points).unwrap();
        let d2 = b2 * &c;
        for v in d2.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_has_constant_second_derivative() {
        let basis = make_basis((0.0, 1.0), 5, 4).unwrap();
        let c = poly_coeffs(&basis, |t| t * t);
        let points: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let b2 = eval_basis_deriv2(&basis, &points).unwrap();
        let d2 = b2 * &c;
        for v in d2.iter() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn deriv2_requires_order_three() {
        let basis = make_basis((0.0, 1.0), 3, 2).unwrap();
        assert!(eval_basis_deriv2(&basis, &[0.5]).is_err());
        assert!(penalty_matrix(&basis).is_err());
    }

    #[test]
    fn order_two_gram_matches_hat_function_integrals() {
        // Two linear hat functions on [0, 1]: G = [[1/3, 1/6], [1/6, 1/3]].
        let basis = make_basis((0.0, 1.0), 0, 2).unwrap();
        let g = gram_matrix(&basis);
        assert_relative_eq!(g[(0, 0)], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(g[(0, 1)], 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(g[(1, 1)], 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gram_is_positive_definite() {
        for (knots, order) in [(0usize, 4usize), (6, 4), (12, 5), (40, 4)] {
            let basis = make_basis((850.0, 1050.0), knots, order).unwrap();
            let g = gram_matrix(&basis);
            assert!(nalgebra::Cholesky::new(g).is_some(), "knots={knots} order={order}");
        }
    }

    #[test]
    fn affine_functions_have_zero_penalty() {
        let basis = make_basis((0.0, 1.0), 6, 4).unwrap();
        let p = penalty_matrix(&basis).unwrap();
        let c = poly_coeffs(&basis, |t| 3.0 - 0.7 * t);
        let quad = (c.transpose() * &p * &c)[(0, 0)];
        assert_abs_diff_eq!(quad, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn quadratic_penalty_matches_analytic_integral() {
        // f(t) = t^2 on [0, 1]: integral of (f'')^2 = 4.
        let basis = make_basis((0.0, 1.0), 6, 4).unwrap();
        let p = penalty_matrix(&basis).unwrap();
        let c = poly_coeffs(&basis, |t| t * t);
        let quad = (c.transpose() * &p * &c)[(0, 0)];
        assert_abs_diff_eq!(quad, 4.0, epsilon = 1e-8);
    }

    #[test]
    fn penalty_null_space_is_two_dimensional_for_cubics() {
        let basis = make_basis((0.0, 1.0), 6, 4).unwrap();
        let p = penalty_matrix(&basis).unwrap();
        let eig = nalgebra::SymmetricEigen::new(p);
        let max = eig.eigenvalues.max();
        let near_zero = eig.eigenvalues.iter().filter(|&&v| v.abs() < 1e-10 * max).count();
        assert_eq!(near_zero, 2);
    }

    #[test]
    fn constant_curve_reconstructs_exactly() {
        let basis = make_basis((0.0, 2.0), 5, 4).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| 2.0 * i as f64 / 39.0).collect();
        let curves = DMatrix::from_element(1, 40, 3.7);
        let coeffs = project_curves(&basis, &grid, &curves).unwrap();
        // Partition of unity: a constant is represented by equal coefficients.
        for v in coeffs.iter() {
            assert_abs_diff_eq!(*v, 3.7, epsilon = 1e-9);
        }
    }

    #[test]
    fn in_span_curves_project_with_zero_residual() {
        let basis = make_basis((850.0, 1050.0), 40, 4).unwrap();
        let grid: Vec<f64> = (0..100).map(|i| 850.0 + 200.0 * i as f64 / 99.0).collect();
        let b = eval_basis(&basis, &grid).unwrap();
        let true_coeffs = DVector::from_fn(basis.dim(), |i, _| ((i * 7919 % 13) as f64) - 6.0);
        let values = &b * &true_coeffs;
        let curve = DMatrix::from_row_slice(1, values.len(), values.as_slice());
        let recovered = project_curves(&basis, &grid, &curve).unwrap();
        let reconstruction = &b * recovered.row(0).transpose();
        let residual = (reconstruction - values).norm();
        assert!(residual < 1e-9, "residual {residual}");
    }

    #[test]
    fn projection_rejects_bad_designs() {
        let basis = make_basis((0.0, 1.0), 6, 4).unwrap();
        let grid: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let curves = DMatrix::zeros(1, 5);
        // D = 5 < K = 10.
        assert!(project_curves(&basis, &grid, &curves).is_err());
        let dup = vec![0.0, 0.1, 0.1, 0.5, 1.0];
        let curves5 = DMatrix::zeros(1, 5);
        assert!(project_curves(&basis, &dup, &curves5).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // n nodes are exact up to degree 2n-1.
        for n in 1..=6 {
            let (nodes, weights) = gauss_legendre(n);
            for degree in 0..(2 * n) {
                let exact = if degree % 2 == 1 { 0.0 } else { 2.0 / (degree as f64 + 1.0) };
                let quad: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(degree as i32))
                    .sum();
                assert_abs_diff_eq!(quad, exact, epsilon = 1e-13);
            }
        }
    }
}
