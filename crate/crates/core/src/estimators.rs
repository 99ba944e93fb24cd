//! Empirical operators in spline-coefficient space: datasets, centering,
//! response slicing, conditional means, the between-slice matrix, and the
//! penalized covariance matrix.

use crate::basis::{self, SplineBasis};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Prediction task carried by a dataset and its fitted models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Response attached to the curves: real-valued or class labels 1..=H.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Regression(Vec<f64>),
    Classification(Vec<usize>),
}

/// Discretized curves on a shared grid with a response per curve.
#[derive(Debug, Clone)]
pub struct CurveDataset {
    grid: Vec<f64>,
    curves: DMatrix<f64>,
    response: Response,
}

impl CurveDataset {
    /// Validates shapes, grid ordering, finiteness, and (for classification)
    /// that labels cover a contiguous 1..=H range with every class nonempty.
    pub fn new(grid: Vec<f64>, curves: DMatrix<f64>, response: Response) -> Result<Self> {
        let n = curves.nrows();
        let d = curves.ncols();
        if n < 2 {
            return Err(Error::Data(format!("dataset needs at least 2 curves, got {n}")));
        }
        if grid.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "curves have {d} columns but the grid has {} points",
                grid.len()
            )));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("grid must be finite and strictly ascending".into()));
        }
        if curves.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("curve values must be finite".into()));
        }
        let resp_len = match &response {
            Response::Regression(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Data("responses must be finite".into()));
                }
                y.len()
            }
            Response::Classification(labels) => {
                check_labels(labels)?;
                labels.len()
            }
        };
        if resp_len != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} curves but {resp_len} responses"
            )));
        }
        Ok(CurveDataset { grid, curves, response })
    }

    pub fn n(&self) -> usize {
        self.curves.nrows()
    }

    pub fn d(&self) -> usize {
        self.curves.ncols()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn curves(&self) -> &DMatrix<f64> {
        &self.curves
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn task(&self) -> Task {
        match self.response {
            Response::Regression(_) => Task::Regression,
            Response::Classification(_) => Task::Classification,
        }
    }

    /// Number of classes H for classification datasets.
    pub fn n_classes(&self) -> Option<usize> {
        match &self.response {
            Response::Regression(_) => None,
            Response::Classification(labels) => labels.iter().max().copied(),
        }
    }

    pub fn ys(&self) -> Option<&[f64]> {
        match &self.response {
            Response::Regression(y) => Some(y),
            Response::Classification(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.response {
            Response::Regression(_) => None,
            Response::Classification(labels) => Some(labels),
        }
    }

    /// Dataset restricted to the given curve indices (used for train/test
    /// splits); the result must still satisfy all dataset invariants.
    pub fn subset(&self, indices: &[usize]) -> Result<CurveDataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidArgument(format!(
                "subset index {bad} out of range for {} curves",
                self.n()
            )));
        }
        let curves = self.curves.select_rows(indices.iter());
        let response = match &self.response {
            Response::Regression(y) => {
                Response::Regression(indices.iter().map(|&i| y[i]).collect())
            }
            Response::Classification(l) => {
                Response::Classification(indices.iter().map(|&i| l[i]).collect())
            }
        };
        CurveDataset::new(self.grid.clone(), curves, response)
    }
}

fn check_labels(labels: &[usize]) -> Result<()> {
    let h = *labels.iter().max().ok_or_else(|| Error::Data("empty label vector".into()))?;
    if h < 2 {
        return Err(Error::Data("classification needs at least 2 classes".into()));
    }
    let mut counts = vec![0usize; h];
    for &l in labels {
        if l == 0 || l > h {
            return Err(Error::Data(format!("label {l} outside 1..={h}")));
        }
        counts[l - 1] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Data(format!(
            "class {} is empty; labels must cover a contiguous 1..={h} range",
            missing + 1
        )));
    }
    Ok(())
}

/// Coefficient matrix after centering, with the removed mean.
#[derive(Debug, Clone)]
pub struct CenteredCoefficients {
    /// N x K centered coefficients; column means are zero.
    pub c: DMatrix<f64>,
    /// The empirical mean coefficient vector that was subtracted.
    pub mean_coeffs: DVector<f64>,
}

/// Subtract column means from a coefficient matrix and record them.
pub fn center(c: &DMatrix<f64>) -> Result<CenteredCoefficients> {
    let n = c.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("centering needs at least 2 rows, got {n}")));
    }
    let mean = c.row_mean().transpose();
    let mut centered = c.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    Ok(CenteredCoefficients { c: centered, mean_coeffs: mean })
}

/// Assignment of observations to response slices.
#[derive(Debug, Clone)]
pub struct SliceAssignment {
    /// Slice of each observation, in 1..=H.
    pub slice_of: Vec<usize>,
    /// Observations per slice; all positive, summing to N.
    pub counts: Vec<usize>,
    /// Response cut points between consecutive slices (regression only):
    /// boundaries[h] is the smallest response value assigned to slice h+2.
    pub boundaries: Vec<f64>,
}

impl SliceAssignment {
    pub fn n_slices(&self) -> usize {
        self.counts.len()
    }

    /// Treat class labels as slices (classification case).
    pub fn from_labels(labels: &[usize]) -> Result<SliceAssignment> {
        check_labels(labels)?;
        let h = *labels.iter().max().unwrap();
        let mut counts = vec![0usize; h];
        for &l in labels {
            counts[l - 1] += 1;
        }
        Ok(SliceAssignment { slice_of: labels.to_vec(), counts, boundaries: Vec::new() })
    }
}

/// Equal-frequency slicing of a real response into H slices. Slice sizes are
/// floor(N/H) with the remainder going to the lowest slices; ties are broken
/// by stable sort order. Errors when fewer than H distinct values exist.
pub fn slice_regression(y: &[f64], h: usize) -> Result<SliceAssignment> {
    let n = y.len();
    if h < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 slices, got {h}")));
    }
    if n < h {
        return Err(Error::Data(format!("cannot form {h} nonempty slices from {n} responses")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("responses must be finite".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap());
    let distinct = 1 + order.windows(2).filter(|w| y[w[1]] > y[w[0]]).count();
    if distinct < h {
        return Err(Error::Data(format!(
            "only {distinct} distinct response values; cannot form {h} nonempty quantile slices"
        )));
    }
    let base = n / h;
    let rem = n % h;
    let mut slice_of = vec![0usize; n];
    let mut counts = vec![0usize; h];
    let mut boundaries = Vec::with_capacity(h - 1);
    let mut pos = 0;
    for s in 0..h {
        let size = base + usize::from(s < rem);
        if s > 0 {
            boundaries.push(y[order[pos]]);
        }
        for &idx in &order[pos..pos + size] {
            slice_of[idx] = s + 1;
        }
        counts[s] = size;
        pos += size;
    }
    Ok(SliceAssignment { slice_of, counts, boundaries })
}

/// Per-slice means of the centered coefficients: row h-1 is the mean of the
/// rows assigned to slice h.
pub fn conditional_means(
    cc: &CenteredCoefficients,
    slices: &SliceAssignment,
) -> Result<DMatrix<f64>> {
    let n = cc.c.nrows();
    let k = cc.c.ncols();
    let h = slices.n_slices();
    if slices.slice_of.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} coefficient rows but {} slice assignments",
            slices.slice_of.len()
        )));
    }
    if slices.counts.contains(&0) {
        return Err(Error::Data("every slice must be nonempty".into()));
    }
    let mut means = DMatrix::zeros(h, k);
    for (i, &s) in slices.slice_of.iter().enumerate() {
        let mut row = means.row_mut(s - 1);
        row += cc.c.row(i);
    }
    for (s, &count) in slices.counts.iter().enumerate() {
        means.row_mut(s).scale_mut(1.0 / count as f64);
    }
    Ok(means)
}

/// Between-slice matrix M_e: with weights w_h = N_h / N and slice means mu_h,
/// M_e = sum_h w_h (G mu_h)(G mu_h)', so that a' M_e a = sum_h w_h <mu_h, a>^2
/// in the G-inner product. Data must be centered, which removes the mean
/// outer-product term. Symmetric PSD of rank at most H-1.
pub fn between_matrix(
    cc: &CenteredCoefficients,
    slices: &SliceAssignment,
    g: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let k = cc.c.ncols();
    if g.nrows() != k || g.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {}x{} but coefficients have {k} columns",
            g.nrows(),
            g.ncols()
        )));
    }
    let means = conditional_means(cc, slices)?;
    let n = cc.c.nrows() as f64;
    let mut m = DMatrix::zeros(k, k);
    for (s, &count) in slices.counts.iter().enumerate() {
        let gm = g * means.row(s).transpose();
        m.syger(count as f64 / n, &gm, &gm, 1.0);
    }
    for i in 0..k {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(m)
}

/// Between-class matrix: the between-slice matrix with classes as slices,
/// which turns the procedure into a discriminant analysis.
pub fn between_matrix_classif(
    cc: &CenteredCoefficients,
    labels: &[usize],
    g: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    between_matrix(cc, &SliceAssignment::from_labels(labels)?, g)
}

/// The unpenalized data term G (C'C / N) G: the empirical covariance of the
/// curves expressed as a quadratic form on coefficient vectors.
pub fn data_covariance(cc: &CenteredCoefficients, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = cc.c.ncols();
    if g.nrows() != k || g.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {}x{} but coefficients have {k} columns",
            g.nrows(),
            g.ncols()
        )));
    }
    let n = cc.c.nrows() as f64;
    let cg = &cc.c * g;
    let mut m = cg.transpose() * cg;
    m.scale_mut(1.0 / n);
    // The product form above is symmetric up to rounding; enforce it exactly.
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    Ok(m)
}

/// Penalized covariance M_{X,alpha} = G (C'C / N) G + alpha P.
pub fn covariance_penalized(
    cc: &CenteredCoefficients,
    g: &DMatrix<f64>,
    p: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be nonnegative, got {alpha}")));
    }
    let k = cc.c.ncols();
    if p.nrows() != k || p.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "penalty matrix is {}x{} but coefficients have {k} columns",
            p.nrows(),
            p.ncols()
        )));
    }
    let mut m = data_covariance(cc, g)?;
    m += p * alpha;
    Ok(m)
}

/// The operator bundle consumed by the eigensolver: between matrix, data
/// covariance (unpenalized), penalty, and Gram.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub m_e: DMatrix<f64>,
    pub m_x: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl OperatorPair {
    pub fn from_slices(
        cc: &CenteredCoefficients,
        slices: &SliceAssignment,
        g: &DMatrix<f64>,
        p: &DMatrix<f64>,
    ) -> Result<OperatorPair> {
        Ok(OperatorPair {
            m_e: between_matrix(cc, slices, g)?,
            m_x: data_covariance(cc, g)?,
            p: p.clone(),
            g: g.clone(),
        })
    }

    pub fn from_labels(
        cc: &CenteredCoefficients,
        labels: &[usize],
        g: &DMatrix<f64>,
        p: &DMatrix<f64>,
    ) -> Result<OperatorPair> {
        OperatorPair::from_slices(cc, &SliceAssignment::from_labels(labels)?, g, p)
    }

    /// Assembled M_{X,alpha} = M_X + alpha P.
    pub fn penalized(&self, alpha: f64) -> Result<DMatrix<f64>> {
        if !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        Ok(&self.m_x + &self.p * alpha)
    }
}

/// Project a dataset onto a basis, center, and build the operators, using
/// class labels as slices for classification and equal-frequency slices of
/// the response (n_slices of them) for regression.
pub fn build_operators(
    data: &CurveDataset,
    basis: &SplineBasis,
    n_slices: usize,
) -> Result<(CenteredCoefficients, OperatorPair)> {
    let coeffs = basis::project_curves(basis, data.grid(), data.curves())?;
    let cc = center(&coeffs)?;
    let g = basis::gram_matrix(basis);
    let p = basis::penalty_matrix(basis)?;
    let ops = match data.response() {
        Response::Regression(y) => {
            let slices = slice_regression(y, n_slices)?;
            OperatorPair::from_slices(&cc, &slices, &g, &p)?
        }
        Response::Classification(labels) => OperatorPair::from_labels(&cc, labels, &g, &p)?,
    };
    Ok((cc, ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy_centered(rows: &[&[f64]]) -> CenteredCoefficients {
        let k = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        CenteredCoefficients {
            c: DMatrix::from_row_slice(rows.len(), k, &flat),
            mean_coeffs: DVector::zeros(k),
        }
    }

    #[test]
    fn centering_removes_column_means_and_is_idempotent() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 5.0, 8.0]);
        let cc = center(&c).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(cc.c.column(j).sum(), 0.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(cc.mean_coeffs[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cc.mean_coeffs[1], 5.0, epsilon = 1e-12);
        let again = center(&cc.c).unwrap();
        assert_abs_diff_eq!((&again.c - &cc.c).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn centering_a_repeated_row_gives_zero() {
        let c = DMatrix::from_row_slice(3, 2, &[4.0, -1.0, 4.0, -1.0, 4.0, -1.0]);
        let cc = center(&c).unwrap();
        assert_abs_diff_eq!(cc.c.norm(), 0.0, epsilon = 1e-12);
        assert_eq!(cc.mean_coeffs, DVector::from_vec(vec![4.0, -1.0]));
    }

    #[test]
    fn slicing_splits_sorted_values_evenly() {
        let s = slice_regression(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(s.slice_of, vec![1, 1, 2, 2]);
        assert_eq!(s.counts, vec![2, 2]);
        assert_eq!(s.boundaries, vec![3.0]);
    }

    #[test]
    fn slicing_handles_unsorted_input() {
        let s = slice_regression(&[4.0, 1.0, 3.0, 2.0], 2).unwrap();
        assert_eq!(s.slice_of, vec![2, 1, 2, 1]);
        assert_eq!(s.counts, vec![2, 2]);
    }

    #[test]
    fn constant_response_cannot_be_sliced() {
        assert!(slice_regression(&[5.0; 8], 2).is_err());
    }

    #[test]
    fn too_few_observations_cannot_be_sliced() {
        assert!(slice_regression(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn uniform_draws_slice_into_equal_counts() {
        let y: Vec<f64> = (0..100).map(|i| ((i * 7919) % 100) as f64).collect();
        let s = slice_regression(&y, 10).unwrap();
        assert!(s.counts.iter().all(|&c| c == 10));
        assert_eq!(s.counts.iter().sum::<usize>(), 100);
    }

    #[test]
    fn single_slice_mean_of_centered_data_is_zero() {
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 2.0, 3.0, 1.0, 1.5, -0.5]);
        let cc = center(&c).unwrap();
        let slices = SliceAssignment {
            slice_of: vec![1; 4],
            counts: vec![4],
            boundaries: Vec::new(),
        };
        let means = conditional_means(&cc, &slices).unwrap();
        assert_abs_diff_eq!(means.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn singleton_slices_return_their_rows() {
        let cc = toy_centered(&[&[1.0, -2.0], &[-1.0, 2.0]]);
        let slices = SliceAssignment {
            slice_of: vec![1, 2],
            counts: vec![1, 1],
            boundaries: vec![0.0],
        };
        let means = conditional_means(&cc, &slices).unwrap();
        assert_eq!(means.row(0), cc.c.row(0));
        assert_eq!(means.row(1), cc.c.row(1));
    }

    #[test]
    fn one_slice_gives_zero_between_matrix() {
        let c = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 2.0, -1.0, 2.0, 0.5, 3.0, 1.0, 1.0, 1.5, -0.5, 0.0]);
        let cc = center(&c).unwrap();
        let slices = SliceAssignment {
            slice_of: vec![1; 4],
            counts: vec![4],
            boundaries: Vec::new(),
        };
        let g = DMatrix::identity(3, 3);
        let m = between_matrix(&cc, &slices, &g).unwrap();
        assert_abs_diff_eq!(m.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn opposite_slice_means_give_rank_one_between_matrix() {
        let u = [1.0, -0.5, 2.0];
        let cc = toy_centered(&[&u, &[-1.0, 0.5, -2.0]]);
        let slices = SliceAssignment {
            slice_of: vec![1, 2],
            counts: vec![1, 1],
            boundaries: vec![0.0],
        };
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let m = between_matrix(&cc, &slices, &g).unwrap();
        let a = DVector::from_vec(vec![0.3, 1.0, -0.7]);
        let quad = (a.transpose() * &m * &a)[(0, 0)];
        let uv = DVector::from_vec(u.to_vec());
        let inner = (a.transpose() * &g * uv)[(0, 0)];
        assert_abs_diff_eq!(quad, inner * inner, epsilon = 1e-12);
    }

    #[test]
    fn identical_class_means_give_zero_between_matrix() {
        // Two rows per class at +/-v: every class mean is zero after centering.
        let v = [1.0, 2.0];
        let cc = toy_centered(&[&v, &[-1.0, -2.0], &v, &[-1.0, -2.0]]);
        let labels = vec![1, 1, 2, 2];
        let g = DMatrix::identity(2, 2);
        let m = between_matrix_classif(&cc, &labels, &g).unwrap();
        assert_abs_diff_eq!(m.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn between_matrix_rank_is_bounded_by_slices_minus_one() {
        let n = 30;
        let k = 6;
        let c = DMatrix::from_fn(n, k, |i, j| ((i * 31 + j * 17) % 23) as f64 - 11.0);
        let cc = center(&c).unwrap();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13) % n) as f64).collect();
        let slices = slice_regression(&y, 3).unwrap();
        let g = DMatrix::identity(k, k);
        let m = between_matrix(&cc, &slices, &g).unwrap();
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // Rank <= H-1 = 2 on centered data.
        assert!(eig[2] < 1e-8 * eig[0].max(1e-300), "third eigenvalue {} too large", eig[2]);
    }

    #[test]
    fn penalized_covariance_trivial_cases() {
        // Single nonzero row u, alpha = 0: a' M a = <u, a>^2 / N.
        let u = [2.0, -1.0];
        let cc = toy_centered(&[&u, &[0.0, 0.0], &[0.0, 0.0]]);
        let g = DMatrix::identity(2, 2);
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let m = covariance_penalized(&cc, &g, &p, 0.0).unwrap();
        let a = DVector::from_vec(vec![0.5, 1.5]);
        let quad = (a.transpose() * &m * &a)[(0, 0)];
        let inner = 2.0 * 0.5 - 1.0 * 1.5;
        assert_abs_diff_eq!(quad, inner * inner / 3.0, epsilon = 1e-12);

        // Zero data, alpha = 1: M = P.
        let zero = toy_centered(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let m = covariance_penalized(&zero, &g, &p, 1.0).unwrap();
        assert_abs_diff_eq!((&m - &p).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let cc = toy_centered(&[&[1.0], &[-1.0]]);
        let g = DMatrix::identity(1, 1);
        let p = DMatrix::identity(1, 1);
        assert!(covariance_penalized(&cc, &g, &p, -0.1).is_err());
        let ops = OperatorPair { m_e: g.clone(), m_x: g.clone(), p: p.clone(), g: g.clone() };
        assert!(ops.penalized(-1.0).is_err());
    }

    #[test]
    fn dataset_validation_catches_label_gaps() {
        let grid = vec![0.0, 0.5, 1.0];
        let curves = DMatrix::zeros(3, 3);
        let bad = Response::Classification(vec![1, 3, 3]);
        assert!(CurveDataset::new(grid.clone(), curves.clone(), bad).is_err());
        let good = Response::Classification(vec![1, 2, 2]);
        assert!(CurveDataset::new(grid, curves, good).is_ok());
    }

    #[test]
    fn subset_preserves_grid_and_selects_rows() {
        let grid = vec![0.0, 0.5, 1.0];
        let curves = DMatrix::from_row_slice(4, 3, &[
            0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0,
        ]);
        let data =
            CurveDataset::new(grid, curves, Response::Regression(vec![0.0, 1.0, 2.0, 3.0]))
                .unwrap();
        let sub = data.subset(&[2, 0]).unwrap();
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.curves()[(0, 0)], 2.0);
        assert_eq!(sub.ys().unwrap(), &[2.0, 0.0]);
    }
}
