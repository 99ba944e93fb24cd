//! The regularized inverse-regression eigenproblem: maximize the penalized
//! Rayleigh quotient a'M_e a / a'(M_X + alpha P)a, producing the estimated
//! reduction directions, plus score projection, a truncated-covariance
//! variant, and validation-based selection of the penalty weight.

use crate::basis::{self, SplineBasis};
use crate::error::{Error, Result};
use crate::estimators::{
    center, data_covariance, slice_regression, CenteredCoefficients, CurveDataset, OperatorPair,
    Response, Task,
};
use crate::mlp::{self, TrainConfig};
use crate::pipeline;
use crate::seeding;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The fitted reduction basis: columns of `a` are the coefficient vectors of
/// the estimated directions, orthonormal in the M_{X,alpha} inner product,
/// with eigenvalues sorted in descending order. For the truncated and PCA
/// variants `alpha` is 0 and orthonormality holds in the respective metric.
#[derive(Debug, Clone)]
pub struct EdrModel {
    pub basis: SplineBasis,
    /// K x q matrix of direction coefficients.
    pub a: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub alpha: f64,
    pub q: usize,
    /// Mean coefficient vector removed before projecting.
    pub mean_coeffs: DVector<f64>,
    /// Gram matrix of the basis (recomputed on load; fully determined by the
    /// basis).
    pub gram: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct EdrModelRepr {
    basis: SplineBasis,
    #[serde(with = "crate::serialize::mat")]
    a: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    alpha: f64,
    q: usize,
    #[serde(with = "crate::serialize::vec")]
    mean_coeffs: DVector<f64>,
}

impl Serialize for EdrModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EdrModelRepr {
            basis: self.basis.clone(),
            a: self.a.clone(),
            eigenvalues: self.eigenvalues.clone(),
            alpha: self.alpha,
            q: self.q,
            mean_coeffs: self.mean_coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EdrModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = EdrModelRepr::deserialize(d)?;
        let k = repr.basis.dim();
        if repr.a.nrows() != k || repr.a.ncols() != repr.q || repr.mean_coeffs.len() != k {
            return Err(serde::de::Error::custom(
                "reduction model shapes are inconsistent with the basis dimension",
            ));
        }
        if repr.eigenvalues.len() != repr.q {
            return Err(serde::de::Error::custom("one eigenvalue per direction is required"));
        }
        let gram = basis::gram_matrix(&repr.basis);
        Ok(EdrModel {
            basis: repr.basis,
            a: repr.a,
            eigenvalues: repr.eigenvalues,
            alpha: repr.alpha,
            q: repr.q,
            mean_coeffs: repr.mean_coeffs,
            gram,
        })
    }
}

impl EdrModel {
    /// Groups of consecutive direction indices whose eigenvalues are closer
    /// than 1e-10 times the leading eigenvalue. Directions inside a group
    /// are only determined up to rotation of their span, so comparisons
    /// should treat each group as a subspace.
    pub fn eigenvalue_blocks(&self) -> Vec<(usize, usize)> {
        let tol = 1e-10 * self.eigenvalues.first().copied().unwrap_or(0.0).abs();
        let mut blocks = Vec::new();
        let mut start = 0;
        for j in 1..=self.eigenvalues.len() {
            if j == self.eigenvalues.len() || (self.eigenvalues[j - 1] - self.eigenvalues[j]) > tol
            {
                blocks.push((start, j));
                start = j;
            }
        }
        blocks
    }
}

/// Cholesky factorization with the one-shot jitter retry used to realize the
/// positive-definiteness assumption numerically.
fn cholesky_with_jitter(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let k = m.nrows();
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let jitter = 1e-10 * m.trace() / k as f64;
    log::warn!("penalized covariance factorization failed; retrying with jitter {jitter:.3e}");
    let mut jittered = m;
    for i in 0..k {
        jittered[(i, i)] += jitter;
    }
    Cholesky::new(jittered).ok_or_else(|| {
        Error::Numerical(
            "penalized covariance matrix is not positive definite even after jitter; the method \
             requires a positive definite penalized covariance - increase alpha or reduce the \
             basis dimension"
                .into(),
        )
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Orient a direction so its first coordinate of nonnegligible size is
/// positive; eigenvectors are sign-indeterminate and this pins a convention.
fn fix_sign(column: &mut nalgebra::DVectorViewMut<f64>) {
    let scale = column.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return;
    }
    for i in 0..column.len() {
        if column[i].abs() > 1e-12 * scale {
            if column[i] < 0.0 {
                column.neg_mut();
            }
            return;
        }
    }
}

/// Solve the symmetric eigenproblem of `W = inv(L) M_e inv(L')` and map the
/// top q eigenvectors back through `L'`, yielding M-orthonormal directions
/// with descending eigenvalues.
fn whitened_eigen(
    m_e: &DMatrix<f64>,
    chol: &Cholesky<f64, Dyn>,
    q: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = m_e.nrows();
    let l = chol.l();
    let li_me = l
        .solve_lower_triangular(m_e)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let w = l
        .solve_lower_triangular(&li_me.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let eig = nalgebra::SymmetricEigen::new(symmetrize(&w));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut a = DMatrix::zeros(k, q);
    let mut eigenvalues = Vec::with_capacity(q);
    for (col, &idx) in order.iter().take(q).enumerate() {
        let v = eig.eigenvectors.column(idx).into_owned();
        let back = l
            .tr_solve_lower_triangular(&v)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        a.set_column(col, &back);
        fix_sign(&mut a.column_mut(col));
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok((a, eigenvalues))
}

/// Fit the penalized reduction: eigenvectors of M_{X,alpha}^{-1} M_e through
/// a symmetric factorization, M_{X,alpha}-orthonormal, eigenvalues
/// descending, each direction's first significant coordinate positive.
pub fn fit_edr(
    ops: &OperatorPair,
    alpha: f64,
    q: usize,
    basis: &SplineBasis,
    mean_coeffs: &DVector<f64>,
) -> Result<EdrModel> {
    let k = ops.m_x.nrows();
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "penalty weight alpha must be positive and finite, got {alpha}"
        )));
    }
    if q < 1 || q > k {
        return Err(Error::InvalidArgument(format!("q must lie in 1..={k}, got {q}")));
    }
    if basis.dim() != k || mean_coeffs.len() != k || ops.m_e.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "operators ({}x{}), basis (K={}) and mean (len {}) disagree",
            ops.m_e.nrows(),
            ops.m_x.nrows(),
            basis.dim(),
            mean_coeffs.len()
        )));
    }
    let chol = cholesky_with_jitter(ops.penalized(alpha)?)?;
    let (a, eigenvalues) = whitened_eigen(&ops.m_e, &chol, q)?;
    if let Some(lead) = eigenvalues.first().copied().filter(|&l| l > 0.0) {
        if eigenvalues.iter().any(|&l| l < 1e-8 * lead) {
            log::warn!(
                "q = {q} exceeds the numerical rank of the between matrix; trailing directions \
                 are noise"
            );
        }
    }
    Ok(EdrModel {
        basis: basis.clone(),
        a,
        eigenvalues,
        alpha,
        q,
        mean_coeffs: mean_coeffs.clone(),
        gram: ops.g.clone(),
    })
}

/// The penalized Rayleigh quotient a'M_e a / a'(M_X + alpha P)a.
pub fn rayleigh(a: &DVector<f64>, ops: &OperatorPair, alpha: f64) -> Result<f64> {
    if a.len() != ops.m_e.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} coordinates, operators are {}x{}",
            a.len(),
            ops.m_e.nrows(),
            ops.m_e.ncols()
        )));
    }
    let m = ops.penalized(alpha)?;
    let num = (a.transpose() * &ops.m_e * a)[(0, 0)];
    let den = (a.transpose() * m * a)[(0, 0)];
    if den <= 0.0 {
        return Err(Error::Numerical(
            "Rayleigh quotient denominator is not positive".into(),
        ));
    }
    Ok(num / den)
}

/// Scores of curves on the fitted directions: S = (C - mean) G A, one row
/// per curve, so S_nj is the inner product of the centered curve with
/// direction j. `coeffs` are raw (uncentered) basis coefficients; the
/// model's stored mean is subtracted here.
pub fn project_edr(model: &EdrModel, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = model.basis.dim();
    if coeffs.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "coefficients have {} columns but the basis dimension is {k}",
            coeffs.ncols()
        )));
    }
    let ga = &model.gram * &model.a;
    let mut centered = coeffs.clone();
    for mut row in centered.row_iter_mut() {
        row -= model.mean_coeffs.transpose();
    }
    Ok(centered * ga)
}

/// Principal directions of the data covariance in the Gram metric: returns
/// (U, deltas) with M_X u_j = delta_j G u_j, U G-orthonormal, deltas
/// descending and positive down to the numerical rank.
pub fn g_metric_pca(
    cc: &CenteredCoefficients,
    g: &DMatrix<f64>,
    k_n: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = cc.c.ncols();
    if k_n < 1 || k_n > k {
        return Err(Error::InvalidArgument(format!("k_n must lie in 1..={k}, got {k_n}")));
    }
    let m_x = data_covariance(cc, g)?;
    let chol = Cholesky::new(g.clone())
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    let (u, deltas) = whitened_eigen(&m_x, &chol, k_n)?;
    let lead = deltas.first().copied().unwrap_or(0.0);
    if lead <= 0.0 || deltas[k_n - 1] <= 1e-12 * lead {
        return Err(Error::Numerical(format!(
            "k_n = {k_n} exceeds the numerical rank of the data covariance"
        )));
    }
    Ok((u, deltas))
}

/// Baseline regularization by truncation: restrict the problem to the top
/// k_n principal components of the data covariance, invert there, and embed
/// the directions back. Directions are M_X-orthonormal within the truncated
/// subspace; `alpha` is reported as 0.
pub fn fit_edr_truncated(
    cc: &CenteredCoefficients,
    g: &DMatrix<f64>,
    m_e: &DMatrix<f64>,
    k_n: usize,
    q: usize,
    basis: &SplineBasis,
) -> Result<EdrModel> {
    let k = cc.c.ncols();
    if q < 1 || q > k_n {
        return Err(Error::InvalidArgument(format!("q must lie in 1..=k_n = {k_n}, got {q}")));
    }
    if m_e.nrows() != k || m_e.ncols() != k || basis.dim() != k {
        return Err(Error::DimensionMismatch(
            "between matrix and basis must match the coefficient dimension".into(),
        ));
    }
    let (u, deltas) = g_metric_pca(cc, g, k_n)?;
    // On the component basis the covariance is diag(deltas); whiten by its
    // inverse square root and solve the small symmetric problem.
    let me_sub = symmetrize(&(u.transpose() * m_e * &u));
    let d_half_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        k_n,
        deltas.iter().map(|d| 1.0 / d.sqrt()),
    ));
    let small = symmetrize(&(&d_half_inv * me_sub * &d_half_inv));
    let eig = nalgebra::SymmetricEigen::new(small);
    let mut order: Vec<usize> = (0..k_n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut a = DMatrix::zeros(k, q);
    let mut eigenvalues = Vec::with_capacity(q);
    for (col, &idx) in order.iter().take(q).enumerate() {
        let y = eig.eigenvectors.column(idx).into_owned();
        let direction = &u * (&d_half_inv * y);
        a.set_column(col, &direction);
        fix_sign(&mut a.column_mut(col));
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(EdrModel {
        basis: basis.clone(),
        a,
        eigenvalues,
        alpha: 0.0,
        q,
        mean_coeffs: cc.mean_coeffs.clone(),
        gram: g.clone(),
    })
}

/// Downstream predictor fitted on the scores during alpha selection.
#[derive(Debug, Clone)]
pub enum Downstream {
    /// One-hidden-layer perceptron with q2 hidden units.
    Mlp { q2: usize },
    /// Linear regression with intercept (regression tasks only).
    Linear,
    /// Nadaraya-Watson kernel predictor with the given bandwidth.
    Kernel { bandwidth: f64 },
}

/// One grid point of the alpha-selection table.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaTrial {
    pub alpha: f64,
    pub validation_error: f64,
}

/// Pick the penalty weight by sample splitting: fit the reduction and the
/// downstream predictor on one part, measure prediction error on the other,
/// and return the alpha with the smallest error (ties favor the larger,
/// smoother alpha) together with the full table in grid order.
#[allow(clippy::too_many_arguments)]
pub fn select_alpha(
    data: &CurveDataset,
    basis: &SplineBasis,
    alpha_grid: &[f64],
    q: usize,
    downstream: &Downstream,
    split_fraction: f64,
    n_slices: usize,
    seed: u64,
) -> Result<(f64, Vec<AlphaTrial>)> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid must be nonempty".into()));
    }
    if alpha_grid.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidArgument("alpha grid values must be positive".into()));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie strictly between 0 and 1, got {split_fraction}"
        )));
    }
    let q = cap_classification_q(q, data)?;
    let (fit_idx, val_idx) = selection_split(data, split_fraction, seed)?;
    if fit_idx.len() < q + 1 || val_idx.len() < q + 1 {
        return Err(Error::Data(format!(
            "split leaves {} / {} observations; both parts need at least q+1 = {}",
            fit_idx.len(),
            val_idx.len(),
            q + 1
        )));
    }
    let fit_data = data.subset(&fit_idx)?;
    let coeffs_fit = basis::project_curves(basis, fit_data.grid(), fit_data.curves())?;
    let cc = center(&coeffs_fit)?;
    let g = basis::gram_matrix(basis);
    let p = basis::penalty_matrix(basis)?;
    let ops = match fit_data.response() {
        Response::Regression(y) => {
            OperatorPair::from_slices(&cc, &slice_regression(y, n_slices)?, &g, &p)?
        }
        Response::Classification(labels) => OperatorPair::from_labels(&cc, labels, &g, &p)?,
    };
    let val_curves = data.curves().select_rows(val_idx.iter());
    let coeffs_val = basis::project_curves(basis, data.grid(), &val_curves)?;

    let table: Vec<AlphaTrial> = alpha_grid
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let model = fit_edr(&ops, alpha, q, basis, &cc.mean_coeffs)?;
            let scores_fit = project_edr(&model, &coeffs_fit)?;
            let scores_val = project_edr(&model, &coeffs_val)?;
            let error = downstream_error(
                &scores_fit,
                &fit_data,
                &scores_val,
                data,
                &val_idx,
                downstream,
                seeding::derive(seed, &[0x5E1E, i as u64]),
            )?;
            Ok(AlphaTrial { alpha, validation_error: error })
        })
        .collect::<Result<_>>()?;

    let mut best = &table[0];
    for trial in &table[1..] {
        let better = trial.validation_error < best.validation_error
            || (trial.validation_error == best.validation_error && trial.alpha > best.alpha);
        if better {
            best = trial;
        }
    }
    Ok((best.alpha, table.clone()))
}

/// For classification the between matrix has rank at most H-1; cap q there.
fn cap_classification_q(q: usize, data: &CurveDataset) -> Result<usize> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if let Some(h) = data.n_classes() {
        if q > h - 1 {
            log::warn!("q = {q} exceeds H-1 = {}; capping at the maximum usable dimension", h - 1);
            return Ok(h - 1);
        }
    }
    Ok(q)
}

/// Two-part split for alpha selection: shuffled for regression, stratified
/// per class for classification so the fit part keeps every class.
fn selection_split(
    data: &CurveDataset,
    split_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = data.n();
    let mut rng = seeding::rng(seed, &[0xA1FA]);
    match data.response() {
        Response::Regression(_) => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let n_fit = ((n as f64) * split_fraction).round() as usize;
            let n_fit = n_fit.clamp(1, n - 1);
            Ok((idx[..n_fit].to_vec(), idx[n_fit..].to_vec()))
        }
        Response::Classification(labels) => {
            let h = data.n_classes().unwrap();
            let mut fit = Vec::new();
            let mut val = Vec::new();
            for class in 1..=h {
                let mut members: Vec<usize> =
                    (0..n).filter(|&i| labels[i] == class).collect();
                members.shuffle(&mut rng);
                let n_fit = (((members.len() as f64) * split_fraction).round() as usize)
                    .clamp(1, members.len().saturating_sub(1).max(1));
                fit.extend_from_slice(&members[..n_fit]);
                val.extend_from_slice(&members[n_fit..]);
            }
            fit.sort_unstable();
            val.sort_unstable();
            if val.is_empty() {
                return Err(Error::Data("validation part of the split is empty".into()));
            }
            Ok((fit, val))
        }
    }
}

/// Fit the downstream predictor on the fit-part scores and return its error
/// on the validation part (root mean squared error for regression,
/// misclassification rate for classification).
fn downstream_error(
    scores_fit: &DMatrix<f64>,
    fit_data: &CurveDataset,
    scores_val: &DMatrix<f64>,
    data: &CurveDataset,
    val_idx: &[usize],
    downstream: &Downstream,
    seed: u64,
) -> Result<f64> {
    match (fit_data.response(), downstream) {
        (Response::Regression(y), Downstream::Linear) => {
            let lm = pipeline::LinearModel::fit(scores_fit, y)?;
            let preds: Vec<f64> =
                scores_val.row_iter().map(|r| lm.predict(&r.transpose())).collect();
            let truth: Vec<f64> =
                val_idx.iter().map(|&i| data.ys().unwrap()[i]).collect();
            pipeline::sep(&preds, &truth)
        }
        (Response::Classification(_), Downstream::Linear) => Err(Error::InvalidArgument(
            "the linear downstream supports regression only".into(),
        )),
        (Response::Regression(y), Downstream::Mlp { q2 }) => {
            let targets = DMatrix::from_column_slice(y.len(), 1, y);
            let cfg = TrainConfig::new(*q2, seeding::derive(seed, &[2]));
            let split = mlp::train_val_test_split(scores_fit.nrows(), seeding::derive(seed, &[1]))?;
            let (model, _) = mlp::train(scores_fit, &targets, Task::Regression, &cfg, &split)?;
            let preds: Vec<f64> = scores_val
                .row_iter()
                .map(|r| model.forward(&r.transpose()).map(|o| o[0]))
                .collect::<Result<_>>()?;
            let truth: Vec<f64> = val_idx.iter().map(|&i| data.ys().unwrap()[i]).collect();
            pipeline::sep(&preds, &truth)
        }
        (Response::Classification(labels), Downstream::Mlp { q2 }) => {
            let h = fit_data.n_classes().unwrap();
            let targets = mlp::one_hot(labels, h)?;
            let cfg = TrainConfig::new(*q2, seeding::derive(seed, &[2]));
            let split = mlp::train_val_test_split(scores_fit.nrows(), seeding::derive(seed, &[1]))?;
            let (model, _) = mlp::train(scores_fit, &targets, Task::Classification, &cfg, &split)?;
            let preds: Vec<usize> = scores_val
                .row_iter()
                .map(|r| model.predict_class(&r.transpose()))
                .collect::<Result<_>>()?;
            let truth: Vec<usize> =
                val_idx.iter().map(|&i| data.labels().unwrap()[i]).collect();
            pipeline::error_rate(&preds, &truth)
        }
        (Response::Regression(y), Downstream::Kernel { bandwidth }) => {
            let targets = DMatrix::from_column_slice(y.len(), 1, y);
            let preds: Vec<f64> = scores_val
                .row_iter()
                .map(|r| {
                    pipeline::kernel_predict(scores_fit, &targets, &r.transpose(), *bandwidth)
                        .map(|(out, _)| out[0])
                })
                .collect::<Result<_>>()?;
            let truth: Vec<f64> = val_idx.iter().map(|&i| data.ys().unwrap()[i]).collect();
            pipeline::sep(&preds, &truth)
        }
        (Response::Classification(labels), Downstream::Kernel { bandwidth }) => {
            let h = fit_data.n_classes().unwrap();
            let targets = mlp::one_hot(labels, h)?;
            let preds: Vec<usize> = scores_val
                .row_iter()
                .map(|r| {
                    let (out, _) = pipeline::kernel_predict(
                        scores_fit,
                        &targets,
                        &r.transpose(),
                        *bandwidth,
                    )?;
                    Ok(1 + out.iter().enumerate().fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                        if v > acc.1 { (i, v) } else { acc }
                    }).0)
                })
                .collect::<Result<_>>()?;
            let truth: Vec<usize> =
                val_idx.iter().map(|&i| data.labels().unwrap()[i]).collect();
            pipeline::error_rate(&preds, &truth)
        }
    }
}
