//! Synthetic curve generation with known reduction directions, and the
//! replicated study that tracks how the estimation error of the leading
//! direction shrinks as the sample grows (with the penalty weight scaled as
//! alpha = c * N^(-1/3)).

use crate::basis::{self, SplineBasis};
use crate::edr;
use crate::error::{Error, Result};
use crate::estimators::{center, slice_regression, CurveDataset, OperatorPair, Response};
use crate::seeding;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Link functions mapping the score vector to the latent response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Sum of the scores.
    Linear,
    /// Sine of the first score.
    SineOfScore,
    /// Product of all scores.
    ProductOfScores,
}

impl Link {
    pub fn apply(&self, scores: &[f64]) -> f64 {
        match self {
            Link::Linear => scores.iter().sum(),
            Link::SineOfScore => scores[0].sin(),
            Link::ProductOfScores => scores.iter().product(),
        }
    }
}

/// Full description of a synthetic data-generating process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub basis: SplineBasis,
    /// K x q* coefficient matrix of the true directions.
    #[serde(with = "crate::serialize::mat")]
    pub true_directions: DMatrix<f64>,
    pub link: Link,
    pub noise_sd: f64,
    /// Variances of the curve expansion along a G-orthonormal frame;
    /// length K, positive and nonincreasing.
    pub covariance_spectrum: Vec<f64>,
    pub n: usize,
    pub grid_size: usize,
    /// When set, the latent response is cut into this many equal-frequency
    /// classes instead of being observed directly.
    pub n_classes: Option<usize>,
    pub seed: u64,
}

/// Everything the generator knows that an estimator must recover.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// K x q* true direction coefficients.
    pub directions: DMatrix<f64>,
    /// n x K basis coefficients of the generated curves.
    pub coeffs: DMatrix<f64>,
    /// n x q* true scores.
    pub scores: DMatrix<f64>,
    /// Latent response before noise and any class cutting.
    pub y_latent: Vec<f64>,
    /// Population covariance matrix of the coefficients, mapped through the
    /// Gram matrix on both sides — the metric for direction errors.
    pub m_x: DMatrix<f64>,
}

fn validate_spec(spec: &SynthSpec) -> Result<usize> {
    let k = spec.basis.dim();
    if spec.true_directions.nrows() != k || spec.true_directions.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "true directions must be {k} x q* with q* >= 1, got {} x {}",
            spec.true_directions.nrows(),
            spec.true_directions.ncols()
        )));
    }
    if spec.covariance_spectrum.len() != k {
        return Err(Error::InvalidArgument(format!(
            "covariance spectrum must have one entry per basis function ({k}), got {}",
            spec.covariance_spectrum.len()
        )));
    }
    for w in spec.covariance_spectrum.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidArgument(
                "covariance spectrum must be nonincreasing".into(),
            ));
        }
    }
    if spec.covariance_spectrum.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("covariance spectrum must be positive".into()));
    }
    if !(spec.noise_sd >= 0.0) || !spec.noise_sd.is_finite() {
        return Err(Error::InvalidArgument("noise standard deviation must be nonnegative".into()));
    }
    if spec.n < 2 {
        return Err(Error::InvalidArgument("at least two observations are required".into()));
    }
    if spec.grid_size < k {
        return Err(Error::InvalidArgument(format!(
            "grid size {} is below the basis dimension {k}; curves could not be re-projected",
            spec.grid_size
        )));
    }
    if let Some(h) = spec.n_classes {
        if h < 2 {
            return Err(Error::InvalidArgument("at least two classes are required".into()));
        }
        if spec.n < h {
            return Err(Error::InvalidArgument(
                "cannot cut fewer observations than classes".into(),
            ));
        }
    }
    if spec.link == Link::ProductOfScores && spec.true_directions.ncols() < 2 {
        return Err(Error::InvalidArgument(
            "the product link needs at least two true directions".into(),
        ));
    }
    Ok(k)
}

/// A G-orthonormal frame: columns f_k with f_i' G f_j = delta_ij, built from
/// the eigendecomposition of G with eigenvalues in descending order.
fn g_orthonormal_frame(g: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let eig = nalgebra::SymmetricEigen::new(g.clone());
    let k = g.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut f = DMatrix::zeros(k, k);
    for (col, &idx) in order.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[idx].sqrt();
        f.set_column(col, &(eig.eigenvectors.column(idx) * scale));
    }
    (f, order)
}

/// Draw a dataset from the process. Curves are sampled on an equally spaced
/// grid over the basis domain; the coefficient rows have population
/// covariance F diag(spectrum) F' for a G-orthonormal frame F, so the
/// spectrum is exactly the covariance spectrum in the function-space metric.
pub fn generate(spec: &SynthSpec) -> Result<(CurveDataset, GroundTruth)> {
    let k = validate_spec(spec)?;
    let g = basis::gram_matrix(&spec.basis);
    let (frame, _) = g_orthonormal_frame(&g);
    let n = spec.n;

    let mut rng_z = seeding::rng(spec.seed, &[0x5A]);
    let mut z = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            z[(i, j)] = rng_z.sample::<f64, _>(StandardNormal);
        }
    }
    let sqrt_spec = DMatrix::from_diagonal(&DVector::from_iterator(
        k,
        spec.covariance_spectrum.iter().map(|v| v.sqrt()),
    ));
    let coeffs = &z * sqrt_spec * frame.transpose();

    let scores = &coeffs * &g * &spec.true_directions;
    let mut rng_eps = seeding::rng(spec.seed, &[0xE5]);
    let mut y_latent = Vec::with_capacity(n);
    let mut y_noisy = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<f64> = (0..scores.ncols()).map(|j| scores[(i, j)]).collect();
        let latent = spec.link.apply(&row);
        y_latent.push(latent);
        let eps: f64 = rng_eps.sample(StandardNormal);
        y_noisy.push(latent + spec.noise_sd * eps);
    }

    let (t_min, t_max) = spec.basis.domain();
    let grid: Vec<f64> = (0..spec.grid_size)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (spec.grid_size - 1) as f64)
        .collect();
    let b = basis::eval_basis(&spec.basis, &grid)?;
    let curves = &coeffs * b.transpose();

    let response = match spec.n_classes {
        None => Response::Regression(y_noisy),
        Some(h) => {
            // Slice ids are 1-based and equal-frequency; reuse them as labels.
            Response::Classification(slice_regression(&y_noisy, h)?.slice_of)
        }
    };
    let data = CurveDataset::new(grid, curves, response)?;
    let spec_diag = DMatrix::from_diagonal(&DVector::from_column_slice(&spec.covariance_spectrum));
    let m_x = &g * &frame * spec_diag * frame.transpose() * &g;
    Ok((
        data,
        GroundTruth {
            directions: spec.true_directions.clone(),
            coeffs,
            scores,
            y_latent,
            m_x,
        },
    ))
}

/// Draw q* smooth, G-orthonormal directions by roughness-penalized
/// smoothing of white noise: each raw draw z solves (P + eps G) d = G z,
/// which damps the high-curvature content, then the set is orthonormalized
/// in the G metric. Smaller eps gives smoother directions.
pub fn smooth_directions(
    basis: &SplineBasis,
    q_star: usize,
    eps: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let k = basis.dim();
    if q_star < 1 || q_star > k {
        return Err(Error::InvalidArgument(format!("q* must lie in 1..={k}, got {q_star}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument("smoothing eps must be positive".into()));
    }
    let g = basis::gram_matrix(basis);
    let p = basis::penalty_matrix(basis)?;
    let lhs = &p + &g * eps;
    let chol = Cholesky::new(lhs)
        .ok_or_else(|| Error::Numerical("smoothing system is not positive definite".into()))?;
    let mut rng = seeding::rng(seed, &[0xD1]);
    let mut dirs = DMatrix::zeros(k, q_star);
    for j in 0..q_star {
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut d = chol.solve(&(&g * z));
        // Gram-Schmidt in the G metric against the accepted columns.
        for prev in 0..j {
            let pc = dirs.column(prev).into_owned();
            let proj = (pc.transpose() * &g * &d)[(0, 0)];
            d -= pc * proj;
        }
        let norm = (d.transpose() * &g * &d)[(0, 0)].sqrt();
        if !(norm > 1e-10) {
            return Err(Error::Numerical(
                "smoothed direction collapsed during orthonormalization".into(),
            ));
        }
        d /= norm;
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = d.iter().position(|&v| v.abs() > 1e-12 * scale) {
            if d[first] < 0.0 {
                d = -d;
            }
        }
        dirs.set_column(j, &d);
    }
    Ok(dirs)
}

/// Error of an estimated direction against the truth in the geometry of the
/// covariance matrix `m_x`. The truth is scaled to unit m_x-norm and the
/// estimate is rescaled so that its m_x-inner product with the truth equals
/// one (which also resolves the sign indeterminacy); the value returned is
/// the quadratic form (e - t)' M_X (e - t). It is 0 for identical
/// directions, grows like the squared tangent of the angle between them, and
/// is infinite when the rescaling is impossible because the estimate is
/// (numerically) m_x-orthogonal to the truth or has vanishing m_x-norm.
pub fn gamma_metric_error(
    estimate: &DVector<f64>,
    truth: &DVector<f64>,
    m_x: &DMatrix<f64>,
) -> Result<f64> {
    let k = m_x.nrows();
    if estimate.len() != k || truth.len() != k || m_x.ncols() != k {
        return Err(Error::DimensionMismatch(
            "directions and covariance matrix must share one dimension".into(),
        ));
    }
    let norm_sq = |v: &DVector<f64>| (v.transpose() * m_x * v)[(0, 0)];
    let tn = norm_sq(truth);
    if !(tn > 0.0) {
        return Err(Error::InvalidArgument(
            "the true direction must have positive norm in the covariance metric".into(),
        ));
    }
    let t = truth / tn.sqrt();
    let en = norm_sq(estimate);
    if !(en > 1e-300) {
        return Ok(f64::INFINITY);
    }
    let cross = (estimate.transpose() * m_x * &t)[(0, 0)];
    if !cross.is_finite() || cross.abs() <= 1e-12 * en.sqrt() {
        return Ok(f64::INFINITY);
    }
    let e = estimate / cross;
    let diff = e - t;
    Ok(norm_sq(&diff).max(0.0))
}

/// Study setup: the template process (its `n` and `seed` are overridden per
/// run), how many directions to fit, the slicing, and the constant c in
/// alpha = c * N^(-1/3).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub spec: SynthSpec,
    pub fit_q: usize,
    pub n_slices: usize,
    pub alpha_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub n: usize,
    pub replicate: usize,
    pub alpha: f64,
    /// Covariance-metric error of the leading estimated direction.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// (n, median error) per sample size, in the order requested.
    pub medians: Vec<(usize, f64)>,
}

impl StudyTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("n,replicate,alpha,error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.replicate, r.alpha, r.error);
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Run one (n, replicate) cell: draw data, project, estimate with
/// alpha = c * n^(-1/3), and measure the leading-direction error against the
/// population covariance metric.
fn study_cell(cfg: &StudyConfig, n: usize, replicate: usize, seed: u64) -> Result<StudyRow> {
    let mut spec = cfg.spec.clone();
    spec.n = n;
    spec.seed = seeding::derive(seed, &[n as u64, replicate as u64]);
    let (data, truth) = generate(&spec)?;
    let coeffs = basis::project_curves(&spec.basis, data.grid(), data.curves())?;
    let cc = center(&coeffs)?;
    let g = basis::gram_matrix(&spec.basis);
    let p = basis::penalty_matrix(&spec.basis)?;
    let ops = match data.response() {
        Response::Regression(y) => {
            OperatorPair::from_slices(&cc, &slice_regression(y, cfg.n_slices)?, &g, &p)?
        }
        Response::Classification(labels) => OperatorPair::from_labels(&cc, labels, &g, &p)?,
    };
    let alpha = cfg.alpha_c * (n as f64).powf(-1.0 / 3.0);
    let model = edr::fit_edr(&ops, alpha, cfg.fit_q, &spec.basis, &cc.mean_coeffs)?;
    let error = gamma_metric_error(
        &model.a.column(0).into_owned(),
        &truth.directions.column(0).into_owned(),
        &truth.m_x,
    )?;
    Ok(StudyRow { n, replicate, alpha, error })
}

/// Replicated consistency study over increasing sample sizes. Every cell is
/// seeded independently from (seed, n, replicate), so the table is
/// deterministic and insensitive to scheduling.
pub fn consistency_study(
    cfg: &StudyConfig,
    n_list: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<StudyTable> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("at least one sample size is required".into()));
    }
    if replicates < 3 {
        return Err(Error::InvalidArgument(
            "at least three replicates are needed for a stable median".into(),
        ));
    }
    for w in n_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(
                "sample sizes must be strictly increasing".into(),
            ));
        }
    }
    if cfg.fit_q < 1 {
        return Err(Error::InvalidArgument("fit_q must be at least 1".into()));
    }
    if !(cfg.alpha_c > 0.0) || !cfg.alpha_c.is_finite() {
        return Err(Error::InvalidArgument("alpha_c must be positive".into()));
    }

    let cells: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| (0..replicates).map(move |r| (n, r)))
        .collect();
    let rows: Vec<StudyRow> = cells
        .par_iter()
        .map(|&(n, r)| study_cell(cfg, n, r, seed))
        .collect::<Result<_>>()?;

    let mut medians = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut errs: Vec<f64> =
            rows.iter().filter(|r| r.n == n).map(|r| r.error).collect();
        medians.push((n, median(&mut errs)));
    }
    Ok(StudyTable { rows, medians })
}
