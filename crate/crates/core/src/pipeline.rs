//! End-to-end model assembly: spline projection, dimension reduction, and a
//! downstream predictor, plus the repeated-split benchmark harness and the
//! serialized model format.

use crate::basis::{self, SplineBasis};
use crate::edr::{self, EdrModel};
use crate::error::{Error, Result};
use crate::estimators::{
    center, slice_regression, CurveDataset, OperatorPair, Response, Task,
};
use crate::mlp::{self, MlpModel, Split, TrainConfig, TrainHistory};
use crate::seeding;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

pub const MODEL_VERSION: u32 = 1;

/// The estimator families exposed by the toolkit. Names follow the
/// convention "front end - predictor": penalized inverse regression (r),
/// truncated inverse regression (p), principal components, and the linear
/// and kernel baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Method {
    /// Penalized inverse regression followed by a perceptron.
    #[serde(rename = "SIR-NNr")]
    SirNnr { alpha: f64, q: usize, q2: usize },
    /// Truncated (principal-component restricted) inverse regression
    /// followed by a perceptron.
    #[serde(rename = "SIR-NNp")]
    SirNnp { k_n: usize, q: usize, q2: usize },
    /// Principal-component scores followed by a perceptron.
    #[serde(rename = "PCA-NN")]
    PcaNn { k_n: usize, q2: usize },
    /// Penalized inverse regression followed by linear least squares.
    #[serde(rename = "SIR-L")]
    SirL { alpha: f64, q: usize },
    /// Penalized inverse regression followed by a Nadaraya-Watson kernel
    /// predictor on the scores.
    #[serde(rename = "SIR-K")]
    SirK { alpha: f64, q: usize, bandwidth: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SirNnr { .. } => "SIR-NNr",
            Method::SirNnp { .. } => "SIR-NNp",
            Method::PcaNn { .. } => "PCA-NN",
            Method::SirL { .. } => "SIR-L",
            Method::SirK { .. } => "SIR-K",
        }
    }
}

/// Linear least-squares predictor with intercept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    #[serde(with = "crate::serialize::vec")]
    pub coef: DVector<f64>,
}

impl LinearModel {
    /// Fit by least squares on the design [1 X].
    pub fn fit(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        let n = x.nrows();
        if n != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{n} score rows but {} responses",
                y.len()
            )));
        }
        if n < x.ncols() + 1 {
            return Err(Error::Data(format!(
                "linear fit needs at least {} observations, got {n}",
                x.ncols() + 1
            )));
        }
        let mut design = DMatrix::zeros(n, x.ncols() + 1);
        design.column_mut(0).fill(1.0);
        design.view_mut((0, 1), (n, x.ncols())).copy_from(x);
        let rhs = DVector::from_column_slice(y);
        let svd = design.svd(true, true);
        let beta = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Numerical(format!("linear least squares failed: {e}")))?;
        Ok(LinearModel {
            intercept: beta[0],
            coef: beta.rows(1, x.ncols()).into_owned(),
        })
    }

    pub fn predict(&self, scores: &DVector<f64>) -> f64 {
        self.intercept + self.coef.dot(scores)
    }
}

/// Nadaraya-Watson predictor over stored training scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelModel {
    #[serde(with = "crate::serialize::mat")]
    pub train_scores: DMatrix<f64>,
    /// Training targets, one row per observation (one-hot rows for
    /// classification).
    #[serde(with = "crate::serialize::mat")]
    pub train_targets: DMatrix<f64>,
    pub bandwidth: f64,
}

/// Gaussian-kernel weighted average of the training targets at `x`. When
/// every weight underflows the prediction falls back to the global target
/// mean; the flag reports that fallback.
pub fn kernel_predict(
    train_scores: &DMatrix<f64>,
    train_targets: &DMatrix<f64>,
    x: &DVector<f64>,
    bandwidth: f64,
) -> Result<(DVector<f64>, bool)> {
    let n = train_scores.nrows();
    if n == 0 || n != train_targets.nrows() {
        return Err(Error::DimensionMismatch(
            "kernel prediction needs matching, nonempty scores and targets".into(),
        ));
    }
    if x.len() != train_scores.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "query has {} coordinates but the training scores have {}",
            x.len(),
            train_scores.ncols()
        )));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive and finite, got {bandwidth}"
        )));
    }
    let two_h2 = 2.0 * bandwidth * bandwidth;
    let mut num = DVector::zeros(train_targets.ncols());
    let mut den = 0.0;
    for i in 0..n {
        let mut d2 = 0.0;
        for j in 0..x.len() {
            let d = x[j] - train_scores[(i, j)];
            d2 += d * d;
        }
        let w = (-d2 / two_h2).exp();
        num.axpy(w, &train_targets.row(i).transpose(), 1.0);
        den += w;
    }
    if den <= f64::MIN_POSITIVE {
        log::warn!(
            "all kernel weights underflowed at a query point; falling back to the target mean \
             (bandwidth {bandwidth} is likely too small)"
        );
        let mut mean = DVector::zeros(train_targets.ncols());
        for i in 0..n {
            mean += train_targets.row(i).transpose();
        }
        mean /= n as f64;
        return Ok((mean, true));
    }
    Ok((num / den, false))
}

/// The downstream predictor of a fitted pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Mlp(MlpModel),
    Linear(LinearModel),
    Kernel(KernelModel),
}

/// How to fit a pipeline: the method plus basis and slicing settings.
/// `n_interior_knots` defaults to min(40, D - order) where D is the number
/// of grid points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSpec {
    pub method: Method,
    pub n_interior_knots: Option<usize>,
    pub order: usize,
    pub n_slices: usize,
}

impl FitSpec {
    pub fn new(method: Method) -> Self {
        FitSpec { method, n_interior_knots: None, order: 4, n_slices: 10 }
    }
}

/// A fitted pipeline, serializable as a single JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineModel {
    pub version: u32,
    pub task: Task,
    pub method: Method,
    pub edr: EdrModel,
    pub predictor: Predictor,
    /// Grid the model was fitted on; prediction inputs must match it.
    pub grid: Vec<f64>,
    pub seed: u64,
    pub n_slices: usize,
    /// Train/val/test split used for the perceptron, when one was trained.
    pub split: Option<Split>,
}

impl PipelineModel {
    pub fn basis(&self) -> &SplineBasis {
        &self.edr.basis
    }
}

/// Diagnostics from a fit that are not part of the model itself.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub method: String,
    pub eigenvalues: Vec<f64>,
    /// Error of the fitted model on its own training data (root mean squared
    /// error for regression, misclassification rate for classification).
    pub train_error: f64,
    pub mlp: Option<TrainHistory>,
}

fn effective_q(q: usize, data: &CurveDataset) -> Result<usize> {
    if q < 1 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if let Some(h) = data.n_classes() {
        if q > h - 1 {
            log::warn!(
                "q = {q} exceeds H-1 = {} for an {h}-class response; capping",
                h - 1
            );
            return Ok(h - 1);
        }
    }
    Ok(q)
}

/// Training targets as a matrix: the response column for regression, one-hot
/// rows for classification.
fn target_matrix(data: &CurveDataset) -> Result<DMatrix<f64>> {
    match data.response() {
        Response::Regression(y) => Ok(DMatrix::from_column_slice(y.len(), 1, y)),
        Response::Classification(labels) => mlp::one_hot(labels, data.n_classes().unwrap()),
    }
}

/// Fit a complete pipeline on `data`. The seed drives every random choice
/// (perceptron splits, initialization); identical inputs and seed give an
/// identical model.
pub fn fit_pipeline(
    data: &CurveDataset,
    spec: &FitSpec,
    seed: u64,
) -> Result<(PipelineModel, FitReport)> {
    let d = data.d();
    if spec.order < 2 {
        return Err(Error::InvalidArgument("spline order must be at least 2".into()));
    }
    let interior = spec
        .n_interior_knots
        .unwrap_or_else(|| 40.min(d.saturating_sub(spec.order)));
    let grid = data.grid();
    let sbasis = basis::make_basis((grid[0], grid[grid.len() - 1]), interior, spec.order)?;
    let coeffs = basis::project_curves(&sbasis, grid, data.curves())?;
    let cc = center(&coeffs)?;
    let g = basis::gram_matrix(&sbasis);
    let p = basis::penalty_matrix(&sbasis)?;
    let ops = match data.response() {
        Response::Regression(y) => {
            OperatorPair::from_slices(&cc, &slice_regression(y, spec.n_slices)?, &g, &p)?
        }
        Response::Classification(labels) => OperatorPair::from_labels(&cc, labels, &g, &p)?,
    };

    let edr_model = match &spec.method {
        Method::SirNnr { alpha, q, .. }
        | Method::SirL { alpha, q }
        | Method::SirK { alpha, q, .. } => {
            edr::fit_edr(&ops, *alpha, effective_q(*q, data)?, &sbasis, &cc.mean_coeffs)?
        }
        Method::SirNnp { k_n, q, .. } => edr::fit_edr_truncated(
            &cc,
            &g,
            &ops.m_e,
            *k_n,
            effective_q(*q, data)?,
            &sbasis,
        )?,
        Method::PcaNn { k_n, .. } => {
            let (u, deltas) = edr::g_metric_pca(&cc, &g, *k_n)?;
            EdrModel {
                basis: sbasis.clone(),
                a: u,
                eigenvalues: deltas,
                alpha: 0.0,
                q: *k_n,
                mean_coeffs: cc.mean_coeffs.clone(),
                gram: g.clone(),
            }
        }
    };
    let scores = edr::project_edr(&edr_model, &coeffs)?;

    let mut split = None;
    let mut mlp_history = None;
    let predictor = match &spec.method {
        Method::SirNnr { q2, .. } | Method::SirNnp { q2, .. } | Method::PcaNn { q2, .. } => {
            let targets = target_matrix(data)?;
            let s = mlp::train_val_test_split(data.n(), seeding::derive(seed, &[0x3147]))?;
            let cfg = TrainConfig::new(*q2, seeding::derive(seed, &[0x731]));
            let (model, history) = mlp::train(&scores, &targets, data.task(), &cfg, &s)?;
            split = Some(s);
            mlp_history = Some(history);
            Predictor::Mlp(model)
        }
        Method::SirL { .. } => match data.response() {
            Response::Regression(y) => Predictor::Linear(LinearModel::fit(&scores, y)?),
            Response::Classification(_) => {
                return Err(Error::InvalidArgument(
                    "the linear predictor supports regression responses only".into(),
                ))
            }
        },
        Method::SirK { bandwidth, .. } => {
            if !(*bandwidth > 0.0) || !bandwidth.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bandwidth must be positive and finite, got {bandwidth}"
                )));
            }
            Predictor::Kernel(KernelModel {
                train_scores: scores.clone(),
                train_targets: target_matrix(data)?,
                bandwidth: *bandwidth,
            })
        }
    };

    let model = PipelineModel {
        version: MODEL_VERSION,
        task: data.task(),
        method: spec.method.clone(),
        edr: edr_model,
        predictor,
        grid: grid.to_vec(),
        seed,
        n_slices: spec.n_slices,
        split,
    };
    let train_error = match (predict(&model, grid, data.curves())?, data.response()) {
        (Response::Regression(preds), Response::Regression(y)) => sep(&preds, y)?,
        (Response::Classification(preds), Response::Classification(labels)) => {
            error_rate(&preds, labels)?
        }
        _ => unreachable!("prediction task always matches the fitted task"),
    };
    let report = FitReport {
        method: spec.method.name().to_string(),
        eigenvalues: model.edr.eigenvalues.clone(),
        train_error,
        mlp: mlp_history,
    };
    Ok((model, report))
}

/// Check the grid against the model's and reduce curves to EDR scores.
fn projected_scores(
    model: &PipelineModel,
    grid: &[f64],
    curves: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if grid.len() != model.grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "curves are sampled on {} points but the model was fitted on {}",
            grid.len(),
            model.grid.len()
        )));
    }
    for (a, b) in grid.iter().zip(&model.grid) {
        if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
            return Err(Error::Data(
                "prediction grid differs from the grid the model was fitted on".into(),
            ));
        }
    }
    if curves.nrows() == 0 {
        return Ok(DMatrix::zeros(0, model.edr.q));
    }
    let coeffs = basis::project_curves(model.basis(), &model.grid, curves)?;
    edr::project_edr(&model.edr, &coeffs)
}

/// Raw predictor outputs for every input curve: one column for regression,
/// one column per class for classification (the predicted label is the
/// argmax over columns). Grid checking matches `predict`.
pub fn predict_scores(
    model: &PipelineModel,
    grid: &[f64],
    curves: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let scores = projected_scores(model, grid, curves)?;
    let n = scores.nrows();
    match &model.predictor {
        Predictor::Linear(lm) => {
            let mut out = DMatrix::zeros(n, 1);
            for i in 0..n {
                out[(i, 0)] = lm.predict(&scores.row(i).transpose());
            }
            Ok(out)
        }
        Predictor::Mlp(m) => {
            let width = m.w2.nrows();
            let mut out = DMatrix::zeros(n, width);
            for i in 0..n {
                let y = m.forward(&scores.row(i).transpose())?;
                out.row_mut(i).copy_from(&y.transpose());
            }
            Ok(out)
        }
        Predictor::Kernel(km) => {
            let width = km.train_targets.ncols();
            let mut out = DMatrix::zeros(n, width);
            for i in 0..n {
                let (y, _) = kernel_predict(
                    &km.train_scores,
                    &km.train_targets,
                    &scores.row(i).transpose(),
                    km.bandwidth,
                )?;
                out.row_mut(i).copy_from(&y.transpose());
            }
            Ok(out)
        }
    }
}

/// Predict responses for curves observed on the model's grid. Rows of
/// `curves` are observations; an empty matrix yields an empty response.
pub fn predict(model: &PipelineModel, grid: &[f64], curves: &DMatrix<f64>) -> Result<Response> {
    let scores = projected_scores(model, grid, curves)?;
    let n = scores.nrows();
    match (&model.predictor, model.task) {
        (Predictor::Linear(lm), Task::Regression) => {
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                preds.push(lm.predict(&scores.row(i).transpose()));
            }
            Ok(Response::Regression(preds))
        }
        (Predictor::Mlp(m), Task::Regression) => {
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                preds.push(m.forward(&scores.row(i).transpose())?[0]);
            }
            Ok(Response::Regression(preds))
        }
        (Predictor::Mlp(m), Task::Classification) => {
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                preds.push(m.predict_class(&scores.row(i).transpose())?);
            }
            Ok(Response::Classification(preds))
        }
        (Predictor::Kernel(km), Task::Regression) => {
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                let (out, _) = kernel_predict(
                    &km.train_scores,
                    &km.train_targets,
                    &scores.row(i).transpose(),
                    km.bandwidth,
                )?;
                preds.push(out[0]);
            }
            Ok(Response::Regression(preds))
        }
        (Predictor::Kernel(km), Task::Classification) => {
            let mut preds = Vec::with_capacity(n);
            for i in 0..n {
                let (out, _) = kernel_predict(
                    &km.train_scores,
                    &km.train_targets,
                    &scores.row(i).transpose(),
                    km.bandwidth,
                )?;
                let mut best = 0;
                for j in 1..out.len() {
                    if out[j] > out[best] {
                        best = j;
                    }
                }
                preds.push(best + 1);
            }
            Ok(Response::Classification(preds))
        }
        (Predictor::Linear(_), Task::Classification) => Err(Error::InvalidArgument(
            "a linear predictor cannot produce class labels".into(),
        )),
    }
}

/// Standard error of prediction: the root mean squared prediction error.
pub fn sep(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions against {} true values",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    let mse = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

/// Fraction of misclassified observations.
pub fn error_rate(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions against {} true labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / predictions.len() as f64)
}

/// One benchmark measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkRow {
    pub split_id: usize,
    pub method: String,
    /// Test error of the fitted pipeline on this split.
    pub metric: f64,
    /// Wall-clock fit-plus-predict time; not reproducible across runs.
    pub seconds: f64,
}

/// Per-method aggregate over the splits.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean: f64,
    /// Sample standard deviation over the splits (0 for a single split).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkResults {
    pub n_splits: usize,
    pub learn_size: usize,
    pub test_size: usize,
    pub seed: u64,
    pub rows: Vec<BenchmarkRow>,
    pub summaries: Vec<MethodSummary>,
}

impl BenchmarkResults {
    /// Rows as CSV with a header, in split-major order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("split_id,method,metric,seconds\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.split_id, r.method, r.metric, r.seconds);
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Draw a learn/test index pair for one split: a plain shuffle for
/// regression, per-class proportional allocation for classification (any
/// remainder goes to the smallest class labels first).
pub fn benchmark_split(
    data: &CurveDataset,
    learn_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    let n = data.n();
    if learn_size == 0 || test_size == 0 || learn_size + test_size > n {
        return Err(Error::InvalidArgument(format!(
            "learn ({learn_size}) + test ({test_size}) must be positive and at most N = {n}"
        )));
    }
    let mut rng = seeding::rng(seed, &[0xBE7C]);
    match data.response() {
        Response::Regression(_) => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut learn = idx[..learn_size].to_vec();
            let mut test = idx[learn_size..learn_size + test_size].to_vec();
            learn.sort_unstable();
            test.sort_unstable();
            Ok((learn, test))
        }
        Response::Classification(labels) => {
            let h = data.n_classes().unwrap();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); h];
            for (i, &l) in labels.iter().enumerate() {
                members[l - 1].push(i);
            }
            for m in members.iter_mut() {
                m.shuffle(&mut rng);
            }
            let learn_alloc = proportional_allocation(&members, learn_size, &[])?;
            let test_alloc = proportional_allocation(&members, test_size, &learn_alloc)?;
            let mut learn = Vec::with_capacity(learn_size);
            let mut test = Vec::with_capacity(test_size);
            for (c, m) in members.iter().enumerate() {
                learn.extend_from_slice(&m[..learn_alloc[c]]);
                test.extend_from_slice(&m[learn_alloc[c]..learn_alloc[c] + test_alloc[c]]);
            }
            learn.sort_unstable();
            test.sort_unstable();
            Ok((learn, test))
        }
    }
}

/// Split `want` draws across classes proportionally to class size, rounding
/// down and then handing the remainder to classes in label order, skipping
/// classes whose members (less any already taken) are exhausted.
fn proportional_allocation(
    members: &[Vec<usize>],
    want: usize,
    taken: &[usize],
) -> Result<Vec<usize>> {
    let total: usize = members.iter().map(|m| m.len()).sum();
    let capacity: Vec<usize> = members
        .iter()
        .enumerate()
        .map(|(c, m)| m.len() - taken.get(c).copied().unwrap_or(0))
        .collect();
    let mut alloc: Vec<usize> = members
        .iter()
        .enumerate()
        .map(|(c, m)| ((want * m.len()) / total).min(capacity[c]))
        .collect();
    let mut assigned: usize = alloc.iter().sum();
    while assigned < want {
        let mut progressed = false;
        for c in 0..members.len() {
            if assigned == want {
                break;
            }
            if alloc[c] < capacity[c] {
                alloc[c] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            return Err(Error::Data(format!(
                "cannot allocate {want} observations across classes; not enough remain"
            )));
        }
    }
    Ok(alloc)
}

/// Repeated-split comparison: for each of `n_splits` seeded splits, fit
/// every method on the same learn part and score it on the same test part.
pub fn benchmark(
    data: &CurveDataset,
    specs: &[FitSpec],
    n_splits: usize,
    learn_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<BenchmarkResults> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("at least one method is required".into()));
    }
    if n_splits == 0 {
        return Err(Error::InvalidArgument("n_splits must be at least 1".into()));
    }
    let mut names: Vec<&str> = specs.iter().map(|s| s.method.name()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != specs.len() {
        return Err(Error::InvalidArgument(
            "benchmark methods must have distinct names".into(),
        ));
    }

    let mut rows = Vec::with_capacity(n_splits * specs.len());
    for split_id in 0..n_splits {
        let (learn_idx, test_idx) =
            benchmark_split(data, learn_size, test_size, seeding::derive(seed, &[split_id as u64]))?;
        let learn = data.subset(&learn_idx)?;
        let test_curves = data.curves().select_rows(test_idx.iter());
        for (m_idx, spec) in specs.iter().enumerate() {
            let started = Instant::now();
            let (model, _) = fit_pipeline(
                &learn,
                spec,
                seeding::derive(seed, &[0xF17, split_id as u64, m_idx as u64]),
            )?;
            let preds = predict(&model, data.grid(), &test_curves)?;
            let metric = match (&preds, data.response()) {
                (Response::Regression(p), Response::Regression(y)) => {
                    let truth: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();
                    sep(p, &truth)?
                }
                (Response::Classification(p), Response::Classification(labels)) => {
                    let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
                    error_rate(p, &truth)?
                }
                _ => unreachable!("prediction task always matches the dataset task"),
            };
            rows.push(BenchmarkRow {
                split_id,
                method: spec.method.name().to_string(),
                metric,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
    }

    let mut summaries = Vec::with_capacity(specs.len());
    for spec in specs {
        let name = spec.method.name();
        let metrics: Vec<f64> =
            rows.iter().filter(|r| r.method == name).map(|r| r.metric).collect();
        let secs: Vec<f64> =
            rows.iter().filter(|r| r.method == name).map(|r| r.seconds).collect();
        let n = metrics.len() as f64;
        let mean = metrics.iter().sum::<f64>() / n;
        let sd = if metrics.len() < 2 {
            0.0
        } else {
            (metrics.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        summaries.push(MethodSummary {
            method: name.to_string(),
            mean,
            sd,
            min: metrics.iter().cloned().fold(f64::INFINITY, f64::min),
            max: metrics.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean_seconds: secs.iter().sum::<f64>() / n,
        });
    }
    Ok(BenchmarkResults { n_splits, learn_size, test_size, seed, rows, summaries })
}

/// Write a fitted model as pretty-printed JSON.
pub fn save_model(model: &PipelineModel, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(model)?;
    json.push('\n');
    std::fs::write(path, json)
        .map_err(|e| Error::Serialization(format!("cannot write {}: {e}", path.display())))
}

/// Load a model written by `save_model`, rejecting unknown format versions.
pub fn load_model(path: &Path) -> Result<PipelineModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Serialization(format!("cannot read {}: {e}", path.display())))?;
    let model: PipelineModel = serde_json::from_str(&text)?;
    if model.version != MODEL_VERSION {
        return Err(Error::Serialization(format!(
            "model format version {} is not supported (expected {MODEL_VERSION})",
            model.version
        )));
    }
    Ok(model)
}
