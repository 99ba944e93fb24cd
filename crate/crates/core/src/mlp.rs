//! One-hidden-layer perceptron trained by full-batch gradient descent with
//! momentum, multiple seeded restarts, and validation-based early stopping.
//! Inputs are standardized with statistics taken from the training part
//! only; the squared-error loss is used for both tasks (one-hot targets for
//! classification).

use crate::error::{Error, Result};
use crate::estimators::Task;
use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The fitted network: out = W2 sigmoid(W1 x_std + b0) (+ optional output
/// bias), where x_std is the input after the stored standardization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    /// q2 x q hidden weights.
    #[serde(with = "crate::serialize::mat")]
    pub w1: DMatrix<f64>,
    /// Hidden biases, length q2.
    #[serde(with = "crate::serialize::vec")]
    pub b0: DVector<f64>,
    /// out x q2 output weights.
    #[serde(with = "crate::serialize::mat")]
    pub w2: DMatrix<f64>,
    /// Output biases; absent in the default architecture.
    #[serde(with = "crate::serialize::opt_vec")]
    pub output_bias: Option<DVector<f64>>,
    #[serde(with = "crate::serialize::vec")]
    pub input_mean: DVector<f64>,
    #[serde(with = "crate::serialize::vec")]
    pub input_std: DVector<f64>,
    pub task: Task,
}

impl MlpModel {
    pub fn n_inputs(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.w2.nrows()
    }

    fn check_input(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} coordinates but the network expects {}",
                x.len(),
                self.n_inputs()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("network input contains non-finite values".into()));
        }
        Ok(())
    }

    /// Network output for a single input vector.
    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x)?;
        let std = DVector::from_fn(x.len(), |i, _| (x[i] - self.input_mean[i]) / self.input_std[i]);
        let mut z = &self.w1 * std + &self.b0;
        z.apply(|v| *v = sigmoid(*v));
        let mut out = &self.w2 * z;
        if let Some(b) = &self.output_bias {
            out += b;
        }
        Ok(out)
    }

    /// Squared-error loss on a single (input, target) pair.
    pub fn loss(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        if y.len() != self.n_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "target has {} coordinates but the network has {} outputs",
                y.len(),
                self.n_outputs()
            )));
        }
        let out = self.forward(x)?;
        Ok((out - y).norm_squared())
    }

    /// Class label (1-based) with the largest output; ties resolve to the
    /// smallest label.
    pub fn predict_class(&self, x: &DVector<f64>) -> Result<usize> {
        if self.task != Task::Classification {
            return Err(Error::InvalidArgument(
                "class prediction requires a classification network".into(),
            ));
        }
        let out = self.forward(x)?;
        let mut best = 0;
        for i in 1..out.len() {
            if out[i] > out[best] {
                best = i;
            }
        }
        Ok(best + 1)
    }

    /// Gradient of the batch loss (mean over rows of the squared error) with
    /// respect to every parameter. Rows of `x` are raw inputs; the stored
    /// standardization is applied first, exactly as in `forward`.
    pub fn gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Gradients> {
        if x.ncols() != self.n_inputs() || y.ncols() != self.n_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "batch is {}x{} / {}x{} but the network maps {} inputs to {} outputs",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols(),
                self.n_inputs(),
                self.n_outputs()
            )));
        }
        if x.nrows() != y.nrows() || x.nrows() == 0 {
            return Err(Error::DimensionMismatch(
                "inputs and targets must have the same positive number of rows".into(),
            ));
        }
        let xs = standardize_rows(x, &self.input_mean, &self.input_std);
        let params = Parameters {
            w1: self.w1.clone(),
            b0: self.b0.clone(),
            w2: self.w2.clone(),
            output_bias: self.output_bias.clone(),
        };
        Ok(batch_gradient(&params, &xs, y).1)
    }
}

/// Parameter gradients in the same shapes as the parameters themselves.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: DMatrix<f64>,
    pub b0: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub output_bias: Option<DVector<f64>>,
}

/// Training hyperparameters. `new` fills in the defaults: 10 restarts, at
/// most 2000 epochs, learning rate 0.01, momentum 0.9, patience 50, no
/// output bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub q2: usize,
    pub restarts: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub patience: usize,
    pub rng_seed: u64,
    pub output_bias: bool,
}

impl TrainConfig {
    pub fn new(q2: usize, rng_seed: u64) -> Self {
        TrainConfig {
            q2,
            restarts: 10,
            max_epochs: 2000,
            learning_rate: 0.01,
            momentum: 0.9,
            patience: 50,
            rng_seed,
            output_bias: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.q2 < 1 {
            return Err(Error::InvalidArgument("q2 must be at least 1".into()));
        }
        if self.restarts < 1 || self.max_epochs < 1 || self.patience < 1 {
            return Err(Error::InvalidArgument(
                "restarts, max_epochs and patience must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Index sets for the three-way split used during training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded 50/25/25 shuffle split; each part is nonempty and sorted.
pub fn train_val_test_split(n: usize, seed: u64) -> Result<Split> {
    if n < 4 {
        return Err(Error::Data(format!(
            "at least 4 observations are needed for a train/val/test split, got {n}"
        )));
    }
    let mut rng = crate::seeding::rng(seed, &[0x5917]);
    let mut idx: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    idx.shuffle(&mut rng);
    let n_train = (((n as f64) * 0.5).round() as usize).clamp(1, n - 2);
    let n_val = ((((n - n_train) as f64) * 0.5).round() as usize).clamp(1, n - n_train - 1);
    let mut train = idx[..n_train].to_vec();
    let mut val = idx[n_train..n_train + n_val].to_vec();
    let mut test = idx[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}

/// One-hot targets for labels in 1..=h, one row per observation.
pub fn one_hot(labels: &[usize], h: usize) -> Result<DMatrix<f64>> {
    let mut y = DMatrix::zeros(labels.len(), h);
    for (i, &l) in labels.iter().enumerate() {
        if l < 1 || l > h {
            return Err(Error::Data(format!("label {l} is outside 1..={h}")));
        }
        y[(i, l - 1)] = 1.0;
    }
    Ok(y)
}

/// Per-restart training record.
#[derive(Debug, Clone, Serialize)]
pub struct RestartRecord {
    /// Batch loss on the training part, entry 0 at initialization.
    pub train_curve: Vec<f64>,
    /// Batch loss on the validation part, entry 0 at initialization.
    pub val_curve: Vec<f64>,
    pub best_val: f64,
    /// Epoch (index into the curves) whose weights were kept.
    pub best_epoch: usize,
    /// Loss of the kept weights on the test part; infinite if diverged.
    pub test_loss: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainHistory {
    pub records: Vec<RestartRecord>,
    /// Index of the restart whose weights were selected.
    pub selected: usize,
}

#[derive(Clone)]
struct Parameters {
    w1: DMatrix<f64>,
    b0: DVector<f64>,
    w2: DMatrix<f64>,
    output_bias: Option<DVector<f64>>,
}

impl Parameters {
    fn is_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b0.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.output_bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()))
    }
}

fn standardize_rows(x: &DMatrix<f64>, mean: &DVector<f64>, std: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - mean[j]) / std[j])
}

/// Forward pass on standardized inputs; returns (hidden activations, outputs).
fn batch_forward(p: &Parameters, xs: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut z = xs * p.w1.transpose();
    for mut row in z.row_iter_mut() {
        row += p.b0.transpose();
    }
    z.apply(|v| *v = sigmoid(*v));
    let mut out = &z * p.w2.transpose();
    if let Some(b) = &p.output_bias {
        for mut row in out.row_iter_mut() {
            row += b.transpose();
        }
    }
    (z, out)
}

fn batch_loss(p: &Parameters, xs: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let (_, out) = batch_forward(p, xs);
    (out - y).norm_squared() / xs.nrows() as f64
}

/// Backpropagation of the mean squared error over the batch; returns the
/// loss together with the gradients.
fn batch_gradient(p: &Parameters, xs: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Gradients) {
    let n = xs.nrows() as f64;
    let (h, out) = batch_forward(p, xs);
    let resid = out - y;
    let loss = resid.norm_squared() / n;
    let e = resid * (2.0 / n);
    let grad_w2 = e.transpose() * &h;
    let grad_bias = p.output_bias.as_ref().map(|_| {
        DVector::from_iterator(e.ncols(), e.column_iter().map(|c| c.sum()))
    });
    let dh = &e * &p.w2;
    let dz = dh.zip_map(&h, |d, hv| d * hv * (1.0 - hv));
    let grad_w1 = dz.transpose() * xs;
    let grad_b0 = DVector::from_iterator(dz.ncols(), dz.column_iter().map(|c| c.sum()));
    (
        loss,
        Gradients { w1: grad_w1, b0: grad_b0, w2: grad_w2, output_bias: grad_bias },
    )
}

/// Uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)], filled in a
/// fixed order (W1 row by row, b0, W2 row by row, output bias) so a given
/// stream always produces the same network.
fn init_parameters(
    rng: &mut ChaCha20Rng,
    q: usize,
    q2: usize,
    n_out: usize,
    output_bias: bool,
) -> Parameters {
    let hidden_bound = 1.0 / (q as f64).sqrt();
    let out_bound = 1.0 / (q2 as f64).sqrt();
    let hidden = Uniform::new_inclusive(-hidden_bound, hidden_bound);
    let output = Uniform::new_inclusive(-out_bound, out_bound);
    let mut w1 = DMatrix::zeros(q2, q);
    for i in 0..q2 {
        for j in 0..q {
            w1[(i, j)] = hidden.sample(rng);
        }
    }
    let mut b0 = DVector::zeros(q2);
    for i in 0..q2 {
        b0[i] = hidden.sample(rng);
    }
    let mut w2 = DMatrix::zeros(n_out, q2);
    for i in 0..n_out {
        for j in 0..q2 {
            w2[(i, j)] = output.sample(rng);
        }
    }
    let ob = output_bias.then(|| {
        let mut b = DVector::zeros(n_out);
        for i in 0..n_out {
            b[i] = output.sample(rng);
        }
        b
    });
    Parameters { w1, b0, w2, output_bias: ob }
}

struct RestartOutcome {
    record: RestartRecord,
    best: Parameters,
}

#[allow(clippy::too_many_arguments)]
fn run_restart(
    restart: usize,
    config: &TrainConfig,
    q: usize,
    n_out: usize,
    xs_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    xs_val: &DMatrix<f64>,
    y_val: &DMatrix<f64>,
    xs_test: &DMatrix<f64>,
    y_test: &DMatrix<f64>,
) -> RestartOutcome {
    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(restart as u64);
    let mut p = init_parameters(&mut rng, q, config.q2, n_out, config.output_bias);
    let mut velocity = Parameters {
        w1: DMatrix::zeros(config.q2, q),
        b0: DVector::zeros(config.q2),
        w2: DMatrix::zeros(n_out, config.q2),
        output_bias: config.output_bias.then(|| DVector::zeros(n_out)),
    };
    // The freshly initialized network is the epoch-0 candidate; training
    // must beat it on the validation part to replace it.
    let mut best = p.clone();
    let mut best_val = batch_loss(&p, xs_val, y_val);
    let mut best_epoch = 0;
    let mut train_curve = vec![batch_loss(&p, xs_train, y_train)];
    let mut val_curve = vec![best_val];
    let mut stale = 0;
    let mut diverged = !best_val.is_finite();
    let lr = config.learning_rate;
    let mu = config.momentum;
    if !diverged {
        for epoch in 1..=config.max_epochs {
            let (_, grads) = batch_gradient(&p, xs_train, y_train);
            velocity.w1 = &velocity.w1 * mu - &grads.w1 * lr;
            velocity.b0 = &velocity.b0 * mu - &grads.b0 * lr;
            velocity.w2 = &velocity.w2 * mu - &grads.w2 * lr;
            p.w1 += &velocity.w1;
            p.b0 += &velocity.b0;
            p.w2 += &velocity.w2;
            if let (Some(vb), Some(gb)) = (velocity.output_bias.as_mut(), grads.output_bias.as_ref())
            {
                *vb = &*vb * mu - gb * lr;
                *p.output_bias.as_mut().unwrap() += &*vb;
            }
            let train_loss = batch_loss(&p, xs_train, y_train);
            let val_loss = batch_loss(&p, xs_val, y_val);
            train_curve.push(train_loss);
            val_curve.push(val_loss);
            if !train_loss.is_finite() || !val_loss.is_finite() || !p.is_finite() {
                diverged = true;
                break;
            }
            if val_loss < best_val {
                best_val = val_loss;
                best_epoch = epoch;
                best = p.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
    }
    let test_loss = if diverged { f64::INFINITY } else { batch_loss(&best, xs_test, y_test) };
    RestartOutcome {
        record: RestartRecord {
            train_curve,
            val_curve,
            best_val,
            best_epoch,
            test_loss,
            diverged,
        },
        best,
    }
}

/// Train the network: standardize inputs with statistics from the training
/// part, run `config.restarts` seeded restarts of full-batch gradient
/// descent with momentum and validation-based early stopping, and keep the
/// restart whose early-stopped weights have the smallest loss on the test
/// part (ties resolve to the smallest restart index).
pub fn train(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    task: Task,
    config: &TrainConfig,
    split: &Split,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} input rows but {} target rows",
            n,
            y.nrows()
        )));
    }
    if x.ncols() == 0 || y.ncols() == 0 {
        return Err(Error::InvalidArgument("inputs and targets must be nonempty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("training data contains non-finite values".into()));
    }
    for part in [&split.train, &split.val, &split.test] {
        if part.is_empty() {
            return Err(Error::Data("every split part must be nonempty".into()));
        }
        if part.iter().any(|&i| i >= n) {
            return Err(Error::Data("split index out of range".into()));
        }
    }
    if task == Task::Classification {
        for &i in &split.train {
            let row = y.row(i);
            if !row.iter().any(|&v| v == 1.0) {
                return Err(Error::Data(
                    "classification targets must be one-hot rows".into(),
                ));
            }
        }
    }
    let q = x.ncols();
    let n_out = y.ncols();

    let mut mean = DVector::zeros(q);
    for &i in &split.train {
        mean += x.row(i).transpose();
    }
    mean /= split.train.len() as f64;
    let mut var = DVector::zeros(q);
    for &i in &split.train {
        let d = x.row(i).transpose() - &mean;
        var += d.component_mul(&d);
    }
    var /= split.train.len() as f64;
    let std = DVector::from_fn(q, |j, _| {
        let s = var[j].sqrt();
        if s < 1e-12 {
            1.0
        } else {
            s
        }
    });

    let sub = |idx: &[usize]| -> (DMatrix<f64>, DMatrix<f64>) {
        let xr = x.select_rows(idx.iter());
        (standardize_rows(&xr, &mean, &std), y.select_rows(idx.iter()))
    };
    let (xs_train, y_train) = sub(&split.train);
    let (xs_val, y_val) = sub(&split.val);
    let (xs_test, y_test) = sub(&split.test);

    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            run_restart(r, config, q, n_out, &xs_train, &y_train, &xs_val, &y_val, &xs_test, &y_test)
        })
        .collect();

    let mut selected: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if o.record.diverged {
            continue;
        }
        let better = match selected {
            None => true,
            Some(s) => outcomes[s].record.test_loss > o.record.test_loss,
        };
        if better {
            selected = Some(i);
        }
    }
    let selected = selected.ok_or_else(|| {
        Error::Numerical(
            "every training restart diverged; reduce the learning rate or rescale inputs".into(),
        )
    })?;
    let best = outcomes[selected].best.clone();
    let model = MlpModel {
        w1: best.w1,
        b0: best.b0,
        w2: best.w2,
        output_bias: best.output_bias,
        input_mean: mean,
        input_std: std,
        task,
    };
    let history = TrainHistory {
        records: outcomes.into_iter().map(|o| o.record).collect(),
        selected,
    };
    Ok((model, history))
}
