//! Mini-batch Adam training with a plateau-halving learning rate and early stopping
//! on validation MSE.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::adam::Adam;
use super::mlp::Mlp;
use crate::error::{dim_check, Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Epochs without improvement before the learning rate is multiplied by `plateau_factor`.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stop_patience: usize,
    pub min_lr: f64,
    /// Validation loss must drop by at least this much to count as an improvement.
    pub min_improvement: f64,
    pub train_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 5e-4,
            batch: 32,
            max_epochs: 200,
            plateau_patience: 5,
            plateau_factor: 0.5,
            early_stop_patience: 10,
            min_lr: 1e-6,
            min_improvement: 1e-8,
            train_fraction: 0.8,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if self.batch == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch and max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub early_stopped: bool,
}

impl TrainHistory {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_mse,val_mse,lr")?;
        for e in &self.epochs {
            writeln!(w, "{},{:?},{:?},{:?}", e.epoch, e.train_mse, e.val_mse, e.lr)?;
        }
        Ok(())
    }
}

/// Already-scaled training and validation matrices, one sample per row.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train_x: ArrayView2<'a, f64>,
    pub train_y: ArrayView2<'a, f64>,
    pub val_x: ArrayView2<'a, f64>,
    pub val_y: ArrayView2<'a, f64>,
}

/// Trains `net` in place and leaves it holding the best-validation parameters.
///
/// With an empty validation split the training MSE drives the schedule.
pub fn train(net: &mut Mlp, data: TrainData<'_>, tc: &TrainConfig) -> Result<TrainHistory> {
    tc.validate()?;
    let n = data.train_x.nrows();
    if n == 0 {
        return Err(Error::Precondition("training split is empty".into()));
    }
    dim_check("training target rows", n, data.train_y.nrows())?;
    dim_check("validation target rows", data.val_x.nrows(), data.val_y.nrows())?;
    dim_check("training input width", net.in_dim(), data.train_x.ncols())?;
    dim_check("training target width", net.out_dim(), data.train_y.ncols())?;

    let shapes: Vec<usize> = net.params_mut().iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(&shapes, tc.beta1, tc.beta2, tc.eps);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(tc.seed, seed::SHUFFLE, 0);

    let mut lr = tc.lr0;
    let mut best = f64::INFINITY;
    let mut best_net = net.clone();
    let mut history = TrainHistory::default();
    let mut since_best = 0usize;
    let mut since_reduce = 0usize;

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(tc.batch) {
            let bx = data.train_x.select(Axis(0), chunk);
            let by = data.train_y.select(Axis(0), chunk);
            let (loss, grads) = net.backward_batch(bx.view(), by.view())?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("training loss became {loss} in epoch {epoch}")));
            }
            weighted += loss * chunk.len() as f64;
            adam.step(&mut net.params_mut(), &grads.slices(), lr);
        }
        let train_mse = weighted / n as f64;
        let val_mse = if data.val_x.nrows() > 0 {
            batched_mse(net, data.val_x, data.val_y, 1024)?
        } else {
            train_mse
        };
        history.epochs.push(EpochRecord { epoch, train_mse, val_mse, lr });

        if val_mse < best - tc.min_improvement {
            best = val_mse;
            best_net = net.clone();
            history.best_epoch = epoch;
            since_best = 0;
            since_reduce = 0;
        } else {
            since_best += 1;
            since_reduce += 1;
        }
        if since_best >= tc.early_stop_patience {
            history.early_stopped = true;
            break;
        }
        if since_reduce >= tc.plateau_patience {
            lr = (lr * tc.plateau_factor).max(tc.min_lr);
            since_reduce = 0;
        }
    }
    *net = best_net;
    Ok(history)
}

pub fn batched_mse(net: &Mlp, x: ArrayView2<f64>, y: ArrayView2<f64>, batch: usize) -> Result<f64> {
    dim_check("target rows", x.nrows(), y.nrows())?;
    let mut total = 0.0;
    let mut start = 0;
    while start < x.nrows() {
        let end = (start + batch).min(x.nrows());
        let pred = net.forward_batch(x.slice(ndarray::s![start..end, ..]))?;
        total += (&pred - &y.slice(ndarray::s![start..end, ..])).mapv(|d| d * d).sum();
        start = end;
    }
    Ok(total / (x.nrows() * y.ncols()).max(1) as f64)
}

/// Splits rows into (first `fraction`, rest).
pub fn split_rows(x: &Array2<f64>, fraction: f64) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
    let cut = ((x.nrows() as f64) * fraction).floor() as usize;
    x.view().split_at(Axis(0), cut)
}
