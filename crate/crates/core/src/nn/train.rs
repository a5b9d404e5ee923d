use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bdci::SegmentHead;
use crate::error::{Error, Result};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::mlp::{backward_batch, batch_nll, category_dims, LogSigmaClamp, Mlp};

/// Smallest training set `train_category` accepts.
pub const MIN_TRAIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub log_sigma_clamp: LogSigmaClamp,
    pub validation_fraction: f64,
    /// Multiplies the learning rate after `lr_patience` stale epochs.
    pub lr_decay: f64,
    pub lr_patience: usize,
    pub min_learning_rate: f64,
    /// Output parameterization used at training and inference.
    #[serde(default)]
    pub head: SegmentHead,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 200,
            patience: 20,
            seed: 0,
            log_sigma_clamp: LogSigmaClamp::default(),
            validation_fraction: 0.1,
            lr_decay: 0.5,
            lr_patience: 6,
            min_learning_rate: 1e-5,
            head: SegmentHead::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must lie in (0, 0.5)");
        }
        if !(self.log_sigma_clamp.lo < self.log_sigma_clamp.hi) {
            return bad("log_sigma_clamp lo must be below hi");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_nll: f64,
    pub val_nll: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub samples: usize,
    pub train_samples: usize,
    pub val_samples: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_nll: f64,
    pub best_val_nll: f64,
    pub history: Vec<EpochStats>,
}

fn gather(inputs: &Array2<f64>, targets: &[f64], idx: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let x = inputs.select(ndarray::Axis(0), idx);
    let t = idx.iter().map(|&i| targets[i]).collect();
    (x, t)
}

/// Trains one category network on `(input, target)` pairs with mini-batch
/// Adam on the Gaussian NLL, keeping the best-validation checkpoint.
///
/// Deterministic given the samples (in order) and `config`.
pub fn train_category(samples: &[(Vec<f64>, f64)], config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    config.validate()?;
    if samples.len() < MIN_TRAIN_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_TRAIN_SAMPLES, got: samples.len() });
    }
    let dim = samples[0].0.len();
    if let Some((x, _)) = samples.iter().find(|(x, _)| x.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    let mut inputs = Array2::<f64>::zeros((samples.len(), dim));
    for (mut row, (x, _)) in inputs.outer_iter_mut().zip(samples) {
        row.assign(&ndarray::ArrayView1::from(x.as_slice()));
    }
    let targets: Vec<f64> = samples.iter().map(|s| s.1).collect();
    train_arrays(&inputs, &targets, config)
}

/// As [`train_category`], taking the inputs as a `N × d` matrix.
pub fn train_arrays(inputs: &Array2<f64>, targets: &[f64], config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    config.validate()?;
    let n = inputs.nrows();
    if n < MIN_TRAIN_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_TRAIN_SAMPLES, got: n });
    }
    if targets.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: targets.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = ((n as f64) * config.validation_fraction).round().max(1.0) as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let (val_x, val_t) = gather(inputs, targets, val_idx);
    let mut train_idx = train_idx.to_vec();

    let mut model = Mlp::init(&category_dims(inputs.ncols()), &mut rng);
    let mut adam = AdamState::new(model.param_count());
    let clamp = config.log_sigma_clamp;

    let mut lr = config.learning_rate;
    let mut best = (f64::INFINITY, model.clone(), 0usize);
    let mut stale = 0usize;
    let mut lr_stale = 0usize;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in train_idx.chunks(config.batch_size) {
            let (x, t) = gather(inputs, targets, chunk);
            let (loss, grads) = backward_batch(&model, x.view(), &t, clamp)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss { epoch });
            }
            total += loss * chunk.len() as f64;
            adam_step(model.params_mut(), &grads, &mut adam, lr)?;
        }
        let train_nll = total / train_idx.len() as f64;
        let val_nll = batch_nll(&model, val_x.view(), &val_t, clamp)?;
        if !val_nll.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        history.push(EpochStats { train_nll, val_nll, learning_rate: lr });

        if val_nll < best.0 {
            best = (val_nll, model.clone(), epoch);
            stale = 0;
            lr_stale = 0;
        } else {
            stale += 1;
            lr_stale += 1;
            if stale >= config.patience {
                break;
            }
            if lr_stale >= config.lr_patience && lr > config.min_learning_rate {
                lr = (lr * config.lr_decay).max(config.min_learning_rate);
                lr_stale = 0;
            }
        }
    }

    let report = TrainReport {
        samples: n,
        train_samples: train_idx.len(),
        val_samples: val_t.len(),
        epochs_run: history.len(),
        best_epoch: best.2,
        final_train_nll: history.last().map_or(f64::NAN, |h| h.train_nll),
        best_val_nll: best.0,
        history,
    };
    Ok((best.1, report))
}
