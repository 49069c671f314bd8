use std::fmt;
use std::time::Instant;

use super::adamw::{AdamW, AdamWConfig};
use super::loss::{argmax, per_sample_nll, softmax_xent};
use super::metrics::{trial_means, MetricsRow, Split, Trial};
use crate::data::{Dataset, DatasetSplit};
use crate::error::{arg_err, Result};
use crate::kan::{ModelKind, Mode, Network};
use crate::numerics::Rng;
use crate::wavelets::WaveletKind;

/// Batch size used when evaluating a full split.
pub const EVAL_BATCH: usize = 1000;

/// Complete specification of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub layout: Vec<usize>,
    pub kind: WaveletKind,
    pub batchnorm: bool,
    pub lr: f64,
    pub weight_decay: f64,
    pub betas: (f64, f64),
    pub eps_adam: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub trials: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::WavKan,
            layout: vec![784, 32, 10],
            kind: WaveletKind::mexican_hat(),
            batchnorm: true,
            lr: 1e-3,
            weight_decay: 1e-4,
            betas: (0.9, 0.999),
            eps_adam: 1e-8,
            batch_size: 128,
            epochs: 50,
            seed: 0,
            trials: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return arg_err(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return arg_err(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        let (b1, b2) = self.betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return arg_err(format!("betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if !(self.eps_adam > 0.0) {
            return arg_err("eps_adam must be positive");
        }
        if self.batch_size < 2 {
            return arg_err(format!("batch size must be at least 2, got {}", self.batch_size));
        }
        if self.trials == 0 {
            return arg_err("at least one trial is required");
        }
        if self.layout.len() < 2 || self.layout.contains(&0) {
            return arg_err(format!("invalid layout {:?}", self.layout));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            beta1: self.betas.0,
            beta2: self.betas.1,
            eps: self.eps_adam,
        }
    }

    /// Seed of trial `k`.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    /// Fresh network for trial `k`, drawn from `rng`.
    pub fn build_network(&self, rng: &mut Rng) -> Result<Network> {
        Network::build(self.model, &self.layout, self.kind, self.batchnorm, rng)
    }

    /// Hyper-parameters as one `key=value` line (no paths, no timing).
    /// Floats use their shortest round-trip spelling.
    pub fn summary(&self) -> String {
        let layout: Vec<String> = self.layout.iter().map(usize::to_string).collect();
        format!(
            "model={} wavelet={} omega0={:?} sigma={:?} shannon_halfwidth={:?} layout={} batchnorm={} lr={:?} weight_decay={:?} betas={:?},{:?} eps_adam={:?} batch_size={} epochs={} trials={} seed={}",
            self.model,
            self.kind.family(),
            self.kind.omega0(),
            self.kind.sigma(),
            self.kind.shannon_halfwidth(),
            layout.join(","),
            self.batchnorm,
            self.lr,
            self.weight_decay,
            self.betas.0,
            self.betas.1,
            self.eps_adam,
            self.batch_size,
            self.epochs,
            self.trials,
            self.seed
        )
    }
}

/// Where a run stopped on a non-finite loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonFiniteLoss {
    pub trial: usize,
    pub epoch: usize,
    pub step: usize,
}

impl fmt::Display for NonFiniteLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "non-finite loss at trial {}, epoch {}, step {}",
            self.trial, self.epoch, self.step
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    /// Per-trial rows followed by the trial-mean rows.
    pub rows: Vec<MetricsRow>,
    /// Final network of every trial that ran, in trial order.
    pub networks: Vec<Network>,
    /// Set when a trial hit a non-finite loss. The last network holds the
    /// parameters in place just before that step.
    pub aborted: Option<NonFiniteLoss>,
}

/// Splits a shuffled index list into minibatches. A trailing batch of one
/// sample is folded into the previous batch; train-mode batch norm needs
/// two samples.
pub fn minibatches(indices: &[usize], batch_size: usize) -> Vec<&[usize]> {
    let mut batches: Vec<&[usize]> = indices.chunks(batch_size).collect();
    if batches.len() >= 2 && batches.last().is_some_and(|b| b.len() == 1) {
        batches.pop();
        let start = indices.len() - 1 - batches.last().expect("two batches").len();
        *batches.last_mut().expect("two batches") = &indices[start..];
    }
    batches
}

/// One optimizer step on a batch. Returns the batch loss.
pub fn train_step(net: &mut Network, opt: &mut AdamW, split: &DatasetSplit, indices: &[usize]) -> Result<f64> {
    let (x, labels) = split.batch(indices);
    let logits = net.forward(&x)?;
    let (loss, d_logits) = softmax_xent(&logits, &labels)?;
    if !loss.is_finite() {
        return Ok(loss);
    }
    net.backward(&d_logits)?;
    opt.step(&mut net.params())?;
    net.clamp_scales();
    Ok(loss)
}

/// Mean cross entropy and exact accuracy over a full split, with batch
/// norm on running statistics. Does not modify the network.
pub fn evaluate(net: &Network, split: &DatasetSplit) -> Result<(f64, f64)> {
    if split.is_empty() {
        return arg_err("cannot evaluate an empty split");
    }
    if split.dim() != net.input_dim() {
        return arg_err(format!(
            "split has {} features, network expects {}",
            split.dim(),
            net.input_dim()
        ));
    }
    let all: Vec<usize> = (0..split.len()).collect();
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    for chunk in all.chunks(EVAL_BATCH) {
        let (x, labels) = split.batch(chunk);
        let logits = net.infer(&x)?;
        for nll in per_sample_nll(&logits, &labels)? {
            total_loss += nll;
        }
        correct += logits
            .iter_rows()
            .zip(&labels)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
    }
    let n = split.len() as f64;
    Ok((total_loss / n, correct as f64 / n))
}

pub fn run_training(cfg: &TrainConfig, data: &Dataset) -> Result<TrainingOutcome> {
    run_training_with(cfg, data, |_| {})
}

/// Runs every trial, calling `on_row` as each metrics row is produced.
///
/// Trial `k` seeds its generator with `seed + k`, draws the initial
/// parameters from it, then reshuffles the training indices from the same
/// stream at the start of every epoch.
pub fn run_training_with(
    cfg: &TrainConfig,
    data: &Dataset,
    mut on_row: impl FnMut(&MetricsRow),
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let (train, test) = (&data.train, &data.test);
    if train.is_empty() || test.is_empty() {
        return arg_err("training and test splits must be non-empty");
    }
    if train.len() < 2 && cfg.batchnorm {
        return arg_err("batch norm training needs at least two samples");
    }
    if train.dim() != cfg.layout[0] {
        return arg_err(format!(
            "dataset has {} features but the layout starts with {}",
            train.dim(),
            cfg.layout[0]
        ));
    }
    let classes = *cfg.layout.last().expect("validated layout");
    if train.num_classes() > classes {
        return arg_err(format!(
            "dataset has {} classes but the network only {classes} outputs",
            train.num_classes()
        ));
    }

    let mut rows = Vec::new();
    let mut networks = Vec::new();
    for trial in 0..cfg.trials {
        let mut rng = Rng::new(cfg.trial_seed(trial));
        let mut net = cfg.build_network(&mut rng)?;
        let mut opt = AdamW::new(cfg.adamw());
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=cfg.epochs {
            net.set_mode(Mode::Train);
            rng.shuffle(&mut order);
            let started = Instant::now();
            for (step, batch) in minibatches(&order, cfg.batch_size).into_iter().enumerate() {
                let loss = train_step(&mut net, &mut opt, train, batch)?;
                if !loss.is_finite() {
                    networks.push(net);
                    rows.extend(trial_means(&rows));
                    return Ok(TrainingOutcome {
                        rows,
                        networks,
                        aborted: Some(NonFiniteLoss { trial, epoch, step }),
                    });
                }
            }
            let train_seconds = started.elapsed().as_secs_f64();
            net.set_mode(Mode::Eval);

            let (loss, accuracy) = evaluate(&net, train)?;
            let row = MetricsRow {
                trial: Trial::Index(trial),
                epoch,
                split: Split::Train,
                loss,
                accuracy,
                seconds: train_seconds,
            };
            on_row(&row);
            rows.push(row);

            let started = Instant::now();
            let (loss, accuracy) = evaluate(&net, test)?;
            let row = MetricsRow {
                trial: Trial::Index(trial),
                epoch,
                split: Split::Test,
                loss,
                accuracy,
                seconds: started.elapsed().as_secs_f64(),
            };
            on_row(&row);
            rows.push(row);
        }
        networks.push(net);
    }
    let means = trial_means(&rows);
    for row in &means {
        on_row(row);
    }
    rows.extend(means);
    Ok(TrainingOutcome {
        rows,
        networks,
        aborted: None,
    })
}
