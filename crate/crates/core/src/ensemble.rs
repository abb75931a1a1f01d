//! Randomized-prior ensembles.
//!
//! Each member pairs a trainable network with a frozen, independently
//! initialized twin ("prior"). The member's output is
//! `trainable(x) + beta * prior(x)`; training backpropagates through the
//! trainable network only, so the prior stays bitwise frozen for the
//! member's lifetime. Members are share-nothing: training them serially or
//! concurrently produces identical results.

use rayon::prelude::*;

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::autodiff::{combine_scaled, Tape};
use crate::error::{CoreError, Result};
use crate::rng::{derive_seed, shuffled_indices, STREAM_PRIOR_INIT, STREAM_SHUFFLE, STREAM_TRAINABLE_INIT};
use crate::tensor::{checksum_f64, Tensor};
use crate::wno::{WnoConfig, WnoModel};

/// Inference batch size; prediction is chunked to bound tape memory.
const PREDICT_CHUNK: usize = 64;

/// One ensemble member: a trainable network plus its frozen prior.
pub struct RpWno {
    pub trainable: WnoModel,
    pub prior: WnoModel,
    pub beta: f64,
    pub seed: u64,
}

impl RpWno {
    /// Builds both networks from independent streams derived from `seed`,
    /// same architecture, different initialization.
    pub fn new(config: &WnoConfig, beta: f64, seed: u64) -> Result<RpWno> {
        if beta < 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "beta must be nonnegative, got {beta}"
            )));
        }
        let trainable = WnoModel::init(config.clone(), derive_seed(seed, STREAM_TRAINABLE_INIT))?;
        let prior = WnoModel::init(config.clone(), derive_seed(seed, STREAM_PRIOR_INIT))?;
        Ok(RpWno {
            trainable,
            prior,
            beta,
            seed,
        })
    }

    /// Combined forward pass `trainable(x) + beta * prior(x)`.
    /// With `beta == 0` the prior is skipped entirely, so the output is
    /// bitwise the trainable network's output.
    pub fn rp_forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut out = self.trainable.eval_forward(input)?;
        if self.beta != 0.0 {
            let prior_out = self.prior.eval_forward(input)?;
            combine_scaled(out.data_mut(), prior_out.data(), self.beta);
        }
        Ok(out)
    }

    /// Batched inference over a whole sample axis.
    pub fn predict(&self, inputs: &Tensor) -> Result<Tensor> {
        let n = inputs.shape()[0];
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + PREDICT_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            pieces.push(self.rp_forward(&inputs.gather_rows(&idx))?);
            start = end;
        }
        concat_rows(&pieces)
    }

    pub fn prior_checksum(&self) -> u64 {
        self.prior.params_checksum()
    }
}

fn concat_rows(pieces: &[Tensor]) -> Result<Tensor> {
    let mut shape = pieces[0].shape().to_vec();
    shape[0] = pieces.iter().map(|t| t.shape()[0]).sum();
    let mut data = Vec::with_capacity(shape.iter().product());
    for t in pieces {
        data.extend_from_slice(t.data());
    }
    Tensor::new(shape, data)
}

/// Training hyperparameters shared by every member.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// Halve the learning rate every this many epochs; 0 disables the decay.
    pub lr_halve_every: usize,
    pub beta: f64,
    pub seeds: Vec<u64>,
    /// Evaluate prior outputs once before the epoch loop and reuse them.
    /// The cached and uncached paths are bitwise identical; this is a
    /// validation knob, not a numerics switch.
    pub use_prior_cache: bool,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, beta: f64, seeds: Vec<u64>) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size,
            optimizer: AdamConfig::default(),
            lr_halve_every: 50,
            beta,
            seeds,
            use_prior_cache: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(CoreError::InvalidArgument(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CoreError::InvalidArgument("seed list is empty".into()));
        }
        if self.beta < 0.0 {
            return Err(CoreError::InvalidArgument("beta must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn n_c(&self) -> usize {
        self.seeds.len()
    }
}

/// A set of independently seeded members sharing one architecture and beta.
pub struct Ensemble {
    pub members: Vec<RpWno>,
}

impl Ensemble {
    /// Builds `seeds.len()` members; requires at least two pairwise-distinct
    /// seeds so the ensemble spread is meaningful.
    pub fn new(config: &WnoConfig, beta: f64, seeds: &[u64]) -> Result<Ensemble> {
        if seeds.len() < 2 {
            return Err(CoreError::InvalidArgument(format!(
                "an ensemble needs at least 2 members, got {}",
                seeds.len()
            )));
        }
        for (i, a) in seeds.iter().enumerate() {
            if seeds[..i].contains(a) {
                return Err(CoreError::InvalidArgument(format!(
                    "member seeds must be pairwise distinct ({a} repeats)"
                )));
            }
        }
        Self::with_seeds_unchecked(config, beta, seeds)
    }

    /// Like [`Ensemble::new`] but allows duplicate seeds; used by validation
    /// tests that want intentionally identical members.
    pub fn with_seeds_unchecked(config: &WnoConfig, beta: f64, seeds: &[u64]) -> Result<Ensemble> {
        let members = seeds
            .iter()
            .map(|&s| RpWno::new(config, beta, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { members })
    }

    pub fn n_c(&self) -> usize {
        self.members.len()
    }

    pub fn config(&self) -> &WnoConfig {
        &self.members[0].trainable.config
    }
}

/// Evaluates the frozen prior on every training sample once; during training
/// the member then computes `trainable(x_i) + beta * cache[i]`, bitwise equal
/// to evaluating the prior inline.
pub fn precompute_prior_outputs(member: &RpWno, inputs: &Tensor) -> Result<Tensor> {
    let n = inputs.shape()[0];
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + PREDICT_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        pieces.push(member.prior.eval_forward(&inputs.gather_rows(&idx))?);
        start = end;
    }
    concat_rows(&pieces)
}

/// Mean over the batch of per-sample relative L2 error (plain, off-tape).
pub fn relative_l2_loss(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(CoreError::ShapeMismatch {
            op: "relative_l2_loss",
            left: pred.shape().to_vec(),
            right: truth.shape().to_vec(),
        });
    }
    let batch = pred.shape()[0];
    let per = pred.numel() / batch;
    let mut total = 0.0;
    for s in 0..batch {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in s * per..(s + 1) * per {
            let d = pred.data()[i] - truth.data()[i];
            num += d * d;
            den += truth.data()[i] * truth.data()[i];
        }
        if den == 0.0 {
            return Err(CoreError::ZeroNormTruth { sample: s });
        }
        total += (num / den).sqrt();
    }
    Ok(total / batch as f64)
}

/// Trains one member in place and returns the per-epoch training loss
/// (sample-weighted mean of batch losses).
///
/// Per epoch, per seeded-shuffled batch: trainable forward, add the scaled
/// prior output, relative L2 loss, backward, Adam step. The prior is never
/// touched; a non-finite loss aborts with the offending epoch and batch.
pub fn train_member(
    member: &mut RpWno,
    inputs: &Tensor,
    outputs: &Tensor,
    cfg: &TrainConfig,
    member_seed: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = inputs.shape()[0];
    if outputs.shape()[0] != n {
        return Err(CoreError::ShapeMismatch {
            op: "train_member dataset",
            left: inputs.shape().to_vec(),
            right: outputs.shape().to_vec(),
        });
    }
    let cache = if member.beta != 0.0 && cfg.use_prior_cache {
        let cache = precompute_prior_outputs(member, inputs)?;
        if cache.shape()[0] != n {
            return Err(CoreError::CacheSizeMismatch {
                cache: cache.shape()[0],
                dataset: n,
            });
        }
        Some(cache)
    } else {
        None
    };

    let mut adam = AdamState::new(&member.trainable.params, cfg.optimizer);
    let base_lr = cfg.optimizer.lr;
    let shuffle_root = derive_seed(member_seed, STREAM_SHUFFLE);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = if cfg.lr_halve_every > 0 {
            base_lr * 0.5f64.powi((epoch / cfg.lr_halve_every) as i32)
        } else {
            base_lr
        };
        adam.set_lr(lr);

        let order = shuffled_indices(n, derive_seed(shuffle_root, epoch as u64));

        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let bx = inputs.gather_rows(chunk);
            let by = outputs.gather_rows(chunk);

            member.trainable.zero_grads();
            let mut tape = Tape::new();
            let x = tape.input(bx.clone());
            let t_out = member.trainable.forward(&mut tape, x)?;
            let combined = if member.beta != 0.0 {
                let prior_out = match &cache {
                    Some(cache) => cache.gather_rows(chunk),
                    None => member.prior.eval_forward(&bx)?,
                };
                tape.add_scaled_const(t_out, &prior_out, member.beta)?
            } else {
                t_out
            };
            let loss = tape.relative_l2(combined, &by)?;
            let loss_value = tape.value(loss).item();
            if !loss_value.is_finite() {
                return Err(CoreError::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += loss_value * chunk.len() as f64;
            tape.backward_into(loss, &mut member.trainable.params)?;
            adam_step(&mut member.trainable.params, &mut adam)?;
        }
        history.push(epoch_loss / n as f64);
    }
    Ok(history)
}

/// Trains every member independently; `parallel` only changes scheduling,
/// never results. Returns per-member loss histories in member order.
pub fn train_ensemble(
    ensemble: &mut Ensemble,
    inputs: &Tensor,
    outputs: &Tensor,
    cfg: &TrainConfig,
    parallel: bool,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if cfg.seeds.len() != ensemble.members.len() {
        return Err(CoreError::InvalidArgument(format!(
            "{} seeds for {} members",
            cfg.seeds.len(),
            ensemble.members.len()
        )));
    }
    let tasks: Vec<(usize, &mut RpWno, u64)> = ensemble
        .members
        .iter_mut()
        .enumerate()
        .map(|(i, m)| {
            let seed = cfg.seeds[i];
            (i, m, seed)
        })
        .collect();
    let run = |(i, member, seed): (usize, &mut RpWno, u64)| -> Result<Vec<f64>> {
        train_member(member, inputs, outputs, cfg, seed).map_err(|e| CoreError::MemberFailed {
            member: i,
            source: Box::new(e),
        })
    };
    if parallel {
        tasks.into_par_iter().map(run).collect()
    } else {
        tasks.into_iter().map(run).collect()
    }
}

/// Elementwise ensemble mean, population standard deviation (divisor `n_c`),
/// and the 95% band `mean -/+ 1.96 std`.
pub struct PredictionStats {
    pub mean: Tensor,
    pub std: Tensor,
    pub lower95: Tensor,
    pub upper95: Tensor,
}

/// Z-score of the two-sided 95% interval.
pub const Z_95: f64 = 1.96;

/// Ensemble statistics from per-member prediction tensors.
pub fn stats_from_predictions(predictions: &[Tensor]) -> Result<PredictionStats> {
    if predictions.len() < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "ensemble statistics need at least 2 member predictions, got {}",
            predictions.len()
        )));
    }
    let shape = predictions[0].shape().to_vec();
    for p in predictions {
        if p.shape() != shape.as_slice() {
            return Err(CoreError::ShapeMismatch {
                op: "stats_from_predictions",
                left: shape,
                right: p.shape().to_vec(),
            });
        }
    }
    let n_c = predictions.len() as f64;
    let numel = predictions[0].numel();
    let mut mean = vec![0.0; numel];
    for p in predictions {
        for (m, v) in mean.iter_mut().zip(p.data()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n_c;
    }
    let mut var = vec![0.0; numel];
    for p in predictions {
        for ((s, v), m) in var.iter_mut().zip(p.data()).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n_c).sqrt()).collect();
    let lower: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m - Z_95 * s).collect();
    let upper: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m + Z_95 * s).collect();
    Ok(PredictionStats {
        mean: Tensor::new(shape.clone(), mean)?,
        std: Tensor::new(shape.clone(), std)?,
        lower95: Tensor::new(shape.clone(), lower)?,
        upper95: Tensor::new(shape, upper)?,
    })
}

/// Runs every member on `inputs` and reduces to [`PredictionStats`].
pub fn predict_stats(ensemble: &Ensemble, inputs: &Tensor) -> Result<PredictionStats> {
    let predictions = ensemble
        .members
        .iter()
        .map(|m| m.predict(inputs))
        .collect::<Result<Vec<_>>>()?;
    stats_from_predictions(&predictions)
}

/// Checksum of a tensor's raw bytes; convenience for cache-stability tests.
pub fn tensor_checksum(t: &Tensor) -> u64 {
    checksum_f64(t.data())
}
