//! CD-k training of the COMs joint objective, plus plain regression
//! training of the external oracle.
//!
//! The loss minimized per batch is
//!
//! ```text
//! mean[ 0.5 (y - f(x))^2 ]  +  alpha * [ mean f(x') - mean f(x) ]
//! ```
//!
//! where the negatives `x'` come from a k-step chain initialized at the
//! batch inputs (contrastive divergence). Negatives are constants: no
//! gradient flows back through the sampling chain. With `alpha = 0` the
//! objective reduces to plain mean-squared-error regression.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledPoint;
use crate::error::{Error, Result};
use crate::nnet::{Activation, MlpField, OptimizerState, ParamGrad};
use crate::sampling::{
    chain_rng, derive_seed, gradient_ascent_chain, langevin_chain, GeometricSchedule,
};
use crate::Vec2;

/// Gradient norms above this are rescaled before the optimizer step; a
/// backstop against rare early-training spikes, logged when it fires.
const GRAD_CLIP_NORM: f64 = 100.0;

const SEED_FIELD: u64 = 1;
const SEED_SHUFFLE: u64 = 2;
const SEED_NEGATIVES: u64 = 3;

/// Which negative sampler the regulariser uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainVariant {
    /// Noiseless gradient-ascent negatives at a fixed step size.
    Original,
    /// Langevin negatives on an annealed schedule.
    Stochastic,
    /// No regulariser at all; plain regression (forces `alpha = 0`).
    OracleOnly,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: TrainVariant,
    /// Regulariser weight: 0 is plain regression, large values push the
    /// model toward density estimation.
    pub alpha: f64,
    /// Chain length k of the contrastive-divergence negatives.
    pub cd_steps: usize,
    /// Step size of gradient-ascent negatives (`Original`).
    pub neg_eps: f64,
    /// Schedule endpoints of Langevin negatives (`Stochastic`).
    pub neg_sched_start: f64,
    pub neg_sched_end: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: TrainVariant::Stochastic,
            alpha: 0.0,
            cd_steps: 100,
            neg_eps: 0.01,
            neg_sched_start: 0.02,
            neg_sched_end: 0.001,
            epochs: 500,
            batch_size: 64,
            learning_rate: 1e-3,
            hidden_dim: 256,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variant == TrainVariant::OracleOnly && self.alpha != 0.0 {
            return Err(Error::Config(format!(
                "oracle variant forces alpha = 0, got alpha = {}",
                self.alpha
            )));
        }
        if self.alpha < 0.0 || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.variant != TrainVariant::OracleOnly && self.alpha > 0.0 && self.cd_steps < 1 {
            return Err(Error::Config(
                "cd_steps must be >= 1 when the regulariser is active".into(),
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::Config("hidden_dim must be >= 1".into()));
        }
        if self.variant == TrainVariant::Stochastic && self.cd_steps >= 1 {
            // Surface bad schedule endpoints at config time, not mid-epoch.
            GeometricSchedule::new(self.neg_sched_start, self.neg_sched_end, self.cd_steps)?;
        }
        if self.variant == TrainVariant::Original && (self.neg_eps <= 0.0 || !self.neg_eps.is_finite()) {
            return Err(Error::Config("neg_eps must be > 0".into()));
        }
        Ok(())
    }
}

/// The two terms of the COMs loss for one batch (or one epoch average).
/// `total` always reconstructs as `mse_term + alpha * reg_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub mse_term: f64,
    pub reg_term: f64,
    pub total: f64,
}

/// One line of the training metrics log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mse_term: f64,
    pub reg_term: f64,
    pub total: f64,
}

/// COMs loss and its parameter gradient for one batch.
///
/// Negatives are required (and must match the batch length) when
/// `alpha > 0`; they are treated as constants. With identical positives and
/// negatives the regulariser and its gradient cancel exactly.
pub fn com_loss_and_grad(
    field: &MlpField,
    batch: &[LabeledPoint],
    negatives: &[Vec2],
    alpha: f64,
) -> Result<(LossBreakdown, ParamGrad)> {
    if batch.is_empty() {
        return Err(Error::Usage(
            "com_loss_and_grad needs a nonempty batch".into(),
        ));
    }
    if alpha > 0.0 {
        if negatives.is_empty() {
            return Err(Error::Usage(
                "alpha > 0 requires one negative per batch point".into(),
            ));
        }
        if negatives.len() != batch.len() {
            return Err(Error::Usage(format!(
                "negatives ({}) must match batch size ({})",
                negatives.len(),
                batch.len()
            )));
        }
    }
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::Input(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }

    let n = batch.len() as f64;
    let mut grad = ParamGrad::zeros_like(field);
    let mut pos_mean_grad = ParamGrad::zeros_like(field);
    let mut mse_sum = 0.0;
    let mut pos_f_sum = 0.0;
    for p in batch {
        let f = field.forward(&p.x)?;
        let resid = f - p.y;
        mse_sum += 0.5 * resid * resid;
        pos_f_sum += f;
        field.accumulate_grad_params(&p.x, resid, &mut grad);
        if alpha > 0.0 {
            field.accumulate_grad_params(&p.x, 1.0, &mut pos_mean_grad);
        }
    }
    grad.scale(1.0 / n);
    let mse_term = mse_sum / n;

    let mut reg_term = 0.0;
    if !negatives.is_empty() {
        let m = negatives.len() as f64;
        let mut neg_mean_grad = ParamGrad::zeros_like(field);
        let mut neg_f_sum = 0.0;
        for x in negatives {
            neg_f_sum += field.forward(x)?;
            if alpha > 0.0 {
                field.accumulate_grad_params(x, 1.0, &mut neg_mean_grad);
            }
        }
        reg_term = neg_f_sum / m - pos_f_sum / n;
        if alpha > 0.0 {
            // reg gradient = mean_neg grad f - mean_pos grad f; identical
            // sets cancel to exact zeros before alpha is applied.
            neg_mean_grad.scale(1.0 / m);
            pos_mean_grad.scale(1.0 / n);
            neg_mean_grad.sub_assign(&pos_mean_grad)?;
            grad.add_scaled(&neg_mean_grad, alpha)?;
        }
    }

    let breakdown = LossBreakdown {
        mse_term,
        reg_term,
        total: mse_term + alpha * reg_term,
    };
    Ok((breakdown, grad))
}

/// Runs the variant's negative chain from every batch input. `step` is the
/// global batch counter; together with `config.seed` it pins the noise.
pub fn make_negatives(
    field: &MlpField,
    batch_x: &[Vec2],
    config: &TrainConfig,
    step: u64,
) -> Result<Vec<Vec2>> {
    if config.variant == TrainVariant::OracleOnly {
        return Err(Error::Usage(
            "negatives are only defined for the original and stochastic variants".into(),
        ));
    }
    let k = config.cd_steps;
    if k == 0 {
        return Ok(batch_x.to_vec());
    }
    let schedule = match config.variant {
        TrainVariant::Stochastic => {
            GeometricSchedule::new(config.neg_sched_start, config.neg_sched_end, k)?.values()
        }
        _ => Vec::new(),
    };
    let batch_seed = derive_seed(derive_seed(config.seed, SEED_NEGATIVES), step);
    let results: Vec<Result<Vec2>> = batch_x
        .par_iter()
        .enumerate()
        .map(|(chain, &x0)| {
            let run = match config.variant {
                TrainVariant::Original => gradient_ascent_chain(field, x0, config.neg_eps, k),
                TrainVariant::Stochastic => {
                    let mut rng = chain_rng(batch_seed, chain as u64);
                    langevin_chain(field, x0, &schedule, &mut rng)
                }
                TrainVariant::OracleOnly => unreachable!("rejected above"),
            };
            run.map_err(|e| Error::Chain {
                chain,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Provenance recorded next to the trained weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub variant: TrainVariant,
    pub alpha: f64,
    pub seed: u64,
    pub steps_trained: u64,
}

/// A trained field plus its provenance and per-epoch loss history. Only the
/// field and meta are persisted; the history goes to the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub field: MlpField,
    pub meta: CheckpointMeta,
    pub history: Vec<EpochMetrics>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointJson {
    input_dim: usize,
    hidden_dim: usize,
    activation: Activation,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn to_json_string(&self) -> Result<String> {
        let (w1, b1, w2, b2) = self.field.weights();
        let json = CheckpointJson {
            input_dim: self.field.input_dim(),
            hidden_dim: self.field.hidden_dim(),
            activation: self.field.activation(),
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2,
            meta: self.meta,
        };
        let mut text = serde_json::to_string(&json)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let json: CheckpointJson = serde_json::from_str(text)?;
        let field = MlpField::from_parts(
            json.input_dim,
            json.hidden_dim,
            json.w1,
            json.b1,
            json.w2,
            json.b2,
        )?;
        Ok(Self {
            field,
            meta: json.meta,
            history: Vec::new(),
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Writes the per-epoch metrics log as JSON records.
    pub fn save_metrics(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json_records(path, &self.history)
    }
}

/// Trains the COMs objective on an offline dataset. Shuffles per epoch,
/// samples negatives per batch when the regulariser is active, and applies
/// clipped Adam updates. Fully deterministic given `config.seed`.
pub fn train_com(config: &TrainConfig, dataset: &[LabeledPoint]) -> Result<Checkpoint> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Usage("training needs a nonempty dataset".into()));
    }
    let mut field = MlpField::new(2, config.hidden_dim, derive_seed(config.seed, SEED_FIELD))?;
    let mut opt = OptimizerState::adam(&field, config.learning_rate);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SEED_SHUFFLE));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let needs_negatives = config.variant != TrainVariant::OracleOnly && config.alpha > 0.0;

    let mut history = Vec::with_capacity(config.epochs);
    let mut step: u64 = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_mse = 0.0;
        let mut epoch_reg = 0.0;
        let mut epoch_total = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let at = |e: Error| Error::Train {
                epoch,
                batch: batch_idx,
                source: Box::new(e),
            };
            let batch: Vec<LabeledPoint> = chunk.iter().map(|&i| dataset[i]).collect();
            let negatives = if needs_negatives {
                let xs: Vec<Vec2> = batch.iter().map(|p| p.x).collect();
                make_negatives(&field, &xs, config, step).map_err(at)?
            } else {
                Vec::new()
            };
            let (loss, mut grad) =
                com_loss_and_grad(&field, &batch, &negatives, config.alpha).map_err(at)?;
            let norm = grad.l2_norm();
            if norm > GRAD_CLIP_NORM {
                log::warn!(
                    "epoch {epoch} batch {batch_idx}: clipping gradient norm {norm:.3} -> {GRAD_CLIP_NORM}"
                );
                grad.scale(GRAD_CLIP_NORM / norm);
            }
            opt.step(&mut field, &grad).map_err(at)?;
            step += 1;
            let w = batch.len() as f64 / dataset.len() as f64;
            epoch_mse += w * loss.mse_term;
            epoch_reg += w * loss.reg_term;
            epoch_total += w * loss.total;
        }
        history.push(EpochMetrics {
            epoch,
            mse_term: epoch_mse,
            reg_term: epoch_reg,
            total: epoch_total,
        });
        if (epoch + 1) % 50 == 0 {
            log::info!(
                "epoch {}/{}: total {:.6} (mse {:.6}, reg {:.6})",
                epoch + 1,
                config.epochs,
                epoch_total,
                epoch_mse,
                epoch_reg
            );
        }
    }

    Ok(Checkpoint {
        field,
        meta: CheckpointMeta {
            variant: config.variant,
            alpha: config.alpha,
            seed: config.seed,
            steps_trained: step,
        },
        history,
    })
}

/// Trains the external oracle: plain regression with separate parameters,
/// independent of any energy model by construction.
pub fn train_oracle(config: &TrainConfig, dataset: &[LabeledPoint]) -> Result<Checkpoint> {
    let cfg = TrainConfig {
        variant: TrainVariant::OracleOnly,
        alpha: 0.0,
        ..*config
    };
    train_com(&cfg, dataset)
}
