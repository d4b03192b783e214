use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::network::{inverse_frequency_weights, RadarGnn, SceneLoss, TrainingExample};
use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::tensor::{combined_loss, l2_gradient, l2_regularization, Adam, ParameterStore};

/// Mean losses over the training set, evaluated with the parameters at the end of an epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub seg: f64,
    pub obj: f64,
    pub reg: f64,
    pub combined: f64,
}

/// Class weights from the config, or inverse frequency over `scenes`.
pub fn resolve_class_weights(model: &RadarGnn, scenes: &[Scene]) -> [f64; 6] {
    model
        .config()
        .class_weights
        .unwrap_or_else(|| inverse_frequency_weights(scenes))
}

pub fn prepare_examples(model: &RadarGnn, scenes: &[Scene]) -> Result<Vec<TrainingExample>> {
    scenes.par_iter().map(|s| model.prepare(s)).collect()
}

/// Dataset-mean losses of `params`.
pub fn dataset_loss(
    model: &RadarGnn,
    params: &ParameterStore,
    examples: &[TrainingExample],
    class_weights: &[f64; 6],
    epoch: usize,
) -> Result<EpochRecord> {
    if examples.is_empty() {
        return Err(Error::InsufficientData("no training scenes".into()));
    }
    let losses: Vec<SceneLoss> = examples
        .par_iter()
        .map(|ex| model.scene_loss(params, ex, class_weights))
        .collect::<Result<_>>()?;
    let n = losses.len() as f64;
    let seg = losses.iter().map(|l| l.seg).sum::<f64>() / n;
    let obj = losses.iter().map(|l| l.obj).sum::<f64>() / n;
    let reg = l2_regularization(params);
    let combined = combined_loss(seg, obj, reg, &model.config().loss);
    if !combined.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss after epoch {epoch}")));
    }
    Ok(EpochRecord {
        epoch,
        seg,
        obj,
        reg,
        combined,
    })
}

/// Mini-batch Adam on `α·L_seg + β·L_obj` averaged over the batch plus `γ·L_reg`.
///
/// `params` is updated in place and only ever holds finite values: if a step would produce a
/// non-finite gradient or parameter, training stops with [`Error::Numerical`] and `params` keeps
/// the last good state. `on_epoch` runs after every epoch, e.g. to write checkpoints.
pub fn train<F>(
    model: &RadarGnn,
    params: &mut ParameterStore,
    examples: &[TrainingExample],
    class_weights: &[f64; 6],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<Vec<EpochRecord>>
where
    F: FnMut(&EpochRecord, &ParameterStore) -> Result<()>,
{
    cfg.validate()?;
    model.check_params(params)?;
    if examples.is_empty() {
        return Err(Error::InsufficientData("no training scenes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut optimizer = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        optimizer.lr = cfg.learning_rate_at(epoch);
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let per_scene: Vec<ParameterStore> = batch
                .par_iter()
                .map(|&i| {
                    let mut g = params.zeros_like();
                    model.accumulate_scene_gradients(params, &examples[i], class_weights, scale, &mut g)?;
                    Ok(g)
                })
                .collect::<Result<_>>()?;
            let mut grads = params.zeros_like();
            for g in &per_scene {
                grads.axpy(1.0, g)?;
            }
            l2_gradient(params, model.config().loss.gamma, &mut grads)?;
            grads
                .ensure_finite("gradients")
                .map_err(|e| Error::Numerical(format!("epoch {epoch}: {e}")))?;
            let mut candidate = params.clone();
            optimizer.step(&mut candidate, &grads)?;
            candidate
                .ensure_finite("parameters")
                .map_err(|e| Error::Numerical(format!("epoch {epoch}: {e}")))?;
            *params = candidate;
        }
        let record = dataset_loss(model, params, examples, class_weights, epoch)?;
        on_epoch(&record, params)?;
        history.push(record);
    }
    Ok(history)
}
