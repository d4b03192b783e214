use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use crate::error::{Error, Result};
use crate::graph::InvarianceMode;
use crate::model::{prepare_examples, resolve_class_weights, train, ModelConfig, RadarGnn, TrainConfig};
use crate::scene::Scene;

/// Score used for the trend comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMetric {
    Map,
    MacroF1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    pub metric: ReductionMetric,
    /// Fractions of the training split; the largest is the normalization baseline.
    pub fractions: Vec<f64>,
    pub modes: Vec<InvarianceMode>,
    pub seeds: Vec<u64>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            metric: ReductionMetric::MacroF1,
            fractions: vec![1.0, 0.5, 0.25],
            modes: InvarianceMode::ALL.to_vec(),
            seeds: vec![0, 1, 2],
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.len() < 2 {
            return Err(Error::Config("the data-reduction study needs at least two fractions".into()));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::Config("fractions must lie in (0, 1]".into()));
        }
        if self.modes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("the data-reduction study needs modes and seeds".into()));
        }
        Ok(())
    }

    fn baseline_fraction(&self) -> f64 {
        self.fractions.iter().copied().fold(0.0, f64::max)
    }
}

/// Nested subsets of `0..n`: one seeded shuffle, then a prefix per fraction (at least one element).
pub fn nested_subsets(n: usize, fractions: &[f64], seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    fractions
        .iter()
        .map(|f| {
            let take = ((f * n as f64).round() as usize).clamp(1.min(n), n);
            order[..take].to_vec()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub mode: InvarianceMode,
    pub seed: u64,
    pub fraction: f64,
    pub train_scenes: usize,
    pub map: f64,
    pub macro_f1: f64,
    /// mAP divided by the same mode's and seed's baseline mAP; `None` if the baseline is 0.
    pub normalized_map: Option<f64>,
    pub normalized_f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub rows: Vec<ReductionRow>,
    pub metric: ReductionMetric,
    /// Mean normalized score per mode at the smallest fraction.
    pub smallest_fraction_scores: Vec<(InvarianceMode, Option<f64>)>,
    /// Whether every invariant mode kept at least the non-invariant mode's normalized score.
    pub trend_holds: Option<bool>,
}

fn normalize(v: f64, base: f64) -> Option<f64> {
    (base > 0.0).then(|| v / base)
}

/// Trains every mode on nested subsets of `train_scenes` and scores each on `test_scenes`.
pub fn data_reduction_study(
    train_scenes: &[Scene],
    test_scenes: &[Scene],
    template: &ModelConfig,
    train_cfg: &TrainConfig,
    cfg: &ReductionConfig,
) -> Result<ReductionReport> {
    cfg.validate()?;
    if train_scenes.is_empty() || test_scenes.is_empty() {
        return Err(Error::InsufficientData("the data-reduction study needs train and test scenes".into()));
    }
    let baseline = cfg.baseline_fraction();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let subsets = nested_subsets(train_scenes.len(), &cfg.fractions, seed);
        for &mode in &cfg.modes {
            let model = RadarGnn::new(ModelConfig {
                mode,
                box_mode: None,
                node_scale: None,
                edge_scale: None,
                ..template.clone()
            })?;
            let mut scored = Vec::new();
            for (&fraction, subset) in cfg.fractions.iter().zip(&subsets) {
                let scenes: Vec<Scene> = subset.iter().map(|&i| train_scenes[i].clone()).collect();
                let examples = prepare_examples(&model, &scenes)?;
                let weights = resolve_class_weights(&model, &scenes);
                let mut params = model.init_params(seed)?;
                let run = TrainConfig {
                    seed,
                    ..train_cfg.clone()
                };
                train(&model, &mut params, &examples, &weights, &run, |_, _| Ok(()))?;
                let report = evaluate(&model, &params, test_scenes)?;
                scored.push((fraction, scenes.len(), report.map, report.macro_f1));
            }
            let (_, _, base_map, base_f1) = *scored
                .iter()
                .find(|s| s.0 == baseline)
                .expect("baseline fraction is one of the fractions");
            rows.extend(scored.into_iter().map(|(fraction, n, map, f1)| ReductionRow {
                mode,
                seed,
                fraction,
                train_scenes: n,
                map,
                macro_f1: f1,
                normalized_map: normalize(map, base_map),
                normalized_f1: normalize(f1, base_f1),
            }));
        }
    }
    let smallest = cfg.fractions.iter().copied().fold(f64::INFINITY, f64::min);
    let smallest_fraction_scores: Vec<(InvarianceMode, Option<f64>)> = cfg
        .modes
        .iter()
        .map(|&mode| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.mode == mode && r.fraction == smallest)
                .filter_map(|r| match cfg.metric {
                    ReductionMetric::Map => r.normalized_map,
                    ReductionMetric::MacroF1 => r.normalized_f1,
                })
                .collect();
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            (mode, mean)
        })
        .collect();
    let score = |m: InvarianceMode| {
        smallest_fraction_scores
            .iter()
            .find(|(mode, _)| *mode == m)
            .and_then(|(_, s)| *s)
    };
    let trend_holds = score(InvarianceMode::None).and_then(|none| {
        let invariant: Vec<f64> = [InvarianceMode::Translation, InvarianceMode::TranslationRotation]
            .into_iter()
            .filter_map(score)
            .collect();
        (!invariant.is_empty()).then(|| invariant.iter().all(|&s| s >= none))
    });
    Ok(ReductionReport {
        rows,
        metric: cfg.metric,
        smallest_fraction_scores,
        trend_holds,
    })
}
