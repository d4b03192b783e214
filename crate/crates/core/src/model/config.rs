use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoxMode;
use crate::graph::{GraphConfig, InvarianceMode};
use crate::scene::ClassLabel;
use crate::tensor::LossWeights;

/// Architecture, post-processing and loss settings of a RadarGNN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub mode: InvarianceMode,
    /// Box parameterization regressed by the detection head; follows `mode` when unset.
    pub box_mode: Option<BoxMode>,
    pub graph: GraphConfig,
    /// Exactly four layers.
    pub node_embedding: Vec<usize>,
    /// Exactly three layers. Unused when the mode has no edge features.
    pub edge_embedding: Vec<usize>,
    /// One entry per message-passing layer.
    pub mpnn_widths: Vec<usize>,
    /// Ends in the class count; softmax output.
    pub seg_head: Vec<usize>,
    /// Two layers ending in 5; linear output.
    pub det_head: Vec<usize>,
    /// Per-column multipliers applied to raw node features; follows `mode` when unset.
    pub node_scale: Option<Vec<f64>>,
    pub edge_scale: Option<Vec<f64>>,
    pub nms_iou_threshold: f64,
    /// Minimum confidence per foreground class, indexed by class index.
    pub class_thresholds: [f64; 5],
    pub loss: LossWeights,
    /// Cross-entropy weight per class; inverse training-set frequency when unset.
    pub class_weights: Option<[f64; 6]>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: InvarianceMode::TranslationRotation,
            box_mode: None,
            graph: GraphConfig::default(),
            node_embedding: vec![32, 64, 128, 256],
            edge_embedding: vec![32, 64, 256],
            mpnn_widths: vec![256, 256, 256],
            seg_head: vec![128, ClassLabel::COUNT],
            det_head: vec![128, 5],
            node_scale: None,
            edge_scale: None,
            nms_iou_threshold: 0.3,
            class_thresholds: [0.1; 5],
            loss: LossWeights::default(),
            class_weights: None,
        }
    }
}

/// Box parameterization matching each invariance mode.
pub fn default_box_mode(mode: InvarianceMode) -> BoxMode {
    match mode {
        InvarianceMode::None => BoxMode::Absolute,
        InvarianceMode::Translation => BoxMode::TranslationInvariant,
        InvarianceMode::TranslationRotation => BoxMode::FullyInvariant,
    }
}

/// Brings positions, speeds, RCS and degree to roughly unit range.
pub fn default_node_scale(mode: InvarianceMode) -> Vec<f64> {
    const POS: f64 = 0.02;
    const VEL: f64 = 0.1;
    const RCS: f64 = 0.1;
    const T: f64 = 1.0;
    const DEGREE: f64 = 0.05;
    match mode {
        InvarianceMode::None => vec![POS, POS, VEL, VEL, RCS, T, DEGREE],
        InvarianceMode::Translation => vec![VEL, VEL, RCS, T, DEGREE],
        InvarianceMode::TranslationRotation => vec![VEL, RCS, T, DEGREE],
    }
}

pub fn default_edge_scale(mode: InvarianceMode) -> Vec<f64> {
    const DIST: f64 = 0.2;
    match mode {
        InvarianceMode::None => vec![],
        InvarianceMode::Translation => vec![DIST, DIST],
        InvarianceMode::TranslationRotation => vec![DIST, 1.0, 1.0, 1.0],
    }
}

impl ModelConfig {
    pub fn for_mode(mode: InvarianceMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn box_mode(&self) -> BoxMode {
        self.box_mode.unwrap_or_else(|| default_box_mode(self.mode))
    }

    pub fn node_scale(&self) -> Vec<f64> {
        self.node_scale
            .clone()
            .unwrap_or_else(|| default_node_scale(self.mode))
    }

    pub fn edge_scale(&self) -> Vec<f64> {
        self.edge_scale
            .clone()
            .unwrap_or_else(|| default_edge_scale(self.mode))
    }

    pub fn class_threshold(&self, class: ClassLabel) -> f64 {
        self.class_thresholds.get(class.index()).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let widths = |name: &str, w: &[usize], len: Option<usize>| -> Result<()> {
            if w.is_empty() || w.contains(&0) {
                return Err(Error::Config(format!("{name} widths must be non-empty and positive: {w:?}")));
            }
            if let Some(len) = len {
                if w.len() != len {
                    return Err(Error::Config(format!("{name} needs exactly {len} layers, got {}", w.len())));
                }
            }
            Ok(())
        };
        widths("node_embedding", &self.node_embedding, Some(4))?;
        widths("edge_embedding", &self.edge_embedding, Some(3))?;
        widths("mpnn_widths", &self.mpnn_widths, None)?;
        widths("seg_head", &self.seg_head, None)?;
        widths("det_head", &self.det_head, Some(2))?;
        if self.seg_head.last() != Some(&ClassLabel::COUNT) {
            return Err(Error::Config(format!("seg_head must end in {}", ClassLabel::COUNT)));
        }
        if self.det_head.last() != Some(&5) {
            return Err(Error::Config("det_head must end in 5".into()));
        }
        if self.graph.k == 0 {
            return Err(Error::Config("graph k must be at least 1".into()));
        }
        if self.node_scale().len() != self.mode.node_width() {
            return Err(Error::Config(format!(
                "node_scale needs {} entries for mode {}",
                self.mode.node_width(),
                self.mode
            )));
        }
        if self.edge_scale().len() != self.mode.edge_width() {
            return Err(Error::Config(format!(
                "edge_scale needs {} entries for mode {}",
                self.mode.edge_width(),
                self.mode
            )));
        }
        if self.node_scale().iter().chain(&self.edge_scale()).any(|s| !s.is_finite()) {
            return Err(Error::Config("feature scales must be finite".into()));
        }
        if !(self.nms_iou_threshold > 0.0 && self.nms_iou_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "nms_iou_threshold must lie in (0, 1], got {}",
                self.nms_iou_threshold
            )));
        }
        if self.class_thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("class thresholds must lie in [0, 1]".into()));
        }
        if let Some(w) = &self.class_weights {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Config("class weights must be finite and non-negative".into()));
            }
        }
        self.loss.validate()
    }
}

/// Learning-rate schedule over epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate to `final_factor` times the base rate at the last epoch.
    Cosine { final_factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-3,
            schedule: LrSchedule::Cosine { final_factor: 0.05 },
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Learning rate used during `epoch` (1-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine { final_factor } => {
                if self.epochs <= 1 {
                    return self.learning_rate;
                }
                let progress = (epoch.saturating_sub(1)) as f64 / (self.epochs - 1) as f64;
                let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
                self.learning_rate * (final_factor + (1.0 - final_factor) * cosine)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if let LrSchedule::Cosine { final_factor } = self.schedule {
            if !(0.0..=1.0).contains(&final_factor) {
                return Err(Error::Config(format!("cosine final_factor must lie in [0, 1], got {final_factor}")));
            }
        }
        Ok(())
    }
}
