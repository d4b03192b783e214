use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::rotated_iou;
use crate::model::{postprocess, Detection, RadarGnn};
use crate::scene::{ClassLabel, Instance, Scene};
use crate::tensor::ParameterStore;

pub const EVAL_IOU_THRESHOLD: f64 = 0.3;

/// Precision/recall after each detection, in descending-confidence order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

impl PrCurve {
    /// Area under the monotone precision envelope (all-point interpolation).
    pub fn all_point_ap(&self) -> f64 {
        let mut envelope = self.precision.clone();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for (r, p) in self.recall.iter().zip(envelope) {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
        ap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: ClassLabel,
    /// `None` when the class has neither ground truth nor detections.
    pub ap: Option<f64>,
    pub curve: PrCurve,
    pub ground_truth: usize,
    pub detections: usize,
}

/// AP of one class over many scenes. Each detection, in descending confidence, claims the
/// highest-IoU unmatched ground-truth box of its class and scene if that IoU reaches the threshold.
pub fn average_precision(
    detections: &[Vec<Detection>],
    ground_truth: &[Vec<Instance>],
    class: ClassLabel,
    iou_threshold: f64,
) -> Result<ClassAp> {
    if detections.len() != ground_truth.len() {
        return Err(Error::LengthMismatch {
            left: detections.len(),
            right: ground_truth.len(),
        });
    }
    let gt: Vec<Vec<&Instance>> = ground_truth
        .iter()
        .map(|scene| scene.iter().filter(|g| g.label == class).collect())
        .collect();
    let n_gt: usize = gt.iter().map(Vec::len).sum();
    let mut dets: Vec<(usize, &Detection)> = detections
        .iter()
        .enumerate()
        .flat_map(|(s, scene)| scene.iter().filter(|d| d.label == class).map(move |d| (s, d)))
        .collect();
    // Stable sort keeps scene/list order among equal confidences.
    dets.sort_by(|a, b| b.1.confidence.total_cmp(&a.1.confidence));

    let mut matched: Vec<Vec<bool>> = gt.iter().map(|g| vec![false; g.len()]).collect();
    let mut curve = PrCurve::default();
    let mut tp = 0usize;
    for (k, (s, det)) in dets.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (j, g) in gt[*s].iter().enumerate() {
            if matched[*s][j] {
                continue;
            }
            let iou = rotated_iou(&det.bbox, &g.bbox);
            if iou >= iou_threshold && best.is_none_or(|(b, _)| iou > b) {
                best = Some((iou, j));
            }
        }
        if let Some((_, j)) = best {
            matched[*s][j] = true;
            tp += 1;
        }
        curve.precision.push(tp as f64 / (k + 1) as f64);
        curve.recall.push(if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 });
    }
    let ap = match (n_gt, dets.len()) {
        (0, 0) => None,
        (0, _) => Some(0.0),
        _ => Some(curve.all_point_ap()),
    };
    Ok(ClassAp {
        class,
        ap,
        curve,
        ground_truth: n_gt,
        detections: dets.len(),
    })
}

/// Unweighted mean over the classes whose AP is defined; 0 if none is.
pub fn mean_average_precision(aps: &[Option<f64>]) -> f64 {
    let defined: Vec<f64> = aps.iter().flatten().copied().collect();
    if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

/// Rows are ground truth, columns are predictions.
pub type ConfusionMatrix = [[usize; ClassLabel::COUNT]; ClassLabel::COUNT];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub confusion: ConfusionMatrix,
    /// Per class; `None` when the class appears in neither labels nor predictions.
    pub f1: [Option<f64>; ClassLabel::COUNT],
    pub precision: [Option<f64>; ClassLabel::COUNT],
    pub recall: [Option<f64>; ClassLabel::COUNT],
    /// Mean over the defined per-class scores.
    pub macro_f1: f64,
}

pub fn confusion_matrix(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let mut m = [[0; ClassLabel::COUNT]; ClassLabel::COUNT];
    for (p, t) in predicted.iter().zip(truth) {
        m[t.index()][p.index()] += 1;
    }
    Ok(m)
}

pub fn f1_from_confusion(confusion: &ConfusionMatrix) -> F1Report {
    let mut f1 = [None; ClassLabel::COUNT];
    let mut precision = [None; ClassLabel::COUNT];
    let mut recall = [None; ClassLabel::COUNT];
    for c in 0..ClassLabel::COUNT {
        let tp = confusion[c][c];
        let row: usize = confusion[c].iter().sum();
        let col: usize = confusion.iter().map(|r| r[c]).sum();
        let (fp, fn_) = (col - tp, row - tp);
        if col > 0 {
            precision[c] = Some(tp as f64 / col as f64);
        }
        if row > 0 {
            recall[c] = Some(tp as f64 / row as f64);
        }
        if tp + fp + fn_ > 0 {
            f1[c] = Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
        }
    }
    let macro_f1 = mean_average_precision(&f1);
    F1Report {
        confusion: *confusion,
        f1,
        precision,
        recall,
        macro_f1,
    }
}

/// Point-wise macro F1 over all six classes, background included.
pub fn macro_f1(predicted: &[ClassLabel], truth: &[ClassLabel]) -> Result<F1Report> {
    Ok(f1_from_confusion(&confusion_matrix(predicted, truth)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: ClassLabel,
    /// Foreground classes only; 0 when flagged.
    pub ap: Option<f64>,
    /// Set when the class had neither ground truth nor detections, so its AP is undefined.
    pub absent: bool,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub gt_boxes: usize,
    pub detections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: Option<String>,
    pub scenes: usize,
    pub points: usize,
    pub iou_threshold: f64,
    pub classes: Vec<ClassRow>,
    pub map: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn from_parts(
        detections: &[Vec<Detection>],
        ground_truth: &[Vec<Instance>],
        predicted: &[ClassLabel],
        truth: &[ClassLabel],
        iou_threshold: f64,
    ) -> Result<Self> {
        let f1 = macro_f1(predicted, truth)?;
        let mut aps = Vec::new();
        let mut classes = Vec::new();
        for class in ClassLabel::ALL {
            let c = class.index();
            let (ap, absent, gt_boxes, n_det) = if class.is_foreground() {
                let r = average_precision(detections, ground_truth, class, iou_threshold)?;
                aps.push(r.ap);
                (Some(r.ap.unwrap_or(0.0)), r.ap.is_none(), r.ground_truth, r.detections)
            } else {
                (None, false, 0, 0)
            };
            classes.push(ClassRow {
                class,
                ap,
                absent,
                precision: f1.precision[c],
                recall: f1.recall[c],
                f1: f1.f1[c],
                gt_boxes,
                detections: n_det,
            });
        }
        Ok(Self {
            config_hash: None,
            scenes: detections.len(),
            points: truth.len(),
            iou_threshold,
            classes,
            map: mean_average_precision(&aps),
            macro_f1: f1.macro_f1,
            confusion: f1.confusion,
        })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// One row per class, then `mAP` and `macro_f1` aggregate rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["class", "ap", "absent", "precision", "recall", "f1", "gt_boxes", "detections"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.classes {
            w.write_record([
                r.class.name().to_string(),
                opt(r.ap),
                r.absent.to_string(),
                opt(r.precision),
                opt(r.recall),
                opt(r.f1),
                r.gt_boxes.to_string(),
                r.detections.to_string(),
            ])?;
        }
        w.write_record(["mAP", &self.map.to_string(), "", "", "", "", "", ""])?;
        w.write_record(["macro_f1", "", "", "", "", &self.macro_f1.to_string(), "", ""])?;
        w.flush()?;
        Ok(())
    }
}

/// Model outputs for one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneOutput {
    pub frame_id: String,
    pub labels: Vec<ClassLabel>,
    pub detections: Vec<Detection>,
}

pub fn predict_scenes(model: &RadarGnn, params: &ParameterStore, scenes: &[Scene]) -> Result<Vec<SceneOutput>> {
    scenes
        .par_iter()
        .map(|scene| {
            let graph = model.build_graph(&scene.cloud)?;
            let pred = model.forward(params, &graph)?;
            let labels = (0..pred.len()).map(|i| pred.class_of(i).0).collect();
            let detections = postprocess(&pred, &scene.cloud, model.config())?;
            Ok(SceneOutput {
                frame_id: scene.cloud.frame_id.clone(),
                labels,
                detections,
            })
        })
        .collect()
}

pub fn evaluate_outputs(outputs: &[SceneOutput], scenes: &[Scene]) -> Result<EvalReport> {
    if outputs.len() != scenes.len() {
        return Err(Error::LengthMismatch {
            left: outputs.len(),
            right: scenes.len(),
        });
    }
    let detections: Vec<Vec<Detection>> = outputs.iter().map(|o| o.detections.clone()).collect();
    let gt: Vec<Vec<Instance>> = scenes.iter().map(|s| s.instances.clone()).collect();
    let predicted: Vec<ClassLabel> = outputs.iter().flat_map(|o| o.labels.iter().copied()).collect();
    let truth: Vec<ClassLabel> = scenes.iter().flat_map(|s| s.cloud.labels()).collect();
    EvalReport::from_parts(&detections, &gt, &predicted, &truth, EVAL_IOU_THRESHOLD)
}

pub fn evaluate(model: &RadarGnn, params: &ParameterStore, scenes: &[Scene]) -> Result<EvalReport> {
    evaluate_outputs(&predict_scenes(model, params, scenes)?, scenes)
}
