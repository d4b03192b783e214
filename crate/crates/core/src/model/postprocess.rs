use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Prediction;
use super::targets::{reference_pair, reference_points};
use crate::error::{Error, Result};
use crate::geometry::{decode_box, rotated_iou, AbsoluteBox, EncodedBox};
use crate::scene::{ClassLabel, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: AbsoluteBox,
    pub label: ClassLabel,
    pub confidence: f64,
    /// Index of the point that predicted this box.
    pub point: usize,
}

/// Indices of the boxes kept by greedy NMS: visit in descending score (ties by index),
/// keep a box unless its IoU with an already kept box reaches `iou_threshold`.
pub fn greedy_nms(boxes: &[AbsoluteBox], scores: &[f64], iou_threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept
            .iter()
            .all(|&k| rotated_iou(&boxes[k], &boxes[i]) < iou_threshold)
        {
            kept.push(i);
        }
    }
    kept
}

/// Background removal, box decoding, per-class NMS and class thresholds.
/// Output is sorted by class, then by descending confidence.
pub fn postprocess(prediction: &Prediction, cloud: &PointCloud, cfg: &ModelConfig) -> Result<Vec<Detection>> {
    if prediction.len() != cloud.len() || prediction.boxes.rows() != cloud.len() {
        return Err(Error::LengthMismatch {
            left: prediction.len(),
            right: cloud.len(),
        });
    }
    let positions = cloud.positions();
    let references = reference_points(cloud);
    let mut candidates: Vec<Detection> = Vec::new();
    for i in 0..prediction.len() {
        let (label, confidence) = prediction.class_of(i);
        if !label.is_foreground() {
            continue;
        }
        let (p0, p_nn) = reference_pair(&positions, &references, i);
        let raw: [f64; 5] = prediction.boxes.row(i).try_into().expect("five box columns");
        let bbox = match decode_box(&EncodedBox::from_array(prediction.box_mode, raw), p0, p_nn) {
            Ok(b) => b,
            Err(Error::DegenerateReference) => continue,
            Err(e) => return Err(e),
        };
        if !bbox.is_valid() {
            continue;
        }
        candidates.push(Detection {
            bbox,
            label,
            confidence,
            point: i,
        });
    }
    let mut out = Vec::new();
    for class in ClassLabel::FOREGROUND {
        let of_class: Vec<&Detection> = candidates.iter().filter(|d| d.label == class).collect();
        let boxes: Vec<AbsoluteBox> = of_class.iter().map(|d| d.bbox).collect();
        let scores: Vec<f64> = of_class.iter().map(|d| d.confidence).collect();
        let threshold = cfg.class_threshold(class);
        out.extend(
            greedy_nms(&boxes, &scores, cfg.nms_iou_threshold)
                .into_iter()
                .map(|k| *of_class[k])
                .filter(|d| d.confidence >= threshold),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxMode;
    use crate::scene::RadarPoint;
    use crate::tensor::Matrix;

    fn cloud(n: usize) -> PointCloud {
        PointCloud::new(
            "pp",
            (0..n)
                .map(|i| RadarPoint {
                    x: i as f64,
                    y: 0.0,
                    vx: 0.0,
                    vy: 0.0,
                    rcs: 0.0,
                    t: 0.0,
                    instance_id: None,
                    label: ClassLabel::Background,
                })
                .collect(),
        )
    }

    fn one_hot(rows: &[(usize, f64)]) -> Matrix {
        let mut m = Matrix::zeros(rows.len(), 6);
        for (i, &(c, p)) in rows.iter().enumerate() {
            let rest = (1.0 - p) / 5.0;
            for j in 0..6 {
                m.set(i, j, if j == c { p } else { rest });
            }
        }
        m
    }

    #[test]
    fn background_only_gives_nothing() {
        let pred = Prediction {
            probs: one_hot(&[(5, 0.9), (5, 0.8)]),
            boxes: Matrix::filled(2, 5, 1.0),
            box_mode: BoxMode::Absolute,
        };
        assert!(postprocess(&pred, &cloud(2), &ModelConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_boxes_keep_the_confident_one() {
        let b = [5.0, 5.0, 1.8, 4.0, 0.3];
        let pred = Prediction {
            probs: one_hot(&[(3, 0.8), (3, 0.9)]),
            boxes: Matrix::from_rows(5, &[b, b]).unwrap(),
            box_mode: BoxMode::Absolute,
        };
        let dets = postprocess(&pred, &cloud(2), &ModelConfig::default()).unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].confidence, 0.9);
        assert_eq!(dets[0].point, 1);
    }

    #[test]
    fn classes_are_suppressed_separately_and_thresholded() {
        let b = [5.0, 5.0, 1.8, 4.0, 0.3];
        let pred = Prediction {
            probs: one_hot(&[(3, 0.8), (4, 0.9), (0, 0.3)]),
            boxes: Matrix::from_rows(5, &[b, b, [20.0, 0.0, 0.5, 0.5, 0.0]]).unwrap(),
            box_mode: BoxMode::Absolute,
        };
        let mut cfg = ModelConfig::default();
        assert_eq!(postprocess(&pred, &cloud(3), &cfg).unwrap().len(), 3);
        cfg.class_thresholds[0] = 0.5;
        let dets = postprocess(&pred, &cloud(3), &cfg).unwrap();
        assert_eq!(dets.len(), 2);
        assert!(dets.iter().all(|d| d.label != ClassLabel::Pedestrian));
    }

    #[test]
    fn invalid_sizes_are_dropped() {
        let pred = Prediction {
            probs: one_hot(&[(3, 0.9)]),
            boxes: Matrix::from_rows(5, &[[1.0, 1.0, -1.0, 2.0, 0.0]]).unwrap(),
            box_mode: BoxMode::Absolute,
        };
        assert!(postprocess(&pred, &cloud(1), &ModelConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn length_mismatch() {
        let pred = Prediction {
            probs: one_hot(&[(3, 0.9)]),
            boxes: Matrix::zeros(1, 5),
            box_mode: BoxMode::Absolute,
        };
        assert!(postprocess(&pred, &cloud(2), &ModelConfig::default()).is_err());
    }
}
