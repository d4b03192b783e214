use crate::error::{Error, Result};
use crate::geometry::{encode_box, BoxMode, Vec2};
use crate::graph::KdTree;
use crate::scene::{Instance, PointCloud};
use crate::tensor::{BoxResidualWrap, Matrix};

/// Nearest other point per point (ties to the smaller index); `None` for single-point clouds.
pub fn reference_points(cloud: &PointCloud) -> Vec<Option<usize>> {
    let positions = cloud.positions();
    if positions.len() < 2 {
        return vec![None; positions.len()];
    }
    let tree = KdTree::new(&positions);
    (0..positions.len())
        .map(|i| tree.nearest(i, 1).first().copied())
        .collect()
}

/// Reference pair `(p0, p_nn)` of point `i`. Without a neighbor, `p_nn` falls back to `p0`,
/// which only the fully invariant parameterization rejects.
pub fn reference_pair(positions: &[Vec2], references: &[Option<usize>], i: usize) -> (Vec2, Vec2) {
    let p0 = positions[i];
    (p0, references[i].map_or(p0, |j| positions[j]))
}

/// Per-point supervision for one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct Targets {
    /// Class index per point.
    pub labels: Vec<usize>,
    /// Encoded box per point; rows outside `mask` are zero.
    pub boxes: Matrix,
    /// Points that contribute to the box loss.
    pub mask: Vec<bool>,
    pub box_mode: BoxMode,
}

impl Targets {
    pub fn residual_wrap(&self) -> BoxResidualWrap {
        residual_wrap(self.box_mode)
    }
}

pub fn residual_wrap(mode: BoxMode) -> BoxResidualWrap {
    match mode {
        BoxMode::FullyInvariant => BoxResidualWrap {
            direction: Some(1),
            orientation: 4,
        },
        BoxMode::Absolute | BoxMode::TranslationInvariant => BoxResidualWrap::default(),
    }
}

/// Foreground points regress their instance's box, encoded against `(self, nearest other point)`.
/// Background points, and points whose reference is degenerate, are masked out.
pub fn training_targets(cloud: &PointCloud, instances: &[Instance], box_mode: BoxMode) -> Result<Targets> {
    let positions = cloud.positions();
    let references = reference_points(cloud);
    let n = cloud.len();
    let mut boxes = Matrix::zeros(n, 5);
    let mut mask = vec![false; n];
    let mut labels = Vec::with_capacity(n);
    for (i, p) in cloud.points.iter().enumerate() {
        labels.push(p.label.index());
        if !p.label.is_foreground() {
            continue;
        }
        let id = p
            .instance_id
            .ok_or_else(|| Error::Target(format!("foreground point {i} has no instance id")))?;
        let instance = instances
            .iter()
            .find(|inst| inst.id == id)
            .ok_or_else(|| Error::Target(format!("no box for instance {id}")))?;
        let (p0, p_nn) = reference_pair(&positions, &references, i);
        match encode_box(&instance.bbox, p0, p_nn, box_mode) {
            Ok(encoded) => {
                boxes.row_mut(i).copy_from_slice(&encoded.to_array());
                mask[i] = true;
            }
            Err(Error::DegenerateReference) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Targets {
        labels,
        boxes,
        mask,
        box_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decode_box, AbsoluteBox, EncodedBox};
    use crate::scene::{ClassLabel, RadarPoint};

    fn point(x: f64, y: f64, label: ClassLabel, id: Option<u32>) -> RadarPoint {
        RadarPoint {
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            rcs: 0.0,
            t: 0.0,
            instance_id: id,
            label,
        }
    }

    #[test]
    fn background_scene_has_empty_mask() {
        let cloud = PointCloud::new(
            "bg",
            vec![
                point(0.0, 0.0, ClassLabel::Background, None),
                point(1.0, 0.0, ClassLabel::Background, None),
            ],
        );
        let t = training_targets(&cloud, &[], BoxMode::FullyInvariant).unwrap();
        assert!(t.mask.iter().all(|m| !m));
        assert_eq!(t.labels, vec![5, 5]);
    }

    #[test]
    fn car_points_decode_to_the_same_box() {
        let bbox = AbsoluteBox::new(10.0, 5.0, 1.8, 4.5, 0.4);
        let pts: Vec<RadarPoint> = [(9.0, 4.5), (10.5, 5.5), (11.2, 5.1), (9.4, 5.3), (10.1, 4.6)]
            .iter()
            .map(|&(x, y)| point(x, y, ClassLabel::Car, Some(7)))
            .collect();
        let cloud = PointCloud::new("car", pts);
        let instances = [Instance {
            id: 7,
            label: ClassLabel::Car,
            bbox,
        }];
        for mode in [BoxMode::Absolute, BoxMode::TranslationInvariant, BoxMode::FullyInvariant] {
            let t = training_targets(&cloud, &instances, mode).unwrap();
            assert!(t.mask.iter().all(|&m| m));
            let positions = cloud.positions();
            let refs = reference_points(&cloud);
            for i in 0..5 {
                let (p0, p_nn) = reference_pair(&positions, &refs, i);
                let row: [f64; 5] = t.boxes.row(i).try_into().unwrap();
                let decoded = decode_box(&EncodedBox::from_array(mode, row), p0, p_nn).unwrap();
                for (a, b) in decoded.to_array().iter().zip(bbox.to_array()) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
            if mode != BoxMode::Absolute {
                assert_ne!(t.boxes.row(0), t.boxes.row(1));
            }
        }
    }

    #[test]
    fn translation_target_is_offset_from_owner() {
        let cloud = PointCloud::new(
            "t",
            vec![
                point(1.0, 1.0, ClassLabel::Pedestrian, Some(1)),
                point(1.5, 1.0, ClassLabel::Pedestrian, Some(1)),
            ],
        );
        let instances = [Instance {
            id: 1,
            label: ClassLabel::Pedestrian,
            bbox: AbsoluteBox::new(2.0, 3.0, 0.5, 0.8, 0.0),
        }];
        let t = training_targets(&cloud, &instances, BoxMode::TranslationInvariant).unwrap();
        assert_eq!(&t.boxes.row(0)[..2], &[1.0, 2.0]);
    }

    #[test]
    fn missing_instance_is_an_error() {
        let cloud = PointCloud::new("m", vec![point(0.0, 0.0, ClassLabel::Car, Some(3))]);
        assert!(matches!(
            training_targets(&cloud, &[], BoxMode::Absolute),
            Err(Error::Target(_))
        ));
    }

    #[test]
    fn coincident_reference_is_masked() {
        let cloud = PointCloud::new(
            "d",
            vec![
                point(2.0, 2.0, ClassLabel::Car, Some(1)),
                point(2.0, 2.0, ClassLabel::Car, Some(1)),
            ],
        );
        let instances = [Instance {
            id: 1,
            label: ClassLabel::Car,
            bbox: AbsoluteBox::new(2.0, 2.0, 1.0, 2.0, 0.0),
        }];
        let t = training_targets(&cloud, &instances, BoxMode::FullyInvariant).unwrap();
        assert_eq!(t.mask, vec![false, false]);
        let t = training_targets(&cloud, &instances, BoxMode::TranslationInvariant).unwrap();
        assert_eq!(t.mask, vec![true, true]);
    }
}
