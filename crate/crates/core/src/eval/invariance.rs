use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axial_angle_distance, decode_box, AbsoluteBox, EncodedBox};
use crate::graph::InvarianceMode;
use crate::model::{reference_pair, reference_points, Prediction, RadarGnn};
use crate::scene::{apply_transform, PointCloud, RigidTransform2D};
use crate::tensor::ParameterStore;

/// Largest translation component sampled, in meters.
pub const MAX_TRANSLATION: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformFamily {
    Translation,
    Rigid,
}

impl TransformFamily {
    /// The family a model of this mode claims invariance under, if any.
    pub fn claimed_by(mode: InvarianceMode) -> Option<Self> {
        match mode {
            InvarianceMode::None => None,
            InvarianceMode::Translation => Some(TransformFamily::Translation),
            InvarianceMode::TranslationRotation => Some(TransformFamily::Rigid),
        }
    }

    pub fn sample<R: Rng>(self, rng: &mut R) -> RigidTransform2D {
        let tx = rng.random_range(-MAX_TRANSLATION..=MAX_TRANSLATION);
        let ty = rng.random_range(-MAX_TRANSLATION..=MAX_TRANSLATION);
        match self {
            TransformFamily::Translation => RigidTransform2D::translation(tx, ty),
            TransformFamily::Rigid => RigidTransform2D::new(rng.random_range(-PI..PI), tx, ty),
        }
    }
}

/// Per-point deviations between a prediction on a cloud and on its transformed copy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub prob_max: f64,
    pub prob_sum: f64,
    pub box_max: f64,
    pub box_sum: f64,
    /// Number of values summed into `prob_sum` / `box_sum`.
    pub prob_count: usize,
    pub box_count: usize,
}

impl Deviation {
    pub fn merge(&mut self, other: &Deviation) {
        self.prob_max = self.prob_max.max(other.prob_max);
        self.box_max = self.box_max.max(other.box_max);
        self.prob_sum += other.prob_sum;
        self.box_sum += other.box_sum;
        self.prob_count += other.prob_count;
        self.box_count += other.box_count;
    }

    pub fn prob_mean(&self) -> f64 {
        if self.prob_count == 0 {
            0.0
        } else {
            self.prob_sum / self.prob_count as f64
        }
    }

    pub fn box_mean(&self) -> f64 {
        if self.box_count == 0 {
            0.0
        } else {
            self.box_sum / self.box_count as f64
        }
    }
}

/// Every point's regressed box in absolute coordinates; `None` where the reference is degenerate.
pub fn decoded_boxes(prediction: &Prediction, cloud: &PointCloud) -> Result<Vec<Option<AbsoluteBox>>> {
    let positions = cloud.positions();
    let references = reference_points(cloud);
    (0..prediction.len())
        .map(|i| {
            let (p0, p_nn) = reference_pair(&positions, &references, i);
            let raw: [f64; 5] = prediction.boxes.row(i).try_into().expect("five box columns");
            match decode_box(&EncodedBox::from_array(prediction.box_mode, raw), p0, p_nn) {
                Ok(b) => Ok(Some(b)),
                Err(Error::DegenerateReference) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn box_deviation(a: &AbsoluteBox, b: &AbsoluteBox) -> [f64; 5] {
    [
        (a.x - b.x).abs(),
        (a.y - b.y).abs(),
        (a.w - b.w).abs(),
        (a.l - b.l).abs(),
        axial_angle_distance(a.theta, b.theta),
    ]
}

/// Compares class probabilities and decoded boxes (mapped back by `T⁻¹`) of `cloud` and `T(cloud)`.
pub fn transform_deviation(
    model: &RadarGnn,
    params: &ParameterStore,
    cloud: &PointCloud,
    transform: &RigidTransform2D,
) -> Result<Deviation> {
    let moved = apply_transform(cloud, transform);
    let base = model.forward(params, &model.build_graph(cloud)?)?;
    let other = model.forward(params, &model.build_graph(&moved)?)?;
    let mut dev = Deviation::default();
    for (a, b) in base.probs.data().iter().zip(other.probs.data()) {
        let d = (a - b).abs();
        dev.prob_max = dev.prob_max.max(d);
        dev.prob_sum += d;
        dev.prob_count += 1;
    }
    let inverse = transform.inverse();
    let boxes_a = decoded_boxes(&base, cloud)?;
    let boxes_b = decoded_boxes(&other, &moved)?;
    for (a, b) in boxes_a.iter().zip(&boxes_b) {
        if let (Some(a), Some(b)) = (a, b) {
            for d in box_deviation(a, &inverse.apply_box(b)) {
                dev.box_max = dev.box_max.max(d);
                dev.box_sum += d;
                dev.box_count += 1;
            }
        }
    }
    Ok(dev)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub mode: InvarianceMode,
    pub family: TransformFamily,
    pub scenes: usize,
    pub transforms: usize,
    pub prob_max: f64,
    pub prob_mean: f64,
    pub box_max: f64,
    pub box_mean: f64,
    /// Whether the mode claims invariance under `family`.
    pub claimed: bool,
}

impl InvarianceRow {
    pub fn max_deviation(&self) -> f64 {
        self.prob_max.max(self.box_max)
    }

    /// A claimed invariance held within `tolerance`; unclaimed rows always pass.
    pub fn passes(&self, tolerance: f64) -> bool {
        !self.claimed || self.max_deviation() <= tolerance
    }
}

/// Deviation statistics over `n_transforms` seeded transforms, each applied to every scene.
pub fn invariance_report(
    model: &RadarGnn,
    params: &ParameterStore,
    clouds: &[PointCloud],
    family: TransformFamily,
    n_transforms: usize,
    seed: u64,
) -> Result<InvarianceRow> {
    use rayon::prelude::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transforms: Vec<RigidTransform2D> = (0..n_transforms).map(|_| family.sample(&mut rng)).collect();
    let per_transform: Vec<Deviation> = transforms
        .par_iter()
        .map(|t| {
            let mut dev = Deviation::default();
            for cloud in clouds {
                dev.merge(&transform_deviation(model, params, cloud, t)?);
            }
            Ok(dev)
        })
        .collect::<Result<_>>()?;
    let mut total = Deviation::default();
    for d in &per_transform {
        total.merge(d);
    }
    let mode = model.config().mode;
    let claimed = matches!(
        (TransformFamily::claimed_by(mode), family),
        (Some(TransformFamily::Rigid), _) | (Some(TransformFamily::Translation), TransformFamily::Translation)
    );
    Ok(InvarianceRow {
        mode,
        family,
        scenes: clouds.len(),
        transforms: n_transforms,
        prob_max: total.prob_max,
        prob_mean: total.prob_mean(),
        box_max: total.box_max,
        box_mean: total.box_mean(),
        claimed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::scene::{generate_scene, SceneSpec};

    fn small(mode: InvarianceMode) -> RadarGnn {
        RadarGnn::new(ModelConfig {
            node_embedding: vec![8, 8, 8, 8],
            edge_embedding: vec![8, 8, 8],
            mpnn_widths: vec![8, 8],
            seg_head: vec![8, 6],
            det_head: vec![8, 5],
            ..ModelConfig::for_mode(mode)
        })
        .unwrap()
    }

    #[test]
    fn identity_deviation_is_zero() {
        let (cloud, _) = generate_scene(&SceneSpec::default()).unwrap();
        for mode in InvarianceMode::ALL {
            let model = small(mode);
            let params = model.init_params(1).unwrap();
            let dev = transform_deviation(&model, &params, &cloud, &RigidTransform2D::IDENTITY).unwrap();
            assert_eq!(dev.prob_max, 0.0);
            assert_eq!(dev.box_max, 0.0);
        }
    }

    #[test]
    fn claims_follow_mode() {
        let (cloud, _) = generate_scene(&SceneSpec::default()).unwrap();
        let model = small(InvarianceMode::Translation);
        let params = model.init_params(2).unwrap();
        let clouds = [cloud];
        let t = invariance_report(&model, &params, &clouds, TransformFamily::Translation, 3, 0).unwrap();
        assert!(t.claimed && t.passes(1e-6), "{t:?}");
        let r = invariance_report(&model, &params, &clouds, TransformFamily::Rigid, 3, 0).unwrap();
        assert!(!r.claimed && r.passes(1e-6));
    }
}
