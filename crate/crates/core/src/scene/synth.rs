use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{preprocess::Roi, ClassLabel, Instance, PointCloud, RadarPoint, Scene};
use crate::error::{Error, Result};
use crate::geometry::{AbsoluteBox, Vec2};

/// Number of objects to place per foreground class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectCounts {
    pub pedestrian: usize,
    pub pedestrian_group: usize,
    pub two_wheeler: usize,
    pub car: usize,
    pub large_vehicle: usize,
}

impl ObjectCounts {
    pub fn get(&self, class: ClassLabel) -> usize {
        match class {
            ClassLabel::Pedestrian => self.pedestrian,
            ClassLabel::PedestrianGroup => self.pedestrian_group,
            ClassLabel::TwoWheeler => self.two_wheeler,
            ClassLabel::Car => self.car,
            ClassLabel::LargeVehicle => self.large_vehicle,
            ClassLabel::Background => 0,
        }
    }

    pub fn get_mut(&mut self, class: ClassLabel) -> Option<&mut usize> {
        match class {
            ClassLabel::Pedestrian => Some(&mut self.pedestrian),
            ClassLabel::PedestrianGroup => Some(&mut self.pedestrian_group),
            ClassLabel::TwoWheeler => Some(&mut self.two_wheeler),
            ClassLabel::Car => Some(&mut self.car),
            ClassLabel::LargeVehicle => Some(&mut self.large_vehicle),
            ClassLabel::Background => None,
        }
    }

    pub fn total(&self) -> usize {
        ClassLabel::FOREGROUND.iter().map(|c| self.get(*c)).sum()
    }
}

/// Sampling ranges `(min, max)` for one object class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplate {
    pub width: (f64, f64),
    pub length: (f64, f64),
    pub speed: (f64, f64),
    pub rcs: (f64, f64),
    pub detections: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplates {
    pub pedestrian: ClassTemplate,
    pub pedestrian_group: ClassTemplate,
    pub two_wheeler: ClassTemplate,
    pub car: ClassTemplate,
    pub large_vehicle: ClassTemplate,
}

impl Default for ClassTemplates {
    fn default() -> Self {
        Self {
            pedestrian: ClassTemplate {
                width: (0.4, 0.7),
                length: (0.5, 0.9),
                speed: (0.8, 2.0),
                rcs: (-12.0, -4.0),
                detections: (3, 5),
            },
            pedestrian_group: ClassTemplate {
                width: (1.5, 2.5),
                length: (2.0, 3.5),
                speed: (0.6, 1.6),
                rcs: (-6.0, 2.0),
                detections: (6, 12),
            },
            two_wheeler: ClassTemplate {
                width: (0.6, 0.9),
                length: (1.6, 2.2),
                speed: (3.0, 7.0),
                rcs: (-4.0, 4.0),
                detections: (4, 8),
            },
            car: ClassTemplate {
                width: (1.7, 2.0),
                length: (4.0, 4.8),
                speed: (6.0, 14.0),
                rcs: (4.0, 12.0),
                detections: (8, 16),
            },
            large_vehicle: ClassTemplate {
                width: (2.4, 2.9),
                length: (8.0, 12.0),
                speed: (5.0, 12.0),
                rcs: (12.0, 22.0),
                detections: (14, 24),
            },
        }
    }
}

impl ClassTemplates {
    pub fn get(&self, class: ClassLabel) -> Option<&ClassTemplate> {
        match class {
            ClassLabel::Pedestrian => Some(&self.pedestrian),
            ClassLabel::PedestrianGroup => Some(&self.pedestrian_group),
            ClassLabel::TwoWheeler => Some(&self.two_wheeler),
            ClassLabel::Car => Some(&self.car),
            ClassLabel::LargeVehicle => Some(&self.large_vehicle),
            ClassLabel::Background => None,
        }
    }
}

/// Standard deviations of the measurement noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub position: f64,
    pub velocity: f64,
    pub rcs: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            position: 0.05,
            velocity: 0.1,
            rcs: 1.0,
        }
    }
}

/// Everything that determines one synthetic scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub rng_seed: u64,
    pub objects: ObjectCounts,
    pub templates: ClassTemplates,
    pub roi: Roi,
    /// Background detections per square meter.
    pub clutter_density: f64,
    pub clutter_rcs: (f64, f64),
    pub noise: NoiseSpec,
    /// Timestamps are drawn from `[0, time_window]`.
    pub time_window: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rng_seed: 0,
            objects: ObjectCounts::default(),
            templates: ClassTemplates::default(),
            roi: Roi::default(),
            clutter_density: 0.002,
            clutter_rcs: (-20.0, 5.0),
            noise: NoiseSpec::default(),
            time_window: 0.5,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} range ({lo}, {hi}) is degenerate")))
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.roi.area().is_nan() || self.roi.area() <= 0.0 {
            return Err(Error::InvalidSpec("region of interest has zero area".into()));
        }
        if self.objects.total() == 0 && self.clutter_density <= 0.0 {
            return Err(Error::InvalidSpec("spec produces an empty cloud".into()));
        }
        if [self.clutter_density, self.time_window].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidSpec("clutter density and time window must be non-negative".into()));
        }
        let n = self.noise;
        if [n.position, n.velocity, n.rcs].iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidSpec("noise deviations must be finite and non-negative".into()));
        }
        check_range("clutter rcs", self.clutter_rcs)?;
        for class in ClassLabel::FOREGROUND {
            let t = self.templates.get(class).expect("foreground class");
            check_range("width", t.width)?;
            check_range("length", t.length)?;
            check_range("speed", t.speed)?;
            check_range("rcs", t.rcs)?;
            if t.width.0 <= 0.0 || t.length.0 <= 0.0 {
                return Err(Error::InvalidSpec(format!("{class} extents must be positive")));
            }
            if t.detections.0 < 3 || t.detections.0 > t.detections.1 {
                return Err(Error::InvalidSpec(format!(
                    "{class} detections {:?} must be an ordered range starting at >= 3",
                    t.detections
                )));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).expect("finite std").sample(rng)
}

/// Object rectangle with a margin, used to keep objects and clutter apart.
fn footprint_overlaps(a: &AbsoluteBox, b: &AbsoluteBox, margin: f64) -> bool {
    let grow = |r: &AbsoluteBox| AbsoluteBox::new(r.x, r.y, r.w + 2.0 * margin, r.l + 2.0 * margin, r.theta);
    crate::geometry::intersection_area(&grow(a), &grow(b)) > 0.0
}

/// Draws one scene. Output is a pure function of `spec`.
pub fn generate_scene(spec: &SceneSpec) -> Result<(PointCloud, Vec<Instance>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let roi = spec.roi;
    let mut footprints: Vec<AbsoluteBox> = Vec::new();
    let mut points: Vec<RadarPoint> = Vec::new();
    let mut next_id = 1u32;

    for class in ClassLabel::FOREGROUND {
        let template = *spec.templates.get(class).expect("foreground class");
        for _ in 0..spec.objects.get(class) {
            let w = uniform(&mut rng, template.width);
            let l = uniform(&mut rng, template.length);
            let heading = rng.random_range(0.0..2.0 * PI);
            let half = 0.5 * l.hypot(w);
            let placed = (0..200).find_map(|_| {
                let cx = uniform(&mut rng, (roi.x_min + half, (roi.x_max - half).max(roi.x_min + half)));
                let cy = uniform(&mut rng, (roi.y_min + half, (roi.y_max - half).max(roi.y_min + half)));
                let rect = AbsoluteBox { x: cx, y: cy, w, l, theta: heading };
                (!footprints.iter().any(|f| footprint_overlaps(f, &rect, 1.0))).then_some(rect)
            });
            let rect = placed.ok_or_else(|| {
                Error::InvalidSpec("objects do not fit into the region of interest".into())
            })?;
            footprints.push(rect);

            let speed = uniform(&mut rng, template.speed);
            let velocity = Vec2::from_angle(heading) * speed;
            let rcs = uniform(&mut rng, template.rcs);
            let n = rng.random_range(template.detections.0..=template.detections.1);
            let along = Vec2::from_angle(heading);
            for _ in 0..n {
                let u = rng.random_range(-0.5..0.5) * l;
                let v = rng.random_range(-0.5..0.5) * w;
                let pos = rect.center() + along * u + along.perp() * v;
                points.push(RadarPoint {
                    x: pos.x + gaussian(&mut rng, spec.noise.position),
                    y: pos.y + gaussian(&mut rng, spec.noise.position),
                    vx: velocity.x + gaussian(&mut rng, spec.noise.velocity),
                    vy: velocity.y + gaussian(&mut rng, spec.noise.velocity),
                    rcs: rcs + gaussian(&mut rng, spec.noise.rcs),
                    t: uniform(&mut rng, (0.0, spec.time_window)),
                    instance_id: Some(next_id),
                    label: class,
                });
            }
            next_id += 1;
        }
    }

    let n_clutter = (spec.clutter_density * roi.area()).round() as usize;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < n_clutter && attempts < 100 * n_clutter.max(1) {
        attempts += 1;
        let pos = Vec2::new(
            uniform(&mut rng, (roi.x_min, roi.x_max)),
            uniform(&mut rng, (roi.y_min, roi.y_max)),
        );
        let rcs = uniform(&mut rng, spec.clutter_rcs);
        let vx = gaussian(&mut rng, spec.noise.velocity);
        let vy = gaussian(&mut rng, spec.noise.velocity);
        let t = uniform(&mut rng, (0.0, spec.time_window));
        let near_object = footprints.iter().any(|f| {
            AbsoluteBox::new(f.x, f.y, f.w + 2.0, f.l + 2.0, f.theta).contains(pos)
        });
        if near_object {
            continue;
        }
        points.push(RadarPoint {
            x: pos.x,
            y: pos.y,
            vx,
            vy,
            rcs,
            t,
            instance_id: None,
            label: ClassLabel::Background,
        });
        placed += 1;
    }

    if points.is_empty() {
        return Err(Error::InvalidSpec("spec produced an empty cloud".into()));
    }
    // sensor returns arrive unordered
    rand::seq::SliceRandom::shuffle(points.as_mut_slice(), &mut rng);
    let cloud = PointCloud::new(format!("synthetic-{}", spec.rng_seed), points);
    let instances = super::ground_truth_instances(&cloud)?;
    Ok((cloud, instances))
}

/// A collection of synthetic scenes, one sequence each, plus the split ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub n_scenes: usize,
    /// Inclusive range of objects per scene; classes drawn uniformly.
    pub objects_per_scene: (usize, usize),
    pub ratios: [f64; 3],
    /// Template for every scene; its `objects` and `rng_seed` are overwritten per scene.
    pub scene: SceneSpec,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_scenes: 100,
            objects_per_scene: (2, 4),
            ratios: [0.64, 0.16, 0.20],
            scene: SceneSpec::default(),
        }
    }
}

/// Generates `spec.n_scenes` scenes; scene seeds derive from `seed`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<Scene>> {
    let (lo, hi) = spec.objects_per_scene;
    if lo > hi {
        return Err(Error::InvalidSpec(format!("objects_per_scene ({lo}, {hi}) is not ordered")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<SceneSpec> = (0..spec.n_scenes)
        .map(|_| {
            let mut s = spec.scene.clone();
            s.rng_seed = rng.random();
            s.objects = ObjectCounts::default();
            for _ in 0..rng.random_range(lo..=hi) {
                let class = ClassLabel::FOREGROUND[rng.random_range(0..5)];
                *s.objects.get_mut(class).expect("foreground") += 1;
            }
            s
        })
        .collect();
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (mut cloud, instances) = generate_scene(s)?;
            cloud.frame_id = format!("scene-{i:05}");
            Ok(Scene { cloud, instances })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_invalid() {
        let spec = SceneSpec {
            clutter_density: 0.0,
            ..SceneSpec::default()
        };
        assert!(matches!(generate_scene(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn zero_area_roi_is_invalid() {
        let spec = SceneSpec {
            roi: Roi {
                x_min: 0.0,
                x_max: 0.0,
                y_min: -1.0,
                y_max: 1.0,
            },
            ..SceneSpec::default()
        };
        assert!(matches!(generate_scene(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn same_seed_same_scene() {
        let spec = SceneSpec {
            rng_seed: 11,
            objects: ObjectCounts {
                car: 1,
                pedestrian: 2,
                ..Default::default()
            },
            ..SceneSpec::default()
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&SceneSpec { rng_seed: 12, ..spec }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn two_cars() {
        let spec = SceneSpec {
            rng_seed: 3,
            objects: ObjectCounts {
                car: 2,
                ..Default::default()
            },
            ..SceneSpec::default()
        };
        let (cloud, instances) = generate_scene(&spec).unwrap();
        let fg: Vec<_> = cloud.points.iter().filter(|p| p.label.is_foreground()).collect();
        assert!(fg.len() >= 6);
        let mut ids: Vec<u32> = fg.iter().filter_map(|p| p.instance_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 2);
        assert_eq!(instances.len(), 2);
        assert!(instances.iter().all(|i| i.label == ClassLabel::Car));
        assert!(cloud.points.iter().all(RadarPoint::is_valid));
        for id in ids {
            assert!(cloud.points.iter().filter(|p| p.instance_id == Some(id)).count() >= 3);
        }
    }

    #[test]
    fn dataset_is_deterministic() {
        let spec = DatasetSpec {
            n_scenes: 4,
            ..DatasetSpec::default()
        };
        let a = generate_dataset(&spec, 5).unwrap();
        assert_eq!(a, generate_dataset(&spec, 5).unwrap());
        for s in &a {
            assert!((2..=4).contains(&s.instances.len()));
        }
    }
}
