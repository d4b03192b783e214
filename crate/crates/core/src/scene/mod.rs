//! Radar point-cloud data model, preprocessing, synthetic scenes and rigid transforms.

mod io;
mod preprocess;
mod synth;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_enclosing_rect, AbsoluteBox, Vec2};

pub use io::{read_scenes, read_scenes_from, write_scenes, write_scenes_to, PointRecord, SceneRecord};
pub use preprocess::{accumulate_frames, crop_roi, split_dataset, ClassMap, DatasetSplit, Roi};
pub use synth::{
    generate_dataset, generate_scene, ClassTemplate, ClassTemplates, DatasetSpec, NoiseSpec,
    ObjectCounts, SceneSpec,
};
pub use transform::{apply_transform, RigidTransform2D};

/// The five object classes plus background. Indices follow declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Pedestrian,
    PedestrianGroup,
    TwoWheeler,
    Car,
    LargeVehicle,
    Background,
}

impl ClassLabel {
    pub const COUNT: usize = 6;
    pub const ALL: [ClassLabel; 6] = [
        ClassLabel::Pedestrian,
        ClassLabel::PedestrianGroup,
        ClassLabel::TwoWheeler,
        ClassLabel::Car,
        ClassLabel::LargeVehicle,
        ClassLabel::Background,
    ];
    pub const FOREGROUND: [ClassLabel; 5] = [
        ClassLabel::Pedestrian,
        ClassLabel::PedestrianGroup,
        ClassLabel::TwoWheeler,
        ClassLabel::Car,
        ClassLabel::LargeVehicle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_foreground(self) -> bool {
        self != ClassLabel::Background
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Pedestrian => "pedestrian",
            ClassLabel::PedestrianGroup => "pedestrian_group",
            ClassLabel::TwoWheeler => "two_wheeler",
            ClassLabel::Car => "car",
            ClassLabel::LargeVehicle => "large_vehicle",
            ClassLabel::Background => "background",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// One radar detection. `instance_id` is set exactly when `label` is a foreground class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub rcs: f64,
    pub t: f64,
    pub instance_id: Option<u32>,
    pub label: ClassLabel,
}

impl RadarPoint {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.vx, self.vy, self.rcs, self.t]
            .iter()
            .all(|v| v.is_finite())
            && self.t >= 0.0
            && self.instance_id.is_some() == self.label.is_foreground()
    }
}

/// An ordered point cloud; point indices identify reference points downstream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub frame_id: String,
    pub points: Vec<RadarPoint>,
}

impl PointCloud {
    pub fn new(frame_id: impl Into<String>, points: Vec<RadarPoint>) -> Self {
        Self {
            frame_id: frame_id.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(RadarPoint::position).collect()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.points.iter().map(|p| p.label).collect()
    }
}

/// A ground-truth object: its class and the minimum enclosing rectangle of its points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: u32,
    pub label: ClassLabel,
    pub bbox: AbsoluteBox,
}

/// A cloud together with its ground-truth instances.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub cloud: PointCloud,
    pub instances: Vec<Instance>,
}

impl Scene {
    /// Derives the instances from the annotated points.
    pub fn from_cloud(cloud: PointCloud) -> Result<Self> {
        let instances = ground_truth_instances(&cloud)?;
        Ok(Self { cloud, instances })
    }

    pub fn instance(&self, id: u32) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

/// Fits one box per annotated instance, ordered by instance id.
pub fn ground_truth_instances(cloud: &PointCloud) -> Result<Vec<Instance>> {
    let mut groups: std::collections::BTreeMap<u32, (ClassLabel, Vec<Vec2>)> = Default::default();
    for p in &cloud.points {
        if let Some(id) = p.instance_id {
            let entry = groups.entry(id).or_insert_with(|| (p.label, Vec::new()));
            if entry.0 != p.label {
                return Err(Error::Target(format!(
                    "instance {id} mixes labels {} and {}",
                    entry.0, p.label
                )));
            }
            entry.1.push(p.position());
        }
    }
    groups
        .into_iter()
        .map(|(id, (label, pts))| {
            Ok(Instance {
                id,
                label,
                bbox: min_enclosing_rect(&pts)?,
            })
        })
        .collect()
}
