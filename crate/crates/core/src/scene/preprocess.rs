use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassLabel, PointCloud};
use crate::error::{Error, Result};

/// Merges time-ordered frames, keeping points within `window` seconds of the latest timestamp.
pub fn accumulate_frames(frames: &[PointCloud], window: f64) -> Result<PointCloud> {
    let last = frames
        .last()
        .ok_or(Error::EmptyInput("accumulate_frames needs at least one frame"))?;
    if window.is_nan() || window <= 0.0 {
        return Err(Error::Config(format!("accumulation window must be positive, got {window}")));
    }
    let t_latest = frames
        .iter()
        .flat_map(|f| f.points.iter().map(|p| p.t))
        .fold(f64::NEG_INFINITY, f64::max);
    let cutoff = t_latest - window;
    let points = frames
        .iter()
        .flat_map(|f| f.points.iter())
        .filter(|p| p.t >= cutoff)
        .copied()
        .collect();
    Ok(PointCloud::new(last.frame_id.clone(), points))
}

/// Axis-aligned crop region in the ego frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Roi {
    /// 100 m × 100 m ahead of the rear axle.
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 100.0,
            y_min: -50.0,
            y_max: 50.0,
        }
    }
}

impl Roi {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }
}

pub fn crop_roi(cloud: &PointCloud, roi: &Roi) -> PointCloud {
    PointCloud::new(
        cloud.frame_id.clone(),
        cloud
            .points
            .iter()
            .filter(|p| roi.contains(p.x, p.y))
            .copied()
            .collect(),
    )
}

/// Source-taxonomy name → class. Serializes as a plain JSON object so it can be edited by hand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassMap(BTreeMap<String, ClassLabel>);

impl Default for ClassMap {
    fn default() -> Self {
        use ClassLabel::*;
        let table = [
            ("car", Car),
            ("large_vehicle", LargeVehicle),
            ("truck", LargeVehicle),
            ("bus", LargeVehicle),
            ("train", LargeVehicle),
            ("bicycle", TwoWheeler),
            ("motorized_two_wheeler", TwoWheeler),
            ("two_wheeler", TwoWheeler),
            ("pedestrian", Pedestrian),
            ("pedestrian_group", PedestrianGroup),
            ("animal", Background),
            ("other", Background),
            ("static", Background),
            ("background", Background),
        ];
        Self(table.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

impl ClassMap {
    pub fn new(table: BTreeMap<String, ClassLabel>) -> Self {
        Self(table)
    }

    pub fn map(&self, raw_label: &str) -> Result<ClassLabel> {
        self.0
            .get(raw_label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(raw_label.to_string()))
    }

    pub fn insert(&mut self, raw_label: impl Into<String>, class: ClassLabel) {
        self.0.insert(raw_label.into(), class);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Largest-remainder apportionment of `n` items over `ratios`; remainders tie toward the earlier split.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Seeded shuffle of whole sequences, then largest-remainder partition into train/val/test.
pub fn split_dataset<T: Clone>(
    sequence_ids: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit<T>> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Config(format!("split ratios must be non-negative: {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must sum to 1, got {total}")));
    }
    let splits = ratios.iter().filter(|r| **r > 0.0).count();
    if sequence_ids.len() < splits {
        return Err(Error::InsufficientData(format!(
            "{} sequences cannot fill {splits} splits",
            sequence_ids.len()
        )));
    }
    let mut items = sequence_ids.to_vec();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [n_train, n_val, _] = apportion(items.len(), &ratios);
    let test = items.split_off(n_train + n_val);
    let val = items.split_off(n_train);
    Ok(DatasetSplit {
        train: items,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::RadarPoint;

    fn at(x: f64, y: f64, t: f64) -> RadarPoint {
        RadarPoint {
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            rcs: 0.0,
            t,
            instance_id: None,
            label: ClassLabel::Background,
        }
    }

    #[test]
    fn accumulation_window() {
        let frames: Vec<_> = [0.0, 0.3, 0.7]
            .iter()
            .map(|&t| PointCloud::new(format!("f{t}"), vec![at(1.0, 0.0, t)]))
            .collect();
        let out = accumulate_frames(&frames, 0.5).unwrap();
        let ts: Vec<f64> = out.points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0.3, 0.7]);
        assert_eq!(out.frame_id, "f0.7");

        let spanning: Vec<_> = [0.0, 0.25, 0.5]
            .iter()
            .map(|&t| PointCloud::new("f", vec![at(1.0, 0.0, t)]))
            .collect();
        assert_eq!(accumulate_frames(&spanning, 0.5).unwrap().len(), 3);

        let single = PointCloud::new("only", vec![at(1.0, 0.0, 4.0), at(2.0, 0.0, 1.0)]);
        assert_eq!(accumulate_frames(std::slice::from_ref(&single), 0.1).unwrap().len(), 1);
        assert_eq!(accumulate_frames(std::slice::from_ref(&single), 10.0).unwrap(), single);

        assert!(matches!(accumulate_frames(&[], 0.5), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn crop() {
        let roi = Roi::default();
        assert!(roi.contains(50.0, 0.0));
        assert!(!roi.contains(101.0, 0.0));
        let xs = [50.0, 101.0, 0.0, 100.0, -1.0, 10.0, 20.0, 30.0, 40.0, 60.0];
        let ys = [0.0, 0.0, -50.0, 50.0, 0.0, 51.0, -10.0, 10.0, 0.0, 0.0];
        let cloud = PointCloud::new("c", xs.iter().zip(ys).map(|(&x, y)| at(x, y, 0.0)).collect());
        assert_eq!(crop_roi(&cloud, &roi).len(), 7);
    }

    #[test]
    fn default_class_table() {
        let m = ClassMap::default();
        assert_eq!(m.map("car").unwrap(), ClassLabel::Car);
        assert_eq!(m.map("truck").unwrap(), ClassLabel::LargeVehicle);
        assert_eq!(m.map("animal").unwrap(), ClassLabel::Background);
        assert!(matches!(m.map("spaceship"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn class_map_is_editable_json() {
        let m: ClassMap = serde_json::from_str(r#"{"lorry": "large_vehicle"}"#).unwrap();
        assert_eq!(m.map("lorry").unwrap(), ClassLabel::LargeVehicle);
    }

    #[test]
    fn split_sizes() {
        let ids: Vec<u32> = (0..100).collect();
        let s = split_dataset(&ids, [0.64, 0.16, 0.20], 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (64, 16, 20));

        let ten: Vec<u32> = (0..10).collect();
        let s = split_dataset(&ten, [0.64, 0.16, 0.20], 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));

        let s = split_dataset(&[42], [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(s.train, vec![42]);

        assert!(matches!(
            split_dataset(&[1, 2], [0.64, 0.16, 0.20], 0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            split_dataset(&ten, [0.5, 0.2, 0.2], 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_is_seeded() {
        let ids: Vec<u32> = (0..40).collect();
        let a = split_dataset(&ids, [0.64, 0.16, 0.20], 9).unwrap();
        let b = split_dataset(&ids, [0.64, 0.16, 0.20], 9).unwrap();
        let c = split_dataset(&ids, [0.64, 0.16, 0.20], 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
