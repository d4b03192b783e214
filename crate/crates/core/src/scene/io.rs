use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassLabel, ClassMap, PointCloud, RadarPoint};
use crate::error::{Error, Result};

/// One line of a scene file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub frame_id: String,
    pub points: Vec<PointRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub rcs: f64,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<u32>,
    pub label: String,
}

impl SceneRecord {
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        Self {
            frame_id: cloud.frame_id.clone(),
            points: cloud
                .points
                .iter()
                .map(|p| PointRecord {
                    x: p.x,
                    y: p.y,
                    vx: p.vx,
                    vy: p.vy,
                    rcs: p.rcs,
                    t: p.t,
                    instance_id: p.instance_id,
                    label: p.label.name().to_string(),
                })
                .collect(),
        }
    }

    /// Maps raw labels through `classes`; a point without an instance id is background.
    pub fn into_cloud(self, classes: &ClassMap) -> Result<PointCloud> {
        let points = self
            .points
            .into_iter()
            .map(|r| {
                let mapped = classes.map(&r.label)?;
                let (label, instance_id) = match r.instance_id {
                    Some(id) if mapped.is_foreground() => (mapped, Some(id)),
                    _ => (ClassLabel::Background, None),
                };
                let p = RadarPoint {
                    x: r.x,
                    y: r.y,
                    vx: r.vx,
                    vy: r.vy,
                    rcs: r.rcs,
                    t: r.t,
                    instance_id,
                    label,
                };
                if !p.is_valid() {
                    return Err(Error::Config(format!(
                        "invalid point in frame {}: {p:?}",
                        self.frame_id
                    )));
                }
                Ok(p)
            })
            .collect::<Result<_>>()?;
        Ok(PointCloud::new(self.frame_id, points))
    }
}

pub fn read_scenes_from<R: Read>(reader: R, classes: &ClassMap) -> Result<Vec<PointCloud>> {
    let mut clouds = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SceneRecord = serde_json::from_str(&line)?;
        clouds.push(record.into_cloud(classes)?);
    }
    Ok(clouds)
}

pub fn write_scenes_to<W: Write>(mut writer: W, clouds: &[PointCloud]) -> Result<()> {
    for cloud in clouds {
        serde_json::to_writer(&mut writer, &SceneRecord::from_cloud(cloud))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a JSON-lines scene file, one scene per line.
pub fn read_scenes(path: impl AsRef<Path>, classes: &ClassMap) -> Result<Vec<PointCloud>> {
    read_scenes_from(File::open(path)?, classes)
}

pub fn write_scenes(path: impl AsRef<Path>, clouds: &[PointCloud]) -> Result<()> {
    write_scenes_to(BufWriter::new(File::create(path)?), clouds)
}
