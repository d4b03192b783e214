//! Graph construction: kNN adjacency plus node and edge features per invariance mode.

mod knn;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{PointCloud, RadarPoint};
use crate::tensor::Matrix;

pub use knn::KdTree;

/// Which rigid motions leave the graph features unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceMode {
    None,
    Translation,
    TranslationRotation,
}

impl InvarianceMode {
    pub const ALL: [InvarianceMode; 3] = [
        InvarianceMode::None,
        InvarianceMode::Translation,
        InvarianceMode::TranslationRotation,
    ];

    pub fn node_width(self) -> usize {
        match self {
            InvarianceMode::None => 7,
            InvarianceMode::Translation => 5,
            InvarianceMode::TranslationRotation => 4,
        }
    }

    pub fn edge_width(self) -> usize {
        match self {
            InvarianceMode::None => 0,
            InvarianceMode::Translation => 2,
            InvarianceMode::TranslationRotation => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InvarianceMode::None => "none",
            InvarianceMode::Translation => "translation",
            InvarianceMode::TranslationRotation => "translation_rotation",
        }
    }
}

impl std::fmt::Display for InvarianceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InvarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InvarianceMode::None),
            "translation" => Ok(InvarianceMode::Translation),
            "translation_rotation" | "translation-rotation" => {
                Ok(InvarianceMode::TranslationRotation)
            }
            other => Err(Error::Config(format!("unknown invariance mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Neighbors per receiving node.
    pub k: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { k: 20 }
    }
}

/// Directed edge: messages flow from `sender` into `receiver`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub sender: usize,
    pub receiver: usize,
}

/// The `(A, X, E)` tuple. Row `i` of `node_features` belongs to point `i`;
/// row `j` of `edge_features` to `edges[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub edges: Vec<Edge>,
    pub node_features: Matrix,
    pub edge_features: Matrix,
    pub mode: InvarianceMode,
}

impl Graph {
    pub fn num_nodes(&self) -> usize {
        self.node_features.rows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn senders(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.sender).collect()
    }

    pub fn receivers(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.receiver).collect()
    }

    /// Golden-file dump with arrays `edges`, `X` and `E`.
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Dump {
            mode: InvarianceMode,
            edges: Vec<[usize; 2]>,
            #[serde(rename = "X")]
            x: Vec<Vec<f64>>,
            #[serde(rename = "E")]
            e: Vec<Vec<f64>>,
        }
        let dump = Dump {
            mode: self.mode,
            edges: self.edges.iter().map(|e| [e.sender, e.receiver]).collect(),
            x: self.node_features.to_rows(),
            e: self.edge_features.to_rows(),
        };
        serde_json::to_writer(writer, &dump)?;
        Ok(())
    }
}

/// For each receiver, in-edges from its `min(k, n − 1)` nearest points; ties go to the smaller index.
pub fn knn_edges(cloud: &PointCloud, cfg: &GraphConfig) -> Vec<Edge> {
    let positions = cloud.positions();
    let k = cfg.k.min(positions.len().saturating_sub(1));
    let tree = KdTree::new(&positions);
    let mut edges = Vec::with_capacity(positions.len() * k);
    for receiver in 0..positions.len() {
        edges.extend(
            tree.nearest(receiver, k)
                .into_iter()
                .map(|sender| Edge { sender, receiver }),
        );
    }
    edges
}

/// Incident edges per node, counting both directions.
pub fn connectivity_degree(n: usize, edges: &[Edge]) -> Vec<usize> {
    let mut degree = vec![0; n];
    for e in edges {
        degree[e.sender] += 1;
        degree[e.receiver] += 1;
    }
    degree
}

/// Node feature rows per mode. Timestamps are shifted so the earliest point sits at 0.
pub fn node_features(cloud: &PointCloud, edges: &[Edge], mode: InvarianceMode) -> Matrix {
    let n = cloud.len();
    let degree = connectivity_degree(n, edges);
    let t0 = cloud
        .points
        .iter()
        .map(|p| p.t)
        .fold(f64::INFINITY, f64::min);
    let mut x = Matrix::zeros(n, mode.node_width());
    for (i, p) in cloud.points.iter().enumerate() {
        let c = degree[i] as f64;
        let t = p.t - t0;
        let row = x.row_mut(i);
        match mode {
            InvarianceMode::None => row.copy_from_slice(&[p.x, p.y, p.vx, p.vy, p.rcs, t, c]),
            InvarianceMode::Translation => row.copy_from_slice(&[p.vx, p.vy, p.rcs, t, c]),
            InvarianceMode::TranslationRotation => {
                row.copy_from_slice(&[p.velocity().norm(), p.rcs, t, c])
            }
        }
    }
    x
}

/// Rigid-motion invariant descriptors of a point pair:
/// distance, angle between the velocities, and each velocity's angle to the connecting line.
/// Angles involving a zero vector are 0.
pub fn point_pair_features(sender: &RadarPoint, receiver: &RadarPoint) -> [f64; 4] {
    let line = receiver.position() - sender.position();
    let d = line.norm();
    let psi = sender.velocity().unsigned_angle_to(receiver.velocity());
    let gamma_receiver = receiver.velocity().unsigned_angle_to(line);
    let gamma_sender = sender.velocity().unsigned_angle_to(line);
    [d, psi, gamma_receiver, gamma_sender]
}

pub fn edge_features(cloud: &PointCloud, edges: &[Edge], mode: InvarianceMode) -> Matrix {
    let mut e = Matrix::zeros(edges.len(), mode.edge_width());
    for (j, edge) in edges.iter().enumerate() {
        let s = &cloud.points[edge.sender];
        let r = &cloud.points[edge.receiver];
        match mode {
            InvarianceMode::None => {}
            InvarianceMode::Translation => {
                e.row_mut(j).copy_from_slice(&[r.x - s.x, r.y - s.y]);
            }
            InvarianceMode::TranslationRotation => {
                e.row_mut(j).copy_from_slice(&point_pair_features(s, r));
            }
        }
    }
    e
}

pub fn build_graph(cloud: &PointCloud, cfg: &GraphConfig, mode: InvarianceMode) -> Result<Graph> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("cannot build a graph from an empty cloud"));
    }
    if cfg.k == 0 {
        return Err(Error::Config("graph k must be at least 1".into()));
    }
    let edges = knn_edges(cloud, cfg);
    let node_features = node_features(cloud, &edges, mode);
    let edge_features = edge_features(cloud, &edges, mode);
    Ok(Graph {
        edges,
        node_features,
        edge_features,
        mode,
    })
}
