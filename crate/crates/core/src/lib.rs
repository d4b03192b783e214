//! Radar point cloud object detection and semantic segmentation with graph neural networks
//! whose inputs are invariant to translations and rotations of the scene.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod graph;
pub mod model;
pub mod scene;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{AbsoluteBox, BoxMode, EncodedBox, Vec2};
pub use graph::{build_graph, Graph, GraphConfig, InvarianceMode};
pub use model::{Detection, ModelConfig, Prediction, RadarGnn, TrainConfig};
pub use scene::{ClassLabel, Instance, PointCloud, RadarPoint, RigidTransform2D, Scene};
pub use tensor::{Matrix, ParameterStore};
