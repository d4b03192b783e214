mod checkpoint;
mod config;
mod network;
mod postprocess;
mod targets;
mod train;

pub use checkpoint::{Checkpoint, NamedArray, CHECKPOINT_VERSION};
pub use config::{default_box_mode, default_edge_scale, default_node_scale, LrSchedule, ModelConfig, TrainConfig};
pub use network::{inverse_frequency_weights, ForwardCache, Prediction, RadarGnn, SceneLoss, TrainingExample};
pub use postprocess::{greedy_nms, postprocess, Detection};
pub use targets::{reference_pair, reference_points, residual_wrap, training_targets, Targets};
pub use train::{dataset_loss, prepare_examples, resolve_class_weights, train, EpochRecord};
