//! Fixtures shared by the benchmarks.
use radargnn::scene::{generate_dataset, DatasetSpec};
use radargnn::{InvarianceMode, ModelConfig, Scene};

/// One synthetic scene with exactly `objects` objects.
pub fn scene(objects: usize, seed: u64) -> Scene {
    let spec = DatasetSpec {
        n_scenes: 1,
        objects_per_scene: (objects, objects),
        ..DatasetSpec::default()
    };
    generate_dataset(&spec, seed).expect("valid spec").remove(0)
}

/// Default layer counts with every width scaled to `width`.
pub fn model_config(mode: InvarianceMode, width: usize) -> ModelConfig {
    ModelConfig {
        node_embedding: vec![width / 2, width / 2, width, width],
        edge_embedding: vec![width / 2, width / 2, width],
        mpnn_widths: vec![width; 3],
        seg_head: vec![width, 6],
        det_head: vec![width, 5],
        ..ModelConfig::for_mode(mode)
    }
}
