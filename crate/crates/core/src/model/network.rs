use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::targets::{residual_wrap, training_targets, Targets};
use crate::error::{Error, Result};
use crate::geometry::BoxMode;
use crate::graph::{build_graph, Graph};
use crate::scene::{ClassLabel, Scene};
use crate::tensor::{
    box_regression_loss, combined_loss, l2_gradient, l2_regularization, weighted_cross_entropy, Activation,
    Gradients, Matrix, Mlp, MlpCache, MlpSpec, MpnnCache, MpnnLayer, ParameterStore,
};

/// Per-point network output.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// `n × 6` class probabilities.
    pub probs: Matrix,
    /// `n × 5` encoded boxes.
    pub boxes: Matrix,
    pub box_mode: BoxMode,
}

impl Prediction {
    pub fn len(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Most probable class and its probability; ties go to the smaller class index.
    pub fn class_of(&self, i: usize) -> (ClassLabel, f64) {
        let c = self.probs.argmax_row(i);
        (
            ClassLabel::from_index(c).expect("probability columns are class indices"),
            self.probs.get(i, c),
        )
    }
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    senders: Vec<usize>,
    receivers: Vec<usize>,
    node: MlpCache,
    edge: Option<MlpCache>,
    layers: Vec<MpnnCache>,
    seg: MlpCache,
    det: MlpCache,
}

/// A scene prepared for training: graph and per-point targets.
#[derive(Clone, Debug)]
pub struct TrainingExample {
    pub graph: Graph,
    pub targets: Targets,
}

/// Loss components of one scene, before weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SceneLoss {
    pub seg: f64,
    pub obj: f64,
}

/// Node/edge embeddings, a stack of message-passing layers and the two heads.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarGnn {
    config: ModelConfig,
    node_scale: Vec<f64>,
    edge_scale: Vec<f64>,
    node_embedding: Mlp,
    edge_embedding: Option<Mlp>,
    layers: Vec<MpnnLayer>,
    seg_head: Mlp,
    det_head: Mlp,
}

impl RadarGnn {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mode = config.mode;
        let node_embedding = Mlp::new(
            "node_embedding",
            mode.node_width(),
            MlpSpec::new(config.node_embedding.clone(), Activation::Relu),
        )?;
        let edge_embedding = if mode.edge_width() > 0 {
            Some(Mlp::new(
                "edge_embedding",
                mode.edge_width(),
                MlpSpec::new(config.edge_embedding.clone(), Activation::Relu),
            )?)
        } else {
            None
        };
        let edge_width = edge_embedding.as_ref().map_or(0, Mlp::output_width);
        let mut width = node_embedding.output_width();
        let mut layers = Vec::with_capacity(config.mpnn_widths.len());
        for (i, &w) in config.mpnn_widths.iter().enumerate() {
            layers.push(MpnnLayer::new(
                &format!("mpnn.{i}"),
                width,
                edge_width,
                MlpSpec::new(vec![w], Activation::Relu),
                MlpSpec::new(vec![w], Activation::Relu),
            )?);
            width = w;
        }
        let seg_head = Mlp::new("seg_head", width, MlpSpec::new(config.seg_head.clone(), Activation::Softmax))?;
        let det_head = Mlp::new("det_head", width, MlpSpec::new(config.det_head.clone(), Activation::Linear))?;
        Ok(Self {
            node_scale: config.node_scale(),
            edge_scale: config.edge_scale(),
            config,
            node_embedding,
            edge_embedding,
            layers,
            seg_head,
            det_head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn box_mode(&self) -> BoxMode {
        self.config.box_mode()
    }

    /// Seeded Kaiming-uniform initialization of every parameter.
    pub fn init_params(&self, seed: u64) -> Result<ParameterStore> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        self.node_embedding.init(&mut store, &mut rng)?;
        if let Some(edge) = &self.edge_embedding {
            edge.init(&mut store, &mut rng)?;
        }
        for layer in &self.layers {
            layer.init(&mut store, &mut rng)?;
        }
        self.seg_head.init(&mut store, &mut rng)?;
        self.det_head.init(&mut store, &mut rng)?;
        Ok(store)
    }

    /// Checks that `params` has exactly this model's layout.
    pub fn check_params(&self, params: &ParameterStore) -> Result<()> {
        let mut expected = ParameterStore::new();
        self.node_embedding.init_zeros(&mut expected)?;
        if let Some(edge) = &self.edge_embedding {
            edge.init_zeros(&mut expected)?;
        }
        for layer in &self.layers {
            layer.init_zeros(&mut expected)?;
        }
        self.seg_head.init_zeros(&mut expected)?;
        self.det_head.init_zeros(&mut expected)?;
        expected.check_same_layout(params)
    }

    pub fn build_graph(&self, cloud: &crate::scene::PointCloud) -> Result<Graph> {
        build_graph(cloud, &self.config.graph, self.config.mode)
    }

    pub fn prepare(&self, scene: &Scene) -> Result<TrainingExample> {
        Ok(TrainingExample {
            graph: self.build_graph(&scene.cloud)?,
            targets: training_targets(&scene.cloud, &scene.instances, self.box_mode())?,
        })
    }

    pub fn forward(&self, params: &ParameterStore, graph: &Graph) -> Result<Prediction> {
        Ok(self.forward_cached(params, graph)?.0)
    }

    pub fn forward_cached(&self, params: &ParameterStore, graph: &Graph) -> Result<(Prediction, ForwardCache)> {
        if graph.mode != self.config.mode {
            return Err(Error::Config(format!(
                "graph built for mode {} but the model expects {}",
                graph.mode, self.config.mode
            )));
        }
        let senders = graph.senders();
        let receivers = graph.receivers();
        let x = graph.node_features.scale_columns(&self.node_scale)?;
        let (mut h, node) = self.node_embedding.forward(params, &x)?;
        let (e, edge) = match &self.edge_embedding {
            Some(mlp) => {
                let input = graph.edge_features.scale_columns(&self.edge_scale)?;
                let (e, cache) = mlp.forward(params, &input)?;
                (e, Some(cache))
            }
            None => (Matrix::zeros(graph.num_edges(), 0), None),
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = layer.forward(params, &h, &e, &senders, &receivers)?;
            h = next;
            layers.push(cache);
        }
        let (probs, seg) = self.seg_head.forward(params, &h)?;
        let (boxes, det) = self.det_head.forward(params, &h)?;
        probs.ensure_finite("class probabilities")?;
        boxes.ensure_finite("box regression")?;
        Ok((
            Prediction {
                probs,
                boxes,
                box_mode: self.box_mode(),
            },
            ForwardCache {
                senders,
                receivers,
                node,
                edge,
                layers,
                seg,
                det,
            },
        ))
    }

    /// Accumulates parameter gradients given the loss gradients w.r.t. both head outputs.
    pub fn backward(
        &self,
        params: &ParameterStore,
        cache: &ForwardCache,
        d_probs: &Matrix,
        d_boxes: &Matrix,
        grads: &mut Gradients,
    ) -> Result<()> {
        let mut d_h = self.seg_head.backward(params, &cache.seg, d_probs, grads)?;
        d_h.add_assign(&self.det_head.backward(params, &cache.det, d_boxes, grads)?)?;
        let mut d_e: Option<Matrix> = None;
        for (layer, layer_cache) in self.layers.iter().zip(&cache.layers).rev() {
            let (d_prev, d_edge) =
                layer.backward(params, layer_cache, &d_h, &cache.senders, &cache.receivers, grads)?;
            d_h = d_prev;
            match &mut d_e {
                Some(acc) => acc.add_assign(&d_edge)?,
                None => d_e = Some(d_edge),
            }
        }
        if let (Some(mlp), Some(edge_cache), Some(d_e)) = (&self.edge_embedding, &cache.edge, &d_e) {
            mlp.backward(params, edge_cache, d_e, grads)?;
        }
        self.node_embedding.backward(params, &cache.node, &d_h, grads)?;
        Ok(())
    }

    /// Segmentation and box losses of one scene with their gradients w.r.t. the head outputs.
    fn head_losses(
        &self,
        prediction: &Prediction,
        targets: &Targets,
        class_weights: &[f64; 6],
    ) -> Result<(SceneLoss, Matrix, Matrix)> {
        let (seg, d_probs) = weighted_cross_entropy(&prediction.probs, &targets.labels, class_weights)?;
        let (obj, d_boxes) = box_regression_loss(
            &prediction.boxes,
            &targets.boxes,
            &targets.mask,
            residual_wrap(targets.box_mode),
            1.0,
        )?;
        Ok((SceneLoss { seg, obj }, d_probs, d_boxes))
    }

    pub fn scene_loss(
        &self,
        params: &ParameterStore,
        example: &TrainingExample,
        class_weights: &[f64; 6],
    ) -> Result<SceneLoss> {
        let prediction = self.forward(params, &example.graph)?;
        Ok(self.head_losses(&prediction, &example.targets, class_weights)?.0)
    }

    /// Gradient of `scale · (α·L_seg + β·L_obj)` for one scene, added into `grads`.
    pub fn accumulate_scene_gradients(
        &self,
        params: &ParameterStore,
        example: &TrainingExample,
        class_weights: &[f64; 6],
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<SceneLoss> {
        let (prediction, cache) = self.forward_cached(params, &example.graph)?;
        let (loss, mut d_probs, mut d_boxes) = self.head_losses(&prediction, &example.targets, class_weights)?;
        d_probs.scale(scale * self.config.loss.alpha);
        d_boxes.scale(scale * self.config.loss.beta);
        self.backward(params, &cache, &d_probs, &d_boxes, grads)?;
        Ok(loss)
    }

    /// Full single-scene objective `α·L_seg + β·L_obj + γ·L_reg`.
    pub fn objective(&self, params: &ParameterStore, example: &TrainingExample, class_weights: &[f64; 6]) -> Result<f64> {
        let loss = self.scene_loss(params, example, class_weights)?;
        Ok(combined_loss(loss.seg, loss.obj, l2_regularization(params), &self.config.loss))
    }

    /// Gradient of [`RadarGnn::objective`] w.r.t. every parameter.
    pub fn objective_gradients(
        &self,
        params: &ParameterStore,
        example: &TrainingExample,
        class_weights: &[f64; 6],
    ) -> Result<(f64, Gradients)> {
        let mut grads = params.zeros_like();
        let loss = self.accumulate_scene_gradients(params, example, class_weights, 1.0, &mut grads)?;
        l2_gradient(params, self.config.loss.gamma, &mut grads)?;
        grads.ensure_finite("gradients")?;
        let total = combined_loss(loss.seg, loss.obj, l2_regularization(params), &self.config.loss);
        Ok((total, grads))
    }

    /// Parameter names belonging to the detection head.
    pub fn det_head_params<'a>(&self, params: &'a ParameterStore) -> Vec<&'a str> {
        params.names().filter(|n| n.starts_with("det_head.")).collect()
    }
}

/// Inverse-frequency class weights `N / (K · N_c)`; classes absent from the data get weight 1.
pub fn inverse_frequency_weights(scenes: &[Scene]) -> [f64; 6] {
    let mut counts = [0usize; ClassLabel::COUNT];
    for scene in scenes {
        for p in &scene.cloud.points {
            counts[p.label.index()] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let mut weights = [1.0; ClassLabel::COUNT];
    for (w, &c) in weights.iter_mut().zip(&counts) {
        if c > 0 {
            *w = total as f64 / (ClassLabel::COUNT as f64 * c as f64);
        }
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InvarianceMode;
    use crate::scene::{PointCloud, RadarPoint};

    pub(crate) fn small_config(mode: InvarianceMode) -> ModelConfig {
        ModelConfig {
            node_embedding: vec![4, 4, 6, 6],
            edge_embedding: vec![4, 4, 5],
            mpnn_widths: vec![6, 5],
            seg_head: vec![5, 6],
            det_head: vec![5, 5],
            ..ModelConfig::for_mode(mode)
        }
    }

    fn cloud() -> PointCloud {
        let pts = [(1.0, 2.0, 0.5, 0.0), (3.0, 1.0, -1.0, 2.0), (2.0, 5.0, 0.0, 0.0), (4.5, 4.0, 2.0, 1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y, vx, vy))| RadarPoint {
                x,
                y,
                vx,
                vy,
                rcs: i as f64,
                t: 0.1 * i as f64,
                instance_id: None,
                label: ClassLabel::Background,
            })
            .collect();
        PointCloud::new("c", pts)
    }

    #[test]
    fn single_point_prediction() {
        for mode in InvarianceMode::ALL {
            let model = RadarGnn::new(small_config(mode)).unwrap();
            let params = model.init_params(1).unwrap();
            let single = PointCloud::new("one", cloud().points[..1].to_vec());
            let pred = model.forward(&params, &model.build_graph(&single).unwrap()).unwrap();
            assert_eq!(pred.len(), 1);
            assert!((pred.probs.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mode_mismatch_is_config_error() {
        let model = RadarGnn::new(small_config(InvarianceMode::Translation)).unwrap();
        let params = model.init_params(1).unwrap();
        let graph = build_graph(&cloud(), &model.config().graph, InvarianceMode::None).unwrap();
        assert!(matches!(model.forward(&params, &graph), Err(Error::Config(_))));
    }

    #[test]
    fn init_is_seeded() {
        let model = RadarGnn::new(small_config(InvarianceMode::TranslationRotation)).unwrap();
        assert_eq!(model.init_params(3).unwrap(), model.init_params(3).unwrap());
        assert_ne!(model.init_params(3).unwrap(), model.init_params(4).unwrap());
        model.check_params(&model.init_params(3).unwrap()).unwrap();
        let none = RadarGnn::new(small_config(InvarianceMode::None)).unwrap();
        assert!(none.check_params(&model.init_params(3).unwrap()).is_err());
        assert!(!none.init_params(0).unwrap().names().any(|n| n.starts_with("edge_embedding")));
    }

    #[test]
    fn inverse_frequency() {
        let mut c = cloud();
        c.points[0].label = ClassLabel::Car;
        c.points[0].instance_id = Some(1);
        let scene = Scene::from_cloud(c).unwrap();
        let w = inverse_frequency_weights(&[scene]);
        assert!((w[ClassLabel::Car.index()] - 4.0 / 6.0).abs() < 1e-15);
        assert!((w[ClassLabel::Background.index()] - 4.0 / 18.0).abs() < 1e-15);
        assert_eq!(w[ClassLabel::Pedestrian.index()], 1.0);
    }
}
