mod layers;
mod loss;
mod matrix;
mod mlp;
mod optim;
mod params;

pub use layers::{max_aggregate, max_aggregate_traced, GcCache, GcLayer, MaxAggregate, MpnnCache, MpnnLayer};
pub use loss::{
    box_regression_loss, combined_loss, huber_loss, l2_gradient, l2_regularization, weighted_cross_entropy,
    wrap_axial_residual, BoxResidualWrap, LossWeights, PROB_FLOOR,
};
pub use matrix::Matrix;
pub use mlp::{softmax_rows, Activation, Mlp, MlpCache, MlpSpec};
pub use optim::Adam;
pub use params::{Gradients, ParameterStore};
