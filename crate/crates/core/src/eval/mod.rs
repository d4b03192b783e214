mod invariance;
mod metrics;
mod reduction;

pub use invariance::{
    decoded_boxes, invariance_report, transform_deviation, Deviation, InvarianceRow, TransformFamily, MAX_TRANSLATION,
};
pub use metrics::{
    average_precision, confusion_matrix, evaluate, evaluate_outputs, f1_from_confusion, macro_f1,
    mean_average_precision, predict_scenes, ClassAp, ClassRow, ConfusionMatrix, EvalReport, F1Report, PrCurve,
    SceneOutput, EVAL_IOU_THRESHOLD,
};
pub use reduction::{data_reduction_study, nested_subsets, ReductionConfig, ReductionMetric, ReductionReport, ReductionRow};
