//! Multilayer-perceptron regressor and regression metrics.
//!
//! Targets are learned on `[0, 1]` through the dataset's rescale ranges and
//! mapped back to raw units at estimation time.

mod metrics;
mod network;

pub use metrics::{
    evaluate_repeated, mean, metrics, metrics_by_dimension, sample_sd, Histogram, Metrics, RepeatedEstimate,
    HISTOGRAM_BINS,
};
pub use network::{
    cost, predict_split, train, train_with, Activation, Architecture, EpochRecord, Estimate, Gradient,
    Hyperparameters, LayerRecord, ModelRecord, RegressorModel, TrainingReport, EXTRAPOLATION_BAND, MODEL_VERSION,
};

#[cfg(test)]
mod tests;
