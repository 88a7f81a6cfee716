//! Metrics and threshold baselines for comparing resist patterns.

mod metrics;
mod threshold;

pub use metrics::{epe_stats, extract_boundary, pixel_difference, squared_distance_transform, EpeReport};
pub use threshold::{
    fit_fixed_threshold, fit_variable_threshold, fixed_threshold_predict, local_max, variable_threshold_predict,
    FitPair, VarThresholdParams, DEFAULT_WINDOW_PX,
};
