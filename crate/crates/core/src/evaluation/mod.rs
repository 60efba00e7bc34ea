//! Splitting, confusion metrics, the method comparison and the hidden-size
//! sweep, and CSV/SVG report emission.

mod experiment;
mod metrics;
mod report;
mod split;

pub use experiment::{
    fit_classifier, fit_method, method_matrix, neuron_sweep, ClassifierKind, ExperimentData, FeatureTrack, Method,
    MethodConfig, MethodRow, Sweep, SweepPoint,
};
pub use metrics::{confusion, format_percent, format_table_row, metrics, ConfusionMatrix, Metrics};
pub use report::{
    emit_report, metric_svg, metrics_csv, occurrence_csv, occurrence_svg, sweep_csv, sweep_svg, Report, FIG7_FILES,
};
pub use split::{split_dataset, Split, SplitSpec};
