//! Rank-correlation metrics, evaluation reports, ablations and inspection.

mod ablation;
mod metrics;
mod report;
mod views;

pub use ablation::{ablate, ablate_variant, ablation_table, AblationEntry, AblationReport, AblationRow};
pub use metrics::{average_ranks, mean_std, mse, srcc};
pub use report::{
    evaluate, evaluate_records, inspect, predict_all, EvaluationReport, HeadBreakdown, HeadSummary, Inspection,
    PlotSeries,
};
pub use views::{parse_view, view_config, view_record, view_records, Complete, FeatureView, NoAttributes, WithoutAttribute};
