//! On-disk formats: embedding payloads, YOLO label directories, runs and
//! metric tables.

mod embedding;
mod labels;
mod tables;

pub use embedding::{load_embeddings, sidecar_path, write_embeddings, EmbeddingSet, Encoder, Sidecar, DTYPE_F32LE};
pub use labels::{
    label_path, load_labels, parse_label_text, write_labels, AnnotationSet, BBox, ImageLabels, CLAMP_TOLERANCE,
};
pub use tables::{
    load_metrics, load_runs, write_metrics, write_runs, ConfigKey, MetricRecord, MetricTable, Regime, RunRecord,
    RunsTable, ALLOWED_RATIOS, BASELINE,
};
