//! Manifests, training mixes, splits, and human-annotation ingestion.

pub mod annotations;
pub mod manifest;
pub mod mix;
pub mod split;

pub use annotations::{
    filter_human_correct, ingest_annotations, summarize_annotations, AnnotationLabel, AnnotationRecord,
    AnnotationSummary, ImageOrigin, Judgement, SummaryRow,
};
pub use manifest::{CorpusRecord, Manifest, ManifestRecord, PairRole, Sample, SampleOrigin};
pub use mix::{build_mix, CfUnit, MixName, MixSpec};
pub use split::split_train_val;
