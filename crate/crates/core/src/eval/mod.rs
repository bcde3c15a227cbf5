//! Measurement: retrieval recall, ITM differences, agreement, statistics.

pub mod agreement;
pub mod histogram;
pub mod itm;
pub mod labels;
pub mod retrieval;
pub mod stats;

pub use agreement::{fleiss_kappa, fleiss_kappa_labeled, ratings_from_annotations, AgreementReport};
pub use histogram::{diff_histogram, DiffHistogram, MetricHistogram};
pub use itm::{build_itm_tuples, itm_diffs, ItmDiffSamples, ItmTuple};
pub use labels::{format_percent, label_frequency, taxonomy_error_rate, TaxonomyResult, HUMAN_WORDS};
pub use retrieval::{retrieval_recall, retrieval_recall_itm, Direction, RetrievalReport, DEFAULT_KS};
pub use stats::{one_tailed_t_test, one_tailed_t_test_with, pearson_with_p, SignificanceResult, TTestKind};
