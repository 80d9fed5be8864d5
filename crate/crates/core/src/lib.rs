//! Sequential personalized classification over precomputed embeddings.
//!
//! Every user starts from a shared set of class-mean prototypes and grows a
//! private store of `(embedding, class)` pairs one record at a time. A query
//! is ranked by combining its similarity to the user's own vectors with a
//! down-weighted similarity to the shared prototypes, so a user's history
//! overrides the common classifier locally while unseen regions of the
//! embedding space keep the common behavior.
//!
//! Modules:
//! - [`model`]: class ids, embeddings, user stores and prototype sets
//! - [`engine`]: the ranking kernels and the incremental class-mean baselines
//! - [`prototypes`]: initial class selection, coverage and prototype building
//! - [`eval`]: prequential stream replay, bucket reports, sweeps and
//!   cross-validation of the weight
//! - [`io`]: record, prototype and report files
//! - [`synth`]: the seeded synthetic benchmark

pub mod engine;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod prototypes;
pub mod seed;
pub mod synth;

pub use engine::{
    class_similarity, ncm_rank, ncm_update, register, spc_rank, spc_sum_rank, MeanMode, MeanState,
    RankEntry, Ranking, Scorer, SpcConfig, SumConfig,
};
pub use error::{Error, Result};
pub use eval::{
    bucket_report, cross_validate_w, evaluate, group_streams, mean_accuracy, run_streams,
    run_user_stream, sweep_w, sweep_ws, Bucket, BucketReport, CvResult, EvalConfig, Outcome,
    OutcomeLog, Strategy, UserStream,
};
pub use model::{
    dot, dot_wide, intern_label, normalize, ClassId, Embedding, LabelRegistry, LabeledRecord,
    PrototypeSet, UserStore, VectorSet,
};
pub use prototypes::{
    build_prototypes, coverage, estimate_real_world_accuracy, select_classes, SubsetSpec,
    TrainIndex,
};
pub use synth::{generate_synthetic, write_synthetic, SynthConfig, SynthData};
