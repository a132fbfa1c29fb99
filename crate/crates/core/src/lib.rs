//! Lecture video to slide alignment.
//!
//! Per-modality frame/slide similarity matrices (OCR text, transcript audio,
//! image features) are fused into a single matrix and decoded into one slide
//! index per video segment by a dynamic program that penalizes slide jumps and
//! deviation from a linear walk through the deck. The [`eval`] module scores
//! decoded alignments against labeled ground truth and [`synth`] generates
//! lectures with a planted path for experiments.

pub mod align;
pub mod cli;
pub mod combine;
pub mod error;
pub mod eval;
pub mod io;
pub mod matrix;
pub mod synth;

pub use align::{dp_align, Alignment, AlignmentConfig, JumpDirectionMode, LinearPenaltyMode};
pub use combine::{
    combine_max, combine_mean, combine_weighted, optimize_weights, ModalityWeights,
    OptimizerSettings, WeightOptimization,
};
pub use error::{Error, Result};
pub use eval::{score_alignment, EvalReport, GroundTruth, Segment};
pub use matrix::{cosine_similarity_matrix, EmbeddingKind, EmbeddingMatrix, Modality, SimilarityMatrix};
pub use synth::{SynthLecture, SynthSpec};

/// Label used in ground truth for segments where no slide is visible.
pub const NO_SLIDE: i64 = -1;
