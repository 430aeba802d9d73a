//! Core library for `judgekit`: detecting whether groups of evaluation
//! judgments (scores over candidate content) were produced by a human
//! annotator or by an LLM judge.
//!
//! The pipeline builds an instance-level feature vector by concatenating
//! the raw judgment scores, LLM-derived quality scores, and linguistic
//! statistics of the candidate text, trains a lightweight classifier on
//! labeled instances, and aggregates instance logits over a judgment
//! group to make the group-level call. A companion `theory` module
//! implements the detectability index that predicts how group size,
//! judgment dimensionality, and rating-scale granularity shape detection
//! difficulty, together with a synthetic corpus generator for validating
//! those predictions end to end.

pub mod classifier;
pub mod data;
pub mod extract;
pub mod features;
pub mod linguistic;
pub mod llm;
pub mod pipeline;
pub mod sweep;
pub mod theory;

pub use data::{Dataset, JudgmentGroup, JudgmentInstance, JudgmentScore, JudgmentType, Label};
pub use features::{Ablation, FeatureMatrix, FeatureSchema, FeatureVector};
