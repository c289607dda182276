//! Utterance emotion dynamics over short texts.
//!
//! The pipeline turns documents into emotion arcs (sliding-window means of
//! lexicon scores over emotion words) and summarizes each arc with four
//! metrics: average, variability, rise rate and recovery rate. Per-unit metrics
//! are then averaged per group, with groups below a minimum unit count left
//! empty.
//!
//! The numeric core is generic over [`Scalar`], implemented for `f32`, `f64`
//! and exact rationals ([`Rational`]). The aliases below fix the scalar to
//! `f64`, which is what the command-line tool uses.

pub mod arcs;
pub mod corpus;
pub mod dynamics;
pub mod lexicon;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod textproc;

pub use scalar::Scalar;

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Lexicon = lexicon::Lexicon<f64>;
pub type NeutralBand = lexicon::NeutralBand<f64>;
pub type ScoredSequence = arcs::ScoredSequence<f64>;
pub type EmotionArc = arcs::EmotionArc<f64>;
pub type HomeBase = dynamics::HomeBase<f64>;
pub type UedMetrics = dynamics::UedMetrics<f64>;
pub type DynamicsConfig = dynamics::DynamicsConfig<f64>;
pub type UnitRecord = report::UnitRecord<f64>;
pub type GroupSummary = report::GroupSummary<f64>;
