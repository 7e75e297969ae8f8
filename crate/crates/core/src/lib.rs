//! Emotion-cause pair extraction (ECPE) as extractive question answering.
//!
//! A document is a sequence of clauses. Emotion and cause clauses are found by
//! asking a span-extraction model a question over the concatenated clauses and
//! mapping the best answer span back to the clause it overlaps most.
//!
//! Two inference schemes are provided:
//!
//! - **Indep-QA**: fixed "emotion" and "cause" questions answered independently.
//! - **Guided-QA**: the clause predicted for the first question becomes the
//!   question of the second stage (emotion-first or cause-first).
//!
//! The crate is organised along the data flow:
//!
//! | module | role |
//! |--------|------|
//! | [`corpus`] | corpus parsing, jsonl schema, statistics, splits |
//! | [`qa_task`] | context construction, questions, gold spans |
//! | [`encoder`] | span-scoring encoders, span search, training |
//! | [`mapping`] | span-to-clause mapping |
//! | [`pipeline`] | training-set construction and Indep/Guided/ECE inference |
//! | [`metrics`] | set-based precision / recall / F1 |

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod mapping;
pub mod metrics;
pub mod pipeline;
pub mod qa_task;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
