//! Corpus mining for noisy document collections.
//!
//! The pipeline runs in stages, each usable on its own:
//! quality gating of raw documents against a dictionary, tokenization
//! and stemming into a document-term matrix, LDA topic models fit by
//! variational EM (with a collapsed Gibbs sampler as a diagnostic
//! backend), topic-count selection over a grid of candidate K, and
//! corpus summaries (top terms, group contrasts, time series).
//!
//! Every randomized stage takes an explicit seed and produces identical
//! results for identical inputs, independent of thread count.

pub mod analysis;
pub mod corpus;
mod error;
pub mod lda;
pub mod mat;
pub mod prep;
pub mod quality;
pub mod selection;

mod porter;

pub use error::{Error, Result};
