//! Website text classification through word embeddings and false positive
//! reduction.
//!
//! The pipeline turns each document into a set of short, marker-centered
//! sentences, encodes every sentence as a `(2k+1) x d` matrix of word vectors,
//! classifies sentences with a small Conv1D network trained on labels
//! inherited from their documents, and finally reconstructs a document-level
//! probability either from the maximum sentence probability or with a small
//! MLP reading a histogram of sentence probabilities.
//!
//! Module map:
//!
//! - [`corpus`]: documents, tokenization, vocabularies, splits and the
//!   synthetic corpus generator.
//! - [`embedding`]: CBOW negative-sampling word embeddings.
//! - [`marker`]: marker-word recruitment from user seeds.
//! - [`segmenter`]: marker-centered segmentation with inherited labels.
//! - [`encoder`]: sentence matrices and the term-document baseline encodings.
//! - [`nn`]: the neural network engine (layers, optimizers, training loop).
//! - [`pipeline`]: the end-to-end classifier and the bag-of-words baseline.
//! - [`eval`]: metrics, distribution summaries, grid search and reports.

pub mod corpus;
pub mod embedding;
pub mod encoder;
mod error;
pub mod eval;
pub mod marker;
pub mod nn;
pub mod pipeline;
pub mod segmenter;
mod util;

pub use error::{Error, Result};
pub use util::derive_seed;
