//! Core library for a subword-level code-completion pipeline.
//!
//! The pipeline runs in four stages, each owned by one module:
//!
//! 1. [`corpus`] — flatten source files into a one-document-per-line corpus
//!    and split it into train/eval halves.
//! 2. [`bpe`] — learn a byte-pair-encoding subword vocabulary on the corpus
//!    and encode/decode documents as token-id sequences.
//! 3. [`samples`] — slice encoded documents into fixed-width (window, label)
//!    training samples with a compact binary on-disk format.
//! 4. [`model`] / [`harness`] — train and evaluate two next-token models (an
//!    attention-enhanced LSTM and a pointer-mixture network) built on the
//!    [`nn`] reverse-mode autodiff core.

pub mod bpe;
pub mod corpus;
pub mod harness;
pub mod model;
pub mod nn;
pub mod samples;
