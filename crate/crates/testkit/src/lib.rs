//! Slow-but-obvious reference implementations and data generators used by
//! the integration suites. Everything here trades speed for transparency:
//! the BPE trainer recounts every pair from scratch, the window enumerator
//! walks every start position, the model evaluator is plain scalar loops,
//! and gradients come from central finite differences.

pub mod bpe_ref;
pub mod corpus_gen;
pub mod grad_ref;
pub mod model_ref;
pub mod windows_ref;

pub use bpe_ref::{model_vocab_and_merges, naive_bpe, NaiveBpe};
pub use corpus_gen::{random_micro_corpus, synth_python_lines};
pub use grad_ref::{finite_diff, grads_of, max_rel_err};
pub use model_ref::{ref_weights, reference_attn, reference_pointer, RefWeights};
pub use windows_ref::enumerate_windows;
