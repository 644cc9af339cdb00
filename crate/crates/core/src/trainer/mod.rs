//! Negative-sampling SGD over CBOW, skip-gram and sentence-level contexts.
//!
//! A context is a bag of input-matrix rows (unigrams, hashed char n-grams and
//! hashed word n-grams) whose mean is scored against the output vector of the
//! target word.

mod config;
mod context;
mod run;
mod sgd;
mod store;

pub use config::{ConfigError, ModelVariant, TrainingConfig};
pub use context::{assemble_context_cbow, assemble_context_sent2vec, sample_window, ContextBag, ContextBuilder};
pub use run::{
    extract_word_vectors, learning_rate, run_training, train_corpus, Checkpoint, CheckpointInfo, RunOptions,
    TrainError, TrainingOutcome,
};
pub use sgd::{
    forward, log_sigmoid, negative_sampling_loss, sigmoid, train_example, ExampleTrainer, InputUpdate,
    UnigramNoiseTable, NOISE_EXPONENT,
};
pub use store::{EmbeddingStore, Scalar};
