//! Word embeddings trained with contexts augmented by word n-grams and
//! character n-grams.
//!
//! The crate covers the whole pipeline: corpus ingestion and subsampling
//! ([`corpus`]), hashed feature extraction ([`features`]), the negative
//! sampling trainer for CBOW, skip-gram and sentence-level (Sent2Vec style)
//! contexts ([`trainer`]), word-similarity and analogy benchmarks
//! ([`evaluation`]) and word2vec-compatible vector files ([`model_store`]).

pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod model_store;
pub mod trainer;

pub use corpus::{EncodedCorpus, Vocabulary};
pub use evaluation::{AnalogyDataset, EvalReport, SimilarityDataset};
pub use features::IndexLayout;
pub use model_store::{VectorFormat, WordVectors};
pub use trainer::{ModelVariant, TrainingConfig};
