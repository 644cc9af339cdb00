use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::sgd::InputUpdate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    Cbow,
    CbowChar,
    Skipgram,
    SkipgramChar,
    Sent2vec,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 5] = [
        ModelVariant::Cbow,
        ModelVariant::CbowChar,
        ModelVariant::Skipgram,
        ModelVariant::SkipgramChar,
        ModelVariant::Sent2vec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Cbow => "cbow",
            ModelVariant::CbowChar => "cbow_char",
            ModelVariant::Skipgram => "skipgram",
            ModelVariant::SkipgramChar => "skipgram_char",
            ModelVariant::Sent2vec => "sent2vec",
        }
    }

    pub fn uses_char_ngrams(self) -> bool {
        matches!(self, ModelVariant::CbowChar | ModelVariant::SkipgramChar)
    }

    pub fn is_skipgram(self) -> bool {
        matches!(self, ModelVariant::Skipgram | ModelVariant::SkipgramChar)
    }

    pub fn is_cbow(self) -> bool {
        matches!(self, ModelVariant::Cbow | ModelVariant::CbowChar)
    }

    /// Whether training uses a (dynamic) sliding window.
    pub fn uses_window(self) -> bool {
        self != ModelVariant::Sent2vec
    }

    /// Sentence contexts are averaged; window contexts pass the full
    /// gradient to each row.
    pub fn input_update(self) -> InputUpdate {
        match self {
            ModelVariant::Sent2vec => InputUpdate::Averaged,
            _ => InputUpdate::Full,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ConfigError::UnknownVariant(s.to_owned()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown model variant `{0}`")]
    UnknownVariant(String),
    #[error("{field} is out of range: {reason}")]
    OutOfRange { field: &'static str, reason: &'static str },
    #[error("{0}")]
    Conflict(String),
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub model_variant: ModelVariant,
    pub dim: usize,
    pub window_size: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub subsampling_t: f64,
    /// Highest word n-gram order used in contexts; 1 disables word n-grams.
    pub word_ngram_order: usize,
    pub word_bucket: usize,
    pub char_bucket: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub negatives: usize,
    /// Word n-grams removed at random from every context.
    pub dropout_k: usize,
    pub halt_fraction: f64,
    pub checkpoint_count: usize,
    pub min_count: u64,
    pub max_vocab: usize,
    pub seed: u64,
}

impl TrainingConfig {
    /// The published configuration for `variant` with word n-grams up to
    /// `word_ngram_order` (1 = unigrams only).
    ///
    /// Combinations without a published column (plain CBOW with word
    /// n-grams) borrow the word n-gram settings of the char CBOW columns.
    pub fn preset(variant: ModelVariant, word_ngram_order: usize) -> Self {
        use ModelVariant::*;
        let order = word_ngram_order.clamp(1, 3);
        let mut cfg = TrainingConfig {
            model_variant: variant,
            dim: 300,
            window_size: 10,
            epochs: 9,
            initial_lr: 0.05,
            subsampling_t: 1e-4,
            word_ngram_order: order,
            word_bucket: 0,
            char_bucket: 0,
            min_n: 0,
            max_n: 0,
            negatives: 5,
            dropout_k: 0,
            halt_fraction: 1.0,
            checkpoint_count: 20,
            min_count: 5,
            max_vocab: 750_000,
            seed: 0,
        };
        match variant {
            Sent2vec => {
                cfg.initial_lr = 0.2;
                cfg.negatives = 10;
                cfg.window_size = 0;
                cfg.subsampling_t = [1e-5, 5e-5, 5e-6][order - 1];
                cfg.dropout_k = if order > 1 { 4 } else { 0 };
            }
            Cbow | CbowChar => {
                cfg.epochs = if variant == Cbow { 5 } else { 9 };
                cfg.dropout_k = if order > 1 { 2 } else { 0 };
                cfg.halt_fraction = match (variant, order) {
                    (Cbow, _) => 0.6,
                    (_, 1) => 0.75,
                    _ => 0.8,
                };
            }
            Skipgram | SkipgramChar => {
                cfg.epochs = 15;
                cfg.window_size = 5;
            }
        }
        if order > 1 {
            cfg.word_bucket = [0, 2_000_000, 4_000_000][order - 1];
        }
        if variant.uses_char_ngrams() {
            cfg.char_bucket = 2_000_000;
            cfg.min_n = 3;
            cfg.max_n = 6;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn range(ok: bool, field: &'static str, reason: &'static str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { field, reason })
            }
        }
        let v = self.model_variant;
        range(self.dim >= 1, "dim", "must be at least 1")?;
        range(self.epochs >= 1, "epochs", "must be at least 1")?;
        range(
            self.initial_lr > 0.0 && self.initial_lr.is_finite(),
            "lr",
            "must be positive and finite",
        )?;
        range(
            self.subsampling_t >= 0.0 && self.subsampling_t.is_finite(),
            "t",
            "must be non-negative",
        )?;
        range(
            (1..=3).contains(&self.word_ngram_order),
            "word-ngrams",
            "must be 1, 2 or 3",
        )?;
        range(self.negatives >= 1, "neg", "must be at least 1")?;
        range(
            self.halt_fraction > 0.0 && self.halt_fraction <= 1.0,
            "halt",
            "must lie in (0, 1]",
        )?;
        range(self.checkpoint_count >= 1, "checkpoints", "must be at least 1")?;
        range(self.min_count >= 1, "min-count", "must be at least 1")?;
        range(self.max_vocab >= 1, "max-vocab", "must be at least 1")?;
        if v.uses_window() {
            range(self.window_size >= 1, "ws", "must be at least 1")?;
        }

        if v.uses_char_ngrams() {
            range(
                self.char_bucket > 0,
                "char-bucket",
                "must be positive for char variants",
            )?;
            range(
                self.min_n >= 1 && self.min_n <= self.max_n,
                "minn/maxn",
                "need 1 <= minn <= maxn",
            )?;
        } else if self.char_bucket > 0 {
            return Err(ConfigError::Conflict(format!(
                "char n-gram bucket set for non-char model `{v}`"
            )));
        }

        if self.word_ngram_order >= 2 {
            if v.is_skipgram() {
                return Err(ConfigError::Conflict(format!(
                    "word n-grams are not supported by `{v}`"
                )));
            }
            range(
                self.word_bucket > 0,
                "word-bucket",
                "must be positive with word n-grams",
            )?;
        } else {
            if self.word_bucket > 0 {
                return Err(ConfigError::Conflict(
                    "word n-gram bucket set without word n-grams".into(),
                ));
            }
            if self.dropout_k > 0 {
                return Err(ConfigError::Conflict(
                    "word n-gram dropout set without word n-grams".into(),
                ));
            }
        }
        Ok(())
    }

    /// `key=value` lines describing every field, in a fixed order.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("model", self.model_variant.to_string()),
            ("dim", self.dim.to_string()),
            ("ws", self.window_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.initial_lr.to_string()),
            ("t", self.subsampling_t.to_string()),
            ("word_ngrams", self.word_ngram_order.to_string()),
            ("word_bucket", self.word_bucket.to_string()),
            ("char_bucket", self.char_bucket.to_string()),
            ("minn", self.min_n.to_string()),
            ("maxn", self.max_n.to_string()),
            ("neg", self.negatives.to_string()),
            ("dropout_k", self.dropout_k.to_string()),
            ("halt", self.halt_fraction.to_string()),
            ("checkpoints", self.checkpoint_count.to_string()),
            ("min_count", self.min_count.to_string()),
            ("max_vocab", self.max_vocab.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}
