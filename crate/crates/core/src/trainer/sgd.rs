use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::corpus::Vocabulary;

use super::context::ContextBag;
use super::store::{add_scaled, dot, EmbeddingStore, Scalar};

pub const NOISE_EXPONENT: f64 = 0.75;
const MAX_NEGATIVE_RETRIES: usize = 10;

/// Noise distribution over vocabulary ids, proportional to `count^0.75`.
pub struct UnigramNoiseTable {
    alias: WeightedAliasIndex<f64>,
    probs: Vec<f64>,
}

impl UnigramNoiseTable {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.entries().iter().map(|e| e.count))
    }

    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> Self {
        let weights: Vec<f64> = counts.into_iter().map(|c| (c as f64).powf(NOISE_EXPONENT)).collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).expect("noise weights must be positive");
        UnigramNoiseTable { alias, probs }
    }

    pub fn probability(&self, id: u32) -> f64 {
        self.probs[id as usize]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }

    /// Draw up to `k` negatives different from `target`. A draw that keeps
    /// colliding with the target is given up after a few retries.
    pub fn sample_negatives<R: Rng + ?Sized>(&self, target: u32, k: usize, rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        for _ in 0..k {
            for _ in 0..MAX_NEGATIVE_RETRIES {
                let id = self.sample(rng);
                if id != target {
                    out.push(id);
                    break;
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -(f64::max(-x, 0.0) + (-x.abs()).exp().ln_1p())
}

fn mean_into<T: Scalar>(bag: &ContextBag, store: &EmbeddingStore<T>, out: &mut Vec<f64>) {
    out.clear();
    out.resize(store.dim(), 0.0);
    for &r in &bag.rows {
        for (o, c) in out.iter_mut().zip(store.input_cells(r)) {
            *o += T::load(c);
        }
    }
    let inv = 1.0 / bag.denom() as f64;
    out.iter_mut().for_each(|o| *o *= inv);
}

/// Context vector (mean of the bag's input rows) and its score against the
/// output vector of `target_id`.
pub fn forward<T: Scalar>(bag: &ContextBag, target_id: u32, store: &EmbeddingStore<T>) -> (Vec<f64>, f64) {
    assert!(!bag.is_empty(), "forward on an empty context bag");
    let mut hidden = Vec::new();
    mean_into(bag, store, &mut hidden);
    let score = dot::<T>(store.output_cells(target_id as usize), &hidden);
    (hidden, score)
}

/// Negative sampling loss `-ln σ(s_target) - Σ ln σ(-s_neg)` for fixed negatives.
pub fn negative_sampling_loss<T: Scalar>(
    bag: &ContextBag,
    target_id: u32,
    negatives: &[u32],
    store: &EmbeddingStore<T>,
) -> f64 {
    let (hidden, score) = forward(bag, target_id, store);
    let mut loss = -log_sigmoid(score);
    for &n in negatives {
        loss -= log_sigmoid(-dot::<T>(store.output_cells(n as usize), &hidden));
    }
    loss
}

/// How the gradient with respect to the context mean reaches the bag rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputUpdate {
    /// Each row moves by the exact gradient, `1/denom` of the mean's.
    #[default]
    Averaged,
    /// Each row moves by the full gradient of the mean.
    Full,
}

/// Per-worker scratch space for SGD steps.
#[derive(Default)]
pub struct ExampleTrainer {
    hidden: Vec<f64>,
    grad: Vec<f64>,
    negatives: Vec<u32>,
    input_update: InputUpdate,
}

impl ExampleTrainer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_input_update(input_update: InputUpdate) -> Self {
        ExampleTrainer {
            input_update,
            ..Self::default()
        }
    }

    /// One SGD step on a (context, target) pair with freshly drawn negatives.
    /// Returns the loss before the update.
    #[allow(clippy::too_many_arguments)]
    pub fn train<T: Scalar, R: Rng + ?Sized>(
        &mut self,
        bag: &ContextBag,
        target_id: u32,
        noise: &UnigramNoiseTable,
        k: usize,
        lr: f64,
        store: &EmbeddingStore<T>,
        rng: &mut R,
    ) -> f64 {
        let mut negatives = std::mem::take(&mut self.negatives);
        noise.sample_negatives(target_id, k, rng, &mut negatives);
        let loss = self.step(bag, target_id, &negatives, lr, store);
        self.negatives = negatives;
        loss
    }

    /// One SGD step with the given negatives.
    ///
    /// Output rows move by `-lr * ∂loss/∂u`. Every input row of the bag moves
    /// by `-lr / denom * ∂loss/∂h`, where `h` is the context mean, or by
    /// `-lr * ∂loss/∂h` with [`InputUpdate::Full`]. All gradients are taken
    /// at the pre-update parameters.
    pub fn step<T: Scalar>(
        &mut self,
        bag: &ContextBag,
        target_id: u32,
        negatives: &[u32],
        lr: f64,
        store: &EmbeddingStore<T>,
    ) -> f64 {
        assert!(!bag.is_empty(), "training on an empty context bag");
        mean_into(bag, store, &mut self.hidden);
        self.grad.clear();
        self.grad.resize(store.dim(), 0.0);

        let mut loss = 0.0;
        let labelled = std::iter::once((target_id, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (id, positive) in labelled {
            let out = store.output_cells(id as usize);
            let score = dot::<T>(out, &self.hidden);
            let coef = if positive {
                loss -= log_sigmoid(score);
                sigmoid(score) - 1.0
            } else {
                loss -= log_sigmoid(-score);
                sigmoid(score)
            };
            for (g, c) in self.grad.iter_mut().zip(out) {
                *g += coef * T::load(c);
            }
            add_scaled::<T>(out, -lr * coef, &self.hidden);
        }

        let scale = match self.input_update {
            InputUpdate::Averaged => -lr / bag.denom() as f64,
            InputUpdate::Full => -lr,
        };
        for &r in &bag.rows {
            add_scaled::<T>(store.input_cells(r), scale, &self.grad);
        }
        loss
    }
}

/// Allocating form of [`ExampleTrainer::train`].
pub fn train_example<T: Scalar, R: Rng + ?Sized>(
    bag: &ContextBag,
    target_id: u32,
    noise: &UnigramNoiseTable,
    k: usize,
    lr: f64,
    store: &EmbeddingStore<T>,
    rng: &mut R,
) -> f64 {
    ExampleTrainer::new().train(bag, target_id, noise, k, lr, store, rng)
}
