use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{CorpusError, EncodedCorpus, SubsampledSentence, Vocabulary};
use crate::features::{CharNgramTable, IndexLayout};
use crate::model_store::WordVectors;

use super::config::{ConfigError, ModelVariant, TrainingConfig};
use super::context::{sample_window, ContextBag, ContextBuilder};
use super::sgd::{ExampleTrainer, UnigramNoiseTable};
use super::store::{EmbeddingStore, Scalar};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("corpus has no in-vocabulary tokens")]
    NoTrainingTokens,
    #[error("parallelism must be at least 1")]
    NoWorkers,
    #[error("training diverged: non-finite parameters")]
    NonFinite,
    #[error("checkpoint {index} could not be written: {message}")]
    Checkpoint { index: usize, message: String },
}

/// Word vectors saved at an equidistant point of training.
pub struct Checkpoint<'a> {
    /// 1-based position in the schedule.
    pub index: usize,
    pub progress_fraction: f64,
    pub vectors: &'a WordVectors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointInfo {
    pub index: usize,
    pub progress_fraction: f64,
    pub processed_tokens: u64,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub parallelism: usize,
    /// Print a status line to stderr at every percent of progress.
    pub report_progress: bool,
    /// Keep every example's loss (worker 0 only).
    pub record_losses: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            parallelism: 1,
            report_progress: false,
            record_losses: false,
        }
    }
}

#[derive(Debug)]
pub struct TrainingOutcome {
    pub vocab: Vocabulary,
    pub layout: IndexLayout,
    pub store: EmbeddingStore<f32>,
    pub vectors: WordVectors,
    pub checkpoints: Vec<CheckpointInfo>,
    pub total_tokens: u64,
    pub processed_tokens: u64,
    pub examples: u64,
    pub loss_trace: Vec<f32>,
}

impl TrainingOutcome {
    pub fn final_progress(&self) -> f64 {
        self.processed_tokens as f64 / self.total_tokens as f64
    }
}

/// Linearly decayed learning rate at a progress fraction.
pub fn learning_rate(initial_lr: f64, progress: f64) -> f64 {
    initial_lr * (1.0 - progress.clamp(0.0, 1.0))
}

/// Word vectors of the trained model. Word n-gram rows are discarded; char
/// variants add the mean of the word's char n-gram rows to its unigram row.
pub fn extract_word_vectors<T: Scalar>(
    store: &EmbeddingStore<T>,
    vocab: &Vocabulary,
    char_table: Option<&CharNgramTable>,
) -> WordVectors {
    let dim = store.dim();
    let mut data = Vec::with_capacity(vocab.len() * dim);
    let mut acc = vec![0f64; dim];
    for id in 0..vocab.len() as u32 {
        acc.copy_from_slice(&store.input_row(id as usize));
        if let Some(rows) = char_table.map(|t| t.rows(id)).filter(|r| !r.is_empty()) {
            let inv = 1.0 / rows.len() as f64;
            for &r in rows {
                for (a, c) in acc.iter_mut().zip(store.input_cells(r as usize)) {
                    *a += inv * T::load(c);
                }
            }
        }
        data.extend(acc.iter().map(|&v| v as f32));
    }
    let words = vocab.entries().iter().map(|e| e.surface.clone()).collect();
    WordVectors::new(words, dim, data).expect("vocabulary surfaces are unique")
}

/// Read the corpus at `path` and train on it.
pub fn run_training<P, F>(
    corpus_path: P,
    cfg: &TrainingConfig,
    opts: &RunOptions,
    on_checkpoint: F,
) -> Result<TrainingOutcome, TrainError>
where
    P: AsRef<Path>,
    F: FnMut(&Checkpoint) -> Result<(), String> + Send,
{
    cfg.validate()?;
    let corpus = EncodedCorpus::from_path(corpus_path, cfg.min_count, cfg.max_vocab)?;
    train_corpus(corpus, cfg, opts, on_checkpoint)
}

struct Shared<'a, F> {
    cfg: &'a TrainingConfig,
    opts: &'a RunOptions,
    corpus: &'a EncodedCorpus,
    layout: IndexLayout,
    store: &'a EmbeddingStore<f32>,
    noise: &'a UnigramNoiseTable,
    char_table: Option<&'a CharNgramTable>,
    total_tokens: u64,
    halt_tokens: u64,
    progress: AtomicU64,
    examples: AtomicU64,
    stop: AtomicBool,
    schedule: Mutex<Schedule<F>>,
}

struct Schedule<F> {
    next_checkpoint: usize,
    last_percent: u64,
    emitted: Vec<CheckpointInfo>,
    sink: F,
    error: Option<TrainError>,
}

/// Train on an already encoded corpus.
///
/// Workers own contiguous sentence shards and update the shared store
/// without locks. A global token counter drives the learning rate, the
/// checkpoint schedule and the halt point. With one worker the result is
/// fully determined by the seed.
pub fn train_corpus<F>(
    mut corpus: EncodedCorpus,
    cfg: &TrainingConfig,
    opts: &RunOptions,
    on_checkpoint: F,
) -> Result<TrainingOutcome, TrainError>
where
    F: FnMut(&Checkpoint) -> Result<(), String> + Send,
{
    cfg.validate()?;
    if opts.parallelism == 0 {
        return Err(TrainError::NoWorkers);
    }
    if corpus.in_vocab_tokens() == 0 {
        return Err(TrainError::NoTrainingTokens);
    }
    corpus.vocab_mut().set_discard_threshold(cfg.subsampling_t);

    let vocab = corpus.vocab();
    let layout = IndexLayout::new(vocab.len(), cfg.char_bucket, cfg.word_bucket);
    let char_table = cfg
        .model_variant
        .uses_char_ngrams()
        .then(|| CharNgramTable::build(vocab, cfg.min_n, cfg.max_n, &layout));
    let store = EmbeddingStore::<f32>::new(layout, cfg.dim, cfg.seed);
    let noise = UnigramNoiseTable::new(vocab);

    let total_tokens = cfg.epochs as u64 * corpus.in_vocab_tokens();
    let halt_tokens = ((cfg.halt_fraction * total_tokens as f64).ceil() as u64).min(total_tokens);

    let shared = Shared {
        cfg,
        opts,
        corpus: &corpus,
        layout,
        store: &store,
        noise: &noise,
        char_table: char_table.as_ref(),
        total_tokens,
        halt_tokens,
        progress: AtomicU64::new(0),
        examples: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        schedule: Mutex::new(Schedule {
            next_checkpoint: 1,
            last_percent: 0,
            emitted: Vec::new(),
            sink: on_checkpoint,
            error: None,
        }),
    };

    let n_workers = opts.parallelism.min(corpus.n_sentences()).max(1);
    let loss_trace = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n_workers)
            .map(|w| {
                let shared = &shared;
                s.spawn(move || worker(shared, w, n_workers))
            })
            .collect();
        let mut traces: Vec<Vec<f32>> = handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .collect();
        traces.swap_remove(0)
    });

    let Shared {
        progress,
        examples,
        schedule,
        ..
    } = shared;
    let schedule = schedule.into_inner().expect("schedule lock poisoned");
    if let Some(e) = schedule.error {
        return Err(e);
    }
    if !store.all_finite() {
        return Err(TrainError::NonFinite);
    }

    let vectors = extract_word_vectors(&store, corpus.vocab(), char_table.as_ref());
    Ok(TrainingOutcome {
        vocab: corpus.vocab().clone(),
        layout,
        store,
        vectors,
        checkpoints: schedule.emitted,
        total_tokens,
        processed_tokens: progress.into_inner(),
        examples: examples.into_inner(),
        loss_trace,
    })
}

fn worker<F>(shared: &Shared<'_, F>, w: usize, n_workers: usize) -> Vec<f32>
where
    F: FnMut(&Checkpoint) -> Result<(), String> + Send,
{
    let cfg = shared.cfg;
    let corpus = shared.corpus;
    let vocab = corpus.vocab();
    let n = corpus.n_sentences();
    let shard = (w * n / n_workers)..((w + 1) * n / n_workers);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(w as u64 + 1);

    let mut builder = ContextBuilder::new(cfg, vocab, shared.layout, shared.char_table);
    let mut trainer = ExampleTrainer::with_input_update(cfg.model_variant.input_update());
    let mut sentence = Vec::new();
    let mut sub = SubsampledSentence::default();
    let mut bag = ContextBag::default();
    let mut input = ContextBag::default();
    let mut trace = Vec::new();
    let mut smoothed_loss = f64::NAN;
    let record = shared.opts.record_losses && w == 0;

    'epochs: for _ in 0..cfg.epochs {
        for i in shard.clone() {
            if shared.stop.load(Ordering::Relaxed) {
                break 'epochs;
            }
            corpus.sentence_into(i, &mut sentence);
            let sentence_tokens = sentence.iter().filter(|id| id.is_some()).count() as u64;
            let progress = shared.progress.load(Ordering::Relaxed);
            let lr = learning_rate(cfg.initial_lr, progress as f64 / shared.total_tokens as f64);

            sub.fill(&sentence, vocab, &mut rng);
            let mut n_examples = 0u64;
            let mut loss_sum = 0.0;
            let mut observe = |loss: f64| {
                n_examples += 1;
                loss_sum += loss;
                if record {
                    trace.push(loss as f32);
                }
            };

            match cfg.model_variant {
                ModelVariant::Cbow | ModelVariant::CbowChar => {
                    for t in 0..sub.len() {
                        let ws = sample_window(cfg.window_size, &mut rng);
                        if builder.cbow(&sub, t, ws, &mut rng, &mut bag) {
                            let target = sub.kept_ids[t];
                            observe(trainer.train(
                                &bag,
                                target,
                                shared.noise,
                                cfg.negatives,
                                lr,
                                shared.store,
                                &mut rng,
                            ));
                        }
                    }
                }
                ModelVariant::Skipgram | ModelVariant::SkipgramChar => {
                    for t in 0..sub.len() {
                        let ws = sample_window(cfg.window_size, &mut rng);
                        builder.skipgram_input(sub.kept_ids[t], &mut input);
                        let lo = t.saturating_sub(ws);
                        let hi = (t + ws).min(sub.len() - 1);
                        for c in (lo..=hi).filter(|&c| c != t) {
                            let target = sub.kept_ids[c];
                            observe(trainer.train(
                                &input,
                                target,
                                shared.noise,
                                cfg.negatives,
                                lr,
                                shared.store,
                                &mut rng,
                            ));
                        }
                    }
                }
                ModelVariant::Sent2vec => {
                    // Every in-vocabulary token is a target; subsampling only
                    // thins the context.
                    for (origin, id) in sentence.iter().enumerate() {
                        let Some(target) = *id else { continue };
                        if builder.sent2vec(&sub, origin, &mut rng, &mut bag) {
                            observe(trainer.train(
                                &bag,
                                target,
                                shared.noise,
                                cfg.negatives,
                                lr,
                                shared.store,
                                &mut rng,
                            ));
                        }
                    }
                }
            }

            if n_examples > 0 {
                let mean = loss_sum / n_examples as f64;
                smoothed_loss = if smoothed_loss.is_nan() {
                    mean
                } else {
                    0.95 * smoothed_loss + 0.05 * mean
                };
                shared.examples.fetch_add(n_examples, Ordering::Relaxed);
            }

            let done = shared.progress.fetch_add(sentence_tokens, Ordering::SeqCst) + sentence_tokens;
            after_sentence(shared, done, lr, smoothed_loss);
        }
    }
    trace
}

/// Emit due checkpoints and progress lines; raise the stop flag at the halt point.
fn after_sentence<F>(shared: &Shared<'_, F>, done: u64, lr: f64, smoothed_loss: f64)
where
    F: FnMut(&Checkpoint) -> Result<(), String> + Send,
{
    let cfg = shared.cfg;
    let total = shared.total_tokens;
    let halted = done >= shared.halt_tokens;
    let due = |k: usize| done as u128 * cfg.checkpoint_count as u128 >= k as u128 * total as u128;
    let allowed = |k: usize| k as f64 / cfg.checkpoint_count as f64 <= cfg.halt_fraction + 1e-12;

    let mut sched = shared.schedule.lock().expect("schedule lock poisoned");
    while sched.error.is_none()
        && sched.next_checkpoint <= cfg.checkpoint_count
        && allowed(sched.next_checkpoint)
        && (due(sched.next_checkpoint) || halted)
    {
        let index = sched.next_checkpoint;
        sched.next_checkpoint += 1;
        // A checkpoint that falls due together with the halt is taken at
        // the halt point itself.
        let progress_fraction = index as f64 / cfg.checkpoint_count as f64;
        let vectors = extract_word_vectors(shared.store, shared.corpus.vocab(), shared.char_table);
        let ckpt = Checkpoint {
            index,
            progress_fraction,
            vectors: &vectors,
        };
        match (sched.sink)(&ckpt) {
            Ok(()) => sched.emitted.push(CheckpointInfo {
                index,
                progress_fraction,
                processed_tokens: done,
            }),
            Err(message) => {
                sched.error = Some(TrainError::Checkpoint { index, message });
                shared.stop.store(true, Ordering::SeqCst);
            }
        }
    }

    if shared.opts.report_progress {
        let percent = (done as u128 * 100 / total as u128) as u64;
        if percent > sched.last_percent {
            sched.last_percent = percent;
            eprintln!(
                "progress {:>3}%  lr {:.6}  loss {:.4}  examples {}",
                percent,
                lr,
                smoothed_loss,
                shared.examples.load(Ordering::Relaxed)
            );
        }
    }
    drop(sched);

    if halted {
        shared.stop.store(true, Ordering::SeqCst);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learning_rate_decays_linearly() {
        assert_eq!(learning_rate(0.05, 0.0), 0.05);
        assert!((learning_rate(0.05, 0.25) - 0.0375).abs() < 1e-15);
        assert_eq!(learning_rate(0.05, 1.0), 0.0);
        assert_eq!(learning_rate(0.05, 1.5), 0.0);
    }

    #[test]
    fn extraction_without_char_rows_is_pass_through() {
        let vocab = crate::corpus::build_vocabulary(["a b"], 1, 10).unwrap();
        let layout = IndexLayout::new(2, 0, 5);
        let store: EmbeddingStore<f64> = EmbeddingStore::new(layout, 3, 1);
        let table = extract_word_vectors(&store, &vocab, None);
        for id in 0..2 {
            let expected: Vec<f32> = store.input_row(id).iter().map(|&v| v as f32).collect();
            assert_eq!(table.vector(id), &expected[..]);
        }
    }

    #[test]
    fn extraction_adds_mean_char_row() {
        let vocab = crate::corpus::build_vocabulary(["ab"], 1, 10).unwrap();
        let layout = IndexLayout::new(1, 4, 0);
        let chars = CharNgramTable::build(&vocab, 3, 3, &layout);
        let store: EmbeddingStore<f64> = EmbeddingStore::zeros(layout, 2);
        store.set_input_row(0, &[1.0, 2.0]);
        // zero char rows leave v_w unchanged
        assert_eq!(
            extract_word_vectors(&store, &vocab, Some(&chars)).vector(0),
            &[1.0, 2.0]
        );
        for &r in chars.rows(0) {
            store.set_input_row(r as usize, &[1.0, 2.0]);
        }
        assert_eq!(
            extract_word_vectors(&store, &vocab, Some(&chars)).vector(0),
            &[2.0, 4.0]
        );
    }
}
