use rand::Rng;

use crate::corpus::{SubsampledSentence, Vocabulary};
use crate::features::{drop_random, push_word_ngrams, CharNgramTable, IndexLayout};

use super::config::TrainingConfig;

/// Input rows averaged into one context vector.
///
/// Rows may repeat (a word occurring twice in a window contributes twice);
/// the normalizer is always the number of rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContextBag {
    pub rows: Vec<usize>,
}

impl ContextBag {
    pub fn denom(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }
}

/// Uniform draw from `1..=ws`.
pub fn sample_window<R: Rng + ?Sized>(ws: usize, rng: &mut R) -> usize {
    assert!(ws >= 1, "window size must be at least 1");
    rng.random_range(1..=ws)
}

/// Builds context bags for one model configuration.
pub struct ContextBuilder<'a> {
    vocab: &'a Vocabulary,
    layout: IndexLayout,
    char_table: Option<&'a CharNgramTable>,
    word_ngram_order: usize,
    dropout_k: usize,
    ngram_buf: Vec<usize>,
}

impl<'a> ContextBuilder<'a> {
    /// `char_table` must be given exactly for char variants.
    pub fn new(
        cfg: &TrainingConfig,
        vocab: &'a Vocabulary,
        layout: IndexLayout,
        char_table: Option<&'a CharNgramTable>,
    ) -> Self {
        debug_assert_eq!(cfg.model_variant.uses_char_ngrams(), char_table.is_some());
        ContextBuilder {
            vocab,
            layout,
            char_table,
            word_ngram_order: cfg.word_ngram_order,
            dropout_k: cfg.dropout_k,
            ngram_buf: Vec::new(),
        }
    }

    fn push_word(&self, id: u32, bag: &mut ContextBag) {
        bag.rows.push(id as usize);
        if let Some(table) = self.char_table {
            bag.rows.extend(table.rows(id).iter().map(|&r| r as usize));
        }
    }

    fn push_ngrams<R: Rng + ?Sized>(
        &mut self,
        ids: &[Option<u32>],
        exclude: Option<usize>,
        rng: &mut R,
        bag: &mut ContextBag,
    ) {
        if self.word_ngram_order < 2 {
            return;
        }
        self.ngram_buf.clear();
        push_word_ngrams(
            ids,
            self.vocab,
            self.word_ngram_order,
            exclude,
            &self.layout,
            &mut self.ngram_buf,
        );
        drop_random(&mut self.ngram_buf, self.dropout_k, rng);
        bag.rows.extend_from_slice(&self.ngram_buf);
    }

    /// CBOW context of `sub.kept_ids[target_pos]` with a window of
    /// `sampled_ws` kept tokens on each side.
    ///
    /// Unigram (and char n-gram) rows come from the subsampled sequence;
    /// word n-grams come from the original sentence between the origins of
    /// the outermost window positions, target position included. Returns
    /// `false` when the bag is empty.
    pub fn cbow<R: Rng + ?Sized>(
        &mut self,
        sub: &SubsampledSentence,
        target_pos: usize,
        sampled_ws: usize,
        rng: &mut R,
        bag: &mut ContextBag,
    ) -> bool {
        bag.clear();
        let lo = target_pos.saturating_sub(sampled_ws);
        let hi = (target_pos + sampled_ws).min(sub.len() - 1);
        for pos in lo..=hi {
            if pos != target_pos {
                self.push_word(sub.kept_ids[pos], bag);
            }
        }
        let span = sub.origin_positions[lo]..=sub.origin_positions[hi];
        self.push_ngrams(&sub.original_ids[span], None, rng, bag);
        !bag.is_empty()
    }

    /// Whole-sentence context for the target at original position
    /// `target_origin`: every kept token except the target occurrence, plus
    /// word n-grams of the original sentence that do not cover the target.
    pub fn sent2vec<R: Rng + ?Sized>(
        &mut self,
        sub: &SubsampledSentence,
        target_origin: usize,
        rng: &mut R,
        bag: &mut ContextBag,
    ) -> bool {
        bag.clear();
        for (&id, &origin) in sub.kept_ids.iter().zip(&sub.origin_positions) {
            if origin != target_origin {
                bag.rows.push(id as usize);
            }
        }
        self.push_ngrams(&sub.original_ids, Some(target_origin), rng, bag);
        !bag.is_empty()
    }

    /// Skip-gram input: the word's own unigram row plus its char n-gram rows.
    pub fn skipgram_input(&self, word_id: u32, bag: &mut ContextBag) {
        bag.clear();
        self.push_word(word_id, bag);
    }
}

/// Allocating form of [`ContextBuilder::cbow`]; `None` when no context survives.
#[allow(clippy::too_many_arguments)]
pub fn assemble_context_cbow<R: Rng + ?Sized>(
    sub: &SubsampledSentence,
    target_pos: usize,
    sampled_ws: usize,
    cfg: &TrainingConfig,
    vocab: &Vocabulary,
    layout: IndexLayout,
    char_table: Option<&CharNgramTable>,
    rng: &mut R,
) -> Option<ContextBag> {
    let mut bag = ContextBag::default();
    ContextBuilder::new(cfg, vocab, layout, char_table)
        .cbow(sub, target_pos, sampled_ws, rng, &mut bag)
        .then_some(bag)
}

/// Allocating form of [`ContextBuilder::sent2vec`].
pub fn assemble_context_sent2vec<R: Rng + ?Sized>(
    sub: &SubsampledSentence,
    target_origin: usize,
    cfg: &TrainingConfig,
    vocab: &Vocabulary,
    layout: IndexLayout,
    rng: &mut R,
) -> Option<ContextBag> {
    let mut bag = ContextBag::default();
    ContextBuilder::new(cfg, vocab, layout, None)
        .sent2vec(sub, target_origin, rng, &mut bag)
        .then_some(bag)
}
