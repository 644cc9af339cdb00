//! Character n-gram and word n-gram features, hashed into disjoint row
//! ranges of the input embedding matrix.
//!
//! Rows are laid out as `[unigrams | char n-gram buckets | word n-gram buckets]`,
//! so a char n-gram and a word n-gram can never share a row even when their
//! hashes collide.

use std::ops::Range;

use rand::seq::index;
use rand::Rng;

use crate::corpus::Vocabulary;

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;

const BOW: char = '<';
const EOW: char = '>';

/// Incremental 32-bit FNV-1a.
#[derive(Clone, Copy, Debug)]
pub struct Fnv1a(u32);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(FNV_OFFSET_BASIS)
    }
}

impl Fnv1a {
    #[inline]
    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u32::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    #[inline]
    pub fn finish(self) -> u32 {
        self.0
    }
}

pub fn hash_bytes(data: &[u8]) -> u32 {
    let mut h = Fnv1a::default();
    h.update(data);
    h.finish()
}

/// Row layout of the input matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexLayout {
    pub vocab_size: usize,
    pub char_bucket: usize,
    pub word_bucket: usize,
}

impl IndexLayout {
    pub fn new(vocab_size: usize, char_bucket: usize, word_bucket: usize) -> Self {
        IndexLayout {
            vocab_size,
            char_bucket,
            word_bucket,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.vocab_size + self.char_bucket + self.word_bucket
    }

    pub fn unigram_range(&self) -> Range<usize> {
        0..self.vocab_size
    }

    pub fn char_range(&self) -> Range<usize> {
        self.vocab_size..self.vocab_size + self.char_bucket
    }

    pub fn word_range(&self) -> Range<usize> {
        let start = self.vocab_size + self.char_bucket;
        start..start + self.word_bucket
    }

    #[inline]
    pub fn char_row(&self, hash: u32) -> usize {
        self.vocab_size + hash as usize % self.char_bucket
    }

    #[inline]
    pub fn word_row(&self, hash: u32) -> usize {
        self.vocab_size + self.char_bucket + hash as usize % self.word_bucket
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CharNgramSet {
    pub row_indices: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordNgramSet {
    pub row_indices: Vec<usize>,
}

/// Visit the byte ranges of all char n-grams of `<word>` with length in
/// `min_n..=max_n` characters, skipping the complete wrapped word.
fn for_each_char_ngram(wrapped: &str, min_n: usize, max_n: usize, mut f: impl FnMut(&str)) {
    let bounds: Vec<usize> = wrapped
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(wrapped.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    for start in 0..n_chars {
        for n in min_n..=max_n {
            let end = start + n;
            if end > n_chars {
                break;
            }
            if start == 0 && end == n_chars {
                continue;
            }
            f(&wrapped[bounds[start]..bounds[end]]);
        }
    }
}

fn wrap(word: &str) -> String {
    let mut s = String::with_capacity(word.len() + 2);
    s.push(BOW);
    s.push_str(word);
    s.push(EOW);
    s
}

/// The char n-gram strings of `word`, in extraction order.
pub fn char_ngram_strings(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for_each_char_ngram(&wrap(word), min_n, max_n, |g| out.push(g.to_owned()));
    out
}

/// Hash the char n-grams of `word` into the char range of `layout`.
///
/// N-grams are taken over Unicode scalar values of the word wrapped in `<`
/// and `>`; the wrapped word itself is not an n-gram of itself.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize, layout: &IndexLayout) -> CharNgramSet {
    assert!(
        1 <= min_n && min_n <= max_n,
        "invalid char n-gram range {min_n}..={max_n}"
    );
    assert!(layout.char_bucket > 0, "char n-grams need a non-empty char bucket");
    let mut rows = Vec::new();
    for_each_char_ngram(&wrap(word), min_n, max_n, |g| {
        rows.push(layout.char_row(hash_bytes(g.as_bytes())))
    });
    CharNgramSet { row_indices: rows }
}

/// Emit hashed word n-grams of order `2..=n_max` over a window of surfaces.
///
/// `surface(i)` returns `None` for absent (out-of-vocabulary) positions; no
/// n-gram spans such a position. N-grams covering `exclude` are skipped.
fn emit_word_ngrams<'s>(
    len: usize,
    surface: impl Fn(usize) -> Option<&'s str>,
    n_max: usize,
    exclude: Option<usize>,
    layout: &IndexLayout,
    out: &mut Vec<usize>,
) {
    for start in 0..len {
        let Some(first) = surface(start) else { continue };
        let mut h = Fnv1a::default();
        h.update(first.as_bytes());
        for n in 2..=n_max {
            let pos = start + n - 1;
            if pos >= len {
                break;
            }
            let Some(next) = surface(pos) else { break };
            h.update(b" ");
            h.update(next.as_bytes());
            if let Some(x) = exclude {
                if start <= x && x <= pos {
                    continue;
                }
            }
            out.push(layout.word_row(h.finish()));
        }
    }
}

/// Hash all contiguous word n-grams of order 2 to `n_max` in `window`.
///
/// The key of an n-gram is its surfaces joined by a single space.
pub fn word_ngrams(window: &[Option<&str>], n_max: usize, layout: &IndexLayout) -> WordNgramSet {
    assert!(
        (2..=3).contains(&n_max),
        "word n-gram order must be 2 or 3, got {n_max}"
    );
    assert!(layout.word_bucket > 0, "word n-grams need a non-empty word bucket");
    let mut rows = Vec::new();
    emit_word_ngrams(window.len(), |i| window[i], n_max, None, layout, &mut rows);
    WordNgramSet { row_indices: rows }
}

/// The word n-gram keys of `window`, in extraction order.
pub fn word_ngram_keys(window: &[Option<&str>], n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for (start, first) in window.iter().enumerate() {
        let Some(first) = first else { continue };
        let mut key = first.to_string();
        for next in window.iter().skip(start + 1).take(n_max - 1) {
            let Some(s) = next else { break };
            key.push(' ');
            key.push_str(s);
            out.push(key.clone());
        }
    }
    out
}

/// Word n-gram rows over encoded ids, appended to `out`.
pub(crate) fn push_word_ngrams(
    ids: &[Option<u32>],
    vocab: &Vocabulary,
    n_max: usize,
    exclude: Option<usize>,
    layout: &IndexLayout,
    out: &mut Vec<usize>,
) {
    emit_word_ngrams(
        ids.len(),
        |i| ids[i].map(|id| vocab.surface(id)),
        n_max,
        exclude,
        layout,
        out,
    );
}

/// Remove `min(k, len)` elements uniformly at random without replacement,
/// preserving the order of the survivors.
pub fn dropout_ngrams<R: Rng + ?Sized>(mut set: WordNgramSet, k: usize, rng: &mut R) -> WordNgramSet {
    drop_random(&mut set.row_indices, k, rng);
    set
}

pub(crate) fn drop_random<T, R: Rng + ?Sized>(items: &mut Vec<T>, k: usize, rng: &mut R) {
    if k == 0 {
        return;
    }
    if k >= items.len() {
        items.clear();
        return;
    }
    let mut victims = index::sample(rng, items.len(), k).into_vec();
    victims.sort_unstable_by(|a, b| b.cmp(a));
    for v in victims {
        items.remove(v);
    }
}

/// Char n-gram rows of every vocabulary word, computed once.
#[derive(Clone, Debug)]
pub struct CharNgramTable {
    offsets: Vec<usize>,
    rows: Vec<u32>,
}

impl CharNgramTable {
    pub fn build(vocab: &Vocabulary, min_n: usize, max_n: usize, layout: &IndexLayout) -> Self {
        let mut offsets = Vec::with_capacity(vocab.len() + 1);
        let mut rows = Vec::new();
        offsets.push(0);
        for entry in vocab.entries() {
            rows.extend(
                char_ngrams(&entry.surface, min_n, max_n, layout)
                    .row_indices
                    .into_iter()
                    .map(|r| r as u32),
            );
            offsets.push(rows.len());
        }
        CharNgramTable { offsets, rows }
    }

    #[inline]
    pub fn rows(&self, id: u32) -> &[u32] {
        &self.rows[self.offsets[id as usize]..self.offsets[id as usize + 1]]
    }
}
