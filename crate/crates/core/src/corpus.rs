//! Corpus ingestion, vocabulary construction and frequent-word subsampling.
//!
//! A corpus is UTF-8 text with one pre-tokenized sentence per line. Tokens
//! are separated by whitespace; no further normalization is applied.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("no word reaches the minimum count of {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("invalid vocabulary parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("cannot read corpus: {0}")]
    Io(#[from] io::Error),
}

/// Split a sentence line into tokens.
pub fn tokenize(line: &str) -> impl Iterator<Item = &str> {
    line.split_whitespace()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub count: u64,
}

/// Token to id map, ordered by descending count.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    discard_threshold: f64,
    discard: Vec<f64>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> &str {
        &self.entries[id as usize].surface
    }

    pub fn count(&self, id: u32) -> u64 {
        self.entries[id as usize].count
    }

    /// Number of tokens seen while counting, including pruned words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn discard_threshold(&self) -> f64 {
        self.discard_threshold
    }

    /// Set the subsampling threshold `t` and recompute discard probabilities.
    pub fn set_discard_threshold(&mut self, t: f64) {
        self.discard_threshold = t;
        self.discard = self
            .entries
            .iter()
            .map(|e| discard_probability(e.count, self.total_tokens, t))
            .collect();
    }

    pub fn discard_probability(&self, id: u32) -> f64 {
        self.discard[id as usize]
    }

    /// Write one `surface<TAB>count` line per entry.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}", e.surface, e.count)?;
        }
        Ok(())
    }
}

/// Count the corpus and keep the `max_vocab_size` most frequent words with
/// count at least `min_count`. Ties keep first-occurrence order.
pub fn build_vocabulary<I, S>(sentences: I, min_count: u64, max_vocab_size: usize) -> Result<Vocabulary, CorpusError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if min_count < 1 {
        return Err(CorpusError::InvalidParameter("min_count must be at least 1"));
    }
    if max_vocab_size < 1 {
        return Err(CorpusError::InvalidParameter("max_vocab_size must be at least 1"));
    }

    // Insertion order doubles as first-occurrence order.
    let mut counts: Vec<(String, u64)> = Vec::new();
    let mut lookup: HashMap<String, usize> = HashMap::new();
    let mut total_tokens = 0u64;
    for sentence in sentences {
        for token in tokenize(sentence.as_ref()) {
            total_tokens += 1;
            match lookup.get(token) {
                Some(&i) => counts[i].1 += 1,
                None => {
                    lookup.insert(token.to_owned(), counts.len());
                    counts.push((token.to_owned(), 1));
                }
            }
        }
    }
    drop(lookup);

    if total_tokens == 0 {
        return Err(CorpusError::EmptyCorpus);
    }

    counts.retain(|(_, c)| *c >= min_count);
    counts.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
    counts.truncate(max_vocab_size);
    if counts.is_empty() {
        return Err(CorpusError::EmptyVocabulary { min_count });
    }

    let entries: Vec<VocabEntry> = counts
        .into_iter()
        .map(|(surface, count)| VocabEntry { surface, count })
        .collect();
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.surface.clone(), i as u32))
        .collect();

    let mut vocab = Vocabulary {
        entries,
        index,
        total_tokens,
        discard_threshold: 0.0,
        discard: Vec::new(),
    };
    vocab.set_discard_threshold(0.0);
    Ok(vocab)
}

/// Probability of discarding a word with relative frequency
/// `f = count / total_tokens`: `max(0, 1 - sqrt(t / f))`.
pub fn discard_probability(count: u64, total_tokens: u64, t: f64) -> f64 {
    let f = count as f64 / total_tokens as f64;
    if f <= t {
        return 0.0;
    }
    (1.0 - (t / f).sqrt()).max(0.0)
}

/// A sentence after subsampling, with the mapping back to the original
/// token positions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubsampledSentence {
    pub kept_ids: Vec<u32>,
    pub origin_positions: Vec<usize>,
    /// Full id sequence of the sentence; `None` marks out-of-vocabulary tokens.
    pub original_ids: Vec<Option<u32>>,
}

impl SubsampledSentence {
    /// Subsample an already encoded sentence into `self`, reusing buffers.
    pub fn fill<R: Rng + ?Sized>(&mut self, original: &[Option<u32>], vocab: &Vocabulary, rng: &mut R) {
        self.original_ids.clear();
        self.original_ids.extend_from_slice(original);
        self.kept_ids.clear();
        self.origin_positions.clear();
        for (pos, id) in original.iter().enumerate() {
            let Some(id) = *id else { continue };
            let p = vocab.discard_probability(id);
            if p > 0.0 && rng.random::<f64>() < p {
                continue;
            }
            self.kept_ids.push(id);
            self.origin_positions.push(pos);
        }
    }

    pub fn len(&self) -> usize {
        self.kept_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept_ids.is_empty()
    }
}

pub fn encode_sentence(tokens: &[&str], vocab: &Vocabulary) -> Vec<Option<u32>> {
    tokens.iter().map(|t| vocab.id(t)).collect()
}

/// Encode `sentence` and independently discard each in-vocabulary token with
/// its discard probability. Out-of-vocabulary tokens never survive.
pub fn subsample_sentence<R: Rng + ?Sized>(sentence: &[&str], vocab: &Vocabulary, rng: &mut R) -> SubsampledSentence {
    let mut out = SubsampledSentence::default();
    out.fill(&encode_sentence(sentence, vocab), vocab, rng);
    out
}

const OOV: u32 = u32::MAX;

/// A corpus held in memory as vocabulary ids, one slice per sentence.
#[derive(Clone, Debug)]
pub struct EncodedCorpus {
    vocab: Vocabulary,
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    in_vocab_tokens: u64,
}

impl EncodedCorpus {
    /// Read the corpus file twice: once to count, once to encode.
    pub fn from_path<P: AsRef<Path>>(path: P, min_count: u64, max_vocab_size: usize) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let mut read_err = None;
        let lines = read_lines(path)?.map_while(|r| r.map_err(|e| read_err = Some(e)).ok());
        let vocab = build_vocabulary(lines, min_count, max_vocab_size);
        if let Some(e) = read_err {
            return Err(e.into());
        }
        let vocab = vocab?;
        let mut corpus = EncodedCorpus::empty(vocab);
        for line in read_lines(path)? {
            corpus.push_sentence(&line?);
        }
        Ok(corpus)
    }

    pub fn from_lines<I, S>(lines: I, min_count: u64, max_vocab_size: usize) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S> + Clone,
        S: AsRef<str>,
    {
        let vocab = build_vocabulary(lines.clone(), min_count, max_vocab_size)?;
        let mut corpus = EncodedCorpus::empty(vocab);
        for line in lines {
            corpus.push_sentence(line.as_ref());
        }
        Ok(corpus)
    }

    fn empty(vocab: Vocabulary) -> Self {
        EncodedCorpus {
            vocab,
            tokens: Vec::new(),
            offsets: vec![0],
            in_vocab_tokens: 0,
        }
    }

    fn push_sentence(&mut self, line: &str) {
        let start = self.tokens.len();
        for tok in tokenize(line) {
            let id = self.vocab.id(tok).unwrap_or(OOV);
            if id != OOV {
                self.in_vocab_tokens += 1;
            }
            self.tokens.push(id);
        }
        if self.tokens.len() > start {
            self.offsets.push(self.tokens.len());
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_mut(&mut self) -> &mut Vocabulary {
        &mut self.vocab
    }

    pub fn n_sentences(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Tokens of all sentences that have a vocabulary id.
    pub fn in_vocab_tokens(&self) -> u64 {
        self.in_vocab_tokens
    }

    /// Decode sentence `i` into `out`, `None` marking OOV tokens.
    pub fn sentence_into(&self, i: usize, out: &mut Vec<Option<u32>>) {
        out.clear();
        out.extend(
            self.tokens[self.offsets[i]..self.offsets[i + 1]]
                .iter()
                .map(|&id| (id != OOV).then_some(id)),
        );
    }

    pub fn sentence(&self, i: usize) -> Vec<Option<u32>> {
        let mut out = Vec::new();
        self.sentence_into(i, &mut out);
        out
    }
}

fn read_lines(path: &Path) -> io::Result<io::Lines<BufReader<File>>> {
    Ok(BufReader::new(File::open(path)?).lines())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn surfaces(v: &Vocabulary) -> Vec<(&str, u64)> {
        v.entries().iter().map(|e| (e.surface.as_str(), e.count)).collect()
    }

    #[test]
    fn counts_and_orders_by_frequency() {
        let v = build_vocabulary(["a a b"], 1, 10).unwrap();
        assert_eq!(surfaces(&v), vec![("a", 2), ("b", 1)]);
        assert_eq!(v.total_tokens(), 3);
    }

    #[test]
    fn prunes_below_min_count_but_keeps_total() {
        let v = build_vocabulary(["a a b"], 2, 10).unwrap();
        assert_eq!(surfaces(&v), vec![("a", 2)]);
        assert_eq!(v.total_tokens(), 3);
    }

    #[test]
    fn truncates_to_max_vocab() {
        let v = build_vocabulary(["a a b b b c"], 1, 2).unwrap();
        assert_eq!(surfaces(&v), vec![("b", 3), ("a", 2)]);
    }

    #[test]
    fn ties_keep_first_occurrence() {
        let v = build_vocabulary(["z y", "x y z x"], 1, 10).unwrap();
        assert_eq!(surfaces(&v), vec![("z", 2), ("y", 2), ("x", 2)]);
        assert_eq!(v.id("y"), Some(1));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            build_vocabulary(Vec::<&str>::new(), 1, 10),
            Err(CorpusError::EmptyCorpus)
        ));
        assert!(matches!(
            build_vocabulary(["", "   "], 1, 10),
            Err(CorpusError::EmptyCorpus)
        ));
        assert!(matches!(
            build_vocabulary(["a b"], 0, 10),
            Err(CorpusError::InvalidParameter(_))
        ));
    }

    #[test]
    fn discard_probability_closed_form() {
        // f == t
        assert_eq!(discard_probability(1, 1000, 1e-3), 0.0);
        // f == 4t
        assert!((discard_probability(4, 1000, 1e-3) - 0.5).abs() < 1e-12);
        // f < t
        assert_eq!(discard_probability(1, 10_000, 1e-3), 0.0);
        // t == 0 discards everything
        assert_eq!(discard_probability(1, 10, 0.0), 1.0);
    }

    #[test]
    fn no_subsampling_keeps_every_in_vocab_token() {
        let mut v = build_vocabulary(["a b c a"], 1, 10).unwrap();
        v.set_discard_threshold(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = subsample_sentence(&["a", "b", "c", "a"], &v, &mut rng);
        assert_eq!(s.origin_positions, vec![0, 1, 2, 3]);
        assert_eq!(s.kept_ids, vec![0, 1, 2, 0]);
    }

    #[test]
    fn oov_position_is_skipped_in_mapping() {
        let mut v = build_vocabulary(["a b"], 1, 10).unwrap();
        v.set_discard_threshold(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = subsample_sentence(&["a", "zzz", "b"], &v, &mut rng);
        assert_eq!(s.origin_positions, vec![0, 2]);
        assert_eq!(s.original_ids, vec![Some(0), None, Some(1)]);
    }

    #[test]
    fn encoded_corpus_skips_blank_lines() {
        let c = EncodedCorpus::from_lines(["a b", "", "b q"], 1, 10).unwrap();
        assert_eq!(c.n_sentences(), 2);
        assert_eq!(c.in_vocab_tokens(), 4);
        let c = EncodedCorpus::from_lines(["a b a", "b q"], 2, 10).unwrap();
        assert_eq!(c.sentence(1), vec![Some(1), None]);
        assert_eq!(c.in_vocab_tokens(), 4);
    }

    #[test]
    fn tsv_dump() {
        let v = build_vocabulary(["a a b"], 1, 10).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\t2\nb\t1\n");
    }
}
