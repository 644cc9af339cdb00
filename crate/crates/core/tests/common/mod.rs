#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FNV_OFFSET: u32 = 0x811C_9DC5;
pub const FNV_PRIME: u32 = 0x0100_0193;

/// Straight transcription of 32-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Char n-grams of `<word>` by brute force over char offsets.
pub fn char_ngrams_oracle(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = format!("<{word}>").chars().collect();
    let mut out = Vec::new();
    for start in 0..chars.len() {
        for n in min_n..=max_n {
            if start + n > chars.len() || (start == 0 && n == chars.len()) {
                continue;
            }
            out.push(chars[start..start + n].iter().collect());
        }
    }
    out
}

/// Surfaces joined by spaces for every n-gram of order `2..=n_max` that
/// avoids `None` positions and does not cover `exclude`.
pub fn word_ngram_keys_oracle(window: &[Option<&str>], n_max: usize, exclude: Option<usize>) -> Vec<String> {
    let mut out = Vec::new();
    for n in 2..=n_max {
        for start in 0..window.len() {
            let end = start + n;
            if end > window.len() {
                continue;
            }
            if exclude.is_some_and(|x| start <= x && x < end) {
                continue;
            }
            let parts: Option<Vec<&str>> = window[start..end].iter().copied().collect();
            if let Some(parts) = parts {
                out.push(parts.join(" "));
            }
        }
    }
    out
}

pub const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "su", "tra", "ver", "ü", "ße", "ño", "é", "ar", "pin", "do", "x",
];

/// A small random word built from a syllable pool, non-ASCII included.
pub fn random_word<R: Rng>(rng: &mut R) -> String {
    let n = rng.random_range(1..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// Sentences over a Zipf-distributed vocabulary of `n_words` words.
pub fn zipf_corpus(seed: u64, n_words: usize, n_sentences: usize, max_len: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
    let weights: Vec<f64> = (1..=n_words).map(|r| 1.0 / r as f64).collect();
    let dist = rand::distr::weighted::WeightedIndex::new(&weights).unwrap();
    (0..n_sentences)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| words[rng.sample(&dist)].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// A corpus where neighbouring words share a topic, so that training has
/// something to learn.
pub fn topical_corpus(seed: u64, n_topics: usize, words_per_topic: usize, n_sentences: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sentences)
        .map(|_| {
            let topic = rng.random_range(0..n_topics);
            let len = rng.random_range(4..=12);
            (0..len)
                .map(|_| {
                    if rng.random_bool(0.9) {
                        format!("t{topic}w{}", rng.random_range(0..words_per_topic))
                    } else {
                        format!(
                            "t{}w{}",
                            rng.random_range(0..n_topics),
                            rng.random_range(0..words_per_topic)
                        )
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
