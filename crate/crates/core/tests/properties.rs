mod common;

use common::{char_ngrams_oracle, fnv1a, word_ngram_keys_oracle};
use ngramvec::corpus::{build_vocabulary, encode_sentence, SubsampledSentence};
use ngramvec::evaluation::{evaluate_similarity, spearman_rho, SimilarityDataset, SimilarityPair};
use ngramvec::features::{char_ngram_strings, char_ngrams, dropout_ngrams, word_ngram_keys, IndexLayout, WordNgramSet};
use ngramvec::model_store::{parse_vectors, write_vectors, VectorFormat, WordVectors};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-cäß日]{1,6}").unwrap()
}

proptest! {
    #[test]
    fn subsampled_positions_point_back_to_the_original(
        words in proptest::collection::vec(word(), 1..40),
        extra in proptest::collection::vec(word(), 0..10),
        t in 1e-4f64..0.5,
        seed in any::<u64>(),
    ) {
        let vocab = build_vocabulary([words.join(" ")], 2, 1000);
        prop_assume!(vocab.is_ok());
        let mut vocab = vocab.unwrap();
        vocab.set_discard_threshold(t);
        let tokens: Vec<&str> = words.iter().chain(&extra).map(String::as_str).collect();
        let original = encode_sentence(&tokens, &vocab);
        let mut sub = SubsampledSentence::default();
        sub.fill(&original, &vocab, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(sub.kept_ids.len(), sub.origin_positions.len());
        prop_assert!(sub.origin_positions.windows(2).all(|w| w[0] < w[1]));
        for (&id, &o) in sub.kept_ids.iter().zip(&sub.origin_positions) {
            prop_assert_eq!(original[o], Some(id));
        }
        prop_assert_eq!(&sub.original_ids, &original);
    }

    #[test]
    fn char_ngrams_match_brute_force(w in word(), min_n in 1usize..4, extra in 0usize..4, bucket in 1usize..10_000) {
        let max_n = min_n + extra;
        let mut want = char_ngrams_oracle(&w, min_n, max_n);
        let mut got = char_ngram_strings(&w, min_n, max_n);
        want.sort();
        got.sort();
        prop_assert_eq!(&got, &want);
        let layout = IndexLayout::new(7, bucket, 3);
        let mut rows = char_ngrams(&w, min_n, max_n, &layout).row_indices;
        let mut want_rows: Vec<usize> = want.iter().map(|g| 7 + fnv1a(g.as_bytes()) as usize % bucket).collect();
        rows.sort();
        want_rows.sort();
        prop_assert_eq!(rows, want_rows);
    }

    #[test]
    fn word_ngram_keys_match_brute_force(
        window in proptest::collection::vec(proptest::option::weighted(0.8, word()), 0..10),
        n_max in 2usize..=3,
    ) {
        let window: Vec<Option<&str>> = window.iter().map(|w| w.as_deref()).collect();
        let mut got = word_ngram_keys(&window, n_max);
        let mut want = word_ngram_keys_oracle(&window, n_max, None);
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn dropout_keeps_an_ordered_subsequence(n in 0usize..30, k in 0usize..40, seed in any::<u64>()) {
        let set = WordNgramSet { row_indices: (100..100 + n).collect() };
        let out = dropout_ngrams(set, k, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(out.row_indices.len(), n.saturating_sub(k));
        prop_assert!(out.row_indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        pairs in proptest::collection::vec((-100i32..100, -100i32..100), 3..60),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let rho = spearman_rho(&a, &b);
        prop_assume!(rho.is_ok());
        let rho = rho.unwrap();
        let a2: Vec<f64> = a.iter().map(|x| (x / 10.0).exp() + 3.0).collect();
        let b2: Vec<f64> = b.iter().map(|x| x * x * x - 7.0).collect();
        prop_assert!((spearman_rho(&a2, &b2).unwrap() - rho).abs() < 1e-12);
        prop_assert!((spearman_rho(&b, &a).unwrap() - rho).abs() < 1e-12);
        let neg: Vec<f64> = b.iter().map(|x| -x).collect();
        prop_assert!((spearman_rho(&a, &neg).unwrap() + rho).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&rho));
    }

    #[test]
    fn similarity_is_invariant_to_vector_scale(
        data in proptest::collection::vec(0.05f32..1.0, 40),
        gold in proptest::collection::vec(0.0f64..10.0, 6),
        factor in 0.01f32..100.0,
    ) {
        let words: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let table = WordVectors::new(words, 4, data).unwrap();
        let ds = SimilarityDataset {
            name: "toy".into(),
            pairs: gold
                .iter()
                .enumerate()
                .map(|(i, &g)| SimilarityPair { word1: format!("w{i}"), word2: format!("w{}", 9 - i), gold: g })
                .collect(),
        };
        let base = evaluate_similarity(&table, &ds);
        prop_assume!(base.is_ok());
        let scaled = evaluate_similarity(&table.scaled(factor), &ds).unwrap();
        prop_assert!((scaled.value - base.unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn vector_files_round_trip(
        words in proptest::collection::hash_set("[a-zé]{1,8}", 1..30),
        dim in 1usize..12,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<String> = words.into_iter().collect();
        let data: Vec<f32> = (0..words.len() * dim).map(|_| rng.random_range(-3.0f32..3.0)).collect();
        let table = WordVectors::new(words, dim, data).unwrap();
        for format in [VectorFormat::Text, VectorFormat::Binary] {
            let mut buf = Vec::new();
            write_vectors(&table, format, &mut buf).unwrap();
            let back = parse_vectors(&buf).unwrap();
            prop_assert_eq!(back.words(), table.words());
            for (a, b) in back.as_slice().iter().zip(table.as_slice()) {
                match format {
                    VectorFormat::Binary => prop_assert_eq!(a.to_bits(), b.to_bits()),
                    VectorFormat::Text => prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0)),
                }
            }
        }
    }
}
