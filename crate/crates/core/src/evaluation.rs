//! Word-similarity (Spearman's ρ) and word-analogy (3CosMul) benchmarks.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::model_store::WordVectors;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_MAX_CANDIDATES: usize = 200_000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cosine of a zero vector")]
    DegenerateVector,
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("need two lists of equal length >= 2, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("{dataset}: only {evaluated} evaluable pairs ({skipped} skipped as out of vocabulary)")]
    TooFewPairs {
        dataset: String,
        evaluated: usize,
        skipped: usize,
    },
    #[error("{dataset}: no evaluable analogies ({skipped} skipped as out of vocabulary)")]
    NoAnalogies { dataset: String, skipped: usize },
    #[error("`{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("dataset line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("dataset has no entries")]
    EmptyDataset,
    #[error("cannot read dataset: {0}")]
    Io(#[from] io::Error),
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, EvalError> {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(EvalError::DegenerateVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's ρ: Pearson correlation of the fractional rank vectors.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<SimilarityPair>,
}

impl SimilarityDataset {
    /// Parse `word1<TAB>word2<TAB>score` lines; `#` lines are comments.
    /// Whitespace-separated triples are accepted as well.
    pub fn parse(name: &str, text: &str) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                fields = line.split_whitespace().collect();
            }
            let [w1, w2, score] = fields[..] else {
                return Err(EvalError::Parse {
                    line: i + 1,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            };
            let gold: f64 = score.parse().map_err(|_| EvalError::Parse {
                line: i + 1,
                reason: format!("score `{score}` is not a number"),
            })?;
            if !gold.is_finite() {
                return Err(EvalError::Parse {
                    line: i + 1,
                    reason: "score is not finite".into(),
                });
            }
            pairs.push(SimilarityPair {
                word1: w1.to_owned(),
                word2: w2.to_owned(),
                gold,
            });
        }
        if pairs.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        Ok(SimilarityDataset {
            name: name.to_owned(),
            pairs,
        })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, EvalError> {
        let path = path.as_ref();
        Self::parse(&dataset_name(path), &fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyQuad {
    pub x: String,
    pub y: String,
    pub x_star: String,
    pub y_star: String,
    /// Section header (`: name`) the quad appeared under, if any.
    pub section: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyDataset {
    pub name: String,
    pub quads: Vec<AnalogyQuad>,
}

impl AnalogyDataset {
    /// Parse `x y x* y*` lines. Lines starting with `:` open a section.
    pub fn parse(name: &str, text: &str) -> Result<Self, EvalError> {
        let mut quads = Vec::new();
        let mut section = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix(':') {
                section = Some(header.trim().to_owned());
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [x, y, x_star, y_star] = fields[..] else {
                return Err(EvalError::Parse {
                    line: i + 1,
                    reason: format!("expected 4 words, found {}", fields.len()),
                });
            };
            quads.push(AnalogyQuad {
                x: x.to_owned(),
                y: y.to_owned(),
                x_star: x_star.to_owned(),
                y_star: y_star.to_owned(),
                section: section.clone(),
            });
        }
        if quads.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        Ok(AnalogyDataset {
            name: name.to_owned(),
            quads,
        })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, EvalError> {
        let path = path.as_ref();
        Self::parse(&dataset_name(path), &fs::read_to_string(path)?)
    }

    /// Split a sectioned (Google format) dataset into semantic and
    /// syntactic subsets; syntactic sections are named `gram*`. Returns
    /// `None` without section headers.
    pub fn split_google(&self) -> Option<(AnalogyDataset, AnalogyDataset)> {
        if self.quads.iter().all(|q| q.section.is_none()) {
            return None;
        }
        let (syntactic, semantic): (Vec<_>, Vec<_>) = self
            .quads
            .iter()
            .cloned()
            .partition(|q| q.section.as_deref().is_some_and(|s| s.starts_with("gram")));
        Some((
            AnalogyDataset {
                name: format!("{}/semantic", self.name),
                quads: semantic,
            },
            AnalogyDataset {
                name: format!("{}/syntactic", self.name),
                quads: syntactic,
            },
        ))
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Spearman,
    Accuracy,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Spearman => "spearman",
            Metric::Accuracy => "accuracy",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub metric: Metric,
    pub value: f64,
    pub evaluated: usize,
    pub skipped_oov: usize,
}

/// Spearman's ρ between model cosines and gold scores over the pairs whose
/// words are both in the table.
pub fn evaluate_similarity(vectors: &WordVectors, ds: &SimilarityDataset) -> Result<EvalReport, EvalError> {
    let mut model = Vec::with_capacity(ds.pairs.len());
    let mut gold = Vec::with_capacity(ds.pairs.len());
    let mut skipped = 0;
    for p in &ds.pairs {
        match (vectors.lookup(&p.word1), vectors.lookup(&p.word2)) {
            (Some(a), Some(b)) => {
                model.push(cosine(vectors.vector(a), vectors.vector(b))?);
                gold.push(p.gold);
            }
            _ => skipped += 1,
        }
    }
    if model.len() < 2 {
        return Err(EvalError::TooFewPairs {
            dataset: ds.name.clone(),
            evaluated: model.len(),
            skipped,
        });
    }
    Ok(EvalReport {
        dataset: ds.name.clone(),
        metric: Metric::Spearman,
        value: spearman_rho(&model, &gold)?,
        evaluated: model.len(),
        skipped_oov: skipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalogyOptions {
    pub epsilon: f64,
    /// Map cosines to `(cos + 1) / 2` before combining them.
    pub shifted: bool,
    /// Only the first (most frequent) words of the table are candidates.
    pub max_candidates: usize,
}

impl Default for AnalogyOptions {
    fn default() -> Self {
        AnalogyOptions {
            epsilon: DEFAULT_EPSILON,
            shifted: true,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

/// 3CosMul solver over a fixed vector table.
pub struct AnalogySolver<'a> {
    vectors: &'a WordVectors,
    norms: Vec<f64>,
    opts: AnalogyOptions,
}

impl<'a> AnalogySolver<'a> {
    pub fn new(vectors: &'a WordVectors, opts: AnalogyOptions) -> Self {
        let norms = (0..vectors.len()).map(|i| norm(vectors.vector(i))).collect();
        AnalogySolver { vectors, norms, opts }
    }

    fn cos(&self, z: usize, q: usize) -> f64 {
        let denom = self.norms[z] * self.norms[q];
        let c = if denom == 0.0 {
            0.0
        } else {
            dot(self.vectors.vector(z), self.vectors.vector(q)) / denom
        };
        if self.opts.shifted {
            (c + 1.0) / 2.0
        } else {
            c
        }
    }

    /// `argmax_z cos(z,y)·cos(z,x*) / (cos(z,x) + ε)` over the candidates
    /// other than the three query words; ties go to the lower index.
    pub fn solve(&self, x: usize, y: usize, x_star: usize) -> Result<Option<usize>, EvalError> {
        if [x, y, x_star].iter().any(|&q| self.norms[q] == 0.0) {
            return Err(EvalError::DegenerateVector);
        }
        let mut best: Option<(usize, f64)> = None;
        for z in 0..self.vectors.len().min(self.opts.max_candidates) {
            if z == x || z == y || z == x_star {
                continue;
            }
            let score = self.cos(z, y) * self.cos(z, x_star) / (self.cos(z, x) + self.opts.epsilon);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((z, score));
            }
        }
        Ok(best.map(|(z, _)| z))
    }
}

/// Solve one analogy by word; `None` when no candidate remains.
pub fn solve_analogy_3cosmul(
    x: &str,
    y: &str,
    x_star: &str,
    vectors: &WordVectors,
    opts: AnalogyOptions,
) -> Result<Option<String>, EvalError> {
    let find = |w: &str| {
        vectors
            .lookup(w)
            .ok_or_else(|| EvalError::OutOfVocabulary(w.to_owned()))
    };
    let (xi, yi, si) = (find(x)?, find(y)?, find(x_star)?);
    let solver = AnalogySolver::new(vectors, opts);
    Ok(solver.solve(xi, yi, si)?.map(|z| vectors.word(z).to_owned()))
}

/// Accuracy of 3CosMul on the quads whose four words are all in the table.
pub fn evaluate_analogy(
    vectors: &WordVectors,
    ds: &AnalogyDataset,
    opts: AnalogyOptions,
) -> Result<EvalReport, EvalError> {
    let solver = AnalogySolver::new(vectors, opts);
    let resolved: Vec<Option<[usize; 4]>> = ds
        .quads
        .iter()
        .map(|q| {
            Some([
                vectors.lookup(&q.x)?,
                vectors.lookup(&q.y)?,
                vectors.lookup(&q.x_star)?,
                vectors.lookup(&q.y_star)?,
            ])
        })
        .collect();
    let skipped = resolved.iter().filter(|r| r.is_none()).count();
    let outcomes: Vec<bool> = resolved
        .par_iter()
        .flatten()
        .map(|&[x, y, s, answer]| Ok(solver.solve(x, y, s)? == Some(answer)))
        .collect::<Result<_, EvalError>>()?;
    if outcomes.is_empty() {
        return Err(EvalError::NoAnalogies {
            dataset: ds.name.clone(),
            skipped,
        });
    }
    let correct = outcomes.iter().filter(|&&c| c).count();
    Ok(EvalReport {
        dataset: ds.name.clone(),
        metric: Metric::Accuracy,
        value: correct as f64 / outcomes.len() as f64,
        evaluated: outcomes.len(),
        skipped_oov: skipped,
    })
}

/// The `k` words most cosine-similar to `query`, excluding the query itself.
pub fn nearest_neighbors(vectors: &WordVectors, query: &str, k: usize) -> Result<Vec<(String, f64)>, EvalError> {
    let q = vectors
        .lookup(query)
        .ok_or_else(|| EvalError::OutOfVocabulary(query.to_owned()))?;
    let qv = vectors.vector(q);
    if norm(qv) == 0.0 {
        return Err(EvalError::DegenerateVector);
    }
    let mut scored: Vec<(usize, f64)> = (0..vectors.len())
        .filter(|&i| i != q)
        .map(|i| (i, cosine(qv, vectors.vector(i)).unwrap_or(0.0)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(i, c)| (vectors.word(i).to_owned(), c))
        .collect())
}
