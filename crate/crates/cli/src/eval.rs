use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use ngramvec::evaluation::{
    evaluate_analogy, evaluate_similarity, AnalogyDataset, AnalogyOptions, EvalReport, Metric, SimilarityDataset,
};
use ngramvec::model_store::{load_vectors, WordVectors};

use crate::manifest::RunManifest;
use crate::stats::mean_std;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Sim,
    Analogy,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Vector files, typically one per seed.
    #[arg(long, required = true, num_args = 1.., env = "NGRAMVEC_VECTORS", value_delimiter = ',')]
    pub vectors: Vec<PathBuf>,
    /// Dataset files.
    #[arg(long, required = true, num_args = 1.., env = "NGRAMVEC_DATASET", value_delimiter = ',')]
    pub dataset: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Task::Sim, env = "NGRAMVEC_TASK")]
    pub task: Task,
    /// Model label for the output; derived from the first vector file if unset.
    #[arg(long, env = "NGRAMVEC_NAME")]
    pub name: Option<String>,
    #[command(flatten)]
    pub analogy: AnalogyFlags,
    /// Append the mean/std table to this manifest.
    #[arg(long, env = "NGRAMVEC_MANIFEST")]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct AnalogyFlags {
    /// Use raw cosines instead of `(cos + 1) / 2` in 3CosMul.
    #[arg(long = "raw-cosines", env = "NGRAMVEC_RAW_COSINES")]
    pub raw_cosines: bool,
    #[arg(long, default_value_t = 1e-4, env = "NGRAMVEC_EPSILON")]
    pub epsilon: f64,
    /// Only the first N words of each table are analogy candidates.
    #[arg(long = "max-candidates", default_value_t = 200_000, env = "NGRAMVEC_MAX_CANDIDATES")]
    pub max_candidates: usize,
}

impl From<AnalogyFlags> for AnalogyOptions {
    fn from(f: AnalogyFlags) -> Self {
        AnalogyOptions {
            epsilon: f.epsilon,
            shifted: !f.raw_cosines,
            max_candidates: f.max_candidates,
        }
    }
}

pub enum Suite {
    Similarity(Vec<SimilarityDataset>),
    Analogy(Vec<AnalogyDataset>),
}

impl Suite {
    pub fn load(task: Task, paths: &[PathBuf]) -> Result<Self> {
        match task {
            Task::Sim => paths
                .iter()
                .map(|p| SimilarityDataset::load(p).with_context(|| format!("loading dataset {}", p.display())))
                .collect::<Result<_>>()
                .map(Suite::Similarity),
            Task::Analogy => {
                let mut all = Vec::new();
                for p in paths {
                    let ds = AnalogyDataset::load(p).with_context(|| format!("loading dataset {}", p.display()))?;
                    let split = ds.split_google();
                    all.push(ds);
                    if let Some((sem, syn)) = split {
                        all.push(sem);
                        all.push(syn);
                    }
                }
                Ok(Suite::Analogy(all))
            }
        }
    }

    pub fn evaluate(&self, vectors: &WordVectors, opts: AnalogyOptions) -> Result<Vec<EvalReport>> {
        match self {
            Suite::Similarity(sets) => sets
                .iter()
                .map(|ds| evaluate_similarity(vectors, ds).with_context(|| format!("evaluating {}", ds.name)))
                .collect(),
            Suite::Analogy(sets) => sets
                .iter()
                .map(|ds| evaluate_analogy(vectors, ds, opts).with_context(|| format!("evaluating {}", ds.name)))
                .collect(),
        }
    }
}

pub fn load_table(path: &Path) -> Result<WordVectors> {
    load_vectors(path).with_context(|| format!("loading vectors {}", path.display()))
}

/// `run.seed3.vec` and `run.vec` both become `run`.
pub fn model_label(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut parts: Vec<&str> = name.split('.').collect();
    if parts.len() > 1 && matches!(parts.last(), Some(&"vec" | &"bin" | &"txt")) {
        parts.pop();
    }
    if parts.len() > 1
        && parts
            .last()
            .is_some_and(|p| p.strip_prefix("seed").is_some_and(|d| d.parse::<u64>().is_ok()))
    {
        parts.pop();
    }
    parts.join(".")
}

pub struct Row {
    pub dataset: String,
    pub metric: Metric,
    pub values: Vec<f64>,
}

impl Row {
    pub fn mean_std(&self) -> (f64, Option<f64>) {
        mean_std(&self.values)
    }
}

pub fn format_std(std: Option<f64>) -> String {
    std.map_or_else(|| "NA".to_owned(), |s| format!("{s:.6}"))
}

pub fn run(args: EvalArgs) -> Result<()> {
    let suite = Suite::load(args.task, &args.dataset)?;
    let opts = AnalogyOptions::from(args.analogy);
    let model = args.name.clone().unwrap_or_else(|| model_label(&args.vectors[0]));

    let mut rows: Vec<Row> = Vec::new();
    for path in &args.vectors {
        let table = load_table(path)?;
        let reports = suite.evaluate(&table, opts)?;
        for (i, r) in reports.into_iter().enumerate() {
            eprintln!(
                "{}\t{}\t{} {:.4}\t({} evaluated, {} skipped)",
                path.display(),
                r.dataset,
                r.metric,
                r.value,
                r.evaluated,
                r.skipped_oov
            );
            match rows.get_mut(i) {
                Some(row) => row.values.push(r.value),
                None => rows.push(Row {
                    dataset: r.dataset,
                    metric: r.metric,
                    values: vec![r.value],
                }),
            }
        }
    }

    eprintln!();
    eprintln!("{}", render_table(&model, &rows));

    let mut out = io::stdout().lock();
    let mut manifest = RunManifest::default();
    for row in &rows {
        let (mean, std) = row.mean_std();
        writeln!(
            out,
            "{model}\t{}\t{}\t{mean:.6}\t{}",
            row.dataset,
            row.metric,
            format_std(std)
        )?;
        manifest.push(
            format!("eval.{}.{}.mean", row.dataset, row.metric),
            format!("{mean:.6}"),
        );
        if let Some(s) = std {
            manifest.push(format!("eval.{}.{}.std", row.dataset, row.metric), format!("{s:.6}"));
        }
        manifest.push(format!("eval.{}.{}.n", row.dataset, row.metric), row.values.len());
    }
    if let Some(path) = &args.manifest {
        manifest.append_to(path)?;
    }
    Ok(())
}

/// Fixed-width summary; the std column is dropped when every row has a
/// single value.
pub fn render_table(model: &str, rows: &[Row]) -> String {
    let with_std = rows.iter().any(|r| r.values.len() > 1);
    let dw = rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max(7);
    let mw = model.len().max(5);
    let mut out = if with_std {
        format!(
            "{:<mw$}  {:<dw$}  {:<8}  {:>8}  {:>8}  {:>3}\n",
            "model", "dataset", "metric", "mean", "std", "n"
        )
    } else {
        format!(
            "{:<mw$}  {:<dw$}  {:<8}  {:>8}  {:>3}\n",
            "model", "dataset", "metric", "mean", "n"
        )
    };
    for row in rows {
        let (mean, std) = row.mean_std();
        let metric = row.metric.to_string();
        if with_std {
            let std = std.map_or_else(|| "-".to_owned(), |s| format!("{s:.4}"));
            out.push_str(&format!(
                "{model:<mw$}  {:<dw$}  {metric:<8}  {mean:>8.4}  {std:>8}  {:>3}\n",
                row.dataset,
                row.values.len()
            ));
        } else {
            out.push_str(&format!(
                "{model:<mw$}  {:<dw$}  {metric:<8}  {mean:>8.4}  {:>3}\n",
                row.dataset,
                row.values.len()
            ));
        }
    }
    out
}
