use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use ngramvec::model_store::{save_vectors, VectorFormat};
use ngramvec::trainer::{run_training, Checkpoint, ModelVariant, RunOptions, TrainingConfig};

use crate::error::UsageError;
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Cbow,
    #[value(name = "cbow_char")]
    CbowChar,
    Skipgram,
    #[value(name = "skipgram_char")]
    SkipgramChar,
    Sent2vec,
}

impl From<Model> for ModelVariant {
    fn from(m: Model) -> Self {
        match m {
            Model::Cbow => ModelVariant::Cbow,
            Model::CbowChar => ModelVariant::CbowChar,
            Model::Skipgram => ModelVariant::Skipgram,
            Model::SkipgramChar => ModelVariant::SkipgramChar,
            Model::Sent2vec => ModelVariant::Sent2vec,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "vec",
            Format::Binary => "bin",
        }
    }
}

impl From<Format> for VectorFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => VectorFormat::Text,
            Format::Binary => VectorFormat::Binary,
        }
    }
}

/// Unset flags take the published value for the chosen model and word
/// n-gram order.
#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Corpus: one tokenized sentence per line.
    #[arg(long, env = "NGRAMVEC_INPUT")]
    pub input: PathBuf,
    /// Output prefix; vectors go to `<prefix>.vec` (or `.bin`).
    #[arg(long, env = "NGRAMVEC_OUTPUT")]
    pub output: PathBuf,
    #[arg(long, value_enum, env = "NGRAMVEC_MODEL")]
    pub model: Model,
    #[arg(long, env = "NGRAMVEC_DIM")]
    pub dim: Option<usize>,
    /// Maximum context window (CBOW and skip-gram).
    #[arg(long, env = "NGRAMVEC_WS")]
    pub ws: Option<usize>,
    #[arg(long, env = "NGRAMVEC_EPOCHS")]
    pub epochs: Option<usize>,
    /// Initial learning rate, decayed linearly to zero.
    #[arg(long, env = "NGRAMVEC_LR")]
    pub lr: Option<f64>,
    /// Subsampling threshold.
    #[arg(long, env = "NGRAMVEC_T")]
    pub t: Option<f64>,
    /// Highest word n-gram order (1 = unigrams only).
    #[arg(long = "word-ngrams", env = "NGRAMVEC_WORD_NGRAMS")]
    pub word_ngrams: Option<usize>,
    #[arg(long = "word-bucket", env = "NGRAMVEC_WORD_BUCKET")]
    pub word_bucket: Option<usize>,
    #[arg(long = "char-bucket", env = "NGRAMVEC_CHAR_BUCKET")]
    pub char_bucket: Option<usize>,
    #[arg(long, env = "NGRAMVEC_MINN")]
    pub minn: Option<usize>,
    #[arg(long, env = "NGRAMVEC_MAXN")]
    pub maxn: Option<usize>,
    /// Negatives per example.
    #[arg(long, env = "NGRAMVEC_NEG")]
    pub neg: Option<usize>,
    /// Word n-grams dropped from each context.
    #[arg(long = "dropout-k", env = "NGRAMVEC_DROPOUT_K")]
    pub dropout_k: Option<usize>,
    /// Fraction of training after which to stop.
    #[arg(long, env = "NGRAMVEC_HALT")]
    pub halt: Option<f64>,
    #[arg(long = "min-count", env = "NGRAMVEC_MIN_COUNT")]
    pub min_count: Option<u64>,
    #[arg(long = "max-vocab", env = "NGRAMVEC_MAX_VOCAB")]
    pub max_vocab: Option<usize>,
    /// Number of equidistant checkpoints.
    #[arg(long, env = "NGRAMVEC_CHECKPOINTS")]
    pub checkpoints: Option<usize>,
    #[arg(long, default_value_t = 1, env = "NGRAMVEC_THREADS")]
    pub threads: usize,
    /// One or more seeds (comma separated); one model per seed.
    #[arg(long, value_delimiter = ',', default_value = "0", env = "NGRAMVEC_SEED")]
    pub seed: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text, env = "NGRAMVEC_FORMAT")]
    pub format: Format,
    /// Do not write checkpoint files.
    #[arg(long = "no-checkpoints", env = "NGRAMVEC_NO_CHECKPOINTS")]
    pub no_checkpoints: bool,
    /// Validate the flags and write the manifest without training.
    #[arg(long = "dry-run", env = "NGRAMVEC_DRY_RUN")]
    pub dry_run: bool,
    /// Suppress progress lines.
    #[arg(long, short, env = "NGRAMVEC_QUIET")]
    pub quiet: bool,
}

/// Resolve flags into a validated configuration (seed left at its default).
pub fn build_config(args: &TrainArgs) -> Result<TrainingConfig> {
    let variant = ModelVariant::from(args.model);
    let order = args.word_ngrams.unwrap_or(1);
    if !(1..=3).contains(&order) {
        return Err(UsageError(format!("--word-ngrams must be 1, 2 or 3, got {order}")).into());
    }
    if !variant.uses_char_ngrams() {
        for (flag, set) in [
            ("--minn", args.minn.is_some()),
            ("--maxn", args.maxn.is_some()),
            ("--char-bucket", args.char_bucket.is_some()),
        ] {
            if set {
                return Err(UsageError(format!("{flag} requires a char model (cbow_char or skipgram_char)")).into());
            }
        }
    }
    if order < 2 {
        for (flag, set) in [
            ("--word-bucket", args.word_bucket.is_some()),
            ("--dropout-k", args.dropout_k.is_some()),
        ] {
            if set {
                return Err(UsageError(format!("{flag} requires --word-ngrams 2 or 3")).into());
            }
        }
    }
    if !variant.uses_window() && args.ws.is_some() {
        return Err(UsageError("--ws has no effect for sent2vec, which uses the whole sentence".into()).into());
    }

    let mut cfg = TrainingConfig::preset(variant, order);
    macro_rules! overlay {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { cfg.$field = v; })*
        };
    }
    overlay!(
        dim => dim,
        ws => window_size,
        epochs => epochs,
        lr => initial_lr,
        t => subsampling_t,
        word_bucket => word_bucket,
        char_bucket => char_bucket,
        minn => min_n,
        maxn => max_n,
        neg => negatives,
        dropout_k => dropout_k,
        halt => halt_fraction,
        min_count => min_count,
        max_vocab => max_vocab,
        checkpoints => checkpoint_count,
    );
    cfg.validate()?;
    Ok(cfg)
}

pub fn vectors_path(prefix: &Path, seed: u64, multi_seed: bool, format: Format) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    if multi_seed {
        name.push(format!(".seed{seed}"));
    }
    name.push(format!(".{}", format.extension()));
    PathBuf::from(name)
}

pub fn checkpoint_path(final_path: &Path, index: usize) -> PathBuf {
    let mut name = final_path.as_os_str().to_owned();
    name.push(format!(".ckpt{index}"));
    PathBuf::from(name)
}

pub fn manifest_path(prefix: &Path) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

pub fn run(args: TrainArgs) -> Result<()> {
    if args.threads == 0 {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    let base = build_config(&args)?;
    let multi = args.seed.len() > 1;

    let mut manifest = RunManifest::default();
    for (k, v) in base.to_key_values() {
        if k != "seed" {
            manifest.push(k, v);
        }
    }
    manifest.push("corpus", args.input.display());
    manifest.push("threads", args.threads);
    manifest.push("format", args.format.extension());
    manifest.push(
        "seeds",
        args.seed.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );

    if args.dry_run {
        return manifest.write(&manifest_path(&args.output));
    }
    for &seed in &args.seed {
        let cfg = TrainingConfig { seed, ..base.clone() };
        let out = vectors_path(&args.output, seed, multi, args.format);
        let format = args.format.into();
        let opts = RunOptions {
            parallelism: args.threads,
            report_progress: !args.quiet,
            record_losses: false,
        };
        let write_checkpoints = !args.no_checkpoints;
        let sink = |ckpt: &Checkpoint| {
            if write_checkpoints {
                save_vectors(ckpt.vectors, checkpoint_path(&out, ckpt.index), format).map_err(|e| e.to_string())
            } else {
                Ok(())
            }
        };
        let outcome =
            run_training(&args.input, &cfg, &opts, sink).with_context(|| format!("training with seed {seed}"))?;
        save_vectors(&outcome.vectors, &out, format).with_context(|| format!("writing {}", out.display()))?;

        manifest.push(format!("output.{seed}"), out.display());
        manifest.push(format!("vocab_size.{seed}"), outcome.vocab.len());
        manifest.push(format!("stopped_at.{seed}"), format!("{:.6}", outcome.final_progress()));
        if write_checkpoints {
            for c in &outcome.checkpoints {
                manifest.push(
                    format!("checkpoint.{seed}.{}", c.index),
                    checkpoint_path(&out, c.index).display(),
                );
            }
        }
        if !args.quiet {
            eprintln!(
                "seed {seed}: {} words, stopped at {:.1}% of training, wrote {}",
                outcome.vocab.len(),
                100.0 * outcome.final_progress(),
                out.display()
            );
        }
    }
    manifest.write(&manifest_path(&args.output))
}

#[cfg(test)]
mod tests {
    use clap::Parser;

    use super::*;

    #[derive(Parser)]
    struct Wrapper {
        #[command(flatten)]
        args: TrainArgs,
    }

    fn parse(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["train", "--input", "c.txt", "--output", "out"];
        argv.extend_from_slice(extra);
        Wrapper::try_parse_from(argv).unwrap().args
    }

    #[test]
    fn sent2vec_trigram_column_is_accepted() {
        let args = parse(&[
            "--model",
            "sent2vec",
            "--word-ngrams",
            "3",
            "--word-bucket",
            "4000000",
            "--dropout-k",
            "4",
            "--neg",
            "10",
            "--lr",
            "0.2",
            "--epochs",
            "9",
            "--t",
            "5e-6",
        ]);
        let cfg = build_config(&args).unwrap();
        assert_eq!(cfg, TrainingConfig::preset(ModelVariant::Sent2vec, 3));
    }

    #[test]
    fn cbow_char_trigram_column_is_accepted() {
        let args = parse(&[
            "--model",
            "cbow_char",
            "--word-ngrams",
            "3",
            "--word-bucket",
            "4000000",
            "--char-bucket",
            "2000000",
            "--dropout-k",
            "2",
            "--halt",
            "0.8",
        ]);
        let cfg = build_config(&args).unwrap();
        assert_eq!(cfg, TrainingConfig::preset(ModelVariant::CbowChar, 3));
        assert_eq!(cfg.halt_fraction, 0.8);
    }

    #[test]
    fn minn_without_char_model_is_rejected() {
        let err = build_config(&parse(&["--model", "cbow", "--minn", "3"])).unwrap_err();
        assert!(err.is::<UsageError>());
        assert!(build_config(&parse(&["--model", "sent2vec", "--ws", "5"])).is_err());
        assert!(build_config(&parse(&["--model", "cbow", "--dropout-k", "2"])).is_err());
        assert!(build_config(&parse(&["--model", "skipgram", "--word-ngrams", "2"])).is_err());
        assert!(build_config(&parse(&["--model", "cbow", "--halt", "1.5"])).is_err());
    }

    #[test]
    fn output_paths() {
        let p = Path::new("/tmp/run");
        assert_eq!(vectors_path(p, 3, false, Format::Text), Path::new("/tmp/run.vec"));
        assert_eq!(
            vectors_path(p, 3, true, Format::Binary),
            Path::new("/tmp/run.seed3.bin")
        );
        assert_eq!(
            checkpoint_path(Path::new("/tmp/run.vec"), 16),
            Path::new("/tmp/run.vec.ckpt16")
        );
    }
}
