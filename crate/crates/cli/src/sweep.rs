use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use ngramvec::evaluation::AnalogyOptions;

use crate::error::UsageError;
use crate::eval::{load_table, AnalogyFlags, Suite, Task};
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Directory holding `<model>.ckpt<i>` files.
    #[arg(long, env = "NGRAMVEC_DIR")]
    pub dir: PathBuf,
    #[arg(long, required = true, num_args = 1.., env = "NGRAMVEC_DATASET", value_delimiter = ',')]
    pub dataset: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Task::Sim, env = "NGRAMVEC_TASK")]
    pub task: Task,
    /// Checkpoints in the full schedule; read from a manifest in the
    /// directory when unset, else 20.
    #[arg(long = "checkpoint-count", env = "NGRAMVEC_CHECKPOINT_COUNT")]
    pub checkpoint_count: Option<usize>,
    /// Only consider checkpoint files whose name starts with this.
    #[arg(long, env = "NGRAMVEC_PREFIX")]
    pub prefix: Option<String>,
    #[command(flatten)]
    pub analogy: AnalogyFlags,
}

pub struct CheckpointFile {
    pub path: PathBuf,
    pub model: String,
    pub index: usize,
}

/// Files named `<model>.ckpt<i>`, sorted by index.
pub fn find_checkpoints(args: &SweepArgs) -> Result<Vec<CheckpointFile>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(&args.dir).with_context(|| format!("reading {}", args.dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if args.prefix.as_deref().is_some_and(|p| !name.starts_with(p)) {
            continue;
        }
        let Some((model, idx)) = name.rsplit_once(".ckpt") else {
            continue;
        };
        let Ok(index) = idx.parse::<usize>() else { continue };
        found.push(CheckpointFile {
            model: model.to_owned(),
            path,
            index,
        });
    }
    if found.is_empty() {
        anyhow::bail!("no checkpoint files in {}", args.dir.display());
    }
    let models: BTreeSet<&str> = found.iter().map(|c| c.model.as_str()).collect();
    if models.len() > 1 {
        let list = models.into_iter().collect::<Vec<_>>().join(", ");
        return Err(UsageError(format!(
            "checkpoints of several models found ({list}); pick one with --prefix"
        ))
        .into());
    }
    found.sort_by_key(|c| c.index);
    Ok(found)
}

fn checkpoint_count(args: &SweepArgs) -> Result<usize> {
    if let Some(n) = args.checkpoint_count {
        return Ok(n);
    }
    for entry in fs::read_dir(&args.dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "manifest") {
            if let Some(n) = RunManifest::read(&path)?.get("checkpoints") {
                return n
                    .parse()
                    .with_context(|| format!("bad checkpoints entry in {}", path.display()));
            }
        }
    }
    Ok(20)
}

pub fn run(args: SweepArgs) -> Result<()> {
    let count = checkpoint_count(&args)?;
    if count == 0 {
        return Err(UsageError("--checkpoint-count must be positive".into()).into());
    }
    let checkpoints = find_checkpoints(&args)?;
    let suite = Suite::load(args.task, &args.dataset)?;
    let opts = AnalogyOptions::from(args.analogy);
    let mut out = io::stdout().lock();
    for c in &checkpoints {
        let table = load_table(&c.path)?;
        let progress = c.index as f64 / count as f64;
        for r in suite.evaluate(&table, opts)? {
            writeln!(out, "{progress:.6}\t{}\t{:.6}", r.dataset, r.value)?;
        }
    }
    Ok(())
}
