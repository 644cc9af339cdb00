use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use ngramvec::evaluation::nearest_neighbors;

use crate::eval::load_table;

#[derive(Args, Debug)]
pub struct NnArgs {
    #[arg(long, env = "NGRAMVEC_VECTORS")]
    pub vectors: PathBuf,
    #[arg(long, env = "NGRAMVEC_QUERY")]
    pub query: String,
    /// Number of neighbors.
    #[arg(short, long, default_value_t = 10, env = "NGRAMVEC_K")]
    pub k: usize,
}

pub fn run(args: NnArgs) -> Result<()> {
    let table = load_table(&args.vectors)?;
    let neighbors =
        nearest_neighbors(&table, &args.query, args.k).with_context(|| format!("query {:?}", args.query))?;
    let mut out = io::stdout().lock();
    for (word, cos) in neighbors {
        writeln!(out, "{word}\t{cos:.6}")?;
    }
    Ok(())
}
