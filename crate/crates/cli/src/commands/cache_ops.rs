//! `judgekit cache`: export, import, and inspect the judge-feature
//! cache.

use crate::CliError;
use clap::{Args, Subcommand};
use judgekit_core::llm::FeatureCache;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[command(subcommand)]
    pub command: CacheCommand,
}

#[derive(Debug, Subcommand)]
pub enum CacheCommand {
    /// Write all records as sorted JSONL.
    Export {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge records from an exported file.
    Import {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        file: PathBuf,
    },
    /// Print the record count.
    Stats {
        #[arg(long)]
        cache: PathBuf,
    },
}

pub fn run(args: CacheArgs) -> Result<(), CliError> {
    match args.command {
        CacheCommand::Export { cache, out } => {
            let cache = FeatureCache::open(&cache)?;
            let count = cache.export(&out)?;
            println!("exported {count} records to {}", out.display());
        }
        CacheCommand::Import { cache, file } => {
            let store = FeatureCache::open(&cache)?;
            let count = store.import(&file)?;
            store.save()?;
            println!("imported {count} records into {}", cache.display());
        }
        CacheCommand::Stats { cache } => {
            let cache = FeatureCache::open(&cache)?;
            println!("{} records", cache.len());
        }
    }
    Ok(())
}
