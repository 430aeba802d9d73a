//! `judgekit evaluate`: the repeated-run protocol. Each repeat retrains
//! with its own seed (and regroups the test matrix when --k is given),
//! then reports per-run F1/AUROC and their means.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError};
use clap::Args;
use judgekit_core::classifier::{load_model, train};
use judgekit_core::features::{fmt_sig9, FeatureMatrix};
use judgekit_core::pipeline::{
    calibrate_tau, evaluate_model, score_groups, DetectionRun, MetricsReport,
};
use judgekit_core::sweep::regroup_matrix;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Training matrix; retrains per repeat (needs --config or --kind).
    #[arg(long)]
    pub train_matrix: Option<PathBuf>,
    /// Test matrix to score.
    #[arg(long)]
    pub test_matrix: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kind: Option<String>,
    /// Evaluate an already-trained model instead (single run).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of repeats; defaults to the number of --seeds or 1.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Comma-separated seeds, one per repeat.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Regroup the test matrix to groups of this size per repeat.
    #[arg(long)]
    pub k: Option<usize>,
    /// Decision threshold on the aggregated logit.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Pick tau by maximizing F1 on the training matrix groups.
    #[arg(long)]
    pub calibrate_tau: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn write_metrics(out: &Path, report: &MetricsReport) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(
        &serde_json::to_value(report).expect("report serializes"),
    )
    .expect("report canonicalizes");
    std::fs::write(out.join("metrics.json"), body + "\n").map_err(CliError::internal)?;

    let csv_path = out.join("metrics.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::internal(format!("{}: {e}", csv_path.display())))?;
    writer
        .write_record(["run", "seed", "f1", "auroc"])
        .map_err(CliError::internal)?;
    for (i, run) in report.runs.iter().enumerate() {
        writer
            .write_record([
                (i + 1).to_string(),
                run.seed.to_string(),
                fmt_sig9(run.f1),
                fmt_sig9(run.auroc),
            ])
            .map_err(CliError::internal)?;
    }
    writer
        .write_record([
            "mean".to_string(),
            String::new(),
            fmt_sig9(report.mean_f1),
            fmt_sig9(report.mean_auroc),
        ])
        .map_err(CliError::internal)?;
    writer.flush().map_err(CliError::internal)?;
    Ok(())
}

pub fn run(args: EvaluateArgs, argv: Vec<String>) -> Result<(), CliError> {
    let test_matrix = FeatureMatrix::load(&args.test_matrix)?;
    let mut manifest = RunManifest::new(argv);
    manifest
        .hash_input(&args.test_matrix)
        .map_err(CliError::internal)?;

    let report = if let Some(model_path) = &args.model {
        manifest.hash_input(model_path).map_err(CliError::internal)?;
        let model = load_model(model_path)?;
        let test = match args.k {
            Some(k) => regroup_matrix(&test_matrix, k, model.config.seed)?,
            None => test_matrix,
        };
        let (run, n_groups) = evaluate_model(&model, &test, args.tau, model.config.seed)?;
        MetricsReport {
            mean_f1: run.f1,
            mean_auroc: run.auroc,
            runs: vec![run],
            n_groups,
            tau: args.tau,
        }
    } else {
        let train_path = args
            .train_matrix
            .as_ref()
            .ok_or_else(|| CliError::input("provide --model or --train-matrix"))?;
        manifest.hash_input(train_path).map_err(CliError::internal)?;
        let train_matrix = FeatureMatrix::load(train_path)?;
        let (cfg, cfg_bytes) = super::resolve_train_config(&args.config, &args.kind, None)?;
        if let Some(bytes) = cfg_bytes {
            manifest.set_config_bytes(&bytes);
        }
        let seeds = super::resolve_seeds(args.repeats, &args.seeds, cfg.seed)?;
        manifest.seeds = seeds.clone();

        let mut runs: Vec<DetectionRun> = Vec::with_capacity(seeds.len());
        let mut n_groups = 0;
        let mut tau_used = args.tau;
        for &seed in &seeds {
            let model = train(&train_matrix, &cfg.with_seed(seed))?;
            if args.calibrate_tau {
                let groups = score_groups(&model, &train_matrix, args.tau)?;
                let aggregates: Vec<f64> = groups.iter().map(|g| g.aggregate).collect();
                let labels: Vec<u8> = groups
                    .iter()
                    .map(|g| g.true_label.unwrap_or(0))
                    .collect();
                tau_used = calibrate_tau(&aggregates, &labels)?;
            }
            let test = match args.k {
                Some(k) => regroup_matrix(&test_matrix, k, seed)?,
                None => test_matrix.clone(),
            };
            let (run, groups) = evaluate_model(&model, &test, tau_used, seed)?;
            n_groups = groups;
            runs.push(run);
        }
        let n = runs.len() as f64;
        MetricsReport {
            mean_f1: runs.iter().map(|r| r.f1).sum::<f64>() / n,
            mean_auroc: runs.iter().map(|r| r.auroc).sum::<f64>() / n,
            runs,
            n_groups,
            tau: tau_used,
        }
    };

    ensure_out_dir(&args.out)?;
    write_metrics(&args.out, &report)?;
    manifest.write(&args.out).map_err(CliError::internal)?;
    for (i, run) in report.runs.iter().enumerate() {
        println!(
            "run {} (seed {}): f1={:.4} auroc={:.4}",
            i + 1,
            run.seed,
            run.f1,
            run.auroc
        );
    }
    println!(
        "mean over {} runs on {} groups: f1={:.4} auroc={:.4} (tau={})",
        report.runs.len(),
        report.n_groups,
        report.mean_f1,
        report.mean_auroc,
        report.tau
    );
    Ok(())
}
