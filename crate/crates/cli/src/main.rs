use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use remac::harness::{
    self, emit_csv, emit_gap_csv, emit_trials_csv, gap_csv, nmse_csv, run_gap_experiment, run_nmse,
    ExperimentConfig, GridKind, Scheme,
};
use remac::{
    build_codebook, build_constraints, codesign::validate_design, oracle::overlap_check,
    DesignArtifact,
};

#[derive(Parser)]
#[command(name = "remac", version, about = "Joint constellation and repetition-code design for computing over the air")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; defaults to the configured output, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Monte-Carlo trials.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a design and save it as a JSON artifact.
    Design {
        #[command(flatten)]
        common: Common,
        /// Slot count; defaults to the first L of the ReMAC scheme, else 1.
        #[arg(long = "slots", short = 'L')]
        l: Option<usize>,
    },
    /// Check an artifact against its separation constraints.
    Validate {
        /// Design artifact (JSON).
        #[arg(long)]
        artifact: PathBuf,
        /// Noise variance of the thresholds; defaults to the one the design was solved for.
        #[arg(long)]
        sigma_z2: Option<f64>,
        /// Report path; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NMSE at a single channel point.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// NMSE over the `snr_db` grid.
    SweepSnr {
        #[command(flatten)]
        common: Common,
    },
    /// NMSE over the `sigma_h2` grid.
    SweepFading {
        #[command(flatten)]
        common: Common,
    },
    /// Optimality gap of the returned coding matrix over `gap.k_values`.
    Gap {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = common.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("starting the worker pool")?;
    }
    Ok(cfg)
}

fn output_path(common: &Common, cfg: &ExperimentConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| cfg.output.clone())
}

fn write_or_print(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn sweep(common: &Common, kind: Option<GridKind>) -> Result<()> {
    let cfg = load_config(common)?;
    let kind = match kind {
        Some(k) => k,
        None => cfg.channel.single_point_kind()?,
    };
    let result = run_nmse(&cfg, kind)?;
    for row in result.rows.iter().filter(|r| r.excluded > 0) {
        eprintln!(
            "{} L={} at {}: {} trials with f = 0 excluded",
            row.scheme.name(),
            row.l,
            row.grid,
            row.excluded
        );
    }
    match output_path(common, &cfg) {
        Some(path) => {
            emit_csv(&result, &path)?;
            if cfg.dump_trials {
                let mut name = path.clone().into_os_string();
                name.push(".trials.csv");
                emit_trials_csv(&result, PathBuf::from(name))?;
            }
        }
        None => print!("{}", nmse_csv(&result)),
    }
    Ok(())
}

fn design(common: &Common, l: Option<usize>) -> Result<()> {
    let cfg = load_config(common)?;
    cfg.validate()?;
    let l = l
        .or_else(|| {
            cfg.schemes
                .iter()
                .find(|s| s.scheme == Scheme::Remac)
                .and_then(|s| s.l.first().copied())
        })
        .unwrap_or(1);
    let table = harness::build_table(&cfg)?;
    let mut solver = cfg.solver.clone();
    solver.seed = cfg.seed;
    let prepared = harness::DesignCache::new(cfg.cache_dir.clone()).get(
        &table,
        l,
        cfg.design_sigma_z2,
        cfg.shared_modulation,
        &solver,
    )?;
    let art = DesignArtifact::new(&prepared.design, &table, cfg.seed).with_codebook(&prepared.codebook);
    eprintln!(
        "{} K={} Q={} L={l}: {} ones, {} merged cells, thresholds at sigma_z2 = {:e}",
        table.kind.name(),
        table.k,
        table.q,
        prepared.design.c.ones_count(),
        prepared.codebook.merged_cells(),
        prepared.design.meta.design_sigma_z2
    );
    write_or_print(output_path(common, &cfg).as_deref(), &art.to_json()?)
}

fn validate(artifact: &Path, sigma_z2: Option<f64>, out: Option<&Path>) -> Result<bool> {
    let art = DesignArtifact::load(artifact)?;
    let design = art.design()?;
    let table = art.table()?;
    let sigma = sigma_z2.unwrap_or(design.meta.design_sigma_z2);
    let cs = build_constraints(&table, sigma, design.shared_modulation)?;
    let report = validate_design(&design, &cs);
    let overlap = overlap_check(&design, &table)?;
    let merged = build_codebook(&design, &table)?.merged_cells();
    let valid = report.is_valid() && overlap.exact;
    let summary = serde_json::json!({
        "valid": valid,
        "sigma_z2": sigma,
        "constraints": report.total,
        "satisfied": report.satisfied,
        "violations": report.violations.iter().take(20).collect::<Vec<_>>(),
        "violation_count": report.violations.len(),
        "power": report.power,
        "power_ok": report.power_ok,
        "min_ratio": report.min_ratio,
        "exact": overlap.exact,
        "collision_count": overlap.collision_count,
        "merged_cells": merged,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    write_or_print(out, &text)?;
    Ok(valid)
}

fn gap(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let result = run_gap_experiment(&cfg)?;
    match output_path(common, &cfg) {
        Some(path) => emit_gap_csv(&result, path)?,
        None => print!("{}", gap_csv(&result)),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<remac::Error>() {
        Some(e) if e.is_infeasible() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Design { common, l } => design(common, *l),
        Command::Validate {
            artifact,
            sigma_z2,
            out,
        } => match validate(artifact, *sigma_z2, out.as_deref()) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: design violates its separation constraints");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::Simulate { common } => sweep(common, None),
        Command::SweepSnr { common } => sweep(common, Some(GridKind::Snr)),
        Command::SweepFading { common } => sweep(common, Some(GridKind::Fading)),
        Command::Gap { common } => gap(common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
