//! Monte-Carlo NMSE sweeps.
//!
//! Trial `j` owns ChaCha stream `j` under the experiment seed. It first draws
//! the input tuple and then feeds the channel, so every scheme and grid point
//! sees the same tuples and the same standard-normal noise draws.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cache::{DesignCache, Prepared};
use super::config::{ExperimentConfig, GridKind, Scheme, SchemeConfig};
use crate::artifact::DesignArtifact;
use crate::baselines::{bitslice_estimate, channelcomp_repeat_estimate, DigitalAircomp};
use crate::channel::{transmit, ChannelModel};
use crate::decoder::{build_codebook, decode};
use crate::error::{Error, Result};
use crate::function_space::{build_function_table, FunctionTable};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub grid: f64,
    pub scheme: Scheme,
    pub l: usize,
    pub nmse: f64,
    pub stderr: f64,
    /// Trials that entered the average.
    pub trials: usize,
    /// Trials dropped because `f = 0`.
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub grid: f64,
    pub scheme: Scheme,
    pub l: usize,
    pub trial: usize,
    pub tuple: usize,
    pub f: f64,
    pub f_hat: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// Per-trial records, kept when the configuration asks for them.
    pub trials: Vec<TrialRecord>,
}

/// Mean and standard error of per-trial relative squared errors.
pub fn summarize(errors: &[f64]) -> (f64, f64) {
    let n = errors.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = errors.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

enum Estimator {
    Remac(Arc<Prepared>),
    Repeat(Arc<Prepared>, usize),
    Aircomp(DigitalAircomp, usize),
    BitSlicing(usize),
}

impl Estimator {
    fn estimate(
        &self,
        table: &FunctionTable,
        tuple: usize,
        model: &ChannelModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        match self {
            Estimator::Remac(p) => decode(&p.codebook, &transmit(&p.design, tuple, model, rng)),
            Estimator::Repeat(p, l) => {
                channelcomp_repeat_estimate(&p.design, &p.codebook, tuple, *l, model, rng)
            }
            Estimator::Aircomp(rx, l) => rx.estimate(table, tuple, *l, model, rng),
            Estimator::BitSlicing(l) => bitslice_estimate(table, tuple, *l, model, rng),
        }
    }
}

pub fn build_table(config: &ExperimentConfig) -> Result<FunctionTable> {
    build_function_table(config.function_kind, config.k, config.q, config.values.clone(), None)
}

fn load_artifact(path: &std::path::Path, table: &FunctionTable, l: usize) -> Result<Option<Prepared>> {
    let art = DesignArtifact::load(path)?;
    if art.l != l {
        return Ok(None);
    }
    if art.k != table.k || art.q != table.q || art.function_kind != table.kind {
        return Err(Error::Config(format!(
            "{} was built for {} K={} Q={}",
            path.display(),
            art.function_kind.name(),
            art.k,
            art.q
        )));
    }
    let design = art.design()?;
    let codebook = match art.codebook() {
        Some(cb) => cb,
        None => build_codebook(&design, table)?,
    };
    Ok(Some(Prepared { design, codebook }))
}

fn remac_design(
    config: &ExperimentConfig,
    spec: &SchemeConfig,
    table: &FunctionTable,
    cache: &DesignCache,
    l: usize,
) -> Result<Arc<Prepared>> {
    for path in &spec.artifacts {
        if let Some(p) = load_artifact(path, table, l)? {
            return Ok(Arc::new(p));
        }
    }
    let mut solver = config.solver.clone();
    solver.seed = config.seed;
    cache.get(table, l, config.design_sigma_z2, config.shared_modulation, &solver)
}

fn estimator(
    config: &ExperimentConfig,
    spec: &SchemeConfig,
    table: &FunctionTable,
    cache: &DesignCache,
    l: usize,
) -> Result<Estimator> {
    Ok(match spec.scheme {
        Scheme::Remac => Estimator::Remac(remac_design(config, spec, table, cache, l)?),
        Scheme::ChannelcompRepeat => Estimator::Repeat(remac_design(config, spec, table, cache, 1)?, l),
        Scheme::DigitalAircomp => Estimator::Aircomp(DigitalAircomp::new(table, spec.alpha())?, l),
        Scheme::BitSlicing => Estimator::BitSlicing(l),
    })
}

/// Run every configured (scheme, L) over the grid of `kind`. Rows come out
/// grid-major, then in configuration order.
pub fn run_nmse(config: &ExperimentConfig, kind: GridKind) -> Result<ExperimentResult> {
    run_nmse_with_cache(config, kind, &DesignCache::new(config.cache_dir.clone()))
}

pub fn run_nmse_with_cache(
    config: &ExperimentConfig,
    kind: GridKind,
    cache: &DesignCache,
) -> Result<ExperimentResult> {
    config.validate_sweep()?;
    let points = config.channel.points(kind)?;
    let table = build_table(config)?;

    let series: Vec<(&SchemeConfig, usize)> = config
        .schemes
        .iter()
        .flat_map(|s| s.l.iter().map(move |&l| (s, l)))
        .collect();
    let estimators = series
        .iter()
        .map(|&(spec, l)| estimator(config, spec, &table, cache, l))
        .collect::<Result<Vec<_>>>()?;

    let mut result = ExperimentResult::default();
    for point in &points {
        for (&(spec, l), est) in series.iter().zip(&estimators) {
            let outcomes: Vec<(usize, f64, f64)> = (0..config.trials)
                .into_par_iter()
                .map(|j| {
                    let mut rng = trial_rng(config.seed, j);
                    let tuple = rng.gen_range(0..table.num_tuples());
                    let f_hat = est.estimate(&table, tuple, &point.model, &mut rng)?;
                    Ok((tuple, table.output(tuple), f_hat))
                })
                .collect::<Result<Vec<_>>>()?;
            let errors: Vec<f64> = outcomes
                .iter()
                .filter(|(_, f, _)| *f != 0.0)
                .map(|(_, f, f_hat)| ((f - f_hat) / f).powi(2))
                .collect();
            let (nmse, stderr) = summarize(&errors);
            result.rows.push(ResultRow {
                grid: point.value,
                scheme: spec.scheme,
                l,
                nmse,
                stderr,
                trials: errors.len(),
                excluded: outcomes.len() - errors.len(),
            });
            if config.dump_trials {
                result
                    .trials
                    .extend(outcomes.iter().enumerate().map(|(j, &(tuple, f, f_hat))| TrialRecord {
                        grid: point.value,
                        scheme: spec.scheme,
                        l,
                        trial: j,
                        tuple,
                        f,
                        f_hat,
                    }));
            }
        }
    }
    Ok(result)
}
