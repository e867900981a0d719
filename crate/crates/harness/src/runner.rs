//! Experiment execution on a worker pool.

use crate::catalog::CATALOG_VERSION;
use crate::config::{resolve, trial_seed, with_setting, ExperimentConfig, Resolved};
use crate::error::{HarnessError, Result};
use crate::table::{Metadata, ResultTable};

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "MA_WORKERS";

/// `explicit` (or every available CPU), capped by `MA_WORKERS` when set.
pub fn worker_count(explicit: Option<usize>) -> usize {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let base = explicit.filter(|&n| n > 0).unwrap_or(cpus);
    let cap = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c))
}

pub fn run_config(config: &ExperimentConfig, workers: Option<usize>) -> Result<ResultTable> {
    run_experiment(&resolve(config)?, workers)
}

/// Runs every sweep point of a resolved config.
///
/// Trials run in parallel, but their results are collected and reduced
/// in trial order, so the table does not depend on the worker count.
pub fn run_experiment(resolved: &Resolved, workers: Option<usize>) -> Result<ResultTable> {
    let entry = resolved.entry;
    let info = entry.info();
    let hash = resolved.hash();
    let seeds: Vec<u64> = resolved.seeds.iter().map(|&s| trial_seed(&hash, s)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(workers))
        .build()
        .map_err(|e| HarnessError::Io(format!("cannot start worker pool: {e}")))?;

    let mut columns = entry.columns(&resolved.settings)?;
    let mut rows = Vec::new();
    match &resolved.sweep {
        None => rows = pool.install(|| entry.run(&resolved.settings, &seeds))?,
        Some(sweep) => {
            columns.insert(0, sweep.variable.clone());
            for &v in &sweep.values {
                let settings = entry.resolve(with_setting(&resolved.settings, &sweep.variable, v)?)?;
                for row in pool.install(|| entry.run(&settings, &seeds))? {
                    rows.push(std::iter::once(v).chain(row).collect());
                }
            }
        }
    }

    let table = ResultTable {
        columns,
        rows,
        metadata: Metadata {
            experiment: info.id.to_string(),
            catalog_version: CATALOG_VERSION,
            figure: info.figure.to_string(),
            deviations: info.deviations.iter().map(|d| d.to_string()).collect(),
            config_hash: hash,
            seeds: resolved.seeds.clone(),
            toolkit_version: ma_core::VERSION.to_string(),
            settings: resolved.settings.clone(),
            sweep_variable: resolved.sweep.as_ref().map(|s| s.variable.clone()),
        },
    };
    if !table.is_rectangular() {
        return Err(HarnessError::Io(format!("experiment {} produced ragged rows", info.id)));
    }
    Ok(table)
}
