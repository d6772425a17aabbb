//! Worker pools and order-preserving parallel maps.
//!
//! Items are evaluated independently and collected in input order, so the
//! result never depends on the worker count or on scheduling.

use std::sync::Arc;

use gb_core::index_form::{positivity_cell, PositivityReport, ScanConfig};
use gb_core::model::{Hamiltonian, Lagrangian, PhasePoint};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    if workers == 0 {
        return Err(CliError::config("workers", "worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config("workers", e.to_string()))
}

/// `f` over `items` on `workers` threads, results in input order.
pub fn ordered_map<T, R, E, F>(workers: usize, items: &[T], f: F) -> CliResult<Result<Vec<R>, E>>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    let pool = pool(workers)?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Positivity scan over samples × lengths, evaluated cell by cell in
/// parallel and merged in sample-major order.
pub fn positivity_scan(
    lag: &dyn Lagrangian,
    ham: &Arc<dyn Hamiltonian>,
    samples: &[PhasePoint],
    cfg: &ScanConfig,
    workers: usize,
) -> CliResult<PositivityReport> {
    let cells: Vec<(usize, f64)> =
        (0..samples.len()).flat_map(|i| cfg.t_list.iter().map(move |&t| (i, t))).collect();
    let out = ordered_map(workers, &cells, |&(i, t)| positivity_cell(lag, ham, i, &samples[i], t, cfg))??;
    Ok(PositivityReport::from_cells(out))
}
