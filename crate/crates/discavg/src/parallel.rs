//! Thread-pool wrappers around the per-point algorithms. Results are
//! collected in input order, so output does not depend on the thread count.

use discavg_core::diagnostics::{CellScanner, GridSpec, ScanGrid};
use discavg_core::invariants::{numeric_drift, DriftStats};
use discavg_core::jet::TruncatedSeries;
use discavg_core::maps::MapSystem;
use discavg_core::Result;
use rayon::prelude::*;

/// Runs `f` on a pool with `threads` workers (all cores when `None`).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool").install(f)
}

pub fn scan<M: MapSystem + ?Sized>(map: &M, spec: GridSpec, threads: Option<usize>) -> Result<ScanGrid> {
    let scanner = CellScanner::new(spec)?;
    let points = spec.points();
    let cells = with_pool(threads, || {
        points
            .par_iter()
            .map(|&p| scanner.cell(map, p))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ScanGrid { spec, cells })
}

pub fn drift<M: MapSystem + ?Sized>(
    map: &M,
    h: &TruncatedSeries,
    params: &[f64],
    points: &[Vec<f64>],
    steps: usize,
    threads: Option<usize>,
) -> Result<Vec<DriftStats>> {
    with_pool(threads, || {
        points
            .par_iter()
            .map(|p| numeric_drift(map, h, params, p, steps))
            .collect()
    })
}
