//! Parallel fan-out of replications and sweep cells.
//!
//! Work runs on a rayon pool capped by `FLEETSIM_THREADS` (default: all
//! cores). Results are always ordered by seed and by cell, never by
//! completion time.

use fleetsim_core::engine::{self, ExperimentOptions, ExperimentResult, Trace};
use fleetsim_core::{PolicyId, SystemConfig};
use rayon::prelude::*;

use crate::{CliError, CliResult};

pub const THREADS_ENV: &str = "FLEETSIM_THREADS";

/// Worker count: `FLEETSIM_THREADS` if set to a positive integer, otherwise
/// the available parallelism.
pub fn threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool() -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads())
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn run_cell(config: &SystemConfig, policy: PolicyId, opts: &ExperimentOptions) -> CliResult<(ExperimentResult, Vec<Trace>)> {
    if opts.replications < 2 {
        return Err(CliError::Usage("an experiment needs at least 2 replications".into()));
    }
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let layout = engine::depot_layout(config)?;
    let seeds: Vec<u64> = opts.seeds().collect();
    let traces = seeds
        .par_iter()
        .map(|&seed| engine::run_replication(config, policy, &layout, seed, &opts.limits, &opts.detector))
        .collect::<Result<Vec<_>, _>>()?;
    let result = engine::summarize(config, policy, &layout, &traces, opts)?;
    Ok((result, traces))
}

/// One experiment with its replications in parallel; traces are returned in
/// seed order.
pub fn run_experiment(
    config: &SystemConfig,
    policy: PolicyId,
    opts: &ExperimentOptions,
) -> CliResult<(ExperimentResult, Vec<Trace>)> {
    pool()?.install(|| run_cell(config, policy, opts))
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub policy: PolicyId,
    pub config: SystemConfig,
}

/// Cells in the order `(policy, L, K)`, each coordinate in the order given.
pub fn sweep_cells(base: &SystemConfig, policies: &[PolicyId], depots: &[usize], vehicles: &[usize]) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(policies.len() * depots.len() * vehicles.len());
    for &policy in policies {
        for &l in depots {
            for &k in vehicles {
                cells.push(Cell {
                    policy,
                    config: base.clone().with_fleet(k, l),
                });
            }
        }
    }
    cells
}

/// Runs every cell; traces are dropped as soon as a cell is summarised.
pub fn run_cells(cells: &[Cell], opts: &ExperimentOptions) -> CliResult<Vec<ExperimentResult>> {
    pool()?.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(&c.config, c.policy, opts).map(|(r, _)| r))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let cfg = SystemConfig::default().with_fleet(10, 4);
        let opts = ExperimentOptions {
            replications: 3,
            limits: engine::RunLimits {
                n_customers: 1500,
                ..Default::default()
            },
            ..Default::default()
        };
        let (par, traces) = run_experiment(&cfg, PolicyId::FJ_MINUS, &opts).unwrap();
        let seq = engine::run_experiment(&cfg, PolicyId::FJ_MINUS, &opts).unwrap();
        assert_eq!(par, seq);
        assert_eq!(traces.iter().map(|t| t.seed).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn cell_order() {
        let cells = sweep_cells(&SystemConfig::default(), &[PolicyId::NJ_PLUS, PolicyId::FJ_PLUS], &[1, 4], &[2, 3]);
        let keys: Vec<_> = cells.iter().map(|c| (c.policy.token(), c.config.depots, c.config.vehicles)).collect();
        assert_eq!(keys[0], ("nj+", 1, 2));
        assert_eq!(keys[1], ("nj+", 1, 3));
        assert_eq!(keys[2], ("nj+", 4, 2));
        assert_eq!(keys[7], ("fj+", 4, 3));
    }
}
