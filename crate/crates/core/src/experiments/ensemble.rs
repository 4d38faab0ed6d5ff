//! Parallel Monte Carlo over Brownian paths.

use rayon::prelude::*;

use super::output::PathFailure;
use crate::diagnostics::ledger::{EnergyLedger, LedgerRow};
use crate::diagnostics::{early_stop_probability, energy_residual, moment_curve, MCEstimate};
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::grid::FourierField;
use crate::integrators::{integrate, StepperConfig, Trajectory};
use crate::noise::BrownianPath;

pub const WORKERS_ENV: &str = "STOCH_CH_WORKERS";

/// Worker count from the environment, defaulting to the available cores.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w >= 1)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f(0..n)` on a pool of `workers` threads; results come back in
/// index order whatever the scheduling.
pub fn par_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Trajectories of one ensemble, in path order.
#[derive(Debug)]
pub struct EnsembleRun {
    pub trajectories: Vec<Trajectory>,
    pub failures: Vec<PathFailure>,
}

impl EnsembleRun {
    /// Paths that reached `t_end`.
    pub fn survivors(&self) -> Vec<Trajectory> {
        self.trajectories.iter().filter(|t| t.completed()).cloned().collect()
    }
}

/// Integrates paths `0..n_paths` of `master_seed` from a common initial state.
pub fn run_ensemble(
    u0: &FourierField,
    p: &ModelParams,
    cfg: &StepperConfig,
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> Result<EnsembleRun> {
    let steps = cfg.steps()?;
    let results = par_map(n_paths, workers, |i| {
        let path = BrownianPath::sample(master_seed, i as u64, cfg.dt, steps)?;
        integrate(u0, p, cfg, &path)
    })?;
    let mut trajectories = Vec::with_capacity(n_paths);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let tr = r?;
        if let Some(t) = tr.blowup_time {
            failures.push(PathFailure { path_index: i as u64, t, reason: "non-finite or exploding state".into() });
        }
        trajectories.push(tr);
    }
    Ok(EnsembleRun { trajectories, failures })
}

/// One `stats.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub functional: String,
    pub t: f64,
    pub estimate: MCEstimate,
}

/// Aggregated functionals over the surviving paths, in a fixed order.
pub fn ensemble_stats(survivors: &[Trajectory], moments: &[f64], stop_radii: &[f64]) -> Result<Vec<StatRow>> {
    let mut rows = Vec::new();
    let t_end = survivors.first().and_then(|t| t.ledger.last()).map_or(0.0, |r| r.t);
    let checkpoints = energy_residual(survivors)?;
    for c in &checkpoints {
        rows.push(StatRow { functional: "h1_sq".into(), t: c.t, estimate: c.h1_sq });
    }
    let n_rows = survivors[0].ledger.rows.len();
    for k in 0..n_rows {
        let hm: Vec<f64> = survivors.iter().map(|tr| tr.ledger.rows[k].hm_sq).collect();
        rows.push(StatRow { functional: "hm_sq".into(), t: survivors[0].ledger.rows[k].t, estimate: MCEstimate::from_samples(&hm)? });
    }
    for c in &checkpoints {
        rows.push(StatRow { functional: "energy_residual".into(), t: c.t, estimate: c.residual });
    }
    for c in &checkpoints {
        rows.push(StatRow { functional: "energy_residual_alt".into(), t: c.t, estimate: c.residual_alt });
    }
    for &p in moments {
        rows.push(StatRow { functional: format!("moment_sup_h1_p{p}"), t: t_end, estimate: moment_curve(survivors, p)? });
    }
    for &r in stop_radii {
        let (prob, se) = early_stop_probability(survivors, r)?;
        rows.push(StatRow {
            functional: format!("stop_prob_r{r}"),
            t: t_end,
            estimate: MCEstimate { mean: prob, stderr: se, n_samples: survivors.len() },
        });
    }
    Ok(rows)
}

/// Column-wise mean ledger over trajectories sharing record times.
pub fn mean_ledger(survivors: &[Trajectory]) -> EnergyLedger {
    let first = &survivors[0].ledger;
    let n = survivors.len() as f64;
    let rows = (0..first.rows.len())
        .map(|k| {
            let mut acc = [0.0; 8];
            for tr in survivors {
                for (a, v) in acc.iter_mut().zip(tr.ledger.rows[k].values()) {
                    *a += v;
                }
            }
            let m: Vec<f64> = acc.iter().map(|a| a / n).collect();
            LedgerRow {
                t: first.rows[k].t,
                h1_sq: m[1],
                hm_sq: m[2],
                diss_accum: m[3],
                sigma_term_a: m[4],
                sigma_term_b: m[5],
                min_slope: m[6],
                w1inf_sq_accum: m[7],
            }
        })
        .collect();
    EnergyLedger { m: first.m, n_phys: first.n_phys, rows }
}
