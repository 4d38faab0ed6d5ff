//! Subcommand implementations. Each writes one run directory and returns
//! a JSON summary plus a status that maps to the process exit code.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use super::config::{perturbation, ConvergeAxis, RunConfig};
use super::ensemble::{ensemble_stats, mean_ledger, par_map, run_ensemble};
use super::output::{fmt_f64, verify_manifest, ManifestBody, PathFailure, RunDir, RunStatus, VerifyReport, STATS_COLUMNS};
use crate::commutator::{commutator_sweep, loglog_slope, SweepConfig, TestClass};
use crate::diagnostics::mc::MCEstimate;
use crate::diagnostics::{gronwall_check, holder_structure};
use crate::dynamics::{Dynamics, ModelParams};
use crate::error::{Error, Result};
use crate::grid::FourierField;
use crate::integrators::{integrate, integrate_linear_exact, StepperConfig, Trajectory};
use crate::noise::BrownianPath;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

/// Result of one subcommand.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub summary: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Completed | RunStatus::PartialFailure => EXIT_OK,
            RunStatus::Blowup => EXIT_BLOWUP,
            RunStatus::ThresholdFailure => EXIT_THRESHOLD,
        }
    }
}

pub fn exit_code_for_error(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::ConfigMismatch(_) | Error::Json(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::NonFinite { .. } => EXIT_BLOWUP,
        Error::Precondition(_) => EXIT_THRESHOLD,
        _ => 1,
    }
}

struct Session {
    dir: RunDir,
    start: Instant,
    config: Value,
    command: &'static str,
}

impl Session {
    fn open(cfg: &RunConfig, command: &'static str) -> Result<Self> {
        Ok(Session {
            dir: RunDir::create(&cfg.outputs.directory)?,
            start: Instant::now(),
            config: serde_json::to_value(cfg)?,
            command,
        })
    }

    fn close(self, status: RunStatus, summary: Value, failures: Vec<PathFailure>) -> Result<Outcome> {
        let dir = self.dir.root().to_path_buf();
        let body = ManifestBody {
            command: self.command.into(),
            status,
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            config: self.config,
            summary: summary.clone(),
            failures,
        };
        self.dir.finish(body)?;
        Ok(Outcome { dir, status, summary })
    }
}

fn single_path(cfg: &RunConfig, index: u64) -> Result<BrownianPath> {
    let st = cfg.stepper();
    BrownianPath::sample(cfg.ensemble.master_seed, index, st.dt, st.steps()?)
}

/// One trajectory with its ledger and a snapshot per record time.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let mut s = Session::open(cfg, "simulate")?;
    let p = cfg.params()?;
    let st = cfg.stepper();
    let u0 = cfg.initial_state(&p)?;
    let tr = integrate(&u0, &p, &st, &single_path(cfg, 0)?)?;
    s.dir.write_ledger("ledger.csv", &tr.ledger)?;
    if cfg.outputs.snapshots {
        s.dir.write_snapshots(&tr.states)?;
    }
    let first = tr.ledger.rows[0].h1_sq;
    let last = tr.ledger.last().map_or(first, |r| r.h1_sq);
    let summary = json!({
        "steps": st.steps()?,
        "records": tr.times.len(),
        "h1_sq_initial": first,
        "h1_sq_final": last,
        "blowup_time": tr.blowup_time,
        "warnings": st.stability_warnings(&p),
        "path": tr.path,
    });
    match tr.blowup_time {
        Some(t) => s.close(
            RunStatus::Blowup,
            summary,
            vec![PathFailure { path_index: 0, t, reason: "non-finite or exploding state".into() }],
        ),
        None => s.close(RunStatus::Completed, summary, vec![]),
    }
}

fn stats_rows(rows: &[super::ensemble::StatRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            r.functional.clone(),
            fmt_f64(r.t),
            fmt_f64(r.estimate.mean),
            fmt_f64(r.estimate.stderr),
            r.estimate.n_samples.to_string(),
        ]
    })
}

/// Monte Carlo statistics over `ensemble.n_paths` paths.
pub fn ensemble(cfg: &RunConfig, workers: usize) -> Result<Outcome> {
    if cfg.ensemble.n_paths < 2 {
        return Err(Error::Config("ensemble needs n_paths ≥ 2".into()));
    }
    let mut s = Session::open(cfg, "ensemble")?;
    let p = cfg.params()?;
    let mut st = cfg.stepper();
    st.store_states = false;
    let u0 = cfg.initial_state(&p)?;
    let run = run_ensemble(&u0, &p, &st, cfg.ensemble.n_paths, cfg.ensemble.master_seed, workers)?;
    let survivors = run.survivors();
    let base = json!({
        "n_paths": cfg.ensemble.n_paths,
        "n_survivors": survivors.len(),
        "n_failed": run.failures.len(),
        "workers": workers,
        "warnings": st.stability_warnings(&p),
    });
    if survivors.len() < 2 {
        return s.close(RunStatus::Blowup, base, run.failures);
    }
    let stats = ensemble_stats(&survivors, &cfg.ensemble.moments, &cfg.ensemble.stop_radii)?;
    s.dir.write_csv("stats.csv", &STATS_COLUMNS, stats_rows(&stats))?;
    s.dir.write_ledger("ledger.csv", &mean_ledger(&survivors))?;
    let last_res = stats.iter().rev().find(|r| r.functional == "energy_residual").map(|r| r.estimate);
    let mut summary = base;
    summary["final_energy_residual"] = serde_json::to_value(last_res)?;
    let status = if run.failures.is_empty() { RunStatus::Completed } else { RunStatus::PartialFailure };
    s.close(status, summary, run.failures)
}

/// `sup_t ‖a(t) − b(t)‖_{H¹}` over shared record times, compared on the
/// finer of the two grids.
pub fn sup_h1_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.times != b.times || a.states.len() != b.states.len() || a.states.is_empty() {
        return Err(Error::InconsistentEnsemble("trajectories do not share stored record times".into()));
    }
    let grid = if a.states[0].n_modes() >= b.states[0].n_modes() { a.states[0].grid() } else { b.states[0].grid() };
    let mut sup = 0.0f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        sup = sup.max(x.resample(grid).sub(&y.resample(grid))?.sobolev_norm(1));
    }
    Ok(sup)
}

fn final_h1_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let grid = if a.final_state.n_modes() >= b.final_state.n_modes() { a.final_state.grid() } else { b.final_state.grid() };
    Ok(a.final_state.resample(grid).sub(&b.final_state.resample(grid))?.sobolev_norm(1))
}

fn with_n(p: &ModelParams, n: usize) -> Result<ModelParams> {
    ModelParams::with_dynamics(p.epsilon, p.sigma.clone(), n, p.noise_form, p.dynamics)
}

/// Mean errors per level with a fitted log-log rate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateTable {
    pub axis: ConvergeAxis,
    pub levels: Vec<f64>,
    pub errors: Vec<MCEstimate>,
    pub rate: f64,
}

/// Galerkin refinement: errors `𝔼 sup_t ‖u_{n_k} − u_{n_{k+1}}‖_{H¹}`
/// with every level driven by the same path.
pub fn converge_n(cfg: &RunConfig, levels: &[usize], workers: usize) -> Result<(RateTable, Vec<PathFailure>)> {
    if levels.len() < 3 || levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Config("n-axis needs ≥ 3 levels, each double the previous".into()));
    }
    let base = cfg.params()?;
    let params: Vec<ModelParams> = levels.iter().map(|&n| with_n(&base, n)).collect::<Result<_>>()?;
    let st = cfg.stepper();
    let per_path = par_map(cfg.ensemble.n_paths, workers, |i| -> Result<std::result::Result<Vec<f64>, PathFailure>> {
        let path = single_path(cfg, i as u64)?;
        let mut trs = Vec::with_capacity(params.len());
        for p in &params {
            let tr = integrate(&cfg.initial_state(p)?, p, &st, &path)?;
            if let Some(t) = tr.blowup_time {
                return Ok(Err(PathFailure { path_index: i as u64, t, reason: format!("blow-up at n = {}", p.n) }));
            }
            trs.push(tr);
        }
        Ok(Ok(trs.windows(2).map(|w| sup_h1_distance(&w[0], &w[1])).collect::<Result<_>>()?))
    })?;
    let mut samples = vec![Vec::new(); levels.len() - 1];
    let mut failures = Vec::new();
    for r in per_path {
        match r? {
            Ok(errs) => errs.into_iter().zip(samples.iter_mut()).for_each(|(e, s)| s.push(e)),
            Err(f) => failures.push(f),
        }
    }
    let errors = samples.iter().map(|s| estimate(s)).collect::<Result<Vec<_>>>()?;
    let lv: Vec<f64> = levels[..levels.len() - 1].iter().map(|&n| n as f64).collect();
    let rate = loglog_slope(&lv, &errors.iter().map(|e| e.mean).collect::<Vec<_>>());
    Ok((RateTable { axis: ConvergeAxis::N, levels: lv, errors, rate }, failures))
}

fn estimate(s: &[f64]) -> Result<MCEstimate> {
    if s.len() == 1 {
        return Ok(MCEstimate { mean: s[0], stderr: f64::NAN, n_samples: 1 });
    }
    MCEstimate::from_samples(s)
}

/// Strong errors `𝔼‖u_dt(T) − u_ref(T)‖_{L²}` for `dt = T·2^{−k}` on
/// bridge-coupled paths. The reference is exact pure transport when the
/// model is drift-free with constant σ, and the finest level otherwise.
pub fn converge_dt(cfg: &RunConfig, ks: &[u32], workers: usize) -> Result<(RateTable, Vec<PathFailure>)> {
    if ks.len() < 3 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("dt-axis needs ≥ 3 strictly increasing exponents".into()));
    }
    let p = cfg.params()?;
    let t_end = cfg.stepper.t_end;
    let exact = p.dynamics == Dynamics::PureTransport && p.sigma.is_constant();
    let sigma0 = p.sigma.coeffs()[0];
    let u0 = cfg.initial_state(&p)?;
    let k0 = ks[0];
    let coarse_steps = 1usize << k0;
    let used = if exact { ks.len() } else { ks.len() - 1 };
    let per_path = par_map(cfg.ensemble.n_paths, workers, |i| -> Result<std::result::Result<Vec<f64>, PathFailure>> {
        let base = BrownianPath::sample(cfg.ensemble.master_seed, i as u64, t_end / coarse_steps as f64, coarse_steps)?;
        let mut finals = Vec::with_capacity(ks.len());
        for &k in ks {
            let path = base.refine_times(k - k0);
            let mut st = cfg.stepper();
            st.dt = path.dt;
            st.record_every = usize::MAX;
            st.store_states = false;
            let tr = integrate(&u0, &p, &st, &path)?;
            if let Some(t) = tr.blowup_time {
                return Ok(Err(PathFailure { path_index: i as u64, t, reason: format!("blow-up at dt = T·2^-{k}") }));
            }
            finals.push(tr.final_state);
        }
        let reference = if exact {
            integrate_linear_exact(&u0, sigma0, base.terminal())
        } else {
            finals.last().unwrap().clone()
        };
        Ok(Ok(finals[..used].iter().map(|f| f.sub(&reference).map(|d| d.l2_norm())).collect::<Result<_>>()?))
    })?;
    let mut samples = vec![Vec::new(); used];
    let mut failures = Vec::new();
    for r in per_path {
        match r? {
            Ok(errs) => errs.into_iter().zip(samples.iter_mut()).for_each(|(e, s)| s.push(e)),
            Err(f) => failures.push(f),
        }
    }
    let errors = samples.iter().map(|s| estimate(s)).collect::<Result<Vec<_>>>()?;
    let dts: Vec<f64> = ks[..used].iter().map(|&k| t_end / (1u64 << k) as f64).collect();
    let rate = loglog_slope(&dts, &errors.iter().map(|e| e.mean).collect::<Vec<_>>());
    Ok((RateTable { axis: ConvergeAxis::Dt, levels: dts, errors, rate }, failures))
}

fn sweep_config(cfg: &RunConfig, class: TestClass, deltas: Vec<f64>) -> SweepConfig {
    let c = cfg.commutators.clone().unwrap_or_default();
    SweepConfig { class, deltas, j_max: c.j_max, seed: c.seed, profile: c.profile, samples: c.samples }
}

/// Convergence study along the configured axis.
pub fn converge(cfg: &RunConfig, workers: usize) -> Result<Outcome> {
    let spec = cfg.converge.clone().ok_or_else(|| Error::Config("missing `converge` section".into()))?;
    let mut s = Session::open(cfg, "converge")?;
    let (table, failures) = match spec.axis {
        ConvergeAxis::N => {
            let lv: Vec<usize> = spec.levels.iter().map(|&l| as_count(l, "n level")).collect::<Result<_>>()?;
            converge_n(cfg, &lv, workers)?
        }
        ConvergeAxis::Dt => {
            let ks: Vec<u32> = spec.levels.iter().map(|&l| as_count(l, "dt exponent").map(|k| k as u32)).collect::<Result<_>>()?;
            converge_dt(cfg, &ks, workers)?
        }
        ConvergeAxis::Delta => {
            let sw = sweep_config(cfg, spec.test_class.unwrap_or(TestClass::H1Critical), spec.levels.clone());
            sw.validate().map_err(|e| Error::Config(e.to_string()))?;
            let report = commutator_sweep(&sw, &cfg.params()?.sigma)?;
            s.dir.write_bytes("converge.csv", report.to_csv().as_bytes())?;
            let summary = json!({ "axis": "delta", "class": report.class, "rates": report.rates });
            return s.close(RunStatus::Completed, summary, vec![]);
        }
    };
    let rows = table.levels.iter().zip(&table.errors).map(|(l, e)| {
        vec![fmt_f64(*l), fmt_f64(e.mean), fmt_f64(e.stderr), e.n_samples.to_string()]
    });
    s.dir.write_csv("converge.csv", &["level", "error", "stderr", "n_samples"], rows)?;
    let summary = serde_json::to_value(&table)?;
    let status = if failures.is_empty() { RunStatus::Completed } else { RunStatus::PartialFailure };
    s.close(status, summary, failures)
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{what} must be a non-negative integer, got {v}")))
    }
}

/// Uniqueness diagnostics on path 0.
#[derive(Debug, Clone, serde::Serialize)]
pub struct UniquenessReport {
    /// Twin runs with identical inputs produced identical bits.
    pub twin_identical: bool,
    /// `(n, sup_t ‖u_n − u_{2n}‖_{H¹})`
    pub refinement: Vec<(usize, f64)>,
    /// `(a, sup distance, final distance)`
    pub perturbation: Vec<(f64, f64, f64)>,
    /// Final distance is nonincreasing as the amplitude decreases.
    pub monotone_in_amplitude: bool,
}

pub fn uniqueness_report(cfg: &RunConfig) -> Result<UniquenessReport> {
    let spec = cfg.uniqueness.clone().ok_or_else(|| Error::Config("missing `uniqueness` section".into()))?;
    if spec.amplitudes.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::Config("perturbation amplitudes must be ≥ 0".into()));
    }
    let p = cfg.params()?;
    let st = cfg.stepper();
    let path = single_path(cfg, 0)?;
    let run = |p: &ModelParams, u0: &FourierField| -> Result<Trajectory> {
        let tr = integrate(u0, p, &st, &path)?;
        tr.check()?;
        Ok(tr)
    };
    let u0 = cfg.initial_state(&p)?;
    let a = run(&p, &u0)?;
    let b = run(&p, &u0)?;
    let twin_identical = a.states == b.states
        && a.final_state == b.final_state
        && a.ledger.rows.iter().zip(&b.ledger.rows).all(|(x, y)| x.values().map(f64::to_bits) == y.values().map(f64::to_bits));

    let mut refinement = Vec::new();
    let mut prev = a.clone();
    for k in 1..=2 {
        let pk = with_n(&p, p.n << k)?;
        let tr = run(&pk, &cfg.initial_state(&pk)?)?;
        refinement.push((prev.final_state.n_modes(), sup_h1_distance(&prev, &tr)?));
        prev = tr;
    }

    let bump = perturbation(p.grid(), spec.perturb_mode.clamp(1, p.n));
    let mut pert = Vec::new();
    for &amp in &spec.amplitudes {
        let mut v0 = u0.clone();
        v0.axpy(amp, &bump)?;
        let tr = run(&p, &v0)?;
        pert.push((amp, sup_h1_distance(&a, &tr)?, final_h1_distance(&a, &tr)?));
    }
    let mut by_amp = pert.clone();
    by_amp.sort_by(|x, y| y.0.total_cmp(&x.0));
    let monotone_in_amplitude = by_amp.windows(2).all(|w| w[1].2 <= w[0].2);
    Ok(UniquenessReport { twin_identical, refinement, perturbation: pert, monotone_in_amplitude })
}

pub fn uniqueness(cfg: &RunConfig) -> Result<Outcome> {
    let mut s = Session::open(cfg, "uniqueness")?;
    let rep = match uniqueness_report(cfg) {
        Ok(r) => r,
        Err(Error::NonFinite { t }) => {
            let f = PathFailure { path_index: 0, t, reason: "non-finite or exploding state".into() };
            return s.close(RunStatus::Blowup, json!({ "blowup_time": t }), vec![f]);
        }
        Err(e) => return Err(e),
    };
    let mut rows = vec![vec!["twin".into(), fmt_f64(0.0), fmt_f64(if rep.twin_identical { 0.0 } else { f64::NAN }), String::new()]];
    rows.extend(rep.refinement.iter().map(|(n, d)| vec!["refinement".into(), fmt_f64(*n as f64), fmt_f64(*d), String::new()]));
    rows.extend(rep.perturbation.iter().map(|(a, d, f)| vec!["perturbation".into(), fmt_f64(*a), fmt_f64(*d), fmt_f64(*f)]));
    s.dir.write_csv("uniqueness.csv", &["kind", "parameter", "sup_h1_distance", "final_h1_distance"], rows)?;
    let status = if rep.twin_identical { RunStatus::Completed } else { RunStatus::ThresholdFailure };
    s.close(status, serde_json::to_value(&rep)?, vec![])
}

/// Commutator δ-sweeps for each configured test class.
pub fn commutators(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.commutators.clone().unwrap_or_default();
    let sigma = cfg.params()?.sigma;
    let sweeps: Vec<SweepConfig> = spec.classes.iter().map(|&c| sweep_config(cfg, c, spec.deltas.clone())).collect();
    for sw in &sweeps {
        sw.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut s = Session::open(cfg, "commutators")?;
    let mut rates = serde_json::Map::new();
    for sw in &sweeps {
        let report = commutator_sweep(sw, &sigma)?;
        s.dir.write_bytes(&format!("commutators_{}.csv", sw.class.label()), report.to_csv().as_bytes())?;
        rates.insert(sw.class.label().into(), serde_json::to_value(&report.rates)?);
    }
    s.dir.write_json("rates.json", &rates)?;
    s.close(RunStatus::Completed, Value::Object(rates), vec![])
}

/// Synthetic stochastic-Gronwall check; a rejected precondition or a
/// violated bound is a threshold failure.
pub fn gronwall(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.gronwall.clone().unwrap_or_default();
    let processes = spec.simulation.generate().map_err(|e| Error::Config(e.to_string()))?;
    let mut s = Session::open(cfg, "gronwall")?;
    match gronwall_check(&processes, spec.nu, spec.r) {
        Ok(report) => {
            s.dir.write_json("gronwall.json", &report)?;
            let status = if report.violated || report.margin < 0.0 { RunStatus::ThresholdFailure } else { RunStatus::Completed };
            s.close(status, serde_json::to_value(&report)?, vec![])
        }
        Err(Error::Precondition(msg)) => {
            let summary = json!({ "precondition_error": msg });
            s.dir.write_json("gronwall.json", &summary)?;
            s.close(RunStatus::ThresholdFailure, summary, vec![])
        }
        Err(e) => Err(e),
    }
}

/// Hölder fit on a stored-state ensemble; used by the audit tooling.
pub fn holder_fit(cfg: &RunConfig, lags: &[f64], workers: usize) -> Result<crate::diagnostics::HolderFit> {
    let p = cfg.params()?;
    let st: StepperConfig = cfg.stepper();
    let run = run_ensemble(&cfg.initial_state(&p)?, &p, &st, cfg.ensemble.n_paths, cfg.ensemble.master_seed, workers)?;
    holder_structure(&run.survivors(), lags)
}

pub fn verify(dir: &Path) -> Result<VerifyReport> {
    verify_manifest(dir)
}
