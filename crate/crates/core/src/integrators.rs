//! Fixed-step time integrators for the Galerkin SDE.
//!
//! All stochastic schemes consume the Itô form `du = a(u) dt + b(u) dW`
//! from [`crate::dynamics`]. The Stratonovich schemes (Heun and the
//! split scheme) instead use `a(u) − ½Πₙ B(B(u))` as drift.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::ledger::{EnergyLedger, LedgerBuilder};
use crate::dynamics::{self, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{FourierField, SpectralGrid};
use crate::noise::{BrownianPath, PathMeta};

/// `‖u‖_{H¹}` above which a run is treated as blown up.
pub const BLOWUP_H1: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Milstein,
    HeunStratonovich,
    Rk4Deterministic,
    /// Strang splitting: half an RK4 step of the Stratonovich drift, the
    /// exact flow `exp(ΔW · (−Πₙ B))` of the linear noise, another half step.
    SplitStratonovich,
}

impl Scheme {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Scheme::Rk4Deterministic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Integrating factor `exp(−ε(2πj)² dt)` on each mode for the viscous term.
    #[serde(default)]
    pub viscous_exponential: bool,
    /// Keep the state at every record time (ensemble runs usually don't).
    #[serde(default = "default_true")]
    pub store_states: bool,
    /// Order `m` of the Hᵐ norm tracked in the ledger.
    #[serde(default = "default_hm")]
    pub hm_order: usize,
}

fn default_true() -> bool {
    true
}

fn default_hm() -> usize {
    2
}

impl StepperConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, record_every: usize) -> Self {
        StepperConfig {
            scheme,
            dt,
            t_end,
            record_every,
            viscous_exponential: false,
            store_states: true,
            hm_order: 2,
        }
    }

    /// Number of steps; `t_end / dt` must be an integer up to a few ulp.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::ConfigMismatch("dt and t_end must be positive and finite".into()));
        }
        if self.record_every == 0 {
            return Err(Error::ConfigMismatch("record_every must be positive".into()));
        }
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        let ulp = f64::EPSILON * rounded.max(1.0);
        if (ratio - rounded).abs() > 4.0 * ulp || rounded < 1.0 {
            return Err(Error::ConfigMismatch(format!(
                "t_end / dt = {ratio} is not an integer step count"
            )));
        }
        Ok(rounded as usize)
    }

    /// Warnings about the explicit stability limits of the chosen step.
    pub fn stability_warnings(&self, p: &ModelParams) -> Vec<String> {
        let mut out = Vec::new();
        let k = SpectralGrid::wavenumber(p.n);
        if !self.viscous_exponential && p.epsilon > 0.0 {
            let limit = 2.5 / (p.epsilon * k * k);
            if self.dt > limit {
                out.push(format!(
                    "dt = {} exceeds the explicit viscous limit ≈ {limit:.3e} (ε (2πn)² dt ≲ 2.5); \
                     consider viscous_exponential",
                    self.dt
                ));
            }
        }
        if !p.sigma.is_zero() && self.scheme != Scheme::SplitStratonovich {
            let s4k4 = (p.sigma.sup_bound(0) * k).powi(4);
            let growth = 0.25 * s4k4 * self.dt * self.t_end;
            if growth > 1.0 {
                out.push(format!(
                    "explicit transport-noise stepping amplifies the top mode by ≈ exp({growth:.1e}) \
                     in mean square; use split_stratonovich or a smaller dt"
                ));
            }
        }
        out
    }
}

/// A simulated path `t ↦ u(t)` with its ledger.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Step size the trajectory was integrated with.
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<FourierField>,
    pub path: PathMeta,
    pub ledger: EnergyLedger,
    /// Time of the first non-finite or exploding state, if any.
    pub blowup_time: Option<f64>,
    pub final_state: FourierField,
}

impl Trajectory {
    pub fn check(&self) -> Result<()> {
        match self.blowup_time {
            Some(t) => Err(Error::NonFinite { t }),
            None => Ok(()),
        }
    }

    pub fn completed(&self) -> bool {
        self.blowup_time.is_none()
    }
}

fn viscous_factor(p: &ModelParams, h: f64) -> impl Fn(usize) -> f64 + '_ {
    move |j| (-p.epsilon * SpectralGrid::wavenumber(j).powi(2) * h).exp()
}

/// Drift with the viscous term removed when it is integrated exactly.
fn drift_part(u: &FourierField, p: &ModelParams, skip_viscous: bool, stratonovich: bool) -> Result<FourierField> {
    let mut a = if stratonovich { dynamics::stratonovich_drift(u, p)? } else { dynamics::drift(u, p)? };
    if skip_viscous && p.epsilon != 0.0 && p.dynamics == dynamics::Dynamics::CamassaHolm {
        a.axpy(-p.epsilon, &u.derivative().derivative())?;
    }
    Ok(a)
}

fn ensure_finite(u: FourierField, t: f64) -> Result<FourierField> {
    if !u.is_finite() || u.sobolev_norm_sq(1) > BLOWUP_H1 * BLOWUP_H1 {
        return Err(Error::NonFinite { t });
    }
    Ok(u)
}

fn exp_visc(u: &FourierField, p: &ModelParams, h: f64, on: bool) -> FourierField {
    if on && p.epsilon != 0.0 && p.dynamics == dynamics::Dynamics::CamassaHolm {
        u.apply_multiplier(viscous_factor(p, h))
    } else {
        u.clone()
    }
}

/// Euler–Maruyama: `u + a(u) dt + b(u) dW`.
pub fn step_euler_maruyama(u: &FourierField, p: &ModelParams, dw: f64, dt: f64) -> Result<FourierField> {
    step_em_impl(u, p, dw, dt, false)
}

fn step_em_impl(u: &FourierField, p: &ModelParams, dw: f64, dt: f64, expv: bool) -> Result<FourierField> {
    let mut next = u.clone();
    next.axpy(dt, &drift_part(u, p, expv, false)?)?;
    if !p.sigma.is_zero() {
        next.axpy(dw, &dynamics::diffusion(u, p)?)?;
    }
    ensure_finite(exp_visc(&next, p, dt, expv), f64::NAN)
}

/// Milstein: Euler–Maruyama plus `½ b'(u)b(u) (dW² − dt)`.
pub fn step_milstein(u: &FourierField, p: &ModelParams, dw: f64, dt: f64) -> Result<FourierField> {
    step_milstein_impl(u, p, dw, dt, false)
}

fn step_milstein_impl(u: &FourierField, p: &ModelParams, dw: f64, dt: f64, expv: bool) -> Result<FourierField> {
    let mut next = u.clone();
    next.axpy(dt, &drift_part(u, p, expv, false)?)?;
    if !p.sigma.is_zero() {
        let b = dynamics::diffusion(u, p)?;
        next.axpy(dw, &b)?;
        let bb = dynamics::diffusion(&b, p)?;
        next.axpy(0.5 * (dw * dw - dt), &bb)?;
    }
    ensure_finite(exp_visc(&next, p, dt, expv), f64::NAN)
}

/// Stratonovich Heun predictor–corrector for `du = a dt + b ∘ dW` with
/// `a` the Stratonovich drift.
pub fn step_heun_strat(u: &FourierField, p: &ModelParams, dw: f64, dt: f64) -> Result<FourierField> {
    step_heun_impl(u, p, dw, dt, false)
}

fn step_heun_impl(u: &FourierField, p: &ModelParams, dw: f64, dt: f64, expv: bool) -> Result<FourierField> {
    let noisy = !p.sigma.is_zero();
    let a0 = drift_part(u, p, expv, true)?;
    let b0 = if noisy { Some(dynamics::diffusion(u, p)?) } else { None };
    let mut pred = u.clone();
    pred.axpy(dt, &a0)?;
    if let Some(b) = &b0 {
        pred.axpy(dw, b)?;
    }
    let a1 = drift_part(&pred, p, expv, true)?;
    let mut next = u.clone();
    next.axpy(0.5 * dt, &a0)?;
    next.axpy(0.5 * dt, &a1)?;
    if let Some(b) = &b0 {
        let b1 = dynamics::diffusion(&pred, p)?;
        next.axpy(0.5 * dw, b)?;
        next.axpy(0.5 * dw, &b1)?;
    }
    ensure_finite(exp_visc(&next, p, dt, expv), f64::NAN)
}

/// Classical RK4 on the (Itô) drift; requires σ ≡ 0.
pub fn step_rk4(u: &FourierField, p: &ModelParams, dt: f64) -> Result<FourierField> {
    rk4_impl(u, p, dt, false, false)
}

/// RK4 (Lawson form when `expv`) on the drift; `stratonovich` selects the
/// drift without the Itô correction.
fn rk4_impl(u: &FourierField, p: &ModelParams, h: f64, expv: bool, stratonovich: bool) -> Result<FourierField> {
    let f = |v: &FourierField| drift_part(v, p, expv, stratonovich);
    let half = |v: &FourierField| exp_visc(v, p, 0.5 * h, expv);
    let k1 = f(u)?;
    let mut a = u.clone();
    a.axpy(0.5 * h, &k1)?;
    let k2 = f(&half(&a))?;
    let mut b = half(u);
    b.axpy(0.5 * h, &k2)?;
    let k3 = f(&b)?;
    let mut c = exp_visc(u, p, h, expv);
    c.axpy(h, &half(&k3))?;
    let k4 = f(&c)?;
    let mut next = exp_visc(u, p, h, expv);
    next.axpy(h / 6.0, &exp_visc(&k1, p, h, expv))?;
    let mid = k2.add(&k3)?;
    next.axpy(h / 3.0, &half(&mid))?;
    next.axpy(h / 6.0, &k4)?;
    ensure_finite(next, f64::NAN)
}

/// Exact flow of the projected linear Stratonovich noise `du = −Πₙ B(u) ∘ dW`
/// over an increment `dw`, by scaled Taylor series of the matrix exponential.
pub fn noise_flow(u: &FourierField, p: &ModelParams, dw: f64) -> Result<FourierField> {
    if p.sigma.is_zero() || dw == 0.0 {
        return Ok(u.clone());
    }
    let reach = dw.abs() * p.noise_operator_bound();
    let substeps = (reach / 2.0).ceil().max(1.0) as usize;
    let theta = dw / substeps as f64;
    let mut v = u.clone();
    for _ in 0..substeps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for k in 1..=60 {
            term = dynamics::diffusion(&term, p)?.scale(theta / k as f64);
            sum.axpy(1.0, &term)?;
            if term.l2_norm() <= 1e-17 * sum.l2_norm() {
                break;
            }
        }
        v = sum;
    }
    Ok(v)
}

/// Strang splitting step (see [`Scheme::SplitStratonovich`]).
pub fn step_split(u: &FourierField, p: &ModelParams, dw: f64, dt: f64) -> Result<FourierField> {
    step_split_impl(u, p, dw, dt, false)
}

fn step_split_impl(u: &FourierField, p: &ModelParams, dw: f64, dt: f64, expv: bool) -> Result<FourierField> {
    let first = rk4_impl(u, p, 0.5 * dt, expv, true)?;
    let mid = noise_flow(&first, p, dw)?;
    rk4_impl(&mid, p, 0.5 * dt, expv, true)
}

/// Advances one step with the configured scheme.
pub fn step(u: &FourierField, p: &ModelParams, cfg: &StepperConfig, dw: f64) -> Result<FourierField> {
    let expv = cfg.viscous_exponential;
    let dt = cfg.dt;
    match cfg.scheme {
        Scheme::EulerMaruyama => step_em_impl(u, p, dw, dt, expv),
        Scheme::Milstein => step_milstein_impl(u, p, dw, dt, expv),
        Scheme::HeunStratonovich => step_heun_impl(u, p, dw, dt, expv),
        Scheme::Rk4Deterministic => rk4_impl(u, p, dt, expv, false),
        Scheme::SplitStratonovich => step_split_impl(u, p, dw, dt, expv),
    }
}

/// Integrates from `u0` over `[0, cfg.t_end]` driven by `path`.
///
/// `path.dt` must equal `cfg.dt` or divide it; increments are then summed
/// over blocks. Deterministic runs (σ ≡ 0 or the RK4 scheme) ignore the path
/// increments but still record its metadata.
pub fn integrate(u0: &FourierField, p: &ModelParams, cfg: &StepperConfig, path: &BrownianPath) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    if u0.n_modes() != p.n {
        return Err(Error::TruncationMismatch { field: u0.n_modes(), model: p.n });
    }
    if cfg.scheme == Scheme::Rk4Deterministic && !p.sigma.is_zero() {
        return Err(Error::ConfigMismatch("rk4_deterministic requires sigma ≡ 0".into()));
    }
    let u0 = u0.resample(p.grid()).project(p.n);
    let increments: Vec<f64> = if p.sigma.is_zero() || !cfg.scheme.is_stochastic() {
        vec![0.0; steps]
    } else {
        let ratio = cfg.dt / path.dt;
        let factor = ratio.round();
        if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
            return Err(Error::ConfigMismatch(format!(
                "path dt {} does not divide step dt {}",
                path.dt, cfg.dt
            )));
        }
        let factor = factor as usize;
        if path.steps < steps * factor {
            return Err(Error::ConfigMismatch(format!(
                "path has {} increments, run needs {}",
                path.steps,
                steps * factor
            )));
        }
        let agg = if factor == 1 {
            path.increments[..steps].to_vec()
        } else {
            BrownianPath { steps: steps * factor, increments: path.increments[..steps * factor].to_vec(), ..path.clone() }
                .aggregate(factor)?
        };
        agg
    };

    let mut ledger = LedgerBuilder::new(cfg.hm_order, p.grid().n_phys());
    let mut times = vec![0.0];
    let mut states = Vec::new();
    if cfg.store_states {
        states.push(u0.clone());
    }
    ledger.push(0.0, &u0, p);
    let mut u = u0;
    let mut blowup_time = None;
    for (k, &dw) in increments.iter().enumerate() {
        let t = (k + 1) as f64 * cfg.dt;
        match step(&u, p, cfg, dw) {
            Ok(next) => u = next,
            Err(Error::NonFinite { .. }) => {
                blowup_time = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
        if (k + 1) % cfg.record_every == 0 || k + 1 == steps {
            times.push(t);
            ledger.push(t, &u, p);
            if cfg.store_states {
                states.push(u.clone());
            }
        }
    }
    Ok(Trajectory { dt: cfg.dt, times, states, path: path.meta(), ledger: ledger.finish(), blowup_time, final_state: u })
}

/// Exact solution of the pure-transport Stratonovich equation with constant
/// σ: every frequency pair is rotated by the angle `2πj σ W(t)`, i.e.
/// `u(t, x) = u₀(x − σ W(t))`.
pub fn integrate_linear_exact(u0: &FourierField, sigma_const: f64, w: f64) -> FourierField {
    let mut out = u0.clone();
    let shift = sigma_const * w;
    let c = out.coeffs_mut();
    for j in 1..=u0.n_modes() {
        let (s, co) = (SpectralGrid::wavenumber(j) * shift).sin_cos();
        let (a, b) = (c[2 * j - 1], c[2 * j]);
        c[2 * j - 1] = a * co - b * s;
        c[2 * j] = a * s + b * co;
    }
    out
}

/// Final states of several schemes or step sizes on one shared grid.
pub fn final_state_on(grid: &Arc<SpectralGrid>, traj: &Trajectory) -> FourierField {
    traj.final_state.resample(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Dynamics, NoiseForm, SigmaProfile};
    use std::f64::consts::SQRT_2;

    fn smooth_u0(grid: &Arc<SpectralGrid>) -> FourierField {
        FourierField::cos_mode(grid, 1, 0.1).add(&FourierField::sin_mode(grid, 2, 0.05)).unwrap()
    }

    #[test]
    fn zero_and_constant_states_are_fixed_points() {
        let p = ModelParams::new(0.01, SigmaProfile::mean_plus_sine(0.5, 0.2), 8, NoiseForm::Basic).unwrap();
        let zero = FourierField::zeros(p.grid());
        let c = FourierField::constant(p.grid(), 0.3);
        for dw in [-0.1, 0.0, 0.2] {
            assert_eq!(step_euler_maruyama(&zero, &p, dw, 1e-3).unwrap(), zero);
            assert_eq!(step_milstein(&zero, &p, dw, 1e-3).unwrap(), zero);
            assert_eq!(step_heun_strat(&zero, &p, dw, 1e-3).unwrap(), zero);
            assert_eq!(step_split(&zero, &p, dw, 1e-3).unwrap(), zero);
            let pc = ModelParams::new(0.01, SigmaProfile::constant(0.4), 8, NoiseForm::Basic).unwrap();
            let cc = FourierField::constant(pc.grid(), 0.3);
            for next in [
                step_euler_maruyama(&cc, &pc, dw, 1e-3).unwrap(),
                step_milstein(&cc, &pc, dw, 1e-3).unwrap(),
                step_heun_strat(&cc, &pc, dw, 1e-3).unwrap(),
                step_split(&cc, &pc, dw, 1e-3).unwrap(),
            ] {
                assert_eq!(next, cc);
            }
            assert!(step_euler_maruyama(&c, &p, dw, 1e-3).unwrap().sub(&c).unwrap().l2_norm() < 1e-15);
        }
    }

    #[test]
    fn noise_free_schemes_ignore_increments() {
        let p = ModelParams::new(0.01, SigmaProfile::zero(), 8, NoiseForm::Basic).unwrap();
        let u = smooth_u0(p.grid());
        let det = step_euler_maruyama(&u, &p, 0.0, 1e-3).unwrap();
        assert_eq!(step_euler_maruyama(&u, &p, 0.7, 1e-3).unwrap(), det);
        assert_eq!(step_milstein(&u, &p, -0.3, 1e-3).unwrap(), det);
        let heun = step_heun_strat(&u, &p, 0.0, 1e-3).unwrap();
        assert_eq!(step_heun_strat(&u, &p, 1.3, 1e-3).unwrap(), heun);
        // deterministic Heun by hand
        let a0 = dynamics::drift(&u, &p).unwrap();
        let pred = u.add(&a0.scale(1e-3)).unwrap();
        let a1 = dynamics::drift(&pred, &p).unwrap();
        let manual = u.add(&a0.add(&a1).unwrap().scale(0.5e-3)).unwrap();
        assert!(heun.max_abs_diff(&manual).unwrap() < 1e-16);
    }

    #[test]
    fn deterministic_scheme_rejects_noise() {
        let p = ModelParams::new(0.01, SigmaProfile::constant(0.1), 4, NoiseForm::Basic).unwrap();
        let cfg = StepperConfig::new(Scheme::Rk4Deterministic, 0.01, 0.1, 1);
        let u = FourierField::zeros(p.grid());
        assert!(matches!(integrate(&u, &p, &cfg, &BrownianPath::zero(0.01, 10)), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(StepperConfig::new(Scheme::EulerMaruyama, 1e-4, 1.0, 1).steps().unwrap(), 10_000);
        assert!(StepperConfig::new(Scheme::EulerMaruyama, 0.3, 1.0, 1).steps().is_err());
        assert!(StepperConfig::new(Scheme::EulerMaruyama, 0.1, 1.0, 0).steps().is_err());
    }

    #[test]
    fn path_dt_must_divide_step() {
        let p = ModelParams::new(0.0, SigmaProfile::constant(0.3), 4, NoiseForm::Basic).unwrap();
        let u = FourierField::cos_mode(p.grid(), 1, 1.0);
        let cfg = StepperConfig::new(Scheme::EulerMaruyama, 0.01, 0.1, 1);
        let bad = BrownianPath::sample(1, 0, 0.003, 100).unwrap();
        assert!(integrate(&u, &p, &cfg, &bad).is_err());
        let fine = BrownianPath::sample(1, 0, 0.0025, 40).unwrap();
        let t = integrate(&u, &p, &cfg, &fine).unwrap();
        assert_eq!(t.times.len(), 11);
        assert!(t.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn integrate_from_zero_stays_zero() {
        let p = ModelParams::new(0.01, SigmaProfile::mean_plus_sine(0.5, 0.2), 8, NoiseForm::Basic).unwrap();
        let cfg = StepperConfig::new(Scheme::Milstein, 1e-3, 0.05, 5);
        let path = BrownianPath::sample(5, 0, 1e-3, 50).unwrap();
        let t = integrate(&FourierField::zeros(p.grid()), &p, &cfg, &path).unwrap();
        assert!(t.states.iter().all(|s| s.l2_norm() == 0.0));
        assert!(t.ledger.rows.iter().all(|r| r.h1_sq == 0.0 && r.diss_accum == 0.0));
    }

    #[test]
    fn linear_exact_examples() {
        let grid = SpectralGrid::new(4);
        let u0 = FourierField::cos_mode(&grid, 1, SQRT_2);
        assert_eq!(integrate_linear_exact(&u0, 0.7, 0.0), u0);
        let shifted = integrate_linear_exact(&u0, 0.5, 0.5);
        assert!(shifted.max_abs_diff(&FourierField::sin_mode(&grid, 1, SQRT_2)).unwrap() < 1e-15);
        let u = FourierField::from_coeffs(&grid, (0..9).map(|i| (i as f64).sin()).collect()).unwrap();
        let v = integrate_linear_exact(&u, 0.3, 1.7);
        for m in 0..4 {
            assert!((v.sobolev_norm(m) - u.sobolev_norm(m)).abs() < 1e-12 * u.sobolev_norm(m));
        }
        // pointwise: u0(x − σW)
        let x = 0.21;
        assert!((v.eval_at(x) - u.eval_at(x - 0.3 * 1.7)).abs() < 1e-12);
    }

    #[test]
    fn noise_flow_is_exact_rotation_for_constant_sigma() {
        let p = ModelParams::with_dynamics(0.0, SigmaProfile::constant(0.5), 6, NoiseForm::Basic, Dynamics::PureTransport)
            .unwrap();
        let u = FourierField::from_coeffs(p.grid(), (0..13).map(|i| 1.0 / (1.0 + i as f64)).collect()).unwrap();
        for dw in [0.01, -0.3, 1.1] {
            let flow = noise_flow(&u, &p, dw).unwrap();
            let exact = integrate_linear_exact(&u, 0.5, dw);
            assert!(flow.max_abs_diff(&exact).unwrap() < 1e-12, "dw = {dw}");
        }
    }

    #[test]
    fn rk4_conserves_h1_for_inviscid_noise_free_dynamics() {
        let p = ModelParams::new(0.0, SigmaProfile::zero(), 16, NoiseForm::Basic).unwrap();
        let u0 = smooth_u0(p.grid());
        let cfg = StepperConfig::new(Scheme::Rk4Deterministic, 1e-3, 0.2, 10);
        let t = integrate(&u0, &p, &cfg, &BrownianPath::zero(1e-3, 200)).unwrap();
        let h0 = t.ledger.rows[0].h1_sq;
        for r in &t.ledger.rows {
            assert!((r.h1_sq - h0).abs() <= 1e-9 * h0);
        }
    }

    #[test]
    fn lawson_rk4_matches_plain_rk4_for_small_steps() {
        let p = ModelParams::new(0.05, SigmaProfile::zero(), 8, NoiseForm::Basic).unwrap();
        let u0 = smooth_u0(p.grid());
        let mut cfg = StepperConfig::new(Scheme::Rk4Deterministic, 1e-4, 0.05, 100);
        let plain = integrate(&u0, &p, &cfg, &BrownianPath::zero(1e-4, 500)).unwrap();
        cfg.viscous_exponential = true;
        let lawson = integrate(&u0, &p, &cfg, &BrownianPath::zero(1e-4, 500)).unwrap();
        let d = plain.final_state.sub(&lawson.final_state).unwrap().l2_norm();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn blowup_is_recorded() {
        // ε = 0 with large negative slope data breaks quickly and eventually
        // produces an exploding state on a coarse grid with huge steps.
        let p = ModelParams::new(0.0, SigmaProfile::zero(), 8, NoiseForm::Basic).unwrap();
        let u0 = FourierField::sin_mode(p.grid(), 1, 50.0);
        let cfg = StepperConfig::new(Scheme::EulerMaruyama, 0.1, 50.0, 1);
        let t = integrate(&u0, &p, &cfg, &BrownianPath::zero(0.1, 500)).unwrap();
        assert!(t.blowup_time.is_some());
        assert!(matches!(t.check(), Err(Error::NonFinite { .. })));
    }
}
