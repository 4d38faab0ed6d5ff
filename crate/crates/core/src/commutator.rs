//! Periodic Friedrichs mollification and the regularisation commutators
//! used in the renormalization argument for pathwise uniqueness.
//!
//! Mollification is exact coefficient multiplication: frequency `j` is
//! scaled by `Ĵ(j) = ∫ J(x) cos(2πjx) dx`, with `Ĵ` computed once per
//! mollifier by trapezoidal quadrature of the profile and cached.

use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::SigmaProfile;
use crate::error::{Error, Result};
use crate::grid::{FourierField, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierProfile {
    /// `exp(−1/(1 − (x/δ)²))` on `(−δ, δ)`.
    Bump,
    /// Gaussian with standard deviation `δ/3`, cut off at `|x| = δ`.
    GaussianTruncated,
}

impl MollifierProfile {
    /// Unnormalized profile on the reference interval `[−1, 1]`.
    fn shape(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierProfile::Bump => (-1.0 / (1.0 - s * s)).exp(),
            MollifierProfile::GaussianTruncated => (-4.5 * s * s).exp(),
        }
    }
}

pub const DEFAULT_RESOLUTION: usize = 16_384;

#[derive(Debug)]
pub struct Mollifier {
    delta: f64,
    profile: MollifierProfile,
    resolution: usize,
    mass: f64,
    cache: Mutex<Vec<f64>>,
}

impl Clone for Mollifier {
    fn clone(&self) -> Self {
        Mollifier {
            delta: self.delta,
            profile: self.profile,
            resolution: self.resolution,
            mass: self.mass,
            cache: Mutex::new(self.cache.lock().expect("mollifier cache").clone()),
        }
    }
}

impl Mollifier {
    pub fn new(delta: f64, profile: MollifierProfile) -> Result<Self> {
        Self::with_resolution(delta, profile, DEFAULT_RESOLUTION)
    }

    /// `resolution` is the number of quadrature intervals on the support.
    pub fn with_resolution(delta: f64, profile: MollifierProfile, resolution: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(Error::InvalidArgument(format!("mollifier width must lie in (0, 0.25], got {delta}")));
        }
        if resolution < 64 {
            return Err(Error::InvalidArgument("mollifier quadrature resolution too small".into()));
        }
        let h = 2.0 / resolution as f64;
        let mass = (1..resolution).map(|i| profile.shape(-1.0 + i as f64 * h)).sum::<f64>() * h * delta;
        Ok(Mollifier { delta, profile, resolution, mass, cache: Mutex::new(vec![1.0]) })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> MollifierProfile {
        self.profile
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Normalized density `J_δ(x)` for `x ∈ [−½, ½)`.
    pub fn density(&self, x: f64) -> f64 {
        self.profile.shape(x / self.delta) / self.mass
    }

    /// `Ĵ(j)` for `j = 0..=j_max`; `Ĵ(0) = 1`.
    pub fn fourier_coeffs(&self, j_max: usize) -> Vec<f64> {
        let mut cache = self.cache.lock().expect("mollifier cache");
        let have = cache.len();
        if have <= j_max {
            let n = self.resolution;
            let h = 2.0 / n as f64;
            let nodes: Vec<(f64, f64)> =
                (1..n).map(|i| -1.0 + i as f64 * h).map(|s| (s, self.profile.shape(s))).collect();
            let norm: f64 = nodes.iter().map(|&(_, w)| w).sum();
            for j in have..=j_max {
                let k = SpectralGrid::wavenumber(j) * self.delta;
                let v: f64 = nodes.iter().map(|&(s, w)| w * (k * s).cos()).sum();
                cache.push(v / norm);
            }
        }
        cache[..=j_max].to_vec()
    }
}

/// `f * J_δ`.
pub fn mollify(f: &FourierField, j: &Mollifier) -> FourierField {
    let c = j.fourier_coeffs(f.n_modes());
    f.apply_multiplier(|k| c[k])
}

fn widen(f: &FourierField, n: usize) -> FourierField {
    if f.n_modes() >= n {
        f.clone()
    } else {
        f.resample(&SpectralGrid::new(n))
    }
}

/// `u ∂u + ∂K * (u² + ½(∂u)²)` evaluated exactly on a grid with twice the modes.
fn transport_with_pressure(u: &FourierField) -> Result<FourierField> {
    let w = widen(u, 2 * u.n_modes());
    let q = w.derivative();
    let uq = w.multiply(&q)?;
    let mut src = w.multiply(&w)?;
    src.axpy(0.5, &q.multiply(&q)?)?;
    uq.add(&src.derivative().helmholtz_solve())
}

/// Nonlinear commutator of the Camassa–Holm flux with mollification, for
/// the difference of two solutions `u` and `v`. Returned on a grid with
/// `2n` modes.
pub fn commutator_e1(u: &FourierField, v: &FourierField, j: &Mollifier) -> Result<FourierField> {
    if u.n_modes() != v.n_modes() || u.grid().n_phys() != v.grid().n_phys() {
        return Err(Error::GridMismatch(format!("E1 operands at levels {} and {}", u.n_modes(), v.n_modes())));
    }
    let full = transport_with_pressure(u)?.sub(&transport_with_pressure(v)?)?;
    let reg = transport_with_pressure(&mollify(u, j))?.sub(&transport_with_pressure(&mollify(v, j))?)?;
    mollify(&full, j).sub(&reg)
}

struct SigmaOn {
    s: FourierField,
    n: usize,
    constant: Option<f64>,
}

/// σ and `w` lifted to a grid wide enough for `depth` exact products with σ.
fn lift(w: &FourierField, sigma: &SigmaProfile, depth: usize) -> (FourierField, SigmaOn) {
    let n = w.n_modes() + depth * sigma.bandwidth();
    let grid = SpectralGrid::new(n);
    let constant = sigma.is_constant().then(|| sigma.coeffs()[0]);
    (w.resample(&grid), SigmaOn { s: sigma.field(&grid), n, constant })
}

impl SigmaOn {
    fn times(&self, f: &FourierField) -> Result<FourierField> {
        match self.constant {
            Some(c) => Ok(f.scale(c)),
            None => self.s.multiply(f),
        }
    }

    /// `∂(σ f)`
    fn sigma_op(&self, f: &FourierField) -> Result<FourierField> {
        Ok(self.times(f)?.derivative())
    }
}

/// `(σ ∂w) * J − σ ∂(w * J)` on a grid with `n + b` modes (`b` = σ bandwidth).
pub fn commutator_e2(w: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<FourierField> {
    let (w, s) = lift(w, sigma, 1);
    debug_assert_eq!(w.n_modes(), s.n);
    let q = w.derivative();
    mollify(&s.times(&q)?, j).sub(&s.times(&mollify(&q, j))?)
}

/// `∂E²`, the first-order bracket of `f ↦ ∂(σf)` with mollification
/// applied to `∂w`.
pub fn commutator_e2_derivative(w: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<FourierField> {
    Ok(commutator_e2(w, sigma, j)?.derivative())
}

/// `−½ (σ ∂(σ ∂w)) * J + ½ σ ∂(σ ∂(w * J))` on a grid with `n + 2b` modes.
pub fn commutator_e3(w: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<FourierField> {
    let (w, s) = lift(w, sigma, 2);
    let second = |f: &FourierField| -> Result<FourierField> { s.times(&s.times(&f.derivative())?.derivative()) };
    let mut out = mollify(&second(&w)?, j).scale(-0.5);
    out.axpy(0.5, &second(&mollify(&w, j))?)?;
    Ok(out)
}

fn require_second_derivative(sigma: &SigmaProfile) -> Result<()> {
    if sigma.smoothness() < 2 {
        return Err(Error::InvalidArgument(format!(
            "double commutator needs σ with two bounded derivatives, declared smoothness {}",
            sigma.smoothness()
        )));
    }
    Ok(())
}

/// `J * ∂(σ ∂(σξ)) − 2 ∂(σ J * ∂(σξ)) + ∂(σ ∂(σ (ξ * J)))` on a grid with
/// `n + 2b` modes.
pub fn double_commutator_r(xi: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<FourierField> {
    require_second_derivative(sigma)?;
    let (xi, s) = lift(xi, sigma, 2);
    let sig = |f: &FourierField| s.sigma_op(f);
    let mut out = mollify(&sig(&sig(&xi)?)?, j);
    out.axpy(-2.0, &sig(&mollify(&sig(&xi)?, j))?)?;
    out.axpy(1.0, &sig(&sig(&mollify(&xi, j))?)?)?;
    Ok(out)
}

/// The seven kernel integrals `[c1, ..., c7]` whose combination
/// `c1 + c2 − c3 − c4 − c5 − c6 − c7` is `−R`. Each is assembled from
/// convolutions with `J`, `J'` or `J''` and pointwise products with σ and
/// its derivatives, independently of [`double_commutator_r`].
pub fn bracket_terms(xi: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<[FourierField; 7]> {
    require_second_derivative(sigma)?;
    let (xi, s) = lift(xi, sigma, 2);
    let s0 = &s.s;
    let s1 = s0.derivative();
    let s2 = s1.derivative();
    let conv_d = |f: &FourierField, order: usize| mollify(f, j).derivative_n(order);
    let sxi = s0.multiply(&xi)?;
    let ss1 = s0.multiply(&s1)?;
    let ssq = s0.multiply(s0)?;
    let xi_d = mollify(&xi, j);
    let c1 = s0.multiply(&conv_d(&sxi, 2))?.scale(2.0);
    let c2 = s1.multiply(&conv_d(&sxi, 1))?.scale(2.0);
    let c3 = conv_d(&ssq.multiply(&xi)?, 2);
    let c4 = conv_d(&ss1.multiply(&xi)?, 1).scale(-1.0);
    let c5 = s1.multiply(&s1)?.add(&s0.multiply(&s2)?)?.multiply(&xi_d)?;
    let c6 = ss1.multiply(&xi_d.derivative())?.scale(3.0);
    let c7 = ssq.multiply(&xi_d.derivative_n(2))?;
    Ok([c1, c2, c3, c4, c5, c6, c7])
}

/// `−R` assembled as `(c2 − c4 − c6) + (c1 − c3 − c7) − c5`.
pub fn double_commutator_bracket(xi: &FourierField, sigma: &SigmaProfile, j: &Mollifier) -> Result<FourierField> {
    let [c1, c2, c3, c4, c5, c6, c7] = bracket_terms(xi, sigma, j)?;
    let first = c2.sub(&c4)?.sub(&c6)?;
    let second = c1.sub(&c3)?.sub(&c7)?;
    first.add(&second)?.sub(&c5)
}

/// Convex renormalization function `S` through its first two derivatives.
pub trait Renormalizer: Sync {
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
}

/// `S(r) = r²/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl Renormalizer for Quadratic {
    fn d1(&self, r: f64) -> f64 {
        r
    }

    fn d2(&self, _r: f64) -> f64 {
        1.0
    }
}

/// `|∫ −S'(∂w_δ) ∂E³ + S''(∂w_δ)(½|∂E²|² + ∂(σ ∂w_δ) ∂E²) dx|` for one field.
pub fn ito_strat_residual(w: &FourierField, sigma: &SigmaProfile, j: &Mollifier, s: &dyn Renormalizer) -> Result<f64> {
    let n = w.n_modes() + 2 * sigma.bandwidth();
    let grid = SpectralGrid::new(n);
    let dw_d = mollify(w, j).resample(&grid).derivative();
    let de3 = commutator_e3(w, sigma, j)?.resample(&grid).derivative();
    let de2 = commutator_e2_derivative(w, sigma, j)?.resample(&grid);
    let sig = sigma.field(&grid);
    let flux = sig.multiply(&dw_d)?.derivative();
    let (a, b, c, d) = (dw_d.to_physical(), de3.to_physical(), de2.to_physical(), flux.to_physical());
    let total: f64 = (0..a.len())
        .map(|k| -s.d1(a[k]) * b[k] + s.d2(a[k]) * (0.5 * c[k] * c[k] + d[k] * c[k]))
        .sum();
    Ok((total / a.len() as f64).abs())
}

/// Time integral (trapezoidal) of [`ito_strat_residual`] along a trajectory.
pub fn ito_strat_residual_path(
    times: &[f64],
    states: &[FourierField],
    sigma: &SigmaProfile,
    j: &Mollifier,
    s: &dyn Renormalizer,
) -> Result<f64> {
    if times.len() != states.len() || times.is_empty() {
        return Err(Error::InvalidArgument("times and states must be nonempty and of equal length".into()));
    }
    let vals = states.iter().map(|w| ito_strat_residual(w, sigma, j, s)).collect::<Result<Vec<_>>>()?;
    if vals.len() == 1 {
        return Ok(vals[0]);
    }
    Ok(times.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum())
}

/// Random test fields with Gaussian coefficients scaled by `j^{−decay}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestClass {
    Smooth,
    H1Critical,
    RoughL2,
}

impl TestClass {
    pub const ALL: [TestClass; 3] = [TestClass::Smooth, TestClass::H1Critical, TestClass::RoughL2];

    pub fn decay(&self) -> f64 {
        match self {
            TestClass::Smooth => 4.0,
            TestClass::H1Critical => 1.5,
            TestClass::RoughL2 => 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TestClass::Smooth => "smooth",
            TestClass::H1Critical => "h1_critical",
            TestClass::RoughL2 => "rough_l2",
        }
    }

    pub fn sample(&self, grid: &Arc<SpectralGrid>, seed: u64) -> FourierField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = FourierField::zeros(grid);
        let decay = self.decay();
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let j = (i + 1) / 2;
            *c = if j == 0 { z } else { z * (j as f64).powf(-decay) };
        }
        f
    }
}

pub const DEFAULT_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Measured commutator norms across a δ sweep for one test class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub class: String,
    pub deltas: Vec<f64>,
    /// `‖E¹_δ‖_{L²}`
    pub norm_e1: Vec<f64>,
    /// `‖E²_δ‖_{H¹}`
    pub norm_e2: Vec<f64>,
    /// `‖E³_δ‖_{L²}`
    pub norm_e3: Vec<f64>,
    /// `‖R_δ‖_{L²}`
    pub norm_r: Vec<f64>,
    pub residual: Vec<f64>,
    pub rates: CommutatorRates,
}

/// Least-squares slopes of `log norm` against `log δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRates {
    pub e1: f64,
    /// slope of `‖E¹_δ‖²_{L²}`
    pub e1_sq: f64,
    pub e2: f64,
    pub e3: f64,
    pub r: f64,
    pub residual: f64,
}

pub const REPORT_COLUMNS: [&str; 6] = ["delta", "norm_E1", "norm_E2", "norm_E3", "norm_R", "residual"];

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

impl CommutatorReport {
    pub fn rows(&self) -> Vec<[f64; 6]> {
        (0..self.deltas.len())
            .map(|i| [self.deltas[i], self.norm_e1[i], self.norm_e2[i], self.norm_e3[i], self.norm_r[i], self.residual[i]])
            .collect()
    }

    pub fn series(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("E1", &self.norm_e1),
            ("E2", &self.norm_e2),
            ("E3", &self.norm_e3),
            ("R", &self.norm_r),
            ("residual", &self.residual),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Inputs for a δ sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub class: TestClass,
    pub deltas: Vec<f64>,
    pub j_max: usize,
    pub seed: u64,
    pub profile: MollifierProfile,
    /// Independent draws averaged per δ (mean-square for norms).
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    4
}

impl SweepConfig {
    pub fn new(class: TestClass) -> Self {
        SweepConfig {
            class,
            deltas: DEFAULT_DELTAS.to_vec(),
            j_max: 320,
            seed: 2024,
            profile: MollifierProfile::Bump,
            samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("commutator sweep needs at least one sample".into()));
        }
        if self.deltas.len() < 2 || self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("delta sweep must be strictly decreasing with at least two values".into()));
        }
        let d_min = *self.deltas.last().expect("nonempty");
        if (self.j_max as f64) < 8.0 / d_min {
            return Err(Error::InvalidArgument(format!(
                "resolution j_max = {} does not resolve δ = {d_min} (needs ≥ {})",
                self.j_max,
                (8.0 / d_min).ceil()
            )));
        }
        Ok(())
    }
}

/// Runs the δ sweep with σ fixed. Each sample draws independent `u`, `v`,
/// `w` and `ξ` from the test class; norms are root-mean-square over samples
/// and the residual is the sample mean.
pub fn commutator_sweep(cfg: &SweepConfig, sigma: &SigmaProfile) -> Result<CommutatorReport> {
    cfg.validate()?;
    let grid = SpectralGrid::new(cfg.j_max);
    let draws: Vec<[FourierField; 4]> = (0..cfg.samples as u64)
        .map(|k| {
            let base = cfg.seed.wrapping_add(4 * k);
            std::array::from_fn(|i| cfg.class.sample(&grid, base.wrapping_add(i as u64)))
        })
        .collect();
    let mut rep = CommutatorReport {
        class: cfg.class.label().to_string(),
        deltas: cfg.deltas.clone(),
        norm_e1: Vec::new(),
        norm_e2: Vec::new(),
        norm_e3: Vec::new(),
        norm_r: Vec::new(),
        residual: Vec::new(),
        rates: CommutatorRates { e1: 0.0, e1_sq: 0.0, e2: 0.0, e3: 0.0, r: 0.0, residual: 0.0 },
    };
    let m = cfg.samples as f64;
    for &delta in &cfg.deltas {
        let j = Mollifier::new(delta, cfg.profile)?;
        let mut acc = [0.0; 5];
        for [u, v, w, xi] in &draws {
            acc[0] += commutator_e1(u, v, &j)?.l2_norm().powi(2);
            acc[1] += commutator_e2(w, sigma, &j)?.sobolev_norm_sq(1);
            acc[2] += commutator_e3(w, sigma, &j)?.l2_norm().powi(2);
            acc[3] += double_commutator_r(xi, sigma, &j)?.l2_norm().powi(2);
            acc[4] += ito_strat_residual(w, sigma, &j, &Quadratic)?;
        }
        rep.norm_e1.push((acc[0] / m).sqrt());
        rep.norm_e2.push((acc[1] / m).sqrt());
        rep.norm_e3.push((acc[2] / m).sqrt());
        rep.norm_r.push((acc[3] / m).sqrt());
        rep.residual.push(acc[4] / m);
    }
    let d = &rep.deltas;
    let sq: Vec<f64> = rep.norm_e1.iter().map(|v| v * v).collect();
    rep.rates = CommutatorRates {
        e1: loglog_slope(d, &rep.norm_e1),
        e1_sq: loglog_slope(d, &sq),
        e2: loglog_slope(d, &rep.norm_e2),
        e3: loglog_slope(d, &rep.norm_e3),
        r: loglog_slope(d, &rep.norm_r),
        residual: loglog_slope(d, &rep.residual),
    };
    Ok(rep)
}
