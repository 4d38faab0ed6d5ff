//! Galerkin drift and diffusion for the viscous stochastic Camassa–Holm
//! equation with transport noise.
//!
//! Everything is written in Itô form `du = drift(u) dt + diffusion(u) dW`:
//!
//! ```text
//! drift(u)     = ε ∂²u − Πₙ(u ∂u + ∂P[u]) + ½ Πₙ B(B(u))
//! diffusion(u) = −Πₙ B(u)
//! B(u)         = σ ∂u                               (basic noise)
//!              = σ ∂u + K * (2 ∂σ u + ∂²σ ∂u)       (Euler–Poincaré noise)
//! P[u]         = K * (u² + ½ (∂u)²)
//! ```
//!
//! The Itô correction `½ Πₙ B(B(u))` has no inner projection; it is evaluated
//! exactly on an auxiliary grid wide enough to hold `B(B(u))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FourierField, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseForm {
    #[default]
    Basic,
    EulerPoincare,
}

/// Which deterministic terms participate in the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Viscous Camassa–Holm transport plus the noise correction.
    #[default]
    CamassaHolm,
    /// Only the noise and its Itô correction; the Stratonovich equation is
    /// then pure transport `du + σ ∂u ∘ dW = 0`.
    PureTransport,
}

/// Noise amplitude σ(x) with its first three derivatives.
#[derive(Debug, Clone)]
pub struct SigmaProfile {
    sigma: Vec<f64>,
    smoothness: usize,
}

impl SigmaProfile {
    /// Trigonometric-polynomial σ given in the orthonormal coefficient
    /// layout `[c0, a1, b1, ...]`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(Error::InvalidArgument(
                "sigma coefficient list must have odd length 2J+1".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("sigma coefficients must be finite".into()));
        }
        Ok(SigmaProfile { sigma: coeffs, smoothness: usize::MAX })
    }

    pub fn constant(s: f64) -> Self {
        SigmaProfile { sigma: vec![s], smoothness: usize::MAX }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `mean + amp · √2 sin(2πx)`.
    pub fn mean_plus_sine(mean: f64, amp: f64) -> Self {
        SigmaProfile { sigma: vec![mean, 0.0, amp], smoothness: usize::MAX }
    }

    /// Declares a finite Sobolev smoothness order (W^{m,∞}). Trigonometric
    /// polynomials are smooth, so this only matters for tests of the
    /// smoothness guard.
    pub fn with_smoothness(mut self, m: usize) -> Self {
        self.smoothness = m;
        self
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.sigma
    }

    pub fn bandwidth(&self) -> usize {
        let j_max = (self.sigma.len() - 1) / 2;
        (1..=j_max)
            .rev()
            .find(|&j| self.sigma[2 * j - 1] != 0.0 || self.sigma[2 * j] != 0.0)
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.bandwidth() == 0
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|&c| c == 0.0)
    }

    /// σ as a field on `grid` (truncating if the grid is too narrow).
    pub fn field(&self, grid: &Arc<SpectralGrid>) -> FourierField {
        let mut f = FourierField::zeros(grid);
        let len = self.sigma.len().min(grid.n_coeffs());
        f.coeffs_mut()[..len].copy_from_slice(&self.sigma[..len]);
        f
    }

    /// Physical values of σ, σ', σ'' on `grid`.
    pub fn sample(&self, grid: &Arc<SpectralGrid>) -> SigmaSamples {
        let s = self.field(grid);
        let d1 = s.derivative();
        let d2 = d1.derivative();
        SigmaSamples { sigma: s.to_physical(), d1: d1.to_physical(), d2: d2.to_physical() }
    }

    /// `‖σ‖_{W^{k,∞}}` bound `Σ_j (2πj)^k √2 (|a_j| + |b_j|)` summed over k ≤ order.
    pub fn sup_bound(&self, order: usize) -> f64 {
        let j_max = (self.sigma.len() - 1) / 2;
        let mut total = 0.0;
        for k in 0..=order {
            let mut s = if k == 0 { self.sigma[0].abs() } else { 0.0 };
            for j in 1..=j_max {
                s += SpectralGrid::wavenumber(j).powi(k as i32)
                    * std::f64::consts::SQRT_2
                    * (self.sigma[2 * j - 1].abs() + self.sigma[2 * j].abs());
            }
            total += s;
        }
        total
    }
}

/// σ, ∂σ and ∂²σ sampled on a physical grid.
#[derive(Debug, Clone)]
pub struct SigmaSamples {
    pub sigma: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

#[derive(Debug)]
struct Prepared {
    grid: Arc<SpectralGrid>,
    wide: Arc<SpectralGrid>,
    on_grid: SigmaSamples,
    on_wide: SigmaSamples,
}

/// Model parameters together with the grids and σ samples the operators need.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub epsilon: f64,
    pub sigma: SigmaProfile,
    pub n: usize,
    pub noise_form: NoiseForm,
    pub dynamics: Dynamics,
    prepared: Arc<Prepared>,
}

impl ModelParams {
    pub fn new(epsilon: f64, sigma: SigmaProfile, n: usize, noise_form: NoiseForm) -> Result<Self> {
        Self::with_dynamics(epsilon, sigma, n, noise_form, Dynamics::CamassaHolm)
    }

    pub fn with_dynamics(
        epsilon: f64,
        sigma: SigmaProfile,
        n: usize,
        noise_form: NoiseForm,
        dynamics: Dynamics,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be finite and ≥ 0, got {epsilon}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("truncation level must be positive".into()));
        }
        let js = sigma.bandwidth();
        if js > n {
            return Err(Error::InvalidArgument(format!(
                "sigma bandwidth {js} exceeds truncation level {n}"
            )));
        }
        if noise_form == NoiseForm::EulerPoincare && sigma.smoothness() < 3 {
            return Err(Error::InvalidArgument(
                "Euler–Poincaré noise needs sigma in W^{3,∞}".into(),
            ));
        }
        let grid = SpectralGrid::new(n);
        let wide = SpectralGrid::new(n + 2 * js);
        let on_grid = sigma.sample(&grid);
        let on_wide = sigma.sample(&wide);
        Ok(ModelParams {
            epsilon,
            sigma,
            n,
            noise_form,
            dynamics,
            prepared: Arc::new(Prepared { grid, wide, on_grid, on_wide }),
        })
    }

    /// Working grid at the truncation level.
    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.prepared.grid
    }

    pub fn sigma_samples(&self) -> &SigmaSamples {
        &self.prepared.on_grid
    }

    /// True when the parameters lie outside the ε > 0 well-posedness regime.
    pub fn is_inviscid(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn is_noise_free(&self) -> bool {
        self.sigma.is_zero()
    }

    /// Upper bound on the operator norm of `Πₙ B` restricted to level n.
    pub fn noise_operator_bound(&self) -> f64 {
        let k = SpectralGrid::wavenumber(self.n);
        let base = self.sigma.sup_bound(0) * k + self.sigma.sup_bound(1);
        match self.noise_form {
            NoiseForm::Basic => base,
            NoiseForm::EulerPoincare => base + 2.0 * self.sigma.sup_bound(2) * (1.0 + k),
        }
    }

    fn check(&self, u: &FourierField) -> Result<()> {
        if u.n_modes() != self.n || u.grid().n_phys() != self.grid().n_phys() {
            return Err(Error::TruncationMismatch { field: u.n_modes(), model: self.n });
        }
        Ok(())
    }
}

fn pointwise(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// `B(u)` evaluated on `u`'s grid with σ samples `s` for that grid; the
/// result is truncated to the grid's modes.
fn noise_operator(u: &FourierField, s: &SigmaSamples, form: NoiseForm) -> FourierField {
    let grid = u.grid();
    let du = u.derivative().to_physical();
    let transport = pointwise(&s.sigma, &du);
    let mut out = FourierField::from_physical(grid, &transport).expect("grid sized samples");
    if form == NoiseForm::EulerPoincare {
        let uv = u.to_physical();
        let inner: Vec<f64> =
            (0..uv.len()).map(|k| 2.0 * s.d1[k] * uv[k] + s.d2[k] * du[k]).collect();
        let nonlocal = FourierField::from_physical(grid, &inner).expect("grid sized samples").helmholtz_solve();
        out.axpy(1.0, &nonlocal).expect("same grid");
    }
    out
}

/// `P[u] = K * (u² + ½(∂u)²)` without truncation: the result lives on a grid
/// with twice the modes of `u`.
pub fn pressure(u: &FourierField) -> FourierField {
    let wide = SpectralGrid::new(2 * u.n_modes());
    let w = u.resample(&wide);
    pressure_source(&w).helmholtz_solve()
}

/// `u² + ½(∂u)²` truncated to `u`'s grid.
fn pressure_source(u: &FourierField) -> FourierField {
    let uv = u.to_physical();
    let dv = u.derivative().to_physical();
    let src: Vec<f64> = uv.iter().zip(&dv).map(|(a, b)| a * a + 0.5 * b * b).collect();
    FourierField::from_physical(u.grid(), &src).expect("grid sized samples")
}

/// `Πₙ(u ∂u + ∂P[u])`, exact because all products are quadratic.
pub fn transport_nonlinearity(u: &FourierField) -> FourierField {
    let uv = u.to_physical();
    let dv = u.derivative().to_physical();
    let n = uv.len();
    let mut adv = Vec::with_capacity(n);
    let mut src = Vec::with_capacity(n);
    for k in 0..n {
        adv.push(uv[k] * dv[k]);
        src.push(uv[k] * uv[k] + 0.5 * dv[k] * dv[k]);
    }
    let grid = u.grid();
    let mut out = FourierField::from_physical(grid, &adv).expect("grid sized samples");
    let p = FourierField::from_physical(grid, &src).expect("grid sized samples").helmholtz_solve();
    out.axpy(1.0, &p.derivative()).expect("same grid");
    out
}

/// Itô correction `½ Πₙ B(B(u))` without inner projection.
pub fn ito_correction(u: &FourierField, p: &ModelParams) -> Result<FourierField> {
    p.check(u)?;
    if p.sigma.is_zero() {
        return Ok(FourierField::zeros(p.grid()));
    }
    let prep = &p.prepared;
    let w = u.resample(&prep.wide);
    let bu = noise_operator(&w, &prep.on_wide, p.noise_form);
    let bbu = noise_operator(&bu, &prep.on_wide, p.noise_form);
    Ok(bbu.resample(&prep.grid).scale(0.5))
}

/// Deterministic part of the drift in Stratonovich form:
/// `ε ∂²u − Πₙ(u ∂u + ∂P[u])` (zero for pure transport).
pub fn stratonovich_drift(u: &FourierField, p: &ModelParams) -> Result<FourierField> {
    p.check(u)?;
    match p.dynamics {
        Dynamics::PureTransport => Ok(FourierField::zeros(p.grid())),
        Dynamics::CamassaHolm => {
            let mut out = transport_nonlinearity(u).scale(-1.0);
            if p.epsilon != 0.0 {
                out.axpy(p.epsilon, &u.derivative().derivative())?;
            }
            Ok(out)
        }
    }
}

/// Itô drift `ε ∂²u − Πₙ(u ∂u + ∂P[u]) + ½ Πₙ B(B(u))`.
pub fn drift(u: &FourierField, p: &ModelParams) -> Result<FourierField> {
    let mut out = stratonovich_drift(u, p)?;
    if !p.sigma.is_zero() {
        out.axpy(1.0, &ito_correction(u, p)?)?;
    }
    Ok(out)
}

/// Diffusion coefficient `−Πₙ B(u)`.
pub fn diffusion(u: &FourierField, p: &ModelParams) -> Result<FourierField> {
    p.check(u)?;
    if p.sigma.is_zero() {
        return Ok(FourierField::zeros(p.grid()));
    }
    Ok(noise_operator(u, &p.prepared.on_grid, p.noise_form).scale(-1.0))
}

/// `b'(u) b(u)` for the linear diffusion: `diffusion(diffusion(u))`, i.e.
/// `Πₙ B Πₙ B u` with the inner projection kept.
pub fn diffusion_derivative_action(u: &FourierField, p: &ModelParams) -> Result<FourierField> {
    let b = diffusion(u, p)?;
    diffusion(&b, p)
}

/// `‖Πₙ B Πₙ B u − Πₙ B B u‖_{L²}`: the gap between the inner-projected and
/// the printed Itô correction (times two).
pub fn inner_projection_gap(u: &FourierField, p: &ModelParams) -> Result<f64> {
    let with_inner = diffusion_derivative_action(u, p)?;
    let without = ito_correction(u, p)?.scale(2.0);
    Ok(with_inner.sub(&without)?.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &Arc<SpectralGrid>, rng: &mut ChaCha8Rng, decay: f64) -> FourierField {
        let mut f = FourierField::zeros(grid);
        f.coeffs_mut()[0] = rng.random_range(-1.0..1.0);
        for j in 1..=grid.n_modes() {
            let s = (j as f64).powf(-decay);
            f.coeffs_mut()[2 * j - 1] = s * rng.random_range(-1.0..1.0);
            f.coeffs_mut()[2 * j] = s * rng.random_range(-1.0..1.0);
        }
        f
    }

    fn params(eps: f64, sigma: SigmaProfile, n: usize) -> ModelParams {
        ModelParams::new(eps, sigma, n, NoiseForm::Basic).unwrap()
    }

    /// H¹ pairing by physical quadrature: ∫ f g + f' g' dx.
    fn h1_pairing_quadrature(f: &FourierField, g: &FourierField) -> f64 {
        let n = f.grid().n_phys() as f64;
        let (fv, gv) = (f.to_physical(), g.to_physical());
        let (dfv, dgv) = (f.derivative().to_physical(), g.derivative().to_physical());
        (0..fv.len()).map(|k| fv[k] * gv[k] + dfv[k] * dgv[k]).sum::<f64>() / n
    }

    #[test]
    fn sigma_derivatives_are_consistent() {
        let s = SigmaProfile::from_coeffs(vec![0.5, 0.1, 0.2, 0.0, 0.05]).unwrap();
        let grid = SpectralGrid::new(8);
        let samples = s.sample(&grid);
        let f = s.field(&grid);
        let d1 = f.derivative().to_physical();
        let d2 = f.derivative().derivative().to_physical();
        for k in 0..d1.len() {
            assert!((samples.d1[k] - d1[k]).abs() < 1e-12);
            assert!((samples.d2[k] - d2[k]).abs() < 1e-12);
        }
        assert_eq!(s.bandwidth(), 2);
        assert!(SigmaProfile::from_coeffs(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-1.0, SigmaProfile::zero(), 4, NoiseForm::Basic).is_err());
        assert!(ModelParams::new(0.1, SigmaProfile::zero(), 0, NoiseForm::Basic).is_err());
        let wide_sigma = SigmaProfile::from_coeffs(vec![0.0; 21]).unwrap();
        assert!(ModelParams::new(0.1, wide_sigma, 4, NoiseForm::Basic).is_ok());
        let mut c = vec![0.0; 21];
        c[19] = 1.0;
        let wide_sigma = SigmaProfile::from_coeffs(c).unwrap();
        assert!(ModelParams::new(0.1, wide_sigma, 4, NoiseForm::Basic).is_err());
        let rough = SigmaProfile::mean_plus_sine(0.5, 0.1).with_smoothness(2);
        assert!(ModelParams::new(0.1, rough, 4, NoiseForm::EulerPoincare).is_err());
    }

    #[test]
    fn pressure_examples() {
        let grid = SpectralGrid::new(4);
        assert_eq!(pressure(&FourierField::zeros(&grid)).l2_norm(), 0.0);
        let p = pressure(&FourierField::constant(&grid, 1.5));
        assert!((p.mean() - 2.25).abs() < 1e-15 && p.project(0).sub(&p).unwrap().l2_norm() < 1e-15);

        let p = pressure(&FourierField::cos_mode(&grid, 1, 1.0));
        let wide = p.grid().clone();
        let expected = FourierField::constant(&wide, 0.5 + PI * PI)
            .add(&FourierField::cos_mode(&wide, 2, (0.5 - PI * PI) / (1.0 + 16.0 * PI * PI)))
            .unwrap();
        assert!(p.max_abs_diff(&expected).unwrap() < 1e-13);
    }

    #[test]
    fn pressure_truncation_matches_drift_assembly() {
        let grid = SpectralGrid::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(&grid, &mut rng, 1.0);
        let full = pressure(&u).derivative().resample(&grid);
        let adv = u.multiply(&u.derivative()).unwrap();
        let expected = adv.add(&full).unwrap();
        let got = transport_nonlinearity(&u);
        assert!(got.max_abs_diff(&expected).unwrap() < 1e-11);
    }

    #[test]
    fn drift_and_diffusion_vanish_at_zero_and_constants() {
        let p = params(0.05, SigmaProfile::mean_plus_sine(0.5, 0.2), 8);
        let zero = FourierField::zeros(p.grid());
        assert_eq!(drift(&zero, &p).unwrap().l2_norm(), 0.0);
        assert_eq!(diffusion(&zero, &p).unwrap().l2_norm(), 0.0);
        let c = FourierField::constant(p.grid(), 0.7);
        assert!(drift(&c, &p).unwrap().l2_norm() < 1e-15);
        assert!(diffusion(&c, &p).unwrap().l2_norm() < 1e-15);
        assert!(diffusion_derivative_action(&c, &p).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn truncation_mismatch_is_rejected() {
        let p = params(0.05, SigmaProfile::zero(), 8);
        let other = FourierField::zeros(&SpectralGrid::new(6));
        assert!(matches!(drift(&other, &p), Err(Error::TruncationMismatch { .. })));
        assert!(diffusion(&other, &p).is_err());
    }

    #[test]
    fn deterministic_h1_conservation() {
        let p = params(0.0, SigmaProfile::zero(), 16);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let u = random_field(p.grid(), &mut rng, 1.0);
            let d = drift(&u, &p).unwrap();
            let spectral = d.sobolev_inner(&u, 1).unwrap();
            let quad = h1_pairing_quadrature(&d, &u);
            let scale = u.sobolev_norm(1).powi(3);
            assert!(spectral.abs() <= 1e-10 * scale, "{spectral}");
            assert!(quad.abs() <= 1e-10 * scale, "{quad}");
        }
    }

    #[test]
    fn viscous_dissipation_sign() {
        let p = params(0.03, SigmaProfile::zero(), 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let u = random_field(p.grid(), &mut rng, 1.0);
            let pairing = drift(&u, &p).unwrap().sobolev_inner(&u, 1).unwrap();
            let expected = -0.03 * u.derivative().sobolev_norm_sq(1);
            assert!((pairing - expected).abs() <= 1e-9 * expected.abs());
            assert!(pairing <= 0.0);
        }
    }

    #[test]
    fn constant_sigma_diffusion_is_rotation_generator() {
        let s = 0.4;
        let p = params(0.0, SigmaProfile::constant(s), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let u = random_field(p.grid(), &mut rng, 1.0);
        let d = diffusion(&u, &p).unwrap();
        assert!(d.max_abs_diff(&u.derivative().scale(-s)).unwrap() < 1e-13);
        // extract the linear map column by column
        let n = p.grid().n_coeffs();
        for col in 0..n {
            let e = FourierField::basis(p.grid(), col).unwrap();
            let image = diffusion(&e, &p).unwrap();
            for row in 0..n {
                let v = image.coeffs()[row];
                let same_pair = col > 0 && row > 0 && (row + 1) / 2 == (col + 1) / 2;
                if !same_pair {
                    assert!(v.abs() < 1e-13, "coupling {row} <- {col}: {v}");
                }
            }
            if col > 0 {
                let j = (col + 1) / 2;
                let k = SpectralGrid::wavenumber(j);
                let partner = if col % 2 == 1 { col + 1 } else { col - 1 };
                let sign = if col % 2 == 1 { 1.0 } else { -1.0 };
                assert!((image.coeffs()[partner] - sign * s * k).abs() < 1e-12);
                assert!(image.coeffs()[col].abs() < 1e-13);
            }
        }
        let dd = diffusion_derivative_action(&u, &p).unwrap();
        let expected = u.derivative().derivative().scale(s * s);
        assert!(dd.max_abs_diff(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn diffusion_energy_pairing_matches_integration_by_parts() {
        let sigma = SigmaProfile::mean_plus_sine(0.5, 0.2);
        let p = params(0.01, sigma.clone(), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let ds = sigma.field(p.grid()).derivative();
        for _ in 0..20 {
            let u = random_field(p.grid(), &mut rng, 1.0);
            let pairing = diffusion(&u, &p).unwrap().l2_inner(&u).unwrap();
            // ½ ∫ σ' u² dx by quadrature on the (alias-free for cubic) fine grid
            let fine = SpectralGrid::with_phys(10, 256).unwrap();
            let uu = u.resample(&fine).to_physical();
            let dv = ds.resample(&fine).to_physical();
            let oracle = 0.5 * (0..uu.len()).map(|k| dv[k] * uu[k] * uu[k]).sum::<f64>() / 256.0;
            assert!((pairing - oracle).abs() < 1e-10, "{pairing} vs {oracle}");
        }
    }

    #[test]
    fn ito_correction_matches_pointwise_formula() {
        // ½ Πₙ(σσ' u' + σ² u'') evaluated on a very fine grid
        let sigma = SigmaProfile::from_coeffs(vec![0.5, 0.1, 0.2, -0.05, 0.03]).unwrap();
        let p = params(0.0, sigma.clone(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let u = random_field(p.grid(), &mut rng, 0.5);
        let got = ito_correction(&u, &p).unwrap();
        let fine = SpectralGrid::with_phys(8, 512).unwrap();
        let s = sigma.sample(&fine);
        let uf = u.resample(&fine);
        let d1 = uf.derivative().to_physical();
        let d2 = uf.derivative().derivative().to_physical();
        let vals: Vec<f64> =
            (0..512).map(|k| 0.5 * (s.sigma[k] * s.d1[k] * d1[k] + s.sigma[k] * s.sigma[k] * d2[k])).collect();
        let expected = FourierField::from_physical(&fine, &vals).unwrap();
        let diff = got.coeffs().iter().zip(expected.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
    }

    #[test]
    fn inner_projection_gap_shrinks_with_resolution() {
        let sigma = SigmaProfile::mean_plus_sine(0.5, 0.2);
        let profile = |x: f64| 0.3 * (-(x - 0.5).powi(2) / 0.0004).exp();
        let mut gaps = Vec::new();
        for &n in &[16usize, 32, 64] {
            let p = params(0.0, sigma.clone(), n);
            let u = FourierField::from_fn(&SpectralGrid::with_phys(n, 4096).unwrap(), profile).resample(p.grid());
            gaps.push(inner_projection_gap(&u, &p).unwrap());
        }
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    }

    #[test]
    fn euler_poincare_noise_adds_nonlocal_part() {
        let sigma = SigmaProfile::mean_plus_sine(0.5, 0.2);
        let p = ModelParams::new(0.0, sigma.clone(), 8, NoiseForm::EulerPoincare).unwrap();
        let u = FourierField::cos_mode(p.grid(), 2, 1.0);
        let d = diffusion(&u, &p).unwrap();
        // direct assembly of σu' + K*(2σ'u + σ''u')
        let sf = sigma.field(p.grid());
        let s1 = sf.derivative();
        let s2 = s1.derivative();
        let du = u.derivative();
        let inner = s1.multiply(&u).unwrap().scale(2.0).add(&s2.multiply(&du).unwrap()).unwrap();
        let expected = sf.multiply(&du).unwrap().add(&inner.helmholtz_solve()).unwrap().scale(-1.0);
        assert!(d.max_abs_diff(&expected).unwrap() < 1e-12);
        // constant sigma: nonlocal part vanishes
        let pc = ModelParams::new(0.0, SigmaProfile::constant(0.3), 8, NoiseForm::EulerPoincare).unwrap();
        let uc = FourierField::cos_mode(pc.grid(), 2, 1.0);
        let basic = params(0.0, SigmaProfile::constant(0.3), 8);
        assert!(diffusion(&uc, &pc).unwrap().max_abs_diff(&diffusion(&uc, &basic).unwrap()).unwrap() < 1e-14);
    }
}
