//! Real trigonometric basis on the unit circle ℝ/ℤ.
//!
//! A [`FourierField`] stores the coefficients of
//!
//! ```text
//! f(x) = c0 + Σ_{j=1..J} a_j √2 cos(2πjx) + b_j √2 sin(2πjx)
//! ```
//!
//! laid out as `[c0, a1, b1, a2, b2, ...]`. The basis is orthonormal in
//! L², so the L² norm of a field is the Euclidean norm of its coefficients.
//!
//! Products are evaluated on a uniform physical grid of `n_phys ≥ 3J + 1`
//! points, which makes the retained coefficients of any quadratic product of
//! band-limited fields exact.
//!
//! The Green's function of `1 - ∂²` on ℝ/ℤ is
//! `K(x) = cosh(x - ⌊x⌋ - 1/2) / (2 sinh(1/2))`; it is only ever applied
//! through its Fourier multiplier `1 / (1 + (2πj)²)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid on ℝ/ℤ together with its cached FFT plans.
pub struct SpectralGrid {
    n_modes: usize,
    n_phys: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n_modes", &self.n_modes)
            .field("n_phys", &self.n_phys)
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.n_phys == other.n_phys
    }
}

impl SpectralGrid {
    /// Grid retaining frequencies `0..=n_modes`, with the physical resolution
    /// rounded up to the next power of two above `3 * n_modes + 1`.
    pub fn new(n_modes: usize) -> Arc<Self> {
        let n_phys = (3 * n_modes + 1).next_power_of_two().max(4);
        Self::with_phys(n_modes, n_phys).expect("default physical resolution is valid")
    }

    pub fn with_phys(n_modes: usize, n_phys: usize) -> Result<Arc<Self>> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be positive".into()));
        }
        if n_phys < 3 * n_modes + 1 {
            return Err(Error::InvalidArgument(format!(
                "n_phys = {n_phys} cannot dealias quadratic products of {n_modes} modes (need ≥ {})",
                3 * n_modes + 1
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(SpectralGrid {
            n_modes,
            n_phys,
            forward: planner.plan_fft_forward(n_phys),
            inverse: planner.plan_fft_inverse(n_phys),
        }))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_phys(&self) -> usize {
        self.n_phys
    }

    pub fn n_coeffs(&self) -> usize {
        2 * self.n_modes + 1
    }

    /// Physical quadrature nodes `x_k = k / n_phys`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_phys).map(|k| k as f64 / self.n_phys as f64).collect()
    }

    /// Wavenumber `2πj` of frequency `j`.
    #[inline]
    pub fn wavenumber(j: usize) -> f64 {
        2.0 * PI * j as f64
    }

    fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_phys;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        buf[0] = Complex::new(coeffs[0], 0.0);
        for j in 1..=self.n_modes {
            let z = Complex::new(coeffs[2 * j - 1], -coeffs[2 * j]) / SQRT_2;
            buf[j] = z;
            buf[n - j] = z.conj();
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n_phys;
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut coeffs = vec![0.0; self.n_coeffs()];
        coeffs[0] = buf[0].re * scale;
        for j in 1..=self.n_modes {
            coeffs[2 * j - 1] = SQRT_2 * buf[j].re * scale;
            coeffs[2 * j] = -SQRT_2 * buf[j].im * scale;
        }
        coeffs
    }
}

/// Real trigonometric polynomial on the unit circle.
#[derive(Clone)]
pub struct FourierField {
    coeffs: Vec<f64>,
    grid: Arc<SpectralGrid>,
}

impl fmt::Debug for FourierField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierField")
            .field("n_modes", &self.grid.n_modes)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for FourierField {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.coeffs == other.coeffs
    }
}

impl FourierField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        FourierField { coeffs: vec![0.0; grid.n_coeffs()], grid: Arc::clone(grid) }
    }

    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.n_coeffs() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.n_coeffs(),
                coeffs.len()
            )));
        }
        Ok(FourierField { coeffs, grid: Arc::clone(grid) })
    }

    pub fn constant(grid: &Arc<SpectralGrid>, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = c;
        f
    }

    /// Orthonormal basis element with coefficient index `idx`
    /// (0 = constant, `2j-1` = √2 cos, `2j` = √2 sin).
    pub fn basis(grid: &Arc<SpectralGrid>, idx: usize) -> Result<Self> {
        if idx >= grid.n_coeffs() {
            return Err(Error::InvalidArgument(format!("basis index {idx} out of range")));
        }
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = 1.0;
        Ok(f)
    }

    /// `amp · cos(2πjx)` (not normalized).
    pub fn cos_mode(grid: &Arc<SpectralGrid>, j: usize, amp: f64) -> Self {
        let mut f = Self::zeros(grid);
        if j == 0 {
            f.coeffs[0] = amp;
        } else if j <= grid.n_modes {
            f.coeffs[2 * j - 1] = amp / SQRT_2;
        }
        f
    }

    /// `amp · sin(2πjx)` (not normalized).
    pub fn sin_mode(grid: &Arc<SpectralGrid>, j: usize, amp: f64) -> Self {
        let mut f = Self::zeros(grid);
        if j >= 1 && j <= grid.n_modes {
            f.coeffs[2 * j] = amp / SQRT_2;
        }
        f
    }

    /// Samples `g` on the physical grid and transforms. Exact only when `g`
    /// is a trigonometric polynomial of degree below `n_phys - n_modes`.
    pub fn from_fn(grid: &Arc<SpectralGrid>, g: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().into_iter().map(g).collect();
        Self::from_physical(grid, &values).expect("node count matches grid")
    }

    pub fn from_physical(grid: &Arc<SpectralGrid>, values: &[f64]) -> Result<Self> {
        if values.len() != grid.n_phys {
            return Err(Error::GridMismatch(format!(
                "expected {} physical values, got {}",
                grid.n_phys,
                values.len()
            )));
        }
        Ok(FourierField { coeffs: grid.analyze(values), grid: Arc::clone(grid) })
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.synthesize(&self.coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.grid.n_modes
    }

    /// Mean value `c0`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    /// Highest frequency carrying a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        (1..=self.grid.n_modes)
            .rev()
            .find(|&j| self.coeffs[2 * j - 1] != 0.0 || self.coeffs[2 * j] != 0.0)
            .unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn check_grid(&self, other: &FourierField) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.grid.n_modes, self.grid.n_phys, other.grid.n_modes, other.grid.n_phys
            )));
        }
        Ok(())
    }

    /// Orthogonal projection onto frequencies `0..=n`.
    pub fn project(&self, n: usize) -> FourierField {
        let mut out = self.clone();
        if n < self.grid.n_modes {
            out.coeffs[2 * n + 1..].iter_mut().for_each(|c| *c = 0.0);
        }
        out
    }

    /// Zero-pads or truncates into another grid.
    pub fn resample(&self, grid: &Arc<SpectralGrid>) -> FourierField {
        let mut out = FourierField::zeros(grid);
        let len = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..len].copy_from_slice(&self.coeffs[..len]);
        out
    }

    /// Exact spectral derivative.
    pub fn derivative(&self) -> FourierField {
        let mut out = FourierField::zeros(&self.grid);
        for j in 1..=self.grid.n_modes {
            let k = SpectralGrid::wavenumber(j);
            let (a, b) = (self.coeffs[2 * j - 1], self.coeffs[2 * j]);
            out.coeffs[2 * j - 1] = k * b;
            out.coeffs[2 * j] = -k * a;
        }
        out
    }

    pub fn derivative_n(&self, order: usize) -> FourierField {
        (0..order).fold(self.clone(), |f, _| f.derivative())
    }

    /// Dealiased pointwise product, truncated to the grid's modes.
    pub fn multiply(&self, other: &FourierField) -> Result<FourierField> {
        self.check_grid(other)?;
        let f = self.to_physical();
        let g = other.to_physical();
        let prod: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        FourierField::from_physical(&self.grid, &prod)
    }

    /// `(1 - ∂²)⁻¹ f`, i.e. periodic convolution with the Helmholtz kernel.
    pub fn helmholtz_solve(&self) -> FourierField {
        self.apply_multiplier(|j| 1.0 / (1.0 + SpectralGrid::wavenumber(j).powi(2)))
    }

    /// `(1 - ∂²) f`.
    pub fn helmholtz_apply(&self) -> FourierField {
        self.apply_multiplier(|j| 1.0 + SpectralGrid::wavenumber(j).powi(2))
    }

    /// Multiplies frequency `j` (both cos and sin parts) by `m(j)`.
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> f64) -> FourierField {
        let mut out = self.clone();
        out.coeffs[0] *= m(0);
        for j in 1..=self.grid.n_modes {
            let w = m(j);
            out.coeffs[2 * j - 1] *= w;
            out.coeffs[2 * j] *= w;
        }
        out
    }

    /// Weight `Σ_{ℓ≤m} (2πj)^{2ℓ}` of frequency `j` in the Hᵐ inner product.
    pub fn sobolev_weight(j: usize, m: usize) -> f64 {
        let k2 = SpectralGrid::wavenumber(j).powi(2);
        let mut w = 0.0;
        let mut p = 1.0;
        for _ in 0..=m {
            w += p;
            p *= k2;
        }
        w
    }

    /// Hᵐ inner product `Σ_{ℓ≤m} ⟨∂ˡf, ∂ˡg⟩`.
    pub fn sobolev_inner(&self, other: &FourierField, m: usize) -> Result<f64> {
        self.check_grid(other)?;
        let mut s = self.coeffs[0] * other.coeffs[0];
        for j in 1..=self.grid.n_modes {
            let w = Self::sobolev_weight(j, m);
            s += w
                * (self.coeffs[2 * j - 1] * other.coeffs[2 * j - 1]
                    + self.coeffs[2 * j] * other.coeffs[2 * j]);
        }
        Ok(s)
    }

    pub fn sobolev_norm_sq(&self, m: usize) -> f64 {
        let mut s = self.coeffs[0] * self.coeffs[0];
        for j in 1..=self.grid.n_modes {
            let e = self.coeffs[2 * j - 1].powi(2) + self.coeffs[2 * j].powi(2);
            s += Self::sobolev_weight(j, m) * e;
        }
        s
    }

    pub fn sobolev_norm(&self, m: usize) -> f64 {
        self.sobolev_norm_sq(m).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    pub fn l2_inner(&self, other: &FourierField) -> Result<f64> {
        self.sobolev_inner(other, 0)
    }

    /// Minimum and maximum over the physical quadrature grid.
    pub fn inf_and_sup(&self) -> (f64, f64) {
        self.to_physical()
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Grid maximum of `|f|`.
    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.inf_and_sup();
        lo.abs().max(hi.abs())
    }

    /// Point evaluation of the trigonometric polynomial.
    pub fn eval_at(&self, x: f64) -> f64 {
        let mut s = self.coeffs[0];
        for j in 1..=self.grid.n_modes {
            let (sn, cs) = (SpectralGrid::wavenumber(j) * x).sin_cos();
            s += SQRT_2 * (self.coeffs[2 * j - 1] * cs + self.coeffs[2 * j] * sn);
        }
        s
    }

    pub fn scale(&self, s: f64) -> FourierField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &FourierField) -> Result<()> {
        self.check_grid(other)?;
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &FourierField) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
