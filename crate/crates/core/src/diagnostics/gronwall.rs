//! Empirical check of the stochastic Gronwall moment bound
//!
//! ```text
//! (𝔼 sup ξ^ν)^{1/ν} ≤ (r/(r−ν))^{1/ν} (𝔼 exp(rA/(1−r)))^{(1−r)/r} 𝔼(ξ(0) + ∫η)
//! ```
//!
//! for processes with `dξ ≤ η dt + ξ dA + dM`, `0 < ν < r < 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mc::{compensated_sum, MCEstimate};
use crate::error::{Error, Result};
use crate::noise::path_key;

/// One sample path of `(ξ, η, A, M)` on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallProcess {
    pub times: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub a: Vec<f64>,
    pub m: Vec<f64>,
}

/// Relative slack for the row-wise differential inequality.
pub const PRECONDITION_TOL: f64 = 1e-10;

impl GronwallProcess {
    /// Verifies the structural hypotheses and, row by row,
    /// `ξ_{k+1} − ξ_k ≤ η_k Δt + ξ_k ΔA_k + ΔM_k` up to `tol` relative slack.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let n = self.times.len();
        if n < 2 || [self.xi.len(), self.eta.len(), self.a.len(), self.m.len()].iter().any(|&l| l != n) {
            return Err(Error::Precondition("process components must share a time grid of length ≥ 2".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("time grid must be strictly increasing".into()));
        }
        if let Some(k) = self.xi.iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::Precondition(format!("ξ negative or non-finite at row {k}")));
        }
        if let Some(k) = self.eta.iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::Precondition(format!("η negative or non-finite at row {k}")));
        }
        if self.a[0] != 0.0 || self.m[0] != 0.0 {
            return Err(Error::Precondition("A(0) and M(0) must vanish".into()));
        }
        if let Some(k) = self.a.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Precondition(format!("A decreases at row {k}")));
        }
        for k in 0..n - 1 {
            let dt = self.times[k + 1] - self.times[k];
            let da = self.a[k + 1] - self.a[k];
            let dm = self.m[k + 1] - self.m[k];
            let lhs = self.xi[k + 1] - self.xi[k];
            let rhs = self.eta[k] * dt + self.xi[k] * da + dm;
            let scale = self.xi[k].abs() + self.xi[k + 1].abs() + (self.eta[k] * dt).abs() + dm.abs();
            if lhs > rhs + tol * scale.max(1e-300) {
                return Err(Error::Precondition(format!(
                    "differential inequality fails at row {k}: Δξ = {lhs:e} > {rhs:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn sup_xi(&self) -> f64 {
        self.xi.iter().cloned().fold(0.0, f64::max)
    }

    /// `ξ(0) + ∫η dt` with left-point sums, matching the discrete inequality.
    pub fn source_total(&self) -> f64 {
        self.xi[0] + compensated_sum((0..self.times.len() - 1).map(|k| self.eta[k] * (self.times[k + 1] - self.times[k])))
    }

    pub fn final_a(&self) -> f64 {
        *self.a.last().expect("verified nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub nu: f64,
    pub r: f64,
    pub n_samples: usize,
    /// `(𝔼 sup ξ^ν)^{1/ν}`
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub constant: f64,
    /// `(𝔼 exp(rA(T)/(1−r)))^{(1−r)/r}`
    pub exp_factor: f64,
    /// `𝔼(ξ(0) + ∫η)`
    pub source: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// `rhs − lhs`
    pub margin: f64,
    /// `lhs` exceeds `rhs` by more than three combined standard errors.
    pub violated: bool,
}

/// Evaluates both sides of the moment bound on an ensemble of processes,
/// after verifying every sample against the differential inequality.
pub fn gronwall_check(samples: &[GronwallProcess], nu: f64, r: f64) -> Result<GronwallReport> {
    if !(0.0 < nu && nu < r && r < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < ν < r < 1, got ν = {nu}, r = {r}")));
    }
    for (i, s) in samples.iter().enumerate() {
        s.verify(PRECONDITION_TOL)
            .map_err(|e| Error::Precondition(format!("sample {i}: {e}")))?;
    }
    let sup_nu: Vec<f64> = samples.iter().map(|s| s.sup_xi().powf(nu)).collect();
    let expo: Vec<f64> = samples.iter().map(|s| (r * s.final_a() / (1.0 - r)).exp()).collect();
    let src: Vec<f64> = samples.iter().map(|s| s.source_total()).collect();
    let m_sup = MCEstimate::from_samples(&sup_nu)?;
    let m_exp = MCEstimate::from_samples(&expo)?;
    let m_src = MCEstimate::from_samples(&src)?;

    let lhs = m_sup.mean.powf(1.0 / nu);
    let lhs_stderr = if m_sup.mean > 0.0 { lhs / (nu * m_sup.mean) * m_sup.stderr } else { 0.0 };
    let constant = (r / (r - nu)).powf(1.0 / nu);
    let q = (1.0 - r) / r;
    let exp_factor = m_exp.mean.powf(q);
    let rhs = constant * exp_factor * m_src.mean;
    let rel_exp = q * m_exp.stderr / m_exp.mean;
    let rel_src = if m_src.mean > 0.0 { m_src.stderr / m_src.mean } else { 0.0 };
    let rhs_stderr = rhs * (rel_exp.powi(2) + rel_src.powi(2)).sqrt();
    let margin = rhs - lhs;
    Ok(GronwallReport {
        nu,
        r,
        n_samples: samples.len(),
        lhs,
        lhs_stderr,
        constant,
        exp_factor,
        source: m_src.mean,
        rhs,
        rhs_stderr,
        margin,
        violated: -margin > 3.0 * (lhs_stderr + rhs_stderr),
    })
}

/// Synthetic process families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GronwallPreset {
    /// `dξ = ξ dA` with `A(t) = a_rate·t`, `η ≡ 0`, `M ≡ 0`.
    Deterministic { a_rate: f64 },
    /// `dξ = η dt + ξ dA + ξ β dB` with `A(t) = a_rate·t` and `B` a
    /// Rademacher random walk, so `M` is an exact discrete martingale.
    Martingale { a_rate: f64, eta: f64, beta: f64 },
    /// The martingale preset with `η` flipped negative at one row.
    Corrupted { a_rate: f64, eta: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSimulation {
    pub preset: GronwallPreset,
    pub samples: usize,
    pub steps: usize,
    pub t_end: f64,
    pub xi0: f64,
    pub seed: u64,
}

impl GronwallSimulation {
    pub fn generate(&self) -> Result<Vec<GronwallProcess>> {
        if self.steps == 0 || !(self.t_end > 0.0) || !(self.xi0 >= 0.0) {
            return Err(Error::InvalidArgument("gronwall simulation needs steps ≥ 1, t_end > 0, ξ(0) ≥ 0".into()));
        }
        let dt = self.t_end / self.steps as f64;
        let (a_rate, eta, beta, corrupt) = match self.preset {
            GronwallPreset::Deterministic { a_rate } => (a_rate, 0.0, 0.0, false),
            GronwallPreset::Martingale { a_rate, eta, beta } => (a_rate, eta, beta, false),
            GronwallPreset::Corrupted { a_rate, eta, beta } => (a_rate, eta, beta, true),
        };
        if !(a_rate >= 0.0) || beta * dt.sqrt() >= 1.0 || !(beta >= 0.0) {
            return Err(Error::InvalidArgument("need a_rate ≥ 0 and 0 ≤ β√dt < 1".into()));
        }
        let times: Vec<f64> = (0..=self.steps).map(|k| k as f64 * dt).collect();
        Ok((0..self.samples as u64)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(path_key(self.seed, i));
                let mut xi = vec![self.xi0];
                let mut a = vec![0.0];
                let mut m = vec![0.0];
                let mut etas = vec![eta; self.steps + 1];
                for k in 0..self.steps {
                    let z = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let dm = xi[k] * beta * dt.sqrt() * z;
                    let da = a_rate * dt;
                    xi.push(xi[k] + etas[k] * dt + xi[k] * da + dm);
                    a.push(a[k] + da);
                    m.push(m[k] + dm);
                }
                if corrupt {
                    etas[self.steps / 2] = -eta.abs().max(1.0);
                }
                GronwallProcess { times: times.clone(), xi, eta: etas, a, m }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim(preset: GronwallPreset, samples: usize) -> GronwallSimulation {
        GronwallSimulation { preset, samples, steps: 100, t_end: 1.0, xi0: 1.0, seed: 11 }
    }

    #[test]
    fn deterministic_case_reduces_to_classical_gronwall() {
        let procs = sim(GronwallPreset::Deterministic { a_rate: 1.0 }, 4).generate().unwrap();
        let rep = gronwall_check(&procs, 0.5, 0.75).unwrap();
        // ξ(T) = (1 + dt)^N ≤ e
        assert!((rep.lhs - 1.01f64.powi(100)).abs() < 1e-12);
        assert!((rep.exp_factor - 1.0f64.exp()).abs() < 1e-12);
        assert!(rep.margin >= 0.0 && !rep.violated);
        assert!((rep.constant - 9.0).abs() < 1e-12);
    }

    #[test]
    fn equality_processes_pass_verification() {
        let procs = sim(GronwallPreset::Martingale { a_rate: 1.0, eta: 0.5, beta: 1.0 }, 50).generate().unwrap();
        for p in &procs {
            p.verify(PRECONDITION_TOL).unwrap();
            assert!(p.xi.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn corrupted_row_is_rejected() {
        let procs = sim(GronwallPreset::Corrupted { a_rate: 1.0, eta: 0.5, beta: 1.0 }, 5).generate().unwrap();
        assert!(matches!(gronwall_check(&procs, 0.5, 0.75), Err(Error::Precondition(_))));
        // a single row breaking the inequality is also caught
        let mut p = sim(GronwallPreset::Martingale { a_rate: 1.0, eta: 0.5, beta: 1.0 }, 1).generate().unwrap().remove(0);
        p.xi[40] += 0.1;
        assert!(p.verify(PRECONDITION_TOL).is_err());
    }

    #[test]
    fn constant_blows_up_as_nu_approaches_r() {
        let procs = sim(GronwallPreset::Martingale { a_rate: 0.5, eta: 0.1, beta: 0.5 }, 200).generate().unwrap();
        let mut prev = 0.0;
        for nu in [0.3, 0.5, 0.7, 0.74] {
            let rep = gronwall_check(&procs, nu, 0.75).unwrap();
            assert!(rep.margin > prev);
            prev = rep.margin;
        }
    }

    #[test]
    fn parameter_ranges() {
        let procs = sim(GronwallPreset::Deterministic { a_rate: 1.0 }, 2).generate().unwrap();
        assert!(gronwall_check(&procs, 0.8, 0.75).is_err());
        assert!(gronwall_check(&procs, 0.5, 1.0).is_err());
    }
}
