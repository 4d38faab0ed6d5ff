//! Ensemble energy balance and moment curves.

use serde::{Deserialize, Serialize};

use super::mc::MCEstimate;
use crate::error::{Error, Result};
use crate::integrators::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheckpoint {
    pub t: f64,
    /// `‖u(t)‖² − ‖u(0)‖² + 2ε∫‖∂u‖² + ∫∫σσ'u∂u + ∫∫(¼(σ²)'' − σ'²)(∂u)²`
    pub residual: MCEstimate,
    /// Same balance with `ε` in place of `2ε` and the last term subtracted.
    /// Kept for comparison; it is not zero in expectation when σ varies.
    pub residual_alt: MCEstimate,
    /// Mean of `‖u(t)‖²_{H¹}`, the scale for tolerances.
    pub h1_sq: MCEstimate,
}

/// Checks that every trajectory recorded the same times and finished.
pub fn check_ensemble(ensemble: &[Trajectory]) -> Result<()> {
    let Some(first) = ensemble.first() else {
        return Err(Error::InsufficientData("empty ensemble".into()));
    };
    let times = first.ledger.times();
    for (i, tr) in ensemble.iter().enumerate() {
        if tr.blowup_time.is_some() {
            return Err(Error::InconsistentEnsemble(format!("trajectory {i} aborted at t = {:?}", tr.blowup_time)));
        }
        if tr.ledger.times() != times {
            return Err(Error::InconsistentEnsemble(format!("trajectory {i} has different checkpoints")));
        }
    }
    Ok(())
}

/// Monte Carlo estimate of the energy balance at every checkpoint, measured
/// from `t = 0`.
pub fn energy_residual(ensemble: &[Trajectory]) -> Result<Vec<EnergyCheckpoint>> {
    check_ensemble(ensemble)?;
    let rows = ensemble[0].ledger.rows.len();
    (0..rows)
        .map(|k| {
            let mut res = Vec::with_capacity(ensemble.len());
            let mut alt = Vec::with_capacity(ensemble.len());
            let mut h1 = Vec::with_capacity(ensemble.len());
            for tr in ensemble {
                let r0 = &tr.ledger.rows[0];
                let r = &tr.ledger.rows[k];
                let dh = r.h1_sq - r0.h1_sq;
                res.push(dh + 2.0 * r.diss_accum + r.sigma_term_a + r.sigma_term_b);
                alt.push(dh + r.diss_accum + r.sigma_term_a - r.sigma_term_b);
                h1.push(r.h1_sq);
            }
            Ok(EnergyCheckpoint {
                t: ensemble[0].ledger.rows[k].t,
                residual: MCEstimate::from_samples(&res)?,
                residual_alt: MCEstimate::from_samples(&alt)?,
                h1_sq: MCEstimate::from_samples(&h1)?,
            })
        })
        .collect()
}

/// `𝔼 sup_t ‖u(t)‖^p_{H¹}` over the recorded times.
pub fn moment_curve(ensemble: &[Trajectory], p: f64) -> Result<MCEstimate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order must be ≥ 1, got {p}")));
    }
    let sups: Vec<f64> = ensemble
        .iter()
        .map(|tr| tr.ledger.rows.iter().map(|r| r.h1_sq.powf(0.5 * p)).fold(0.0, f64::max))
        .collect();
    MCEstimate::from_samples(&sups)
}
