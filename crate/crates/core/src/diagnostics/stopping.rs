use crate::error::{Error, Result};
use crate::integrators::Trajectory;

/// First recorded time at which `∫₀ᵗ ‖u‖²_{W^{1,∞}} ds` exceeds `r`;
/// `None` when the budget holds up to the final time.
pub fn stopping_time_eta(tr: &Trajectory, r: f64) -> Result<Option<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("stopping level must be positive, got {r}")));
    }
    Ok(tr.ledger.rows.iter().find(|row| row.w1inf_sq_accum > r).map(|row| row.t))
}

/// Minimum of `∂u` on the physical grid at every record time.
pub fn wave_breaking_indicator(tr: &Trajectory) -> Vec<(f64, f64)> {
    tr.ledger.rows.iter().map(|r| (r.t, r.min_slope)).collect()
}

/// Fraction of trajectories with `η_R < T`, and its binomial standard error.
pub fn early_stop_probability(ensemble: &[Trajectory], r: f64) -> Result<(f64, f64)> {
    if ensemble.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let mut hits = 0usize;
    for tr in ensemble {
        if stopping_time_eta(tr, r)?.is_some() {
            hits += 1;
        }
    }
    let n = ensemble.len() as f64;
    let p = hits as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}
