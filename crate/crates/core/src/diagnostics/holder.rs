use serde::{Deserialize, Serialize};

use super::mc::compensated_sum;
use crate::commutator::loglog_slope;
use crate::error::{Error, Result};
use crate::integrators::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub lags: Vec<f64>,
    /// `𝔼‖u(t+h) − u(t)‖²_{L²}` averaged over `t`, per lag
    pub increments: Vec<f64>,
    pub exponent: f64,
    /// RMS deviation of the log-log fit
    pub fit_residual: f64,
}

/// Temporal L² structure function of an ensemble and its log-log slope.
///
/// Lags must be multiples of the record spacing and lie in
/// `[10·dt, T/10]`.
pub fn holder_structure(ensemble: &[Trajectory], lags: &[f64]) -> Result<HolderFit> {
    if lags.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 lags, got {}", lags.len())));
    }
    let first = ensemble.first().ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
    if first.states.len() < 2 || first.states.len() != first.times.len() {
        return Err(Error::InsufficientData("trajectories must store their states".into()));
    }
    let spacing = first.times[1] - first.times[0];
    let t_end = *first.times.last().expect("nonempty");
    let mut strides = Vec::with_capacity(lags.len());
    for &h in lags {
        let k = (h / spacing).round();
        if k < 1.0 || (k * spacing - h).abs() > 1e-9 * h {
            return Err(Error::InvalidArgument(format!("lag {h} is not a multiple of the record spacing {spacing}")));
        }
        if h < 10.0 * first.dt * (1.0 - 1e-9) || h > 0.1 * t_end * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!("lag {h} outside [10 dt, T/10]")));
        }
        strides.push(k as usize);
    }
    let mut increments = Vec::with_capacity(lags.len());
    for &k in &strides {
        let mut per_path = Vec::with_capacity(ensemble.len());
        for tr in ensemble {
            if tr.states.len() != first.states.len() {
                return Err(Error::InconsistentEnsemble("trajectories stored different numbers of states".into()));
            }
            let d = (0..tr.states.len() - k).map(|i| tr.states[i + k].sub(&tr.states[i]).map(|f| f.l2_norm().powi(2)));
            let d = d.collect::<Result<Vec<f64>>>()?;
            per_path.push(compensated_sum(d.iter().copied()) / d.len() as f64);
        }
        increments.push(compensated_sum(per_path) / ensemble.len() as f64);
    }
    if increments.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InsufficientData("zero temporal increments; exponent undefined".into()));
    }
    let exponent = loglog_slope(lags, &increments);
    let lx: Vec<f64> = lags.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = increments.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let fit_residual =
        (lx.iter().zip(&ly).map(|(x, y)| (y - my - exponent * (x - mx)).powi(2)).sum::<f64>() / lx.len() as f64).sqrt();
    Ok(HolderFit { lags: lags.to_vec(), increments, exponent, fit_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ModelParams, NoiseForm, SigmaProfile};
    use crate::grid::FourierField;
    use crate::integrators::{integrate, Scheme, StepperConfig};
    use crate::noise::BrownianPath;

    fn run(amp: f64, sigma: SigmaProfile, scheme: Scheme, seed: u64) -> Trajectory {
        let p = ModelParams::new(0.01, sigma, 16, NoiseForm::Basic).unwrap();
        let u0 = FourierField::cos_mode(p.grid(), 1, amp);
        let cfg = StepperConfig::new(scheme, 5e-4, 0.5, 10);
        integrate(&u0, &p, &cfg, &BrownianPath::sample(seed, 0, 5e-4, 1000).unwrap()).unwrap()
    }

    const LAGS: [f64; 4] = [0.005, 0.01, 0.02, 0.04];

    #[test]
    fn smooth_deterministic_run_is_lipschitz_in_time() {
        let tr = run(0.3, SigmaProfile::zero(), Scheme::Rk4Deterministic, 0);
        let fit = holder_structure(&[tr], &LAGS).unwrap();
        assert!(fit.exponent >= 1.8, "{}", fit.exponent);
    }

    #[test]
    fn noisy_run_scales_like_brownian_motion() {
        let ens: Vec<Trajectory> =
            (0..8).map(|s| run(0.3, SigmaProfile::mean_plus_sine(0.5, 0.2), Scheme::SplitStratonovich, s)).collect();
        let fit = holder_structure(&ens, &LAGS).unwrap();
        assert!((0.85..=1.3).contains(&fit.exponent), "{}", fit.exponent);
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        let tr = run(0.0, SigmaProfile::zero(), Scheme::Rk4Deterministic, 0);
        assert!(matches!(holder_structure(&[tr.clone()], &LAGS), Err(Error::InsufficientData(_))));
        assert!(holder_structure(&[tr.clone()], &LAGS[..3]).is_err());
        assert!(holder_structure(&[tr.clone()], &[0.0025, 0.01, 0.02, 0.04]).is_err());
        assert!(holder_structure(&[tr.clone()], &[0.01, 0.02, 0.04, 0.1]).is_err());
        assert!(holder_structure(&[tr], &[0.005, 0.01, 0.0125, 0.04]).is_err());
    }
}
