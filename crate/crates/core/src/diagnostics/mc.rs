use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum with Neumaier compensation. The result depends only on the order of
/// the inputs, never on how a caller chose to group them.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!("Monte Carlo estimate needs at least 2 samples, got {n}")));
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let var = compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
        Ok(MCEstimate { mean, stderr: (var / n as f64).sqrt(), n_samples: n })
    }

    /// `|mean| ≤ k·stderr + allowance`
    pub fn consistent_with_zero(&self, k: f64, allowance: f64) -> bool {
        self.mean.abs() <= k * self.stderr + allowance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(MCEstimate::from_samples(&[1.0]).is_err());
        let z = MCEstimate::from_samples(&[0.0, 0.0]).unwrap();
        assert_eq!((z.mean, z.stderr), (0.0, 0.0));
    }

    #[test]
    fn compensation_recovers_cancelled_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
        assert_ne!(v.iter().sum::<f64>(), 2.0);
    }
}
