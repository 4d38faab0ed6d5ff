//! Per-trajectory time series of norms and accumulated balance terms.

use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::grid::FourierField;

/// One ledger row. Accumulated quantities are trapezoidal integrals over the
/// record times `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    /// `‖u‖²_{H¹}`
    pub h1_sq: f64,
    /// `‖u‖²_{Hᵐ}` for the ledger's configured `m`
    pub hm_sq: f64,
    /// `ε ∫ ‖∂u‖²_{H¹} ds`
    pub diss_accum: f64,
    /// `∫∫ σ ∂σ u ∂u dx ds`
    pub sigma_term_a: f64,
    /// `∫∫ (¼ ∂²σ² − (∂σ)²) (∂u)² dx ds`
    pub sigma_term_b: f64,
    /// grid minimum of `∂u`
    pub min_slope: f64,
    /// `∫ ‖u‖²_{W^{1,∞}} ds`
    pub w1inf_sq_accum: f64,
}

pub const LEDGER_COLUMNS: [&str; 8] = [
    "t",
    "h1_sq",
    "hm_sq",
    "diss_accum",
    "sigma_term_a",
    "sigma_term_b",
    "min_slope",
    "w1inf_sq_accum",
];

impl LedgerRow {
    pub fn values(&self) -> [f64; 8] {
        [
            self.t,
            self.h1_sq,
            self.hm_sq,
            self.diss_accum,
            self.sigma_term_a,
            self.sigma_term_b,
            self.min_slope,
            self.w1inf_sq_accum,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub m: usize,
    /// Physical grid size used for the W^{1,∞} and min-slope proxies.
    pub n_phys: usize,
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    /// `‖u(T)‖² − ‖u(0)‖² + 2 diss + a + b` at every row; zero in expectation.
    pub fn balance_residuals(&self) -> Vec<f64> {
        let Some(first) = self.rows.first() else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| r.h1_sq - first.h1_sq + 2.0 * r.diss_accum + r.sigma_term_a + r.sigma_term_b)
            .collect()
    }
}

/// Instantaneous integrands evaluated on one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrands {
    pub h1_sq: f64,
    pub hm_sq: f64,
    pub diss: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub min_slope: f64,
    pub w1inf_sq: f64,
}

/// Evaluates the ledger integrands by physical-grid quadrature.
pub fn integrands(u: &FourierField, p: &ModelParams, m: usize) -> Integrands {
    let q = u.derivative();
    let uv = u.to_physical();
    let qv = q.to_physical();
    let n = uv.len() as f64;
    let mut sigma_a = 0.0;
    let mut sigma_b = 0.0;
    if !p.sigma.is_zero() {
        let s = p.sigma_samples();
        for k in 0..uv.len() {
            sigma_a += s.sigma[k] * s.d1[k] * uv[k] * qv[k];
            // ¼(σ²)'' − (σ')² = ½(σσ'' − σ'²)
            sigma_b += 0.5 * (s.sigma[k] * s.d2[k] - s.d1[k] * s.d1[k]) * qv[k] * qv[k];
        }
        sigma_a /= n;
        sigma_b /= n;
    }
    let sup_u = uv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sup_q = qv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_slope = qv.iter().cloned().fold(f64::INFINITY, f64::min);
    Integrands {
        h1_sq: u.sobolev_norm_sq(1),
        hm_sq: u.sobolev_norm_sq(m),
        diss: p.epsilon * q.sobolev_norm_sq(1),
        sigma_a,
        sigma_b,
        min_slope,
        w1inf_sq: (sup_u + sup_q).powi(2),
    }
}

/// Incrementally builds a ledger with trapezoidal accumulation.
#[derive(Debug)]
pub struct LedgerBuilder {
    ledger: EnergyLedger,
    prev: Option<(f64, Integrands)>,
}

impl LedgerBuilder {
    pub fn new(m: usize, n_phys: usize) -> Self {
        LedgerBuilder { ledger: EnergyLedger { m, n_phys, rows: Vec::new() }, prev: None }
    }

    pub fn push(&mut self, t: f64, u: &FourierField, p: &ModelParams) {
        let cur = integrands(u, p, self.ledger.m);
        let row = match (&self.prev, self.ledger.rows.last()) {
            (Some((t0, prev)), Some(last)) => {
                let h = 0.5 * (t - t0);
                LedgerRow {
                    t,
                    h1_sq: cur.h1_sq,
                    hm_sq: cur.hm_sq,
                    diss_accum: last.diss_accum + h * (prev.diss + cur.diss),
                    sigma_term_a: last.sigma_term_a + h * (prev.sigma_a + cur.sigma_a),
                    sigma_term_b: last.sigma_term_b + h * (prev.sigma_b + cur.sigma_b),
                    min_slope: cur.min_slope,
                    w1inf_sq_accum: last.w1inf_sq_accum + h * (prev.w1inf_sq + cur.w1inf_sq),
                }
            }
            _ => LedgerRow {
                t,
                h1_sq: cur.h1_sq,
                hm_sq: cur.hm_sq,
                diss_accum: 0.0,
                sigma_term_a: 0.0,
                sigma_term_b: 0.0,
                min_slope: cur.min_slope,
                w1inf_sq_accum: 0.0,
            },
        };
        self.ledger.rows.push(row);
        self.prev = Some((t, cur));
    }

    pub fn finish(self) -> EnergyLedger {
        self.ledger
    }
}
