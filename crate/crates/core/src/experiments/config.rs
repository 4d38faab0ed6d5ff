//! JSON run configuration.
//!
//! Every struct rejects unknown keys. Values can be overridden from the
//! command line with dotted paths (`stepper.dt=1e-3`), applied to the raw
//! JSON before it is deserialized.

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commutator::{MollifierProfile, TestClass, DEFAULT_DELTAS};
use crate::diagnostics::gronwall::{GronwallPreset, GronwallSimulation};
use crate::dynamics::{Dynamics, ModelParams, NoiseForm, SigmaProfile};
use crate::error::{Error, Result};
use crate::grid::{FourierField, SpectralGrid};
use crate::integrators::{Scheme, StepperConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub stepper: StepperSpec,
    pub initial: InitialPreset,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutators: Option<CommutatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gronwall: Option<GronwallSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub epsilon: f64,
    pub sigma: SigmaSpec,
    pub n: usize,
    #[serde(default = "default_noise_form")]
    pub noise_form: NoiseForm,
    #[serde(default = "default_dynamics")]
    pub dynamics: Dynamics,
}

fn default_noise_form() -> NoiseForm {
    NoiseForm::Basic
}

fn default_dynamics() -> Dynamics {
    Dynamics::CamassaHolm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    Coeffs { coeffs: Vec<f64> },
    Constant { value: f64 },
    /// `mean + amp·√2 sin(2πx)`
    MeanPlusSine { mean: f64, amp: f64 },
}

impl SigmaSpec {
    pub fn profile(&self) -> Result<SigmaProfile> {
        match self {
            SigmaSpec::Coeffs { coeffs } => SigmaProfile::from_coeffs(coeffs.clone()),
            SigmaSpec::Constant { value } => Ok(SigmaProfile::constant(*value)),
            SigmaSpec::MeanPlusSine { mean, amp } => Ok(SigmaProfile::mean_plus_sine(*mean, *amp)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub viscous_exponential: bool,
    #[serde(default = "default_hm")]
    pub hm_order: usize,
}

fn default_hm() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPreset {
    Zero,
    /// `amp · cos(2πjx)`
    SingleMode { j: usize, amp: f64 },
    /// `amp · exp(−((x − ½)/width)²)`
    GaussianBump { width: f64, amp: f64 },
    /// Gaussian coefficients scaled by `amp · j^{−decay_exponent}`, zero mean.
    Random {
        decay_exponent: f64,
        seed: u64,
        #[serde(default = "default_amp")]
        amp: f64,
    },
}

fn default_amp() -> f64 {
    1.0
}

impl InitialPreset {
    pub fn build(&self, grid: &Arc<SpectralGrid>) -> Result<FourierField> {
        let f = match self {
            InitialPreset::Zero => FourierField::zeros(grid),
            InitialPreset::SingleMode { j, amp } => {
                if *j > grid.n_modes() {
                    return Err(Error::Config(format!("initial mode {j} exceeds truncation {}", grid.n_modes())));
                }
                FourierField::cos_mode(grid, *j, *amp)
            }
            InitialPreset::GaussianBump { width, amp } => {
                if !(*width > 0.0) {
                    return Err(Error::Config("gaussian_bump width must be positive".into()));
                }
                // periodized on a fine grid, then truncated
                let fine = SpectralGrid::with_phys(grid.n_modes(), 8 * grid.n_phys())?;
                let g = |x: f64| (-1..=1).map(|k| (-((x - 0.5 + k as f64) / width).powi(2)).exp()).sum::<f64>() * amp;
                FourierField::from_fn(&fine, g).resample(grid)
            }
            InitialPreset::Random { decay_exponent, seed, amp } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut f = FourierField::zeros(grid);
                for (i, c) in f.coeffs_mut().iter_mut().enumerate().skip(1) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let j = ((i + 1) / 2) as f64;
                    *c = amp * z * j.powf(-decay_exponent);
                }
                f
            }
        };
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    pub master_seed: u64,
    /// Moment orders `p` for `𝔼 sup ‖u‖^p_{H¹}`.
    #[serde(default = "default_moments")]
    pub moments: Vec<f64>,
    /// Radii `R` for the early-stopping probability `P(η_R < T)`.
    #[serde(default)]
    pub stop_radii: Vec<f64>,
}

fn default_moments() -> Vec<f64> {
    vec![2.0, 4.0, 6.0, 8.0]
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { n_paths: 1, master_seed: 0, moments: default_moments(), stop_radii: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub record_every: usize,
    /// Write one snapshot per record time (single runs only).
    #[serde(default = "default_true")]
    pub snapshots: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("runs/default"), record_every: 10, snapshots: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeAxis {
    N,
    Dt,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub axis: ConvergeAxis,
    /// Truncation levels (`n`), exponents `k` with `dt = T·2^{−k}` (`dt`),
    /// or mollifier widths (`delta`).
    pub levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_class: Option<TestClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSpec {
    pub amplitudes: Vec<f64>,
    /// Frequency of the `sin` perturbation added to the initial data.
    #[serde(default = "default_perturb_mode")]
    pub perturb_mode: usize,
}

fn default_perturb_mode() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSpec {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
    #[serde(default = "default_classes")]
    pub classes: Vec<TestClass>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_profile")]
    pub profile: MollifierProfile,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}
fn default_j_max() -> usize {
    320
}
fn default_classes() -> Vec<TestClass> {
    TestClass::ALL.to_vec()
}
fn default_seed() -> u64 {
    2024
}
fn default_profile() -> MollifierProfile {
    MollifierProfile::Bump
}
fn default_samples() -> usize {
    4
}

impl Default for CommutatorSpec {
    fn default() -> Self {
        CommutatorSpec {
            deltas: default_deltas(),
            j_max: default_j_max(),
            classes: default_classes(),
            seed: default_seed(),
            profile: default_profile(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallSpec {
    pub simulation: GronwallSimulation,
    pub nu: f64,
    pub r: f64,
}

impl Default for GronwallSpec {
    fn default() -> Self {
        GronwallSpec {
            simulation: GronwallSimulation {
                preset: GronwallPreset::Martingale { a_rate: 1.0, eta: 0.5, beta: 1.0 },
                samples: 10_000,
                steps: 200,
                t_end: 1.0,
                xi0: 1.0,
                seed: 1,
            },
            nu: 0.5,
            r: 0.75,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_with_overrides(&text, overrides)
    }

    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut raw: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        for o in overrides {
            apply_override(&mut raw, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(raw).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let value = serde_json::to_value(self)?;
        check_finite(&value, "")?;
        if self.ensemble.n_paths == 0 {
            return Err(Error::Config("ensemble.n_paths must be ≥ 1".into()));
        }
        if self.outputs.record_every == 0 {
            return Err(Error::Config("outputs.record_every must be ≥ 1".into()));
        }
        self.params()?;
        self.stepper()
            .steps()
            .map_err(|e| Error::Config(format!("stepper: {e}")))?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let sigma = self.model.sigma.profile().map_err(|e| Error::Config(format!("model.sigma: {e}")))?;
        ModelParams::with_dynamics(self.model.epsilon, sigma, self.model.n, self.model.noise_form, self.model.dynamics)
            .map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            scheme: self.stepper.scheme,
            dt: self.stepper.dt,
            t_end: self.stepper.t_end,
            record_every: self.outputs.record_every,
            viscous_exponential: self.stepper.viscous_exponential,
            store_states: true,
            hm_order: self.stepper.hm_order,
        }
    }

    pub fn initial_state(&self, p: &ModelParams) -> Result<FourierField> {
        self.initial.build(p.grid())
    }
}

fn check_finite(v: &Value, path: &str) -> Result<()> {
    match v {
        // serde_json writes NaN and ±∞ as null
        Value::Null => Err(Error::Config(format!("{path}: non-finite value"))),
        Value::Array(a) => a.iter().enumerate().try_for_each(|(i, x)| check_finite(x, &format!("{path}[{i}]"))),
        Value::Object(m) => m.iter().try_for_each(|(k, x)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            check_finite(x, &p)
        }),
        _ => Ok(()),
    }
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise. Intermediate objects are created on demand.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` must have the form key.path=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override path `{path}` has an empty segment")));
    }
    let mut cur = root;
    for (i, k) in keys.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{path}`: `{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*k).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*k).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("non-empty key list")
}

/// Unit-amplitude `sin` perturbation of frequency `j`.
pub fn perturbation(grid: &Arc<SpectralGrid>, j: usize) -> FourierField {
    FourierField::sin_mode(grid, j, SQRT_2)
}
