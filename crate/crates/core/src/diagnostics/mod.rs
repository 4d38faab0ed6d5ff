//! Audit quantities computed from trajectories and ensembles.

pub mod energy;
pub mod gronwall;
pub mod holder;
pub mod ledger;
pub mod mc;
pub mod stopping;

pub use energy::{energy_residual, moment_curve, EnergyCheckpoint};
pub use gronwall::{gronwall_check, GronwallPreset, GronwallProcess, GronwallReport, GronwallSimulation};
pub use holder::{holder_structure, HolderFit};
pub use ledger::{EnergyLedger, LedgerBuilder, LedgerRow, LEDGER_COLUMNS};
pub use mc::{compensated_sum, CompensatedSum, MCEstimate};
pub use stopping::{early_stop_probability, stopping_time_eta, wave_breaking_indicator};
