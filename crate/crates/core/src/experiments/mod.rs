//! Configuration, orchestration and persistence of runs.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod output;

pub use commands::{exit_code_for_error, Outcome, EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, EXIT_THRESHOLD};
pub use config::{apply_override, InitialPreset, RunConfig, SigmaSpec, SCHEMA_VERSION};
pub use ensemble::{par_map, run_ensemble, workers_from_env, EnsembleRun, WORKERS_ENV};
pub use output::{decode_snapshot, encode_snapshot, verify_manifest, RunManifest, RunStatus};
