//! Spectral Galerkin simulator and numerical audit toolkit for the viscous
//! stochastic Camassa–Holm equation with transport noise on the circle.
//!
//! Fields live in the real orthonormal basis
//! `{1, √2 cos(2πjx), √2 sin(2πjx)}`; the truncation level `n` is the largest
//! retained frequency `j`.

pub mod commutator;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod integrators;
pub mod noise;

pub use dynamics::{Dynamics, ModelParams, NoiseForm, SigmaProfile};
pub use error::{Error, Result};
pub use grid::{FourierField, SpectralGrid};
pub use integrators::{integrate, Scheme, StepperConfig, Trajectory};
pub use noise::BrownianPath;
