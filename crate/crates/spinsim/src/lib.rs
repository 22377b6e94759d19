//! Pulse-level simulator of a two-spin NMR quantum computer.
//!
//! The crate models the full experimental chain of a liquid-state NMR
//! realization of the Deutsch-Jozsa algorithm: dense density-matrix linear
//! algebra for small spin systems, a pulse-sequence language and compiler,
//! thermal-state preparation with temporal averaging, phenomenological
//! relaxation and RF-inhomogeneity noise, FID synthesis with spectral
//! readout, and linear-inversion quantum state tomography.
//!
//! All numerics are generic over the real scalar type through the [`Real`]
//! trait; `f64` is the working precision and `f32` is supported for the
//! core algebra. Concrete aliases for the common types live at the crate
//! root (`SpinSystem64`, `Density64`, ...).

pub mod config;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod linalg;
pub mod noise;
pub mod pulse;
pub mod readout;
pub mod spin;

pub use error::SpinSimError;
pub use experiment::{ExperimentConfig, InputMode, Verdict};
pub use pulse::{Oracle, PulseEvent, PulseProgram};
pub use spin::{Axis, DensityMatrix, OperatorMatrix, SpinSystem};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar type underlying all complex arithmetic in the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Default tolerance for structural invariant checks (hermiticity,
    /// unitarity, trace preservation).
    fn default_tol() -> Self;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-5
    }
}

pub type SpinSystem64 = spin::SpinSystem<f64>;
pub type Operator64 = spin::OperatorMatrix<f64>;
pub type Density64 = spin::DensityMatrix<f64>;
pub type Program64 = pulse::PulseProgram<f64>;

pub type SpinSystem32 = spin::SpinSystem<f32>;
pub type Operator32 = spin::OperatorMatrix<f32>;
pub type Density32 = spin::DensityMatrix<f32>;
