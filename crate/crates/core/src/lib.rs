//! Kirkwood–Rihaczek phase-space distributions of one-dimensional wave fields,
//! their conversion to Wigner, P and Q distributions, and a simulator for
//! dual-local-oscillator balanced heterodyne measurement of the KR function.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(a > b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
mod fourier;
pub mod heterodyne;
pub mod io;
pub mod metrics;
pub mod phasespace;
pub mod scalar;
pub mod wavefield;

pub use error::{Error, Result};
pub use scalar::Real;
pub use wavefield::{
    apply_obstruction, make_gaussian, make_gaussian_with_wavenumber, to_momentum, to_position,
    Axis, Domain, Grid1D, SampledField, UnitMode,
};

pub use heterodyne::{DemodResult, DspSpec, LOConfig, ScanConfig};
pub use phasespace::{Kind, PhaseSpaceGrid, RegSpec};

pub type Field = SampledField<f64>;
pub type Field32 = SampledField<f32>;
pub type Grid = Grid1D<f64>;
pub type PsGrid = PhaseSpaceGrid<f64>;
pub type PsGrid32 = PhaseSpaceGrid<f32>;
