//! Phase-space distributions on rectangular x×p grids.
//!
//! The KR function is computed directly from a field; Wigner, P and Q follow
//! from its characteristic function. For characteristic kinds the two axes
//! hold the characteristic-plane coordinates `x′` and `p′`.

mod characteristic;
pub mod closed_form;
mod fit;
mod kr;
mod wigner;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};
use crate::wavefield::{Axis, Grid1D, UnitMode};

pub use characteristic::{
    characteristic_from_kr, damped_characteristic, p_from_characteristic, q_from_characteristic,
    sharpened_characteristic, wigner_characteristic, RegSpec, RegularizedP,
};
pub use fit::{fit_gaussian, fit_gaussian_width, GaussianFitResult};
pub use kr::{kr_conjugate, kr_conjugate_at, kr_from_conjugate, marginals, Marginals};
pub use wigner::{direct_wigner, wigner_from_kr};

/// What a [`PhaseSpaceGrid`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Complex conjugate of the KR distribution, `K*(x, p)`.
    KRconj,
    KR,
    /// Heterodyne measurement arranged on the scan grid; proportional to `K*`.
    KrEstimate,
    Wigner,
    /// Regularized Glauber–Sudarshan P.
    P,
    Q,
    /// Characteristic function of the KR distribution, `M_KR(x′, p′)`.
    CharKR,
    /// Characteristic function of the Wigner distribution, `M_W(x′, p′)`.
    CharW,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::KRconj,
        Kind::KR,
        Kind::KrEstimate,
        Kind::Wigner,
        Kind::P,
        Kind::Q,
        Kind::CharKR,
        Kind::CharW,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::KRconj => "kr_conj",
            Kind::KR => "kr",
            Kind::KrEstimate => "kr_estimate",
            Kind::Wigner => "wigner",
            Kind::P => "p",
            Kind::Q => "q",
            Kind::CharKR => "char_kr",
            Kind::CharW => "char_w",
        }
    }

    /// Stable numeric tag used by the binary format.
    pub fn tag(self) -> u8 {
        match self {
            Kind::KRconj => 1,
            Kind::KR => 2,
            Kind::KrEstimate => 3,
            Kind::Wigner => 4,
            Kind::P => 5,
            Kind::Q => 6,
            Kind::CharKR => 7,
            Kind::CharW => 8,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Real-valued distributions store a zero imaginary part.
    pub fn is_real(self) -> bool {
        matches!(self, Kind::Wigner | Kind::P | Kind::Q)
    }

    pub fn is_characteristic(self) -> bool {
        matches!(self, Kind::CharKR | Kind::CharW)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown grid kind `{s}`"))
    }
}

/// Complex values on an `n_x × n_p` grid; row `i` is `x_i`, column `j` is `p_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid<T: Real> {
    kind: Kind,
    x: Axis<T>,
    p: Axis<T>,
    unit_mode: UnitMode,
    wavenumber: T,
    values: Array2<Complex<T>>,
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn new(
        kind: Kind,
        x: Axis<T>,
        p: Axis<T>,
        unit_mode: UnitMode,
        wavenumber: T,
        values: Array2<Complex<T>>,
    ) -> Result<Self> {
        if values.dim() != (x.len, p.len) {
            return Err(Error::InvalidGrid(format!(
                "values have shape {:?}, axes need ({}, {})",
                values.dim(),
                x.len,
                p.len
            )));
        }
        if !(x.spacing > T::zero()) || !(p.spacing > T::zero()) {
            return Err(Error::InvalidGrid("axis spacings must be positive".into()));
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(Self {
            kind,
            x,
            p,
            unit_mode,
            wavenumber,
            values,
        })
    }

    /// Grid on a field's x axis and its conjugate p axis.
    pub(crate) fn on_field_grid(
        kind: Kind,
        grid: &Grid1D<T>,
        wavenumber: T,
        values: Array2<Complex<T>>,
    ) -> Self {
        Self::new(
            kind,
            grid.axis(),
            grid.conjugate().axis(),
            grid.unit_mode(),
            wavenumber,
            values,
        )
        .expect("shape follows the grid")
    }

    pub(crate) fn with_values(&self, kind: Kind, values: Array2<Complex<T>>) -> Self {
        Self::new(kind, self.x, self.p, self.unit_mode, self.wavenumber, values)
            .expect("shape preserved")
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn x_axis(&self) -> &Axis<T> {
        &self.x
    }

    pub fn p_axis(&self) -> &Axis<T> {
        &self.p
    }

    pub fn unit_mode(&self) -> UnitMode {
        self.unit_mode
    }

    pub fn wavenumber(&self) -> T {
        self.wavenumber
    }

    pub fn values(&self) -> &Array2<Complex<T>> {
        &self.values
    }

    pub fn into_values(self) -> Array2<Complex<T>> {
        self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn real_part(&self) -> Array2<T> {
        self.values.mapv(|v| v.re)
    }

    /// Largest magnitude on the grid.
    pub fn peak(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// `Σ values · Δx · Δp`
    pub fn integral(&self) -> Complex<T> {
        let sum = self
            .values
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v);
        sum * (self.x.spacing * self.p.spacing)
    }

    /// Values along `p` at the x node nearest to `x`.
    pub fn slice_at_x(&self, x: T) -> Option<Vec<Complex<T>>> {
        let i = self.x.nearest(x)?;
        Some(self.values.row(i).to_vec())
    }

    /// Values along `x` at the p node nearest to `p`.
    pub fn slice_at_p(&self, p: T) -> Option<Vec<Complex<T>>> {
        let j = self.p.nearest(p)?;
        Some(self.values.column(j).to_vec())
    }

    /// Position grid, if the x axis has the centered field layout.
    pub fn x_grid(&self) -> Result<Grid1D<T>> {
        Grid1D::from_axis(&self.x, self.unit_mode)
    }

    pub fn p_grid(&self) -> Result<Grid1D<T>> {
        Grid1D::from_axis(&self.p, self.unit_mode)
    }

    /// Position grid after checking that the p axis is its reciprocal.
    pub(crate) fn conjugate_field_grid(&self) -> Result<Grid1D<T>> {
        let gx = self.x_grid()?;
        let gp = self.p_grid()?;
        if !gx.is_conjugate_of(&gp) {
            return Err(Error::InvalidGrid(format!(
                "p axis (spacing {}) is not conjugate to x axis (spacing {}, {} points)",
                self.p.spacing,
                self.x.spacing,
                self.x.len
            )));
        }
        Ok(gx)
    }

    pub(crate) fn require_kind(&self, allowed: &[Kind], expected: &'static str) -> Result<()> {
        if allowed.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                expected,
                found: self.kind.to_string(),
            })
        }
    }

    /// Largest `|Im|` relative to the peak magnitude.
    pub fn relative_imaginary(&self) -> T {
        let peak = self.peak();
        if peak == T::zero() {
            return T::zero();
        }
        self.values.iter().map(|v| v.im.abs()).fold(T::zero(), T::max) / peak
    }
}

/// Zeroes imaginary parts after checking they are below `threshold · peak`.
pub(crate) fn take_real<T: Real>(
    values: &mut Array2<Complex<T>>,
    threshold: T,
    what: &'static str,
) -> Result<T> {
    let peak = values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let worst = values.iter().map(|v| v.im.abs()).fold(T::zero(), T::max);
    let residual = if peak > T::zero() { worst / peak } else { T::zero() };
    if residual > threshold {
        return Err(Error::ImaginaryResidual {
            what,
            residual: to_f64(residual),
            threshold: to_f64(threshold),
        });
    }
    values.mapv_inplace(|v| Complex::new(v.re, T::zero()));
    Ok(residual)
}
