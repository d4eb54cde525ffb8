//! One-dimensional complex wave fields on uniform grids.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fourier::CenteredFft;
use crate::scalar::{cis, from_usize, lit, sqrt_two_pi, to_f64, Real};

/// HeNe wavelength in millimeters.
pub const HENE_WAVELENGTH_MM: f64 = 633e-6;

/// Smallest `extent / waist` accepted by [`make_gaussian`].
pub const MIN_EXTENT_PER_WAIST: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UnitMode {
    /// Lengths in units of a reference width, momenta in its inverse.
    Dimensionless,
    /// Lengths in millimeters, momenta in rad/mm.
    #[default]
    Millimeters,
}

impl UnitMode {
    /// Optical wavenumber used for wavefront curvature and lens geometry.
    pub fn default_wavenumber<T: Real>(self) -> T {
        match self {
            UnitMode::Dimensionless => T::one(),
            UnitMode::Millimeters => lit(2.0 * std::f64::consts::PI / HENE_WAVELENGTH_MM),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UnitMode::Dimensionless => "dimensionless",
            UnitMode::Millimeters => "millimeters",
        }
    }
}

impl fmt::Display for UnitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dimensionless" => Ok(UnitMode::Dimensionless),
            "millimeters" | "mm" => Ok(UnitMode::Millimeters),
            other => Err(format!("expected `dimensionless` or `millimeters`, got `{other}`")),
        }
    }
}

/// Uniformly spaced coordinate axis: `origin + j * spacing` for `j < len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis<T> {
    pub origin: T,
    pub spacing: T,
    pub len: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(origin: T, spacing: T, len: usize) -> Self {
        Self { origin, spacing, len }
    }

    /// `len` points from `-half_range` to `+half_range` inclusive.
    pub fn symmetric(half_range: T, len: usize) -> Self {
        if len <= 1 {
            return Self::new(T::zero(), T::one(), len.max(1));
        }
        let spacing = (half_range + half_range) / from_usize::<T>(len - 1);
        Self::new(-half_range, spacing, len)
    }

    pub fn coordinate(&self, j: usize) -> T {
        self.origin + from_usize::<T>(j) * self.spacing
    }

    pub fn coordinates(&self) -> Vec<T> {
        (0..self.len).map(|j| self.coordinate(j)).collect()
    }

    /// Index of the node closest to `value`, if within the axis.
    pub fn nearest(&self, value: T) -> Option<usize> {
        let idx = ((value - self.origin) / self.spacing).round();
        let idx = idx.to_i64()?;
        (idx >= 0 && (idx as usize) < self.len).then_some(idx as usize)
    }
}

/// Uniform grid spanning `[-extent/2, extent/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D<T> {
    n_points: usize,
    extent: T,
    unit_mode: UnitMode,
}

impl<T: Real> Grid1D<T> {
    pub fn new(n_points: usize, extent: T, unit_mode: UnitMode) -> Result<Self> {
        if n_points < 2 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 2, got {n_points}"
            )));
        }
        if !(extent > T::zero()) || !extent.is_finite() {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        Ok(Self {
            n_points,
            extent,
            unit_mode,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn unit_mode(&self) -> UnitMode {
        self.unit_mode
    }

    pub fn spacing(&self) -> T {
        self.extent / from_usize::<T>(self.n_points)
    }

    pub fn coordinate(&self, j: usize) -> T {
        self.axis().coordinate(j)
    }

    pub fn coordinates(&self) -> Vec<T> {
        self.axis().coordinates()
    }

    pub fn axis(&self) -> Axis<T> {
        Axis::new(-self.extent / lit(2.0), self.spacing(), self.n_points)
    }

    /// Reciprocal grid: spacing `2π/extent`, spanning `[-π/spacing, π/spacing)`.
    pub fn conjugate(&self) -> Self {
        let two_pi = T::PI() + T::PI();
        Self {
            n_points: self.n_points,
            extent: two_pi / self.spacing(),
            unit_mode: self.unit_mode,
        }
    }

    /// Reconstructs a grid from an axis, if the axis has the centered layout.
    pub fn from_axis(axis: &Axis<T>, unit_mode: UnitMode) -> Result<Self> {
        let grid = Self::new(axis.len, axis.spacing * from_usize::<T>(axis.len), unit_mode)?;
        let expected = -grid.extent / lit(2.0);
        let tol = axis.spacing * lit(1e-9);
        if (axis.origin - expected).abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "axis origin {} does not match a centered grid (expected {})",
                axis.origin, expected
            )));
        }
        Ok(grid)
    }

    /// Whether `other` is this grid's reciprocal (same point count, spacings multiply to 2π/n).
    pub fn is_conjugate_of(&self, other: &Self) -> bool {
        let c = self.conjugate();
        c.n_points == other.n_points
            && (c.extent - other.extent).abs() <= c.extent * lit(1e-10)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Position,
    Momentum,
}

/// Complex field amplitudes on a [`Grid1D`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField<T: Real> {
    grid: Grid1D<T>,
    amplitudes: Vec<Complex<T>>,
    wavenumber: T,
    domain: Domain,
}

impl<T: Real> SampledField<T> {
    /// Position-domain field with the unit mode's default wavenumber.
    pub fn new(grid: Grid1D<T>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let k = grid.unit_mode().default_wavenumber();
        Self::with_domain(grid, amplitudes, k, Domain::Position)
    }

    pub fn with_domain(
        grid: Grid1D<T>,
        amplitudes: Vec<Complex<T>>,
        wavenumber: T,
        domain: Domain,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "non-finite sample".into(),
            });
        }
        if !(wavenumber > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "wavenumber",
                reason: format!("must be positive, got {wavenumber}"),
            });
        }
        Ok(Self {
            grid,
            amplitudes,
            wavenumber,
            domain,
        })
    }

    /// Position-domain field rescaled so that `Σ|ψ|² Δx = 1`.
    pub fn normalized(grid: Grid1D<T>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        Self::new(grid, amplitudes)?.into_normalized()
    }

    pub fn into_normalized(mut self) -> Result<Self> {
        let norm = self.norm_squared();
        if !(norm > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "cannot normalize a zero field".into(),
            });
        }
        let scale = T::one() / norm.sqrt();
        for a in &mut self.amplitudes {
            *a = *a * scale;
        }
        Ok(self)
    }

    pub fn with_wavenumber(mut self, wavenumber: T) -> Self {
        self.wavenumber = wavenumber;
        self
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn wavenumber(&self) -> T {
        self.wavenumber
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// `Σ |ψ_j|² · spacing`
    pub fn norm_squared(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>() * self.grid.spacing()
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        for a in &mut out.amplitudes {
            *a = *a * factor;
        }
        out
    }

    pub fn intensity(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Band-limited (trigonometric) interpolation of the samples at `x`;
    /// zero outside the grid's span.
    pub fn value_at(&self, x: T) -> Complex<T> {
        self.values_at(&[x])[0]
    }

    /// [`value_at`](Self::value_at) for many points, sharing one spectrum.
    pub fn values_at(&self, xs: &[T]) -> Vec<Complex<T>> {
        let n = self.grid.n_points();
        let mut spectrum = self.amplitudes.clone();
        CenteredFft::new(n).forward(&mut spectrum);
        let axis = self.grid.axis();
        let dual = self.grid.conjugate().axis();
        let half = self.grid.extent() / lit(2.0);
        let zero = Complex::new(T::zero(), T::zero());
        let norm = T::one() / from_usize::<T>(n);
        xs.iter()
            .map(|&x| {
                if x < -half || x >= half {
                    return zero;
                }
                if let Some(j) = axis.nearest(x) {
                    if (axis.coordinate(j) - x).abs() <= axis.spacing * lit(1e-12) {
                        return self.amplitudes[j];
                    }
                }
                // c_k = Σ_j ψ_j e^{-i p_k x_j}, so ψ(x) = (1/n) Σ_k c_k e^{i p_k x}
                let u = x;
                let mut total = zero;
                for (k, &c) in spectrum.iter().enumerate() {
                    let p = dual.coordinate(k);
                    let weight = if k == 0 {
                        // Nyquist term split between ±π/Δx
                        Complex::new((p * u).cos(), T::zero())
                    } else {
                        cis(p * u)
                    };
                    total = total + c * weight;
                }
                total * norm
            })
            .collect()
    }

    /// Continuous unitary transform of the sampled field evaluated at any momentum:
    /// `(Δx/√(2π)) Σ_j ψ_j e^{-i p x_j}`.
    pub fn momentum_at(&self, p: T) -> Complex<T> {
        let axis = self.grid.axis();
        let zero = Complex::new(T::zero(), T::zero());
        let sum = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, &a)| a * cis(-p * axis.coordinate(j)))
            .fold(zero, |acc, v| acc + v);
        sum * (axis.spacing / sqrt_two_pi::<T>())
    }
}

/// Normalized Gaussian beam `exp(-(x-c)²/2σ² + i k (x-c)²/2R)` using the
/// grid's default wavenumber. Pass `T::infinity()` for a beam at its waist.
pub fn make_gaussian<T: Real>(
    grid: Grid1D<T>,
    waist: T,
    curvature_radius: T,
    center: T,
) -> Result<SampledField<T>> {
    let k = grid.unit_mode().default_wavenumber();
    make_gaussian_with_wavenumber(grid, waist, curvature_radius, center, k)
}

pub fn make_gaussian_with_wavenumber<T: Real>(
    grid: Grid1D<T>,
    waist: T,
    curvature_radius: T,
    center: T,
    wavenumber: T,
) -> Result<SampledField<T>> {
    if !(waist > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "waist",
            reason: format!("must be positive, got {waist}"),
        });
    }
    if curvature_radius == T::zero() || curvature_radius.is_nan() {
        return Err(Error::InvalidParameter {
            name: "curvature_radius",
            reason: "must be nonzero (use infinity for a flat wavefront)".into(),
        });
    }
    let required = waist * lit(MIN_EXTENT_PER_WAIST);
    if grid.extent() < required {
        return Err(Error::ExtentTooSmall {
            extent: to_f64(grid.extent()),
            waist: to_f64(waist),
            required: to_f64(required),
        });
    }
    let two = lit::<T>(2.0);
    let flat = curvature_radius.is_infinite();
    let amplitudes = grid
        .coordinates()
        .into_iter()
        .map(|x| {
            let u = x - center;
            let envelope = (-(u * u) / (two * waist * waist)).exp();
            if flat {
                Complex::new(envelope, T::zero())
            } else {
                cis(wavenumber * u * u / (two * curvature_radius)) * envelope
            }
        })
        .collect();
    SampledField::with_domain(grid, amplitudes, wavenumber, Domain::Position)?.into_normalized()
}

/// Zeroes the field for `|x| <= half_width` (an opaque wire centered on the
/// axis). The result is deliberately not renormalized.
pub fn apply_obstruction<T: Real>(field: &SampledField<T>, half_width: T) -> Result<SampledField<T>> {
    if field.domain() != Domain::Position {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "obstruction applies to position-domain fields".into(),
        });
    }
    let limit = field.grid().extent() / lit(2.0);
    if half_width < T::zero() || half_width >= limit {
        return Err(Error::InvalidParameter {
            name: "half_width",
            reason: format!("must lie in [0, {limit}), got {half_width}"),
        });
    }
    let mut out = field.clone();
    if half_width == T::zero() {
        return Ok(out);
    }
    let zero = Complex::new(T::zero(), T::zero());
    for (x, a) in field.grid().coordinates().into_iter().zip(out.amplitudes.iter_mut()) {
        if x.abs() <= half_width {
            *a = zero;
        }
    }
    Ok(out)
}

/// Unitary transform to momentum space, kernel `e^{-ipx}/√(2π)`.
pub fn to_momentum<T: Real>(field: &SampledField<T>) -> Result<SampledField<T>> {
    if field.domain() != Domain::Position {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "already in the momentum domain".into(),
        });
    }
    let mut data = field.amplitudes.clone();
    CenteredFft::new(data.len()).forward(&mut data);
    let scale = field.grid.spacing() / sqrt_two_pi::<T>();
    for v in &mut data {
        *v = *v * scale;
    }
    SampledField::with_domain(field.grid.conjugate(), data, field.wavenumber, Domain::Momentum)
}

/// Inverse of [`to_momentum`].
pub fn to_position<T: Real>(field: &SampledField<T>) -> Result<SampledField<T>> {
    if field.domain() != Domain::Momentum {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "already in the position domain".into(),
        });
    }
    let mut data = field.amplitudes.clone();
    CenteredFft::new(data.len()).inverse(&mut data);
    let scale = field.grid.spacing() / sqrt_two_pi::<T>();
    for v in &mut data {
        *v = *v * scale;
    }
    SampledField::with_domain(field.grid.conjugate(), data, field.wavenumber, Domain::Position)
}
