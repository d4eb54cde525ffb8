//! Dual-local-oscillator balanced heterodyne measurement of the KR function.
//!
//! A focused LO (waist `a`) and a collimated LO (waist `A`) are mixed with the
//! signal. Moving mirror M1 by `d_x` shifts both LOs; moving lens L2 by `d_p`
//! tilts the signal by `k d_p / f`. The beat between the two overlap
//! amplitudes, `S = conj(o1) · o2`, tends to `c · K*(d_x, k d_p/f)` as
//! `a → 0` and `A → ∞`.

mod dsp;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics;
use crate::phasespace::{kr_conjugate_at, Kind, PhaseSpaceGrid};
use crate::scalar::{cis, lit, to_f64, Real};
use crate::wavefield::{Axis, Domain, Grid1D, SampledField, UnitMode};

pub use dsp::{timedomain_scan, BandPass, DemodResult, DspSpec};

/// Lab LO waists in millimeters.
pub const LAB_LO_WAIST_MM: f64 = 0.081;
pub const LAB_LO_COLLIMATED_MM: f64 = 2.6;
pub const LAB_FOCAL_LENGTH_MM: f64 = 60.0;
/// Signal waist the dimensionless defaults are scaled by.
pub const LAB_SIGNAL_WAIST_MM: f64 = 0.85;

/// Minimum samples per focused-LO waist for the overlap sums.
const OVERLAP_SAMPLES_PER_WAIST: f64 = 3.0;
/// Minimum samples per focused-LO waist for an LO field on its own grid.
const LO_FIELD_SAMPLES_PER_WAIST: f64 = 6.0;
const LO_FIELD_EXTENT_PER_WAIST: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LOConfig<T> {
    /// Focused LO1 waist.
    pub a: T,
    /// Collimated LO2 waist.
    pub big_a: T,
    /// LO2 amplitude relative to LO1.
    pub alpha: T,
    /// Lens focal length; 1 in dimensionless mode.
    pub focal_length: T,
    pub freq_signal: T,
    pub freq_lo1: T,
    pub freq_lo2: T,
    pub analyzer_bandwidth: T,
}

impl<T: Real> LOConfig<T> {
    /// The experiment's parameters, scaled so all tones are multiples of 5 Hz.
    pub fn lab(unit_mode: UnitMode) -> Self {
        let (scale, focal) = match unit_mode {
            UnitMode::Millimeters => (1.0, LAB_FOCAL_LENGTH_MM),
            UnitMode::Dimensionless => (1.0 / LAB_SIGNAL_WAIST_MM, 1.0),
        };
        Self {
            a: lit(LAB_LO_WAIST_MM * scale),
            big_a: lit(LAB_LO_COLLIMATED_MM * scale),
            alpha: T::one(),
            focal_length: lit(focal),
            freq_signal: lit(120_000.0),
            freq_lo1: lit(110_005.0),
            freq_lo2: lit(110_000.0),
            analyzer_bandwidth: lit(100.0),
        }
    }

    /// Focused and collimated waists scaled to a signal waist:
    /// `a = σ/ratio`, `A = σ·ratio`.
    pub fn with_ratio(mut self, waist: T, ratio: T) -> Self {
        self.a = waist / ratio;
        self.big_a = waist * ratio;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.a > T::zero()) {
            return bad("lo.a", format!("must be positive, got {}", self.a));
        }
        if !(self.big_a > self.a) {
            return bad("lo.A", format!("must exceed lo.a = {}, got {}", self.a, self.big_a));
        }
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return bad("lo.alpha", format!("must be nonnegative, got {}", self.alpha));
        }
        if !(self.focal_length > T::zero()) {
            return bad("lo.focal_length", format!("must be positive, got {}", self.focal_length));
        }
        let delta = (self.freq_lo1 - self.freq_lo2).abs();
        let carrier = (self.freq_signal - self.freq_lo2).abs();
        if !(delta > T::zero()) {
            return bad("lo.freq_lo1", "LO1 and LO2 frequencies must differ".into());
        }
        if !(delta * lit(10.0) < carrier) {
            return bad(
                "lo.freq_lo1",
                format!("LO difference {delta} must be well below the beat carrier {carrier}"),
            );
        }
        if !(self.analyzer_bandwidth > delta * lit(2.0)) {
            return bad(
                "lo.analyzer_bandwidth",
                format!("must well exceed the LO difference {delta}"),
            );
        }
        Ok(())
    }

    /// Signal beat frequencies `(Ω₁, Ω₂)` with each LO.
    pub fn beat_frequencies(&self) -> (T, T) {
        (self.freq_signal - self.freq_lo1, self.freq_signal - self.freq_lo2)
    }

    /// `∫ e₁(u) du` for the unit-norm focused LO, `(4πa²)^{1/4}`.
    fn lo1_area(&self) -> T {
        let four_pi = lit::<T>(4.0) * T::PI();
        (four_pi * self.a * self.a).sqrt().sqrt()
    }

    /// Peak of the unit-norm collimated LO, `(πA²)^{-1/4}`: the flat-LO limit
    /// of `o2` is this times `√(2π) ψ̃`.
    fn lo2_peak(&self) -> T {
        (T::PI() * self.big_a * self.big_a).sqrt().sqrt().recip()
    }

    /// Scale that turns `conj(o1)·o2` into an estimate of `K*` in the
    /// `a → 0, A → ∞` limit: `2π α (4πa²)^{1/4} (πA²)^{-1/4}` (α omitted when zero).
    pub fn calibration(&self) -> T {
        let alpha = if self.alpha > T::zero() { self.alpha } else { T::one() };
        (T::PI() + T::PI()) * alpha * self.lo1_area() * self.lo2_peak()
    }
}

/// Grid of mirror offsets `d_x` and signal tilts `p₀ = k d_p / f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig<T> {
    /// `x₀ = d_x` values.
    pub dx: Axis<T>,
    /// `p₀` values; the lens offset is `d_p = p₀ f / k`.
    pub p0: Axis<T>,
}

impl<T: Real> ScanConfig<T> {
    /// `d_x ∈ ±10 mm` (±4 waists dimensionless) and `p₀ ∈ ±4/waist`.
    pub fn lab(unit_mode: UnitMode, waist: T, nx: usize, np: usize) -> Self {
        let dx_max = match unit_mode {
            UnitMode::Millimeters => lit(10.0),
            UnitMode::Dimensionless => waist * lit(4.0),
        };
        Self {
            dx: Axis::symmetric(dx_max, nx),
            p0: Axis::symmetric(lit::<T>(4.0) / waist, np),
        }
    }

    pub fn symmetric(dx_max: T, nx: usize, p0_max: T, np: usize) -> Self {
        Self {
            dx: Axis::symmetric(dx_max, nx),
            p0: Axis::symmetric(p0_max, np),
        }
    }

    /// Lens offsets corresponding to the `p₀` axis.
    pub fn dp_values(&self, wavenumber: T, focal_length: T) -> Vec<T> {
        self.p0
            .coordinates()
            .into_iter()
            .map(|p| p * focal_length / wavenumber)
            .collect()
    }
}

/// Unit-norm focused LO, `(πa²)^{-1/4} e^{−u²/2a²}`.
/// Overlap arrays with the two local oscillators over a scan.
type OverlapPair<T> = (Array2<Complex<T>>, Array2<Complex<T>>);

fn lo1_at<T: Real>(cfg: &LOConfig<T>, u: T) -> T {
    let norm = (T::PI() * cfg.a * cfg.a).sqrt().sqrt().recip();
    norm * (-(u * u) / (lit::<T>(2.0) * cfg.a * cfg.a)).exp()
}

/// Collimated LO including `α`, `α (πA²)^{-1/4} e^{−u²/2A²}`.
fn lo2_at<T: Real>(cfg: &LOConfig<T>, u: T) -> T {
    let norm = (T::PI() * cfg.big_a * cfg.big_a).sqrt().sqrt().recip();
    cfg.alpha * norm * (-(u * u) / (lit::<T>(2.0) * cfg.big_a * cfg.big_a)).exp()
}

fn required_points<T: Real>(extent: T, max_spacing: T) -> usize {
    let n = (to_f64(extent) / to_f64(max_spacing)).ceil() as usize;
    n.max(2).next_power_of_two()
}

/// The composite LO field `e^{−x²/2a²} + α e^{−x²/2A²} e^{iθ}` (unit `E₀`).
pub fn make_lo_field<T: Real>(
    cfg: &LOConfig<T>,
    grid: Grid1D<T>,
    theta: T,
) -> Result<SampledField<T>> {
    cfg.validate()?;
    let max_spacing = cfg.a / lit(LO_FIELD_SAMPLES_PER_WAIST);
    if grid.spacing() > max_spacing {
        return Err(Error::Unresolved {
            what: "focused LO",
            spacing: to_f64(grid.spacing()),
            max_spacing: to_f64(max_spacing),
            required_points: required_points(grid.extent(), max_spacing),
        });
    }
    let min_extent = cfg.big_a * lit(LO_FIELD_EXTENT_PER_WAIST);
    if grid.extent() < min_extent {
        return Err(Error::ExtentTooSmall {
            extent: to_f64(grid.extent()),
            waist: to_f64(cfg.big_a),
            required: to_f64(min_extent),
        });
    }
    let two = lit::<T>(2.0);
    let phase = cis(theta);
    let amplitudes = grid
        .coordinates()
        .into_iter()
        .map(|x| {
            let focused = (-(x * x) / (two * cfg.a * cfg.a)).exp();
            let collimated = (-(x * x) / (two * cfg.big_a * cfg.big_a)).exp();
            phase * (cfg.alpha * collimated) + focused
        })
        .collect();
    let k = grid.unit_mode().default_wavenumber();
    SampledField::with_domain(grid, amplitudes, k, Domain::Position)
}

fn check_overlap_resolution<T: Real>(signal: &SampledField<T>, cfg: &LOConfig<T>) -> Result<()> {
    if signal.domain() != Domain::Position {
        return Err(Error::InvalidParameter {
            name: "signal",
            reason: "expected a position-domain field".into(),
        });
    }
    cfg.validate()?;
    let grid = signal.grid();
    let max_spacing = cfg.a / lit(OVERLAP_SAMPLES_PER_WAIST);
    if grid.spacing() > max_spacing {
        return Err(Error::Unresolved {
            what: "focused LO overlap",
            spacing: to_f64(grid.spacing()),
            max_spacing: to_f64(max_spacing),
            required_points: required_points(grid.extent(), max_spacing),
        });
    }
    Ok(())
}

/// Overlap amplitudes `o_m = ∫ E*_LOm(x − d_x) E_S(x) e^{−i k d_p x / f} dx`.
pub fn overlap_beat<T: Real>(
    signal: &SampledField<T>,
    cfg: &LOConfig<T>,
    d_x: T,
    d_p: T,
) -> Result<(Complex<T>, Complex<T>)> {
    check_overlap_resolution(signal, cfg)?;
    let q = signal.wavenumber() * d_p / cfg.focal_length;
    Ok(overlaps_at(signal, cfg, d_x, q))
}

fn overlaps_at<T: Real>(
    signal: &SampledField<T>,
    cfg: &LOConfig<T>,
    d_x: T,
    q: T,
) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let (o1, o2) = signal
        .grid()
        .coordinates()
        .into_iter()
        .zip(signal.amplitudes())
        .fold((zero, zero), |(o1, o2), (x, &psi)| {
            let v = psi * cis(-q * x);
            (o1 + v * lo1_at(cfg, x - d_x), o2 + v * lo2_at(cfg, x - d_x))
        });
    let dx = signal.grid().spacing();
    (o1 * dx, o2 * dx)
}

/// Overlaps for every scan point, `(o1, o2)` each `n_dx × n_p0`.
pub(crate) fn scan_overlaps<T: Real>(
    signal: &SampledField<T>,
    cfg: &LOConfig<T>,
    scan: &ScanConfig<T>,
) -> Result<OverlapPair<T>> {
    check_overlap_resolution(signal, cfg)?;
    let xs = signal.grid().coordinates();
    let spacing = signal.grid().spacing();
    let psi = signal.amplitudes();
    let p0s = scan.p0.coordinates();
    // tilt tables, one row per p₀
    let tilts: Vec<Vec<Complex<T>>> = p0s
        .par_iter()
        .map(|&q| xs.iter().map(|&x| cis(-q * x)).collect())
        .collect();
    let rows: Vec<(Vec<_>, Vec<_>)> = scan
        .dx
        .coordinates()
        .into_par_iter()
        .map(|d| {
            let w1: Vec<Complex<T>> = xs
                .iter()
                .zip(psi)
                .map(|(&x, &v)| v * lo1_at(cfg, x - d))
                .collect();
            let w2: Vec<Complex<T>> = xs
                .iter()
                .zip(psi)
                .map(|(&x, &v)| v * lo2_at(cfg, x - d))
                .collect();
            let zero = Complex::new(T::zero(), T::zero());
            let dot = |w: &[Complex<T>], t: &[Complex<T>]| {
                w.iter().zip(t).fold(zero, |acc, (&a, &b)| acc + a * b) * spacing
            };
            tilts
                .iter()
                .map(|t| (dot(&w1, t), dot(&w2, t)))
                .unzip()
        })
        .collect();
    let (nx, np) = (scan.dx.len, scan.p0.len);
    let o1 = Array2::from_shape_fn((nx, np), |(i, j)| rows[i].0[j]);
    let o2 = Array2::from_shape_fn((nx, np), |(i, j)| rows[i].1[j]);
    Ok((o1, o2))
}

/// `S = conj(o1)·o2 / calibration` on the `(x₀, p₀)` scan grid.
pub fn ideal_scan<T: Real>(
    signal: &SampledField<T>,
    cfg: &LOConfig<T>,
    scan: &ScanConfig<T>,
) -> Result<PhaseSpaceGrid<T>> {
    let (o1, o2) = scan_overlaps(signal, cfg, scan)?;
    let scale = cfg.calibration().recip();
    let values = ndarray::Zip::from(&o1)
        .and(&o2)
        .map_collect(|&a, &b| a.conj() * b * scale);
    PhaseSpaceGrid::new(
        Kind::KrEstimate,
        scan.dx,
        scan.p0,
        signal.grid().unit_mode(),
        signal.wavenumber(),
        values,
    )
}

/// One row of a [`resolution_sweep`] report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepEntry<T> {
    pub factor: T,
    pub a: T,
    pub big_a: T,
    /// Relative L2 error against `K*` after a global complex gain fit.
    pub rel_l2_error: T,
    pub correlation: T,
    /// `a · (1/A)`: position resolution times momentum resolution.
    pub joint_product: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport<T> {
    pub entries: Vec<SweepEntry<T>>,
}

impl<T: Real> SweepReport<T> {
    /// Whether the error never increases with the factor.
    pub fn is_nonincreasing(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].rel_l2_error <= w[0].rel_l2_error)
    }
}

/// Runs [`ideal_scan`] with `a/m` and `A·m` for each factor `m` and compares
/// against `K*` evaluated on the scan grid.
pub fn resolution_sweep<T: Real>(
    signal: &SampledField<T>,
    cfg_base: &LOConfig<T>,
    scan: &ScanConfig<T>,
    factors: &[T],
) -> Result<SweepReport<T>> {
    if let Some(bad) = factors.iter().find(|&&m| !(m >= T::one())) {
        return Err(Error::InvalidParameter {
            name: "factors",
            reason: format!("every factor must be at least 1, got {bad}"),
        });
    }
    let oracle = kr_conjugate_at(signal, &scan.dx.coordinates(), &scan.p0.coordinates())?;
    let entries = factors
        .iter()
        .map(|&m| {
            let cfg = LOConfig {
                a: cfg_base.a / m,
                big_a: cfg_base.big_a * m,
                ..*cfg_base
            };
            let measured = ideal_scan(signal, &cfg, scan)?;
            let cmp = metrics::compare(measured.values(), &oracle);
            Ok(SweepEntry {
                factor: m,
                a: cfg.a,
                big_a: cfg.big_a,
                rel_l2_error: cmp.rel_l2_after_gain,
                correlation: cmp.correlation,
                joint_product: cfg.a / cfg.big_a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { entries })
}

/// Smallest point count that resolves `cfg.a` for overlaps on `extent`.
pub fn points_for_overlap<T: Real>(cfg: &LOConfig<T>, extent: T) -> usize {
    required_points(extent, cfg.a / lit(OVERLAP_SAMPLES_PER_WAIST))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{apply_obstruction, make_gaussian, to_momentum};

    fn dimensionless(n: usize) -> SampledField<f64> {
        let g = Grid1D::new(n, 16.0, UnitMode::Dimensionless).unwrap();
        make_gaussian(g, 1.0, f64::INFINITY, 0.0).unwrap()
    }

    fn narrow_wide(ratio: f64) -> LOConfig<f64> {
        LOConfig::lab(UnitMode::Dimensionless).with_ratio(1.0, ratio)
    }

    #[test]
    fn lo_field_constructive_and_destructive() {
        let cfg: LOConfig<f64> = LOConfig::lab(UnitMode::Millimeters);
        let g = Grid1D::new(2048, 16.9, UnitMode::Millimeters).unwrap();
        let on = make_lo_field(&cfg, g, 0.0).unwrap();
        assert!((on.amplitudes()[1024].re - 2.0).abs() < 1e-15);
        let off = make_lo_field(&cfg, g, std::f64::consts::PI).unwrap();
        assert!(off.amplitudes()[1024].norm() < 1e-15);
    }

    #[test]
    fn lab_lo_fits_a_16_9_mm_grid() {
        let cfg: LOConfig<f64> = LOConfig::lab(UnitMode::Millimeters);
        let g = Grid1D::new(2048, 16.9, UnitMode::Millimeters).unwrap();
        let lo = make_lo_field(&cfg, g, 0.0).unwrap();
        // ∫|e^{−x²/2a²} + e^{−x²/2A²}|² = √π (a + A) + 2√(2π) aA/√(a²+A²)
        let (a, big) = (0.081f64, 2.6f64);
        let pi = std::f64::consts::PI;
        let exact = pi.sqrt() * (a + big) + 2.0 * (2.0 * pi).sqrt() * a * big / (a * a + big * big).sqrt();
        // the collimated tail beyond ±8.45 mm carries about 1e-5 of the energy
        assert!((lo.norm_squared() - exact).abs() < 1e-4 * exact);
        let coarse = Grid1D::new(512, 16.9, UnitMode::Millimeters).unwrap();
        match make_lo_field(&cfg, coarse, 0.0) {
            Err(Error::Unresolved { required_points, .. }) => assert_eq!(required_points, 2048),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_overlap_is_unity() {
        let cfg = LOConfig {
            alpha: 0.0,
            ..narrow_wide(4.0)
        };
        let g = Grid1D::new(1024, 16.0, UnitMode::Dimensionless).unwrap();
        let amps = g.coordinates().iter().map(|&x| Complex::new(lo1_at(&cfg, x), 0.0)).collect();
        let signal = SampledField::new(g, amps).unwrap();
        let (o1, o2) = overlap_beat(&signal, &cfg, 0.0, 0.0).unwrap();
        assert!((o1 - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(o2, Complex::new(0.0, 0.0));
    }

    #[test]
    fn focused_limit_samples_the_field() {
        let f = dimensionless(4096);
        let cfg = narrow_wide(50.0);
        let (dx, q) = (0.7, 1.3);
        let (o1, _) = overlap_beat(&f, &cfg, dx, q).unwrap();
        let expected = f.value_at(dx) * cis(-q * dx) * cfg.lo1_area();
        assert!((o1 - expected).norm() < 0.01 * expected.norm());
    }

    #[test]
    fn collimated_limit_samples_the_spectrum() {
        let f = dimensionless(1024);
        let cfg = LOConfig {
            big_a: 50.0,
            ..narrow_wide(4.0)
        };
        let q = 0.9;
        let (_, o2) = overlap_beat(&f, &cfg, 0.0, q).unwrap();
        let expected = f.momentum_at(q) * (2.0 * std::f64::consts::PI).sqrt() * cfg.lo2_peak();
        assert!((o2 - expected).norm() < 0.01 * expected.norm());
    }

    #[test]
    fn symmetric_signal_gives_real_beat_at_origin() {
        let f = dimensionless(1024);
        let cfg = narrow_wide(20.0);
        let scan = ScanConfig::symmetric(0.0, 1, 0.0, 1);
        let s = ideal_scan(&f, &cfg, &scan).unwrap().values()[[0, 0]];
        assert!(s.im.abs() < 1e-6 * s.norm());
    }

    #[test]
    fn blocked_region_reads_zero() {
        let g = Grid1D::new(2048, 13.6, UnitMode::Millimeters).unwrap();
        let f = make_gaussian(g, 0.85, f64::INFINITY, 0.0).unwrap();
        let f = apply_obstruction(&f, 0.5).unwrap();
        let cfg = LOConfig::lab(UnitMode::Millimeters).with_ratio(0.85, 20.0);
        let scan = ScanConfig::symmetric(2.0, 41, 4.0, 9);
        let s = ideal_scan(&f, &cfg, &scan).unwrap();
        let peak = s.peak();
        for (i, x) in scan.dx.coordinates().into_iter().enumerate() {
            if x.abs() < 0.5 - 5.0 * cfg.a {
                assert!(s.values().row(i).iter().all(|v| v.norm() < 1e-3 * peak), "x={x}");
            }
        }
    }

    #[test]
    fn scaling_the_signal_scales_the_beat_by_modulus_squared() {
        let f = dimensionless(1024);
        let lambda = Complex::new(0.6, -1.7);
        let cfg = narrow_wide(8.0);
        let scan = ScanConfig::symmetric(3.0, 7, 3.0, 5);
        let s = ideal_scan(&f, &cfg, &scan).unwrap();
        let sl = ideal_scan(&f.scaled(lambda), &cfg, &scan).unwrap();
        for (a, b) in s.values().iter().zip(sl.values()) {
            assert!((a * lambda.norm_sqr() - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn sweep_errors_do_not_increase() {
        let f = dimensionless(4096);
        let cfg = narrow_wide(4.0);
        let scan = ScanConfig::symmetric(3.0, 13, 3.0, 13);
        let report = resolution_sweep(&f, &cfg, &scan, &[1.0, 2.0, 4.0]).unwrap();
        assert!(report.is_nonincreasing(), "{report:?}");
        assert!(report.entries.last().unwrap().joint_product < 0.5);
    }

    #[test]
    fn momentum_sign_matches_the_kr_oracle() {
        // an off-center, tilted field distinguishes p₀ = +k d_p / f from its mirror image
        let g = Grid1D::new(4096, 16.0, UnitMode::Dimensionless).unwrap();
        let f = crate::wavefield::make_gaussian_with_wavenumber(g, 1.0, 3.0, 0.5, 1.0).unwrap();
        let spec = to_momentum(&f).unwrap();
        assert!(spec.amplitudes().iter().any(|v| v.norm() > 0.0));
        let cfg = narrow_wide(30.0);
        let scan = ScanConfig::symmetric(3.0, 13, 3.0, 13);
        let s = ideal_scan(&f, &cfg, &scan).unwrap();
        let oracle = kr_conjugate_at(&f, &scan.dx.coordinates(), &scan.p0.coordinates()).unwrap();
        assert!(metrics::compare(s.values(), &oracle).correlation > 0.99);
    }
}
