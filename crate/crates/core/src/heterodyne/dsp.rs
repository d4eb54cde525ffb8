//! Time-domain detection chain: beat synthesis, analyzer band-pass, squarer
//! and dual-quadrature lock-in.
//!
//! The chain runs in `f64` regardless of the field scalar; only its outputs
//! are converted back.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use super::{scan_overlaps, LOConfig, ScanConfig};
use crate::error::{Error, Result};
use crate::metrics;
use crate::phasespace::{Kind, PhaseSpaceGrid};
use crate::scalar::{lit, to_f64, Real};
use crate::wavefield::{Axis, SampledField};

/// Spur amplitude relative to `|o1| + |o2|` when spurs are injected.
const SPUR_LEVEL: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DspSpec<T> {
    pub sample_rate: T,
    /// Lock-in averaging window, in periods of the LO difference frequency.
    pub demod_periods: usize,
    /// Periods discarded at each end of the record (filter transients).
    pub guard_periods: usize,
    /// Phase of the quadrature reference in degrees: 90 gives `K*`, −90 gives `K`.
    pub quadrature_phase_deg: T,
    /// Inject DC and LO-difference spurs ahead of the band-pass.
    pub with_spurs: bool,
}

impl<T: Real> Default for DspSpec<T> {
    fn default() -> Self {
        Self {
            sample_rate: lit(160_000.0),
            demod_periods: 16,
            guard_periods: 1,
            quadrature_phase_deg: lit(90.0),
            with_spurs: false,
        }
    }
}

/// Lock-in outputs over a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct DemodResult<T: Real> {
    pub x0: Axis<T>,
    pub p0: Axis<T>,
    pub s_r: Array2<T>,
    pub s_i: Array2<T>,
    /// Fitted complex gain `g` with `s_r + i s_i ≈ g · S_ideal`.
    pub gain: Complex<T>,
    /// `‖s − g·S_ideal‖ / ‖s‖` after the gain fit.
    pub rel_l2_vs_ideal: T,
    /// Calibrated `S_ideal = conj(o1)·o2 / calibration` on the same grid.
    pub ideal: Array2<Complex<T>>,
}

impl<T: Real> DemodResult<T> {
    pub fn measured(&self) -> Array2<Complex<T>> {
        ndarray::Zip::from(&self.s_r)
            .and(&self.s_i)
            .map_collect(|&r, &i| Complex::new(r, i))
    }

    /// Measurement divided by the fitted gain, as a `K*` estimate.
    pub fn to_grid(&self, like: &SampledField<T>) -> Result<PhaseSpaceGrid<T>> {
        let g = if self.gain.norm() > T::zero() {
            self.gain
        } else {
            Complex::new(T::one(), T::zero())
        };
        PhaseSpaceGrid::new(
            Kind::KrEstimate,
            self.x0,
            self.p0,
            like.grid().unit_mode(),
            like.wavenumber(),
            self.measured().mapv(|v| v / g),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn run(&self, data: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in data.iter_mut() {
            let x = *v;
            let y = self.b[0] * x + z1;
            z1 = self.b[1] * x - self.a[1] * y + z2;
            z2 = self.b[2] * x - self.a[2] * y;
            *v = y;
        }
    }

    fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = self.a[0] + z_inv * (self.a[1] + z_inv * self.a[2]);
        num / den
    }
}

/// Butterworth band-pass from a second-order low-pass prototype (fourth
/// order overall), bilinear with prewarped band edges, unit gain at the center.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPass {
    sections: [Biquad; 2],
    sample_rate: f64,
}

impl BandPass {
    pub fn design(center: f64, bandwidth: f64, sample_rate: f64) -> Result<Self> {
        let nyquist = sample_rate / 2.0;
        let (lo, hi) = (center - bandwidth / 2.0, center + bandwidth / 2.0);
        if !(lo > 0.0 && hi < nyquist && bandwidth > 0.0) {
            return Err(Error::DspConfig(format!(
                "band {lo}..{hi} Hz must lie inside (0, {nyquist}) Hz"
            )));
        }
        let warp = |f: f64| 2.0 * sample_rate * (std::f64::consts::PI * f / sample_rate).tan();
        let (wl, wh) = (warp(lo), warp(hi));
        let w0 = (wl * wh).sqrt();
        let bw = wh - wl;
        let proto = Complex::from_polar(1.0, 0.75 * std::f64::consts::PI);
        let pb = proto * bw;
        let root = (pb * pb - 4.0 * w0 * w0).sqrt();
        let to_z = |s: Complex<f64>| (1.0 + s / (2.0 * sample_rate)) / (1.0 - s / (2.0 * sample_rate));
        let section = |s: Complex<f64>| {
            let z = to_z(s);
            Biquad {
                // zeros at z = ±1 (analog DC and infinity)
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            }
        };
        let mut sections = [section((pb + root) / 2.0), section((pb - root) / 2.0)];
        let omega = 2.0 * std::f64::consts::PI * center / sample_rate;
        let z_inv = Complex::from_polar(1.0, -omega);
        let gain = sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex::new(1.0, 0.0), |acc, h| acc * h)
            .norm();
        let per_section = gain.sqrt().recip();
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        Ok(Self {
            sections,
            sample_rate,
        })
    }

    /// Complex response of one forward pass at `freq`.
    pub fn response(&self, freq: f64) -> Complex<f64> {
        let z_inv = Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * freq / self.sample_rate);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex::new(1.0, 0.0), |acc, h| acc * h)
    }

    /// Forward then time-reversed pass: zero phase, magnitude `|H|²`.
    pub fn filtfilt(&self, data: &mut [f64]) {
        for s in &self.sections {
            s.run(data);
        }
        data.reverse();
        for s in &self.sections {
            s.run(data);
        }
        data.reverse();
    }
}

/// Precomputed tables and filter for one LO / DSP configuration.
pub(crate) struct DspChain {
    cos1: Vec<f64>,
    sin1: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    ref_cos: Vec<f64>,
    ref_sin: Vec<f64>,
    quad: (f64, f64),
    window: (usize, usize),
    filter: BandPass,
    with_spurs: bool,
}

fn tone_table(freq: f64, sample_rate: f64, len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|n| {
            let cycles = (freq * n as f64).rem_euclid(sample_rate) / sample_rate;
            let phase = 2.0 * std::f64::consts::PI * cycles;
            (phase.cos(), phase.sin())
        })
        .unzip()
}

impl DspChain {
    pub(crate) fn new<T: Real>(cfg: &LOConfig<T>, dsp: &DspSpec<T>) -> Result<Self> {
        let fs = to_f64(dsp.sample_rate);
        let (w1, w2) = cfg.beat_frequencies();
        let (f1, f2) = (to_f64(w1), to_f64(w2));
        if !(f1 > 0.0 && f2 > 0.0) {
            return Err(Error::DspConfig(format!(
                "signal must sit above both LOs (beats {f1} Hz and {f2} Hz)"
            )));
        }
        let highest = f1.max(f2);
        if !(fs > 8.0 * highest) {
            return Err(Error::DspConfig(format!(
                "sample rate {fs} Hz must exceed 8x the highest beat ({highest} Hz), i.e. {} Hz",
                8.0 * highest
            )));
        }
        let delta = to_f64(cfg.freq_lo1 - cfg.freq_lo2);
        let per_period = fs / delta.abs();
        let samples = per_period.round();
        if !delta.is_finite() || delta == 0.0 || (per_period - samples).abs() > 1e-9 * per_period {
            return Err(Error::DspConfig(format!(
                "sample rate / LO difference = {per_period} must be an integer for an exact demodulation window"
            )));
        }
        if dsp.demod_periods < 16 {
            return Err(Error::DspConfig(format!(
                "demodulation window must span at least 16 periods, got {}",
                dsp.demod_periods
            )));
        }
        let period = samples as usize;
        let total = period * (dsp.demod_periods + 2 * dsp.guard_periods);
        let filter = BandPass::design(
            0.5 * (f1 + f2),
            to_f64(cfg.analyzer_bandwidth),
            fs,
        )?;
        let (cos1, sin1) = tone_table(f1, fs, total);
        let (cos2, sin2) = tone_table(f2, fs, total);
        // reference at the LO difference; its sign follows freq_lo1 − freq_lo2
        let sign = delta.signum();
        let (ref_cos, ref_sin): (Vec<f64>, Vec<f64>) = (0..period)
            .map(|n| {
                let phase = 2.0 * std::f64::consts::PI * n as f64 / period as f64;
                (phase.cos(), sign * phase.sin())
            })
            .unzip();
        let phi = to_f64(dsp.quadrature_phase_deg);
        let quad = match phi {
            90.0 => (0.0, 1.0),
            -90.0 => (0.0, -1.0),
            p => (p.to_radians().cos(), p.to_radians().sin()),
        };
        let start = period * dsp.guard_periods;
        Ok(Self {
            cos1,
            sin1,
            cos2,
            sin2,
            ref_cos,
            ref_sin,
            quad,
            window: (start, start + period * dsp.demod_periods),
            filter,
            with_spurs: dsp.with_spurs,
        })
    }

    /// Lock-in `(in-phase, quadrature)` for one pair of overlap amplitudes.
    pub(crate) fn run(&self, o1: Complex<f64>, o2: Complex<f64>) -> (f64, f64) {
        let mut v: Vec<f64> = (0..self.cos1.len())
            .map(|n| {
                2.0 * (o1.re * self.cos1[n] + o1.im * self.sin1[n] + o2.re * self.cos2[n] + o2.im * self.sin2[n])
            })
            .collect();
        if self.with_spurs {
            let level = SPUR_LEVEL * (o1.norm() + o2.norm());
            let period = self.ref_cos.len();
            for (n, x) in v.iter_mut().enumerate() {
                *x += level * (1.0 + self.ref_cos[n % period]);
            }
        }
        self.filter.filtfilt(&mut v);
        let period = self.ref_cos.len();
        let (start, end) = self.window;
        let (mut acc_c, mut acc_s) = (0.0, 0.0);
        for (n, &s) in v.iter().enumerate().take(end).skip(start) {
            let y = s * s;
            acc_c += y * self.ref_cos[n % period];
            acc_s += y * self.ref_sin[n % period];
        }
        let scale = 2.0 / (end - start) as f64;
        let in_phase = acc_c * scale;
        let (c, s) = self.quad;
        (in_phase, c * in_phase + s * acc_s * scale)
    }
}

/// Runs the full detection chain at every scan point.
pub fn timedomain_scan<T: Real>(
    signal: &SampledField<T>,
    cfg: &LOConfig<T>,
    scan: &ScanConfig<T>,
    dsp: &DspSpec<T>,
) -> Result<DemodResult<T>> {
    cfg.validate()?;
    // configuration errors surface before any synthesis
    let chain = DspChain::new(cfg, dsp)?;
    let (o1, o2) = scan_overlaps(signal, cfg, scan)?;
    let points: Vec<(Complex<f64>, Complex<f64>)> = o1
        .iter()
        .zip(o2.iter())
        .map(|(a, b)| {
            (
                Complex::new(to_f64(a.re), to_f64(a.im)),
                Complex::new(to_f64(b.re), to_f64(b.im)),
            )
        })
        .collect();
    let outputs: Vec<(f64, f64)> = points.par_iter().map(|&(a, b)| chain.run(a, b)).collect();
    let dim = o1.dim();
    let s_r = Array2::from_shape_fn(dim, |(i, j)| lit::<T>(outputs[i * dim.1 + j].0));
    let s_i = Array2::from_shape_fn(dim, |(i, j)| lit::<T>(outputs[i * dim.1 + j].1));
    let scale = cfg.calibration().recip();
    let mut ideal = ndarray::Zip::from(&o1)
        .and(&o2)
        .map_collect(|&a, &b| a.conj() * b * scale);
    if dsp.quadrature_phase_deg < T::zero() {
        // the negative reference measures K rather than K*
        ideal.mapv_inplace(|v| v.conj());
    }
    let measured = ndarray::Zip::from(&s_r)
        .and(&s_i)
        .map_collect(|&r, &i| Complex::new(r, i));
    let cmp = metrics::compare(&measured, &ideal);
    Ok(DemodResult {
        x0: scan.dx,
        p0: scan.p0,
        s_r,
        s_i,
        gain: cmp.gain,
        rel_l2_vs_ideal: cmp.rel_l2_after_gain,
        ideal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{make_gaussian, Grid1D, UnitMode};

    fn cfg() -> LOConfig<f64> {
        LOConfig::lab(UnitMode::Dimensionless).with_ratio(1.0, 8.0)
    }

    #[test]
    fn band_pass_has_unit_center_gain_and_rejects_dc() {
        let f = BandPass::design(9997.5, 100.0, 160_000.0).unwrap();
        assert!((f.response(9997.5).norm() - 1.0).abs() < 1e-12);
        assert!(f.response(0.0).norm() < 1e-12);
        assert!(f.response(5.0).norm() < 1e-8);
        // −3 dB at the band edges
        let edge = f.response(9997.5 + 50.0).norm();
        assert!((edge - 0.5f64.sqrt()).abs() < 0.01, "{edge}");
    }

    #[test]
    fn beat_term_is_conj_o1_times_o2() {
        let chain = DspChain::new(&cfg(), &DspSpec::default()).unwrap();
        let (o1, o2) = (Complex::new(0.3, -0.4), Complex::new(-0.2, 0.7));
        let (r, i) = chain.run(o1, o2);
        let s = o1.conj() * o2;
        let g = Complex::new(r, i) / s;
        assert!(g.im.abs() < 1e-6 * g.norm());
        let (r2, i2) = chain.run(o1 * 2.0, o2);
        assert!((Complex::new(r2, i2) - Complex::new(r, i) * 2.0).norm() < 1e-9);
    }

    #[test]
    fn blocked_lo2_leaves_no_difference_tone() {
        let chain = DspChain::new(&cfg(), &DspSpec::default()).unwrap();
        let (r, i) = chain.run(Complex::new(0.8, 0.1), Complex::new(0.0, 0.0));
        assert!(r.abs() < 1e-10 && i.abs() < 1e-10, "{r} {i}");
    }

    #[test]
    fn configuration_errors_come_first() {
        let g = Grid1D::new(256, 16.0, UnitMode::Dimensionless).unwrap();
        let f = make_gaussian(g, 1.0, f64::INFINITY, 0.0).unwrap();
        let scan = ScanConfig::symmetric(1.0, 3, 1.0, 3);
        let slow = DspSpec {
            sample_rate: 60_000.0,
            ..DspSpec::default()
        };
        assert!(matches!(timedomain_scan(&f, &cfg(), &scan, &slow), Err(Error::DspConfig(_))));
        let ragged = DspSpec {
            sample_rate: 160_003.0,
            ..DspSpec::default()
        };
        assert!(matches!(timedomain_scan(&f, &cfg(), &scan, &ragged), Err(Error::DspConfig(_))));
    }

    #[test]
    fn spurs_are_rejected() {
        let clean = DspChain::new(&cfg(), &DspSpec::default()).unwrap();
        let dirty = DspChain::new(
            &cfg(),
            &DspSpec {
                with_spurs: true,
                ..DspSpec::default()
            },
        )
        .unwrap();
        let (o1, o2) = (Complex::new(0.3, -0.4), Complex::new(-0.2, 0.7));
        let a = clean.run(o1, o2);
        let b = dirty.run(o1, o2);
        assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "{a:?} {b:?}");
    }

    #[test]
    fn frequency_plan_scaling_is_invisible() {
        let base = cfg();
        let c = 2.0;
        let scaled = LOConfig {
            freq_signal: base.freq_signal * c,
            freq_lo1: base.freq_lo1 * c,
            freq_lo2: base.freq_lo2 * c,
            analyzer_bandwidth: base.analyzer_bandwidth * c,
            ..base
        };
        let dsp = DspSpec::default();
        let dsp2 = DspSpec {
            sample_rate: dsp.sample_rate * c,
            ..dsp
        };
        let (o1, o2) = (Complex::new(0.3, -0.4), Complex::new(-0.2, 0.7));
        let a = DspChain::new(&base, &dsp).unwrap().run(o1, o2);
        let b = DspChain::new(&scaled, &dsp2).unwrap().run(o1, o2);
        assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
    }
}
