//! Centered discrete Fourier transforms.
//!
//! All grids in this crate place sample `j` at `(j - n/2) * spacing`, so the
//! basic kernel is `exp(∓2πi (k - n/2)(j - n/2) / n)`. For even `n` that is an
//! ordinary FFT with `(-1)^j` modulation on both sides.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{from_usize, lit, Real};

/// Planned centered DFT of a fixed even length. Unnormalized in both directions.
#[derive(Clone)]
pub(crate) struct CenteredFft<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> CenteredFft<T> {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "centered DFT needs an even length, got {n}");
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    /// `b_k = Σ_j a_j exp(-2πi (k-n/2)(j-n/2)/n)`
    pub(crate) fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.forward);
    }

    /// `a_j = Σ_k b_k exp(+2πi (k-n/2)(j-n/2)/n)`
    pub(crate) fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        debug_assert_eq!(buf.len(), self.n);
        alternate_signs(buf);
        plan.process(buf);
        alternate_signs(buf);
        if (self.n / 2) % 2 == 1 {
            for v in buf.iter_mut() {
                *v = -*v;
            }
        }
    }
}

fn alternate_signs<T: Real>(buf: &mut [Complex<T>]) {
    for v in buf.iter_mut().skip(1).step_by(2) {
        *v = -*v;
    }
}

/// Table of `exp(2πi m / n)` for exact modular phase lookups.
pub(crate) struct Twiddles<T: Real> {
    table: Vec<Complex<T>>,
}

impl<T: Real> Twiddles<T> {
    pub(crate) fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|m| {
                let phase = lit::<T>(2.0 * std::f64::consts::PI * m as f64 / n as f64);
                Complex::new(phase.cos(), phase.sin())
            })
            .collect();
        Self { table }
    }

    /// `exp(2πi (a·b) / n)` for signed integers `a`, `b`.
    #[inline]
    pub(crate) fn product(&self, a: i64, b: i64) -> Complex<T> {
        let n = self.table.len() as i64;
        let m = ((a % n) * (b % n)).rem_euclid(n);
        self.table[m as usize]
    }
}

/// Band-limited interpolation of a centered, period-`n` sequence onto the
/// half-spacing grid (length `2n`, even outputs reproduce the input).
///
/// The Nyquist coefficient is split evenly between `±n/2`, which makes the
/// interpolant commute with complex conjugation.
pub(crate) struct HalfGridInterpolator<T: Real> {
    coarse: CenteredFft<T>,
    fine: CenteredFft<T>,
}

impl<T: Real> HalfGridInterpolator<T> {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            coarse: CenteredFft::new(n),
            fine: CenteredFft::new(2 * n),
        }
    }

    pub(crate) fn interpolate(&self, input: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut spectrum = input.to_vec();
        self.coarse.forward(&mut spectrum);
        self.interpolate_spectrum(&spectrum)
    }

    /// Same as [`interpolate`](Self::interpolate) but starting from the
    /// centered spectrum `Σ_j a_j exp(-2πi (k-n/2)(j-n/2)/n)`.
    pub(crate) fn interpolate_spectrum(&self, spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.coarse.len();
        let half = n / 2;
        let mut padded = vec![Complex::new(T::zero(), T::zero()); 2 * n];
        let two = lit::<T>(2.0);
        for (k, &c) in spectrum.iter().enumerate() {
            padded[k + half] = c;
        }
        // frequency -n/2 sits at padded[half]; share it with +n/2
        let nyquist = spectrum[0] / two;
        padded[half] = nyquist;
        padded[half + n] = nyquist;
        self.fine.inverse(&mut padded);
        let scale = T::one() / from_usize::<T>(n);
        for v in padded.iter_mut() {
            *v = *v * scale;
        }
        padded
    }
}

pub(crate) fn transform_rows<T, F>(data: &mut Array2<Complex<T>>, op: F)
where
    T: Real,
    F: Fn(&mut [Complex<T>]) + Sync + Send,
{
    let ncols = data.ncols();
    let slice = data
        .as_slice_mut()
        .expect("phase-space arrays are kept in standard layout");
    slice.par_chunks_mut(ncols).for_each(op);
}

pub(crate) fn transposed<T: Real>(data: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    data.t().as_standard_layout().into_owned()
}

/// Applies the centered DFT along both axes and returns the result with axes
/// swapped: `out[k][l] = Σ_{i,j} a[i][j] e^{±(i↔l)} e^{±(j↔k)}`.
pub(crate) fn transform_2d_transposed<T: Real>(
    data: &Array2<Complex<T>>,
    inverse: bool,
) -> Array2<Complex<T>> {
    let (rows, cols) = data.dim();
    let along_rows = CenteredFft::<T>::new(cols);
    let along_cols = CenteredFft::<T>::new(rows);
    let mut work = data.clone();
    transform_rows(&mut work, |row| {
        if inverse {
            along_rows.inverse(row)
        } else {
            along_rows.forward(row)
        }
    });
    let mut work = transposed(&work);
    transform_rows(&mut work, |row| {
        if inverse {
            along_cols.inverse(row)
        } else {
            along_cols.forward(row)
        }
    });
    work
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[Complex<f64>], sign: f64) -> Vec<Complex<f64>> {
        let n = a.len() as f64;
        let h = a.len() as f64 / 2.0;
        (0..a.len())
            .map(|k| {
                a.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let ph = sign * 2.0 * std::f64::consts::PI * (k as f64 - h) * (j as f64 - h) / n;
                        v * Complex::new(ph.cos(), ph.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn centered_transform_matches_direct_sum() {
        for n in [2usize, 6, 8, 12, 16] {
            let a: Vec<Complex<f64>> = (0..n)
                .map(|j| Complex::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let plan = CenteredFft::<f64>::new(n);
            let mut f = a.clone();
            plan.forward(&mut f);
            let mut b = a.clone();
            plan.inverse(&mut b);
            for (x, y) in f.iter().zip(naive(&a, -1.0)) {
                assert!((x - y).norm() < 1e-12, "n={n}");
            }
            for (x, y) in b.iter().zip(naive(&a, 1.0)) {
                assert!((x - y).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn half_grid_interpolation_keeps_nodes_and_conjugation() {
        let n = 16;
        let a: Vec<Complex<f64>> = (0..n)
            .map(|j| Complex::new((j as f64 * 0.4).sin(), (j as f64 * 0.9).cos() - 0.2))
            .collect();
        let interp = HalfGridInterpolator::<f64>::new(n);
        let fine = interp.interpolate(&a);
        for j in 0..n {
            assert!((fine[2 * j] - a[j]).norm() < 1e-13);
        }
        let conj: Vec<_> = a.iter().map(|v| v.conj()).collect();
        let fine_conj = interp.interpolate(&conj);
        for (x, y) in fine.iter().zip(&fine_conj) {
            assert!((x.conj() - y).norm() < 1e-13);
        }
    }

    #[test]
    fn twiddle_products_wrap_negative_indices() {
        let t = Twiddles::<f64>::new(8);
        let direct = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * (-3.0 * 5.0) / 8.0);
        assert!((t.product(-3, 5) - direct).norm() < 1e-14);
    }
}
