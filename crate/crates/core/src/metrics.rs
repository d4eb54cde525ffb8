//! Error metrics between a measured and a reference array.

use ndarray::Array2;
use num_complex::Complex;

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison<T> {
    /// `max |a − b|`
    pub linf: T,
    /// `‖a − b‖₂ / ‖b‖₂`
    pub rel_l2: T,
    /// Least-squares complex gain `g` minimizing `‖a − g·b‖₂`.
    pub gain: Complex<T>,
    /// `‖a − g·b‖₂ / ‖a‖₂`
    pub rel_l2_after_gain: T,
    /// `|⟨a, b⟩| / (‖a‖₂ ‖b‖₂)`
    pub correlation: T,
}

pub fn compare<T: Real>(measured: &Array2<Complex<T>>, reference: &Array2<Complex<T>>) -> Comparison<T> {
    assert_eq!(measured.dim(), reference.dim(), "compared arrays must share a shape");
    compare_iter(measured.iter().copied(), reference.iter().copied())
}

pub fn compare_slices<T: Real>(measured: &[Complex<T>], reference: &[Complex<T>]) -> Comparison<T> {
    assert_eq!(measured.len(), reference.len(), "compared arrays must share a length");
    compare_iter(measured.iter().copied(), reference.iter().copied())
}

pub fn compare_real<T: Real>(measured: &[T], reference: &[T]) -> Comparison<T> {
    assert_eq!(measured.len(), reference.len(), "compared arrays must share a length");
    let lift = |v: &T| Complex::new(*v, T::zero());
    compare_iter(measured.iter().map(lift), reference.iter().map(lift))
}

fn compare_iter<T: Real>(
    measured: impl Iterator<Item = Complex<T>>,
    reference: impl Iterator<Item = Complex<T>>,
) -> Comparison<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let pairs: Vec<(Complex<T>, Complex<T>)> = measured.zip(reference).collect();
    let mut linf = T::zero();
    let mut diff2 = T::zero();
    let mut aa = T::zero();
    let mut bb = T::zero();
    let mut ba = zero;
    for &(a, b) in &pairs {
        linf = linf.max((a - b).norm());
        diff2 = diff2 + (a - b).norm_sqr();
        aa = aa + a.norm_sqr();
        bb = bb + b.norm_sqr();
        ba = ba + b.conj() * a;
    }
    let gain = if bb > T::zero() { ba / bb } else { zero };
    let resid2 = pairs
        .iter()
        .map(|&(a, b)| (a - gain * b).norm_sqr())
        .fold(T::zero(), |acc, v| acc + v);
    let ratio = |num: T, den: T| {
        if den > T::zero() {
            (num / den).sqrt()
        } else if num > T::zero() {
            T::infinity()
        } else {
            T::zero()
        }
    };
    let correlation = if aa > T::zero() && bb > T::zero() {
        ba.norm() / (aa.sqrt() * bb.sqrt())
    } else {
        T::zero()
    };
    Comparison {
        linf,
        rel_l2: ratio(diff2, bb),
        gain,
        rel_l2_after_gain: ratio(resid2, aa),
        correlation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_copy_is_perfectly_correlated() {
        let b = Array2::from_shape_fn((4, 5), |(i, j)| Complex::new(i as f64 - 1.5, j as f64 * 0.3));
        let g = Complex::new(0.3, -2.0);
        let a = b.mapv(|v| v * g);
        let c = compare(&a, &b);
        assert!((c.gain - g).norm() < 1e-14);
        assert!(c.rel_l2_after_gain < 1e-14);
        assert!((c.correlation - 1.0).abs() < 1e-14);
        assert!(c.linf > 0.0);
    }

    #[test]
    fn identical_arrays() {
        let c = compare_real(&[1.0, 2.0, -3.0], &[1.0, 2.0, -3.0]);
        assert_eq!(c.linf, 0.0);
        assert_eq!(c.rel_l2, 0.0);
    }
}
