use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use super::{Kind, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::fourier::Twiddles;
use crate::scalar::{cis, sqrt_two_pi, Real};
use crate::wavefield::{to_momentum, Domain, SampledField};

/// `K*(x_i, p_j) = ψ*(x_i) ψ̃(p_j) e^{i x_i p_j} / √(2π)` on the field grid and
/// its conjugate momentum grid.
pub fn kr_conjugate<T: Real>(field: &SampledField<T>) -> Result<PhaseSpaceGrid<T>> {
    require_position(field)?;
    let grid = *field.grid();
    let n = grid.n_points();
    let psi = field.amplitudes();
    let spectrum = to_momentum(field)?;
    let psi_t = spectrum.amplitudes();
    let twiddles = Twiddles::<T>::new(n);
    let half = (n / 2) as i64;
    let norm = T::one() / sqrt_two_pi::<T>();

    let mut values = Array2::zeros((n, n));
    values
        .as_slice_mut()
        .expect("fresh array")
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let a = psi[i].conj() * norm;
            if a == Complex::new(T::zero(), T::zero()) {
                // leave the row exactly zero where the field vanishes
                return;
            }
            let xi = i as i64 - half;
            for (j, out) in row.iter_mut().enumerate() {
                *out = a * psi_t[j] * twiddles.product(xi, j as i64 - half);
            }
        });
    Ok(PhaseSpaceGrid::on_field_grid(
        Kind::KRconj,
        &grid,
        field.wavenumber(),
        values,
    ))
}

/// Elementwise conjugate: `K*` ↔ `K`.
pub fn kr_from_conjugate<T: Real>(grid: &PhaseSpaceGrid<T>) -> Result<PhaseSpaceGrid<T>> {
    let kind = match grid.kind() {
        Kind::KRconj => Kind::KR,
        Kind::KR => Kind::KRconj,
        _ => {
            return Err(Error::KindMismatch {
                expected: "kr_conj or kr",
                found: grid.kind().to_string(),
            })
        }
    };
    Ok(grid.with_values(kind, grid.values().mapv(|v| v.conj())))
}

/// `K*` evaluated at arbitrary coordinates: band-limited interpolation for
/// `ψ(x)` and the direct transform sum for `ψ̃(p)`.
pub fn kr_conjugate_at<T: Real>(
    field: &SampledField<T>,
    xs: &[T],
    ps: &[T],
) -> Result<Array2<Complex<T>>> {
    require_position(field)?;
    let psi = field.values_at(xs);
    let psi_t: Vec<Complex<T>> = ps.par_iter().map(|&p| field.momentum_at(p)).collect();
    let norm = T::one() / sqrt_two_pi::<T>();
    Ok(Array2::from_shape_fn((xs.len(), ps.len()), |(i, j)| {
        psi[i].conj() * psi_t[j] * cis(xs[i] * ps[j]) * norm
    }))
}

fn require_position<T: Real>(field: &SampledField<T>) -> Result<()> {
    if field.domain() != Domain::Position {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "expected a position-domain field".into(),
        });
    }
    Ok(())
}

/// Position and momentum marginals of a phase-space grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals<T> {
    /// `Re Σ_j values_ij Δp`, one entry per x node.
    pub position: Vec<T>,
    /// `Re Σ_i values_ij Δx`, one entry per p node.
    pub momentum: Vec<T>,
    /// Largest `|Im|` of either sum.
    pub residual_imag: T,
}

pub fn marginals<T: Real>(grid: &PhaseSpaceGrid<T>) -> Marginals<T> {
    let values = grid.values();
    let dx = grid.x_axis().spacing;
    let dp = grid.p_axis().spacing;
    let zero = Complex::new(T::zero(), T::zero());
    let rows: Vec<Complex<T>> = values
        .outer_iter()
        .map(|row| row.iter().fold(zero, |acc, &v| acc + v) * dp)
        .collect();
    let cols: Vec<Complex<T>> = values
        .columns()
        .into_iter()
        .map(|col| col.iter().fold(zero, |acc, &v| acc + v) * dx)
        .collect();
    let residual_imag = rows
        .iter()
        .chain(&cols)
        .map(|v| v.im.abs())
        .fold(T::zero(), T::max);
    Marginals {
        position: rows.iter().map(|v| v.re).collect(),
        momentum: cols.iter().map(|v| v.re).collect(),
        residual_imag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{apply_obstruction, make_gaussian, Grid1D, UnitMode};
    use std::f64::consts::PI;

    fn gaussian() -> SampledField<f64> {
        let g = Grid1D::new(512, 16.0, UnitMode::Dimensionless).unwrap();
        make_gaussian(g, 1.0, f64::INFINITY, 0.0).unwrap()
    }

    #[test]
    fn origin_value() {
        let k = kr_conjugate(&gaussian()).unwrap();
        let v = k.values()[[256, 256]];
        assert!((v.re - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn unit_point_has_factorized_phase() {
        // x_i = 1 and p_j = 1 are not both nodes of a 16-wide grid; use the
        // off-grid evaluator, which shares the same formula.
        let k = kr_conjugate_at(&gaussian(), &[1.0], &[1.0]).unwrap();
        let mag = (-1.0f64).exp() / (PI * 2f64.sqrt());
        assert!((k[[0, 0]].re - 1f64.cos() * mag).abs() < 1e-12);
        assert!((k[[0, 0]].im - 1f64.sin() * mag).abs() < 1e-12);
    }

    #[test]
    fn zero_field_rows_are_exactly_zero() {
        let f = apply_obstruction(&gaussian(), 0.5).unwrap();
        let k = kr_conjugate(&f).unwrap();
        for (i, x) in f.grid().coordinates().into_iter().enumerate() {
            if x.abs() <= 0.5 {
                assert!(k.values().row(i).iter().all(|v| v.re == 0.0 && v.im == 0.0));
            }
        }
    }

    #[test]
    fn conjugation_is_an_involution() {
        let k = kr_conjugate(&gaussian()).unwrap();
        let kk = kr_from_conjugate(&k).unwrap();
        assert_eq!(kk.kind(), Kind::KR);
        for (a, b) in k.values().iter().zip(kk.values()) {
            assert_eq!(a.re, b.re);
            assert_eq!(a.im, -b.im);
        }
        assert_eq!(kr_from_conjugate(&kk).unwrap(), k);
    }

    #[test]
    fn marginals_reproduce_intensities() {
        let f = gaussian();
        let k = kr_conjugate(&f).unwrap();
        let m = marginals(&k);
        assert!((m.position[256] - 1.0 / PI.sqrt()).abs() < 1e-12);
        for (a, b) in m.position.iter().zip(f.intensity()) {
            assert!((a - b).abs() < 1e-12);
        }
        let spec = to_momentum(&f).unwrap().intensity();
        for (a, b) in m.momentum.iter().zip(spec) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(m.residual_imag < 1e-12);
    }
}
