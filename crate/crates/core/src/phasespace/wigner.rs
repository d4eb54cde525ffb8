//! Two independent routes to the Wigner distribution.
//!
//! Both evaluate `W(x,p) = (1/2π) ∫ dε e^{iεp} ψ*(x+ε/2) ψ(x−ε/2)` with
//! `ε = m·Δx`, which needs the field at half-spacing offsets. The direct path
//! interpolates the field onto the half grid; the KR path reconstructs the
//! two-point product `ψ*(x′)ψ(y)` on the same half grid from `K*` alone.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::{take_real, Kind, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::fourier::{HalfGridInterpolator, Twiddles};
use crate::scalar::{lit, sqrt_two_pi, Real};
use crate::wavefield::{Domain, SampledField};

const IMAGINARY_TOLERANCE: f64 = 1e-8;

pub fn direct_wigner<T: Real>(field: &SampledField<T>) -> Result<PhaseSpaceGrid<T>> {
    if field.domain() != Domain::Position {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "expected a position-domain field".into(),
        });
    }
    let grid = *field.grid();
    let n = grid.n_points();
    let fine = HalfGridInterpolator::<T>::new(n).interpolate(field.amplitudes());
    let mut values = correlation_sum(n, grid.spacing(), |a, b| fine[a].conj() * fine[b]);
    take_real(&mut values, lit(IMAGINARY_TOLERANCE), "direct Wigner")?;
    Ok(PhaseSpaceGrid::on_field_grid(
        Kind::Wigner,
        &grid,
        field.wavenumber(),
        values,
    ))
}

/// Wigner distribution computed from a `K*` grid without access to the field.
///
/// `K*` factorizes as `ψ*(x) ψ̃(p) e^{ixp}/√(2π)`. Removing the chirp and
/// inverse transforming along p gives `ψ*(x_i) ψ(y)`; band-limited refinement
/// of both axes onto the half grid then supplies every product the
/// correlation sum needs, so no sample falls between grid nodes.
pub fn wigner_from_kr<T: Real>(krc: &PhaseSpaceGrid<T>) -> Result<PhaseSpaceGrid<T>> {
    krc.require_kind(&[Kind::KRconj, Kind::KrEstimate], "kr_conj")?;
    let grid = krc.conjugate_field_grid()?;
    let n = grid.n_points();
    let half = (n / 2) as i64;
    let twiddles = Twiddles::<T>::new(n);
    let interp = HalfGridInterpolator::<T>::new(n);
    // centered spectrum of ψ is ψ̃ · √(2π)/Δx
    let scale = sqrt_two_pi::<T>() * sqrt_two_pi::<T>() / grid.spacing();

    let rows: Vec<Vec<Complex<T>>> = krc
        .values()
        .as_slice()
        .expect("grids are kept in standard layout")
        .par_chunks(n)
        .enumerate()
        .map(|(i, row)| {
            let xi = i as i64 - half;
            let dechirped: Vec<Complex<T>> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| v * twiddles.product(xi, j as i64 - half).conj() * scale)
                .collect();
            interp.interpolate_spectrum(&dechirped)
        })
        .collect();

    // rows[i][r] = ψ*(x_i) ψ(y_r); refine the first index
    let by_column = Array2::from_shape_fn((2 * n, n), |(r, i)| rows[i][r]);
    let mut product = Array2::<Complex<T>>::zeros((2 * n, 2 * n));
    {
        let out = product.as_slice_mut().expect("fresh array");
        let cols = by_column.as_slice().expect("fresh array");
        out.par_chunks_mut(2 * n)
            .zip(cols.par_chunks(n))
            .for_each(|(dst, src)| dst.copy_from_slice(&interp.interpolate(src)));
    }
    // product[r][s] = ψ*(x_s) ψ(y_r)
    let mut values = correlation_sum(n, grid.spacing(), |a, b| product[[b, a]]);
    take_real(&mut values, lit(IMAGINARY_TOLERANCE), "Wigner from KR")?;
    Ok(PhaseSpaceGrid::on_field_grid(
        Kind::Wigner,
        &grid,
        krc.wavenumber(),
        values,
    ))
}

/// `W_ij = (Δx/2π) Σ_m ρ(2i+m, 2i−m) (−1)^m e^{2πi m j/n}`, with `ρ(a, b)`
/// the product `ψ*(a) ψ(b)` on half-grid indices and zero outside the grid.
fn correlation_sum<T, F>(n: usize, spacing: T, rho: F) -> Array2<Complex<T>>
where
    T: Real,
    F: Fn(usize, usize) -> Complex<T> + Sync,
{
    let fft = FftPlanner::<T>::new().plan_fft_inverse(n);
    let two_n = 2 * n as i64;
    let scale = spacing / (T::PI() + T::PI());
    let mut values = Array2::<Complex<T>>::zeros((n, n));
    values
        .as_slice_mut()
        .expect("fresh array")
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let centre = 2 * i as i64;
            // valid m keep both centre ± m inside [0, 2n)
            let reach = centre.min(two_n - 1 - centre);
            for m in -reach..=reach {
                let term = rho((centre + m) as usize, (centre - m) as usize);
                let slot = m.rem_euclid(n as i64) as usize;
                if m % 2 == 0 {
                    row[slot] = row[slot] + term;
                } else {
                    row[slot] = row[slot] - term;
                }
            }
            fft.process(row);
            for v in row.iter_mut() {
                *v = *v * scale;
            }
        });
    values
}
