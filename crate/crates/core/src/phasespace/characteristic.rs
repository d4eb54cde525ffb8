//! Characteristic functions and the P / Q distributions derived from them.
//!
//! With `M_KR(x′,p′) = ∫∫ K*(x,p) e^{i x p′ + i p x′} dx dp` the Wigner
//! characteristic function is `M_W = e^{i x′p′/2} M_KR`, and P and Q follow by
//! multiplying with `e^{±¼(σ²p′² + x′²/σ²)}` and transforming back with
//! `(1/4π²) ∫∫ … e^{−i x p′ − i p x′} dx′ dp′`.

use std::collections::VecDeque;

use ndarray::Array2;
use num_complex::Complex;

use super::{take_real, Kind, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::fourier::{transform_2d_transposed, Twiddles};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Relative tolerance for the imaginary part and negativity of Q.
const Q_TOLERANCE: f64 = 1e-8;

/// Share of the sharpened characteristic energy that the kernel cap may remove
/// before a P result is flagged ill-conditioned.
const ILL_CONDITIONED_FRACTION: f64 = 0.5;

/// Regularization of the diverging P kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegSpec<T> {
    /// Keep points where `|M_W| > floor · max |M_W|`.
    pub floor: T,
    /// Width in samples of the raised-cosine edge inside the kept region.
    pub taper_samples: usize,
    /// Also drop points where the sharpening kernel exceeds this value.
    /// `None` disables the cap; the transform then fails if the kernel overflows.
    pub kernel_cap: Option<T>,
}

impl<T: Real> Default for RegSpec<T> {
    fn default() -> Self {
        Self {
            floor: lit(1e-6),
            taper_samples: 4,
            kernel_cap: Some(lit(1e12)),
        }
    }
}

/// Regularized P together with the diagnostics of its mask.
#[derive(Clone, Debug)]
pub struct RegularizedP<T: Real> {
    pub grid: PhaseSpaceGrid<T>,
    /// Set when the kernel cap removes more than half of the sharpened
    /// characteristic energy: P is then not a well-behaved function.
    pub ill_conditioned: bool,
    /// Fraction of `Σ|M_W · kernel|²` over the floor region removed by the cap.
    pub removed_energy_fraction: T,
    /// Largest `|Im P|` relative to the peak, before it was discarded.
    pub imaginary_residual: T,
    /// Fraction of characteristic-plane samples with a nonzero mask.
    pub kept_fraction: T,
}

/// `M_KR(x′_k, p′_l) = Δx Δp Σ_ij K*_ij e^{i x_i p′_l + i p_j x′_k}`; the x′ axis
/// equals the x grid and the p′ axis equals the p grid.
pub fn characteristic_from_kr<T: Real>(krc: &PhaseSpaceGrid<T>) -> Result<PhaseSpaceGrid<T>> {
    krc.require_kind(&[Kind::KRconj, Kind::KrEstimate], "kr_conj")?;
    krc.conjugate_field_grid()?;
    let scale = krc.x_axis().spacing * krc.p_axis().spacing;
    let mut values = transform_2d_transposed(krc.values(), true);
    values.mapv_inplace(|v| v * scale);
    Ok(krc.with_values(Kind::CharKR, values))
}

/// `M_W = e^{i x′p′/2} M_KR`
pub fn wigner_characteristic<T: Real>(char_kr: &PhaseSpaceGrid<T>) -> Result<PhaseSpaceGrid<T>> {
    if char_kr.kind() == Kind::CharW {
        return Ok(char_kr.clone());
    }
    char_kr.require_kind(&[Kind::CharKR], "char_kr")?;
    let grid = char_kr.conjugate_field_grid()?;
    let n = grid.n_points();
    let half = (n / 2) as i64;
    // x′_k p′_l / 2 = 2π (k−n/2)(l−n/2) / 2n
    let twiddles = Twiddles::<T>::new(2 * n);
    let values = Array2::from_shape_fn((n, n), |(k, l)| {
        char_kr.values()[[k, l]] * twiddles.product(k as i64 - half, l as i64 - half)
    });
    Ok(char_kr.with_values(Kind::CharW, values))
}

/// `ln` of the P sharpening kernel, `¼(σ²p′² + x′²/σ²)`, per characteristic node.
fn log_kernel<T: Real>(grid: &PhaseSpaceGrid<T>, sigma: T) -> Array2<T> {
    let xs = grid.x_axis().coordinates();
    let ps = grid.p_axis().coordinates();
    let quarter = lit::<T>(0.25);
    Array2::from_shape_fn(grid.dim(), |(k, l)| {
        let x = xs[k] / sigma;
        let p = ps[l] * sigma;
        quarter * (p * p + x * x)
    })
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_ref",
            reason: format!("must be positive and finite, got {sigma}"),
        });
    }
    Ok(())
}

/// Q characteristic function `M_W · e^{−¼(σ²p′² + x′²/σ²)}`.
pub fn damped_characteristic<T: Real>(
    char_kr: &PhaseSpaceGrid<T>,
    sigma: T,
) -> Result<PhaseSpaceGrid<T>> {
    check_sigma(sigma)?;
    let mw = wigner_characteristic(char_kr)?;
    let log_k = log_kernel(&mw, sigma);
    let values = ndarray::Zip::from(mw.values())
        .and(&log_k)
        .map_collect(|&m, &lk| m * (-lk).exp());
    Ok(mw.with_values(Kind::CharW, values))
}

struct Mask<T> {
    weights: Array2<T>,
    removed_energy_fraction: T,
    kept_fraction: T,
}

fn build_mask<T: Real>(mw: &PhaseSpaceGrid<T>, log_k: &Array2<T>, reg: &RegSpec<T>) -> Mask<T> {
    let (rows, cols) = mw.dim();
    let peak = mw.peak();
    let threshold = reg.floor * peak;
    let log_cap = reg.kernel_cap.map(|c| c.ln());

    let above_floor = mw.values().mapv(|v| v.norm() > threshold);
    let mut keep = above_floor.clone();
    if let Some(cap) = log_cap {
        ndarray::Zip::from(&mut keep)
            .and(log_k)
            .for_each(|k, &lk| *k = *k && lk <= cap);
    }

    // energy of the sharpened function over the floor region, in the log domain
    let log_energy = ndarray::Zip::from(mw.values())
        .and(log_k)
        .map_collect(|&m, &lk| (m.norm_sqr()).ln() + lk + lk);
    let total = log_sum_exp(log_energy.iter().zip(above_floor.iter()).filter(|(_, &a)| a).map(|(&e, _)| e));
    let kept = log_sum_exp(log_energy.iter().zip(keep.iter()).filter(|(_, &k)| k).map(|(&e, _)| e));
    let removed_energy_fraction = match (total, kept) {
        (Some(t), Some(k)) => T::one() - (k - t).exp(),
        (Some(_), None) => T::one(),
        _ => T::zero(),
    };

    // Chebyshev distance to the nearest dropped node; beyond the grid counts as dropped
    let taper = reg.taper_samples;
    let unreached = usize::MAX;
    let mut dist = Array2::from_elem((rows, cols), unreached);
    let mut queue = VecDeque::new();
    for ((r, c), &k) in keep.indexed_iter() {
        if !k {
            dist[[r, c]] = 0;
            queue.push_back((r, c));
        } else if r == 0 || c == 0 || r + 1 == rows || c + 1 == cols {
            dist[[r, c]] = 1;
            queue.push_back((r, c));
        }
    }
    while let Some((r, c)) = queue.pop_front() {
        let d = dist[[r, c]];
        if d >= taper {
            continue;
        }
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if dist[[nr, nc]] > d + 1 {
                    dist[[nr, nc]] = d + 1;
                    queue.push_back((nr, nc));
                }
            }
        }
    }
    let weights = dist.mapv(|d| {
        if d == 0 {
            T::zero()
        } else if d >= taper {
            T::one()
        } else {
            let phase = T::PI() * from_usize::<T>(d) / from_usize::<T>(taper);
            lit::<T>(0.5) * (T::one() - phase.cos())
        }
    });
    let kept_count = keep.iter().filter(|&&k| k).count();
    Mask {
        weights,
        removed_energy_fraction,
        kept_fraction: from_usize::<T>(kept_count) / from_usize::<T>(rows * cols),
    }
}

fn log_sum_exp<T: Real>(values: impl Iterator<Item = T>) -> Option<T> {
    let values: Vec<T> = values.filter(|v| v.is_finite()).collect();
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return None;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    Some(max + sum.ln())
}

/// Regularized P characteristic function `M_W · e^{+¼(σ²p′² + x′²/σ²)} · Mask`.
pub fn sharpened_characteristic<T: Real>(
    char_kr: &PhaseSpaceGrid<T>,
    sigma: T,
    reg: &RegSpec<T>,
) -> Result<PhaseSpaceGrid<T>> {
    sharpen_masked(char_kr, sigma, reg).map(|(grid, _, _)| grid)
}

fn sharpen_masked<T: Real>(
    char_kr: &PhaseSpaceGrid<T>,
    sigma: T,
    reg: &RegSpec<T>,
) -> Result<(PhaseSpaceGrid<T>, T, T)> {
    check_sigma(sigma)?;
    if !(reg.floor >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "floor",
            reason: "must be nonnegative".into(),
        });
    }
    if let Some(cap) = reg.kernel_cap {
        if !(cap > T::one()) {
            return Err(Error::InvalidParameter {
                name: "kernel_cap",
                reason: format!("must exceed 1, got {cap}"),
            });
        }
    }
    let mw = wigner_characteristic(char_kr)?;
    let log_k = log_kernel(&mw, sigma);
    let mask = build_mask(&mw, &log_k, reg);
    let mut values = Array2::zeros(mw.dim());
    let xs = mw.x_axis().coordinates();
    let ps = mw.p_axis().coordinates();
    for ((k, l), out) in values.indexed_iter_mut() {
        let w = mask.weights[[k, l]];
        if w == T::zero() {
            continue;
        }
        let v: Complex<T> = mw.values()[[k, l]] * (log_k[[k, l]].exp() * w);
        if !v.re.is_finite() || !v.im.is_finite() {
            let radius = (xs[k] / sigma).hypot(ps[l] * sigma);
            return Err(Error::KernelOverflow {
                radius: to_f64(radius),
            });
        }
        *out = v;
    }
    Ok((
        mw.with_values(Kind::CharW, values),
        mask.removed_energy_fraction,
        mask.kept_fraction,
    ))
}

/// `(1/4π²) Σ_kl M(x′_k, p′_l) e^{−i x p′_l − i p x′_k} Δx′ Δp′`
fn inverse_characteristic<T: Real>(m: &PhaseSpaceGrid<T>) -> Array2<Complex<T>> {
    let two_pi = T::PI() + T::PI();
    let scale = m.x_axis().spacing * m.p_axis().spacing / (two_pi * two_pi);
    let mut out = transform_2d_transposed(m.values(), false);
    out.mapv_inplace(|v| v * scale);
    out
}

pub fn q_from_characteristic<T: Real>(
    char_kr: &PhaseSpaceGrid<T>,
    sigma_ref: T,
) -> Result<PhaseSpaceGrid<T>> {
    let damped = damped_characteristic(char_kr, sigma_ref)?;
    let mut values = inverse_characteristic(&damped);
    take_real(&mut values, lit(Q_TOLERANCE), "Q distribution")?;
    let peak = values.iter().map(|v| v.re.abs()).fold(T::zero(), T::max);
    let min = values.iter().map(|v| v.re).fold(T::infinity(), T::min);
    if min < -(peak * lit(Q_TOLERANCE)) {
        return Err(Error::NegativeQ {
            min: to_f64(min / peak),
            threshold: Q_TOLERANCE,
        });
    }
    Ok(damped.with_values(Kind::Q, values))
}

pub fn p_from_characteristic<T: Real>(
    char_kr: &PhaseSpaceGrid<T>,
    sigma_ref: T,
    regularizer: &RegSpec<T>,
) -> Result<RegularizedP<T>> {
    let (sharpened, removed_energy_fraction, kept_fraction) =
        sharpen_masked(char_kr, sigma_ref, regularizer)?;
    let mut values = inverse_characteristic(&sharpened);
    let peak = values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let worst = values.iter().map(|v| v.im.abs()).fold(T::zero(), T::max);
    let imaginary_residual = if peak > T::zero() { worst / peak } else { T::zero() };
    values.mapv_inplace(|v| Complex::new(v.re, T::zero()));
    Ok(RegularizedP {
        grid: sharpened.with_values(Kind::P, values),
        ill_conditioned: removed_energy_fraction > lit(ILL_CONDITIONED_FRACTION),
        removed_energy_fraction,
        imaginary_residual,
        kept_fraction,
    })
}
