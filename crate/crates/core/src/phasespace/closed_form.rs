//! Analytic distributions of the Gaussian beam
//! `ψ(x) = (πσ²)^{-1/4} exp(−x²/2σ² + i k x²/2R)` centered at the origin.
//!
//! Pass `f64::INFINITY` for `r` at the waist.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `1/(2σ²) − i k/(2R)`: the field is `N exp(−β x²)`.
fn beta(sigma: f64, r: f64, k: f64) -> Complex64 {
    let curvature = if r.is_infinite() { 0.0 } else { k / (2.0 * r) };
    Complex64::new(1.0 / (2.0 * sigma * sigma), -curvature)
}

fn norm(sigma: f64) -> f64 {
    (PI * sigma * sigma).powf(-0.25)
}

pub fn gaussian_field(x: f64, sigma: f64, r: f64, k: f64) -> Complex64 {
    norm(sigma) * (-beta(sigma, r, k) * x * x).exp()
}

/// `ψ̃(p) = N / √(2β) · exp(−p²/4β)` under the unitary `e^{−ipx}/√(2π)` kernel.
///
/// The amplitude envelope is `exp(−p² / (8σ²[(1/2σ²)² + (k/2R)²]))`.
pub fn gaussian_momentum(p: f64, sigma: f64, r: f64, k: f64) -> Complex64 {
    let b = beta(sigma, r, k);
    norm(sigma) / (2.0 * b).sqrt() * (-(p * p) / (4.0 * b)).exp()
}

/// `K*(x, p) = ψ*(x) ψ̃(p) e^{ixp} / √(2π)`
pub fn gaussian_kr_conjugate(x: f64, p: f64, sigma: f64, r: f64, k: f64) -> Complex64 {
    gaussian_field(x, sigma, r, k).conj()
        * gaussian_momentum(p, sigma, r, k)
        * Complex64::from_polar(1.0, x * p)
        / (2.0 * PI).sqrt()
}

/// `W(x, p) = (1/π) exp(−x²/σ²) exp(−σ²(p − kx/R)²)`
pub fn gaussian_wigner(x: f64, p: f64, sigma: f64, r: f64, k: f64) -> f64 {
    let tilt = if r.is_infinite() { 0.0 } else { k * x / r };
    let q = p - tilt;
    (-(x * x) / (sigma * sigma) - sigma * sigma * q * q).exp() / PI
}

/// `M_W(x′, p′) = exp(−x′²/4σ²) exp(−σ²(p′ + kx′/R)²/4)`
pub fn gaussian_wigner_characteristic(xp: f64, pp: f64, sigma: f64, r: f64, k: f64) -> f64 {
    let tilt = if r.is_infinite() { 0.0 } else { k * xp / r };
    let q = pp + tilt;
    (-(xp * xp) / (4.0 * sigma * sigma) - sigma * sigma * q * q / 4.0).exp()
}

/// Q of the beam at its waist for kernel scale `s`:
/// `exp(−x²/(σ²+s²) − p²/(1/σ²+1/s²)) / (π √((σ²+s²)(1/σ²+1/s²)))`.
pub fn gaussian_q(x: f64, p: f64, sigma: f64, s: f64) -> f64 {
    let ax = sigma * sigma + s * s;
    let ap = 1.0 / (sigma * sigma) + 1.0 / (s * s);
    (-(x * x) / ax - p * p / ap).exp() / (PI * (ax * ap).sqrt())
}
