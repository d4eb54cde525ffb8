//! Direct double-sum evaluations used as oracles for the FFT-based transforms.
#![allow(dead_code)]

use std::f64::consts::PI;

use krphase::phasespace::{
    characteristic_from_kr, damped_characteristic, direct_wigner, kr_conjugate, p_from_characteristic, q_from_characteristic,
    sharpened_characteristic, wigner_characteristic, wigner_from_kr,
};
use krphase::{make_gaussian, Field, Grid1D, PsGrid, RegSpec, UnitMode};
use ndarray::Array2;
use num_complex::Complex64;

fn cis(phase: f64) -> Complex64 {
    Complex64::new(phase.cos(), phase.sin())
}

/// A chirped, off-center beam on a small grid.
pub fn small_field(n: usize) -> Field {
    let g = Grid1D::new(n, 16.0, UnitMode::Dimensionless).unwrap();
    make_gaussian(g, 1.0, 3.0, 0.3).unwrap()
}

/// `ψ̃(p_j) = (Δx/√2π) Σ_m ψ_m e^{−i p_j x_m}`
pub fn momentum_direct(f: &Field) -> Vec<Complex64> {
    let g = f.grid();
    let xs = g.coordinates();
    let dx = g.spacing();
    g.conjugate()
        .coordinates()
        .iter()
        .map(|&p| {
            xs.iter()
                .zip(f.amplitudes())
                .map(|(&x, &a)| a * cis(-p * x))
                .sum::<Complex64>()
                * (dx / (2.0 * PI).sqrt())
        })
        .collect()
}

/// `K*_ij = ψ*(x_i) ψ̃(p_j) e^{i x_i p_j} / √2π`
pub fn kr_direct(f: &Field) -> Array2<Complex64> {
    let xs = f.grid().coordinates();
    let ps = f.grid().conjugate().coordinates();
    let spec = momentum_direct(f);
    let amps = f.amplitudes();
    Array2::from_shape_fn((xs.len(), ps.len()), |(i, j)| {
        amps[i].conj() * spec[j] * cis(xs[i] * ps[j]) / (2.0 * PI).sqrt()
    })
}

/// `M_KR(x′_k, p′_l) = Δx Δp Σ_ij K*_ij e^{i x_i p′_l + i p_j x′_k}` with the
/// x′ axis on the x nodes and the p′ axis on the p nodes.
pub fn char_kr_direct(krc: &PsGrid) -> Array2<Complex64> {
    let xs = krc.x_axis().coordinates();
    let ps = krc.p_axis().coordinates();
    let scale = krc.x_axis().spacing * krc.p_axis().spacing;
    let v = krc.values();
    Array2::from_shape_fn((xs.len(), ps.len()), |(k, l)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &p) in ps.iter().enumerate() {
                acc += v[(i, j)] * cis(x * ps[l] + p * xs[k]);
            }
        }
        acc * scale
    })
}

/// `M_W = e^{i x′ p′/2} M_KR`
pub fn char_w_direct(m_kr: &Array2<Complex64>, xs: &[f64], ps: &[f64]) -> Array2<Complex64> {
    Array2::from_shape_fn(m_kr.dim(), |(k, l)| m_kr[(k, l)] * cis(xs[k] * ps[l] / 2.0))
}

/// `(Δx Δp / 4π²) Σ_kl M(x′_k, p′_l) e^{−i(x′_k p_j + p′_l x_i)}`
pub fn inverse_char_direct(m: &Array2<Complex64>, xs: &[f64], ps: &[f64]) -> Array2<Complex64> {
    let scale = (xs[1] - xs[0]) * (ps[1] - ps[0]) / (4.0 * PI * PI);
    Array2::from_shape_fn(m.dim(), |(i, j)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &xp) in xs.iter().enumerate() {
            for (l, &pp) in ps.iter().enumerate() {
                acc += m[(k, l)] * cis(-(xp * ps[j] + pp * xs[i]));
            }
        }
        acc * scale
    })
}

/// `W(x_i, p_j) = (Δx/2π) Σ_m ψ*(x_i + mΔx/2) ψ(x_i − mΔx/2) e^{i m Δx p_j}`
/// over every `m` keeping both points on the half-spacing grid.
pub fn wigner_direct(f: &Field) -> Array2<f64> {
    let g = f.grid();
    let n = g.n_points();
    let dx = g.spacing();
    let x0 = g.coordinate(0);
    let fine_x: Vec<f64> = (0..2 * n).map(|a| x0 + a as f64 * dx / 2.0).collect();
    let fine = f.values_at(&fine_x);
    let ps = g.conjugate().coordinates();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let c = 2 * i as i64;
        let reach = c.min(2 * n as i64 - 1 - c);
        let mut acc = Complex64::new(0.0, 0.0);
        for m in -reach..=reach {
            acc += fine[(c + m) as usize].conj() * fine[(c - m) as usize] * cis(m as f64 * dx * ps[j]);
        }
        (acc * dx / (2.0 * PI)).re
    })
}

/// `M_W · e^{−¼(σ²p′² + x′²/σ²)}`
pub fn damped_direct(m_w: &Array2<Complex64>, xs: &[f64], ps: &[f64], sigma: f64) -> Array2<Complex64> {
    Array2::from_shape_fn(m_w.dim(), |(k, l)| {
        let (a, b) = (xs[k] / sigma, ps[l] * sigma);
        m_w[(k, l)] * (-(a * a + b * b) / 4.0).exp()
    })
}

/// Q from the direct characteristic function.
pub fn q_direct(m_w: &Array2<Complex64>, xs: &[f64], ps: &[f64], sigma: f64) -> Array2<f64> {
    inverse_char_direct(&damped_direct(m_w, xs, ps, sigma), xs, ps).mapv(|v| v.re)
}

fn max_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_diff_real(a: &PsGrid, b: &Array2<f64>) -> f64 {
    a.values().iter().zip(b).map(|(x, y)| (x.re - y).abs()).fold(0.0, f64::max)
}

/// Largest absolute error of each FFT-based transform against its direct sum.
pub struct BruteForceReport {
    pub kr: f64,
    pub char_kr: f64,
    pub char_w: f64,
    pub direct_wigner: f64,
    pub wigner_from_kr: f64,
    pub damped: f64,
    /// `None` when Q itself is rejected, as for fields too sharp for the grid.
    pub q: Option<f64>,
    pub p_inverse: f64,
    /// `M_KR(−x′,−p′) = e^{−ix′p′} conj M_KR(x′,p′)` on interior nodes.
    pub char_symmetry: f64,
}

impl BruteForceReport {
    pub fn worst(&self) -> f64 {
        [
            self.kr,
            self.char_kr,
            self.char_w,
            self.direct_wigner,
            self.wigner_from_kr,
            self.damped,
            self.q.unwrap_or(0.0),
            self.p_inverse,
            self.char_symmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn brute_force_report(f: &Field, sigma: f64) -> BruteForceReport {
    let krc = kr_conjugate(f).unwrap();
    let xs = krc.x_axis().coordinates();
    let ps = krc.p_axis().coordinates();
    let n = xs.len();

    let m_kr = characteristic_from_kr(&krc).unwrap();
    let m_kr_direct = char_kr_direct(&krc);
    let m_w = wigner_characteristic(&m_kr).unwrap();
    let m_w_direct = char_w_direct(&m_kr_direct, &xs, &ps);

    let damped = damped_characteristic(&m_kr, sigma).unwrap();
    let damped_ref = damped_direct(&m_w_direct, &xs, &ps, sigma);
    let q = q_from_characteristic(&m_kr, sigma)
        .ok()
        .map(|q| max_diff_real(&q, &q_direct(&m_w_direct, &xs, &ps, sigma)));

    let reg = RegSpec::default();
    let sharp = sharpened_characteristic(&m_kr, sigma, &reg).unwrap();
    let p = p_from_characteristic(&m_kr, sigma, &reg).unwrap();
    let p_ref = inverse_char_direct(sharp.values(), &xs, &ps).mapv(|v| v.re);

    let w_ref = wigner_direct(f);
    let mut symmetry = 0.0f64;
    let v = m_kr.values();
    for k in 1..n {
        for l in 1..n {
            let lhs = v[(n - k, n - l)];
            let rhs = cis(-xs[k] * ps[l]) * v[(k, l)].conj();
            symmetry = symmetry.max((lhs - rhs).norm());
        }
    }

    BruteForceReport {
        kr: max_diff(krc.values(), &kr_direct(f)),
        char_kr: max_diff(m_kr.values(), &m_kr_direct),
        char_w: max_diff(m_w.values(), &m_w_direct),
        direct_wigner: max_diff_real(&direct_wigner(f).unwrap(), &w_ref),
        wigner_from_kr: max_diff_real(&wigner_from_kr(&krc).unwrap(), &w_ref),
        damped: max_diff(damped.values(), &damped_ref),
        q,
        p_inverse: max_diff_real(&p.grid, &p_ref),
        char_symmetry: symmetry,
    }
}
