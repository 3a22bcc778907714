//! Inversion of transforms along the imaginary axis by the full-line
//! trapezoid rule.
//!
//! For `F(-u) = conj F(u)` the sum
//! `(Δu/2π)[F(0) + 2 Σ_k Re(F(kΔu) e^{ikΔu t})]` equals the periodic
//! summation `Σ_m f(t + 2πm/Δu)` of the inverse transform `f` up to the
//! cutoff error, so the period `2π/Δu` controls aliasing and the cutoff `U`
//! controls truncation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest admissible cutoff.
const MAX_CUTOFF: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct SpectralSum {
    du: f64,
    coeffs: Vec<Complex64>,
}

impl SpectralSum {
    /// Samples `f` on `0, Δu, ..., ≥cutoff` with `Δu = 2π/period`.
    pub fn new<F>(period: f64, cutoff: f64, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let du = 2.0 * std::f64::consts::PI / period;
        let k = (cutoff / du).ceil() as usize;
        let coeffs = (0..=k).into_par_iter().map(|j| f(j as f64 * du)).collect();
        SpectralSum { du, coeffs }
    }

    pub fn terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        const RESEED: usize = 256;
        let w = self.du * t;
        let step = Complex64::from_polar(1.0, w);
        let mut acc = 0.0;
        for (b, chunk) in self.coeffs.chunks(RESEED).enumerate() {
            let mut z = Complex64::from_polar(1.0, (b * RESEED) as f64 * w);
            let mut part = 0.0;
            for c in chunk {
                part += c.re * z.re - c.im * z.im;
                z *= step;
            }
            acc += part;
        }
        // the k = 0 term enters with weight 1/2
        (self.du / std::f64::consts::PI) * (acc - 0.5 * self.coeffs[0].re)
    }
}

/// Smallest cutoff (within 1%) at which `bound` drops below `tol`.
pub fn choose_cutoff<B: Fn(f64) -> f64>(bound: B, tol: f64) -> Result<f64> {
    let mut hi = 8.0;
    while !(bound(hi) <= tol) {
        hi *= 2.0;
        if hi > MAX_CUTOFF {
            return Err(Error::QuadratureTolExceeded {
                achieved: bound(MAX_CUTOFF),
                requested: tol,
            });
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if bound(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `∫_U^∞ du / ((u^2 - a)(u^2 - b)) ≤ 1/(3U^3 (1 - a/U^2)(1 - b/U^2))`;
/// infinite when the denominators may vanish.
pub fn quartic_tail(u: f64, a: f64, b: f64) -> f64 {
    let (fa, fb) = (1.0 - a / (u * u), 1.0 - b / (u * u));
    if fa <= 0.0 || fb <= 0.0 {
        return f64::INFINITY;
    }
    1.0 / (3.0 * u * u * u * fa * fb)
}

/// `∫_U^∞ du / (u^2 - a) ≤ 1/(U (1 - a/U^2))`.
pub fn quadratic_tail(u: f64, a: f64) -> f64 {
    let fa = 1.0 - a / (u * u);
    if fa <= 0.0 {
        return f64::INFINITY;
    }
    1.0 / (u * fa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_lorentzian() {
        // (1/2π)∫ e^{iut} · 2/(1+u^2) du = e^{-|t|}
        let s = SpectralSum::new(80.0, 2e5, |u| Complex64::new(2.0 / (1.0 + u * u), 0.0));
        for t in [-2.0, 0.0, 0.5, 3.0] {
            assert!((s.eval(t) - (-f64::abs(t)).exp()).abs() < 2e-5, "t={t}");
        }
    }

    #[test]
    fn inverts_gaussian_to_machine_precision() {
        let s = SpectralSum::new(40.0, 40.0, |u| Complex64::new((-0.5 * u * u).exp(), 0.0));
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        for t in [0.0, 1.0, 2.5] {
            assert!((s.eval(t) - (-0.5 * t * t).exp() / norm).abs() < 1e-15);
        }
    }

    #[test]
    fn cutoff_search() {
        let u = choose_cutoff(|u| 1.0 / (u * u * u), 1e-9).unwrap();
        assert!((1000.0..1011.0).contains(&u));
        assert!(choose_cutoff(|_| 1.0, 1e-3).is_err());
    }
}
