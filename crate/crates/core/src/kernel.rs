//! Non-negative unit-mass kernels with closed-form two-sided transforms.

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Built-in kernel families. Every family has unit mass and finite
/// exponential moments of all orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Point mass at the origin (local equation).
    Dirac,
    /// Normal density with standard deviation `sigma` centred at `mean`.
    Gaussian { sigma: f64, mean: f64 },
    /// Uniform density on `[-a, a]`.
    Uniform { a: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Dirac => Ok(()),
            KernelSpec::Gaussian { sigma, mean } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(invalid("kernel.sigma", format!("must be positive, got {sigma}")));
                }
                if !mean.is_finite() {
                    return Err(invalid("kernel.mean", "must be finite"));
                }
                Ok(())
            }
            KernelSpec::Uniform { a } => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(invalid("kernel.a", format!("must be positive, got {a}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Dirac => "dirac",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Uniform { .. } => "uniform",
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, KernelSpec::Dirac)
    }

    /// Two-sided transform `khat(z) = ∫ e^{-zs} K(s) ds` for real `z`.
    pub fn transform(&self, z: f64) -> f64 {
        match *self {
            KernelSpec::Dirac => 1.0,
            KernelSpec::Gaussian { sigma, mean } => (0.5 * sigma * sigma * z * z - mean * z).exp(),
            KernelSpec::Uniform { a } => {
                let w = a * z;
                if w.abs() < 1e-4 {
                    1.0 + w * w / 6.0 + w.powi(4) / 120.0
                } else {
                    w.sinh() / w
                }
            }
        }
    }

    /// `ln khat(z)`; finite wherever the transform is, even when the
    /// transform itself overflows.
    pub fn ln_transform(&self, z: f64) -> f64 {
        match *self {
            KernelSpec::Dirac => 0.0,
            KernelSpec::Gaussian { sigma, mean } => 0.5 * sigma * sigma * z * z - mean * z,
            KernelSpec::Uniform { a } => {
                let w = (a * z).abs();
                if w < 1e-4 {
                    w * w / 6.0 - w.powi(4) / 180.0
                } else if w < 20.0 {
                    (w.sinh() / w).ln()
                } else {
                    w + (-(-2.0 * w).exp()).ln_1p() - std::f64::consts::LN_2 - w.ln()
                }
            }
        }
    }

    /// First three derivatives of `ln khat` at `z`.
    pub fn ln_transform_derivs(&self, z: f64) -> [f64; 3] {
        match *self {
            KernelSpec::Dirac => [0.0; 3],
            KernelSpec::Gaussian { sigma, mean } => [sigma * sigma * z - mean, sigma * sigma, 0.0],
            KernelSpec::Uniform { a } => {
                let w = a * z;
                let (f1, f2, f3) = if w.abs() < 0.1 {
                    let w2 = w * w;
                    (
                        w * (1.0 / 3.0 - w2 / 45.0 + 2.0 * w2 * w2 / 945.0 - w2 * w2 * w2 / 4725.0),
                        1.0 / 3.0 - w2 / 15.0 + 2.0 * w2 * w2 / 189.0 - w2 * w2 * w2 / 675.0,
                        w * (-2.0 / 15.0 + 8.0 * w2 / 189.0 - 6.0 * w2 * w2 / 675.0),
                    )
                } else {
                    let coth = 1.0 / w.tanh();
                    let csch2 = coth * coth - 1.0;
                    (
                        coth - 1.0 / w,
                        1.0 / (w * w) - csch2,
                        2.0 * coth * csch2 - 2.0 / (w * w * w),
                    )
                };
                [a * f1, a * a * f2, a * a * a * f3]
            }
        }
    }

    /// Transform on the imaginary axis, `khat(iu) = ∫ e^{-ius} K(s) ds`.
    pub fn transform_imag(&self, u: f64) -> Complex64 {
        match *self {
            KernelSpec::Dirac => Complex64::new(1.0, 0.0),
            KernelSpec::Gaussian { sigma, mean } => {
                let damp = (-0.5 * sigma * sigma * u * u).exp();
                Complex64::new(damp * (mean * u).cos(), -damp * (mean * u).sin())
            }
            KernelSpec::Uniform { a } => {
                let w = a * u;
                let sinc = if w.abs() < 1e-4 { 1.0 - w * w / 6.0 } else { w.sin() / w };
                Complex64::new(sinc, 0.0)
            }
        }
    }

    /// The oscillatory parts `C(u) = ∫K(s)cos(u(ch+s))ds` and
    /// `S(u) = ∫K(s)sin(u(ch+s))ds` of the real inversion formula.
    pub fn oscillatory_parts(&self, u: f64, ch: f64) -> (f64, f64) {
        // e^{-iu ch} khat(iu) = C(u) - i S(u)
        let e = Complex64::from_polar(1.0, -u * ch) * self.transform_imag(u);
        (e.re, -e.im)
    }

    /// Upper bound of `|khat(iu)|` over `|u| >= u_min`.
    pub fn imag_axis_bound(&self, u_min: f64) -> f64 {
        match *self {
            KernelSpec::Dirac => 1.0,
            KernelSpec::Gaussian { sigma, .. } => (-0.5 * sigma * sigma * u_min * u_min).exp(),
            KernelSpec::Uniform { a } => (1.0 / (a * u_min)).min(1.0),
        }
    }

    /// Density value; `None` for the point mass.
    pub fn density(&self, s: f64) -> Option<f64> {
        match *self {
            KernelSpec::Dirac => None,
            KernelSpec::Gaussian { sigma, mean } => {
                let x = (s - mean) / sigma;
                Some((-0.5 * x * x).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
            }
            KernelSpec::Uniform { a } => Some(if s.abs() <= a { 0.5 / a } else { 0.0 }),
        }
    }

    /// Interval outside which the density is below `1e-17` of its peak
    /// (exactly zero for compact support).
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            KernelSpec::Dirac => (0.0, 0.0),
            KernelSpec::Gaussian { sigma, mean } => (mean - 9.0 * sigma, mean + 9.0 * sigma),
            KernelSpec::Uniform { a } => (-a, a),
        }
    }

    /// Exponential growth rate of `e^{-chz} khat(z)` as `z -> side·∞`
    /// (`side = ±1`); `+∞` for super-exponential growth.
    pub fn growth_rate(&self, side: f64, ch: f64) -> f64 {
        match *self {
            KernelSpec::Dirac => -ch * side,
            KernelSpec::Gaussian { .. } => f64::INFINITY,
            KernelSpec::Uniform { a } => a - ch * side,
        }
    }
}

/// `khat(z)` in closed form.
pub fn kernel_transform(kernel: &KernelSpec, z: f64) -> f64 {
    kernel.transform(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        assert_eq!(kernel_transform(&KernelSpec::Dirac, 3.7), 1.0);
        let g = KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 };
        assert!((kernel_transform(&g, 2.0) - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(kernel_transform(&KernelSpec::Uniform { a: 1.0 }, 0.0), 1.0);
    }

    #[test]
    fn uniform_log_derivatives_match_finite_differences() {
        let k = KernelSpec::Uniform { a: 1.3 };
        for &z in &[-7.0, -1.0, -0.05, 0.0, 0.03, 0.5, 2.0, 15.0] {
            let h = 1e-5;
            let d = k.ln_transform_derivs(z);
            let fd1 = (k.ln_transform(z + h) - k.ln_transform(z - h)) / (2.0 * h);
            let fd2 = (k.ln_transform_derivs(z + h)[0] - k.ln_transform_derivs(z - h)[0]) / (2.0 * h);
            let fd3 = (k.ln_transform_derivs(z + h)[1] - k.ln_transform_derivs(z - h)[1]) / (2.0 * h);
            assert!((d[0] - fd1).abs() < 1e-8, "z={z}");
            assert!((d[1] - fd2).abs() < 1e-7, "z={z}");
            assert!((d[2] - fd3).abs() < 1e-6, "z={z}");
        }
    }

    #[test]
    fn ln_transform_is_consistent() {
        for k in [
            KernelSpec::Uniform { a: 0.7 },
            KernelSpec::Gaussian { sigma: 0.4, mean: 0.3 },
        ] {
            for &z in &[-30.0, -2.0, -1e-5, 0.0, 1.0, 25.0] {
                let lhs = k.ln_transform(z);
                let rhs = k.transform(z).ln();
                assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "{k:?} z={z}");
            }
        }
    }

    #[test]
    fn oscillatory_parts_of_point_mass_are_trig() {
        let (c, s) = KernelSpec::Dirac.oscillatory_parts(1.3, 0.7);
        assert!((c - (1.3f64 * 0.7).cos()).abs() < 1e-15);
        assert!((s - (1.3f64 * 0.7).sin()).abs() < 1e-15);
    }
}
