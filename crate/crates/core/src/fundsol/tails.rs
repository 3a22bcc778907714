//! Exponential tail models built from the real zeros of `chi`.

use crate::charfun::{CharParams, RootSet};
use crate::kernel::KernelSpec;

/// `(coeff + t_coeff·t)·e^{rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub rate: f64,
    pub coeff: f64,
    pub t_coeff: f64,
}

impl ExpTerm {
    pub fn simple(rate: f64, coeff: f64) -> Self {
        ExpTerm {
            rate,
            coeff,
            t_coeff: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.coeff + self.t_coeff * t) * (self.rate * t).exp()
    }

    /// `∫_x^∞ e^{-zt}·term dt`, requires `rate < z`.
    fn laplace_above(&self, x: f64, z: f64) -> f64 {
        let s = self.rate - z;
        let e = (s * x).exp();
        -e * (self.coeff / s + self.t_coeff * (x / s - 1.0 / (s * s)))
    }

    /// `∫_{-∞}^x e^{-zt}·term dt`, requires `rate > z`.
    fn laplace_below(&self, x: f64, z: f64) -> f64 {
        let s = self.rate - z;
        let e = (s * x).exp();
        e * (self.coeff / s + self.t_coeff * (x / s - 1.0 / (s * s)))
    }
}

/// Finite sum of exponential terms, slowest decay first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TailModel {
    pub terms: Vec<ExpTerm>,
}

/// Zeros closer than this are treated as one double zero.
const DOUBLE_SEPARATION: f64 = 1e-4;

impl TailModel {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|e| e.eval(t)).sum()
    }

    pub fn leading(&self) -> Option<ExpTerm> {
        self.terms.first().copied()
    }

    pub fn scaled(&self, s: f64) -> TailModel {
        TailModel {
            terms: self
                .terms
                .iter()
                .map(|e| ExpTerm {
                    rate: e.rate,
                    coeff: s * e.coeff,
                    t_coeff: s * e.t_coeff,
                })
                .collect(),
        }
    }

    pub fn laplace_above(&self, x: f64, z: f64) -> f64 {
        self.terms.iter().map(|e| e.laplace_above(x, z)).sum()
    }

    pub fn laplace_below(&self, x: f64, z: f64) -> f64 {
        self.terms.iter().map(|e| e.laplace_below(x, z)).sum()
    }

    /// Tail of `K ∗ f` when `f` has this tail:
    /// `K∗[(a + bt)e^{λt}] = e^{λt}[(a khat(λ) + b khat'(λ)) + b khat(λ) t]`.
    pub fn convolved(&self, kernel: &KernelSpec) -> TailModel {
        TailModel {
            terms: self
                .terms
                .iter()
                .map(|e| {
                    let k = kernel.transform(e.rate);
                    let k1 = k * kernel.ln_transform_derivs(e.rate)[0];
                    ExpTerm {
                        rate: e.rate,
                        coeff: e.coeff * k + e.t_coeff * k1,
                        t_coeff: e.t_coeff * k,
                    }
                })
                .collect(),
        }
    }
}

/// Residue of `e^{zt}/chi` at a double zero `z` where `chi' = 0`:
/// `e^{zt}(2t/chi'' - 2chi'''/(3chi''^2))`.
fn double_term(p: &CharParams, z: f64, sign: f64) -> ExpTerm {
    let [_, _, d2, d3] = p.derivs(z);
    ExpTerm {
        rate: z,
        coeff: sign * (-2.0 * d3 / (3.0 * d2 * d2)),
        t_coeff: sign * 2.0 / d2,
    }
}

fn side_model(
    p: &CharParams,
    near: crate::charfun::Root,
    far: Option<crate::charfun::Root>,
    sign: f64,
) -> (TailModel, bool) {
    let merged = match far {
        Some(f) => (near.z - f.z).abs() < DOUBLE_SEPARATION,
        None => near.near_degenerate(),
    };
    if merged {
        let z = far.map_or(near.z, |f| 0.5 * (near.z + f.z));
        return (
            TailModel {
                terms: vec![double_term(p, z, sign)],
            },
            true,
        );
    }
    let mut terms = vec![ExpTerm::simple(near.z, sign / near.chi_prime)];
    if let Some(f) = far {
        terms.push(ExpTerm::simple(f.z, sign / f.chi_prime));
    }
    (TailModel { terms }, false)
}

/// Tail of `v` as `t -> +∞` (residues at the negative zeros) and whether it
/// uses the double-zero form.
pub fn right_model(p: &CharParams, roots: &RootSet) -> (TailModel, bool) {
    side_model(p, roots.lambda1, roots.lambda2, 1.0)
}

/// Tail of `v` as `t -> -∞` (minus the residues at the positive zeros).
pub fn left_model(p: &CharParams, roots: &RootSet) -> (TailModel, bool) {
    side_model(p, roots.lambda0, roots.lambda_m1, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_of_terms() {
        let e = ExpTerm {
            rate: -1.0,
            coeff: 2.0,
            t_coeff: 3.0,
        };
        // ∫_0^∞ e^{-t}(2 + 3t) dt = 5
        assert!((e.laplace_above(0.0, 0.0) - 5.0).abs() < 1e-14);
        let l = ExpTerm::simple(2.0, 1.0);
        // ∫_{-∞}^0 e^{-t} e^{2t} dt = 1
        assert!((l.laplace_below(0.0, 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_with_point_mass_is_identity() {
        let m = TailModel {
            terms: vec![ExpTerm {
                rate: -0.5,
                coeff: 1.0,
                t_coeff: 2.0,
            }],
        };
        assert_eq!(m.convolved(&KernelSpec::Dirac), m);
    }

    #[test]
    fn gaussian_convolution_of_exponential() {
        let k = KernelSpec::Gaussian { sigma: 0.7, mean: 0.2 };
        let m = TailModel {
            terms: vec![ExpTerm::simple(-1.3, 1.0)],
        };
        let c = m.convolved(&k);
        // ∫ K(s) e^{λ(t-s)} ds = khat(λ) e^{λt}
        assert!((c.terms[0].coeff - k.transform(-1.3)).abs() < 1e-15);
    }
}
