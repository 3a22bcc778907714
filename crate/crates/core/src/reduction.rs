//! Reduction of the profile equation to the monotone convolution equation
//! `phi = N ∗ g1(phi(· - ch))` with `N = -(1 + xi) K∗v(·, xi)` and
//! `g1(s) = (g(s) + xi s) / (1 + xi)`.

use crate::charfun::{chi0_positive_roots, real_root_set, xi_star, CharParams};
use crate::error::{Error, Result};
use crate::fundsol::check::LaplaceProbe;
use crate::fundsol::{fundamental_solution, FundamentalSolution, TailModel};
use crate::grid::GridFunction;
use crate::model::ModelSpec;
use crate::numerics::gregory;

/// Largest admissible `delta`.
pub const DELTA_CAP: f64 = 0.1;

/// Gain `xi = |g'(kappa)| + delta` with `delta = min(0.1, (xi* - |g'(kappa)|) / 2)`.
pub fn build_xi(model: &ModelSpec) -> Result<(f64, f64)> {
    let gk = model.constants.g_prime_kappa.abs();
    let xs = xi_star(model.c, model.h, &model.kernel)?;
    if !(gk < xs) {
        return Err(Error::NotInDkappa {
            g_prime_kappa_abs: gk,
            xi_star: xs,
        });
    }
    let delta = DELTA_CAP.min(0.5 * (xs - gk));
    let xi = gk + delta;
    check_interlacing(model, xi)?;
    Ok((xi, delta))
}

/// `lambda1(xi) < lambda1(|g'k|) < 0 < mu0 < mu1 < lambda0(|g'k|) < lambda0(xi)`.
fn check_interlacing(model: &ModelSpec, xi: f64) -> Result<()> {
    let pk = CharParams::chi_kappa(model);
    let rk = real_root_set(&pk)?;
    let rx = real_root_set(&pk.with_xi(xi))?;
    let mut chain = vec![rx.lambda1.z, rk.lambda1.z, 0.0];
    if let Some(mu) = chi0_positive_roots(model) {
        chain.push(mu.mu0);
        chain.push(mu.mu1);
    }
    chain.push(rk.lambda0.z);
    chain.push(rx.lambda0.z);
    // mu0 = mu1 on the boundary of D_0
    let ordered = chain.windows(2).all(|w| w[0] <= w[1]) && rx.lambda1.z < rk.lambda1.z && rk.lambda0.z < rx.lambda0.z;
    if !ordered {
        return Err(Error::ConvergenceFailure {
            what: "root interlacing",
            last: chain,
        });
    }
    Ok(())
}

/// `g1(s) = (g(s) + xi s) / (1 + xi)`.
pub fn g1(model: &ModelSpec, xi: f64, s: f64) -> f64 {
    (model.g.eval(s) + xi * s) / (1.0 + xi)
}

/// `g1(min(s, kappa))`: bounded monotone extension of `g1` above `kappa`.
pub fn g1_tilde(model: &ModelSpec, xi: f64, s: f64) -> Result<f64> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeInput(s));
    }
    Ok(g1(model, xi, s.min(model.kappa())))
}

/// Reduction kernel with its certificates.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub xi: f64,
    pub delta: f64,
    /// `N` samples on the grid of the fundamental solution.
    pub n: GridFunction,
    pub n_right: TailModel,
    pub n_left: TailModel,
    pub g1_prime_0: f64,
    pub g1_prime_kappa: f64,
    /// Convergence strip `(lambda1(xi), lambda0(xi))` of the transform of `N`.
    pub strip: (f64, f64),
    /// `N'(0+) - N'(0-)`.
    pub slope_jump: f64,
    pub min_sample: f64,
    /// `∫N - 1`.
    pub mass_error: f64,
    pub laplace: Vec<LaplaceProbe>,
    /// `g1'(0) e^{-mu0 ch} ∫N e^{-mu0 s} ds - 1`, when `mu0` exists.
    pub linearization_error: Option<f64>,
    pub fs: FundamentalSolution,
}

impl Reduction {
    /// `N(s)` at any real `s`.
    pub fn n_at(&self, s: f64) -> f64 {
        let scale = -(1.0 + self.xi);
        if self.fs.params.kernel.is_dirac() {
            return scale * self.fs.eval(s);
        }
        if s < self.n.t0 {
            self.n_left.eval(s)
        } else if s > self.n.t_end() {
            self.n_right.eval(s)
        } else {
            self.n.eval(s)
        }
    }

    /// `∫ e^{-zs} N(s) ds` by Gregory quadrature on each side of the kink
    /// at 0 plus closed-form tails.
    pub fn laplace(&self, z: f64) -> f64 {
        let m = self.n.node_index(0.0).expect("t = 0 is a node");
        let w: Vec<f64> = (0..self.n.len())
            .map(|i| (-z * self.n.t(i)).exp() * self.n.values[i])
            .collect();
        gregory(&w[..=m], self.n.dt)
            + gregory(&w[m..], self.n.dt)
            + self.n_right.laplace_above(self.n.t_end(), z)
            + self.n_left.laplace_below(self.n.t0, z)
    }

    pub fn all_certified(&self, mass_tol: f64, laplace_tol: f64) -> bool {
        self.min_sample > 0.0
            && self.mass_error.abs() <= mass_tol
            && self.laplace.iter().all(|p| p.rel_err <= laplace_tol)
            && self.g1_prime_kappa > 0.0
            && self.g1_prime_kappa < 1.0
    }
}

/// Builds `N = -(1 + xi) K∗v(·, xi)` from a fundamental solution computed at
/// the selected gain, and certifies positivity, unit mass and the transform
/// identity `∫e^{-zs}N = -(1 + xi) khat(z) / chi(z, xi)`.
pub fn build_n(model: &ModelSpec, fs: &FundamentalSolution, delta: f64) -> Result<Reduction> {
    let p = fs.params;
    let xi = p.xi;
    let (vmax, at) =
        fs.samples
            .times()
            .into_iter()
            .zip(&fs.samples.values)
            .fold(
                (f64::NEG_INFINITY, 0.0),
                |acc, (t, &v)| if v > acc.0 { (v, t) } else { acc },
            );
    if vmax >= 0.0 {
        return Err(Error::NegativityViolated { max_value: vmax, at });
    }
    let scale = -(1.0 + xi);
    let kv = fs.kernel_convolution()?;
    let mut n = kv.samples.clone();
    n.values.iter_mut().for_each(|x| *x *= scale);
    n.left_tail = n.left_tail.map(|t| crate::grid::Tail {
        coeff: scale * t.coeff,
        ..t
    });
    n.right_tail = n.right_tail.map(|t| crate::grid::Tail {
        coeff: scale * t.coeff,
        ..t
    });
    let min_sample = n.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let gk = model.constants.g_prime_kappa.abs();
    let strip = (fs.roots.lambda1.z, fs.roots.lambda0.z);
    let slope_jump = if p.kernel.is_dirac() { scale } else { 0.0 };
    let mut red = Reduction {
        xi,
        delta,
        n,
        n_right: kv.right_tail.scaled(scale),
        n_left: kv.left_tail.scaled(scale),
        g1_prime_0: (model.constants.g_prime_0 + xi) / (1.0 + xi),
        g1_prime_kappa: delta / (gk + delta),
        strip,
        slope_jump,
        min_sample,
        mass_error: 0.0,
        laplace: Vec::new(),
        linearization_error: None,
        fs: fs.clone(),
    };
    red.mass_error = red.laplace(0.0) - 1.0;
    let mu = chi0_positive_roots(model);
    let mut probes = vec![0.5 * strip.0];
    match mu {
        Some(mu) => {
            probes.push(mu.mu0);
            probes.push(0.5 * (mu.mu1 + strip.1));
        }
        None => {
            probes.push(strip.1 / 3.0);
            probes.push(2.0 * strip.1 / 3.0);
        }
    }
    red.laplace = probes
        .into_iter()
        .map(|z| {
            let numeric = red.laplace(z);
            let exact = scale * p.kernel.transform(z) / p.eval(z);
            LaplaceProbe {
                z,
                numeric,
                exact,
                rel_err: ((numeric - exact) / exact).abs(),
            }
        })
        .collect();
    red.linearization_error = mu.map(|mu| red.g1_prime_0 * (-mu.mu0 * p.ch()).exp() * red.laplace(mu.mu0) - 1.0);
    Ok(red)
}

/// Selects `xi`, builds `v(·, xi)` on its default grid and the kernel `N`.
pub fn reduce(model: &ModelSpec) -> Result<Reduction> {
    let (xi, delta) = build_xi(model)?;
    let p = CharParams::chi_kappa(model).with_xi(xi);
    let fs = fundamental_solution(&p, None)?;
    build_n(model, &fs, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::model::NonlinearitySpec;

    fn nicholson(kernel: KernelSpec, h: f64, c: f64) -> ModelSpec {
        ModelSpec::new(kernel, NonlinearitySpec::Nicholson { p: 6.0, delta: 1.0 }, h, c).unwrap()
    }

    #[test]
    fn xi_for_local_case() {
        let m = nicholson(KernelSpec::Dirac, 0.2, 5.0);
        let (xi, delta) = build_xi(&m).unwrap();
        assert_eq!(delta, 0.1);
        assert!((xi - (6f64.ln() - 1.0 + 0.1)).abs() < 1e-12);
        assert!((xi - 0.891759).abs() < 1e-6);
        let (_, d0) = build_xi(&nicholson(KernelSpec::Dirac, 0.0, 5.0)).unwrap();
        assert_eq!(d0, 0.1);
    }

    #[test]
    fn xi_half_margin() {
        // |g'(kappa)| = ln p - 1 close to xi*(c=1, h=1) = 5e^{-2}
        let xs = 5.0 * (-2f64).exp();
        let p = (xs - 0.05 + 1.0).exp();
        let m = ModelSpec::new(
            KernelSpec::Dirac,
            NonlinearitySpec::Nicholson { p, delta: 1.0 },
            1.0,
            1.0,
        )
        .unwrap();
        let (_, delta) = build_xi(&m).unwrap();
        assert!((delta - 0.025).abs() < 1e-8);
    }

    #[test]
    fn outside_dkappa_is_rejected() {
        let m = ModelSpec::new(
            KernelSpec::Dirac,
            NonlinearitySpec::Nicholson { p: 20.0, delta: 1.0 },
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(build_xi(&m), Err(Error::NotInDkappa { .. })));
    }

    #[test]
    fn g1_values() {
        let m = nicholson(KernelSpec::Dirac, 0.2, 5.0);
        let k = m.kappa();
        let xi = 0.891759;
        assert!(
            (g1_tilde(&m, xi, k).unwrap() - k).abs() < 1e-14,
            "{} {}",
            g1_tilde(&m, xi, k).unwrap(),
            k
        );
        assert!((g1_tilde(&m, xi, 2.0 * k).unwrap() - k).abs() < 1e-14);
        let expected = (6.0 * 0.5 * (-0.5f64).exp() + xi * 0.5) / (1.0 + xi);
        assert!((g1_tilde(&m, xi, 0.5).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.1978).abs() < 5e-4);
        assert!(matches!(g1_tilde(&m, xi, -1e-3), Err(Error::NegativeInput(_))));
    }

    #[test]
    fn g1_monotone_and_subtangent() {
        let m = nicholson(KernelSpec::Dirac, 0.2, 5.0);
        let (xi, _) = build_xi(&m).unwrap();
        let k = m.kappa();
        let slope = (m.constants.g_prime_0 + xi) / (1.0 + xi);
        let mut prev = 0.0;
        for i in 0..4096 {
            let s = k * i as f64 / 4095.0;
            let v = g1(&m, xi, s);
            assert!(v + 1e-12 >= prev);
            assert!(v <= slope * s + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn local_kernel_certificates() {
        let m = nicholson(KernelSpec::Dirac, 0.2, 5.0);
        let r = reduce(&m).unwrap();
        assert!(r.min_sample > 0.0);
        assert!(r.mass_error.abs() < 1e-8, "{}", r.mass_error);
        for p in &r.laplace {
            assert!(p.rel_err < 1e-7, "{p:?}");
        }
        assert!(r.linearization_error.unwrap().abs() < 1e-7);
        assert!(r.g1_prime_kappa > 0.0 && r.g1_prime_kappa < 1.0);
        assert!((r.n_at(0.3) - r.n.eval(0.3)).abs() < 1e-9);
    }

    #[test]
    fn zero_gain_harness() {
        let p = CharParams::new(0.0, 0.0, 1.0, 0.0, KernelSpec::Dirac);
        let fs = fundamental_solution(&p, None).unwrap();
        let m = nicholson(KernelSpec::Dirac, 0.0, 0.0);
        let r = build_n(&m, &fs, 0.1).unwrap();
        for &t in &[-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert!((r.n_at(t) - 0.5 * (-f64::abs(t)).exp()).abs() < 1e-12);
        }
        assert!(r.mass_error.abs() < 1e-9);
    }

    #[test]
    fn gaussian_kernel_certificates() {
        let m = nicholson(KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 }, 0.2, 5.0);
        let r = reduce(&m).unwrap();
        assert!(r.min_sample > 0.0);
        assert!(r.mass_error.abs() < 1e-6, "{}", r.mass_error);
        for p in &r.laplace {
            assert!(p.rel_err < 1e-5, "{p:?}");
        }
    }

    proptest::proptest! {
        #[test]
        fn g1_maps_0_kappa_into_itself_monotonically(p in 2.0f64..7.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let m = ModelSpec::new(KernelSpec::Dirac, NonlinearitySpec::Nicholson { p, delta: 1.0 }, 0.2, 5.0).unwrap();
            let Ok((xi, delta)) = build_xi(&m) else { return Ok(()) };
            let k = m.kappa();
            proptest::prop_assert!(delta > 0.0 && delta <= DELTA_CAP);
            proptest::prop_assert!((g1(&m, xi, k) - k).abs() <= 1e-12 * k);
            let (lo, hi) = (a.min(b) * k, a.max(b) * k);
            let (glo, ghi) = (g1(&m, xi, lo), g1(&m, xi, hi));
            proptest::prop_assert!(glo <= ghi + 1e-12);
            proptest::prop_assert!(glo >= 0.0 && ghi <= k * (1.0 + 1e-12));
        }
    }
}
