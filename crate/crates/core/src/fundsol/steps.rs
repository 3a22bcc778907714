//! Method of steps for `u'' - c u' - d u - xi u(t - ch) = 0` with the
//! exponential history `u(s) = e^{lambda0 s}` on `[-ch, 0]`.

use crate::charfun::CharParams;
use crate::error::{invalid, Error, Result};

/// Target spacing of the integration nodes.
const TARGET_STEP: f64 = 2.5e-4;

/// Time up to which roundoff fed into the growing mode `e^{lambda0 t}` stays
/// below `budget`.
pub fn horizon(lambda0: f64, budget: f64) -> f64 {
    let t = (budget / f64::EPSILON).ln() / lambda0;
    t.min(30.0 / lambda0)
}

/// Default stability horizon (absolute roundoff growth up to `1e-6`).
pub fn default_horizon(lambda0: f64) -> f64 {
    horizon(lambda0, 1e-6)
}

/// Dense solution of the delayed ODE on `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct StepSolution {
    lambda0: f64,
    step: f64,
    /// `(u, u', u'')` at `k·step`.
    nodes: Vec<[f64; 3]>,
}

impl StepSolution {
    /// Integrates by classical Runge–Kutta with a step dividing `ch`;
    /// delayed values come from quintic Hermite interpolation of earlier
    /// nodes (or from the exact history).
    pub fn integrate(p: &CharParams, lambda0: f64, t_end: f64) -> Result<Self> {
        let ch = p.ch();
        if !p.kernel.is_dirac() {
            return Err(invalid("kernel", "method of steps needs a point-mass kernel"));
        }
        if !(ch > 0.0) {
            return Err(invalid("c*h", "method of steps needs a positive delay"));
        }
        if !(p.xi > 0.0) {
            return Err(invalid("xi", "method of steps needs xi > 0"));
        }
        let limit = default_horizon(lambda0);
        if t_end > limit {
            return Err(Error::HorizonExceeded {
                requested: t_end,
                horizon: limit,
            });
        }
        let m = (ch / TARGET_STEP).ceil().max(1.0) as usize;
        let h = ch / m as f64;
        let n = (t_end / h).ceil() as usize;
        let chi_prime = p.deriv(lambda0);
        let du0 = lambda0 - chi_prime;
        let stated = -(lambda0 - p.c + p.xi * ch * (-lambda0 * ch).exp());
        assert!(
            (du0 - stated).abs() <= 1e-12 * (1.0 + du0.abs()),
            "initial slope identity violated: {du0} vs {stated}"
        );
        let mut sol = StepSolution {
            lambda0,
            step: h,
            nodes: Vec::with_capacity(n + 1),
        };
        let accel = |u: f64, du: f64, delayed: f64| p.c * du + p.d * u + p.xi * delayed;
        let delayed0 = (-lambda0 * ch).exp();
        sol.nodes.push([1.0, du0, accel(1.0, du0, delayed0)]);
        for k in 0..n {
            let t = k as f64 * h;
            let [u, du, _] = sol.nodes[k];
            let d0 = sol.u_at(t - ch);
            let dh = sol.u_at(t - ch + 0.5 * h);
            let d1 = sol.u_at(t - ch + h);
            let (k1u, k1v) = (du, accel(u, du, d0));
            let (k2u, k2v) = (du + 0.5 * h * k1v, accel(u + 0.5 * h * k1u, du + 0.5 * h * k1v, dh));
            let (k3u, k3v) = (du + 0.5 * h * k2v, accel(u + 0.5 * h * k2u, du + 0.5 * h * k2v, dh));
            let (k4u, k4v) = (du + h * k3v, accel(u + h * k3u, du + h * k3v, d1));
            let un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            let dun = du + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            sol.nodes.push([un, dun, accel(un, dun, d1)]);
        }
        Ok(sol)
    }

    pub fn t_end(&self) -> f64 {
        (self.nodes.len() - 1) as f64 * self.step
    }

    /// `u(t)`: exact history for `t <= 0`, Hermite interpolation after.
    pub fn u_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return (self.lambda0 * t).exp();
        }
        let x = t / self.step;
        let i = (x.floor() as usize).min(self.nodes.len() - 2);
        let s = x - i as f64;
        let h = self.step;
        let [f0, d0, e0] = self.nodes[i];
        let [f1, d1, e1] = self.nodes[i + 1];
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        f0 * (1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5)
            + h * d0 * (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5)
            + h * h * e0 * 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5)
            + f1 * (10.0 * s3 - 15.0 * s4 + 6.0 * s5)
            + h * d1 * (-4.0 * s3 + 7.0 * s4 - 3.0 * s5)
            + h * h * e1 * 0.5 * (s3 - 2.0 * s4 + s5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::real_root_set;
    use crate::kernel::KernelSpec;

    #[test]
    fn history_branch_is_exact() {
        let p = CharParams::new(1.0, 1.0, 1.0, 0.5, KernelSpec::Dirac);
        let l0 = real_root_set(&p).unwrap().lambda0.z;
        let s = StepSolution::integrate(&p, l0, 2.0).unwrap();
        assert_eq!(s.u_at(-0.5), (-0.5 * l0).exp());
        assert_eq!(s.u_at(0.0), 1.0);
    }

    #[test]
    fn satisfies_the_delay_equation() {
        let p = CharParams::new(1.0, 1.0, 1.0, 0.5, KernelSpec::Dirac);
        let l0 = real_root_set(&p).unwrap().lambda0.z;
        let s = StepSolution::integrate(&p, l0, 4.0).unwrap();
        let e = 1e-3;
        for t in [0.3, 1.7, 2.9] {
            let d2 = (s.u_at(t + e) - 2.0 * s.u_at(t) + s.u_at(t - e)) / (e * e);
            let d1 = (s.u_at(t + e) - s.u_at(t - e)) / (2.0 * e);
            let r = d2 - d1 - s.u_at(t) - 0.5 * s.u_at(t - 1.0);
            assert!(r.abs() < 1e-5, "t={t} r={r}");
        }
    }

    #[test]
    fn refuses_beyond_horizon() {
        let p = CharParams::new(1.0, 1.0, 1.0, 0.5, KernelSpec::Dirac);
        let l0 = real_root_set(&p).unwrap().lambda0.z;
        assert!(matches!(
            StepSolution::integrate(&p, l0, 1e3),
            Err(Error::HorizonExceeded { .. })
        ));
    }
}
