//! Structural diagnostics of a computed fundamental solution.

use rayon::prelude::*;

use super::FundamentalSolution;
use crate::numerics::{central5, gregory, linear_fit};

/// Step of the one-sided difference quotients at `t = 0`.
pub const JUMP_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceProbe {
    pub z: f64,
    pub numeric: f64,
    pub exact: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundsolReport {
    pub max_value: f64,
    pub max_at: f64,
    pub argmin: f64,
    pub dv_plus: f64,
    pub dv_minus: f64,
    pub d2v_plus: f64,
    pub d2v_minus: f64,
    /// `|Δv' - 1|`.
    pub jump1_err: f64,
    /// `|Δv'' - c|`.
    pub jump2_err: f64,
    /// Largest increase of `v` on `t <= 0`.
    pub monotone_violation_left: f64,
    /// Largest decrease of `v` on `t >= 0`.
    pub monotone_violation_right: f64,
    /// Largest negative second difference of `v` on `t <= 0`.
    pub convexity_violation_left: f64,
    /// Largest negative second difference of `|v| = -v` on `t <= 0`.
    pub abs_convexity_violation_left: f64,
    /// Sup of the homogeneous residual away from the kinks, over `sup|v|`.
    pub interior_residual: f64,
    /// Fitted exponential rates near the ends of the spectral/step core.
    pub tail_rate_right: f64,
    pub tail_rate_left: f64,
    /// `|v(t) e^{-lambda t} / rho - 1|` where the tail model takes over.
    pub tail_coeff_err_right: f64,
    pub tail_coeff_err_left: f64,
    /// One-sided transform identity (point-mass kernels only).
    pub laplace: Vec<LaplaceProbe>,
}

impl FundsolReport {
    pub fn negative(&self) -> bool {
        self.max_value < 0.0
    }
}

/// One-sided first and second derivatives at `0±` from `v(±kη)`.
fn one_sided(fs: &FundamentalSolution, side: f64) -> (f64, f64) {
    let e = JUMP_STEP;
    let v: Vec<f64> = (0..4).map(|k| fs.eval(side * k as f64 * e)).collect();
    let d1 = side * (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * e);
    let d2 = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (e * e);
    (d1, d2)
}

fn fitted_rate(fs: &FundamentalSolution, a: f64, b: f64) -> f64 {
    let n = 40;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let t = a + (b - a) * k as f64 / n as f64;
            (t, fs.eval(t).abs().ln())
        })
        .collect();
    linear_fit(&pts).0
}

/// Where each side's tail takes over (or a default distance).
fn tail_start(fs: &FundamentalSolution, side: f64) -> f64 {
    fs.blends
        .iter()
        .find(|b| b.side == side)
        .map(|b| b.start)
        .unwrap_or_else(|| (20.0 / fs.tails.gamma).min(-fs.samples.t0))
}

pub fn check_fundsol(fs: &FundamentalSolution) -> FundsolReport {
    let p = &fs.params;
    let g = &fs.samples;
    let v = &g.values;
    let dt = g.dt;
    let z0 = fs.zero_index();

    let (imax, &max_value) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let (imin, _) = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();

    let (dv_plus, d2v_plus) = one_sided(fs, 1.0);
    let (dv_minus, d2v_minus) = one_sided(fs, -1.0);

    let mut mono_l = 0.0f64;
    for i in 0..z0 {
        mono_l = mono_l.max(v[i + 1] - v[i]);
    }
    let mut mono_r = 0.0f64;
    for i in z0..v.len() - 1 {
        mono_r = mono_r.max(v[i] - v[i + 1]);
    }
    let mut conv = 0.0f64;
    let mut abs_conv = 0.0f64;
    for i in 1..z0 {
        let d2 = v[i - 1] - 2.0 * v[i] + v[i + 1];
        conv = conv.max(-d2);
        abs_conv = abs_conv.max(d2);
    }

    let kv = if p.kernel.is_dirac() {
        None
    } else {
        fs.kernel_convolution().ok().map(|c| c.samples)
    };
    let ch = p.ch();
    let sup = g.sup_norm();
    let near_kink = |t: f64| {
        let guard = 2.0 * dt + 1e-9;
        if t.abs() <= guard {
            return true;
        }
        p.kernel.is_dirac() && ch > 0.0 && (1..=2).any(|k| (t - k as f64 * ch).abs() <= guard)
    };
    let interior_residual = (2..v.len() - 2)
        .into_par_iter()
        .filter_map(|i| {
            let t = g.t(i);
            if near_kink(t) {
                return None;
            }
            let delayed = match &kv {
                None => fs.eval(t - ch),
                Some(k) => {
                    if t - ch < k.t0 {
                        return None;
                    }
                    k.eval(t - ch)
                }
            };
            let (d1, d2) = central5(v, i, dt);
            Some((d2 - p.c * d1 - p.d * v[i] - p.xi * delayed).abs())
        })
        .reduce(|| 0.0, f64::max)
        / sup;

    let ar = tail_start(fs, 1.0);
    let al = tail_start(fs, -1.0);
    let tail_rate_right = fitted_rate(fs, (ar - 3.0).max(0.5 * ar), ar);
    let tail_rate_left = fitted_rate(fs, -al, -(al - 3.0).max(0.5 * al));
    let coeff_err = |t: f64, model: &super::TailModel| {
        let lead = model.leading().expect("tail term");
        let expect = (lead.coeff + lead.t_coeff * t) * (lead.rate * t).exp();
        (fs.eval(t) / expect - 1.0).abs()
    };
    let tail_coeff_err_right = coeff_err(ar, &fs.right_tail);
    let tail_coeff_err_left = coeff_err(-al, &fs.left_tail);

    let mut laplace = Vec::new();
    if p.kernel.is_dirac() {
        let l0 = fs.roots.lambda0;
        for dz in [0.5, 1.0, 2.0] {
            let z = l0.z + dz;
            let integrand: Vec<f64> = (z0..v.len()).map(|i| (-z * g.t(i)).exp() * v[i]).collect();
            let numeric = gregory(&integrand, dt) + fs.right_tail.laplace_above(g.t_end(), z);
            let exact = 1.0 / p.eval(z) - (1.0 / l0.chi_prime) / (z - l0.z);
            laplace.push(LaplaceProbe {
                z,
                numeric,
                exact,
                rel_err: ((numeric - exact) / exact).abs(),
            });
        }
    }

    FundsolReport {
        max_value,
        max_at: g.t(imax),
        argmin: g.t(imin),
        dv_plus,
        dv_minus,
        d2v_plus,
        d2v_minus,
        jump1_err: (dv_plus - dv_minus - 1.0).abs(),
        jump2_err: (d2v_plus - d2v_minus - p.c).abs(),
        monotone_violation_left: mono_l,
        monotone_violation_right: mono_r,
        convexity_violation_left: conv,
        abs_convexity_violation_left: abs_conv,
        interior_residual,
        tail_rate_right,
        tail_rate_left,
        tail_coeff_err_right,
        tail_coeff_err_left,
        laplace,
    }
}
