//! Birth functions, kernels and the standing hypotheses on them.
//!
//! All nonlinearities are stored in the unit-decay form
//! `y'' - c y' - y + K * g(y(· - ch)) = 0`. A Nicholson model with linear
//! decay `delta != 1` is mapped onto that form by rescaling time by
//! `delta` and space by `sqrt(delta)`:
//!
//! ```text
//!   g(u) = (p/delta) u e^{-u},  h -> delta h,  c -> c / sqrt(delta),
//!   kernel length scales (sigma, mean, a) -> sqrt(delta) * scale
//! ```

pub use crate::kernel::{kernel_transform, KernelSpec};

use crate::error::{invalid, Error, Result};

/// Built-in birth functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearitySpec {
    /// `p u e^{-u}` with linear decay `delta`.
    Nicholson { p: f64, delta: f64 },
    /// `p u / (1 + u^q)` with unit decay.
    MackeyGlass { p: f64, q: f64 },
}

impl NonlinearitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NonlinearitySpec::Nicholson { p, delta } => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(invalid("g.p", format!("must be positive, got {p}")));
                }
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(invalid("g.delta", format!("must be positive, got {delta}")));
                }
            }
            NonlinearitySpec::MackeyGlass { p, q } => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(invalid("g.p", format!("must be positive, got {p}")));
                }
                if !(q > 0.0 && q.is_finite()) {
                    return Err(invalid("g.q", format!("must be positive, got {q}")));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            NonlinearitySpec::Nicholson { .. } => "nicholson",
            NonlinearitySpec::MackeyGlass { .. } => "mackey_glass",
        }
    }

    /// Linear decay coefficient of the unscaled equation.
    pub fn decay(&self) -> f64 {
        match *self {
            NonlinearitySpec::Nicholson { delta, .. } => delta,
            NonlinearitySpec::MackeyGlass { .. } => 1.0,
        }
    }

    fn gain(&self) -> f64 {
        match *self {
            NonlinearitySpec::Nicholson { p, delta } => p / delta,
            NonlinearitySpec::MackeyGlass { p, .. } => p,
        }
    }

    /// Normalized `g(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        let beta = self.gain();
        match *self {
            NonlinearitySpec::Nicholson { .. } => beta * u * (-u).exp(),
            NonlinearitySpec::MackeyGlass { q, .. } => {
                if u <= 0.0 {
                    beta * u
                } else {
                    beta * u / (1.0 + u.powf(q))
                }
            }
        }
    }

    /// Normalized `g'(u)` in closed form.
    pub fn deriv(&self, u: f64) -> f64 {
        let beta = self.gain();
        match *self {
            NonlinearitySpec::Nicholson { .. } => beta * (1.0 - u) * (-u).exp(),
            NonlinearitySpec::MackeyGlass { q, .. } => {
                if u <= 0.0 {
                    beta
                } else {
                    let uq = u.powf(q);
                    beta * (1.0 + (1.0 - q) * uq) / ((1.0 + uq) * (1.0 + uq))
                }
            }
        }
    }

    /// Upper end of the fixed-point scan; every positive fixed point lies
    /// below it.
    fn scan_limit(&self) -> f64 {
        let beta = self.gain();
        match *self {
            // g <= beta/e
            NonlinearitySpec::Nicholson { .. } => 2.0 * beta / std::f64::consts::E + 1.0,
            // g(s) >= s  iff  s^q <= beta - 1
            NonlinearitySpec::MackeyGlass { q, .. } => 4.0 * beta.max(1.0).powf(1.0 / q) + 1.0,
        }
    }
}

/// Constants derived from `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub kappa: f64,
    pub g_prime_0: f64,
    pub g_prime_kappa: f64,
    /// `(C, theta)` with `|g(u)/u - g'(0)| <= C u^theta` on `(0, kappa/10]`.
    pub gco_witness: Option<(f64, f64)>,
}

const FIXED_POINT_SCAN: usize = 20_000;

/// Locates the positive equilibrium and evaluates the derivatives there.
pub fn build_nonlinearity(spec: &NonlinearitySpec) -> Result<DerivedConstants> {
    spec.validate()?;
    let s_max = spec.scan_limit();
    let f = |s: f64| spec.eval(s) - s;
    let mut changes = Vec::new();
    let mut prev_s = s_max / FIXED_POINT_SCAN as f64;
    let mut prev_f = f(prev_s);
    let mut any_positive = prev_f > 0.0;
    for i in 2..=FIXED_POINT_SCAN {
        let s = s_max * i as f64 / FIXED_POINT_SCAN as f64;
        let fs = f(s);
        any_positive |= fs > 0.0;
        if (fs > 0.0) != (prev_f > 0.0) {
            changes.push((prev_s, s));
        }
        prev_s = s;
        prev_f = fs;
    }
    if !any_positive || changes.is_empty() {
        return Err(Error::NoPositiveFixedPoint);
    }
    if changes.len() > 1 {
        return Err(Error::MultipleFixedPoints {
            count: changes.len(),
            s_max,
        });
    }
    let (lo, hi) = changes[0];
    let kappa = crate::numerics::bisect(f, lo, hi, 0.0);
    let g_prime_0 = spec.deriv(0.0);
    let g_prime_kappa = spec.deriv(kappa);
    let gco_witness = fit_gco(spec, kappa, g_prime_0, 512);
    Ok(DerivedConstants {
        kappa,
        g_prime_0,
        g_prime_kappa,
        gco_witness,
    })
}

/// Fits `|g(u)/u - g'(0)| <= C u^theta` on `(0, kappa/10]`, trying
/// `theta = 1` first and falling back to a log-log regression.
fn fit_gco(spec: &NonlinearitySpec, kappa: f64, g0: f64, n: usize) -> Option<(f64, f64)> {
    let top = kappa / 10.0;
    let samples: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            let u = top * i as f64 / n as f64;
            (u, (spec.eval(u) / u - g0).abs())
        })
        .collect();
    let c1 = samples.iter().map(|&(u, r)| r / u).fold(0.0f64, f64::max);
    // theta = 1 is accepted when the ratio does not blow up toward 0.
    let head = samples[0].1 / samples[0].0;
    let tail = samples[n - 1].1 / samples[n - 1].0;
    if c1.is_finite() && head <= 10.0 * tail.max(f64::MIN_POSITIVE) + 1e-300 {
        return Some((c1.max(f64::MIN_POSITIVE), 1.0));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|&(u, r)| (u.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (slope, _) = crate::numerics::linear_fit(&pts);
    let theta = slope.clamp(1e-3, 1.0);
    let c = samples.iter().map(|&(u, r)| r / u.powf(theta)).fold(0.0f64, f64::max);
    c.is_finite().then_some((c.max(f64::MIN_POSITIVE), theta))
}

/// One sampled hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckDetail {
    pub name: &'static str,
    pub worst_point: f64,
    /// Non-negative when the check passes.
    pub margin: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub m_holds: bool,
    pub st_holds: bool,
    pub subtangent_at_0: bool,
    pub gco_holds: bool,
    pub details: Vec<CheckDetail>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.m_holds && self.st_holds && self.subtangent_at_0
    }
}

pub const HYPOTHESIS_TOL: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 4096;

fn worst_of(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    points.fold(
        (f64::NAN, f64::INFINITY),
        |acc, (s, m)| if m < acc.1 { (s, m) } else { acc },
    )
}

/// Certifies (M), (ST), sub-tangency at 0 and the Hölder condition at 0
/// on uniform samples.
pub fn check_hypotheses(
    spec: &NonlinearitySpec,
    constants: &DerivedConstants,
    n_samples: usize,
) -> Result<HypothesisReport> {
    if n_samples < 16 {
        return Err(Error::InvalidSampleCount(n_samples));
    }
    let kappa = constants.kappa;
    let gk = constants.g_prime_kappa;
    let grid = |top: f64| (0..n_samples).map(move |i| top * i as f64 / (n_samples - 1) as f64);

    let mut details = Vec::new();
    let d0 = CheckDetail {
        name: "M: g'(0) > 1",
        worst_point: 0.0,
        margin: constants.g_prime_0 - 1.0,
        tolerance: 0.0,
    };
    let dk = CheckDetail {
        name: "M: g'(kappa) < 0",
        worst_point: kappa,
        margin: -gk,
        tolerance: 0.0,
    };
    let (s_pos, m_pos) = worst_of(grid(2.0 * kappa).skip(1).map(|s| (s, spec.eval(s))));
    let dpos = CheckDetail {
        name: "M: g(s) > 0 on (0, 2 kappa]",
        worst_point: s_pos,
        margin: m_pos,
        tolerance: 0.0,
    };
    let fixed = (spec.eval(kappa) - kappa).abs();
    let dfix = CheckDetail {
        name: "M: g(kappa) = kappa",
        worst_point: kappa,
        margin: 1e-12 * kappa - fixed,
        tolerance: 1e-12 * kappa,
    };
    let m_holds = d0.margin > 0.0 && dk.margin > 0.0 && dpos.margin > 0.0 && dfix.margin >= 0.0;
    details.extend([d0, dk, dpos, dfix]);

    let pts: Vec<f64> = grid(kappa).collect();
    let shifted: Vec<f64> = pts.iter().map(|&s| spec.eval(s) - gk * s).collect();
    let (s_st, m_st) = worst_of(pts.windows(2).zip(shifted.windows(2)).map(|(s, v)| (s[0], v[1] - v[0])));
    let st_holds = m_st >= -HYPOTHESIS_TOL;
    details.push(CheckDetail {
        name: "ST: g(s) - g'(kappa) s non-decreasing on [0, kappa]",
        worst_point: s_st,
        margin: m_st + HYPOTHESIS_TOL,
        tolerance: HYPOTHESIS_TOL,
    });

    let (s_sub, m_sub) = worst_of(pts.iter().map(|&s| (s, constants.g_prime_0 * s - spec.eval(s))));
    let subtangent_at_0 = m_sub >= -HYPOTHESIS_TOL;
    details.push(CheckDetail {
        name: "sub-tangency: g(s) <= g'(0) s on [0, kappa]",
        worst_point: s_sub,
        margin: m_sub + HYPOTHESIS_TOL,
        tolerance: HYPOTHESIS_TOL,
    });

    let witness = fit_gco(spec, kappa, constants.g_prime_0, n_samples);
    let gco_holds = match witness {
        Some((c, theta)) => {
            let (s_g, m_g) = worst_of(grid(kappa / 10.0).skip(1).map(|u| {
                let r = (spec.eval(u) / u - constants.g_prime_0).abs();
                (u, c * u.powf(theta) * (1.0 + 1e-12) - r)
            }));
            details.push(CheckDetail {
                name: "condition (4): |g(u)/u - g'(0)| <= C u^theta",
                worst_point: s_g,
                margin: m_g,
                tolerance: 1e-12,
            });
            m_g >= 0.0 && theta > 0.0 && theta <= 1.0
        }
        None => {
            details.push(CheckDetail {
                name: "condition (4): |g(u)/u - g'(0)| <= C u^theta",
                worst_point: f64::NAN,
                margin: f64::NEG_INFINITY,
                tolerance: 1e-12,
            });
            false
        }
    };

    Ok(HypothesisReport {
        m_holds,
        st_holds,
        subtangent_at_0,
        gco_holds,
        details,
    })
}

/// Complete model in unit-decay form.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kernel: KernelSpec,
    pub g: NonlinearitySpec,
    pub h: f64,
    pub c: f64,
    pub constants: DerivedConstants,
    /// Linear decay of the unscaled equation (1 when no rescaling applies).
    pub decay: f64,
}

impl ModelSpec {
    /// Builds a model from parameters in the units of the original equation,
    /// applying the unit-decay rescaling.
    pub fn new(kernel: KernelSpec, g: NonlinearitySpec, h: f64, c: f64) -> Result<Self> {
        kernel.validate()?;
        g.validate()?;
        if !(h >= 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("must be non-negative, got {h}")));
        }
        if !c.is_finite() {
            return Err(invalid("c", "must be finite"));
        }
        let decay = g.decay();
        let root = decay.sqrt();
        let kernel = match kernel {
            KernelSpec::Dirac => KernelSpec::Dirac,
            KernelSpec::Gaussian { sigma, mean } => KernelSpec::Gaussian {
                sigma: sigma * root,
                mean: mean * root,
            },
            KernelSpec::Uniform { a } => KernelSpec::Uniform { a: a * root },
        };
        let constants = build_nonlinearity(&g)?;
        Ok(ModelSpec {
            kernel,
            g,
            h: h * decay,
            c: c / root,
            constants,
            decay,
        })
    }

    pub fn with_point(&self, h: f64, c: f64) -> Self {
        ModelSpec { h, c, ..self.clone() }
    }

    pub fn kappa(&self) -> f64 {
        self.constants.kappa
    }

    /// Human-readable description of the rescaling map.
    pub fn rescaling_note(&self) -> String {
        if self.decay == 1.0 {
            "no rescaling (unit decay)".to_string()
        } else {
            format!(
                "time scaled by delta = {d}, space by sqrt(delta): h' = {d} h, c' = c / sqrt({d}), kernel lengths * sqrt({d})",
                d = self.decay
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nich(p: f64) -> NonlinearitySpec {
        NonlinearitySpec::Nicholson { p, delta: 1.0 }
    }

    #[test]
    fn nicholson_constants() {
        let k = build_nonlinearity(&nich(6.0)).unwrap();
        // independent: kappa = ln p solves p s e^{-s} = s
        assert!((k.kappa - 6f64.ln()).abs() < 1e-13);
        assert_eq!(k.g_prime_0, 6.0);
        assert!((k.g_prime_kappa - (1.0 - 6f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn no_fixed_point_below_unit_gain() {
        assert_eq!(build_nonlinearity(&nich(0.8)), Err(Error::NoPositiveFixedPoint));
    }

    #[test]
    fn mackey_glass_fixed_point() {
        let k = build_nonlinearity(&NonlinearitySpec::MackeyGlass { p: 3.0, q: 4.0 }).unwrap();
        assert!((k.kappa - 2f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(k.g_prime_0, 3.0);
    }

    #[test]
    fn hypothesis_examples() {
        let g = nich(6.0);
        let r = check_hypotheses(&g, &build_nonlinearity(&g).unwrap(), 4096).unwrap();
        assert!(r.m_holds && r.st_holds && r.subtangent_at_0 && r.gco_holds);
        let g = nich(20.0);
        let r = check_hypotheses(&g, &build_nonlinearity(&g).unwrap(), 4096).unwrap();
        assert!(!r.st_holds);
        assert!(r
            .details
            .iter()
            .all(|d| d.margin.is_finite() || d.margin == f64::NEG_INFINITY));
    }

    #[test]
    fn too_few_samples() {
        let g = nich(6.0);
        let k = build_nonlinearity(&g).unwrap();
        assert_eq!(check_hypotheses(&g, &k, 8), Err(Error::InvalidSampleCount(8)));
    }

    #[test]
    fn nicholson_window_matches_e_to_e_squared() {
        use std::f64::consts::E;
        for (p, expect) in [(2.0, false), (E + 0.01, true), (6.0, true), (E * E, true), (8.0, false)] {
            let g = nich(p);
            let k = build_nonlinearity(&g).unwrap();
            let r = check_hypotheses(&g, &k, DEFAULT_SAMPLES).unwrap();
            assert_eq!(r.m_holds && r.st_holds, expect, "p = {p}");
        }
    }

    #[test]
    fn rescaling_maps_to_unit_decay() {
        let g = NonlinearitySpec::Nicholson { p: 12.0, delta: 2.0 };
        let m = ModelSpec::new(KernelSpec::Gaussian { sigma: 1.0, mean: 0.0 }, g, 0.5, 4.0).unwrap();
        assert!((m.h - 1.0).abs() < 1e-15);
        assert!((m.c - 4.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((m.constants.g_prime_0 - 6.0).abs() < 1e-15);
        match m.kernel {
            KernelSpec::Gaussian { sigma, .. } => assert!((sigma - 2f64.sqrt()).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_nonlinearity(&nich(7.3)).unwrap();
        let b = build_nonlinearity(&nich(7.3)).unwrap();
        assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
        assert_eq!(a.g_prime_kappa.to_bits(), b.g_prime_kappa.to_bits());
    }
}
