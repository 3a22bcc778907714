//! Monotone iteration for the wavefront profile of the reduced equation
//! `phi(t) = ∫N(s) g1(phi(t - s - ch)) ds`, with normalization and
//! validation against the original profile equation.

use rayon::prelude::*;

use crate::charfun::{chi0_positive_roots, classify_point, PositiveRootPair};
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::model::ModelSpec;
use crate::numerics::{bisect, central5, lagrange4, linear_fit, MonotoneCubic};
use crate::reduction::{g1, reduce, Reduction};

/// Tolerance (relative to `kappa`) of the ordering and range checks.
pub const ORDER_TOL: f64 = 1e-12;
/// Mass of `N` allowed to be dropped on each side by the truncation.
const TRUNCATION_MASS: f64 = 1e-15;
/// Fraction of the grid used to fit the left exponential extension.
const LEFT_FIT_FRACTION: f64 = 0.1;
/// Relative slope tolerance of the pure `e^{mu0 t}` decay class.
pub const DECAY_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Half width `L` of the grid `[-L, L]`.
    pub half_width: f64,
    pub dt: f64,
    pub tol_iter: f64,
    pub max_iter: usize,
    /// Rate `eps` of the lower barrier; `mu0 / 10` when unset.
    pub eps_lower: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            half_width: 40.0,
            dt: 0.01,
            tol_iter: 1e-10,
            max_iter: 5000,
            eps_lower: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("L", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt < self.half_width) {
            return Err(invalid("dt", "must be positive and below L"));
        }
        let r = self.half_width / self.dt;
        if (r - r.round()).abs() > 1e-9 * r {
            return Err(invalid("dt", format!("L / dt = {r} is not an integer")));
        }
        if !(self.tol_iter > 0.0 && self.tol_iter < 1e-4) {
            return Err(invalid("tol_iter", "must lie in (0, 1e-4)"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if let Some(e) = self.eps_lower {
            if !(e > 0.0 && e.is_finite()) {
                return Err(invalid("eps_lower", "must be positive"));
            }
        }
        Ok(())
    }

    fn nodes_per_side(&self) -> usize {
        (self.half_width / self.dt).round() as usize
    }
}

/// Discrete convolution operator `A` on a uniform grid.
///
/// `A(phi)(t_i) = Σ_k W_k g1~(phi(t_i - k dt))` where `W_k` samples
/// `N(k dt - ch)` with a derivative-jump correction at the kink of `N` and
/// is normalized to unit sum, so that constants are preserved exactly.
#[derive(Debug, Clone)]
pub struct FrontOperator {
    pub dt: f64,
    /// Index of the first weight.
    pub k_min: i64,
    pub weights: Vec<f64>,
    /// Sum of the weights before normalization.
    pub raw_mass: f64,
    pub kappa: f64,
    pub xi: f64,
    pub g1_prime_0: f64,
    /// Continuous decay rate `mu0` of `chi_0`.
    pub mu0: f64,
    /// Root of `g1'(0) Σ W_k e^{-mu k dt} = 1`: the rate for which
    /// `e^{mu t}` is a fixed point of the discrete linearization.
    pub mu_discrete: f64,
    /// Set when the discrete linearization has no root (boundary of `D_0`).
    pub discrete_degenerate: bool,
    /// Rate of the next term of the left tail: `min(2 mu, mu1)`, in the
    /// discrete sense; `None` when too close to `mu_discrete`.
    pub second_rate: Option<f64>,
    model: ModelSpec,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..4 {
            acc[j] += x[j] * y[j];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Point where the tail of `N` beyond it carries mass below the budget.
fn support_end(red: &Reduction, side: f64, rate: f64) -> f64 {
    let step = 0.25;
    let mut x = 0.0;
    for _ in 0..4000 {
        x += side * step;
        if red.n_at(x).abs() / rate.abs() <= TRUNCATION_MASS {
            return x;
        }
    }
    x
}

impl FrontOperator {
    pub fn new(model: &ModelSpec, red: &Reduction, dt: f64, mu: PositiveRootPair) -> Result<Self> {
        let ch = model.c * model.h;
        let s_lo = support_end(red, -1.0, red.strip.1);
        let s_hi = support_end(red, 1.0, red.strip.0);
        let k_min = ((s_lo + ch) / dt).floor() as i64;
        let k_max = ((s_hi + ch) / dt).ceil() as i64;
        let mut weights: Vec<f64> = (k_min..=k_max)
            .into_par_iter()
            .map(|k| dt * red.n_at(k as f64 * dt - ch))
            .collect();
        if red.slope_jump != 0.0 {
            // trapezoid error of a derivative jump J at fractional node
            // position theta: (dt^2 / 2) J B2(theta)
            let pos = ch / dt;
            let mut j = pos.floor();
            let mut theta = pos - j;
            if theta > 1.0 - 1e-9 {
                j += 1.0;
                theta = 0.0;
            } else if theta < 1e-9 {
                theta = 0.0;
            }
            let corr = 0.5 * dt * dt * red.slope_jump * (theta * theta - theta + 1.0 / 6.0);
            let r = (j as i64 - k_min) as usize;
            weights[r] += (1.0 - theta) * corr;
            if theta > 0.0 {
                weights[r + 1] += theta * corr;
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::NegativityViolated {
                max_value: -*w,
                at: 0.0,
            });
        }
        let raw_mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= raw_mass);
        let mut op = FrontOperator {
            dt,
            k_min,
            weights,
            raw_mass,
            kappa: model.kappa(),
            xi: red.xi,
            g1_prime_0: red.g1_prime_0,
            mu0: mu.mu0,
            mu_discrete: mu.mu0,
            discrete_degenerate: false,
            second_rate: None,
            model: model.clone(),
        };
        op.solve_discrete_rate(mu);
        Ok(op)
    }

    /// `g1'(0) Σ W_k e^{-mu k dt}`.
    pub fn linear_factor(&self, mu: f64) -> f64 {
        self.g1_prime_0
            * self
                .weights
                .iter()
                .enumerate()
                .map(|(r, w)| w * (-mu * (self.k_min + r as i64) as f64 * self.dt).exp())
                .sum::<f64>()
    }

    fn linear_slope(&self, mu: f64) -> f64 {
        -self.g1_prime_0
            * self
                .weights
                .iter()
                .enumerate()
                .map(|(r, w)| {
                    let s = (self.k_min + r as i64) as f64 * self.dt;
                    s * w * (-mu * s).exp()
                })
                .sum::<f64>()
    }

    fn solve_discrete_rate(&mut self, mu: PositiveRootPair) {
        let hi = 2.0 * mu.mu1.max(mu.mu0) + 1.0;
        let zm = if self.linear_slope(0.0) >= 0.0 {
            0.0
        } else if self.linear_slope(hi) <= 0.0 {
            hi
        } else {
            bisect(|z| self.linear_slope(z), 0.0, hi, 0.0)
        };
        if self.linear_factor(zm) < 1.0 {
            self.mu_discrete = bisect(|z| self.linear_factor(z) - 1.0, 0.0, zm, 0.0);
            let mut top = zm + 1.0;
            while self.linear_factor(top) < 1.0 && top < 1e3 {
                top = zm + 2.0 * (top - zm);
            }
            let mu1 = bisect(|z| self.linear_factor(z) - 1.0, zm, top, 0.0);
            let r2 = mu1.min(2.0 * self.mu_discrete);
            self.second_rate = (r2 > 1.2 * self.mu_discrete).then_some(r2);
        } else {
            self.mu_discrete = zm;
            self.discrete_degenerate = true;
        }
    }

    fn g1t(&self, s: f64) -> f64 {
        g1(&self.model, self.xi, s.clamp(0.0, self.kappa))
    }

    /// Fixed-rate least-squares fit `b1 e^{mu x} + b2 e^{r2 x}`, `x = t - t0`,
    /// of the leftmost samples. The second term absorbs the leading
    /// correction of the tail; without it the amplitude is biased low by
    /// `O(e^{mu t0})` and the iteration drifts.
    pub fn left_fit(&self, phi: &[f64]) -> (f64, f64) {
        let m = ((phi.len() as f64 * LEFT_FIT_FRACTION) as usize).clamp(2, phi.len());
        let basis = |i: usize, r: f64| (r * i as f64 * self.dt).exp();
        let mu = self.mu_discrete;
        let Some(r2) = self.second_rate else {
            let (num, den) = (0..m).fold((0.0, 0.0), |(n, d), i| {
                let e = basis(i, mu);
                (n + phi[i] * e, d + e * e)
            });
            return (num / den, 0.0);
        };
        let (mut a11, mut a12, mut a22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &p) in phi.iter().enumerate().take(m) {
            let (e1, e2) = (basis(i, mu), basis(i, r2));
            a11 += e1 * e1;
            a12 += e1 * e2;
            a22 += e2 * e2;
            y1 += e1 * p;
            y2 += e2 * p;
        }
        let det = a11 * a22 - a12 * a12;
        ((a22 * y1 - a12 * y2) / det, (a11 * y2 - a12 * y1) / det)
    }

    /// Left extension at `x = t - t0 < 0`.
    fn left_value(&self, fit: (f64, f64), x: f64) -> f64 {
        let second = self.second_rate.map_or(0.0, |r| fit.1 * (r * x).exp());
        (fit.0 * (self.mu_discrete * x).exp() + second).max(0.0)
    }

    /// One application of `A` to samples on `t0 + i dt`; beyond the grid the
    /// samples are extended by the left fit and by the last sample.
    pub fn apply(&self, phi: &[f64], t0: f64) -> Result<Vec<f64>> {
        let k = self.kappa;
        if let Some(i) = phi
            .iter()
            .position(|&p| !(p >= -ORDER_TOL * k && p <= k * (1.0 + ORDER_TOL)))
        {
            return Err(Error::RangeViolation {
                value: phi[i],
                at: t0 + i as f64 * self.dt,
            });
        }
        let n = phi.len() as i64;
        let nk = self.weights.len() as i64;
        let k_max = self.k_min + nk - 1;
        let fit = self.left_fit(phi);
        let psi: Vec<f64> = (0..n + nk - 1)
            .map(|e| {
                let j = e - k_max;
                if j < 0 {
                    self.g1t(self.left_value(fit, j as f64 * self.dt))
                } else if j >= n {
                    self.g1t(phi[n as usize - 1])
                } else {
                    self.g1t(phi[j as usize])
                }
            })
            .collect();
        let wrev: Vec<f64> = self.weights.iter().rev().copied().collect();
        Ok((0..n as usize)
            .into_par_iter()
            .map(|i| dot(&wrev, &psi[i..i + nk as usize]))
            .collect())
    }
}

/// Class of the decay of the profile at `-∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    PureMu0,
    DegenerateTExp,
    Mu1,
}

impl DecayClass {
    pub fn name(&self) -> &'static str {
        match self {
            DecayClass::PureMu0 => "pure_mu0",
            DecayClass::DegenerateTExp => "degenerate_t_exp",
            DecayClass::Mu1 => "mu1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontReport {
    /// `sup |A(phi) - phi|`.
    pub residual_ftc: f64,
    /// `sup |phi'' - c phi' - phi + K∗g(phi(· - ch))|` at interior nodes.
    pub residual_yp: f64,
    /// `phi(-L)`.
    pub left_boundary_gap: f64,
    /// `kappa - phi(L)`.
    pub right_boundary_gap: f64,
    pub decay_rate_left: f64,
    pub decay_class: DecayClass,
    pub mu0: f64,
    /// Fitted rate of `kappa - phi` on the right half, when measurable.
    pub decay_rate_right: Option<f64>,
    /// Largest decrease between consecutive samples.
    pub monotone_violation: f64,
    /// All interior samples lie in `(0, kappa)`.
    pub in_range: bool,
    pub uniqueness_sup_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FrontSolution {
    /// Profile normalized to `phi(0) = kappa / 2`.
    pub profile: GridFunction,
    /// Converged iterate before normalization.
    pub raw: GridFunction,
    /// Location of the `kappa / 2` crossing of `raw`.
    pub shift: f64,
    pub iterations: usize,
    pub sup_steps: Vec<f64>,
    /// Largest pointwise increase `phi_{j+1} - phi_j` over all iterations.
    pub max_increase: f64,
    /// `(h, c)` lies on the boundary of `D_0`.
    pub on_boundary: bool,
    pub diagnostics: FrontReport,
    pub reduction: Reduction,
    pub operator: FrontOperator,
}

impl FrontSolution {
    pub fn kappa(&self) -> f64 {
        self.operator.kappa
    }
}

/// `min(kappa, kappa e^{mu0 t})` on the grid.
pub fn initial_upper(kappa: f64, mu0: f64, t0: f64, dt: f64, n: usize) -> GridFunction {
    let values = (0..n)
        .map(|i| kappa.min(kappa * (mu0 * (t0 + i as f64 * dt)).exp()))
        .collect();
    GridFunction::new(t0, dt, values)
}

/// `A(phi)` as a grid function.
pub fn apply_a(phi: &GridFunction, op: &FrontOperator) -> Result<GridFunction> {
    if (phi.dt - op.dt).abs() > 1e-12 * op.dt {
        return Err(Error::GridMismatch(format!(
            "phi.dt = {} but operator dt = {}",
            phi.dt, op.dt
        )));
    }
    Ok(GridFunction::new(phi.t0, phi.dt, op.apply(&phi.values, phi.t0)?))
}

struct Prepared {
    model: ModelSpec,
    red: Reduction,
    op: FrontOperator,
    mu: PositiveRootPair,
    on_boundary: bool,
}

fn prepare(model: &ModelSpec, cfg: &SolverConfig) -> Result<Prepared> {
    cfg.validate()?;
    let m = classify_point(model.h, model.c, model)?;
    if !m.in_dl {
        let reason = if !(m.in_d0 || m.on_d0_boundary) {
            format!("c <= c#(h) = {}", m.c_sharp_at_h)
        } else {
            format!("|g'(kappa)| >= xi*(c, h) = {}", m.xi_star_at)
        };
        return Err(Error::NotInDL {
            h: model.h,
            c: model.c,
            reason,
        });
    }
    let mu = chi0_positive_roots(model).ok_or(Error::NotInDL {
        h: model.h,
        c: model.c,
        reason: "chi_0 has no positive zero".into(),
    })?;
    let red = reduce(model)?;
    let op = FrontOperator::new(model, &red, cfg.dt, mu)?;
    Ok(Prepared {
        model: model.clone(),
        red,
        op,
        mu,
        on_boundary: m.on_d0_boundary,
    })
}

/// Iterates `A` from `min(kappa, kappa e^{mu (t + start_shift)})`.
fn iterate(pr: &Prepared, cfg: &SolverConfig, start_shift: f64) -> Result<FrontSolution> {
    let op = &pr.op;
    let kappa = op.kappa;
    let ml = cfg.nodes_per_side();
    let n = 2 * ml + 1;
    let t0 = -(ml as f64) * cfg.dt;
    let mu = op.mu_discrete;
    let mut phi = initial_upper(kappa, mu, t0 + start_shift, cfg.dt, n).values;
    let eps = cfg.eps_lower.unwrap_or(pr.mu.mu0 / 10.0);
    // the limit lies strictly below the capped upper solution, so the
    // barrier is placed L/4 to the right of it
    let offset = start_shift - cfg.half_width / 4.0;
    let barrier: Vec<f64> = (0..n)
        .map(|i| {
            let x = t0 + i as f64 * cfg.dt + offset;
            if x < 0.0 {
                kappa * (mu * x).exp() * (1.0 - (eps * x).exp())
            } else {
                0.0
            }
        })
        .collect();
    let mut sup_steps = Vec::new();
    let mut max_increase = f64::NEG_INFINITY;
    let mut iterations = 0;
    loop {
        if iterations >= cfg.max_iter {
            return Err(Error::IterationLimitReached {
                max_iter: cfg.max_iter,
                last_step: sup_steps.last().copied().unwrap_or(f64::NAN),
            });
        }
        let next = op.apply(&phi, t0)?;
        iterations += 1;
        let mut step = 0.0f64;
        let mut inc = f64::NEG_INFINITY;
        for (a, b) in next.iter().zip(&phi) {
            step = step.max((a - b).abs());
            inc = inc.max(a - b);
        }
        max_increase = max_increase.max(inc);
        sup_steps.push(step);
        if inc > ORDER_TOL * kappa {
            return Err(Error::OrderingViolated {
                iteration: iterations,
                increase: inc,
            });
        }
        if let Some(i) = next.iter().zip(&barrier).position(|(p, b)| p < b) {
            return Err(Error::CollapsedToZero {
                iteration: iterations,
                at: t0 + i as f64 * cfg.dt,
            });
        }
        phi = next;
        if step < cfg.tol_iter {
            break;
        }
    }
    let raw = with_left_tail(GridFunction::new(t0, cfg.dt, phi), op);
    let shift = MonotoneCubic::new(t0, cfg.dt, &raw.values)
        .crossing(0.5 * kappa)
        .ok_or(Error::CollapsedToZero {
            iteration: iterations,
            at: t0,
        })?;
    let profile = normalize(&raw, shift, op);
    let mut sol = FrontSolution {
        profile,
        raw,
        shift,
        iterations,
        sup_steps,
        max_increase,
        on_boundary: pr.on_boundary,
        diagnostics: FrontReport {
            residual_ftc: f64::NAN,
            residual_yp: f64::NAN,
            left_boundary_gap: f64::NAN,
            right_boundary_gap: f64::NAN,
            decay_rate_left: f64::NAN,
            decay_class: DecayClass::Mu1,
            mu0: pr.mu.mu0,
            decay_rate_right: None,
            monotone_violation: f64::NAN,
            in_range: false,
            uniqueness_sup_diff: None,
        },
        reduction: pr.red.clone(),
        operator: op.clone(),
    };
    sol.diagnostics = validate_front(&sol, &pr.model)?;
    Ok(sol)
}

fn with_left_tail(mut g: GridFunction, op: &FrontOperator) -> GridFunction {
    let b = op.left_fit(&g.values).0;
    g.left_tail = Some(crate::grid::Tail {
        offset: 0.0,
        rate: op.mu_discrete,
        coeff: b * (-op.mu_discrete * g.t0).exp(),
    });
    g
}

/// `phi` at any `t`: samples inside, fitted exponential on the left, last
/// sample on the right.
fn extended(g: &GridFunction, t: f64) -> f64 {
    if t < g.t0 {
        return g.left_tail.map_or(g.values[0], |tail| tail.eval(t));
    }
    if t > g.t_end() {
        return g.values[g.len() - 1];
    }
    let x = (t - g.t0) / g.dt;
    if (x - x.round()).abs() < 1e-9 {
        return g.values[x.round() as usize];
    }
    lagrange4(&g.values, g.t0, g.dt, t).unwrap_or_else(|| g.eval(t))
}

/// Resamples `t -> raw(t + shift)` with the monotone cubic interpolant.
fn normalize(raw: &GridFunction, shift: f64, op: &FrontOperator) -> GridFunction {
    let mc = MonotoneCubic::new(raw.t0, raw.dt, &raw.values);
    let values = (0..raw.len())
        .map(|i| {
            let t = raw.t(i) + shift;
            if t < raw.t0 {
                extended(raw, t)
            } else {
                mc.eval(t)
            }
        })
        .collect();
    with_left_tail(GridFunction::new(raw.t0, raw.dt, values), op)
}

/// Solves the reduced equation by monotone iteration from the capped upper
/// solution and normalizes the limit to `phi(0) = kappa / 2`.
pub fn solve_front(model: &ModelSpec, cfg: &SolverConfig) -> Result<FrontSolution> {
    let pr = prepare(model, cfg)?;
    iterate(&pr, cfg, 0.0)
}

/// Residuals, boundary gaps, monotonicity and decay classification.
pub fn validate_front(sol: &FrontSolution, model: &ModelSpec) -> Result<FrontReport> {
    let op = &sol.operator;
    let kappa = op.kappa;
    let raw = &sol.raw;
    let applied = op.apply(&raw.values, raw.t0)?;
    let residual_ftc = applied
        .iter()
        .zip(&raw.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let residual_yp = profile_residual(raw, model);
    let p = &sol.profile;
    let n = p.len();
    let monotone_violation = p.values.windows(2).fold(0.0f64, |m, w| m.max(w[0] - w[1]));
    let in_range = p.values[1..n - 1].iter().all(|&x| x > 0.0 && x < kappa);
    let mid = 0.5 * p.t0;
    let left: Vec<(f64, f64)> = (0..n)
        .filter(|&i| p.t(i) <= mid && p.values[i] > 0.0)
        .map(|i| (p.t(i), p.values[i].ln()))
        .collect();
    let (decay_rate_left, _) = linear_fit(&left);
    let mu0 = op.mu0;
    let mu = chi0_positive_roots(model);
    let decay_class = if ((decay_rate_left - mu0) / mu0).abs() <= DECAY_TOL {
        DecayClass::PureMu0
    } else if sol.on_boundary || mu.is_some_and(|m| m.degenerate) {
        DecayClass::DegenerateTExp
    } else {
        DecayClass::Mu1
    };
    let right: Vec<(f64, f64)> = (0..n)
        .filter(|&i| p.t(i) >= 0.0 && kappa - p.values[i] > 1e-10 * kappa)
        .map(|i| (p.t(i), (kappa - p.values[i]).ln()))
        .collect();
    let decay_rate_right = if right.len() >= 10 {
        let tail = &right[right.len() / 2..];
        Some(linear_fit(tail).0)
    } else {
        None
    };
    Ok(FrontReport {
        residual_ftc,
        residual_yp,
        left_boundary_gap: p.values[0],
        right_boundary_gap: kappa - p.values[n - 1],
        decay_rate_left,
        decay_class,
        mu0,
        decay_rate_right,
        monotone_violation,
        in_range,
        uniqueness_sup_diff: sol.diagnostics.uniqueness_sup_diff,
    })
}

/// `sup |phi'' - c phi' - phi + K∗g(phi(· - ch))|` over nodes with a full
/// five-point stencil.
fn profile_residual(phi: &GridFunction, model: &ModelSpec) -> f64 {
    let ch = model.c * model.h;
    let dt = phi.dt;
    let g = |u: f64| model.g.eval(u.max(0.0));
    let kernel: Vec<(f64, f64)> = match model.kernel.density(0.0) {
        None => vec![(0.0, 1.0)],
        Some(_) => {
            let (lo, hi) = model.kernel.effective_support();
            let k0 = (lo / dt).ceil() as i64;
            let k1 = (hi / dt).floor() as i64;
            (k0..=k1)
                .map(|k| {
                    let s = k as f64 * dt;
                    (s, dt * model.kernel.density(s).unwrap_or(0.0))
                })
                .collect()
        }
    };
    let n = phi.len();
    (2..n - 2)
        .into_par_iter()
        .map(|i| {
            let t = phi.t(i);
            let (d1, d2) = central5(&phi.values, i, dt);
            let conv: f64 = kernel.iter().map(|&(s, w)| w * g(extended(phi, t - s - ch))).sum();
            (d2 - model.c * d1 - phi.values[i] + conv).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Solves from the capped upper solution and from its translate by `-2`,
/// normalizes both and returns the sup difference of the profiles.
pub fn uniqueness_probe(model: &ModelSpec, cfg: &SolverConfig) -> Result<f64> {
    let pr = prepare(model, cfg)?;
    let a = iterate(&pr, cfg, 0.0)?;
    let b = iterate(&pr, cfg, 2.0)?;
    Ok(profile_distance(&a, &b))
}

/// Solves and runs the uniqueness probe, sharing the reduction.
pub fn solve_with_uniqueness(model: &ModelSpec, cfg: &SolverConfig) -> Result<FrontSolution> {
    let pr = prepare(model, cfg)?;
    let mut a = iterate(&pr, cfg, 0.0)?;
    let b = iterate(&pr, cfg, 2.0)?;
    a.diagnostics.uniqueness_sup_diff = Some(profile_distance(&a, &b));
    Ok(a)
}

fn profile_distance(a: &FrontSolution, b: &FrontSolution) -> f64 {
    a.profile
        .values
        .iter()
        .zip(&b.profile.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::model::NonlinearitySpec;

    fn local(h: f64, c: f64) -> ModelSpec {
        ModelSpec::new(
            KernelSpec::Dirac,
            NonlinearitySpec::Nicholson { p: 6.0, delta: 1.0 },
            h,
            c,
        )
        .unwrap()
    }

    fn coarse() -> SolverConfig {
        SolverConfig {
            half_width: 30.0,
            dt: 0.02,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn upper_solution_values() {
        let k = 6f64.ln();
        let g = initial_upper(k, 1.382, -5.0, 1.0, 9);
        assert!((g.values[0] - k * (-6.91f64).exp()).abs() < 1e-15);
        assert!((g.values[0] - 1.786e-3).abs() < 1e-5);
        assert_eq!(g.values[5], k);
        assert_eq!(g.values[8], k);
    }

    #[test]
    fn operator_preserves_constants_and_upper_solution() {
        let m = local(0.2, 5.0);
        let cfg = coarse();
        let pr = prepare(&m, &cfg).unwrap();
        let op = &pr.op;
        assert!((op.mu_discrete / op.mu0 - 1.0).abs() < 1e-3);
        let n = 2 * cfg.nodes_per_side() + 1;
        let k = op.kappa;
        let top = op.apply(&vec![k; n], -30.0).unwrap();
        assert!((op.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(top.iter().all(|&x| x <= k * (1.0 + 1e-14)));
        let zero = op.apply(&vec![0.0; n], -30.0).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        let up = initial_upper(k, op.mu_discrete, -30.0, cfg.dt, n);
        let next = op.apply(&up.values, -30.0).unwrap();
        for (a, b) in next.iter().zip(&up.values) {
            assert!(*a <= b + 1e-12 * k);
        }
        let mut bad = vec![0.0; n];
        bad[3] = 2.0 * k;
        assert!(matches!(op.apply(&bad, -30.0), Err(Error::RangeViolation { .. })));
    }

    #[test]
    fn local_front_converges() {
        let m = local(0.2, 5.0);
        let sol = solve_with_uniqueness(&m, &coarse()).unwrap();
        let r = &sol.diagnostics;
        let k = sol.kappa();
        assert!(sol.iterations < 5000);
        assert!(sol.max_increase <= 1e-12 * k);
        assert!(r.monotone_violation <= 1e-12 * k);
        assert!(r.in_range);
        assert!(r.residual_ftc <= 1e-9, "{}", r.residual_ftc);
        assert!(r.residual_yp <= 1e-4 * k, "{}", r.residual_yp);
        assert!(r.left_boundary_gap <= 1e-3 && r.right_boundary_gap <= 1e-3);
        assert_eq!(r.decay_class, DecayClass::PureMu0, "{} vs {}", r.decay_rate_left, r.mu0);
        assert!((sol.profile.eval(0.0) - 0.5 * k).abs() < 1e-9);
        assert!(r.uniqueness_sup_diff.unwrap() <= 1e-4);
    }

    #[test]
    fn below_critical_speed_is_rejected() {
        let m = local(0.0, 4.0);
        assert!(matches!(solve_front(&m, &coarse()), Err(Error::NotInDL { .. })));
    }

    #[test]
    fn config_validation() {
        let bad_dt = SolverConfig {
            dt: 0.03,
            ..Default::default()
        };
        assert!(bad_dt.validate().is_err());
        let bad_tol = SolverConfig {
            tol_iter: 1e-3,
            ..Default::default()
        };
        assert!(bad_tol.validate().is_err());
    }

    fn shared_operator() -> &'static FrontOperator {
        static OP: std::sync::OnceLock<FrontOperator> = std::sync::OnceLock::new();
        OP.get_or_init(|| {
            let m = local(0.2, 5.0);
            let red = reduce(&m).unwrap();
            let mu = chi0_positive_roots(&m).unwrap();
            FrontOperator::new(&m, &red, 0.02, mu).unwrap()
        })
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn operator_is_order_preserving(
            a in 0.05f64..0.95, rate in 0.2f64..2.0, shift in -5.0f64..5.0, gap in 0.0f64..0.3,
        ) {
            let op = shared_operator();
            let kappa = op.kappa;
            let n = 801;
            let t0 = -8.0;
            let lower: Vec<f64> = (0..n)
                .map(|i| {
                    let t = t0 + i as f64 * op.dt;
                    a * kappa / (1.0 + (-rate * (t - shift)).exp())
                })
                .collect();
            let upper: Vec<f64> = lower.iter().map(|x| (x + gap * kappa).min(kappa)).collect();
            let al = op.apply(&lower, t0).unwrap();
            let au = op.apply(&upper, t0).unwrap();
            for (l, u) in al.iter().zip(&au) {
                proptest::prop_assert!(*l <= *u + 1e-14 * kappa);
                proptest::prop_assert!(*l >= -1e-14 && *u <= kappa * (1.0 + 1e-14));
            }
        }
    }
}
