//! Fundamental solution `v(t, xi)` of
//! `v'' - c v' - d v - xi (K∗v)(t - ch) = δ(t)`, its kernel convolution,
//! structural checks, and the bounded resolvent `u = -v∗f`.

pub mod check;
pub mod fourier;
pub mod steps;
pub mod tails;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfun::{real_root_set, CharParams, RootSet};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Tail};
use crate::kernel::KernelSpec;

pub use check::{check_fundsol, FundsolReport};
use fourier::{choose_cutoff, quadratic_tail, quartic_tail, SpectralSum};
use steps::StepSolution;
pub use tails::{ExpTerm, TailModel};

/// Absolute accuracy requested from spectral sums.
const SPECTRAL_TOL: f64 = 1e-12;
/// Decay lengths (in units of the slowest rate) kept free of aliasing.
const ALIAS_LENGTHS: f64 = 34.0;
/// Decay lengths over which a spectral core is evaluated.
const CORE_LENGTHS: f64 = 30.0;
/// Width of the transition between two pieces.
const BLEND_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedFormXi0,
    LocalSteps,
    FourierSubtraction,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedFormXi0 => "closed_form_xi0",
            Method::LocalSteps => "local_steps",
            Method::FourierSubtraction => "fourier_subtraction",
        }
    }
}

/// Leading exponential behaviour of `v` at `±∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailAsymptotics {
    /// `lambda1 < 0`, the rate as `t -> +∞`.
    pub lambda_plus: f64,
    /// `1/chi'(lambda1)`.
    pub rho_plus: f64,
    /// `lambda0 > 0`, the rate as `t -> -∞`.
    pub lambda_minus: f64,
    /// `-1/chi'(lambda0)`.
    pub rho_minus: f64,
    /// Next real exponents `(lambda2, lambda_{-1})`, infinite when absent.
    pub remainder_rates: (f64, f64),
    /// `min(|lambda1|, lambda0)`.
    pub gamma: f64,
    /// Leading zero is (nearly) double on the respective side.
    pub degenerate_plus: bool,
    pub degenerate_minus: bool,
}

/// Symmetric sampling grid `[-half_width, half_width]` containing `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub dt: f64,
}

impl GridSpec {
    /// `dt = 0.01`, `L = max(40/lambda0, 40/|lambda1|, 10 + 5ch)` capped at 200.
    pub fn default_for(params: &CharParams, roots: &RootSet) -> Self {
        let l = (40.0 / roots.lambda0.z)
            .max(40.0 / roots.lambda1.z.abs())
            .max(10.0 + 5.0 * params.ch())
            .min(200.0);
        GridSpec {
            half_width: l,
            dt: 0.01,
        }
    }

    pub fn nodes_per_side(&self) -> usize {
        (self.half_width / self.dt).round() as usize
    }
}

/// `min{e^{r1 t}, e^{r0 t}}/(r1 - r0)` for the zeros `r1 < 0 < r0` of
/// `z^2 - c z - d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closed {
    pub r1: f64,
    pub r0: f64,
}

impl Closed {
    pub fn new(c: f64, d: f64) -> Self {
        let s = (c * c + 4.0 * d).sqrt();
        // r1·r0 = -d avoids cancellation in the smaller zero
        let (r1, r0) = if c >= 0.0 {
            let r0 = 0.5 * (c + s);
            (-d / r0, r0)
        } else {
            let r1 = 0.5 * (c - s);
            (r1, -d / r1)
        };
        Closed { r1, r0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let r = if t >= 0.0 { self.r1 } else { self.r0 };
        (r * t).exp() / (self.r1 - self.r0)
    }

    /// `∫_{-∞}^x` of [`Closed::eval`].
    pub fn antiderivative(&self, x: f64) -> f64 {
        let k = 1.0 / (self.r1 - self.r0);
        if x <= 0.0 {
            k * (self.r0 * x).exp() / self.r0
        } else {
            k / self.r0 + k * (self.r1 * x).exp_m1() / self.r1
        }
    }
}

/// Known part of a spectral representation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Base {
    None,
    Closed(Closed),
    /// Closed form averaged over `[t - a, t + a]`.
    Averaged(Closed, f64),
}

#[derive(Debug, Clone)]
struct SpectralCore {
    base: Base,
    sum: SpectralSum,
}

impl SpectralCore {
    fn eval(&self, t: f64) -> f64 {
        let b = match self.base {
            Base::None => 0.0,
            Base::Closed(c) => c.eval(t),
            Base::Averaged(c, a) => (c.antiderivative(t + a) - c.antiderivative(t - a)) / (2.0 * a),
        };
        b + self.sum.eval(t)
    }
}

/// Which representation supplies the values on a stretch of one half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Closed,
    Steps,
    Spectral,
    Tail,
}

/// Pieces along `|t|` with the smooth transition windows between them.
#[derive(Debug, Clone, Default)]
struct Chain {
    pieces: Vec<Piece>,
    windows: Vec<(f64, f64)>,
}

/// C∞ step from 0 at `x <= 0` to 1 at `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

impl Chain {
    fn single(p: Piece) -> Self {
        Chain {
            pieces: vec![p],
            windows: Vec::new(),
        }
    }

    fn eval<F: Fn(Piece) -> f64>(&self, x: f64, piece: F) -> f64 {
        for (k, &(a, b)) in self.windows.iter().enumerate() {
            if x <= a {
                return piece(self.pieces[k]);
            }
            if x < b {
                let w = smooth_step((x - a) / (b - a));
                return (1.0 - w) * piece(self.pieces[k]) + w * piece(self.pieces[k + 1]);
            }
        }
        piece(*self.pieces.last().expect("non-empty chain"))
    }
}

/// Where a transition to the tail model was placed and how well the two
/// representations agreed there (`<= 1` meets the target).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blend {
    pub side: f64,
    pub start: f64,
    pub width: f64,
    pub mismatch: f64,
}

/// Finds the first window `[a, a + w]` on which `core` and `tail` agree to
/// `1e-8` relative plus `2e-12·scale` absolute.
fn find_switch<C: Fn(f64) -> f64, T: Fn(f64) -> f64>(
    core: C,
    tail: T,
    side: f64,
    from: f64,
    to: f64,
    scale: f64,
) -> Blend {
    let w = BLEND_WIDTH;
    let mut best = Blend {
        side,
        start: from,
        width: w,
        mismatch: f64::INFINITY,
    };
    let mut a = from;
    while a + w <= to + 1e-12 {
        let worst = [0.0, 0.5, 1.0].iter().fold(0.0f64, |m, f| {
            let t = side * (a + f * w);
            let tv = tail(t);
            m.max((core(t) - tv).abs() / (1e-8 * tv.abs() + 2e-12 * scale))
        });
        if worst < best.mismatch {
            best.start = a;
            best.mismatch = worst;
        }
        if worst <= 1.0 {
            break;
        }
        a += 0.25;
    }
    best
}

/// Period and cutoff shared by the spectral sums of one solution.
#[derive(Debug, Clone, Copy)]
struct SpectralPlan {
    period: f64,
    right_max: f64,
    left_max: f64,
}

fn spectral_plan(params: &CharParams, roots: &RootSet, grid: &GridSpec, left_needed: bool) -> SpectralPlan {
    let base = Closed::new(params.c, params.d);
    let gamma_r = roots.lambda1.z.abs().min(base.r1.abs());
    let gamma_l = roots.lambda0.z.min(base.r0);
    let right_max = (CORE_LENGTHS / gamma_r).min(grid.half_width) + 2.0 * BLEND_WIDTH;
    let left_max = if left_needed {
        (CORE_LENGTHS / gamma_l).min(grid.half_width) + 2.0 * BLEND_WIDTH
    } else {
        0.0
    };
    let period = (right_max + ALIAS_LENGTHS / gamma_l).max(left_max + ALIAS_LENGTHS / gamma_r);
    SpectralPlan {
        period,
        right_max,
        left_max,
    }
}

/// `P(iu)`, `e^{-iuch} khat(iu)` and `chi(iu)`.
fn on_axis(p: &CharParams, u: f64) -> (Complex64, Complex64, Complex64) {
    let pz = Complex64::new(-u * u - p.d, -p.c * u);
    let e = Complex64::from_polar(1.0, -u * p.ch()) * p.kernel.transform_imag(u);
    (pz, e, pz - p.xi * e)
}

/// `v = v_0 + w` with `v_0` the closed form for `xi = 0` and `w` the
/// inverse transform of `xi E/(P chi)`.
fn spectral_v(p: &CharParams, period: f64) -> Result<SpectralCore> {
    let params = *p;
    let bound = |u: f64| {
        let m = params.kernel.imag_axis_bound(u);
        params.xi * m / std::f64::consts::PI * quartic_tail(u, params.d.abs(), params.d.abs() + params.xi * m)
    };
    let cutoff = choose_cutoff(bound, SPECTRAL_TOL)?;
    let sum = SpectralSum::new(period, cutoff, move |u| {
        let (pz, e, chi) = on_axis(&params, u);
        params.xi * e / (pz * chi)
    });
    Ok(SpectralCore {
        base: Base::Closed(Closed::new(p.c, p.d)),
        sum,
    })
}

/// Spectral representation of `K∗v` for a density kernel.
fn spectral_kv(p: &CharParams, period: f64) -> Result<SpectralCore> {
    let params = *p;
    match p.kernel {
        KernelSpec::Uniform { a } => {
            let bound = |u: f64| {
                let m = params.kernel.imag_axis_bound(u);
                params.xi * m * m / std::f64::consts::PI
                    * quartic_tail(u, params.d.abs(), params.d.abs() + params.xi * m)
            };
            let cutoff = choose_cutoff(bound, SPECTRAL_TOL)?;
            let sum = SpectralSum::new(period, cutoff, move |u| {
                let (pz, e, chi) = on_axis(&params, u);
                params.kernel.transform_imag(u) * params.xi * e / (pz * chi)
            });
            Ok(SpectralCore {
                base: Base::Averaged(Closed::new(p.c, p.d), a),
                sum,
            })
        }
        _ => {
            let bound = |u: f64| {
                let m = params.kernel.imag_axis_bound(u);
                m / std::f64::consts::PI * quadratic_tail(u, params.d.abs() + params.xi * m)
            };
            let cutoff = choose_cutoff(bound, SPECTRAL_TOL)?;
            let sum = SpectralSum::new(period, cutoff, move |u| {
                let (_, _, chi) = on_axis(&params, u);
                params.kernel.transform_imag(u) / chi
            });
            Ok(SpectralCore { base: Base::None, sum })
        }
    }
}

/// `v(t, xi)` on a symmetric grid with exact evaluation anywhere.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub params: CharParams,
    pub roots: RootSet,
    pub samples: GridFunction,
    pub tails: TailAsymptotics,
    pub method: Method,
    pub right_tail: TailModel,
    pub left_tail: TailModel,
    pub blends: Vec<Blend>,
    closed: Option<Closed>,
    steps: Option<(StepSolution, f64)>,
    spectral: Option<SpectralCore>,
    plan: Option<SpectralPlan>,
    right: Chain,
    left: Chain,
}

impl FundamentalSolution {
    fn piece(&self, piece: Piece, t: f64) -> f64 {
        match piece {
            Piece::Closed => self.closed.expect("closed form").eval(t),
            Piece::Steps => {
                let (s, scale) = self.steps.as_ref().expect("step solution");
                scale * s.u_at(t)
            }
            Piece::Spectral => self.spectral.as_ref().expect("spectral core").eval(t),
            Piece::Tail => {
                if t >= 0.0 {
                    self.right_tail.eval(t)
                } else {
                    self.left_tail.eval(t)
                }
            }
        }
    }

    /// `v(t)` at any real `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let chain = if t >= 0.0 { &self.right } else { &self.left };
        chain.eval(t.abs(), |p| self.piece(p, t))
    }

    pub fn dt(&self) -> f64 {
        self.samples.dt
    }

    /// Index of `t = 0` in `samples`.
    pub fn zero_index(&self) -> usize {
        self.samples.node_index(0.0).expect("t = 0 is a node")
    }

    /// `K∗v` on the sample grid with its tail models.
    pub fn kernel_convolution(&self) -> Result<Convolved> {
        if self.params.kernel.is_dirac() {
            return Ok(Convolved {
                samples: self.samples.clone(),
                right_tail: self.right_tail.clone(),
                left_tail: self.left_tail.clone(),
                blends: Vec::new(),
            });
        }
        let grid = GridSpec {
            half_width: -self.samples.t0,
            dt: self.samples.dt,
        };
        let plan = self
            .plan
            .unwrap_or_else(|| spectral_plan(&self.params, &self.roots, &grid, true));
        let core = spectral_kv(&self.params, plan.period)?;
        let right_tail = self.right_tail.convolved(&self.params.kernel);
        let left_tail = self.left_tail.convolved(&self.params.kernel);
        let scale = core.eval(0.0).abs();
        let rb = find_switch(
            |t| core.eval(t),
            |t| right_tail.eval(t),
            1.0,
            1.0,
            plan.right_max,
            scale,
        );
        let lb = find_switch(|t| core.eval(t), |t| left_tail.eval(t), -1.0, 1.0, plan.left_max, scale);
        let value = |t: f64| {
            let (b, tail) = if t >= 0.0 {
                (&rb, &right_tail)
            } else {
                (&lb, &left_tail)
            };
            let x = t.abs();
            if x <= b.start {
                core.eval(t)
            } else if x >= b.start + b.width {
                tail.eval(t)
            } else {
                let w = smooth_step((x - b.start) / b.width);
                (1.0 - w) * core.eval(t) + w * tail.eval(t)
            }
        };
        let samples = sample_grid(&grid, value, &left_tail, &right_tail);
        Ok(Convolved {
            samples,
            right_tail,
            left_tail,
            blends: vec![rb, lb],
        })
    }
}

/// `K∗v` samples and tails.
#[derive(Debug, Clone)]
pub struct Convolved {
    pub samples: GridFunction,
    pub right_tail: TailModel,
    pub left_tail: TailModel,
    pub blends: Vec<Blend>,
}

fn descriptor(model: &TailModel) -> Option<Tail> {
    match model.terms.as_slice() {
        [only] if only.t_coeff == 0.0 => Some(Tail::exponential(only.rate, only.coeff)),
        _ => None,
    }
}

fn sample_grid<F: Fn(f64) -> f64 + Sync>(grid: &GridSpec, f: F, left: &TailModel, right: &TailModel) -> GridFunction {
    let m = grid.nodes_per_side();
    let values: Vec<f64> = (0..=2 * m)
        .into_par_iter()
        .map(|i| f((i as f64 - m as f64) * grid.dt))
        .collect();
    let mut g = GridFunction::new(-(m as f64) * grid.dt, grid.dt, values);
    g.left_tail = descriptor(left).or_else(|| g.fit_tail(true, 0.1, 0.0));
    g.right_tail = descriptor(right).or_else(|| g.fit_tail(false, 0.1, 0.0));
    g
}

fn tail_asymptotics(roots: &RootSet, deg_plus: bool, deg_minus: bool) -> TailAsymptotics {
    TailAsymptotics {
        lambda_plus: roots.lambda1.z,
        rho_plus: 1.0 / roots.lambda1.chi_prime,
        lambda_minus: roots.lambda0.z,
        rho_minus: -1.0 / roots.lambda0.chi_prime,
        remainder_rates: (roots.lambda2_value(), roots.lambda_m1_value()),
        gamma: roots.lambda1.z.abs().min(roots.lambda0.z),
        degenerate_plus: deg_plus,
        degenerate_minus: deg_minus,
    }
}

/// Builds `v(·, xi)`: closed form when the delayed term is absent or
/// instantaneous, method of steps plus spectral continuation for a point
/// mass, spectral inversion with the `xi = 0` resolvent subtracted
/// otherwise. Far tails come from the residues at the real zeros.
pub fn fundamental_solution(params: &CharParams, grid: Option<GridSpec>) -> Result<FundamentalSolution> {
    let roots = real_root_set(params).map_err(|e| match e {
        Error::NoNegativeRoot | Error::NoPositiveRoot => Error::NotHyperbolic,
        other => other,
    })?;
    let grid = grid.unwrap_or_else(|| GridSpec::default_for(params, &roots));
    if !(grid.dt > 0.0 && grid.half_width > 2.0 * grid.dt) {
        return Err(crate::error::invalid("grid", "need dt > 0 and L > 2 dt"));
    }
    let (right_tail, deg_plus) = tails::right_model(params, &roots);
    let (left_tail, deg_minus) = tails::left_model(params, &roots);
    let mut fs = FundamentalSolution {
        params: *params,
        roots,
        samples: GridFunction::new(0.0, grid.dt, Vec::new()),
        tails: tail_asymptotics(&roots, deg_plus, deg_minus),
        method: Method::ClosedFormXi0,
        right_tail,
        left_tail,
        blends: Vec::new(),
        closed: None,
        steps: None,
        spectral: None,
        plan: None,
        right: Chain::single(Piece::Closed),
        left: Chain::single(Piece::Closed),
    };
    let dirac = params.kernel.is_dirac();
    if params.xi == 0.0 || (dirac && params.ch() == 0.0) {
        let d_eff = params.d + if dirac { params.xi } else { 0.0 };
        fs.closed = Some(Closed::new(params.c, d_eff));
    } else if dirac {
        fs.method = Method::LocalSteps;
        let lambda0 = roots.lambda0.z;
        let t_steps = ((1e-12 / f64::EPSILON).ln() / lambda0)
            .min(steps::default_horizon(lambda0))
            .max(2.0 * BLEND_WIDTH);
        let st = StepSolution::integrate(params, lambda0, t_steps)?;
        fs.steps = Some((st, -1.0 / roots.lambda0.chi_prime));
        let plan = spectral_plan(params, &roots, &grid, false);
        let plan = SpectralPlan {
            right_max: plan.right_max.max(t_steps + 2.0 * BLEND_WIDTH),
            ..plan
        };
        let plan = SpectralPlan {
            period: plan.period.max(plan.right_max + ALIAS_LENGTHS / roots.lambda0.z),
            ..plan
        };
        fs.spectral = Some(spectral_v(params, plan.period)?);
        fs.plan = Some(plan);
        let w0 = (t_steps - BLEND_WIDTH, t_steps);
        fs.right = Chain {
            pieces: vec![Piece::Steps, Piece::Spectral],
            windows: vec![w0],
        };
        let scale = fs.eval(0.0).abs();
        let b = find_switch(
            |t| fs.piece(Piece::Spectral, t),
            |t| fs.right_tail.eval(t),
            1.0,
            t_steps,
            plan.right_max,
            scale,
        );
        fs.right.pieces.push(Piece::Tail);
        fs.right.windows.push((b.start, b.start + b.width));
        fs.blends.push(b);
        fs.left = Chain::single(Piece::Steps);
    } else {
        fs.method = Method::FourierSubtraction;
        let plan = spectral_plan(params, &roots, &grid, true);
        fs.spectral = Some(spectral_v(params, plan.period)?);
        fs.plan = Some(plan);
        fs.right = Chain::single(Piece::Spectral);
        fs.left = Chain::single(Piece::Spectral);
        let scale = fs.eval(0.0).abs();
        let rb = find_switch(
            |t| fs.piece(Piece::Spectral, t),
            |t| fs.right_tail.eval(t),
            1.0,
            BLEND_WIDTH,
            plan.right_max,
            scale,
        );
        let lb = find_switch(
            |t| fs.piece(Piece::Spectral, t),
            |t| fs.left_tail.eval(t),
            -1.0,
            BLEND_WIDTH,
            plan.left_max,
            scale,
        );
        fs.right = Chain {
            pieces: vec![Piece::Spectral, Piece::Tail],
            windows: vec![(rb.start, rb.start + rb.width)],
        };
        fs.left = Chain {
            pieces: vec![Piece::Spectral, Piece::Tail],
            windows: vec![(lb.start, lb.start + lb.width)],
        };
        fs.blends = vec![rb, lb];
    }
    fs.samples = sample_grid(&grid, |t| fs.eval(t), &fs.left_tail, &fs.right_tail);
    Ok(fs)
}

/// `v` on `[0, t_end]` by the method of steps alone (point-mass kernel,
/// `xi > 0`, `ch > 0`).
pub fn v_local_steps(params: &CharParams, t_end: f64, dt: f64) -> Result<GridFunction> {
    let roots = real_root_set(params).map_err(|_| Error::NotHyperbolic)?;
    let lambda0 = roots.lambda0.z;
    let st = StepSolution::integrate(params, lambda0, t_end)?;
    let scale = -1.0 / roots.lambda0.chi_prime;
    let n = (t_end / dt).round() as usize;
    Ok(GridFunction::new(
        0.0,
        dt,
        (0..=n).map(|i| scale * st.u_at(i as f64 * dt)).collect(),
    ))
}

/// `v` on `[-half_width, half_width]` by spectral inversion without using
/// real zeros, for gains beyond `xi*` where `v` may change sign. Returns the
/// samples and the largest sample with its location.
pub fn sign_probe(params: &CharParams, half_width: f64, dt: f64) -> Result<(GridFunction, f64, f64)> {
    let period = 2.0 * half_width + 60.0;
    let core = spectral_v(params, period)?;
    let grid = GridSpec { half_width, dt };
    let g = sample_grid(&grid, |t| core.eval(t), &TailModel::default(), &TailModel::default());
    let (i, &max) = g
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty grid");
    let at = g.t(i);
    Ok((g, max, at))
}

/// Result of [`apply_resolvent`].
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub u: GridFunction,
    /// Sup over interior nodes of `|u'' - cu' - du - xi(K∗u)(t-ch) + f|`.
    pub residual: f64,
}

/// `u = -v∗f` on the grid of `f`. Outside its grid `f` is continued by its
/// tail descriptors (or constantly); the kink of `v` at 0 is corrected to
/// fourth order.
pub fn apply_resolvent(fs: &FundamentalSolution, f: &GridFunction) -> Result<Resolvent> {
    let dt = fs.dt();
    if (f.dt - dt).abs() > 1e-12 * dt {
        return Err(Error::GridMismatch(format!("dt {} vs {}", f.dt, dt)));
    }
    let m = fs.zero_index();
    let v = &fs.samples.values;
    let n = f.len();
    // f on the extended grid t0 - m·dt ..= t_end + m·dt
    let ext: Vec<f64> = (0..n + 2 * m)
        .map(|j| f.eval(f.t0 + (j as f64 - m as f64) * dt))
        .collect();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            // ∫ v(t_i - s) f(s) ds with s = t_i - k·dt
            let mut acc = 0.0;
            for (k, vk) in v.iter().enumerate() {
                let lag = k as f64 - m as f64;
                let j = (i as f64 + m as f64 - lag) as usize;
                let w = if k == 0 || k == v.len() - 1 { 0.5 } else { 1.0 };
                acc += w * vk * ext[j];
            }
            -(acc * dt + dt * dt / 12.0 * f.values[i])
        })
        .collect();
    let mut u = GridFunction::new(f.t0, dt, values);
    u.left_tail = None;
    u.right_tail = None;
    let residual = resolvent_residual(fs, &u, f);
    Ok(Resolvent { u, residual })
}

/// `(K∗u)(x)` by trapezoid quadrature of the density on the `u` grid.
fn kernel_average(kernel: &KernelSpec, u: &GridFunction, x: f64) -> Option<f64> {
    match kernel.density(0.0) {
        None => {
            if x < u.t0 || x > u.t_end() {
                None
            } else {
                Some(u.eval(x))
            }
        }
        Some(_) => {
            let (lo, hi) = kernel.effective_support();
            if x - hi < u.t0 || x - lo > u.t_end() {
                return None;
            }
            let dt = u.dt;
            let k0 = (lo / dt).floor() as i64;
            let k1 = (hi / dt).ceil() as i64;
            let mut acc = 0.0;
            for k in k0..=k1 {
                let s = k as f64 * dt;
                let w = if k == k0 || k == k1 { 0.5 } else { 1.0 };
                acc += w * kernel.density(s).unwrap() * u.eval(x - s);
            }
            Some(acc * dt)
        }
    }
}

fn resolvent_residual(fs: &FundamentalSolution, u: &GridFunction, f: &GridFunction) -> f64 {
    let p = &fs.params;
    let dt = u.dt;
    (2..u.len().saturating_sub(2))
        .into_par_iter()
        .filter_map(|i| {
            let t = u.t(i);
            let ku = kernel_average(&p.kernel, u, t - p.ch())?;
            let (d1, d2) = crate::numerics::central5(&u.values, i, dt);
            Some((d2 - p.c * d1 - p.d * u.values[i] - p.xi * ku + f.values[i]).abs())
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests;
