//! Characteristic functions of the linearized profile equation, their real
//! zeros, the critical gain `xi*`, the critical speed `c_#(h)`, and the
//! classification of `(h, c)` against the domains `D_0`, `D_kappa`, `D_L`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::ModelSpec;
use crate::numerics::{bisect, newton2};

/// Parameters of `chi(z) = z^2 - c z - d - xi e^{-chz} khat(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharParams {
    pub c: f64,
    pub h: f64,
    pub d: f64,
    pub xi: f64,
    pub kernel: KernelSpec,
}

/// Largest exponent evaluated before reporting overflow.
const MAX_EXPONENT: f64 = 700.0;

impl CharParams {
    pub fn new(c: f64, h: f64, d: f64, xi: f64, kernel: KernelSpec) -> Self {
        CharParams { c, h, d, xi, kernel }
    }

    /// `chi_0` of a model: `d = 1` and gain `-g'(0)`.
    pub fn chi0(model: &ModelSpec) -> Self {
        CharParams::new(model.c, model.h, 1.0, -model.constants.g_prime_0, model.kernel)
    }

    /// `chi_kappa` of a model: `d = 1` and gain `|g'(kappa)|`.
    pub fn chi_kappa(model: &ModelSpec) -> Self {
        CharParams::new(model.c, model.h, 1.0, model.constants.g_prime_kappa.abs(), model.kernel)
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        CharParams { xi, ..*self }
    }

    pub fn ch(&self) -> f64 {
        self.c * self.h
    }

    /// `ln(e^{-chz} khat(z))`.
    pub fn ln_exp_term(&self, z: f64) -> f64 {
        -self.ch() * z + self.kernel.ln_transform(z)
    }

    /// `e^{-chz} khat(z)` (may be `inf`).
    pub fn exp_term(&self, z: f64) -> f64 {
        self.ln_exp_term(z).exp()
    }

    /// `z^2 - c z - d`.
    pub fn quadratic(&self, z: f64) -> f64 {
        z * z - self.c * z - self.d
    }

    /// Unchecked evaluation; may return `±inf`.
    pub fn eval(&self, z: f64) -> f64 {
        let e = if self.xi == 0.0 {
            0.0
        } else {
            self.xi * self.exp_term(z)
        };
        self.quadratic(z) - e
    }

    /// `[chi, chi', chi'', chi''']` at `z`.
    pub fn derivs(&self, z: f64) -> [f64; 4] {
        let e = if self.xi == 0.0 { 0.0 } else { self.exp_term(z) };
        let [l1, l2, l3] = self.kernel.ln_transform_derivs(z);
        let q1 = -self.ch() + l1;
        let e1 = e * q1;
        let e2 = e * (q1 * q1 + l2);
        let e3 = e * (q1 * q1 * q1 + 3.0 * q1 * l2 + l3);
        [
            self.quadratic(z) - self.xi * e,
            2.0 * z - self.c - self.xi * e1,
            2.0 - self.xi * e2,
            -self.xi * e3,
        ]
    }

    pub fn deriv(&self, z: f64) -> f64 {
        self.derivs(z)[1]
    }

    /// Residual tolerance accepted for a root at `z`.
    pub fn root_tolerance(z: f64) -> f64 {
        1e-11 * (1.0 + z * z)
    }

    /// Sign of `chi` as `z -> side·∞`.
    fn asymptotic_sign(&self, side: f64) -> f64 {
        if self.xi > 0.0 && self.kernel.growth_rate(side, self.ch()) > 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Half-width of a window on `side` beyond which the asymptotic sign of
    /// `chi` has taken over for good.
    fn scan_extent(&self, side: f64) -> Result<f64> {
        let mut z = 8.0f64;
        let neg = self.asymptotic_sign(side) < 0.0;
        loop {
            let x = side * z;
            let ln_e = self.ln_exp_term(x);
            if ln_e > MAX_EXPONENT {
                return Err(Error::Overflow { z: x });
            }
            let slope = side * (-self.ch() + self.kernel.ln_transform_derivs(x)[0]);
            let poly = z * z + self.c.abs() * z + self.d.abs();
            let done = if neg {
                self.xi.ln() + ln_e > (2.0 * poly).ln() && slope > 3.0 / z
            } else {
                let forcing = if self.xi > 0.0 { self.xi * ln_e.exp() } else { 0.0 };
                z * z > 2.0 * (self.c.abs() * z + self.d.abs() + forcing) && (self.xi <= 0.0 || slope <= 1.0 / z)
            };
            if done {
                return Ok(z);
            }
            z *= 2.0;
            if z > 1e5 {
                return Err(Error::Overflow { z: x });
            }
        }
    }

    /// Real zeros on one half-axis (`side = ±1`), ordered by distance from
    /// the origin.
    pub fn half_axis_roots(&self, side: f64) -> Result<Vec<f64>> {
        let extent = self.scan_extent(side)?;
        let n = ((400.0 * extent) as usize).max(4000);
        let zs: Vec<f64> = (0..=n).map(|i| side * extent * i as f64 / n as f64).collect();
        let fs: Vec<f64> = zs.iter().map(|&z| self.eval(z)).collect();
        let f = |z: f64| self.eval(z);
        let mut roots = Vec::new();
        let mut bracketed = vec![false; n];
        for i in 0..n {
            if fs[i] == 0.0 {
                if i > 0 {
                    roots.push(zs[i]);
                }
                bracketed[i] = true;
            } else if (fs[i] > 0.0) != (fs[i + 1] > 0.0) && fs[i + 1] != 0.0 {
                roots.push(bisect(f, zs[i], zs[i + 1], 0.0));
                bracketed[i] = true;
            }
        }
        // Extrema that touch or barely cross zero between grid points.
        for i in 1..n {
            let turning = (fs[i] - fs[i - 1]) * (fs[i + 1] - fs[i]) <= 0.0;
            if !turning || bracketed[i - 1] || bracketed[i] {
                continue;
            }
            let (a, b) = (zs[i - 1], zs[i + 1]);
            let d = |z: f64| self.deriv(z);
            let (da, db) = (d(a), d(b));
            if (da > 0.0) == (db > 0.0) {
                continue;
            }
            let zm = bisect(d, a, b, 0.0);
            let m = f(zm);
            if m.abs() <= Self::root_tolerance(zm) {
                roots.push(zm);
            } else if (m > 0.0) != (fs[i] > 0.0) {
                roots.push(bisect(f, a, zm, 0.0));
                roots.push(bisect(f, zm, b, 0.0));
            }
        }
        roots.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap());
        roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
        Ok(roots)
    }
}

/// `chi(z)` with overflow detection.
pub fn chi(params: &CharParams, z: f64) -> Result<f64> {
    if params.xi != 0.0 && params.ln_exp_term(z) > MAX_EXPONENT {
        return Err(Error::Overflow { z });
    }
    Ok(params.eval(z))
}

/// A finite real zero together with `chi'` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: f64,
    pub chi_prime: f64,
}

impl Root {
    fn at(params: &CharParams, z: f64) -> Self {
        Root {
            z,
            chi_prime: params.deriv(z),
        }
    }

    /// `|chi'| < 1e-8`: the zero is (nearly) double.
    pub fn near_degenerate(&self) -> bool {
        self.chi_prime.abs() < 1e-8
    }
}

/// Ordered real zeros `lambda2 <= lambda1 < 0 < lambda0 <= lambda_{-1}`;
/// `None` stands for `∓∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSet {
    pub lambda2: Option<Root>,
    pub lambda1: Root,
    pub lambda0: Root,
    pub lambda_m1: Option<Root>,
}

impl RootSet {
    pub fn lambda2_value(&self) -> f64 {
        self.lambda2.map_or(f64::NEG_INFINITY, |r| r.z)
    }
    pub fn lambda_m1_value(&self) -> f64 {
        self.lambda_m1.map_or(f64::INFINITY, |r| r.z)
    }
    pub fn finite_roots(&self) -> Vec<Root> {
        [self.lambda2, Some(self.lambda1), Some(self.lambda0), self.lambda_m1]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Locates the real zeros of `chi` on both half-axes.
pub fn real_root_set(params: &CharParams) -> Result<RootSet> {
    if params.c * params.c + params.d <= 0.0 {
        return Err(crate::error::invalid("c, d", "need c^2 + d > 0"));
    }
    if params.xi < 0.0 {
        return Err(crate::error::invalid("xi", "must be non-negative"));
    }
    let neg = params.half_axis_roots(-1.0)?;
    let pos = params.half_axis_roots(1.0)?;
    let lambda1 = *neg.first().ok_or(Error::NoNegativeRoot)?;
    let lambda0 = *pos.first().ok_or(Error::NoPositiveRoot)?;
    Ok(RootSet {
        lambda2: neg.get(1).map(|&z| Root::at(params, z)),
        lambda1: Root::at(params, lambda1),
        lambda0: Root::at(params, lambda0),
        lambda_m1: pos.get(1).map(|&z| Root::at(params, z)),
    })
}

/// The two positive zeros `mu0 <= mu1` of `chi_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveRootPair {
    pub mu0: f64,
    pub mu1: f64,
    pub degenerate: bool,
}

const DEGENERATE_MIN: f64 = 1e-10;

/// `chi_0` is strictly convex; returns its two positive zeros, a double
/// zero when its minimum touches 0, or `None`.
pub fn chi0_positive_roots(model: &ModelSpec) -> Option<PositiveRootPair> {
    let p = CharParams::chi0(model);
    chi0_roots_of(&p)
}

fn chi0_roots_of(p: &CharParams) -> Option<PositiveRootPair> {
    let d = |z: f64| p.deriv(z);
    if d(0.0) >= 0.0 {
        return None;
    }
    let mut hi = 1.0;
    while d(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    let zm = bisect(d, 0.0, hi, 0.0);
    let m = p.eval(zm);
    if m.abs() <= DEGENERATE_MIN {
        return Some(PositiveRootPair {
            mu0: zm,
            mu1: zm,
            degenerate: true,
        });
    }
    if m > 0.0 {
        return None;
    }
    let f = |z: f64| p.eval(z);
    let mu0 = bisect(f, 0.0, zm, 0.0);
    let mut top = zm + 1.0;
    while f(top) <= 0.0 {
        top = zm + 2.0 * (top - zm);
    }
    let mu1 = bisect(f, zm, top, 0.0);
    Some(PositiveRootPair {
        mu0,
        mu1,
        degenerate: false,
    })
}

/// Critical gain on one half-axis: the maximum of `xi = P(z)/E(z)` beyond
/// the zero of `P`, refined by damped Newton on `chi = chi' = 0`.
fn xi_star_side(base: &CharParams, side: f64) -> Result<f64> {
    let c = base.c;
    let r = 0.5 * (c + side * (c * c + 4.0 * base.d).sqrt());
    let ln_ratio = |z: f64| base.quadratic(z).ln() - base.ln_exp_term(z);
    let step = 1e-3 * (1.0 + r.abs()).min(10.0);
    let (mut best_z, mut best) = (r, f64::NEG_INFINITY);
    let mut k = 1usize;
    loop {
        let z = r + side * step * k as f64;
        let lr = ln_ratio(z);
        if lr > best {
            best = lr;
            best_z = z;
        }
        if (lr < best - 40.0 && k > 100) || k > 2_000_000 {
            break;
        }
        k += 1;
    }
    if !best.is_finite() {
        return Err(Error::ConvergenceFailure {
            what: "xi* scan",
            last: vec![best_z],
        });
    }
    let system = |x: [f64; 2]| {
        let p = base.with_xi(x[1]);
        let [f0, f1, f2, _] = p.derivs(x[0]);
        let e = p.exp_term(x[0]);
        let e1 = e * (-p.ch() + p.kernel.ln_transform_derivs(x[0])[0]);
        ([f0, f1], [[f1, -e], [f2, -e1]])
    };
    match newton2(system, [best_z, best.exp()], 1e-15, 100) {
        Ok([z, xi]) if xi > 0.0 && (z - r) * side > 0.0 => Ok(xi),
        Ok(last) | Err(last) => {
            // fallback: bisection in xi on "roots persist on this side"
            let persists = |xi: f64| {
                base.with_xi(xi)
                    .half_axis_roots(side)
                    .map(|v| !v.is_empty())
                    .unwrap_or(false)
            };
            let mut lo = 0.0;
            let mut hi = 2.0 * best.exp();
            if persists(hi) {
                return Err(Error::ConvergenceFailure {
                    what: "xi* tangency",
                    last: last.to_vec(),
                });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if persists(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            Ok(lo)
        }
    }
}

/// Critical gain `xi*` for `d = 1`: the largest `xi` for which `chi(·, xi)`
/// keeps real zeros of both signs; `+∞` when no tangency exists.
pub fn xi_star(c: f64, h: f64, kernel: &KernelSpec) -> Result<f64> {
    let base = CharParams::new(c, h, 1.0, 1.0, *kernel);
    let mut best = f64::INFINITY;
    for side in [-1.0, 1.0] {
        if kernel.growth_rate(side, c * h) > 0.0 {
            best = best.min(xi_star_side(&base, side)?);
        }
    }
    Ok(best)
}

/// Minimum of `chi_0` over `z > 0` at speed `c`.
fn chi0_min(model: &ModelSpec, c: f64) -> f64 {
    let p = CharParams::chi0(&model.with_point(model.h, c));
    let d = |z: f64| p.deriv(z);
    if d(0.0) >= 0.0 {
        return p.eval(0.0);
    }
    let mut hi = 1.0;
    while d(hi) <= 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    p.eval(bisect(d, 0.0, hi, 0.0))
}

/// Bisection in `c` on the sign of `min_z chi_0`.
fn c_sharp_bisect(model: &ModelSpec) -> Result<(f64, f64)> {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while chi0_min(model, hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::ConvergenceFailure {
                what: "c_# bracket",
                last: vec![hi],
            });
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi0_min(model, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let p = CharParams::chi0(&model.with_point(model.h, c));
    let mut top = 1.0;
    while p.deriv(top) <= 0.0 && top < 1e6 {
        top *= 2.0;
    }
    Ok((bisect(|z| p.deriv(z), 0.0, top, 0.0), c))
}

/// Newton on `chi_0 = d/dz chi_0 = 0` in the unknowns `(z, c)`.
fn c_sharp_newton(model: &ModelSpec, h: f64, start: [f64; 2]) -> std::result::Result<[f64; 2], [f64; 2]> {
    let beta = model.constants.g_prime_0;
    let kernel = model.kernel;
    let system = move |x: [f64; 2]| {
        let (z, c) = (x[0], x[1]);
        let [l1, l2, _] = kernel.ln_transform_derivs(z);
        let e = (-c * h * z + kernel.ln_transform(z)).exp();
        let q1 = -c * h + l1;
        let f0 = z * z - c * z - 1.0 + beta * e;
        let fz = 2.0 * z - c + beta * e * q1;
        let fzz = 2.0 + beta * e * (q1 * q1 + l2);
        let fc = -z - beta * h * z * e;
        let fzc = -1.0 - beta * h * e * (z * q1 + 1.0);
        ([f0, fz], [[fz, fc], [fzz, fzc]])
    };
    newton2(system, start, 1e-15, 100)
}

/// Critical speed `c_#(h)`: `chi_0` has a positive double zero there, two
/// positive zeros for `c > c_#(h)` and none below.
pub fn c_sharp(h: f64, model: &ModelSpec) -> Result<f64> {
    Ok(c_sharp_with_root(h, model)?.1)
}

/// `(z_#, c_#(h))` where `z_#` is the double zero of `chi_0`.
pub fn c_sharp_with_root(h: f64, model: &ModelSpec) -> Result<(f64, f64)> {
    if model.constants.g_prime_0 <= 1.0 {
        return Err(crate::error::invalid("g'(0)", "must exceed 1"));
    }
    let base = model.with_point(0.0, model.c);
    let (z0, c0) = c_sharp_bisect(&base)?;
    let mut x = match c_sharp_newton(&base, 0.0, [z0, c0]) {
        Ok(x) => x,
        Err(_) => [z0, c0],
    };
    if h == 0.0 {
        return Ok((x[0], x[1]));
    }
    let steps = ((h / 0.1).ceil() as usize).max(1);
    for k in 1..=steps {
        let hk = h * k as f64 / steps as f64;
        match c_sharp_newton(model, hk, x) {
            Ok(next) if next[0] > 0.0 => x = next,
            _ => {
                let (z, c) = c_sharp_bisect(&model.with_point(h, model.c))?;
                return Ok((z, c));
            }
        }
    }
    Ok((x[0], x[1]))
}

pub const TOL_BOUNDARY: f64 = 1e-8;

/// Location of `(h, c)` relative to `D_0`, `D_kappa` and `D_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMembership {
    pub in_d0: bool,
    pub on_d0_boundary: bool,
    pub in_dkappa: bool,
    pub in_dl: bool,
    pub c_sharp_at_h: f64,
    pub xi_star_at: f64,
    pub margin_kappa: f64,
}

fn membership(c: f64, c_sharp_at_h: f64, xi_star_at: f64, gk_abs: f64) -> DomainMembership {
    let in_d0 = c > c_sharp_at_h + TOL_BOUNDARY;
    let on_d0_boundary = (c - c_sharp_at_h).abs() <= TOL_BOUNDARY;
    let margin_kappa = xi_star_at - gk_abs;
    let in_dkappa = margin_kappa > 0.0;
    DomainMembership {
        in_d0,
        on_d0_boundary,
        in_dkappa,
        in_dl: (in_d0 || on_d0_boundary) && in_dkappa,
        c_sharp_at_h,
        xi_star_at,
        margin_kappa,
    }
}

pub fn classify_point(h: f64, c: f64, model: &ModelSpec) -> Result<DomainMembership> {
    let cs = c_sharp(h, model)?;
    let xs = xi_star(c, h, &model.kernel)?;
    Ok(membership(c, cs, xs, model.constants.g_prime_kappa.abs()))
}

/// Inclusive uniform range `min, min + step, ... <= max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.max < self.min {
            return Vec::new();
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DomainCell {
    pub h: f64,
    pub c: f64,
    /// `None` when the cell could not be classified.
    pub membership: Option<DomainMembership>,
}

#[derive(Debug, Clone, Default)]
pub struct DomainMap {
    pub cells: Vec<DomainCell>,
}

pub const MAX_MAP_CELLS: usize = 1_000_000;

/// Classifies every cell of an `h × c` grid (h-major order). Per-cell
/// failures are recorded, never propagated.
pub fn domain_map(h_range: Range, c_range: Range, model: &ModelSpec) -> Result<DomainMap> {
    let hs = h_range.values();
    let cs = c_range.values();
    if hs.len() * cs.len() > MAX_MAP_CELLS {
        return Err(crate::error::invalid("domain map", "more than 1e6 cells"));
    }
    let sharp: Vec<Option<f64>> = hs.par_iter().map(|&h| c_sharp(h, model).ok()).collect();
    let gk = model.constants.g_prime_kappa.abs();
    let cells = hs
        .iter()
        .zip(&sharp)
        .flat_map(|(&h, &cs_h)| cs.iter().map(move |&c| (h, c, cs_h)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(h, c, cs_h)| {
            let membership = cs_h.and_then(|cs| xi_star(c, h, &model.kernel).ok().map(|xs| membership(c, cs, xs, gk)));
            DomainCell { h, c, membership }
        })
        .collect();
    Ok(DomainMap { cells })
}

pub const DOMAIN_MAP_HEADER: &str = "h,c,in_D0,on_D0_boundary,in_Dkappa,in_DL,c_sharp,xi_star,margin_kappa";

impl DomainMap {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.cells.len() + 1));
        out.push_str(DOMAIN_MAP_HEADER);
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&format!("{},{},", crate::fmt17(cell.h), crate::fmt17(cell.c)));
            match cell.membership {
                Some(m) => out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    m.in_d0,
                    m.on_d0_boundary,
                    m.in_dkappa,
                    m.in_dl,
                    crate::fmt17(m.c_sharp_at_h),
                    crate::fmt17(m.xi_star_at),
                    crate::fmt17(m.margin_kappa)
                )),
                None => out.push_str("unknown,unknown,unknown,unknown,unknown,unknown,unknown\n"),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NonlinearitySpec;
    use proptest::prelude::*;

    fn nicholson(p: f64, kernel: KernelSpec, h: f64, c: f64) -> ModelSpec {
        ModelSpec::new(kernel, NonlinearitySpec::Nicholson { p, delta: 1.0 }, h, c).unwrap()
    }

    /// Max of `chi` on one half-axis by dense scan plus golden-section polish.
    fn brute_max(p: &CharParams, side: f64) -> f64 {
        let n = 200_000;
        let extent = 30.0;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..=n {
            let z = side * extent * i as f64 / n as f64;
            let v = p.eval(z);
            if v > best.0 {
                best = (v, z);
            }
        }
        let dz = extent / n as f64;
        let (mut a, mut b) = (best.1 - dz, best.1 + dz);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if p.eval(x1) > p.eval(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        p.eval(0.5 * (a + b))
    }

    fn brute_xi_star(c: f64, h: f64, kernel: KernelSpec) -> f64 {
        let base = CharParams::new(c, h, 1.0, 0.0, kernel);
        let ok = |xi: f64| {
            [-1.0, 1.0]
                .iter()
                .filter(|&&s| kernel.growth_rate(s, c * h) > 0.0)
                .all(|&s| brute_max(&base.with_xi(xi), s) >= 0.0)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while ok(hi) {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn quadratic_roots_without_gain() {
        let p = CharParams::new(1.0, 0.0, 1.0, 0.0, KernelSpec::Dirac);
        let r = real_root_set(&p).unwrap();
        assert!((r.lambda1.z - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((r.lambda0.z - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(r.lambda2.is_none() && r.lambda_m1.is_none());
    }

    #[test]
    fn roots_have_small_residual_and_order() {
        let p = CharParams::new(1.0, 1.0, 1.0, 0.5, KernelSpec::Dirac);
        let r = real_root_set(&p).unwrap();
        for root in r.finite_roots() {
            assert!(p.eval(root.z).abs() <= CharParams::root_tolerance(root.z));
        }
        let l2 = r.lambda2.expect("second negative root");
        assert!(l2.z < r.lambda1.z && r.lambda1.z < 0.0 && r.lambda0.z > 0.0);
        assert!(r.lambda1.chi_prime < 0.0 && r.lambda0.chi_prime > 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for kernel in [
            KernelSpec::Dirac,
            KernelSpec::Gaussian { sigma: 0.5, mean: 0.3 },
            KernelSpec::Uniform { a: 0.7 },
        ] {
            let p = CharParams::new(1.3, 0.4, 1.0, 0.6, kernel);
            for z in [-1.5, -0.2, 0.4, 1.1] {
                let d = p.derivs(z);
                let e = 1e-5;
                for k in 0..3 {
                    let fd = (p.derivs(z + e)[k] - p.derivs(z - e)[k]) / (2.0 * e);
                    assert!(
                        (fd - d[k + 1]).abs() < 1e-6 * (1.0 + fd.abs()),
                        "{kernel:?} z={z} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn xi_star_dirac_closed_forms() {
        let x = xi_star(1.0, 1.0, &KernelSpec::Dirac).unwrap();
        assert!((x - 5.0 * (-2.0f64).exp()).abs() < 1e-12);
        let z = (3.0 - 33f64.sqrt()) / 2.0;
        let x = xi_star(5.0, 0.2, &KernelSpec::Dirac).unwrap();
        assert!((x - (5.0 - 2.0 * z) * z.exp()).abs() < 1e-12);
        assert!(xi_star(1.0, 0.0, &KernelSpec::Dirac).unwrap().is_infinite());
    }

    #[test]
    fn xi_star_matches_brute_force() {
        for (c, h, kernel) in [
            (1.0, 1.0, KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 }),
            (2.0, 0.5, KernelSpec::Uniform { a: 0.3 }),
            (0.7, 1.5, KernelSpec::Gaussian { sigma: 0.3, mean: 0.2 }),
        ] {
            let x = xi_star(c, h, &kernel).unwrap();
            let b = brute_xi_star(c, h, kernel);
            assert!((x - b).abs() < 1e-7 * (1.0 + b), "{kernel:?}: {x} vs {b}");
        }
    }

    #[test]
    fn roots_vanish_above_xi_star() {
        let xs = xi_star(1.0, 1.0, &KernelSpec::Dirac).unwrap();
        let p = CharParams::new(1.0, 1.0, 1.0, xs * 1.01, KernelSpec::Dirac);
        assert_eq!(real_root_set(&p), Err(Error::NoNegativeRoot));
        let r = real_root_set(&p.with_xi(xs * 0.99)).unwrap();
        assert!(r.lambda2.is_some());
    }

    #[test]
    fn chi0_roots_examples() {
        let r = chi0_positive_roots(&nicholson(6.0, KernelSpec::Dirac, 0.0, 5.0)).unwrap();
        assert!((r.mu0 - (5.0 - 5f64.sqrt()) / 2.0).abs() < 1e-13);
        assert!((r.mu1 - (5.0 + 5f64.sqrt()) / 2.0).abs() < 1e-13);
        let r = chi0_positive_roots(&nicholson(6.0, KernelSpec::Dirac, 0.0, 2.0 * 5f64.sqrt())).unwrap();
        assert!(r.degenerate && (r.mu0 - 5f64.sqrt()).abs() < 1e-4);
        assert!(chi0_positive_roots(&nicholson(6.0, KernelSpec::Dirac, 0.0, 4.0)).is_none());
    }

    #[test]
    fn c_sharp_without_delay() {
        for p in [2.0, 6.0] {
            let m = nicholson(p, KernelSpec::Dirac, 0.0, 1.0);
            let beta = m.constants.g_prime_0;
            let cs = c_sharp(0.0, &m).unwrap();
            assert!((cs - 2.0 * (beta - 1.0).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn c_sharp_decreases_with_delay() {
        let m = nicholson(6.0, KernelSpec::Dirac, 0.0, 1.0);
        let vals: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|&h| c_sharp(h, &m).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0] - 1e-10, "{vals:?}");
        }
        let (z, c) = c_sharp_with_root(0.5, &m).unwrap();
        let p = CharParams::chi0(&m.with_point(0.5, c));
        let d = p.derivs(z);
        assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let m = nicholson(6.0, KernelSpec::Dirac, 0.2, 5.0);
        let r = classify_point(0.2, 5.0, &m).unwrap();
        assert!(r.in_d0 && r.in_dkappa && r.in_dl);
        let r = classify_point(0.2, 1.0, &m).unwrap();
        assert!(!r.in_d0 && !r.in_dl);
    }

    #[test]
    fn domain_map_csv_layout() {
        let m = nicholson(6.0, KernelSpec::Dirac, 0.0, 1.0);
        let map = domain_map(
            Range {
                min: 0.0,
                max: 0.5,
                step: 0.25,
            },
            Range {
                min: 3.0,
                max: 5.0,
                step: 1.0,
            },
            &m,
        )
        .unwrap();
        assert_eq!(map.cells.len(), 9);
        let csv = map.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], DOMAIN_MAP_HEADER);
        assert!(lines[1].starts_with("0.0000000000000000e0,3.0000000000000000e0,"));
        assert_eq!(map.cells[3].h, 0.25);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn roots_interlace_in_xi(c in 0.3f64..4.0, h in 0.05f64..1.5, frac in 0.05f64..0.9) {
            let xs = xi_star(c, h, &KernelSpec::Dirac).unwrap();
            let p = CharParams::new(c, h, 1.0, 0.0, KernelSpec::Dirac);
            let a = real_root_set(&p.with_xi(frac * xs.min(5.0))).unwrap();
            let b = real_root_set(&p.with_xi(0.0)).unwrap();
            // more gain pushes both principal roots away from the origin
            prop_assert!(a.lambda1.z <= b.lambda1.z + 1e-12);
            prop_assert!(a.lambda0.z >= b.lambda0.z - 1e-12);
        }

        #[test]
        fn chi0_pair_is_ordered_and_zero(c in 4.6f64..9.0, h in 0.0f64..0.3) {
            let m = nicholson(6.0, KernelSpec::Dirac, h, c);
            if let Some(r) = chi0_positive_roots(&m) {
                let p = CharParams::chi0(&m);
                prop_assert!(0.0 < r.mu0 && r.mu0 <= r.mu1);
                prop_assert!(p.eval(r.mu0).abs() < 1e-10 && p.eval(r.mu1).abs() < 1e-10);
            }
        }
    }
}
