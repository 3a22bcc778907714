//! Small numerical building blocks shared by the solver modules.

/// Bisection on a sign change of `f` in `[lo, hi]`. Stops once the bracket
/// is narrower than `rel_tol * max(1, |x|)` or no float lies strictly
/// between the endpoints.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) || (hi - lo).abs() <= rel_tol * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // endpoint with the smaller residual
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Least-squares line through `(x, y)` points; returns `(slope, intercept)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Trapezoid rule with Gregory end corrections (fifth order for smooth
/// data); needs at least five samples, otherwise plain trapezoid.
pub fn gregory(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let trap: f64 = values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]);
    if n < 5 {
        return h * trap;
    }
    let (f0, f1, f2) = (values[0], values[1], values[2]);
    let (fn0, fn1, fn2) = (values[n - 1], values[n - 2], values[n - 3]);
    let d0 = f1 - f0;
    let d20 = f2 - 2.0 * f1 + f0;
    let dn = fn0 - fn1;
    let d2n = fn0 - 2.0 * fn1 + fn2;
    let mut corr = -(dn - d0) / 12.0 - (d2n + d20) / 24.0;
    if n >= 8 {
        let d30 = values[3] - 3.0 * f2 + 3.0 * f1 - f0;
        let d3n = fn0 - 3.0 * fn1 + 3.0 * fn2 - values[n - 4];
        corr -= 19.0 * (d3n - d30) / 720.0;
    }
    h * (trap + corr)
}

/// Four-point Lagrange interpolation on a uniform grid starting at `t0`.
/// Returns `None` outside the grid.
pub fn lagrange4(values: &[f64], t0: f64, dt: f64, t: f64) -> Option<f64> {
    let n = values.len();
    let x = (t - t0) / dt;
    if x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
        return None;
    }
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        return Some(values[(r as usize).min(n - 1)]);
    }
    if n < 4 {
        let i = (x.floor() as usize).min(n - 2);
        let w = x - i as f64;
        return Some(values[i] * (1.0 - w) + values[i + 1] * w);
    }
    let i = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = x - i as f64;
    let (y0, y1, y2, y3) = (values[i], values[i + 1], values[i + 2], values[i + 3]);
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    Some(y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3)
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant on a uniform grid.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    t0: f64,
    dt: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(t0: f64, dt: f64, y: &[f64]) -> Self {
        let n = y.len();
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
        let mut m = vec![0.0; n];
        if n >= 2 {
            m[0] = delta[0];
            m[n - 1] = delta[n - 2];
            for i in 1..n - 1 {
                m[i] = if delta[i - 1] * delta[i] <= 0.0 {
                    0.0
                } else {
                    // harmonic mean keeps the interpolant monotone
                    2.0 * delta[i - 1] * delta[i] / (delta[i - 1] + delta[i])
                };
            }
            for i in 0..n - 1 {
                if delta[i] == 0.0 {
                    m[i] = 0.0;
                    m[i + 1] = 0.0;
                } else {
                    let a = m[i] / delta[i];
                    let b = m[i + 1] / delta[i];
                    let s = a * a + b * b;
                    if s > 9.0 {
                        let tau = 3.0 / s.sqrt();
                        m[i] = tau * a * delta[i];
                        m[i + 1] = tau * b * delta[i];
                    }
                }
            }
        }
        MonotoneCubic {
            t0,
            dt,
            y: y.to_vec(),
            m,
        }
    }

    /// Evaluates inside the grid; clamps to the end values outside.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.y.len();
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.y[0];
        }
        if x >= (n - 1) as f64 {
            return self.y[n - 1];
        }
        let i = x.floor() as usize;
        let s = x - i as f64;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * self.dt * self.m[i] + h01 * self.y[i + 1] + h11 * self.dt * self.m[i + 1]
    }

    /// First `t` where the interpolant reaches `level`, assuming it is
    /// non-decreasing; `None` if the level is not crossed.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let idx = self
            .y
            .windows(2)
            .position(|w| w[0] <= level && w[1] >= level && w[1] > w[0])?;
        let lo = self.t0 + idx as f64 * self.dt;
        Some(bisect(|t| self.eval(t) - level, lo, lo + self.dt, 0.0))
    }
}

/// Five-point central first and second derivatives at index `i`.
pub fn central5(values: &[f64], i: usize, h: f64) -> (f64, f64) {
    let (a, b, c, d, e) = (values[i - 2], values[i - 1], values[i], values[i + 1], values[i + 2]);
    let d1 = (a - 8.0 * b + 8.0 * d - e) / (12.0 * h);
    let d2 = (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h);
    (d1, d2)
}

/// Damped Newton iteration for a 2×2 system. Each step is halved (at most
/// 60 times) until the residual norm decreases.
pub fn newton2<F>(f: F, mut x: [f64; 2], tol: f64, max_iter: usize) -> Result<[f64; 2], [f64; 2]>
where
    F: Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
{
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let (mut r, mut j) = f(x);
    for _ in 0..max_iter {
        if !norm(r).is_finite() {
            return Err(x);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(x);
        }
        let dx = [
            (r[0] * j[1][1] - r[1] * j[0][1]) / det,
            (j[0][0] * r[1] - j[1][0] * r[0]) / det,
        ];
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=60 {
            let trial = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            let (rt, jt) = f(trial);
            if norm(rt).is_finite() && norm(rt) < norm(r) * (1.0 - 1e-4 * lambda) {
                x = trial;
                r = rt;
                j = jt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let step = lambda * dx[0].hypot(dx[1]);
        if step <= tol * (1.0 + x[0].abs().max(x[1].abs())) {
            return Ok(x);
        }
        if !accepted {
            // no decrease possible: accept if already at round-off level
            return if norm(r) < 1e-12 { Ok(x) } else { Err(x) };
        }
    }
    Err(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0);
        assert!((r - 2f64.sqrt()).abs() < 4e-16);
    }

    #[test]
    fn gregory_is_high_order() {
        let h = 0.01;
        let v: Vec<f64> = (0..=300).map(|i| (i as f64 * h).exp()).collect();
        let exact = 3f64.exp() - 1.0;
        assert!((gregory(&v, h) - exact).abs() < 1e-9);
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let v: Vec<f64> = (0..20).map(|i| f(-1.0 + 0.1 * i as f64)).collect();
        for &t in &[-0.97, -0.5, 0.333, 0.89] {
            assert!((lagrange4(&v, -1.0, 0.1, t).unwrap() - f(t)).abs() < 1e-12);
        }
        assert!(lagrange4(&v, -1.0, 0.1, 5.0).is_none());
    }

    #[test]
    fn monotone_cubic_preserves_order_and_finds_crossing() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.2 - 5.0).tanh()).collect();
        let mc = MonotoneCubic::new(-5.0, 0.2, &y);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..2000 {
            let v = mc.eval(-5.0 + k as f64 * 0.0049);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        let t = mc.crossing(0.0).unwrap();
        assert!(t.abs() < 1e-3);
    }

    #[test]
    fn newton2_circle_line() {
        let f = |x: [f64; 2]| {
            (
                [x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]],
                [[2.0 * x[0], 2.0 * x[1]], [1.0, -1.0]],
            )
        };
        let x = newton2(f, [2.0, 0.3], 1e-14, 100).unwrap();
        assert!((x[0] - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
