//! Uniform-grid functions with exponential tail extrapolation.

use crate::error::{Error, Result};
use crate::numerics::linear_fit;

/// `offset + coeff·e^{rate·t}` beyond one end of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub offset: f64,
    pub rate: f64,
    pub coeff: f64,
}

impl Tail {
    pub fn exponential(rate: f64, coeff: f64) -> Self {
        Tail {
            offset: 0.0,
            rate,
            coeff,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.coeff * (self.rate * t).exp()
    }

    /// `∫ coeff·e^{rate s} ds` over `[a, b]` (offset excluded); `a` or `b`
    /// may be infinite when the integral converges.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let ea = if a == f64::NEG_INFINITY {
            0.0
        } else {
            (self.rate * a).exp()
        };
        let eb = if b == f64::INFINITY { 0.0 } else { (self.rate * b).exp() };
        self.coeff * (eb - ea) / self.rate
    }
}

/// Real function sampled at `t0 + i·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    pub left_tail: Option<Tail>,
    pub right_tail: Option<Tail>,
}

impl GridFunction {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Self {
        GridFunction {
            t0,
            dt,
            values,
            left_tail: None,
            right_tail: None,
        }
    }

    /// Samples `f` on `[-half, half]`; `half/dt` is rounded to an integer so
    /// that `t = 0` is a node.
    pub fn symmetric<F: Fn(f64) -> f64>(half: f64, dt: f64, f: F) -> Self {
        let m = (half / dt).round() as usize;
        let values = (0..=2 * m).map(|i| f((i as f64 - m as f64) * dt)).collect();
        GridFunction::new(-(m as f64) * dt, dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len().saturating_sub(1))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Index of the node at `t`, if `t` is a node up to rounding.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let i = x.round();
        if (x - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < self.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Cubic interpolation inside, tails (or end values) outside.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.len();
        if t < self.t0 {
            return self.left_tail.map_or(self.values[0], |tail| tail.eval(t));
        }
        if t > self.t_end() {
            return self.right_tail.map_or(self.values[n - 1], |tail| tail.eval(t));
        }
        crate::numerics::lagrange4(&self.values, self.t0, self.dt, t).unwrap_or(self.values[n - 1])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::GridMismatch(format!("dt {} vs {}", self.dt, other.dt)));
        }
        let shift = (other.t0 - self.t0) / self.dt;
        if (shift - shift.round()).abs() > 1e-6 {
            return Err(Error::GridMismatch("grids are not aligned".into()));
        }
        Ok(())
    }

    /// Least-squares fit of `ln|value - offset|` on the outer `fraction` of
    /// samples on one side (`left = true` for the left end).
    pub fn fit_tail(&self, left: bool, fraction: f64, offset: f64) -> Option<Tail> {
        let n = self.len();
        let m = ((n as f64 * fraction) as usize).max(3).min(n);
        let idx: Vec<usize> = if left { (0..m).collect() } else { (n - m..n).collect() };
        let pts: Vec<(f64, f64)> = idx
            .iter()
            .filter_map(|&i| {
                let y = self.values[i] - offset;
                (y != 0.0).then(|| (self.t(i), y.abs().ln()))
            })
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let sign = (self.values[idx[0]] - offset).signum();
        let (rate, icpt) = linear_fit(&pts);
        Some(Tail {
            offset,
            rate,
            coeff: sign * icpt.exp(),
        })
    }

    /// Worst relative mismatch between a tail and the outer 10% of samples.
    pub fn tail_mismatch(&self, left: bool) -> Option<f64> {
        let tail = if left { self.left_tail? } else { self.right_tail? };
        let n = self.len();
        let m = (n / 10).max(1);
        let range: Vec<usize> = if left { (0..m).collect() } else { (n - m..n).collect() };
        Some(range.iter().fold(0.0f64, |w, &i| {
            let y = self.values[i] - tail.offset;
            let model = tail.eval(self.t(i)) - tail.offset;
            w.max(((y - model) / y).abs())
        }))
    }

    /// CSV with the given two-column header and 17-significant-digit values.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::with_capacity(48 * (self.len() + 1));
        out.push_str(header);
        out.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&crate::fmt17(self.t(i)));
            out.push(',');
            out.push_str(&crate::fmt17(*v));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_has_zero_node() {
        let g = GridFunction::symmetric(1.0, 0.1, |t| t);
        assert_eq!(g.len(), 21);
        assert_eq!(g.node_index(0.0), Some(10));
        assert!(g.values[10].abs() < 1e-15);
    }

    #[test]
    fn tails_extrapolate_and_integrate() {
        let mut g = GridFunction::symmetric(5.0, 0.01, |t| (-t.abs()).exp());
        g.left_tail = g.fit_tail(true, 0.1, 0.0);
        g.right_tail = g.fit_tail(false, 0.1, 0.0);
        assert!(g.tail_mismatch(true).unwrap() < 1e-10);
        assert!((g.eval(7.0) - (-7f64).exp()).abs() < 1e-12);
        let r = g.right_tail.unwrap();
        assert!((r.integral(5.0, f64::INFINITY) - (-5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_and_mismatch() {
        let g = GridFunction::new(0.0, 0.5, vec![0.0, 1.0, 0.0]);
        let h = GridFunction::new(0.25, 0.5, vec![0.0]);
        assert!(g.check_compatible(&h).is_err());
        assert_eq!(g.eval(-1.0), 0.0);
        let csv = g.to_csv("t,v");
        assert_eq!(
            csv.lines().nth(2).unwrap(),
            "5.0000000000000000e-1,1.0000000000000000e0"
        );
    }
}
