//! Hermetic verification suite: every fixture is built in-process.

use std::time::Instant;

use crate::charfun::{c_sharp, domain_map, xi_star, CharParams, Range};
use crate::frontsolve::{solve_with_uniqueness, FrontSolution, SolverConfig};
use crate::fundsol::{
    apply_resolvent, check_fundsol, fundamental_solution, sign_probe, v_local_steps, FundsolReport, GridSpec,
};
use crate::grid::GridFunction;
use crate::kernel::KernelSpec;
use crate::model::{ModelSpec, NonlinearitySpec};
use crate::reduction::reduce;
use crate::Result;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Measured values with the tolerances they were checked against.
    pub detail: String,
    pub seconds: f64,
    /// Runtime budget in seconds (reported, not enforced).
    pub budget: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<28} {:>7.2}s (budget {}s)  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.budget,
            self.detail
        )
    }
}

/// Accumulates named checks of the form `value <= tol`.
struct Checks {
    ok: bool,
    parts: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            ok: true,
            parts: Vec::new(),
        }
    }

    fn le(&mut self, what: &str, value: f64, tol: f64) {
        let pass = value <= tol;
        self.ok &= pass;
        self.parts.push(format!("{what}={value:.3e} (<= {tol:.0e})"));
    }

    fn flag(&mut self, what: &str, pass: bool, note: String) {
        self.ok &= pass;
        self.parts.push(format!("{what}: {note}"));
    }

    fn error(&mut self, what: &str, e: &crate::Error) {
        self.ok = false;
        self.parts.push(format!("{what}: error: {e}"));
    }
}

fn timed(id: u32, name: &'static str, budget: f64, f: impl FnOnce(&mut Checks)) -> CriterionResult {
    let start = Instant::now();
    let mut checks = Checks::new();
    f(&mut checks);
    CriterionResult {
        id,
        name,
        passed: checks.ok,
        detail: checks.parts.join("; "),
        seconds: start.elapsed().as_secs_f64(),
        budget,
    }
}

fn dirac(c: f64, h: f64, xi: f64) -> CharParams {
    CharParams::new(c, h, 1.0, xi, KernelSpec::Dirac)
}

const GAUSS: KernelSpec = KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 };

fn nicholson(kernel: KernelSpec, p: f64, h: f64, c: f64) -> Result<ModelSpec> {
    ModelSpec::new(kernel, NonlinearitySpec::Nicholson { p, delta: 1.0 }, h, c)
}

/// Largest value of `(z^2 - cz - 1) e^{chz}` over `z < 0`: the gain beyond
/// which the local characteristic function loses its negative zeros.
fn xi_star_by_scan(c: f64, h: f64) -> f64 {
    let f = |z: f64| (z * z - c * z - 1.0) * (c * h * z).exp();
    let (mut best, mut zb) = (f64::NEG_INFINITY, 0.0);
    for k in 1..=40_000 {
        let z = -(k as f64) * 1e-3;
        if f(z) > best {
            best = f(z);
            zb = z;
        }
    }
    let (mut a, mut b) = (zb - 1e-3, (zb + 1e-3).min(0.0));
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    f(0.5 * (a + b))
}

pub fn closed_form() -> CriterionResult {
    timed(1, "closed-form v", 1.0, |ck| {
        match fundamental_solution(&dirac(0.0, 0.0, 0.0), None) {
            Ok(fs) => {
                let err = (0..=20_000).fold(0.0f64, |m, i| {
                    let t = -10.0 + 1e-3 * i as f64;
                    m.max((fs.eval(t) + 0.5 * (-t.abs()).exp()).abs())
                });
                ck.le("sup|v + e^{-|t|}/2|", err, 1e-8);
            }
            Err(e) => ck.error("fundamental_solution", &e),
        }
    })
}

pub fn cross_method() -> CriterionResult {
    timed(2, "steps vs spectral", 5.0, |ck| {
        let p = dirac(1.0, 1.0, 0.5);
        let dt = 0.01;
        match (v_local_steps(&p, 10.0, dt), sign_probe(&p, 12.0, dt)) {
            (Ok(steps), Ok((spec, _, _))) => {
                let m = spec.node_index(0.0).expect("grid contains 0");
                let err = (0..steps.len()).fold(0.0f64, |w, i| w.max((steps.values[i] - spec.values[m + i]).abs()));
                ck.le("sup diff on [0,10]", err, 1e-5);
            }
            (Err(e), _) | (_, Err(e)) => ck.error("solve", &e),
        }
    })
}

fn fundsol_report(p: &CharParams, grid: Option<GridSpec>) -> Result<(FundsolReport, f64)> {
    let fs = fundamental_solution(p, grid)?;
    Ok((check_fundsol(&fs), fs.dt()))
}

pub fn jumps() -> CriterionResult {
    timed(3, "derivative jumps", 10.0, |ck| {
        let gauss_xi = xi_star(1.0, 1.0, &GAUSS).map(|x| 0.5 * x);
        let sets = [
            ("dirac c=1 h=1 xi=0.5", Ok(dirac(1.0, 1.0, 0.5))),
            ("dirac c=2 h=0.5 xi=0.3", Ok(dirac(2.0, 0.5, 0.3))),
            (
                "gauss c=1 h=1 xi=xi*/2",
                gauss_xi.map(|xi| CharParams::new(1.0, 1.0, 1.0, xi, GAUSS)),
            ),
        ];
        for (name, p) in sets {
            match p.and_then(|p| fundsol_report(&p, None)) {
                Ok((r, _)) => {
                    ck.le(&format!("{name} |dv'-1|"), r.jump1_err, 1e-3);
                    ck.le(&format!("{name} |dv''-c|"), r.jump2_err, 1e-2);
                }
                Err(e) => ck.error(name, &e),
            }
        }
    })
}

pub fn negativity_and_shape() -> CriterionResult {
    timed(4, "negativity and shape", 30.0, |ck| {
        let grid = GridSpec {
            half_width: 40.0,
            dt: 0.01,
        };
        let xs = match xi_star(1.0, 1.0, &KernelSpec::Dirac) {
            Ok(x) => x,
            Err(e) => return ck.error("xi_star", &e),
        };
        let mut cases: Vec<(String, Result<CharParams>)> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|f| (format!("dirac xi={f}xi*"), Ok(dirac(1.0, 1.0, f * xs))))
            .collect();
        cases.push((
            "gauss xi=xi*/2".to_string(),
            xi_star(1.0, 1.0, &GAUSS).map(|x| CharParams::new(1.0, 1.0, 1.0, 0.5 * x, GAUSS)),
        ));
        let mut max_value = f64::NEG_INFINITY;
        let (mut argmin, mut mono, mut conv) = (0.0f64, 0.0f64, 0.0f64);
        for (name, p) in cases {
            match p.and_then(|p| fundsol_report(&p, Some(grid))) {
                Ok((r, dt)) => {
                    max_value = max_value.max(r.max_value);
                    argmin = argmin.max(r.argmin.abs() / dt);
                    mono = mono.max(r.monotone_violation_left).max(r.monotone_violation_right);
                    conv = conv.max(r.abs_convexity_violation_left);
                }
                Err(e) => ck.error(&name, &e),
            }
        }
        ck.flag("max sample", max_value < 0.0, format!("{max_value:.3e} (< 0)"));
        ck.le("|argmin|/dt", argmin, 1.0);
        ck.le("monotone violation", mono, 1e-12);
        ck.le("convexity violation of |v| on t<=0", conv, 1e-10);
        let positive = (1..=5).find_map(|k| {
            let xi = xs * (1.0 + 0.1 * k as f64);
            sign_probe(&dirac(1.0, 1.0, xi), 40.0, 0.02)
                .ok()
                .filter(|(_, max, _)| *max > 0.0)
                .map(|(_, max, at)| (xi / xs, max, at))
        });
        match positive {
            Some((r, max, at)) => ck.flag("sign change", true, format!("xi={r:.1}xi*: v({at:.2})={max:.3e} > 0")),
            None => ck.flag(
                "sign change",
                false,
                "no positive sample for xi in (xi*, 1.5xi*]".into(),
            ),
        }
    })
}

pub fn xi_star_oracle() -> CriterionResult {
    timed(5, "xi* closed forms", 1.0, |ck| {
        let z = (3.0 - 33f64.sqrt()) / 2.0;
        let cases = [(1.0, 1.0, 5.0 * (-2f64).exp()), (5.0, 0.2, (5.0 - 2.0 * z) * z.exp())];
        for (c, h, want) in cases {
            match xi_star(c, h, &KernelSpec::Dirac) {
                Ok(got) => {
                    ck.le(&format!("c={c} h={h} |xi*-closed|"), (got - want).abs(), 1e-8);
                    ck.le(
                        &format!("c={c} h={h} |closed-scan|"),
                        (want - xi_star_by_scan(c, h)).abs(),
                        1e-8,
                    );
                }
                Err(e) => ck.error("xi_star", &e),
            }
        }
    })
}

pub fn c_sharp_oracle() -> CriterionResult {
    timed(6, "c# oracle and monotonicity", 5.0, |ck| {
        for p in [2.0, 6.0] {
            match nicholson(KernelSpec::Dirac, p, 0.0, 5.0).and_then(|m| c_sharp(0.0, &m)) {
                Ok(cs) => ck.le(
                    &format!("g'(0)={p} |c#(0)-2sqrt(g'(0)-1)|"),
                    (cs - 2.0 * (p - 1.0).sqrt()).abs(),
                    1e-8,
                ),
                Err(e) => ck.error("c_sharp", &e),
            }
        }
        let hs = [0.0, 0.25, 0.5, 1.0, 2.0];
        let values: Result<Vec<f64>> =
            nicholson(KernelSpec::Dirac, 6.0, 0.0, 5.0).and_then(|m| hs.iter().map(|&h| c_sharp(h, &m)).collect());
        match values {
            Ok(v) => {
                let gap = v.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
                ck.flag(
                    "strictly decreasing",
                    gap >= 1e-10,
                    format!("min drop {gap:.3e} (>= 1e-10)"),
                );
            }
            Err(e) => ck.error("c_sharp", &e),
        }
    })
}

pub fn kernel_identities() -> CriterionResult {
    timed(7, "kernel N identities", 5.0, |ck| {
        match nicholson(KernelSpec::Dirac, 6.0, 0.2, 5.0).and_then(|m| reduce(&m)) {
            Ok(red) => {
                ck.le("|mass - 1|", red.mass_error, 1e-6);
                let worst = red.laplace.iter().map(|p| p.rel_err).fold(0.0f64, f64::max);
                ck.flag(
                    "probes",
                    red.laplace.len() >= 3,
                    format!("{} strip points (>= 3)", red.laplace.len()),
                );
                ck.le("Laplace rel err", worst, 1e-5);
                ck.flag(
                    "N > 0",
                    red.min_sample > 0.0,
                    format!("min sample {:.3e} (> 0)", red.min_sample),
                );
            }
            Err(e) => ck.error("reduce", &e),
        }
    })
}

fn front_checks(ck: &mut Checks, sol: &FrontSolution, yp_tol: f64, max_iter: usize) {
    let d = &sol.diagnostics;
    let kappa = sol.kappa();
    ck.flag(
        "iterations",
        sol.iterations <= max_iter,
        format!("{} (<= {max_iter})", sol.iterations),
    );
    ck.le("monotone violation/kappa", d.monotone_violation / kappa, 1e-12);
    ck.le("residual_yp/kappa", d.residual_yp / kappa, yp_tol);
    ck.le("residual_ftc", d.residual_ftc, 1e-9);
    ck.le("phi(-L)", d.left_boundary_gap, 1e-3);
    ck.le("kappa-phi(L)", d.right_boundary_gap, 1e-3);
    ck.le(
        &format!("|slope/mu0-1| (slope {:.5}, mu0 {:.5})", d.decay_rate_left, d.mu0),
        (d.decay_rate_left / d.mu0 - 1.0).abs(),
        0.02,
    );
}

/// Criteria 8, 9 and 10, which share one solve.
pub fn local_front() -> Vec<CriterionResult> {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let sol = nicholson(KernelSpec::Dirac, 6.0, 0.2, 5.0).and_then(|m| solve_with_uniqueness(&m, &cfg));
    let seconds = start.elapsed().as_secs_f64();
    let mut out = Vec::new();
    let mut push = |id, name, budget, f: &dyn Fn(&mut Checks, &FrontSolution)| {
        let mut ck = Checks::new();
        match &sol {
            Ok(s) => f(&mut ck, s),
            Err(e) => ck.error("solve", e),
        }
        out.push(CriterionResult {
            id,
            name,
            passed: ck.ok,
            detail: ck.parts.join("; "),
            seconds: if id == 8 { seconds } else { 0.0 },
            budget,
        });
    };
    push(8, "local front", 60.0, &|ck, s| front_checks(ck, s, 1e-4, cfg.max_iter));
    push(9, "monotone iteration", 60.0, &|ck, s| {
        ck.le("max pointwise increase/kappa", s.max_increase / s.kappa(), 1e-12)
    });
    push(
        10,
        "uniqueness probe",
        120.0,
        &|ck, s| match s.diagnostics.uniqueness_sup_diff {
            Some(d) => ck.le("sup |phi_a - phi_b|", d, 1e-4),
            None => ck.flag("sup diff", false, "not computed".into()),
        },
    );
    out
}

/// Picks the middle `D_L` cell of a speed sweep at `h = 0.2`.
pub fn nonlocal_point() -> Result<(f64, f64)> {
    let model = nicholson(GAUSS, 6.0, 0.2, 5.0)?;
    let h = Range {
        min: 0.2,
        max: 0.2,
        step: 1.0,
    };
    let c = Range {
        min: 2.0,
        max: 8.0,
        step: 0.5,
    };
    let map = domain_map(h, c, &model)?;
    let inside: Vec<_> = map
        .cells
        .iter()
        .filter(|cell| cell.membership.is_some_and(|m| m.in_dl))
        .collect();
    if inside.is_empty() {
        return Err(crate::error::invalid("domain map", "no D_L cell at h = 0.2"));
    }
    let cell = inside[inside.len() / 2];
    Ok((cell.h, cell.c))
}

pub fn nonlocal_front() -> CriterionResult {
    timed(11, "non-local front", 120.0, |ck| {
        let cfg = SolverConfig::default();
        let run = nonlocal_point().and_then(|(h, c)| {
            let m = nicholson(GAUSS, 6.0, h, c)?;
            Ok((h, c, solve_with_uniqueness(&m, &cfg)?))
        });
        match run {
            Ok((h, c, sol)) => {
                ck.parts.push(format!("gauss sigma=0.5 at h={h} c={c}"));
                front_checks(ck, &sol, 5e-4, cfg.max_iter);
                if let Some(d) = sol.diagnostics.uniqueness_sup_diff {
                    ck.le("uniqueness", d, 1e-4);
                }
            }
            Err(e) => ck.error("solve", &e),
        }
    })
}

pub fn resolvent() -> CriterionResult {
    timed(12, "resolvent property", 10.0, |ck| {
        let gauss = xi_star(1.0, 1.0, &GAUSS).map(|x| CharParams::new(1.0, 1.0, 1.0, 0.5 * x, GAUSS));
        let sets = [
            ("dirac c=1 h=1 xi=0.5", Ok(dirac(1.0, 1.0, 0.5))),
            ("gauss c=1 h=1 xi=xi*/2", gauss),
        ];
        for (name, p) in sets {
            let r = p.and_then(|p| {
                let fs = fundamental_solution(&p, None)?;
                let f = GridFunction::symmetric(15.0, fs.dt(), |t| (-t * t).exp());
                Ok((apply_resolvent(&fs, &f)?.residual, f.sup_norm()))
            });
            match r {
                Ok((res, sup)) => ck.le(&format!("{name} residual/sup|f|"), res / sup, 1e-5),
                Err(e) => ck.error(name, &e),
            }
        }
    })
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    let mut out = vec![
        closed_form(),
        cross_method(),
        jumps(),
        negativity_and_shape(),
        xi_star_oracle(),
        c_sharp_oracle(),
        kernel_identities(),
    ];
    out.extend(local_front());
    out.push(nonlocal_front());
    out.push(resolvent());
    out
}
