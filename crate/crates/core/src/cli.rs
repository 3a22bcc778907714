//! Subcommand dispatch and report/CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::charfun::{
    c_sharp, chi0_positive_roots, classify_point, domain_map, real_root_set, xi_star, CharParams, DomainMembership,
    RootSet,
};
use crate::config::RunConfig;
use crate::frontsolve::{solve_front, FrontSolution, ORDER_TOL};
use crate::fundsol::{check_fundsol, fundamental_solution, GridSpec};
use crate::model::{check_hypotheses, ModelSpec, HYPOTHESIS_TOL};
use crate::reduction::build_xi;
use crate::verify::run_all;
use crate::{fmt17, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NOT_IN_DL: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckModel,
    Charfun,
    XiStar,
    CSharp,
    DomainMap,
    Fundsol,
    Solve,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckModel => "check-model",
            Command::Charfun => "charfun",
            Command::XiStar => "xi-star",
            Command::CSharp => "c-sharp",
            Command::DomainMap => "domain-map",
            Command::Fundsol => "fundsol",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

/// Exit code for a pipeline error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotInDL { .. } => EXIT_NOT_IN_DL,
        Error::IterationLimitReached { .. }
        | Error::CollapsedToZero { .. }
        | Error::OrderingViolated { .. }
        | Error::ConvergenceFailure { .. } => EXIT_CONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// Plain-text report; every checked number is printed with its tolerance.
struct Report {
    text: String,
}

impl Report {
    fn new(cmd: Command, cfg: &RunConfig) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "command = {}", cmd.name());
        let _ = writeln!(text, "config_sha256 = {}", cfg.hash());
        let _ = writeln!(text, "\n[config]");
        text.push_str(&cfg.to_text());
        let _ = writeln!(text, "\n[results]");
        Report { text }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn value(&mut self, name: &str, x: f64) {
        self.line(format!("{name} = {}", fmt17(x)));
    }

    /// `name = x (tol: ...) PASS|FAIL`.
    fn check(&mut self, name: &str, x: f64, tol: &str, pass: bool) -> bool {
        self.line(format!(
            "{name} = {} (tol: {tol}) {}",
            fmt17(x),
            if pass { "PASS" } else { "FAIL" }
        ));
        pass
    }

    fn error(&mut self, e: &Error) -> i32 {
        self.line(format!("error = {e}"));
        exit_code(e)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::write(dir.join(name), contents)
}

/// Runs `cmd`, writing CSVs and `report.txt` into `out_dir`, and returns
/// the process exit code.
pub fn run_command(cmd: Command, cfg: &RunConfig, out_dir: &Path, at_c_sharp: bool) -> i32 {
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("cannot create {}: {e}", out_dir.display());
        return EXIT_IO;
    }
    let mut report = Report::new(cmd, cfg);
    let mut files: Vec<(&'static str, String)> = Vec::new();
    let code = match cfg.model() {
        Err(e) => report.error(&e),
        Ok(model) => {
            report.line(format!("rescaling = {}", model.rescaling_note()));
            let model = if at_c_sharp {
                match c_sharp(model.h, &model) {
                    Ok(cs) => {
                        report.line("c = c#(h) (--at-c-sharp)");
                        report.value("c_sharp_model_units", cs);
                        model.with_point(model.h, cs)
                    }
                    Err(e) => {
                        let code = report.error(&e);
                        return finish(out_dir, &report, &files, code);
                    }
                }
            } else {
                model
            };
            report.value("h_model_units", model.h);
            report.value("c_model_units", model.c);
            dispatch(cmd, cfg, &model, &mut report, &mut files)
        }
    };
    finish(out_dir, &report, &files, code)
}

fn finish(out_dir: &Path, report: &Report, files: &[(&'static str, String)], code: i32) -> i32 {
    let written = files
        .iter()
        .try_for_each(|(name, body)| write_file(out_dir, name, body))
        .and_then(|_| write_file(out_dir, "report.txt", &report.text));
    print!("{}", report.text);
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("cannot write to {}: {e}", out_dir.display());
            EXIT_IO
        }
    }
}

fn dispatch(
    cmd: Command,
    cfg: &RunConfig,
    model: &ModelSpec,
    report: &mut Report,
    files: &mut Vec<(&'static str, String)>,
) -> i32 {
    let result = match cmd {
        Command::CheckModel => check_model(cfg, model, report),
        Command::Charfun => charfun(model, report),
        Command::XiStar => xi_star(model.c, model.h, &model.kernel).map(|x| {
            report.value("xi_star", x);
            report.value("g_prime_kappa_abs", model.constants.g_prime_kappa.abs());
            EXIT_OK
        }),
        Command::CSharp => c_sharp(model.h, model).map(|x| {
            report.value("c_sharp", x);
            EXIT_OK
        }),
        Command::DomainMap => domain_map(cfg.map_h, cfg.map_c, model).map(|map| {
            let inside = map
                .cells
                .iter()
                .filter(|c| c.membership.is_some_and(|m| m.in_dl))
                .count();
            let failed = map.cells.iter().filter(|c| c.membership.is_none()).count();
            report.line(format!("cells = {}", map.cells.len()));
            report.line(format!("cells_in_DL = {inside}"));
            report.line(format!("cells_unclassified = {failed}"));
            files.push(("domain_map.csv", map.to_csv()));
            EXIT_OK
        }),
        Command::Fundsol => fundsol(cfg, model, report, files),
        Command::Solve => solve(cfg, model, report, files),
        Command::Verify => Ok(verify(report)),
    };
    result.unwrap_or_else(|e| report.error(&e))
}

fn check_model(cfg: &RunConfig, model: &ModelSpec, report: &mut Report) -> crate::Result<i32> {
    let k = &model.constants;
    report.value("kappa", k.kappa);
    report.value("g_prime_0", k.g_prime_0);
    report.value("g_prime_kappa", k.g_prime_kappa);
    let r = check_hypotheses(&model.g, k, cfg.n_samples)?;
    for d in &r.details {
        report.check(
            &format!("{} margin (worst at u = {})", d.name, fmt17(d.worst_point)),
            d.margin,
            &if d.tolerance == 0.0 {
                ">= 0".to_string()
            } else {
                format!(">= -{:e}", d.tolerance)
            },
            d.margin >= -d.tolerance,
        );
    }
    report.line(format!("M = {}", r.m_holds));
    report.line(format!("ST = {}", r.st_holds));
    report.line(format!("subtangent_at_0 = {}", r.subtangent_at_0));
    report.line(format!("holder_at_0 = {}", r.gco_holds));
    if let Some((c, theta)) = k.gco_witness {
        report.line(format!("holder_witness = C {} theta {}", fmt17(c), fmt17(theta)));
    }
    report.line(format!("hypothesis_tolerance = {HYPOTHESIS_TOL:e}"));
    Ok(if r.all_hold() { EXIT_OK } else { EXIT_VALIDATION })
}

fn roots_block(report: &mut Report, prefix: &str, roots: &RootSet) {
    report.value(&format!("{prefix}.lambda2"), roots.lambda2_value());
    report.value(&format!("{prefix}.lambda1"), roots.lambda1.z);
    report.value(&format!("{prefix}.lambda0"), roots.lambda0.z);
    report.value(&format!("{prefix}.lambda_m1"), roots.lambda_m1_value());
    for r in roots.finite_roots() {
        if r.near_degenerate() {
            report.line(format!("{prefix}: near-double zero at {} (|chi'| < 1e-8)", fmt17(r.z)));
        }
    }
}

fn membership_block(report: &mut Report, m: &DomainMembership) {
    report.line(format!("in_D0 = {}", m.in_d0));
    report.line(format!("on_D0_boundary = {}", m.on_d0_boundary));
    report.line(format!("in_Dkappa = {}", m.in_dkappa));
    report.line(format!("in_DL = {}", m.in_dl));
    report.value("c_sharp", m.c_sharp_at_h);
    report.value("xi_star", m.xi_star_at);
    report.value("margin_kappa", m.margin_kappa);
}

fn charfun(model: &ModelSpec, report: &mut Report) -> crate::Result<i32> {
    match chi0_positive_roots(model) {
        Some(pair) => {
            report.value("chi0.mu0", pair.mu0);
            report.value("chi0.mu1", pair.mu1);
            report.line(format!("chi0.degenerate = {}", pair.degenerate));
        }
        None => report.line("chi0: no positive real zero"),
    }
    match real_root_set(&CharParams::chi_kappa(model)) {
        Ok(roots) => roots_block(report, "chi_kappa", &roots),
        Err(e) => report.line(format!("chi_kappa: {e}")),
    }
    membership_block(report, &classify_point(model.h, model.c, model)?);
    Ok(EXIT_OK)
}

fn fundsol(
    cfg: &RunConfig,
    model: &ModelSpec,
    report: &mut Report,
    files: &mut Vec<(&'static str, String)>,
) -> crate::Result<i32> {
    let base = CharParams::chi_kappa(model);
    let xi = match cfg.fundsol_xi {
        Some(xi) => xi,
        None => match build_xi(model) {
            Ok((xi, _)) => {
                report.line("xi = |g'(kappa)| + delta (auto)");
                xi
            }
            Err(_) => {
                report.line("xi = xi*/2 (auto; point outside D_kappa)");
                0.5 * xi_star(model.c, model.h, &model.kernel)?
            }
        },
    };
    report.value("xi", xi);
    let grid = cfg.fundsol_half_width.map(|half_width| GridSpec {
        half_width,
        dt: cfg.fundsol_dt,
    });
    let fs = fundamental_solution(&base.with_xi(xi), grid)?;
    let r = check_fundsol(&fs);
    report.line(format!("method = {}", fs.method.name()));
    report.value("half_width", -fs.samples.t0);
    report.value("dt", fs.dt());
    let mut ok = report.check("max_value", r.max_value, "< 0", r.negative());
    report.value("max_at", r.max_at);
    ok &= report.check(
        "argmin",
        r.argmin,
        &format!("|.| <= dt = {}", fs.dt()),
        r.argmin.abs() <= fs.dt(),
    );
    ok &= report.check("jump_dv_err", r.jump1_err, "1e-3", r.jump1_err <= 1e-3);
    ok &= report.check("jump_d2v_err", r.jump2_err, "1e-2", r.jump2_err <= 1e-2);
    ok &= report.check(
        "monotone_violation_left",
        r.monotone_violation_left,
        "1e-12",
        r.monotone_violation_left <= 1e-12,
    );
    ok &= report.check(
        "monotone_violation_right",
        r.monotone_violation_right,
        "1e-12",
        r.monotone_violation_right <= 1e-12,
    );
    ok &= report.check(
        "abs_convexity_violation_left",
        r.abs_convexity_violation_left,
        "1e-10",
        r.abs_convexity_violation_left <= 1e-10,
    );
    ok &= report.check(
        "interior_residual",
        r.interior_residual,
        "1e-4",
        r.interior_residual <= 1e-4,
    );
    report.value("tail_rate_right", r.tail_rate_right);
    report.value("lambda1", fs.tails.lambda_plus);
    report.value("tail_rate_left", r.tail_rate_left);
    report.value("lambda0", fs.tails.lambda_minus);
    for p in &r.laplace {
        ok &= report.check(
            &format!("laplace_rel_err(z = {})", fmt17(p.z)),
            p.rel_err,
            "1e-5",
            p.rel_err <= 1e-5,
        );
    }
    files.push(("fundsol.csv", fs.samples.to_csv("t,v")));
    Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
}

fn solve(
    cfg: &RunConfig,
    model: &ModelSpec,
    report: &mut Report,
    files: &mut Vec<(&'static str, String)>,
) -> crate::Result<i32> {
    let m = classify_point(model.h, model.c, model)?;
    membership_block(report, &m);
    if !m.in_dl {
        return Err(Error::NotInDL {
            h: model.h,
            c: model.c,
            reason: "see membership above".into(),
        });
    }
    if m.on_d0_boundary {
        report.line("warning: c = c#(h); convergence may be slow at the boundary");
    }
    let sol = match solve_front(model, &cfg.solver) {
        Ok(sol) => sol,
        Err(e @ Error::IterationLimitReached { .. }) if m.on_d0_boundary => {
            report.line("slow convergence at c = c#(h): the last sup step above is the diagnostic");
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    files.push(("kernelN.csv", sol.reduction.n.to_csv("t,N")));
    files.push(("profile.csv", sol.profile.to_csv("t,phi")));
    Ok(if front_block(report, &sol) {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

fn front_block(report: &mut Report, sol: &FrontSolution) -> bool {
    let red = &sol.reduction;
    let op = &sol.operator;
    let d = &sol.diagnostics;
    let kappa = sol.kappa();
    report.value("kappa", kappa);
    report.value("xi", red.xi);
    report.value("delta", red.delta);
    report.value("N.mass_error", red.mass_error);
    for p in &red.laplace {
        report.value(&format!("N.laplace_rel_err(z = {})", fmt17(p.z)), p.rel_err);
    }
    report.value("N.min_sample", red.min_sample);
    report.value("mu0", op.mu0);
    report.value("mu0_discrete", op.mu_discrete);
    report.line(format!("iterations = {}", sol.iterations));
    report.value("last_sup_step", sol.sup_steps.last().copied().unwrap_or(f64::NAN));
    report.value("shift", sol.shift);
    let mut ok = report.check(
        "max_pointwise_increase",
        sol.max_increase,
        &format!("{ORDER_TOL:e} * kappa"),
        sol.max_increase <= ORDER_TOL * kappa,
    );
    ok &= report.check(
        "monotone_violation",
        d.monotone_violation,
        &format!("{ORDER_TOL:e} * kappa"),
        d.monotone_violation <= ORDER_TOL * kappa,
    );
    report.line(format!("in_range = {}", d.in_range));
    ok &= d.in_range;
    report.check("residual_ftc", d.residual_ftc, "1e-9", d.residual_ftc <= 1e-9);
    report.check(
        "residual_yp",
        d.residual_yp,
        "1e-4 * kappa",
        d.residual_yp <= 1e-4 * kappa,
    );
    report.check(
        "left_boundary_gap",
        d.left_boundary_gap,
        "1e-3",
        d.left_boundary_gap <= 1e-3,
    );
    report.check(
        "right_boundary_gap",
        d.right_boundary_gap,
        "1e-3",
        d.right_boundary_gap <= 1e-3,
    );
    report.check(
        "decay_rate_left",
        d.decay_rate_left,
        "|rate/mu0 - 1| <= 0.02",
        (d.decay_rate_left / d.mu0 - 1.0).abs() <= 0.02,
    );
    report.line(format!("decay_class = {}", d.decay_class.name()));
    if let Some(r) = d.decay_rate_right {
        report.line(format!("decay_rate_right = {} (no target)", fmt17(r)));
    }
    ok
}

fn verify(report: &mut Report) -> i32 {
    let results = run_all();
    for r in &results {
        report.line(r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    report.line(format!("passed = {}/{}", results.len() - failed, results.len()));
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
