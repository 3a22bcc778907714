use super::*;
use crate::charfun::xi_star;

fn dirac(c: f64, h: f64, xi: f64) -> CharParams {
    CharParams::new(c, h, 1.0, xi, KernelSpec::Dirac)
}

#[test]
fn closed_form_without_drift() {
    let fs = fundamental_solution(&dirac(0.0, 0.0, 0.0), None).unwrap();
    assert_eq!(fs.method, Method::ClosedFormXi0);
    for (t, want) in [(-1.0, -(-1f64).exp() / 2.0), (0.0, -0.5), (2.0, -(-2f64).exp() / 2.0)] {
        assert!((fs.eval(t) - want).abs() < 1e-15);
    }
    assert!((fs.tails.rho_plus + 0.5).abs() < 1e-12);
    assert!((fs.tails.lambda_plus + 1.0).abs() < 1e-12);
    let r = check_fundsol(&fs);
    assert!((r.dv_plus - r.dv_minus - 1.0).abs() < 1e-3);
}

#[test]
fn steps_agree_with_spectral_inversion() {
    let p = dirac(1.0, 1.0, 0.5);
    let steps = v_local_steps(&p, 10.0, 0.01).unwrap();
    let grid = GridSpec {
        half_width: 12.0,
        dt: 0.01,
    };
    let (spec, _, _) = sign_probe(&p, grid.half_width, grid.dt).unwrap();
    let m = spec.node_index(0.0).unwrap();
    let worst = (0..steps.len()).fold(0.0f64, |w, i| w.max((steps.values[i] - spec.values[m + i]).abs()));
    assert!(worst < 1e-7, "worst {worst}");
    let fs = fundamental_solution(&p, None).unwrap();
    assert_eq!(fs.method, Method::LocalSteps);
    let worst = (0..=1000).fold(0.0f64, |w, i| {
        let t = -10.0 + 0.02 * i as f64;
        w.max((fs.eval(t) - spec.eval(t)).abs())
    });
    assert!(worst < 1e-9, "composite worst {worst}");
}

#[test]
fn local_steps_report() {
    let fs = fundamental_solution(&dirac(1.0, 1.0, 0.5), None).unwrap();
    let r = check_fundsol(&fs);
    eprintln!("{r:#?}\n{:?}", fs.blends);
    assert!(r.negative());
    assert!(r.argmin.abs() <= fs.dt());
    assert!(r.jump1_err < 1e-3 && r.jump2_err < 1e-2);
    assert!(r.monotone_violation_left <= 1e-12 && r.monotone_violation_right <= 1e-12);
    assert!(r.abs_convexity_violation_left <= 1e-10);
    assert!(r.interior_residual <= 1e-6);
    for probe in &r.laplace {
        assert!(probe.rel_err < 1e-8, "{probe:?}");
    }
}

#[test]
fn sign_change_beyond_critical_gain() {
    let xs = xi_star(1.0, 1.0, &KernelSpec::Dirac).unwrap();
    assert!((xs - 0.6767).abs() < 1e-3);
    let (_, max, at) = sign_probe(&dirac(1.0, 1.0, 0.75), 40.0, 0.02).unwrap();
    eprintln!("max {max} at {at}");
    assert!(max > 0.0);
}

#[test]
fn critical_gain_double_zero() {
    let xs = xi_star(1.0, 1.0, &KernelSpec::Dirac).unwrap();
    let fs = fundamental_solution(&dirac(1.0, 1.0, xs), None).unwrap();
    assert!(fs.tails.degenerate_plus);
    let r = check_fundsol(&fs);
    eprintln!("{r:#?}\n{:?}", fs.blends);
    assert!(r.negative());
    assert!(r.monotone_violation_right <= 1e-12);
    assert!(r.interior_residual <= 1e-6);
}

#[test]
fn gaussian_kernel_report() {
    let k = KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 };
    let xs = xi_star(1.0, 1.0, &k).unwrap();
    let p = CharParams::new(1.0, 1.0, 1.0, 0.5 * xs, k);
    let fs = fundamental_solution(&p, None).unwrap();
    assert_eq!(fs.method, Method::FourierSubtraction);
    let r = check_fundsol(&fs);
    eprintln!("{r:#?}\n{:?}", fs.blends);
    assert!(r.negative());
    assert!(r.jump1_err < 1e-3 && r.jump2_err < 1e-2);
    assert!(r.monotone_violation_left <= 1e-12 && r.monotone_violation_right <= 1e-12);
    assert!(r.interior_residual <= 1e-6);
}

#[test]
fn uniform_kernel_convolution_matches_quadrature() {
    let p = CharParams::new(1.5, 0.5, 1.0, 0.4, KernelSpec::Uniform { a: 0.6 });
    let fs = fundamental_solution(&p, None).unwrap();
    let kv = fs.kernel_convolution().unwrap();
    for t in [-2.0, -0.3, 0.0, 0.45, 1.7] {
        // midpoint rule on a fine mesh, kink at 0 handled by splitting
        let n = 20000;
        let (a, b) = (t - 0.6, t + 0.6);
        let mut acc = 0.0;
        for k in 0..n {
            let s = a + (b - a) * (k as f64 + 0.5) / n as f64;
            acc += fs.eval(s);
        }
        let q = acc * (b - a) / n as f64 / 1.2;
        assert!(
            (kv.samples.eval(t) - q).abs() < 1e-7,
            "t={t}: {} vs {q}",
            kv.samples.eval(t)
        );
    }
}

#[test]
fn resolvent_of_constant_and_bump() {
    let fs = fundamental_solution(&dirac(0.0, 0.0, 0.0), None).unwrap();
    let one = GridFunction::symmetric(5.0, fs.dt(), |_| 1.0);
    let r = apply_resolvent(&fs, &one).unwrap();
    assert!(
        r.u.values.iter().all(|u| (u - 1.0).abs() < 1e-9),
        "{:?}",
        &r.u.values[..3]
    );
    let zero = GridFunction::symmetric(5.0, fs.dt(), |_| 0.0);
    assert!(apply_resolvent(&fs, &zero).unwrap().u.sup_norm() == 0.0);

    let fs = fundamental_solution(&dirac(1.0, 1.0, 0.5), None).unwrap();
    let bump = GridFunction::symmetric(15.0, fs.dt(), |t| (-t * t).exp());
    let r = apply_resolvent(&fs, &bump).unwrap();
    eprintln!("bump residual {}", r.residual);
    assert!(r.residual <= 1e-5);
    let bad = GridFunction::symmetric(5.0, 0.02, |_| 1.0);
    assert!(matches!(apply_resolvent(&fs, &bad), Err(Error::GridMismatch(_))));
}

#[test]
fn beyond_critical_gain_is_not_hyperbolic() {
    assert_eq!(
        fundamental_solution(&dirac(1.0, 1.0, 0.75), None).unwrap_err(),
        Error::NotHyperbolic
    );
}
