//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report is always printed; exits non-zero when any
//! criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imex_dimsim::bootstrap::start_analytic;
use imex_dimsim::cli::{
    run_convergence, verify_pair, ConvergenceOptions, ConvergenceReport, Integrator, StartPolicy,
};
use imex_dimsim::problems::{linear_test, van_der_pol, ProblemSpec};
use imex_dimsim::stability::{
    characteristic_polynomial, imex_stability_matrix, limit_matrix, scan_constrained, scan_single,
    spectral_radius, stability_matrix, RegionScan,
};
use imex_dimsim::stepper::{
    glm_step, imex_step, partitioned_step, IntegrationState, JacobianRef, NewtonConfig, Partition,
};
use imex_dimsim::tableau::{build_b_matrix, catalog, find_pair, GlmTableau};

/// Name, check and runtime limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, f64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_time(o: Outcome, secs: f64, limit: f64) -> Outcome {
    let pass = o.pass && secs < limit;
    let mut detail = o.detail;
    detail.push_str(&format!("; {secs:.2}s (limit {limit}s)"));
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn criterion_1() -> Outcome {
    let mut worst = Vec::new();
    let mut pass = true;
    for pair in catalog() {
        for row in verify_pair(&pair).unwrap() {
            let r = row.stage_order.max(row.order);
            pass &= r < row.tolerance;
            worst.push(format!(
                "{}/{}: {r:.1e} (tol {:.0e})",
                pair.name, row.member, row.tolerance
            ));
        }
    }
    outcome(pass, worst.join(", "))
}

fn criterion_2() -> Outcome {
    // B as printed for the 2B explicit member.
    let s2 = std::f64::consts::SQRT_2;
    let printed = DMatrix::from_row_slice(
        2,
        2,
        &[
            s2 / 2.0,
            (3.0 - s2) / 4.0,
            (s2 - 1.0) / 2.0,
            (3.0 - s2) / 4.0,
        ],
    );
    let t = &find_pair("2B").unwrap().explicit;
    let rebuilt = build_b_matrix(&t.a, &t.v, t.c.as_slice()).unwrap();
    let diff = (rebuilt - printed).amax();
    outcome(
        diff < 1e-13,
        format!("max |B_rebuilt - B_printed| = {diff:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["2B", "3A", "3B"] {
        for row in verify_pair(&find_pair(name).unwrap()).unwrap() {
            pass &= row.termination < 1e-9;
            parts.push(format!("{name}/{}: {:.1e}", row.member, row.termination));
        }
    }
    outcome(pass, parts.join(", "))
}

/// Real 2-vector of a complex scalar, matching the real form of the
/// linear test problem.
fn to_real(z: Complex64) -> DVector<f64> {
    DVector::from_column_slice(&[z.re, z.im])
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = NewtonConfig::default();
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let pair = &catalog()[trial % 4];
        let w = c(rng.gen_range(-3.0..0.5), rng.gen_range(-3.0..3.0));
        let w_hat = c(
            -(10f64.powf(rng.gen_range(-2.0..3.0))),
            rng.gen_range(-50.0..50.0),
        );
        let y: Vec<Complex64> = (0..pair.r())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let prob = linear_test(w, w_hat).unwrap();
        let state = IntegrationState::new(y.iter().map(|&z| to_real(z)).collect(), 0.0, 1.0);
        let out = imex_step(pair, &state, &prob, &cfg).unwrap();
        let expected = imex_stability_matrix(pair, w, w_hat).unwrap().mul_vec(&y);
        for (got, want) in out.state.y_ext.iter().zip(&expected) {
            let err = (got - to_real(*want)).amax() / want.norm().max(1.0);
            worst = worst.max(err);
        }
    }
    outcome(
        worst < 1e-12,
        format!("100 random (w, w_hat): max relative difference {worst:.2e}"),
    )
}

fn partition_run(t: &GlmTableau, explicit: bool) -> f64 {
    let prob = van_der_pol(1.0).unwrap();
    let pair = find_pair("3B").unwrap();
    let h = 0.01;
    let rhs = |y: &DVector<f64>| prob.f(y) + prob.g(y);
    let fj = prob.nonstiff_jacobian.clone().unwrap();
    let gj = prob.stiff_jacobian.clone().unwrap();
    let jac = move |y: &DVector<f64>| fj(y) + gj(y);
    let jac_opt: Option<JacobianRef<'_>> = if explicit { None } else { Some(&jac) };
    let cfg = NewtonConfig::default();
    let parts = [
        Partition {
            tableau: t,
            components: 0..1,
        },
        Partition {
            tableau: t,
            components: 1..2,
        },
    ];
    let mut mono = start_analytic(&pair, &prob.unsplit(), h).unwrap();
    let mut split = mono.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        mono = glm_step(t, &mono, &rhs, jac_opt, &cfg).unwrap().state;
        split = partitioned_step(&parts, &split, &rhs, jac_opt, &cfg)
            .unwrap()
            .state;
        for (a, b) in mono.y_ext.iter().zip(&split.y_ext) {
            worst = worst.max((a - b).amax() / a.amax().max(1.0));
        }
    }
    worst
}

fn criterion_5() -> Outcome {
    let pair = find_pair("3B").unwrap();
    let e = partition_run(&pair.explicit, true);
    let i = partition_run(&pair.implicit, false);
    outcome(
        e < 1e-12 && i < 1e-12,
        format!("3B explicit {e:.2e}, 3B implicit {i:.2e} (50 steps, eps = 1)"),
    )
}

fn converge(method: &str, spec: ProblemSpec, h0: f64, levels: usize) -> ConvergenceReport {
    let opts = ConvergenceOptions {
        cache_dir: None,
        ..ConvergenceOptions::default()
    };
    let m = Integrator::by_name(method).unwrap();
    let r = run_convergence(&m, &spec, h0, levels, StartPolicy::Analytic, &opts).unwrap();
    assert!(
        r.skipped.is_empty(),
        "{method}: skipped levels {:?}",
        r.skipped
    );
    r
}

fn ls(r: &ConvergenceReport) -> f64 {
    r.least_squares_order.unwrap_or(f64::NAN)
}

fn criterion_6() -> Outcome {
    let spec = ProblemSpec::Vdp { eps: 1e-6 };
    let dimsim = converge("3B", spec.clone(), 1.0 / 40.0, 5);
    let dirk = converge("DIRK343", spec, 1.0 / 40.0, 5);
    let (p3b, pdirk) = (ls(&dimsim), ls(&dirk));
    let (e3b, edirk) = (dimsim.finest_error().unwrap(), dirk.finest_error().unwrap());
    let a = (2.6..=3.4).contains(&p3b);
    let b = pdirk <= 2.5;
    let d = e3b < edirk;
    outcome(
        a && b && d,
        format!(
            "3B order {p3b:.3} in [2.6, 3.4]: {a}; DIRK(3,4,3) order {pdirk:.3} <= 2.5: {b}; \
             finest error 3B {e3b:.2e} < DIRK {edirk:.2e}: {d}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let spec = ProblemSpec::Pr { mu: -1e6 };
    let p2 = ls(&converge("2B", spec.clone(), 0.1, 6));
    let p3 = ls(&converge("3B", spec, 0.1, 6));
    let a = (1.7..=2.4).contains(&p2);
    let b = (2.6..=3.4).contains(&p3);
    outcome(
        a && b,
        format!("2B order {p2:.3} in [1.7, 2.4]: {a}; 3B order {p3:.3} in [2.6, 3.4]: {b}"),
    )
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["2A", "2B", "3B"] {
        let m = limit_matrix(&find_pair(name).unwrap().implicit).unwrap();
        let rho = spectral_radius(&m);
        let coeffs = characteristic_polynomial(&m);
        let lower = coeffs[..coeffs.len() - 1]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        pass &= rho < 1e-8;
        parts.push(format!(
            "{name} rho(M_inf) = {rho:.2e} (char. poly lower coeffs <= {lower:.1e})"
        ));
    }
    let t = &find_pair("3A").unwrap().implicit;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let r = 10f64.powf(-3.0 + 9.0 * k as f64 / 49.0);
        for z in [c(0.0, r), c(-r, 0.0)] {
            worst = worst.max(spectral_radius(&stability_matrix(t, z).unwrap()));
        }
    }
    pass &= worst <= 1.0 + 1e-10;
    parts.push(format!("3A max rho on axes = {worst:.12}"));
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for pair in catalog() {
        let mut scan = RegionScan::default_grid(90.0).unwrap();
        scan.early_exit = true;
        let constrained = scan_constrained(&pair, &scan).unwrap();
        let explicit = scan_single(&pair.explicit, &scan).unwrap();
        let stable = constrained.iter().filter(|r| r.stable).count();
        let frac = stable as f64 / constrained.len() as f64;
        let origin = constrained
            .iter()
            .find(|r| r.w == c(0.0, 0.0))
            .is_some_and(|r| r.stable);
        let violations = constrained
            .iter()
            .zip(&explicit)
            .filter(|(a, b)| a.stable && !b.stable)
            .count();
        pass &= frac >= 0.01 && origin && violations == 0;
        parts.push(format!(
            "{}: {:.2}% stable, w=0 stable {origin}, {violations} outside explicit region",
            pair.name,
            100.0 * frac
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let r = converge(
        "3B",
        ProblemSpec::Advdiff {
            n: 64,
            a: 1.0,
            nu: 0.01,
        },
        1.0 / 128.0,
        5,
    );
    let p = ls(&r);
    outcome(
        (2.6..=3.4).contains(&p),
        format!("3B temporal order {p:.3} in [2.6, 3.4] (h0 = 1/128, 5 levels)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("order conditions", criterion_1, 1.0),
        ("B reconstruction", criterion_2, 1.0),
        ("termination", criterion_3, 1.0),
        ("stepper vs stability matrix", criterion_4, 1.0),
        ("partitioned vs monolithic", criterion_5, 1.0),
        ("van der Pol order reduction", criterion_6, 10.0),
        ("Prothero-Robinson convergence", criterion_7, 5.0),
        ("L/A-stability probes", criterion_8, 1.0),
        ("constrained regions", criterion_9, 30.0),
        ("advection-diffusion order", criterion_10, 30.0),
    ];
    // `cargo test -- <filter>` style: run only criteria whose number is given.
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let o = within_time(run(), started.elapsed().as_secs_f64(), *limit);
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {:<30} {}  {}",
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
