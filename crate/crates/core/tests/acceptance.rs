//! End-to-end acceptance checks on the reference log-normal models. Prints
//! one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use levy_saddle::game::verify_pair;
use levy_saddle::mc_oracle::{simulate_cost, simulate_passage, SimConfig};
use levy_saddle::presets::{default_costs, reference_model};
use levy_saddle::sn_solver::{solve_sn, GameCosts};
use levy_saddle::sp_solver::{solve_sp, SpCase, SpGame};
use levy_saddle::sweep::{run_sweep, Direction, SweepParam, SweepSpec};
use levy_saddle::verifier::{ViReport, VerifyOptions};
use levy_saddle::{Equilibrium, Execution, GameConfig, ScaleFunctionRep, Side};

type Outcome = Result<String, String>;

const SIDES: [Side; 2] = [Side::SpectrallyNegative, Side::SpectrallyPositive];
const SIGMAS: [f64; 2] = [0.0, 1.0];

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() <= limit, format!("took {:?}, limit {:?}", t.elapsed(), limit))
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// One-sided derivatives of order 1 and 2 at `x`, second-order accurate,
/// sampling only on the side given by `dir`.
fn one_sided(f: &dyn Fn(f64) -> f64, x: f64, dir: f64, h: f64) -> (f64, f64) {
    let p = |i: f64| f(x + dir * i * h);
    let d1 = dir * (-3.0 * p(0.0) + 4.0 * p(1.0) - p(2.0)) / (2.0 * h);
    let d2 = (2.0 * p(0.0) - 5.0 * p(1.0) + 4.0 * p(2.0) - p(3.0)) / (h * h);
    (d1, d2)
}

fn transform_identity() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for sigma in SIGMAS {
        let m = reference_model(Side::SpectrallyNegative, sigma).map_err(|e| e.to_string())?;
        let rep = ScaleFunctionRep::from_model(&m).map_err(|e| e.to_string())?;
        let phi = rep.phi_q();
        for k in 1..=5 {
            let s = phi + 0.8 * k as f64;
            let upper = 40.0 / (s - phi);
            let lhs = simpson(|x| (-s * x).exp() * rep.w(x), 0.0, upper, 200_000);
            let rhs = 1.0 / (m.psi(s) - m.q);
            worst = worst.max((lhs / rhs - 1.0).abs());
        }
    }
    ensure(worst <= 1e-6, format!("max relative error {worst:.2e}"))?;
    within_time(t, Duration::from_secs(5))?;
    Ok(format!("max relative error {worst:.2e} over 10 transforms"))
}

fn boundary_asymptotics() -> Outcome {
    let rel = |v: f64, r: f64| if r == 0.0 { v.abs() } else { (v / r - 1.0).abs() };
    let mut worst: f64 = 0.0;
    for (sigma, w0, wp0) in [(0.0, 0.4, 0.408), (1.0, 0.0, 2.0)] {
        let m = reference_model(Side::SpectrallyNegative, sigma).map_err(|e| e.to_string())?;
        let rep = ScaleFunctionRep::from_model(&m).map_err(|e| e.to_string())?;
        let wp = rep.w_prime(0.0).map_err(|e| e.to_string())?;
        worst = worst.max(rel(rep.w(0.0), w0)).max(rel(wp, wp0));
    }
    ensure(worst <= 1e-8, format!("max relative error {worst:.2e}"))?;
    Ok(format!("W(0), W'(0+) for both sigma, max error {worst:.2e}"))
}

fn sn_structure() -> Outcome {
    let mut notes = Vec::new();
    for sigma in SIGMAS {
        let t = Instant::now();
        let m = reference_model(Side::SpectrallyNegative, sigma).map_err(|e| e.to_string())?;
        let eq = solve_sn(&m, default_costs()).map_err(|e| e.to_string())?;
        let (a, b) = (eq.a_star, eq.b_star);
        ensure(a < eq.a_bar && eq.a_bar.is_finite() && a < b, format!("sigma={sigma}: ordering a*={a} abar={} b*={b}", eq.a_bar))?;
        let (rl, rs) = (eq.game.big_lambda(a, b), eq.game.small_lambda(a, b));
        ensure(rl.abs() <= 1e-8 && rs.abs() <= 1e-8, format!("sigma={sigma}: residuals {rl:.2e} {rs:.2e}"))?;
        let at_a = eq.game.small_lambda(a, a + 1e-12);
        ensure((at_a - 2.0).abs() <= 1e-8, format!("sigma={sigma}: lambda(a*, a*+) = {at_a}"))?;
        eq.check_structure(200).map_err(|e| e.to_string())?;
        let v = |x: f64| eq.value(x);
        let h = 4e-4;
        let (l1a, l2a) = one_sided(&v, a, -1.0, h);
        let (r1a, r2a) = one_sided(&v, a, 1.0, h);
        let (l1b, _) = one_sided(&v, b, -1.0, h);
        let (r1b, _) = one_sided(&v, b, 1.0, h);
        let mut gaps = vec![(l1a - r1a).abs(), (l1b - r1b).abs()];
        if sigma > 0.0 {
            gaps.push((l2a - r2a).abs());
        }
        let gap = gaps.iter().cloned().fold(0.0, f64::max);
        ensure(gap <= 1e-5, format!("sigma={sigma}: fit gap {gap:.2e}"))?;
        within_time(t, Duration::from_secs(10))?;
        notes.push(format!("sigma={sigma}: a*={a:.6} abar={:.6} b*={b:.6} fit gap {gap:.1e}", eq.a_bar));
    }
    Ok(notes.join("; "))
}

fn sp_dispatch() -> Outcome {
    let t = Instant::now();
    let opts = VerifyOptions::default();
    let costs = |alpha: f64| GameCosts { alpha, ..default_costs() };
    let verify = |m: &levy_saddle::LevyModelSpec, c: GameCosts, a: f64, b: f64| -> Result<(), String> {
        let r = verify_pair(m, c, a, b, &opts).map_err(|e| e.to_string())?;
        ensure(r.pass, format!("verification failed for a={a} b={b}"))
    };
    let mut notes = Vec::new();
    for sigma in SIGMAS {
        let m = reference_model(Side::SpectrallyPositive, sigma).map_err(|e| e.to_string())?;
        let eq = solve_sp(&m, costs(0.04)).map_err(|e| e.to_string())?;
        ensure(eq.case == SpCase::NoControl, format!("sigma={sigma} alpha=0.04: case {:?}", eq.case))?;
        let g = eq.game.gamma_cap(eq.b_star - 120.0, eq.b_star);
        ensure((g - 0.2).abs() <= 1e-3, format!("Gamma(b-120, b) = {g}"))?;
        verify(&m, costs(0.04), eq.a_star, eq.b_star)?;
        notes.push(format!("sigma={sigma} no_control Gamma={g:.6}"));
    }
    let m1 = reference_model(Side::SpectrallyPositive, 1.0).map_err(|e| e.to_string())?;
    let eq = solve_sp(&m1, costs(1.0)).map_err(|e| e.to_string())?;
    ensure(eq.case == SpCase::Interior, format!("sigma=1 alpha=1: case {:?}", eq.case))?;
    verify(&m1, costs(1.0), eq.a_star, eq.b_star)?;
    notes.push("sigma=1 interior".into());

    let m0 = reference_model(Side::SpectrallyPositive, 0.0).map_err(|e| e.to_string())?;
    let game = SpGame::new(&m0, costs(10.0)).map_err(|e| e.to_string())?;
    let ups = game.upsilon_at_big_b().map_err(|e| e.to_string())?;
    let big_b = game.big_b.ok_or("B undefined")?;
    let eq = game.solve().map_err(|e| e.to_string())?;
    ensure(eq.case == SpCase::Collapsed, format!("sigma=0 alpha=10: case {:?}", eq.case))?;
    ensure(eq.a_star == big_b && eq.b_star == big_b, "collapsed barriers differ from B")?;
    ensure((ups - (5.1 - 10.05)).abs() <= 1e-12, format!("Upsilon(B) = {ups}"))?;
    verify(&m0, costs(10.0), eq.a_star, eq.b_star)?;
    notes.push(format!("sigma=0 collapsed at B={big_b:.6}, Upsilon={ups:.4}"));
    within_time(t, Duration::from_secs(10))?;
    Ok(notes.join("; "))
}

fn reference_reports() -> Result<Vec<(String, ViReport)>, String> {
    let mut out = Vec::new();
    for side in SIDES {
        for sigma in SIGMAS {
            let m = reference_model(side, sigma).map_err(|e| e.to_string())?;
            let eq = Equilibrium::solve(&m, default_costs()).map_err(|e| e.to_string())?;
            let r = verify_pair(&m, default_costs(), eq.a_star(), eq.b_star(), &VerifyOptions::default())
                .map_err(|e| e.to_string())?;
            out.push((format!("{} sigma={sigma}", side.tag()), r));
        }
    }
    Ok(out)
}

fn variational_inequalities(reports: &[(String, ViReport)], elapsed: Duration) -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, r) in reports {
        let cont = r.continuation.as_ref().ok_or(format!("{name}: empty continuation region"))?;
        worst = worst.max(cont.max_scaled_abs);
        ensure(cont.pass && cont.max_scaled_abs <= 1e-5, format!("{name}: continuation residual {:.2e}", cont.max_scaled_abs))?;
        if let Some(below) = &r.below_a {
            ensure(below.pass, format!("{name}: sign below a*, min {:.2e}", below.min_residual))?;
        }
        ensure(r.above_b.pass, format!("{name}: sign above b*, max {:.2e}", r.above_b.max_residual))?;
        if let Some(mono) = r.below_a_monotone {
            ensure(mono, format!("{name}: residual below a* not monotone"))?;
        }
    }
    ensure(elapsed <= Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!("4 configurations, worst scaled continuation residual {worst:.2e}"))
}

fn convexity_and_bounds(reports: &[(String, ViReport)]) -> Outcome {
    let mut conv: f64 = f64::INFINITY;
    for (name, r) in reports {
        ensure(r.convexity_pass, format!("{name}: min second difference {:.2e}", r.convexity_min))?;
        ensure(
            r.bounds_pass,
            format!("{name}: v' in [{:.3e}, {:.3e}], min v-g {:.2e}", r.derivative_min, r.derivative_max, r.min_value_minus_g),
        )?;
        conv = conv.min(r.convexity_min);
    }
    Ok(format!("4 configurations, min second difference {conv:.2e}"))
}

fn monte_carlo() -> Outcome {
    let t = Instant::now();
    let cfg = SimConfig::default();
    let mut worst: f64 = 0.0;
    let mut check = |what: String, cf: f64, mean: f64, se: f64| -> Result<(), String> {
        let z = (mean - cf) / se;
        worst = worst.max(z.abs());
        ensure(z.abs() <= 3.0, format!("{what}: closed form {cf:.6}, MC {mean:.6} +- {se:.2e} (z = {z:.2})"))
    };
    for side in SIDES {
        let m = reference_model(side, 1.0).map_err(|e| e.to_string())?;
        let eq = Equilibrium::solve(&m, default_costs()).map_err(|e| e.to_string())?;
        let (a, b) = (eq.a_star(), eq.b_star());
        for x in [a + 0.2, 0.5 * (a + b), b - 0.2] {
            let e = simulate_cost(&m, &default_costs(), a, b, x, &cfg).map_err(|e| e.to_string())?;
            check(format!("{} x={x:.3}", side.tag()), eq.value(x), e.mean, e.std_err)?;
        }
    }
    for sigma in SIGMAS {
        let m = reference_model(Side::SpectrallyNegative, sigma).map_err(|e| e.to_string())?;
        let rep = ScaleFunctionRep::from_model(&m).map_err(|e| e.to_string())?;
        let (x, b) = (1.0, 2.0);
        let p = simulate_passage(&m, x, b, &cfg).map_err(|e| e.to_string())?;
        let up = rep.w(x) / rep.w(b);
        let down_first = rep.z(x) - rep.z(b) * up;
        let down = rep.z(x) - m.q / rep.phi_q() * rep.w(x);
        check(format!("sigma={sigma} upcrossing"), up, p.up.mean, p.up.std_err)?;
        check(format!("sigma={sigma} two-sided downcrossing"), down_first, p.down_before_up.mean, p.down_before_up.std_err)?;
        check(format!("sigma={sigma} one-sided downcrossing"), down, p.down.mean, p.down.std_err)?;
    }
    within_time(t, Duration::from_secs(300))?;
    Ok(format!("6 payoffs and 6 passage transforms at {} paths, max |z| = {worst:.2}", cfg.n_paths))
}

fn saddle(reports: &[(String, ViReport)]) -> Outcome {
    for (name, r) in reports {
        ensure(!r.saddle.is_empty(), format!("{name}: no saddle scan"))?;
        for s in &r.saddle {
            ensure(
                s.pass,
                format!("{name}: x0={:.3} argmax b offset {:.3}, argmin a offset {:?}", s.x, s.b_offset, s.a_offset),
            )?;
        }
    }
    Ok("argmax over b and argmin over a land on the barriers for 4 configurations".into())
}

fn sweep_monotonicity() -> Outcome {
    let lists: [(SweepParam, [f64; 4]); 4] = [
        (SweepParam::AlphaH, [0.5, 1.0, 2.0, 10.0]),
        (SweepParam::BetaH, [-2.0, 0.0, 2.0, 4.0]),
        (SweepParam::CG, [-2.0, 0.0, 2.0, 4.0]),
        (SweepParam::KG, [-0.5, 0.0, 1.0, 2.0]),
    ];
    let mut dirs = Vec::new();
    for side in SIDES {
        for sigma in SIGMAS {
            let base = GameConfig::reference(side, sigma);
            let mut row = Vec::new();
            for (param, values) in &lists {
                let spec = SweepSpec { parameter: *param, values: values.to_vec(), x_grid: None };
                let r = run_sweep(&base, &spec, Execution::default()).map_err(|e| e.to_string())?;
                ensure(r.failures() == 0, format!("{} sigma={sigma} {}: {} failed points", side.tag(), param.name(), r.failures()))?;
                ensure(
                    !matches!(r.direction, Direction::Mixed | Direction::Constant),
                    format!("{} sigma={sigma} {}: direction {:?}", side.tag(), param.name(), r.direction),
                )?;
                row.push(format!("{}:{}", param.name(), if r.direction == Direction::Nondecreasing { "up" } else { "down" }));
            }
            dirs.push(format!("{} sigma={sigma} [{}]", side.tag(), row.join(" ")));
        }
    }
    Ok(dirs.join("; "))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, t: Instant, r: Outcome| {
        let (tag, msg) = match r {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("[{tag}] criterion {n} {name}: {msg} ({:.1?})", t.elapsed());
    };
    let t = Instant::now();
    report(1, "scale-function transform identity", t, transform_identity());
    let t = Instant::now();
    report(2, "boundary values of W", t, boundary_asymptotics());
    let t = Instant::now();
    report(3, "SN equilibrium structure", t, sn_structure());
    let t = Instant::now();
    report(4, "SP case dispatch", t, sp_dispatch());
    let t = Instant::now();
    let reports = reference_reports();
    let vi_time = t.elapsed();
    match reports {
        Ok(reports) => {
            report(5, "variational inequalities", t, variational_inequalities(&reports, vi_time));
            let t = Instant::now();
            report(6, "convexity and bounds", t, convexity_and_bounds(&reports));
            let t = Instant::now();
            report(7, "Monte Carlo agreement", t, monte_carlo());
            let t = Instant::now();
            report(8, "barrier-restricted saddle", t, saddle(&reports));
        }
        Err(e) => {
            for (n, name) in [(5, "variational inequalities"), (6, "convexity and bounds"), (8, "barrier-restricted saddle")] {
                report(n, name, t, Err(e.clone()));
            }
            let t = Instant::now();
            report(7, "Monte Carlo agreement", t, monte_carlo());
        }
    }
    let t = Instant::now();
    report(9, "monotonicity in swept parameters", t, sweep_monotonicity());
    if failed == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
