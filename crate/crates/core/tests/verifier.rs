use approx::assert_relative_eq;

use levy_saddle::game::verify_pair;
use levy_saddle::presets::{default_costs, reference_model};
use levy_saddle::sp_solver::SpGame;
use levy_saddle::verifier::{check_vi, BarrierValue, Generator, SmoothFn, VerifyOptions};
use levy_saddle::{Equilibrium, Error, Execution, Side};

#[test]
fn generator_on_affine_functions() {
    for side in [Side::SpectrallyNegative, Side::SpectrallyPositive] {
        for sigma in [0.0, 1.0] {
            let m = reference_model(side, sigma).unwrap();
            let gen = Generator::new(&m).unwrap();
            let id = SmoothFn { f: |x: f64| x, df: |_x: f64| 1.0, d2f: |_x: f64| 0.0 };
            let drift = match side {
                Side::SpectrallyNegative => m.mean_drift(),
                Side::SpectrallyPositive => -m.mean_drift(),
            };
            for x in [-1.0, 0.5, 3.0] {
                assert_relative_eq!(gen.apply(&id, x).unwrap(), drift, epsilon = 1e-10);
            }
            let c = SmoothFn { f: |_x: f64| 2.5, df: |_x: f64| 0.0, d2f: |_x: f64| 0.0 };
            assert!(gen.apply(&c, 1.0).unwrap().abs() < 1e-14);
        }
    }
}

#[test]
fn generator_on_exponentials_is_psi() {
    // L e^{s x} = psi(s) e^{s x} for SN; e^{-s x} for SP.
    for side in [Side::SpectrallyNegative, Side::SpectrallyPositive] {
        let m = reference_model(side, 1.0).unwrap();
        let gen = Generator::new(&m).unwrap();
        for s in [0.3, 1.0, 2.0] {
            let sign = if side == Side::SpectrallyNegative { 1.0 } else { -1.0 };
            let v = SmoothFn {
                f: move |x: f64| (sign * s * x).exp(),
                df: move |x: f64| sign * s * (sign * s * x).exp(),
                d2f: move |x: f64| s * s * (sign * s * x).exp(),
            };
            let x = 0.7;
            assert_relative_eq!(gen.apply(&v, x).unwrap(), m.psi(s) * (v.f)(x), max_relative = 1e-9);
        }
    }
}

#[test]
fn sp_bounded_variation_refuses_points_on_a_kink() {
    let m = reference_model(Side::SpectrallyPositive, 0.0).unwrap();
    let game = SpGame::new(&m, default_costs()).unwrap();
    let v = BarrierValue { game: &game, a: 1.0, b: 3.0 };
    let gen = Generator::new(&m).unwrap();
    assert!(matches!(gen.apply(&v, 3.0), Err(Error::KinkTooClose { .. })));
    assert!(gen.apply(&v, 2.0).is_ok());
}

#[test]
fn above_b_residual_is_h_hat_for_sp() {
    let m = reference_model(Side::SpectrallyPositive, 1.0).unwrap();
    let game = SpGame::new(&m, default_costs()).unwrap();
    let v = BarrierValue { game: &game, a: 1.0, b: 3.0 };
    let gen = Generator::new(&m).unwrap();
    let x = 4.0;
    let r = gen.apply(&v, x).unwrap() - m.q * game.g(x) + game.h(x);
    assert_relative_eq!(r, game.h_hat(x), epsilon = 1e-10);
}

#[test]
fn reference_solutions_pass_and_sequential_agrees() {
    for side in [Side::SpectrallyNegative, Side::SpectrallyPositive] {
        for sigma in [0.0, 1.0] {
            let m = reference_model(side, sigma).unwrap();
            let e = Equilibrium::solve(&m, default_costs()).unwrap();
            let par = verify_pair(&m, default_costs(), e.a_star(), e.b_star(), &VerifyOptions::default()).unwrap();
            assert!(par.pass, "{side:?} sigma={sigma}: {par:?}");
            let opts = VerifyOptions { exec: Execution::Sequential, ..VerifyOptions::default() };
            let seq = verify_pair(&m, default_costs(), e.a_star(), e.b_star(), &opts).unwrap();
            assert_eq!(par, seq);
        }
    }
}

#[test]
fn tampered_upper_barrier_breaks_the_fit() {
    for side in [Side::SpectrallyNegative, Side::SpectrallyPositive] {
        for sigma in [0.0, 1.0] {
            let m = reference_model(side, sigma).unwrap();
            let e = Equilibrium::solve(&m, default_costs()).unwrap();
            let r = verify_pair(&m, default_costs(), e.a_star(), e.b_star() + 0.1, &VerifyOptions::default()).unwrap();
            assert!(!r.pass);
            assert!(!r.fit_b.pass, "{side:?} sigma={sigma}: {:?}", r.fit_b);
        }
    }
}

#[test]
fn tampered_lower_barrier_fails() {
    // Moving a* down leaves the below-a residual sign intact; the failure
    // shows up in the fit at a and in the saddle scan instead.
    for sigma in [0.0, 1.0] {
        let m = reference_model(Side::SpectrallyNegative, sigma).unwrap();
        let e = Equilibrium::solve(&m, default_costs()).unwrap();
        let r = verify_pair(&m, default_costs(), e.a_star() - 0.1, e.b_star(), &VerifyOptions::default()).unwrap();
        assert!(!r.pass);
        assert!(!r.fit_a.as_ref().unwrap().pass);
        assert!(r.saddle.iter().any(|s| !s.pass));
    }
}

#[test]
fn no_control_and_collapsed_pairs_verify() {
    let m = reference_model(Side::SpectrallyPositive, 0.0).unwrap();
    for alpha in [0.04, 10.0] {
        let costs = levy_saddle::GameCosts { alpha, ..default_costs() };
        let e = Equilibrium::solve(&m, costs).unwrap();
        let game = SpGame::new(&m, costs).unwrap();
        let r = check_vi(&m, &game, e.a_star(), e.b_star(), &VerifyOptions::default()).unwrap();
        assert!(r.pass, "alpha={alpha}: {r:?}");
        if alpha < 1.0 {
            assert!(r.below_a.is_none() && r.a.is_none());
        } else {
            assert_eq!(r.fit_b.required, 0);
        }
    }
}
