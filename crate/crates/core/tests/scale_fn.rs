use approx::assert_relative_eq;
use proptest::prelude::*;

use levy_saddle::presets::reference_model;
use levy_saddle::quadrature::integrate;
use levy_saddle::{LevyModelSpec, PhaseTypeDist, ScaleFunctionRep, Side};

fn reference(sigma: f64) -> ScaleFunctionRep {
    ScaleFunctionRep::from_model(&reference_model(Side::SpectrallyNegative, sigma).unwrap()).unwrap()
}

#[test]
fn exponential_jumps_against_hand_formula() {
    // Two-term closed form from the quadratic for psi(s) = q.
    let (delta, kappa, eta, q) = (2.0, 1.5, 3.0, 0.2);
    let m = LevyModelSpec::new(Side::SpectrallyNegative, 0.0, delta, kappa, PhaseTypeDist::exponential(eta).unwrap(), q)
        .unwrap();
    let rep = ScaleFunctionRep::from_model(&m).unwrap();
    let bq = delta * eta - kappa - q;
    let disc = (bq * bq + 4.0 * delta * q * eta).sqrt();
    let roots = [(-bq + disc) / (2.0 * delta), (-bq - disc) / (2.0 * delta)];
    let dpsi = |s: f64| delta - kappa * eta / ((eta + s) * (eta + s));
    for x in [0.0, 0.3, 1.0, 4.0, 12.0] {
        let w: f64 = roots.iter().map(|&r| (r * x).exp() / dpsi(r)).sum();
        assert_relative_eq!(rep.w(x), w, max_relative = 1e-12);
        let wb: f64 = roots.iter().map(|&r| ((r * x).exp() - 1.0) / (r * dpsi(r))).sum();
        assert_relative_eq!(rep.w_bar(x), wb, max_relative = 1e-10);
    }
}

#[test]
fn integrals_match_quadrature() {
    for sigma in [0.0, 1.0] {
        let rep = reference(sigma);
        for x in [0.2, 1.0, 3.5, 10.0, 30.0] {
            let wb = integrate(|y| rep.w(y), 0.0, x, 1e-14, 1e-13);
            assert_relative_eq!(rep.w_bar(x), wb, max_relative = 1e-10);
            let wb2 = integrate(|y| rep.w_bar(y), 0.0, x, 1e-14, 1e-13);
            assert_relative_eq!(rep.w_bar2(x), wb2, max_relative = 1e-10);
            assert_relative_eq!(rep.z(x), 1.0 + rep.q * wb, max_relative = 1e-12);
            assert_relative_eq!(rep.z_bar(x), x + rep.q * wb2, max_relative = 1e-12);
        }
    }
}

#[test]
fn boundary_values() {
    let r0 = reference(0.0);
    assert_relative_eq!(r0.w(0.0), 0.4, max_relative = 1e-12);
    assert_relative_eq!(r0.w_prime(0.0).unwrap(), 0.408, max_relative = 1e-10);
    let r1 = reference(1.0);
    assert!(r1.w(0.0).abs() < 1e-13);
    assert_relative_eq!(r1.w_prime(0.0).unwrap(), 2.0, max_relative = 1e-10);
}

#[test]
fn stable_forms_agree_with_direct_ones() {
    let rep = reference(1.0);
    for x in [0.5, 2.0, 10.0, 40.0] {
        assert_relative_eq!(rep.w_phi(x), (-rep.phi_q() * x).exp() * rep.w(x), max_relative = 1e-12);
        assert_relative_eq!(rep.w_ratio(x), rep.w_prime(x).unwrap() / rep.w(x), max_relative = 1e-12);
    }
    // Far out only the growth term survives.
    assert_relative_eq!(rep.w_phi(500.0), 1.0 / rep.psi_prime_at_phi(), max_relative = 1e-14);
    assert!(rep.w(3000.0).is_infinite() || rep.w(3000.0) > 1e300);
    assert!(rep.w_ratio(3000.0).is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_positive_and_increasing(x in 0.0f64..60.0, dx in 1e-3f64..1.0, sigma in prop::sample::select(vec![0.0, 0.3, 1.0])) {
        let rep = reference(sigma);
        let (w0, w1) = (rep.w(x), rep.w(x + dx));
        prop_assert!(w1 > w0);
        prop_assert!(w0 >= 0.0);
        prop_assert!(rep.w_prime(x + dx).unwrap() > 0.0);
        // W_Phi increases to 1/psi'(Phi).
        prop_assert!(rep.w_phi(x + dx) >= rep.w_phi(x) - 1e-15);
        prop_assert!(rep.w_phi(x) <= 1.0 / rep.psi_prime_at_phi() + 1e-12);
    }

    #[test]
    fn second_derivative_by_differences(x in 0.1f64..20.0, sigma in prop::sample::select(vec![0.0, 1.0])) {
        let rep = reference(sigma);
        let h = 1e-4;
        let fd = (rep.w_prime(x + h).unwrap() - rep.w_prime(x - h).unwrap()) / (2.0 * h);
        let exact = rep.w_second(x).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }
}
