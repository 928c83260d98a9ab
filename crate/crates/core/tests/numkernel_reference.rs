//! Reference values for the special-function kernel, taken from an
//! independent 30-digit implementation.

use cubic_core::numkernel::*;
use cubic_core::Sign;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

#[test]
fn zeta_reference_points() {
    let cases = [
        (c(1.0 / 3.0, 0.0), c(-0.973_360_248_350_782_7, 0.0)),
        (c(0.5, 14.134_725), c(1.767_429_841_384_904e-8, -1.110_202_893_092_311_7e-7)),
        (c(0.7, -30.5), c(0.230_869_316_496_797_4, 0.043_807_986_458_927_37)),
        (c(2.3, 100.0), c(1.151_819_000_396_317, -0.045_249_795_511_401_15)),
    ];
    for (s, want) in cases {
        let got = zeta(s).unwrap();
        assert!((got - want).norm() < 1e-12, "zeta({s}) = {got}, want {want}");
    }
}

#[test]
fn zeta_derivative_reference_points() {
    let d = zeta_derivative(c(1.0 / 3.0, 0.0)).unwrap();
    assert!(close(d, c(-2.171_301_352_116_401_6, 0.0), 1e-12));
    let d = zeta_derivative(c(0.7, -30.5)).unwrap();
    assert!(close(d, c(0.781_196_130_466_052, 0.482_285_253_074_896_96), 1e-12));
}

#[test]
fn gamma_reference_points() {
    let lg = ln_gamma(c(0.25, 7.0)).unwrap();
    assert!(close(lg, c(-10.562_953_339_040_002, 6.230_160_500_529_651), 1e-13));
    let dg = digamma(c(0.25, 7.0)).unwrap();
    assert!(close(dg, c(1.945_697_373_699_850_3, 1.606_556_461_625_957_9), 1e-13));
    assert!((gamma_re(1.0 / 3.0) - 2.678_938_534_707_747_6).abs() < 1e-13);
}

#[test]
fn zeta_pole_is_rejected() {
    assert!(matches!(zeta(c(1.0, 0.0)), Err(KernelError::PoleAtOne)));
    assert!(zeta_log_derivative(c(0.5, 3.0)).is_err());
}

proptest! {
    #[test]
    fn zeta_conjugate_symmetry(re in -2.0f64..4.0, im in 0.5f64..60.0) {
        let a = zeta(c(re, im)).unwrap();
        let b = zeta(c(re, -im)).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-13 * (1.0 + a.norm()));
    }

    #[test]
    fn zeta_order_stability(re in -1.0f64..3.0, im in 0.5f64..80.0) {
        let s = c(re, im);
        let a = zeta_with(s, ZetaConfig { min_terms: 20, order: 12 }).unwrap();
        let b = zeta_with(s, ZetaConfig { min_terms: 40, order: 16 }).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn zeta_functional_equation(re in -1.5f64..2.5, im in 1.0f64..40.0) {
        let s = c(re, im);
        let pi = std::f64::consts::PI;
        let lhs = zeta(s).unwrap();
        let one = c(1.0, 0.0);
        let rhs = c(2.0, 0.0).powc(s) * c(pi, 0.0).powc(s - one) * (s * pi / 2.0).sin()
            * gamma(one - s).unwrap() * zeta(one - s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn gamma_reflection(re in -3.0f64..3.0, im in 0.1f64..20.0) {
        let s = c(re, im);
        let pi = std::f64::consts::PI;
        let prod = gamma(s).unwrap() * gamma(c(1.0, 0.0) - s).unwrap() * (s * pi).sin();
        prop_assert!((prod - c(pi, 0.0)).norm() <= 1e-11 * (1.0 + prod.norm()));
    }

    #[test]
    fn gamma_recurrence(re in -3.0f64..6.0, im in 0.1f64..30.0) {
        let s = c(re, im);
        let a = gamma(s + 1.0).unwrap();
        let b = s * gamma(s).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn gamma_ratio_is_an_involution(re in -0.45f64..0.45, im in -40.0f64..40.0) {
        for sign in [Sign::Plus, Sign::Minus] {
            let s = c(re, im);
            let r = gamma_pm_ratio(sign, s).unwrap() * gamma_pm_ratio(sign, -s).unwrap();
            prop_assert!((r - c(1.0, 0.0)).norm() <= 1e-12);
        }
    }
}
