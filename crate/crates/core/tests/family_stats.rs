use std::sync::OnceLock;

use cubic_core::asym::{a_b_constants, constants};
use cubic_core::cubic_enum::{hessian, EnumOptions, FieldRecord};
use cubic_core::family::*;
use cubic_core::primes::primes_up_to;
use cubic_core::Sign;
use num_rational::Ratio;
use proptest::prelude::*;

const X: i64 = 20_000;

fn family(sign: Sign) -> &'static FamilySlice {
    static PLUS: OnceLock<FamilySlice> = OnceLock::new();
    static MINUS: OnceLock<FamilySlice> = OnceLock::new();
    let cell = if sign == Sign::Plus { &PLUS } else { &MINUS };
    cell.get_or_init(|| FamilySlice::load(None, X, sign).unwrap())
}

fn divides_sq(p: u64, d: i64) -> bool {
    (d.unsigned_abs() % (p * p)) == 0
}

#[test]
fn partition_and_ramification() {
    for sign in [Sign::Plus, Sign::Minus] {
        let f = family(sign);
        for p in primes_up_to(100) {
            for x in [23, 500, 4_000, X] {
                let total: usize = SplitType::ALL.iter().map(|&t| f.count_local(x, p, t).unwrap()).sum();
                assert_eq!(total, f.count(x).unwrap());
                if (p as i64) >= x {
                    assert_eq!(f.count_local(x, p, SplitType::T4).unwrap(), 0);
                }
            }
            let tab = f.types_at(p);
            for (r, &t) in f.records().iter().zip(tab.iter()) {
                let ramified = r.disc.unsigned_abs() % p == 0;
                assert_eq!(ramified, matches!(t, SplitType::T4 | SplitType::T5), "{r:?} p={p}");
                assert_eq!(kronecker(r.disc, p) == 0, ramified);
                if p > 2 {
                    assert_eq!(t == SplitType::T5, divides_sq(p, r.disc), "{r:?} p={p}");
                }
                if p > 3 {
                    let (hp, hq, hr) = hessian(&r.form);
                    let pi = p as i128;
                    let zero = hp % pi == 0 && hq % pi == 0 && hr % pi == 0;
                    assert_eq!(zero, t == SplitType::T5);
                }
                assert_eq!(a_coeff(t, 1), lambda_coeff(t, 1));
                if !ramified {
                    assert_eq!(mu_coeff(r, p, 2) == 1, matches!(t, SplitType::T1 | SplitType::T3));
                }
            }
        }
    }
}

#[test]
fn small_counts() {
    assert_eq!(family(Sign::Minus).count(25).unwrap(), 1);
    assert_eq!(family(Sign::Plus).count(100).unwrap(), 0);
    assert!(matches!(family(Sign::Plus).count(X + 1), Err(FamilyError::SliceTooSmall { .. })));
    let all = FamilySlice::load_with(None, 82, Sign::Plus, &EnumOptions { include_galois: true }).unwrap();
    let non = FamilySlice::load(None, 82, Sign::Plus).unwrap();
    assert_eq!(all.count(82).unwrap() - non.count(82).unwrap(), 2);
}

#[test]
fn vector_counts() {
    let f = family(Sign::Minus);
    let mut total = 0;
    for &t2 in &SplitType::ALL {
        for &t3 in &SplitType::ALL {
            let n = f.count_local_vector(X, &[2, 3], &[t2, t3]).unwrap();
            let brute = f
                .records()
                .iter()
                .filter(|r| splitting_type(r, 2) == t2 && splitting_type(r, 3) == t3)
                .count();
            assert_eq!(n, brute);
            total += n;
        }
    }
    assert_eq!(total, f.count(X).unwrap());
    assert!(matches!(f.count_local_vector(X, &[2, 2], &[SplitType::T1, SplitType::T1]), Err(FamilyError::DuplicatePrimes)));
}

#[test]
fn empty_prefix_error() {
    let f = family(Sign::Minus);
    for x in [2i64, 10, 23] {
        let (a, b) = a_b_constants(3, SplitType::T2, Sign::Minus);
        let xf = x as f64;
        assert_eq!(f.error_stat(x, 3, SplitType::T2).unwrap(), -a * xf - b * xf.powf(5.0 / 6.0));
    }
}

/// Dense grid sampling gives a lower bound that must approach the exact sup.
#[test]
fn f_stat_against_dense_sampling() {
    for sign in [Sign::Plus, Sign::Minus] {
        let f = family(sign);
        for (p, t) in [(2u64, SplitType::T1), (5, SplitType::T3), (7, SplitType::T4), (3, SplitType::T5)] {
            let x = 3_000;
            let (a, b) = a_b_constants(p, t, sign);
            let discs: Vec<i64> = f.records().iter().filter(|r| splitting_type(r, p) == t).map(|r| r.disc.abs()).collect();
            let g = |xv: f64| {
                let n = discs.partition_point(|&d| (d as f64) < xv) as f64;
                ((n - a * xv - b * xv.powf(5.0 / 6.0)) / xv.sqrt()).abs()
            };
            let steps = 3_000_000;
            let brute = (0..=steps).map(|i| g(1.0 + (x as f64 - 1.0) * i as f64 / steps as f64)).fold(0.0, f64::max);
            let exact = f.f_stat(x, p, t).unwrap();
            assert!(exact >= brute - 1e-12 && exact - brute < 1e-3, "{sign} p={p} {t}: {exact} vs {brute}");
        }
    }
}

#[test]
fn f_stat_nondecreasing_and_locked() {
    let f = family(Sign::Plus);
    let xs: Vec<i64> = (1..=40).map(|k| k * 500).collect();
    let curve = f.f_stat_curve(&xs, 5, SplitType::T2).unwrap();
    assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    for (x, v) in xs.iter().zip(&curve).step_by(7) {
        assert!((f.f_stat(*x, 5, SplitType::T2).unwrap() - v).abs() < 1e-15);
    }
    let locked = 1.008_868_931_441_370_96e-1;
    assert!((f.f_stat(10_000, 5, SplitType::T1).unwrap() - locked).abs() < 1e-12);
    let locked_minus = 1.872_639_849_369_722_44e-1;
    assert!((family(Sign::Minus).f_stat(10_000, 5, SplitType::T1).unwrap() - locked_minus).abs() < 1e-12);
}

#[test]
fn global_error_small_x() {
    let all = FamilySlice::load_with(None, 200, Sign::Plus, &EnumOptions { include_galois: true }).unwrap();
    let k = constants(Sign::Plus);
    let x = 48i64;
    let xf = x as f64;
    let want = -(k.c1 * xf + k.c2 * xf.powf(5.0 / 6.0)) / xf.sqrt();
    assert!((global_error(&all, x).unwrap() - want).abs() < 1e-15);
}

#[test]
fn empirical_averages() {
    let f = family(Sign::Plus);
    assert_eq!(empirical_mean_lambda_mu(f, X, 1, 1).unwrap(), 1.0);
    assert!(matches!(empirical_mean_lambda_mu(f, 100, 2, 1), Err(FamilyError::EmptyFamily)));
    assert!(matches!(average_log_disc(f, 100), Err(FamilyError::EmptyFamily)));
    assert!(matches!(empirical_mean_lambda_mu(f, X, 1, 27), Err(FamilyError::HNotCubefree(27))));
    // lambda(p) mean through local counts.
    for p in [2u64, 3, 5] {
        let n = f.count(X).unwrap() as f64;
        let by_type: i64 = SplitType::ALL.iter().map(|&t| lambda_coeff(t, 1) * f.count_local(X, p, t).unwrap() as i64).sum();
        assert!((empirical_mean_lambda_mu(f, X, p, 1).unwrap() - by_type as f64 / n).abs() < 1e-15);
        let sum_a: i64 = SplitType::ALL.iter().map(|&t| a_coeff(t, 2) * f.count_local(X, p, t).unwrap() as i64).sum();
        assert_eq!(empirical_sum_a(f, X, p, 2).unwrap(), sum_a);
    }
    let first = &f.records()[..1];
    let one = FamilySlice::new(Sign::Plus, first[0].disc + 1, first.to_vec());
    assert!((average_log_disc(&one, first[0].disc + 1).unwrap() - (first[0].disc as f64).ln()).abs() < 1e-15);
}

#[test]
fn csv_writers() {
    let dir = tempfile::tempdir().unwrap();
    let f = family(Sign::Minus);
    let rows = error_rows(f, &[25, 1000], &[5], &[SplitType::T1, SplitType::T4]).unwrap();
    let path = dir.path().join("errors.csv");
    write_errors_csv(&path, &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(ERRORS_HEADER));
    assert_eq!(lines.count(), 4);
    let fpath = dir.path().join("fstat.csv");
    write_fstat_csv(&fpath, &[(5, SplitType::T1, 1000, 0.25)]).unwrap();
    assert!(std::fs::read_to_string(&fpath).unwrap().starts_with(FSTAT_HEADER));
}

fn lambda_series(t: SplitType, n: u32) -> Vec<Ratio<i64>> {
    (0..=n).map(|e| Ratio::from_integer(if e == 0 { 1 } else { lambda_coeff(t, e) })).collect()
}

proptest! {
    /// (sum_e lambda(p^e) u^e)(1 - lambda(p) u + (D/p) u^2) = 1 + O(u^6) at unramified primes.
    #[test]
    fn lambda_mu_are_inverse(idx in 0usize..5000, pi in 0usize..25, plus in any::<bool>()) {
        let f = family(if plus { Sign::Plus } else { Sign::Minus });
        let r: &FieldRecord = &f.records()[idx % f.records().len()];
        let p = primes_up_to(100)[pi];
        prop_assume!(r.disc.unsigned_abs() % p != 0);
        let t = splitting_type(r, p);
        let l = lambda_series(t, 5);
        let m = [Ratio::from_integer(1), Ratio::from_integer(mu_coeff(r, p, 1)), Ratio::from_integer(mu_coeff(r, p, 2))];
        for k in 0..=5usize {
            let c: Ratio<i64> = (0..=k.min(2)).map(|j| m[j] * l[k - j]).sum();
            prop_assert_eq!(c, Ratio::from_integer((k == 0) as i64));
        }
        prop_assert_eq!(mu_coeff(r, p, 3), 0);
    }
}
