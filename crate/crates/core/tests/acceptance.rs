//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing every line; set ACCEPTANCE_STRICT=1 to exit 1 when
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use cubic_core::asym::{
    f_table, g_table, kappa_e, local_weights, predicted_mean_lambda_mu, predicted_sum_a, theta_e, SplitType,
};
use cubic_core::cubic_enum::{enumerate, EnumOptions};
use cubic_core::density::{
    average_density_empirical, i1_direct, i1_expansion, i2_direct, i2_expansion_correction, i2_leading,
    log_conductor, theorem_main_prediction, DensityConfig, NuTable, TestFunction, TestKind,
};
use cubic_core::family::{empirical_mean_lambda_mu, empirical_sum_a, global_error, log_grid, splitting_type, FamilySlice};
use cubic_core::numkernel::{gamma, gamma_re, zeta, zeta_re, C64};
use cubic_core::primes::primes_up_to;
use cubic_core::ratios::{
    a3, a3_diag, a3_residue_closed_form, a3_residue_richardson, a4, a4_diag, a4_double_pole_limit,
    a4_double_pole_richardson, j_asymptotic, j_contour_with, j_residue, ContourCache, ContourConfig, RatiosConfig,
};
use cubic_core::Sign;
use num_rational::Ratio;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const SIGNS: [Sign; 2] = [Sign::Plus, Sign::Minus];

fn cache_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn fejer(sigma: f64) -> TestFunction {
    TestFunction::new(TestKind::Fejer, sigma).unwrap()
}

fn enumeration_matches_oracle() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (sign, pos) in [(Sign::Plus, true), (Sign::Minus, false)] {
        let got: Vec<i64> = enumerate(10_001, sign)?.iter().map(|r| r.disc).collect();
        let want = common::oracle_discriminants(10_000, pos);
        ok &= got == want;
        notes.push(format!("{sign}: {} fields vs oracle {}", got.len(), want.len()));
    }
    let minus23: Vec<i64> = enumerate(24, Sign::Minus)?.iter().map(|r| r.disc).collect();
    let plus_below_148 = enumerate(148, Sign::Plus)?.len();
    let n_minus_25 = enumerate(25, Sign::Minus)?.len();
    let n_plus_100 = enumerate(100, Sign::Plus)?.len();
    let spots = minus23 == [-23] && plus_below_148 == 0 && n_minus_25 == 1 && n_plus_100 == 0;
    notes.push(format!(
        "spot facts: |D|<=23 -> {minus23:?}, 0<D<148 -> {plus_below_148}, N-(25) = {n_minus_25}, N+(100) = {n_plus_100}"
    ));
    Ok((ok && spots, notes.join("; ")))
}

fn partition_and_ramification() -> Outcome {
    let x_max = 100_001;
    let primes = primes_up_to(100);
    let mut bad = Vec::new();
    for sign in SIGNS {
        let slice = FamilySlice::load(Some(&cache_dir()), x_max, sign)?;
        let recs = slice.records();
        for &p in &primes {
            let types = slice.types_at(p);
            // every step of N(x) is at some |D|, so prefix counts cover all x
            let mut counts = [0usize; 5];
            for (i, t) in types.iter().enumerate() {
                counts[t.index() - 1] += 1;
                if counts.iter().sum::<usize>() != i + 1 {
                    bad.push(format!("{sign} p={p} prefix {i}"));
                }
            }
            for x in log_grid(2, x_max, 20) {
                let sum: usize = SplitType::ALL.iter().map(|&t| slice.count_local(x, p, t).unwrap()).sum();
                if sum != slice.count(x)? {
                    bad.push(format!("{sign} p={p} x={x}"));
                }
            }
            if p > 2 {
                let p2 = (p * p) as i64;
                for r in recs {
                    if (splitting_type(r, p) == SplitType::T5) != (r.disc % p2 == 0) {
                        bad.push(format!("T5 {sign} p={p} D={}", r.disc));
                    }
                }
            }
            for x in 2..=(p as i64) {
                if slice.count_local(x, p, SplitType::T4)? != 0 {
                    bad.push(format!("T4 {sign} p={p} x={x}"));
                }
            }
        }
    }
    let note = format!("{} primes, x <= 1e5, both signs; {} violations {:?}", primes.len(), bad.len(), bad.iter().take(3).collect::<Vec<_>>());
    Ok((bad.is_empty(), note))
}

fn coefficient_identities() -> Outcome {
    let zero = Ratio::from_integer(0i64);
    let mut bad = 0;
    let mut worst_g: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for p in [2u64, 3, 5, 7, 11, 13] {
        let pf = p as f64;
        if f_table(1, 0, p)? + f_table(0, 1, p)? != zero {
            bad += 1;
        }
        worst_g = worst_g.max((g_table(1, 0, p)? + g_table(0, 1, p)?).abs());
        for e in 2..=12 {
            if f_table(e, 0, p)? + f_table(e - 1, 1, p)? + f_table(e - 2, 2, p)? != zero {
                bad += 1;
            }
            if f_table(e, 0, p)? - f_table(e - 2, 2, p)? != Ratio::from_integer(theta_e(e)) + Ratio::new(1, p as i64) {
                bad += 1;
            }
            let gs = g_table(e, 0, p)? + g_table(e - 1, 1, p)? + g_table(e - 2, 2, p)?;
            let g_rhs = (1.0 + pf.powf(-1.0 / 3.0)) * (kappa_e(p, e) + 1.0 / pf + pf.powf(-4.0 / 3.0));
            let gd = g_table(e, 0, p)? - g_table(e - 2, 2, p)? - g_rhs;
            worst_g = worst_g.max(gs.abs()).max(gd.abs());
        }
        let w = local_weights(p);
        worst_w = worst_w
            .max((w.x_p * w.c.iter().sum::<f64>() - 1.0).abs())
            .max((w.y_p * w.d.iter().sum::<f64>() - 1.0).abs());
    }
    let ok = bad == 0 && worst_g < 1e-12 && worst_w < 1e-12;
    Ok((ok, format!("exact f failures {bad}, max g residual {worst_g:.1e}, max weight-sum error {worst_w:.1e}")))
}

fn diagonal_identities() -> Outcome {
    let cfg = RatiosConfig::default();
    let mut worst_id: f64 = 0.0;
    for r in [0.05, 0.1, 0.2] {
        worst_id = worst_id.max((a3(c(r), c(r), &cfg)? - 1.0).norm());
        worst_id = worst_id.max((a4(c(r), c(r), &cfg)? - 1.0).norm());
    }
    let mut worst_route: f64 = 0.0;
    for s in [0.05, 0.1] {
        worst_route = worst_route.max((a3_diag(c(s), &cfg)? - a3(c(-s), c(s), &cfg)?).norm());
        worst_route = worst_route.max((a4_diag(c(s), &cfg)? - a4(c(-s), c(s), &cfg)?).norm());
    }
    Ok((worst_id <= 1e-8 && worst_route <= 1e-7, format!("max |A-1| = {worst_id:.2e}, max route gap = {worst_route:.2e}")))
}

fn pole_data() -> Outcome {
    let cfg = RatiosConfig::default();
    let closed = a3_residue_closed_form();
    let rich = a3_residue_richardson(1e-3, &cfg)?;
    let dp = a4_double_pole_limit(&cfg)?;
    let dp_rich = a4_double_pole_richardson(1e-2, &cfg)?;
    let (e1, e2) = ((rich - closed).abs(), (dp_rich - dp).abs());
    Ok((
        e1 <= 1e-6 && e2 <= 1e-5,
        format!("residue {closed:.10} (limit gap {e1:.1e}), double pole {dp:.10} (limit gap {e2:.1e})"),
    ))
}

fn counts_vs_predictions() -> Outcome {
    let x = 1_000_000i64;
    let xf = x as f64;
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for sign in SIGNS {
        let slice = FamilySlice::load(Some(&cache_dir()), x, sign)?;
        let n = slice.count(x)? as f64;
        for p in [2u64, 3, 5, 7] {
            let mut residuals = Vec::new();
            for e in [1u32, 2] {
                let emp = empirical_sum_a(&slice, x, p, e)? as f64;
                residuals.push((format!("a(p^{e})"), (emp - predicted_sum_a(p, e, xf, sign)).abs() / xf.sqrt()));
            }
            let emp = empirical_mean_lambda_mu(&slice, x, p, 1)?;
            let pred = predicted_mean_lambda_mu(p, 1, xf, sign)?;
            residuals.push(("lambda".into(), (emp - pred).abs() * n / xf.sqrt()));
            for (what, r) in residuals {
                if r > worst {
                    worst = r;
                    at = format!("{sign} p={p} {what}");
                }
            }
        }
    }
    Ok((worst <= 5.0, format!("max normalized residual {worst:.3} at {at}")))
}

fn density_closure() -> Outcome {
    let cfg = DensityConfig::default();
    let phi = fejer(0.3);
    let x = 1_000_000i64;
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for sign in SIGNS {
        let slice = FamilySlice::load(Some(&cache_dir()), x, sign)?;
        let emp = average_density_empirical(&slice, x, &phi, &cfg)?;
        let th = theorem_main_prediction(x as f64, sign, &phi, 2.0 / 3.0, 2.0 / 3.0, &cfg)?.total;
        let d = (emp - th).abs();
        worst = worst.max(d);
        notes.push(format!("{sign}: empirical {emp:.5} theorem {th:.5} gap {d:.4}"));
    }
    let verdict = if worst <= 0.05 { "within 0.05" } else { "above 0.05, hard bound 0.25" };
    Ok((worst <= 0.25, format!("{}; {verdict}", notes.join("; "))))
}

fn j_forms() -> Outcome {
    let cfg = RatiosConfig::default();
    let phi = fejer(0.25);
    let mut cache = ContourCache::new(ContourConfig::default())?;
    let mut ok = true;
    let mut notes = Vec::new();
    for sign in SIGNS {
        let mut prev = f64::INFINITY;
        let mut gaps = Vec::new();
        for x in [1e6, 1e8, 1e10] {
            let j = j_contour_with(x, sign, &phi, &mut cache)?.value;
            let asym = j_asymptotic(x, sign, &phi, &cfg)?;
            let res = j_residue(x, sign, &phi, &cfg)?;
            let gap = ((j - asym) / asym).abs();
            if x == 1e8 && gap > 0.5 {
                ok = false;
            }
            if gap >= prev {
                ok = false;
            }
            prev = gap;
            gaps.push(format!("X={x:.0e} J={j:.4e} asym={asym:.4e} gap={gap:.3} |J-res|={:.1e}", (j - res).abs()));
        }
        notes.push(format!("{sign}: {}", gaps.join(", ")));
    }
    Ok((ok, notes.join(" | ")))
}

fn expansion_consistency() -> Outcome {
    let cfg = DensityConfig::default();
    let nus = NuTable::compute(10_000_000, 3)?;
    let grid = [1e4, 1e6, 1e8];
    let scaled = |phi: &TestFunction| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        let mut v = Vec::new();
        for x in grid {
            let l = log_conductor(x);
            v.push((i1_direct(x, phi, &cfg)? - i1_expansion(x, phi, 2, &nus)?).abs() * l.powi(3));
        }
        Ok(v)
    };
    let phi = fejer(1.5);
    let s1 = scaled(&phi)?;
    let mut i2_gap = Vec::new();
    let mut i2_rem = Vec::new();
    for x in grid {
        let d = i2_direct(x, &phi, &cfg)? - i2_leading(x, &phi)?;
        i2_gap.push(d);
        i2_rem.push((d - i2_expansion_correction(x, &phi, 2, &nus)?).abs());
    }
    let i1_ok = s1[2] <= s1[1];
    let i2_ok = i2_rem.windows(2).all(|w| w[1] < w[0]) && i2_gap.iter().all(|g| g.is_finite());
    let diag = scaled(&fejer(0.5))?;
    Ok((
        i1_ok && i2_ok,
        format!(
            "Fejer 1.5: L^3|I1 gap| = {:.1}, {:.1}, {:.1}; I2-lead = {:.3}, {:.3}, {:.3}; I2 remainder = {:.3}, {:.3}, {:.3}; Fejer 0.5 L^3|I1 gap| = {:.0}, {:.0}, {:.0}",
            s1[0], s1[1], s1[2], i2_gap[0], i2_gap[1], i2_gap[2], i2_rem[0], i2_rem[1], i2_rem[2], diag[0], diag[1], diag[2]
        ),
    ))
}

fn numeric_kernels() -> Outcome {
    let z2 = (zeta_re(2.0) - PI * PI / 6.0).abs();
    let g = (gamma_re(1.0 / 3.0) * gamma_re(2.0 / 3.0) - 2.0 * PI / 3f64.sqrt()).abs();
    let mut refl: f64 = 0.0;
    let mut rec: f64 = 0.0;
    let mut feq: f64 = 0.0;
    let one = c(1.0);
    for i in 0..=12 {
        let re = -2.7 + 0.45 * i as f64;
        for j in 0..=8 {
            let s = C64::new(re, 0.1 + 2.5 * j as f64);
            let prod = gamma(s)? * gamma(one - s)? * (s * PI).sin();
            refl = refl.max((prod - PI).norm() / (1.0 + prod.norm()));
            let a = gamma(s + 1.0)?;
            rec = rec.max((a - s * gamma(s)?).norm() / (1.0 + a.norm()));
            if (-1.5..=2.5).contains(&re) && s.im >= 1.0 {
                let lhs = zeta(s)?;
                let rhs = (s * 2f64.ln()).exp() * ((s - 1.0) * PI.ln()).exp() * (s * PI / 2.0).sin() * gamma(one - s)? * zeta(one - s)?;
                feq = feq.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
            }
        }
    }
    let ok = z2 <= 1e-12 && g <= 1e-12 && refl <= 1e-10 && rec <= 1e-10 && feq <= 1e-10;
    Ok((ok, format!("zeta(2) {z2:.1e}, Gamma(1/3)Gamma(2/3) {g:.1e}, reflection {refl:.1e}, recurrence {rec:.1e}, functional equation {feq:.1e}")))
}

fn global_error_positivity() -> Outcome {
    let x_max = 1_000_000;
    let all = FamilySlice::load_with(Some(&cache_dir()), x_max, Sign::Plus, &EnumOptions { include_galois: true })?;
    let grid = log_grid(1000, x_max, 100);
    let mut min_grid = f64::INFINITY;
    for &x in &grid {
        min_grid = min_grid.min(global_error(&all, x)?);
    }
    let mut dense_bad = 0;
    let mut min_dense = f64::INFINITY;
    for x in 1000..=x_max {
        let e = global_error(&all, x)?;
        min_dense = min_dense.min(e);
        if e <= 0.0 {
            dense_bad += 1;
        }
    }
    Ok((
        min_grid > 0.0,
        format!(
            "{} grid points, min E+ {min_grid:.4}; every integer X: {dense_bad} with E+ <= 0, min {min_dense:.4}",
            grid.len()
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("enumeration matches oracle", enumeration_matches_oracle),
        ("partition and ramification identities", partition_and_ramification),
        ("coefficient-table identities", coefficient_identities),
        ("diagonal ratios identities", diagonal_identities),
        ("pole data", pole_data),
        ("empirical vs predicted counts", counts_vs_predictions),
        ("one-level density closure", density_closure),
        ("J contour vs asymptotic", j_forms),
        ("expansion consistency", expansion_consistency),
        ("numeric kernels", numeric_kernels),
        ("global error positivity", global_error_positivity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, note) = match std::panic::catch_unwind(run) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name} ({:.1}s): {note}", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
