use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cubic_core::cubic_enum::{cache_path, EnumOptions};
use cubic_core::density::{
    average_density_empirical, theorem_main_prediction, write_density_csv, DensityConfig, PredictionReport,
    TestFunction,
};
use cubic_core::euler::EulerConfig;
use cubic_core::family::{
    error_rows, global_rows, log_grid, write_errors_csv, write_fstat_csv, write_global_csv, FamilySlice,
};
use cubic_core::numkernel::{gamma_re, zeta_re, C64};
use cubic_core::primes::primes_up_to;
use cubic_core::ratios::{
    a3, a3_diag, a3_residue_closed_form, a3_residue_richardson, a4, a4_diag, a4_double_pole_limit,
    a4_double_pole_richardson, c_pm, j_asymptotic, pole_product, ratios_prediction, write_ratios_csv, ContourCache,
    ContourConfig, JMode, RatiosConfig, RatiosRow,
};
use cubic_core::Sign;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Primes covered by fstat.csv besides the configured ones.
const FSTAT_PRIME_MAX: u64 = 1000;

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

/// `stem.csv` for a single sign, `stem_plus.csv` and so on otherwise.
fn per_sign(cfg: &RunConfig, stem: &str, sign: Sign) -> PathBuf {
    if cfg.signs.len() == 1 {
        cfg.out_file(&format!("{stem}.csv"))
    } else {
        cfg.out_file(&format!("{stem}_{}.csv", sign_name(sign)))
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

/// Prepends the timestamp line unless suppressed.
fn finish(path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.timestamp {
        let body = std::fs::read_to_string(path)?;
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        write_atomic(path, &format!("# generated {secs}\n{body}"))?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn load(cfg: &RunConfig, sign: Sign, include_galois: bool) -> Result<FamilySlice, CliError> {
    std::fs::create_dir_all(cfg.cache_dir())?;
    let opts = EnumOptions { include_galois };
    Ok(FamilySlice::load_with(Some(cfg.cache_dir()), cfg.x_max, sign, &opts)?)
}

fn phi(cfg: &RunConfig) -> Result<TestFunction, CliError> {
    Ok(TestFunction::new(cfg.phi_kind, cfg.sigma)?)
}

fn density_cfg(cfg: &RunConfig) -> DensityConfig {
    DensityConfig { sieve_cutoff: cfg.sieve_cutoff, ..DensityConfig::default() }
}

fn ratios_cfg(cfg: &RunConfig) -> RatiosConfig {
    RatiosConfig { euler: EulerConfig { p_max: cfg.product_cutoff, ..EulerConfig::default() } }
}

pub fn enumerate(cfg: &RunConfig) -> Result<(), CliError> {
    for &sign in &cfg.signs {
        let slice = load(cfg, sign, false)?;
        let path = cache_path(cfg.cache_dir(), cfg.x_max, sign, false);
        println!("{sign}: {} fields with |D| < {} ({})", slice.records().len(), cfg.x_max, path.display());
    }
    Ok(())
}

pub fn counts(cfg: &RunConfig) -> Result<(), CliError> {
    let xs = log_grid(cfg.x_max.min(10), cfg.x_max, 20);
    let mut fprimes: Vec<u64> = primes_up_to(FSTAT_PRIME_MAX.min(cfg.x_max as u64));
    fprimes.extend(&cfg.primes);
    fprimes.sort_unstable();
    fprimes.dedup();
    for &sign in &cfg.signs {
        let slice = load(cfg, sign, false)?;
        let rows = error_rows(&slice, &xs, &cfg.primes, &cfg.types)?;
        let path = per_sign(cfg, "errors", sign);
        write_errors_csv(&path, &rows)?;
        finish(&path, cfg)?;
        let mut frows = Vec::new();
        for &p in &fprimes {
            for &t in &cfg.types {
                frows.push((p, t, cfg.x_max, slice.f_stat(cfg.x_max, p, t)?));
            }
        }
        let path = per_sign(cfg, "fstat", sign);
        write_fstat_csv(&path, &frows)?;
        finish(&path, cfg)?;
    }
    Ok(())
}

pub fn errors(cfg: &RunConfig) -> Result<(), CliError> {
    let lo = if cfg.x_max >= 10_000 { 1000 } else { cfg.x_max.min(10) };
    let xs = log_grid(lo, cfg.x_max, 100);
    for &sign in &cfg.signs {
        let slice = load(cfg, sign, true)?;
        let rows = global_rows(&slice, &xs)?;
        let path = per_sign(cfg, "global_errors", sign);
        write_global_csv(&path, sign, &rows)?;
        finish(&path, cfg)?;
    }
    Ok(())
}

pub fn density(cfg: &RunConfig) -> Result<(), CliError> {
    let f = phi(cfg)?;
    let dcfg = density_cfg(cfg);
    let mut reports = Vec::new();
    for &sign in &cfg.signs {
        let slice = load(cfg, sign, false)?;
        for x in cfg.eval_points() {
            let rep = theorem_main_prediction(x as f64, sign, &f, cfg.theta, cfg.omega, &dcfg)?;
            if !rep.admissible {
                eprintln!("warning: sigma = {} is outside the admissible support for theta = {}, omega = {}", cfg.sigma, cfg.theta, cfg.omega);
            }
            let emp = average_density_empirical(&slice, x, &f, &dcfg)?;
            reports.push((rep, Some(emp)));
        }
    }
    let path = cfg.out_file("density.csv");
    write_density_csv(&path, &reports)?;
    finish(&path, cfg)
}

struct RatiosEval {
    theorem: PredictionReport,
    ratios: PredictionReport,
    j_asym: Option<f64>,
}

fn ratios_eval(cfg: &RunConfig, sign: Sign, x: f64, cache: &mut ContourCache) -> Result<RatiosEval, CliError> {
    let f = phi(cfg)?;
    let dcfg = density_cfg(cfg);
    let rcfg = ratios_cfg(cfg);
    let theorem = theorem_main_prediction(x, sign, &f, cfg.theta, cfg.omega, &dcfg)?;
    let ratios = ratios_prediction(x, sign, &f, cfg.theta, cfg.omega, JMode::Contour, cache, &rcfg, &dcfg)?;
    let j_asym = if cfg.sigma < 1.0 { Some(j_asymptotic(x, sign, &f, &rcfg)?) } else { None };
    Ok(RatiosEval { theorem, ratios, j_asym })
}

pub fn ratios(cfg: &RunConfig) -> Result<(), CliError> {
    let mut cache = ContourCache::new(ContourConfig::default())?;
    let mut rows = Vec::new();
    for &sign in &cfg.signs {
        for x in cfg.eval_points() {
            let ev = ratios_eval(cfg, sign, x as f64, &mut cache)?;
            rows.push(RatiosRow {
                discrepancy: ev.ratios.total - ev.theorem.total,
                j_contour: ev.ratios.j_term,
                j_asymptotic: ev.j_asym,
                report: ev.ratios,
            });
        }
    }
    let path = cfg.out_file("ratios.csv");
    write_ratios_csv(&path, &rows)?;
    finish(&path, cfg)
}

pub const COMPARE_HEADER: &str = "X,sign,sigma,term,theorem,ratios,empirical,abs_empirical_minus_theorem,abs_empirical_minus_ratios";

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let f = phi(cfg)?;
    let dcfg = density_cfg(cfg);
    let mut cache = ContourCache::new(ContourConfig::default())?;
    let mut lines = vec![COMPARE_HEADER.to_string()];
    for &sign in &cfg.signs {
        let slice = load(cfg, sign, false)?;
        for x in cfg.eval_points() {
            let emp = average_density_empirical(&slice, x, &f, &dcfg)?;
            let ev = ratios_eval(cfg, sign, x as f64, &mut cache)?;
            let head = format!("{x},{sign},{}", cfg.sigma);
            for (name, r) in ev.ratios.terms() {
                if name == "total" {
                    continue;
                }
                let t = ev.theorem.terms().iter().find(|(n, _)| *n == name).map(|p| p.1).unwrap_or(0.0);
                lines.push(format!("{head},{name},{t:.12e},{r:.12e},,,"));
            }
            let (t, r) = (ev.theorem.total, ev.ratios.total);
            lines.push(format!(
                "{head},total,{t:.12e},{r:.12e},{emp:.12e},{:.12e},{:.12e}",
                (emp - t).abs(),
                (emp - r).abs()
            ));
        }
    }
    let path = cfg.out_file("compare.csv");
    write_atomic(&path, &(lines.join("\n") + "\n"))?;
    finish(&path, cfg)
}

fn check(name: &str, value: f64, expected: f64, tol: f64) -> Value {
    let pass = (value - expected).abs() <= tol;
    json!({ "name": name, "value": value, "expected": expected, "tolerance": tol, "pass": pass })
}

/// Constants and identity checks; the boolean reports whether every check passed.
pub fn selftest_report(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    let rcfg = ratios_cfg(cfg);
    let c = |re: f64| C64::new(re, 0.0);
    let mut checks = vec![
        check("zeta(2) = pi^2/6", zeta_re(2.0), std::f64::consts::PI.powi(2) / 6.0, 1e-12),
        check(
            "Gamma(1/3) Gamma(2/3) = 2 pi / sqrt 3",
            gamma_re(1.0 / 3.0) * gamma_re(2.0 / 3.0),
            2.0 * std::f64::consts::PI / 3f64.sqrt(),
            1e-12,
        ),
    ];
    for r in [0.05, 0.1, 0.2] {
        checks.push(check(&format!("A3({r},{r}) = 1"), a3(c(r), c(r), &rcfg)?.norm(), 1.0, 1e-8));
    }
    for r in [0.05, 0.1] {
        checks.push(check(&format!("A4({r},{r}) = 1"), a4(c(r), c(r), &rcfg)?.norm(), 1.0, 1e-8));
    }
    for s in [0.05, 0.1] {
        let d = (a3_diag(c(s), &rcfg)? - a3(c(-s), c(s), &rcfg)?).norm();
        checks.push(check(&format!("A3 diagonal routes at s = {s}"), d, 0.0, 1e-7));
        let d = (a4_diag(c(s), &rcfg)? - a4(c(-s), c(s), &rcfg)?).norm();
        checks.push(check(&format!("A4 diagonal routes at s = {s}"), d, 0.0, 1e-7));
    }
    let residue = a3_residue_closed_form();
    checks.push(check("A3 residue at 1/6", a3_residue_richardson(1e-3, &rcfg)?, residue, 1e-6));
    let limit = a4_double_pole_limit(&rcfg)?;
    checks.push(check("A4 double-pole limit at 1/6", a4_double_pole_richardson(1e-2, &rcfg)?, limit, 1e-5));
    let all_pass = checks.iter().all(|v| v["pass"] == json!(true));
    let mut constants = serde_json::Map::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let k = cubic_core::asym::constants(sign);
        let n = sign_name(sign);
        constants.insert(format!("C1_{n}"), json!(k.c1));
        constants.insert(format!("C2_{n}"), json!(k.c2));
        constants.insert(format!("C2_over_C1_{n}"), json!(k.ratio()));
        constants.insert(format!("C_transition_{n}"), json!(c_pm(sign, &rcfg)?));
    }
    constants.insert("A3_residue".into(), json!(residue));
    constants.insert("A4_double_pole_limit".into(), json!(limit));
    constants.insert("pole_product".into(), json!(pole_product(&rcfg)?));
    let report = json!({ "constants": constants, "checks": checks, "all_pass": all_pass });
    Ok((report, all_pass))
}

pub fn selftest(cfg: &RunConfig) -> Result<(), CliError> {
    let (report, all_pass) = selftest_report(cfg)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
    write_atomic(&cfg.out_file("selftest.json"), &format!("{text}\n"))?;
    println!("{text}");
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Numeric("self-test identity check failed".into()))
    }
}
