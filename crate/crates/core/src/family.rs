//! Queries over an enumerated family: splitting types, Dirichlet
//! coefficients, local counting functions and normalized error statistics.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use thiserror::Error;

pub use crate::asym::SplitType;
use crate::asym::{a_b_constants, a_b_constants_vector, constants, eta_e, joint_exponents, tau_e, AsymError};
use crate::cubic_enum::{roots_mod_p, EnumError, EnumOptions, FieldRecord};
use crate::Sign;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("query bound {x} exceeds the slice bound {x_max}")]
    SliceTooSmall { x: i64, x_max: i64 },
    #[error("prime list contains duplicates")]
    DuplicatePrimes,
    #[error("family is empty")]
    EmptyFamily,
    #[error("h = {0} is not cubefree")]
    HNotCubefree(u64),
    #[error("m and h together involve more than 8 primes")]
    TooManyPrimes,
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Factorization type of `p` in the field attached to the record's form.
pub fn splitting_type(rec: &FieldRecord, p: u64) -> SplitType {
    let (roots, multiple) = roots_mod_p(&rec.form, p as i64);
    match (roots, multiple) {
        (3, _) => SplitType::T1,
        (1, false) => SplitType::T2,
        (0, _) => SplitType::T3,
        (2, _) => SplitType::T4,
        (1, true) => SplitType::T5,
        _ => unreachable!("a maximal cubic form has at most 3 roots mod p"),
    }
}

/// `lambda_K(p^e)` for a prime of type `t`, e >= 1.
pub fn lambda_coeff(t: SplitType, e: u32) -> i64 {
    match t {
        SplitType::T1 => e as i64 + 1,
        SplitType::T2 => (e % 2 == 0) as i64,
        SplitType::T3 => tau_e(e),
        SplitType::T4 => 1,
        SplitType::T5 => 0,
    }
}

/// `a_K(p^e)`, the coefficient of `-zeta_K'/zeta_K + zeta'/zeta` at `p^e` over `log p`.
pub fn a_coeff(t: SplitType, e: u32) -> i64 {
    match t {
        SplitType::T1 => 2,
        SplitType::T2 => 2 * (e % 2 == 0) as i64,
        SplitType::T3 => eta_e(e),
        SplitType::T4 => 1,
        SplitType::T5 => 0,
    }
}

/// Kronecker symbol `(d / p)` for a prime `p`.
pub fn kronecker(d: i64, p: u64) -> i64 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let r = d.rem_euclid(p as i64) as u64;
    if r == 0 {
        return 0;
    }
    let mut base = r as u128;
    let mut exp = (p - 1) / 2;
    let m = p as u128;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

/// `mu_K(p^k)`.
pub fn mu_coeff(rec: &FieldRecord, p: u64, k: u32) -> i64 {
    match k {
        0 => 1,
        1 => -lambda_coeff(splitting_type(rec, p), 1),
        2 => kronecker(rec.disc, p),
        _ => 0,
    }
}

/// An immutable view of the family `0 < sign*D < x_max`.
#[derive(Debug)]
pub struct FamilySlice {
    sign: Sign,
    x_max: i64,
    records: Vec<FieldRecord>,
    types: RwLock<HashMap<u64, Arc<Vec<SplitType>>>>,
}

impl FamilySlice {
    /// Wraps records already restricted to `0 < sign*D < x_max` and sorted by `|D|`.
    pub fn new(sign: Sign, x_max: i64, records: Vec<FieldRecord>) -> Self {
        debug_assert!(records.iter().all(|r| sign.matches(r.disc) && r.disc.abs() < x_max));
        debug_assert!(records.windows(2).all(|w| w[0].disc.abs() <= w[1].disc.abs()));
        FamilySlice { sign, x_max, records, types: RwLock::new(HashMap::new()) }
    }

    /// Loads from a cache directory (or enumerates) the non-Galois family.
    pub fn load(cache: Option<&Path>, x_max: i64, sign: Sign) -> Result<Self, FamilyError> {
        Self::load_with(cache, x_max, sign, &EnumOptions::default())
    }

    pub fn load_with(cache: Option<&Path>, x_max: i64, sign: Sign, opts: &EnumOptions) -> Result<Self, FamilyError> {
        let recs = crate::cubic_enum::load_or_enumerate(cache, x_max, sign, opts)?;
        Ok(Self::new(sign, x_max, recs))
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn x_max(&self) -> i64 {
        self.x_max
    }

    pub fn records(&self) -> &[FieldRecord] {
        &self.records
    }

    fn check(&self, x: i64) -> Result<(), FamilyError> {
        if x > self.x_max {
            Err(FamilyError::SliceTooSmall { x, x_max: self.x_max })
        } else {
            Ok(())
        }
    }

    /// Number of records with `|D| < x`, unchecked.
    fn prefix(&self, x: i64) -> usize {
        self.records.partition_point(|r| r.disc.abs() < x)
    }

    /// Records with `|D| < x`.
    pub fn below(&self, x: i64) -> Result<&[FieldRecord], FamilyError> {
        self.check(x)?;
        Ok(&self.records[..self.prefix(x)])
    }

    /// Splitting types at `p` of every record, memoized per prime.
    pub fn types_at(&self, p: u64) -> Arc<Vec<SplitType>> {
        if let Some(v) = self.types.read().unwrap().get(&p) {
            return v.clone();
        }
        let v: Arc<Vec<SplitType>> = Arc::new(self.records.par_iter().map(|r| splitting_type(r, p)).collect());
        self.types.write().unwrap().insert(p, v.clone());
        v
    }

    /// `N(x)`: fields with `|D| < x`.
    pub fn count(&self, x: i64) -> Result<usize, FamilyError> {
        self.check(x)?;
        Ok(self.prefix(x))
    }

    /// `N_p(x, T)`.
    pub fn count_local(&self, x: i64, p: u64, t: SplitType) -> Result<usize, FamilyError> {
        self.check(x)?;
        let n = self.prefix(x);
        Ok(self.types_at(p)[..n].iter().filter(|&&s| s == t).count())
    }

    /// Fields with type `types[j]` at `primes[j]` for every j.
    pub fn count_local_vector(&self, x: i64, primes: &[u64], types: &[SplitType]) -> Result<usize, FamilyError> {
        self.check(x)?;
        let mut ps = primes.to_vec();
        ps.sort_unstable();
        ps.dedup();
        if ps.len() != primes.len() {
            return Err(FamilyError::DuplicatePrimes);
        }
        assert_eq!(primes.len(), types.len(), "primes and types differ in length");
        let n = self.prefix(x);
        let tables: Vec<_> = primes.iter().map(|&p| self.types_at(p)).collect();
        Ok((0..n).filter(|&i| tables.iter().zip(types).all(|(tab, t)| tab[i] == *t)).count())
    }

    /// Sorted `|D|` of fields of type `t` at `p`.
    fn local_discs(&self, p: u64, t: SplitType) -> Vec<i64> {
        let tab = self.types_at(p);
        self.records.iter().zip(tab.iter()).filter(|(_, s)| **s == t).map(|(r, _)| r.disc.abs()).collect()
    }

    /// `E_p(x, T) = N_p(x, T) - A_p(T) x - B_p(T) x^{5/6}`.
    pub fn error_stat(&self, x: i64, p: u64, t: SplitType) -> Result<f64, FamilyError> {
        let n = self.count_local(x, p, t)? as f64;
        let (a, b) = a_b_constants(p, t, self.sign);
        let xf = x as f64;
        Ok(n - a * xf - b * xf.powf(5.0 / 6.0))
    }

    /// `sup_{1 <= x <= X} x^{-1/2} |E_p(x, T)|` over real x.
    pub fn f_stat(&self, x: i64, p: u64, t: SplitType) -> Result<f64, FamilyError> {
        self.check(x)?;
        let (a, b) = a_b_constants(p, t, self.sign);
        let (lo, hi) = normalized_error_range(&self.local_discs(p, t), a, b, 1.0, x as f64);
        Ok(lo.abs().max(hi.abs()))
    }

    /// `f_stat` for several bounds at once, in one pass.
    pub fn f_stat_curve(&self, xs: &[i64], p: u64, t: SplitType) -> Result<Vec<f64>, FamilyError> {
        let discs = self.local_discs(p, t);
        let (a, b) = a_b_constants(p, t, self.sign);
        let mut sorted: Vec<i64> = xs.to_vec();
        sorted.sort_unstable();
        if let Some(&m) = sorted.last() {
            self.check(m)?;
        }
        let mut out = HashMap::new();
        let mut best = 0.0f64;
        let mut prev = 1.0;
        for &x in &sorted {
            let xf = x as f64;
            if xf > prev {
                let (lo, hi) = normalized_error_range(&discs, a, b, prev, xf);
                best = best.max(lo.abs()).max(hi.abs());
                prev = xf;
            } else if out.is_empty() {
                let (lo, hi) = normalized_error_range(&discs, a, b, 1.0, 1.0);
                best = lo.abs().max(hi.abs());
            }
            out.insert(x, best);
        }
        Ok(xs.iter().map(|x| out[x]).collect())
    }

    /// Vector form of the predicted constants for a local condition.
    pub fn predicted_local_vector(&self, x: f64, conds: &[(u64, SplitType)]) -> f64 {
        let (a, b) = a_b_constants_vector(conds, self.sign);
        a * x + b * x.powf(5.0 / 6.0)
    }
}

/// `X^{-1/2}(N_all(X) - C1 X - C2 X^{5/6})` for a Galois-inclusive slice.
pub fn global_error(all: &FamilySlice, x: i64) -> Result<f64, FamilyError> {
    let n = all.count(x)? as f64;
    let k = constants(all.sign());
    let xf = x as f64;
    Ok((n - k.c1 * xf - k.c2 * xf.powf(5.0 / 6.0)) / xf.sqrt())
}

/// Exact infimum and supremum of `x^{-1/2}(N(x) - A x - B x^{5/6})` over
/// real `x` in `[lo, hi]`, with `N(x) = #{d in discs : d < x}`.
pub fn global_error_range(all: &FamilySlice, lo: f64, hi: i64) -> Result<(f64, f64), FamilyError> {
    all.check(hi)?;
    let k = constants(all.sign());
    let discs: Vec<i64> = all.records().iter().map(|r| r.disc.abs()).collect();
    Ok(normalized_error_range(&discs, k.c1, k.c2, lo, hi as f64))
}

/// Range of `g_n(x) = x^{-1/2}(n - A x - B x^{5/6})` over `[lo, hi]` where `n`
/// steps up at each entry of the sorted `discs`. Each constant piece is
/// treated as closed, so both one-sided limits at a jump are included, and
/// interior critical points of `g_n` are located by bisection.
pub fn normalized_error_range(discs: &[i64], a: f64, b: f64, lo: f64, hi: f64) -> (f64, f64) {
    let g = |n: f64, x: f64| (n - a * x - b * x.powf(5.0 / 6.0)) / x.sqrt();
    // x^{3/2} g'(x) = -n/2 - (A/2) x - (B/3) x^{5/6}
    let h = |n: f64, x: f64| -n / 2.0 - a / 2.0 * x - b / 3.0 * x.powf(5.0 / 6.0);
    let peak = if b < 0.0 && a > 0.0 { (-5.0 * b / (9.0 * a)).powi(6) } else { f64::NAN };
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut visit = |n: f64, l: f64, r: f64| {
        for x in [l, r] {
            let v = g(n, x);
            min = min.min(v);
            max = max.max(v);
        }
        let mut cuts = vec![l];
        if peak > l && peak < r {
            cuts.push(peak);
        }
        cuts.push(r);
        for w in cuts.windows(2) {
            let (mut u, mut v) = (w[0], w[1]);
            let (hu, hv) = (h(n, u), h(n, v));
            if hu == 0.0 || hu.signum() == hv.signum() {
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (u + v);
                if m <= u || m >= v {
                    break;
                }
                if h(n, m).signum() == hu.signum() {
                    u = m;
                } else {
                    v = m;
                }
            }
            let val = g(n, 0.5 * (u + v));
            min = min.min(val);
            max = max.max(val);
        }
    };
    let mut n = discs.partition_point(|&d| (d as f64) < lo);
    // Include a jump sitting exactly at lo as a right limit.
    let mut left = lo;
    let mut i = n;
    while i < discs.len() && (discs[i] as f64) < hi {
        let d = discs[i] as f64;
        if d > left {
            visit(n as f64, left, d);
        }
        while i < discs.len() && discs[i] as f64 == d {
            i += 1;
        }
        n = i;
        left = d;
    }
    visit(n as f64, left, hi.max(left));
    (min, max)
}

/// `lambda_K(m) mu_K(h)` for one field; `h` must be cubefree.
pub fn lambda_mu(rec: &FieldRecord, parts: &[(u64, u32, u32)]) -> i64 {
    parts
        .iter()
        .map(|&(p, e, s)| {
            let l = if e == 0 { 1 } else { lambda_coeff(splitting_type(rec, p), e) };
            l * mu_coeff(rec, p, s)
        })
        .product()
}

/// Family average of `lambda_K(m) mu_K(h)` over `|D| < x`.
pub fn empirical_mean_lambda_mu(slice: &FamilySlice, x: i64, m: u64, h: u64) -> Result<f64, FamilyError> {
    let parts = joint_exponents(m, h).map_err(|e| match e {
        AsymError::HNotCubefree(h) => FamilyError::HNotCubefree(h),
        _ => FamilyError::TooManyPrimes,
    })?;
    let recs = slice.below(x)?;
    if recs.is_empty() {
        return Err(FamilyError::EmptyFamily);
    }
    let total: i64 = recs.par_iter().map(|r| lambda_mu(r, &parts)).sum();
    Ok(total as f64 / recs.len() as f64)
}

/// `sum_{|D_K| < x} a_K(p^e)`.
pub fn empirical_sum_a(slice: &FamilySlice, x: i64, p: u64, e: u32) -> Result<i64, FamilyError> {
    let n = slice.count(x)?;
    let tab = slice.types_at(p);
    Ok(tab[..n].iter().map(|&t| a_coeff(t, e)).sum())
}

/// Mean of `log|D_K|` over `|D| < x`.
pub fn average_log_disc(slice: &FamilySlice, x: i64) -> Result<f64, FamilyError> {
    let recs = slice.below(x)?;
    if recs.is_empty() {
        return Err(FamilyError::EmptyFamily);
    }
    let mut acc = Kahan::default();
    for r in recs {
        acc.add((r.disc.abs() as f64).ln());
    }
    Ok(acc.sum / recs.len() as f64)
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kahan {
    pub sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

fn atomic_write(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), FamilyError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| FamilyError::Io(e.error))?;
    Ok(())
}

pub const ERRORS_HEADER: &str = "X,p,type,count,A_term,B_term,E,E_normalized";
pub const FSTAT_HEADER: &str = "p,type,X,f_value";
pub const GLOBAL_HEADER: &str = "X,sign,count,E_normalized";

/// Integers `round(10^(k/per_decade))` in `[lo, hi]`, deduplicated, with `hi` appended.
pub fn log_grid(lo: i64, hi: i64, per_decade: u32) -> Vec<i64> {
    let mut out = Vec::new();
    if lo > hi || lo < 1 {
        return out;
    }
    let step = 1.0 / per_decade as f64;
    let mut k = ((lo as f64).log10() / step).floor() as i64;
    loop {
        let x = 10f64.powf(k as f64 * step).round() as i64;
        if x > hi {
            break;
        }
        if x >= lo && out.last() != Some(&x) {
            out.push(x);
        }
        k += 1;
    }
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

/// Rows `(X, N(X), X^{-1/2} E(X))` of the global error series.
pub fn global_rows(all: &FamilySlice, xs: &[i64]) -> Result<Vec<(i64, usize, f64)>, FamilyError> {
    xs.iter().map(|&x| Ok((x, all.count(x)?, global_error(all, x)?))).collect()
}

pub fn write_global_csv(path: &Path, sign: Sign, rows: &[(i64, usize, f64)]) -> Result<(), FamilyError> {
    atomic_write(path, |w| {
        writeln!(w, "{GLOBAL_HEADER}")?;
        for (x, n, e) in rows {
            writeln!(w, "{x},{sign},{n},{e:.10e}")?;
        }
        Ok(())
    })
}

/// One row of `errors.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub x: i64,
    pub p: u64,
    pub t: SplitType,
    pub count: usize,
    pub a_term: f64,
    pub b_term: f64,
    pub e: f64,
    pub e_normalized: f64,
}

pub fn error_rows(slice: &FamilySlice, xs: &[i64], primes: &[u64], types: &[SplitType]) -> Result<Vec<ErrorRow>, FamilyError> {
    let mut rows = Vec::new();
    for &p in primes {
        for &t in types {
            let (a, b) = a_b_constants(p, t, slice.sign());
            for &x in xs {
                let count = slice.count_local(x, p, t)?;
                let xf = x as f64;
                let (at, bt) = (a * xf, b * xf.powf(5.0 / 6.0));
                let e = count as f64 - at - bt;
                rows.push(ErrorRow { x, p, t, count, a_term: at, b_term: bt, e, e_normalized: e / xf.sqrt() });
            }
        }
    }
    Ok(rows)
}

pub fn write_errors_csv(path: &Path, rows: &[ErrorRow]) -> Result<(), FamilyError> {
    atomic_write(path, |w| {
        writeln!(w, "{ERRORS_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.x, r.p, r.t, r.count, r.a_term, r.b_term, r.e, r.e_normalized
            )?;
        }
        Ok(())
    })
}

pub fn write_fstat_csv(path: &Path, rows: &[(u64, SplitType, i64, f64)]) -> Result<(), FamilyError> {
    atomic_write(path, |w| {
        writeln!(w, "{FSTAT_HEADER}")?;
        for (p, t, x, f) in rows {
            writeln!(w, "{p},{t},{x},{f:.10e}")?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic_enum::Form;

    fn rec(a: i64, b: i64, c: i64, d: i64) -> FieldRecord {
        let form = Form::new(a, b, c, d);
        FieldRecord { disc: crate::cubic_enum::discriminant(&form).unwrap() as i64, form }
    }

    #[test]
    fn types_of_minus_23() {
        let k = rec(1, 0, -1, -1);
        assert_eq!(splitting_type(&k, 2), SplitType::T3);
        assert_eq!(splitting_type(&k, 5), SplitType::T2);
        assert_eq!(splitting_type(&k, 23), SplitType::T4);
        assert_eq!(splitting_type(&k, 59), SplitType::T1);
    }

    #[test]
    fn coefficient_tables() {
        assert_eq!(lambda_coeff(SplitType::T1, 2), 3);
        assert_eq!(a_coeff(SplitType::T3, 3), 2);
        assert_eq!(a_coeff(SplitType::T3, 4), -1);
        assert_eq!(mu_coeff(&rec(1, 0, -1, -1), 2, 2), 1);
        assert_eq!(mu_coeff(&rec(1, 0, -1, -1), 5, 3), 0);
        assert_eq!(kronecker(-23, 23), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(2, 7), 1);
    }

    #[test]
    fn range_on_empty_prefix() {
        let (a, b) = (0.1, -0.2);
        let (lo, hi) = normalized_error_range(&[], a, b, 1.0, 20.0);
        let g = |x: f64| (-a * x - b * x.powf(5.0 / 6.0)) / x.sqrt();
        let brute = (0..=19000).map(|i| g(1.0 + i as f64 / 1000.0)).fold((f64::INFINITY, f64::NEG_INFINITY), |acc, v| (acc.0.min(v), acc.1.max(v)));
        assert!((lo - brute.0).abs() < 1e-6 && (hi - brute.1).abs() < 1e-6);
    }
}
