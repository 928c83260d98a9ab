//! Closed-form constants and predicted family averages: the counting
//! constants C1, C2, local weights, the f/g coefficient tables and the
//! predicted means of lambda_K(m) mu_K(h), a_K(p^e) and log|D_K|.

use num_rational::Ratio;
use thiserror::Error;

use crate::numkernel::{gamma_re, zeta_re};
use crate::Sign;

#[derive(Debug, Error, PartialEq)]
pub enum AsymError {
    #[error("second index s must be 0, 1 or 2, got {0}")]
    BadS(u32),
    #[error("h = {0} is not cubefree")]
    HNotCubefree(u64),
    #[error("family is empty")]
    EmptyFamily,
    #[error("m and h together involve more than 8 primes")]
    TooManyPrimes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryConstants {
    pub sign: Sign,
    pub c1: f64,
    pub c2: f64,
}

impl SecondaryConstants {
    /// `C2 / C1`.
    pub fn ratio(&self) -> f64 {
        self.c2 / self.c1
    }

    /// `(C2/C1) X^{-1/6} (1 - (C2/C1) X^{-1/6})`, the weight of secondary terms.
    pub fn secondary_weight(&self, x: f64) -> f64 {
        let k = self.ratio() * x.powf(-1.0 / 6.0);
        k * (1.0 - k)
    }
}

pub fn constants(sign: Sign) -> SecondaryConstants {
    let z3 = zeta_re(3.0);
    let c2p = 4.0 * zeta_re(1.0 / 3.0) / (5.0 * gamma_re(2.0 / 3.0).powi(3) * zeta_re(5.0 / 3.0));
    match sign {
        Sign::Plus => SecondaryConstants { sign, c1: 1.0 / (12.0 * z3), c2: c2p },
        Sign::Minus => SecondaryConstants { sign, c1: 1.0 / (4.0 * z3), c2: 3f64.sqrt() * c2p },
    }
}

/// Splitting types of a prime in a cubic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitType {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl SplitType {
    pub const ALL: [SplitType; 5] = [SplitType::T1, SplitType::T2, SplitType::T3, SplitType::T4, SplitType::T5];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(k: usize) -> Option<SplitType> {
        SplitType::ALL.get(k.wrapping_sub(1)).copied()
    }
}

impl std::fmt::Display for SplitType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T{}", self.index())
    }
}

impl std::str::FromStr for SplitType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches(['T', 't']);
        t.parse::<usize>()
            .ok()
            .and_then(SplitType::from_index)
            .ok_or_else(|| format!("unknown splitting type '{s}'"))
    }
}

pub fn x_p(p: u64) -> f64 {
    x_at(p as f64)
}

pub fn y_p(p: u64) -> f64 {
    y_at(p as f64)
}

/// `x_p` as a function of a real variable.
pub fn x_at(pf: f64) -> f64 {
    let q = 1.0 / pf;
    1.0 / (1.0 + q + q * q)
}

/// `y_p` as a function of a real variable.
pub fn y_at(pf: f64) -> f64 {
    (1.0 - pf.powf(-1.0 / 3.0)) / ((1.0 - pf.powf(-5.0 / 3.0)) * (1.0 + 1.0 / pf))
}

pub fn c_k(p: u64, t: SplitType) -> f64 {
    let pf = p as f64;
    match t {
        SplitType::T1 => 1.0 / 6.0,
        SplitType::T2 => 0.5,
        SplitType::T3 => 1.0 / 3.0,
        SplitType::T4 => 1.0 / pf,
        SplitType::T5 => 1.0 / (pf * pf),
    }
}

pub fn d_k(p: u64, t: SplitType) -> f64 {
    let pf = p as f64;
    let u = pf.powf(-1.0 / 3.0);
    match t {
        SplitType::T1 => (1.0 + u).powi(3) / 6.0,
        SplitType::T2 => (1.0 + u) * (1.0 + u * u) / 2.0,
        SplitType::T3 => (1.0 + 1.0 / pf) / 3.0,
        SplitType::T4 => (1.0 + u).powi(2) / pf,
        SplitType::T5 => (1.0 + u) / (pf * pf),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights {
    pub p: u64,
    pub x_p: f64,
    pub y_p: f64,
    pub c: [f64; 5],
    pub d: [f64; 5],
}

pub fn local_weights(p: u64) -> LocalWeights {
    LocalWeights {
        p,
        x_p: x_p(p),
        y_p: y_p(p),
        c: SplitType::ALL.map(|t| c_k(p, t)),
        d: SplitType::ALL.map(|t| d_k(p, t)),
    }
}

/// `(A_p(T), B_p(T))` with `A = C1 x_p c_k(p)` and `B = C2 y_p d_k(p)`.
pub fn a_b_constants(p: u64, t: SplitType, sign: Sign) -> (f64, f64) {
    let k = constants(sign);
    (k.c1 * x_p(p) * c_k(p, t), k.c2 * y_p(p) * d_k(p, t))
}

/// Products over a vector of (prime, type) conditions.
pub fn a_b_constants_vector(conds: &[(u64, SplitType)], sign: Sign) -> (f64, f64) {
    let k = constants(sign);
    let a: f64 = conds.iter().map(|&(p, t)| x_p(p) * c_k(p, t)).product();
    let b: f64 = conds.iter().map(|&(p, t)| y_p(p) * d_k(p, t)).product();
    (k.c1 * a, k.c2 * b)
}

pub fn tau_e(e: u32) -> i64 {
    match e % 3 {
        0 => 1,
        1 => -1,
        _ => 0,
    }
}

pub fn eta_e(e: u32) -> i64 {
    if e % 3 == 0 {
        2
    } else {
        -1
    }
}

pub fn theta_e(e: u32) -> i64 {
    (e % 2 == 0) as i64 + (e % 3 == 0) as i64
}

pub fn kappa_e(p: u64, e: u32) -> f64 {
    kappa_at(p as f64, e)
}

pub fn kappa_at(pf: f64, e: u32) -> f64 {
    let d2 = (e % 2 == 0) as i64 as f64;
    let d3 = (e % 3 == 0) as i64 as f64;
    (d2 + d3) * (1.0 + pf.powf(-2.0 / 3.0)) + (1.0 - d3) * pf.powf(-1.0 / 3.0)
}

pub fn beta_e(p: u64, e: u32) -> f64 {
    beta_at(p as f64, e)
}

/// `beta_e` as a function of a real variable.
pub fn beta_at(pf: f64, e: u32) -> f64 {
    y_at(pf) * (1.0 + pf.powf(-1.0 / 3.0)) * (kappa_at(pf, e) + 1.0 / pf + pf.powf(-4.0 / 3.0))
        - x_at(pf) * (theta_e(e) as f64 + 1.0 / pf)
}

/// `beta_1(u) - u^{-1/3}` in a cancellation-free form, `t = u^{-1/3}`.
pub fn beta1_minus_t_at(pf: f64) -> f64 {
    let t = pf.powf(-1.0 / 3.0);
    let t3 = t * t * t;
    let t5 = t3 * t * t;
    (t5 * t3 * t - t5) / ((1.0 - t5) * (1.0 + t3)) - t3 / (1.0 + t3 + t3 * t3)
}

/// `f(e, s, p)` as an exact rational.
pub fn f_table(e: u32, s: u32, p: u64) -> Result<Ratio<i64>, AsymError> {
    let r = |n: i64, d: i64| Ratio::new(n, d);
    let e1 = r(e as i64 + 1, 1);
    let par = r(1 + if e % 2 == 0 { 1 } else { -1 }, 4);
    let tau = r(tau_e(e), 3);
    let inv_p = r(1, p as i64);
    match s {
        0 => Ok(e1 / 6 + par + tau + inv_p),
        1 => Ok(-e1 / 3 + tau - inv_p),
        2 => Ok(e1 / 6 - par + tau),
        _ => Err(AsymError::BadS(s)),
    }
}

pub fn f_table_f64(e: u32, s: u32, p: u64) -> Result<f64, AsymError> {
    let v = f_table(e, s, p)?;
    Ok(*v.numer() as f64 / *v.denom() as f64)
}

/// `g(e, s, p)`.
pub fn g_table(e: u32, s: u32, p: u64) -> Result<f64, AsymError> {
    let pf = p as f64;
    let u = pf.powf(-1.0 / 3.0);
    let e1 = e as f64 + 1.0;
    let par = (1.0 + if e % 2 == 0 { 1.0 } else { -1.0 }) * (1.0 + u) * (1.0 + u * u) / 4.0;
    let tau = tau_e(e) as f64 * (1.0 + 1.0 / pf) / 3.0;
    let cube = (1.0 + u).powi(3);
    match s {
        0 => Ok(e1 * cube / 6.0 + par + tau + (1.0 + u).powi(2) / pf),
        1 => Ok(-e1 * cube / 3.0 + tau - (1.0 + u).powi(2) / pf),
        2 => Ok(e1 * cube / 6.0 - par + tau),
        _ => Err(AsymError::BadS(s)),
    }
}

/// Prime factorization by trial division.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `(p, e, s)` with `p^e || m` and `p^s || h`, over primes dividing `mh`.
pub fn joint_exponents(m: u64, h: u64) -> Result<Vec<(u64, u32, u32)>, AsymError> {
    let fm = factor(m);
    let fh = factor(h);
    if fh.iter().any(|&(_, s)| s >= 3) {
        return Err(AsymError::HNotCubefree(h));
    }
    let mut primes: Vec<u64> = fm.iter().chain(fh.iter()).map(|&(p, _)| p).collect();
    primes.sort_unstable();
    primes.dedup();
    if primes.len() > 8 {
        return Err(AsymError::TooManyPrimes);
    }
    let get = |f: &[(u64, u32)], p: u64| f.iter().find(|x| x.0 == p).map(|x| x.1).unwrap_or(0);
    Ok(primes.into_iter().map(|p| (p, get(&fm, p), get(&fh, p))).collect())
}

/// Predicted family mean of `lambda_K(m) mu_K(h)`: main plus secondary term.
pub fn predicted_mean_lambda_mu(m: u64, h: u64, x: f64, sign: Sign) -> Result<f64, AsymError> {
    let parts = joint_exponents(m, h)?;
    let mut pf = 1.0;
    let mut pg = 1.0;
    for (p, e, s) in parts {
        pf *= f_table_f64(e, s, p)? * x_p(p);
        pg *= g_table(e, s, p)? * y_p(p);
    }
    Ok(pf + (pg - pf) * constants(sign).secondary_weight(x))
}

/// Predicted `sum_K a_K(p^e)` over the family up to X.
pub fn predicted_sum_a(p: u64, e: u32, x: f64, sign: Sign) -> f64 {
    let k = constants(sign);
    let pf = p as f64;
    k.c1 * x * (theta_e(e) as f64 + 1.0 / pf) * x_p(p)
        + k.c2 * x.powf(5.0 / 6.0) * (1.0 + pf.powf(-1.0 / 3.0)) * (kappa_e(p, e) + 1.0 / pf + pf.powf(-4.0 / 3.0)) * y_p(p)
}

/// Predicted mean of `log|D_K|` over the family up to X.
pub fn predicted_average_log_disc(x: f64, sign: Sign) -> f64 {
    let k = constants(sign);
    let r = k.ratio();
    x.ln() - 1.0 - r / 5.0 * x.powf(-1.0 / 6.0) + r * r / 5.0 * x.powf(-1.0 / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_relations() {
        let p = constants(Sign::Plus);
        let m = constants(Sign::Minus);
        assert!((p.c1 - 0.069_325_614_381_725_62).abs() < 1e-14);
        assert!((m.c1 / p.c1 - 3.0).abs() < 1e-14);
        assert!((m.c2 / p.c2 - 3f64.sqrt()).abs() < 1e-14);
        assert!((p.c2 + 0.147_685_261_030_334_86).abs() < 1e-12);
    }

    #[test]
    fn small_table_values() {
        assert!((x_p(2) - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(c_k(2, SplitType::T1), 1.0 / 6.0);
        assert!((d_k(2, SplitType::T3) - 0.5).abs() < 1e-15);
        assert_eq!(theta_e(1), 0);
        assert_eq!(theta_e(6), 2);
        let k2 = kappa_e(5, 2);
        assert!((k2 - (1.0 + 5f64.powf(-1.0 / 3.0) + 5f64.powf(-2.0 / 3.0))).abs() < 1e-15);
    }

    #[test]
    fn bad_s_and_cubefree() {
        assert_eq!(f_table(1, 3, 2), Err(AsymError::BadS(3)));
        assert_eq!(predicted_mean_lambda_mu(1, 8, 1e6, Sign::Plus), Err(AsymError::HNotCubefree(8)));
        assert_eq!(predicted_mean_lambda_mu(1, 1, 1e6, Sign::Plus), Ok(1.0));
    }
}
