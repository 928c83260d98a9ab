//! Complex special functions: Riemann zeta, its logarithmic derivative,
//! gamma, digamma and the archimedean factors of the cubic family.
//!
//! Everything is double precision. Zeta uses Euler–Maclaurin summation,
//! gamma and digamma use the Stirling series after an upward shift.

use crate::Sign;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KernelError {
    #[error("zeta has a pole at s = 1")]
    PoleAtOne,
    #[error("argument {0} outside the supported strip Re s > -2")]
    OutOfDomain(f64),
    #[error("gamma/digamma pole at a nonpositive integer (s = {0})")]
    PoleAtNonpositiveInteger(f64),
    #[error("zeta'/zeta requested at Re s = {0} < 0.55, inside the unguarded strip")]
    GuardViolation(f64),
    #[error("argument within 1e-6 of a pole of the gamma factor")]
    PoleProximity,
    #[error("non-finite result")]
    NonFinite,
}

/// B_2, B_4, ..., B_24.
const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Truncation parameters for Euler–Maclaurin zeta.
#[derive(Debug, Clone, Copy)]
pub struct ZetaConfig {
    /// Number of leading terms is `max(min_terms, 2|Im s|)`.
    pub min_terms: usize,
    /// Number of Bernoulli corrections, at most 12.
    pub order: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig { min_terms: 20, order: 12 }
    }
}

fn check_finite(z: C64) -> Result<C64, KernelError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(KernelError::NonFinite)
    }
}

fn zeta_domain(s: C64) -> Result<(), KernelError> {
    if (s - 1.0).norm() < 1e-14 {
        return Err(KernelError::PoleAtOne);
    }
    if !(s.re > -2.0) {
        return Err(KernelError::OutOfDomain(s.re));
    }
    Ok(())
}

/// Returns (zeta(s), zeta'(s)).
pub fn zeta_and_derivative_with(s: C64, cfg: ZetaConfig) -> Result<(C64, C64), KernelError> {
    zeta_domain(s)?;
    let n = cfg.min_terms.max((2.0 * s.im.abs()).ceil() as usize).max(2);
    let order = cfg.order.min(BERNOULLI.len());
    let mut z = C64::new(0.0, 0.0);
    let mut dz = C64::new(0.0, 0.0);
    for k in 1..n {
        let lk = (k as f64).ln();
        let t = (-s * lk).exp();
        z += t;
        dz -= t * lk;
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    let sm1 = s - 1.0;
    let head = n_pow * nf / sm1;
    z += head + n_pow * 0.5;
    dz += -head * ln_n - head / sm1 - n_pow * (0.5 * ln_n);

    // Correction k: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * N^{-s-2k+1}
    let mut poly = s;
    let mut dpoly = C64::new(1.0, 0.0);
    let mut fact = 2.0;
    let mut npow = n_pow / nf;
    for k in 1..=order {
        let b = BERNOULLI[k - 1] / fact;
        z += poly * npow * b;
        dz += (dpoly - poly * ln_n) * npow * b;
        let j1 = s + (2 * k - 1) as f64;
        let j2 = s + (2 * k) as f64;
        let new_poly = poly * j1 * j2;
        dpoly = dpoly * j1 * j2 + poly * (j1 + j2);
        poly = new_poly;
        fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
        npow /= nf * nf;
    }
    Ok((check_finite(z)?, check_finite(dz)?))
}

pub fn zeta_with(s: C64, cfg: ZetaConfig) -> Result<C64, KernelError> {
    zeta_and_derivative_with(s, cfg).map(|v| v.0)
}

pub fn zeta(s: C64) -> Result<C64, KernelError> {
    zeta_with(s, ZetaConfig::default())
}

pub fn zeta_derivative(s: C64) -> Result<C64, KernelError> {
    zeta_and_derivative_with(s, ZetaConfig::default()).map(|v| v.1)
}

/// Real-argument convenience wrapper; panics only on the pole.
pub fn zeta_re(s: f64) -> f64 {
    zeta(C64::new(s, 0.0)).expect("zeta at a real point away from 1").re
}

/// Lowest real part at which zeta'/zeta is evaluated. The strip
/// 0.55 <= Re s <= 1 is treated as zero-free for the heights the
/// contour integrals reach (|Im s| <= 100, below the first zero off the
/// critical line by a wide margin since all zeros there have Re s = 1/2).
pub const LOG_DERIVATIVE_GUARD: f64 = 0.55;

pub fn zeta_log_derivative(s: C64) -> Result<C64, KernelError> {
    if s.re < LOG_DERIVATIVE_GUARD {
        return Err(KernelError::GuardViolation(s.re));
    }
    let (z, dz) = zeta_and_derivative_with(s, ZetaConfig::default())?;
    check_finite(dz / z)
}

fn near_nonpositive_integer(s: C64, tol: f64) -> bool {
    s.re < 0.5 && s.im.abs() < tol && (s.re - s.re.round()).abs() < tol
}

const STIRLING_SHIFT: f64 = 15.0;

/// log Gamma(z) up to a multiple of 2*pi*i; the result is only meant to
/// be exponentiated or differenced.
pub fn ln_gamma(s: C64) -> Result<C64, KernelError> {
    if near_nonpositive_integer(s, 1e-14) {
        return Err(KernelError::PoleAtNonpositiveInteger(s.re));
    }
    let mut z = s;
    let mut shift = C64::new(0.0, 0.0);
    while z.re < STIRLING_SHIFT {
        shift += z.ln();
        z += 1.0;
    }
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut series = C64::new(0.0, 0.0);
    let mut zp = zinv;
    for (k, b) in BERNOULLI.iter().enumerate().take(10) {
        let m = (2 * k + 2) as f64;
        series += zp * (b / (m * (m - 1.0)));
        zp *= zinv2;
    }
    let lg = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
    check_finite(lg - shift)
}

pub fn gamma(s: C64) -> Result<C64, KernelError> {
    if near_nonpositive_integer(s, 1e-14) {
        return Err(KernelError::PoleAtNonpositiveInteger(s.re));
    }
    let mut z = s;
    let mut prod = C64::new(1.0, 0.0);
    while z.re < STIRLING_SHIFT {
        prod *= z;
        z += 1.0;
    }
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut series = C64::new(0.0, 0.0);
    let mut zp = zinv;
    for (k, b) in BERNOULLI.iter().enumerate().take(10) {
        let m = (2 * k + 2) as f64;
        series += zp * (b / (m * (m - 1.0)));
        zp *= zinv2;
    }
    let lg = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
    check_finite(lg.exp() / prod)
}

pub fn gamma_re(s: f64) -> f64 {
    gamma(C64::new(s, 0.0)).expect("gamma at a regular real point").re
}

pub fn digamma(s: C64) -> Result<C64, KernelError> {
    if near_nonpositive_integer(s, 1e-14) {
        return Err(KernelError::PoleAtNonpositiveInteger(s.re));
    }
    let mut z = s;
    let mut acc = C64::new(0.0, 0.0);
    while z.re < STIRLING_SHIFT {
        acc -= z.inv();
        z += 1.0;
    }
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut series = C64::new(0.0, 0.0);
    let mut zp = zinv2;
    for (k, b) in BERNOULLI.iter().enumerate().take(10) {
        let m = (2 * k + 2) as f64;
        series += zp * (b / m);
        zp *= zinv2;
    }
    check_finite(acc + z.ln() - zinv * 0.5 - series)
}

fn ln_gamma_pm(sign: Sign, s: C64) -> Result<C64, KernelError> {
    let half = s * 0.5;
    let tail = match sign {
        Sign::Plus => ln_gamma(half)? * 2.0,
        Sign::Minus => ln_gamma(half)? + ln_gamma(half + 0.5)?,
    };
    Ok(tail - s * PI.ln())
}

fn gamma_pm_pole_check(sign: Sign, s: C64) -> Result<(), KernelError> {
    // Poles of Gamma_+ at s = 0, -2, -4, ...; Gamma_- adds -1, -3, ...
    let w = s * 0.5;
    if near_nonpositive_integer(w, 1e-6) {
        return Err(KernelError::PoleProximity);
    }
    if sign == Sign::Minus && near_nonpositive_integer(w + 0.5, 1e-6) {
        return Err(KernelError::PoleProximity);
    }
    Ok(())
}

/// Gamma_±(s) = pi^{-s} Gamma(s/2)^2 for +, pi^{-s} Gamma(s/2) Gamma((s+1)/2) for -.
pub fn gamma_pm(sign: Sign, s: C64) -> Result<C64, KernelError> {
    gamma_pm_pole_check(sign, s)?;
    let half = s * 0.5;
    let g = match sign {
        Sign::Plus => {
            let a = gamma(half)?;
            a * a
        }
        Sign::Minus => gamma(half)? * gamma(half + 0.5)?,
    };
    check_finite(g * (-s * PI.ln()).exp())
}

/// Gamma_±(1/2 - s) / Gamma_±(1/2 + s).
pub fn gamma_pm_ratio(sign: Sign, s: C64) -> Result<C64, KernelError> {
    let a = C64::new(0.5, 0.0) - s;
    let b = C64::new(0.5, 0.0) + s;
    gamma_pm_pole_check(sign, a)?;
    gamma_pm_pole_check(sign, b)?;
    check_finite((ln_gamma_pm(sign, a)? - ln_gamma_pm(sign, b)?).exp())
}

/// Gamma_±'/Gamma_±(z) at a complex point.
pub fn gamma_pm_logderiv(sign: Sign, z: C64) -> Result<C64, KernelError> {
    gamma_pm_pole_check(sign, z)?;
    let half = z * 0.5;
    let psi = match sign {
        Sign::Plus => digamma(half)?,
        Sign::Minus => (digamma(half)? + digamma(half + 0.5)?) * 0.5,
    };
    Ok(psi - PI.ln())
}

/// Re(Gamma_±'/Gamma_±(1/2 + i r)).
pub fn gamma_pm_logderiv_re(sign: Sign, r: f64) -> Result<f64, KernelError> {
    gamma_pm_logderiv(sign, C64::new(0.5, r)).map(|v| v.re)
}
