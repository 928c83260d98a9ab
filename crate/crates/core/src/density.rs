//! One-level density of the family: test functions, the explicit formula
//! evaluated field by field, the averaged prime sums and their expansions
//! in powers of 1/L, and the assembled prediction.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::asym::{
    beta1_minus_t_at, beta_at, beta_e, constants, theta_e, x_at, x_p,
};
use crate::cubic_enum::FieldRecord;
use crate::family::{a_coeff, splitting_type, FamilyError, FamilySlice, Kahan};
use crate::numkernel::{gamma_pm_logderiv_re, KernelError, C64};
use crate::primes::SegmentedSieve;
use crate::quad::{integrate, integrate_split};
use crate::Sign;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("support bound sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),
    #[error("prime range up to {needed} exceeds the sieve cutoff {cutoff}")]
    SieveTooSmall { needed: f64, cutoff: u64 },
    #[error("expansion order {0} exceeds 3")]
    OrderTooLarge(usize),
    #[error("family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// `phi_hat(xi) = max(0, 1 - |xi|/sigma)`.
    Fejer,
    /// `phi_hat(xi) = cos^2(pi xi / (2 sigma))` on `[-sigma, sigma]`.
    RaisedCosine,
}

impl FromStr for TestKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fejer" => Ok(TestKind::Fejer),
            "raised-cosine" | "raisedcosine" | "cosine" => Ok(TestKind::RaisedCosine),
            other => Err(format!("unknown test function '{other}', expected fejer or raised-cosine")),
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestKind::Fejer => "fejer",
            TestKind::RaisedCosine => "raised-cosine",
        })
    }
}

/// An even test function with compactly supported Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub kind: TestKind,
    pub sigma: f64,
}

fn sinc(w: C64) -> C64 {
    if w.norm() < 1e-4 {
        let w2 = w * w;
        C64::new(1.0, 0.0) - w2 / 6.0 + w2 * w2 / 120.0
    } else {
        w.sin() / w
    }
}

impl TestFunction {
    pub fn new(kind: TestKind, sigma: f64) -> Result<Self, DensityError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(DensityError::BadSigma(sigma));
        }
        Ok(TestFunction { kind, sigma })
    }

    pub fn phi_hat(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a >= self.sigma {
            return 0.0;
        }
        match self.kind {
            TestKind::Fejer => 1.0 - a / self.sigma,
            TestKind::RaisedCosine => (PI * a / (2.0 * self.sigma)).cos().powi(2),
        }
    }

    /// Right derivatives of `phi_hat` at 0.
    pub fn phi_hat_derivative_at_zero(&self, n: usize) -> f64 {
        match self.kind {
            TestKind::Fejer => match n {
                0 => 1.0,
                1 => -1.0 / self.sigma,
                _ => 0.0,
            },
            TestKind::RaisedCosine => {
                // (1 + cos(b xi)) / 2 with b = pi / sigma
                if n == 0 {
                    1.0
                } else if n % 2 == 1 {
                    0.0
                } else {
                    let b = PI / self.sigma;
                    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    0.5 * sign * b.powi(n as i32)
                }
            }
        }
    }

    /// `phi(z) = int phi_hat(xi) e^{2 pi i xi z} d xi`, entire in z.
    pub fn phi(&self, z: C64) -> C64 {
        let s = self.sigma;
        match self.kind {
            TestKind::Fejer => {
                let v = sinc(z * (PI * s));
                v * v * s
            }
            TestKind::RaisedCosine => {
                let z = if z.re < 0.0 { -z } else { z };
                if z.norm() < 0.25 / s {
                    sinc(z * (2.0 * PI * s)) * s / (C64::new(1.0, 0.0) - z * z * (4.0 * s * s))
                } else {
                    // delta = 1 - 2 sigma z removes the pole at z = 1/(2 sigma).
                    let d = C64::new(1.0, 0.0) - z * (2.0 * s);
                    sinc(d * PI) / (z * 2.0 * (C64::new(2.0, 0.0) - d))
                }
            }
        }
    }

    pub fn phi_re(&self, x: f64) -> f64 {
        self.phi(C64::new(x, 0.0)).re
    }

    /// Spacing of the real zeros of `phi`, used as quadrature breakpoints.
    fn zero_spacing(&self) -> f64 {
        match self.kind {
            TestKind::Fejer => 1.0 / self.sigma,
            TestKind::RaisedCosine => 1.0 / (2.0 * self.sigma),
        }
    }
}

/// `L = log(X / (2 pi e)^2)`.
pub fn log_conductor(x: f64) -> f64 {
    x.ln() - 2.0 * (2.0 * PI).ln() - 2.0
}

#[derive(Debug, Clone, Copy)]
pub struct DensityConfig {
    /// Sieve cutoff U for the R(u) integrals and the constants nu_1, nu_2.
    pub sieve_cutoff: u64,
    /// Largest prime power allowed in direct prime sums.
    pub prime_limit: f64,
    /// Truncation point of the archimedean integral in r.
    pub gamma_r_max: f64,
    pub abs_tol: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig { sieve_cutoff: 10_000_000, prime_limit: 1e10, gamma_r_max: 1e5, abs_tol: 1e-11 }
    }
}

/// `(1/pi) int phi(L r / 2 pi) Re(Gamma_±'/Gamma_±)(1/2 + i r) dr`.
pub fn gamma_integral_term(sign: Sign, l: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    let scale = l / (2.0 * PI);
    let step = phi.zero_spacing() / scale;
    let r_max = cfg.gamma_r_max.max(4.0 * step);
    let n_breaks = (r_max / step).ceil() as usize;
    let r_max = n_breaks as f64 * step;
    let mut breaks: Vec<f64> = (0..=n_breaks).map(|k| k as f64 * step).collect();
    // Refine near r = 0 where the digamma factor varies fastest.
    for extra in [0.25, 0.5, 1.0, 2.0] {
        if extra < step {
            breaks.push(extra);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut fail = None;
    let res = integrate_split(
        |r| match gamma_pm_logderiv_re(sign, r) {
            Ok(g) => phi.phi_re(scale * r) * g,
            Err(e) => {
                fail = Some(e);
                0.0
            }
        },
        &breaks,
        cfg.abs_tol,
        1e-13,
        8 * breaks.len() + 10_000,
    );
    if let Some(e) = fail {
        return Err(e.into());
    }
    if !res.converged {
        return Err(DensityError::QuadratureNonconvergence(format!("archimedean integral, error {:.2e}", res.error)));
    }
    // Tail: for Fejér, phi averages to 1/(2 pi^2 sigma x^2) and the digamma
    // factor is log(r / 2 pi) + O(r^-2); raised cosine decays like x^-3 with
    // mean zero and leaves nothing at this precision.
    let tail = match phi.kind {
        TestKind::Fejer => {
            let c = 2.0 / (phi.sigma * l * l);
            c * (((r_max / (2.0 * PI)).ln() + 1.0) / r_max)
        }
        TestKind::RaisedCosine => 0.0,
    };
    Ok(2.0 / PI * (res.value + tail))
}

/// Weight `log p / p^{e/2} phi_hat(e log p / L)` for every prime power in the support.
pub fn prime_power_weights(l: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<Vec<(u64, u32, f64)>, DensityError> {
    let bound = (l * phi.sigma).exp();
    if bound > cfg.prime_limit {
        return Err(DensityError::SieveTooSmall { needed: bound, cutoff: cfg.prime_limit as u64 });
    }
    let mut out = Vec::new();
    for p in SegmentedSieve::new(bound.floor() as u64) {
        let lp = (p as f64).ln();
        let mut e = 1u32;
        while e as f64 * lp < l * phi.sigma {
            let w = phi.phi_hat(e as f64 * lp / l);
            if w != 0.0 {
                out.push((p, e, lp * (-(e as f64) * lp / 2.0).exp() * w));
            }
            e += 1;
        }
    }
    Ok(out)
}

/// `sum_{p,e} x_p log p p^{-e/2} phi_hat(e log p / L) (theta_e + 1/p)`.
pub fn prime_sum_main(l: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    let mut acc = Kahan::default();
    for (p, e, w) in prime_power_weights(l, phi, cfg)? {
        acc.add(w * x_p(p) * (theta_e(e) as f64 + 1.0 / p as f64));
    }
    Ok(acc.sum)
}

/// `sum_{p,e} log p p^{-e/2} phi_hat(e log p / L) beta_e(p)`.
pub fn prime_sum_secondary(l: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    let mut acc = Kahan::default();
    for (p, e, w) in prime_power_weights(l, phi, cfg)? {
        acc.add(w * beta_e(p, e));
    }
    Ok(acc.sum)
}

/// Explicit-formula value for one field.
pub fn explicit_formula_rhs(rec: &FieldRecord, x: f64, sign: Sign, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    let l = log_conductor(x);
    let gamma = gamma_integral_term(sign, l, phi, cfg)?;
    explicit_formula_with(rec, l, gamma, &prime_power_weights(l, phi, cfg)?, phi)
}

fn explicit_formula_with(rec: &FieldRecord, l: f64, gamma: f64, weights: &[(u64, u32, f64)], phi: &TestFunction) -> Result<f64, DensityError> {
    let mut acc = Kahan::default();
    let mut last = (0u64, crate::asym::SplitType::T5);
    for &(p, e, w) in weights {
        if p != last.0 {
            last = (p, splitting_type(rec, p));
        }
        acc.add(w * a_coeff(last.1, e) as f64);
    }
    Ok(phi.phi_hat(0.0) / l * (rec.disc.abs() as f64).ln() + gamma - 2.0 / l * acc.sum)
}

/// Family average of the explicit formula over `|D| < x`.
pub fn average_density_empirical(slice: &FamilySlice, x: i64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    let n = slice.count(x)?;
    if n == 0 {
        return Err(DensityError::EmptyFamily);
    }
    let l = log_conductor(x as f64);
    let gamma = gamma_integral_term(slice.sign(), l, phi, cfg)?;
    let avg_log = crate::family::average_log_disc(slice, x)?;
    let mut acc = Kahan::default();
    let mut cached: Option<(u64, std::sync::Arc<Vec<crate::asym::SplitType>>)> = None;
    for (p, e, w) in prime_power_weights(l, phi, cfg)? {
        if cached.as_ref().map(|c| c.0) != Some(p) {
            cached = Some((p, slice.types_at(p)));
        }
        let tab = &cached.as_ref().expect("set above").1;
        let sum_a: i64 = tab[..n].iter().map(|&t| a_coeff(t, e)).sum();
        acc.add(w * sum_a as f64 / n as f64);
    }
    Ok(phi.phi_hat(0.0) / l * avg_log + gamma - 2.0 / l * acc.sum)
}

/// The same average taken field by field.
pub fn average_density_fieldwise(records: &[FieldRecord], x: f64, sign: Sign, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    if records.is_empty() {
        return Err(DensityError::EmptyFamily);
    }
    let l = log_conductor(x);
    let gamma = gamma_integral_term(sign, l, phi, cfg)?;
    let weights = prime_power_weights(l, phi, cfg)?;
    let mut acc = Kahan::default();
    for r in records {
        acc.add(explicit_formula_with(r, l, gamma, &weights, phi)?);
    }
    Ok(acc.sum / records.len() as f64)
}

/// A constant `nu_1(n)` or `nu_2(n)` with the bound on its truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub value: f64,
    /// Bound on the neglected part of the R(u) integral beyond the sieve
    /// cutoff, assuming RH (|psi(u) - u| <= sqrt(u) log^2 u / (8 pi)).
    pub tail_bound: f64,
}

/// `nu_1(n)` and `nu_2(n)` for `n = 0..=max_n`, from one sieve pass to U.
#[derive(Debug, Clone, PartialEq)]
pub struct NuTable {
    pub cutoff: u64,
    pub nu1: Vec<NuValue>,
    pub nu2: Vec<NuValue>,
}

/// `int_{t0}^{t0+span} f(t) dt` with a convergence check.
fn tail_integral(f: impl FnMut(f64) -> f64, t0: f64, span: f64) -> Result<f64, DensityError> {
    let breaks: Vec<f64> = (0..=40).map(|k| t0 + span * k as f64 / 40.0).collect();
    let r = integrate_split(f, &breaks, 1e-15, 1e-12, 20_000);
    if !r.converged {
        return Err(DensityError::QuadratureNonconvergence(format!("tail integral, error {:.2e}", r.error)));
    }
    Ok(r.value)
}

fn powi0(x: f64, n: i32) -> f64 {
    if n == 0 {
        1.0
    } else {
        x.powi(n)
    }
}

/// `int t^k e^{t/6} dt`.
fn exp6_moment(k: usize, t: f64) -> f64 {
    let mut s = 0.0;
    let mut coef = 1.0;
    for j in 0..=k {
        s += coef * powi0(t, (k - j) as i32) * 6f64.powi(j as i32 + 1);
        coef *= -((k - j) as f64);
    }
    (t / 6.0).exp() * s
}

impl NuTable {
    pub fn compute(cutoff: u64, max_n: usize) -> Result<NuTable, DensityError> {
        if max_n > 3 {
            return Err(DensityError::OrderTooLarge(max_n));
        }
        if cutoff < 1000 {
            return Err(DensityError::SieveTooSmall { needed: 1000.0, cutoff });
        }
        let m = max_n + 1;
        // Prime-sum parts: summands log p * g(p).
        let g1 = |u: f64, n: usize| -> f64 {
            let lu = u.ln();
            let mut s = 0.0;
            let mut e = 1u32;
            while (e as f64) * lu / 2.0 < 50.0 {
                if e != 2 {
                    s += x_at(u) * powi0(e as f64, n as i32) * (-(e as f64) * lu / 2.0).exp() * (theta_e(e) as f64 + 1.0 / u);
                }
                e += 1;
            }
            let q = 1.0 / u;
            // x(1 + 1/u) - 1 = -q^2 / (1 + q + q^2)
            s += 2f64.powi(n as i32) / u * (-q * q / (1.0 + q + q * q));
            powi0(lu, n as i32) * s
        };
        let g2 = |u: f64, n: usize| -> f64 {
            let lu = u.ln();
            let mut s = 0.0;
            let mut e = 2u32;
            while (e as f64) * lu / 2.0 < 50.0 {
                s += powi0(e as f64, n as i32) * beta_at(u, e) * (-(e as f64) * lu / 2.0).exp();
                e += 1;
            }
            s += beta1_minus_t_at(u) / u.sqrt();
            powi0(lu, n as i32) * s
        };
        // W, V: antiderivatives of w and u w for the two R(u) weights.
        let w1 = |u: f64, n: usize| {
            let lu = u.ln();
            2f64.powi(n as i32) * powi0(lu, n as i32 - 1) * (lu - n as f64) / (u * u)
        };
        let big_w1 = |u: f64, n: usize| -2f64.powi(n as i32) * powi0(u.ln(), n as i32) / u;
        let big_v1 = |u: f64, n: usize| {
            let lu = u.ln();
            2f64.powi(n as i32) * (powi0(lu, n as i32 + 1) / (n as f64 + 1.0) - powi0(lu, n as i32))
        };
        let w2 = |u: f64, n: usize| {
            let lu = u.ln();
            powi0(lu, n as i32 - 1) * (5.0 * lu - 6.0 * n as f64) / (6.0 * u.powf(11.0 / 6.0))
        };
        let big_w2 = |u: f64, n: usize| -powi0(u.ln(), n as i32) * u.powf(-5.0 / 6.0);
        let big_v2 = |u: f64, n: usize| {
            let t = u.ln();
            let a = 5.0 / 6.0 * exp6_moment(n, t);
            if n == 0 {
                a
            } else {
                a - n as f64 * exp6_moment(n - 1, t)
            }
        };

        let mut ps1 = vec![Kahan::default(); m];
        let mut ps2 = vec![Kahan::default(); m];
        let mut sw1 = vec![Kahan::default(); m];
        let mut sw2 = vec![Kahan::default(); m];
        let mut theta = Kahan::default();
        for p in SegmentedSieve::new(cutoff) {
            let u = p as f64;
            let lp = u.ln();
            theta.add(lp);
            for n in 0..m {
                ps1[n].add(lp * g1(u, n));
                ps2[n].add(lp * g2(u, n));
                sw1[n].add(lp * big_w1(u, n));
                sw2[n].add(lp * big_w2(u, n));
            }
        }
        let uc = cutoff as f64;
        let t0 = uc.ln();
        let mut nu1 = Vec::with_capacity(m);
        let mut nu2 = Vec::with_capacity(m);
        for n in 0..m {
            let delta = if n == 0 { 1.0 } else { 0.0 };
            // Continuous tails of the prime sums: sum_{p > U} log p g(p) ~ int_U^inf g.
            let tail1 = tail_integral(|t| g1(t.exp(), n) * t.exp(), t0, 120.0)?;
            let tail2 = tail_integral(|t| g2(t.exp(), n) * t.exp(), t0, 300.0)?;
            let r1 = theta.sum * big_w1(uc, n) - sw1[n].sum - (big_v1(uc, n) - big_v1(1.0, n));
            let r2 = theta.sum * big_w2(uc, n) - sw2[n].sum - (big_v2(uc, n) - big_v2(1.0, n));
            // Beyond U, R(u) = -sqrt(u) + (psi(u) - u) + O(u^{1/3}).
            let bias1 = tail_integral(|t| -w1(t.exp(), n) * (1.5 * t).exp(), t0, 200.0)?;
            let bias2 = tail_integral(|t| -w2(t.exp(), n) * (1.5 * t).exp(), t0, 300.0)?;
            let env = |t: f64| (0.5 * t).exp() * t * t / (8.0 * PI) + 2.0 * (t / 3.0).exp();
            let bound1 = tail_integral(|t| w1(t.exp(), n).abs() * t.exp() * env(t), t0, 200.0)?;
            let bound2 = tail_integral(|t| w2(t.exp(), n).abs() * t.exp() * env(t), t0, 300.0)?;
            nu1.push(NuValue { value: delta + ps1[n].sum + tail1 + r1 + bias1, tail_bound: bound1 });
            nu2.push(NuValue { value: delta + ps2[n].sum + tail2 + r2 + bias2, tail_bound: bound2 });
        }
        Ok(NuTable { cutoff, nu1, nu2 })
    }
}

/// `L phi(0) / 4 + sum_{n <= ell} phi_hat^{(n)}(0) nu_1(n) / (n! L^n)`.
pub fn i1_expansion(x: f64, phi: &TestFunction, ell: usize, nus: &NuTable) -> Result<f64, DensityError> {
    expansion(x, phi, ell, &nus.nu1).map(|v| v + log_conductor(x) * phi.phi_re(0.0) / 4.0)
}

/// `sum_{n <= ell} phi_hat^{(n)}(0) nu_2(n) / (n! L^n)`, the RH correction to `I_2`.
pub fn i2_expansion_correction(x: f64, phi: &TestFunction, ell: usize, nus: &NuTable) -> Result<f64, DensityError> {
    expansion(x, phi, ell, &nus.nu2)
}

fn expansion(x: f64, phi: &TestFunction, ell: usize, nu: &[NuValue]) -> Result<f64, DensityError> {
    if ell > 3 {
        return Err(DensityError::OrderTooLarge(ell));
    }
    if ell >= nu.len() {
        return Err(DensityError::OrderTooLarge(ell));
    }
    let l = log_conductor(x);
    let mut s = 0.0;
    let mut fact = 1.0;
    for (n, v) in nu.iter().enumerate().take(ell + 1) {
        if n > 0 {
            fact *= n as f64;
        }
        s += phi.phi_hat_derivative_at_zero(n) * v.value / (fact * l.powi(n as i32));
    }
    Ok(s)
}

/// `I_1(X; phi)` summed directly.
pub fn i1_direct(x: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    prime_sum_main(log_conductor(x), phi, cfg)
}

/// `I_2(X; phi)` summed directly.
pub fn i2_direct(x: f64, phi: &TestFunction, cfg: &DensityConfig) -> Result<f64, DensityError> {
    prime_sum_secondary(log_conductor(x), phi, cfg)
}

/// `L int_0^sigma phi_hat(u) e^{L u / 6} du`.
pub fn i2_leading(x: f64, phi: &TestFunction) -> Result<f64, DensityError> {
    let l = log_conductor(x);
    let r = integrate(|u| phi.phi_hat(u) * (l * u / 6.0).exp(), 0.0, phi.sigma, 1e-14, 1e-14, 10_000);
    if !r.converged {
        return Err(DensityError::QuadratureNonconvergence("leading I_2 integral".into()));
    }
    Ok(l * r.value)
}

/// Term-by-term decomposition of the predicted family average.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub x: f64,
    pub sign: Sign,
    pub sigma: f64,
    pub l: f64,
    pub main_hat_term: f64,
    pub gamma_integral: f64,
    /// `-(2/L) I_1`.
    pub prime_sum_main: f64,
    /// `-(2 C2 X^{-1/6} / (C1 L)) (1 - (C2/C1) X^{-1/6}) I_2`.
    pub prime_sum_secondary: f64,
    pub j_term: Option<f64>,
    pub total: f64,
    /// Whether `sigma < (1 - theta)/(omega + 1/2)`.
    pub admissible: bool,
}

impl PredictionReport {
    /// Adds the ratios term and updates the total.
    pub fn with_j(mut self, j: f64) -> Self {
        self.j_term = Some(j);
        self.total = self.main_hat_term + self.gamma_integral + self.prime_sum_main + self.prime_sum_secondary + j;
        self
    }

    pub fn terms(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("main_hat_term", self.main_hat_term),
            ("gamma_integral", self.gamma_integral),
            ("prime_sum_main", self.prime_sum_main),
            ("prime_sum_secondary", self.prime_sum_secondary),
        ];
        if let Some(j) = self.j_term {
            v.push(("j_term", j));
        }
        v.push(("total", self.total));
        v
    }
}

/// Largest admissible support for count exponents `(theta, omega)`.
pub fn support_threshold(theta: f64, omega: f64) -> f64 {
    (1.0 - theta) / (omega + 0.5)
}

pub fn theorem_main_prediction(
    x: f64,
    sign: Sign,
    phi: &TestFunction,
    theta: f64,
    omega: f64,
    cfg: &DensityConfig,
) -> Result<PredictionReport, DensityError> {
    let l = log_conductor(x);
    let k = constants(sign);
    let r = k.ratio();
    let x6 = x.powf(-1.0 / 6.0);
    let main_hat_term = phi.phi_hat(0.0)
        * (1.0 + (4.0 * PI * PI * std::f64::consts::E).ln() / l - r / 5.0 * x6 / l + r * r / 5.0 * x6 * x6 / l);
    let gamma_integral = gamma_integral_term(sign, l, phi, cfg)?;
    let pm = -2.0 / l * prime_sum_main(l, phi, cfg)?;
    let ps = -2.0 * r * x6 / l * (1.0 - r * x6) * prime_sum_secondary(l, phi, cfg)?;
    Ok(PredictionReport {
        x,
        sign,
        sigma: phi.sigma,
        l,
        main_hat_term,
        gamma_integral,
        prime_sum_main: pm,
        prime_sum_secondary: ps,
        j_term: None,
        total: main_hat_term + gamma_integral + pm + ps,
        admissible: phi.sigma < support_threshold(theta, omega),
    })
}

pub const DENSITY_HEADER: &str = "X,sign,sigma,term,value";

/// Writes the report terms and, if given, the empirical average.
pub fn write_density_csv(path: &Path, reports: &[(PredictionReport, Option<f64>)]) -> Result<(), DensityError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        writeln!(w, "{DENSITY_HEADER}")?;
        for (rep, emp) in reports {
            for (name, v) in rep.terms() {
                writeln!(w, "{},{},{},{name},{v:.12e}", rep.x, rep.sign, rep.sigma)?;
            }
            if let Some(e) = emp {
                writeln!(w, "{},{},{},empirical,{e:.12e}", rep.x, rep.sign, rep.sigma)?;
            }
        }
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| DensityError::Io(e.error))?;
    Ok(())
}
