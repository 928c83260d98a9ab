//! Euler products over primes with tail acceleration.
//!
//! A local factor is written once, generically over [`LocalCtx`]. Evaluated
//! with [`NumCtx`] it yields the numeric factor at a given prime; evaluated
//! with [`SerCtx`] it yields a formal expansion in monomials `p^{-e}`. The
//! product is taken numerically over `p <= P`, and the tail `p > P` is
//! obtained from the expansion of `log E_p` through exact prime-power tail
//! sums `sum_{p>P} p^{-b}`.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_rational::Ratio;

use crate::numkernel::{zeta, KernelError, C64};
use crate::primes::primes_up_to;

/// Exponent `c + a*alpha + g*gamma` of a monomial `p^{-(...)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    pub c: Ratio<i64>,
    pub a: i32,
    pub g: i32,
}

impl Exponent {
    pub const ZERO: Exponent = Exponent { c: Ratio::new_raw(0, 1), a: 0, g: 0 };

    pub fn new(num: i64, den: i64, a: i32, g: i32) -> Self {
        Exponent { c: Ratio::new(num, den), a, g }
    }

    pub fn value(&self, alpha: C64, gamma: C64) -> C64 {
        let c = *self.c.numer() as f64 / *self.c.denom() as f64;
        C64::new(c, 0.0) + alpha * self.a as f64 + gamma * self.g as f64
    }

    fn plus(&self, o: &Exponent) -> Exponent {
        Exponent { c: self.c + o.c, a: self.a + o.a, g: self.g + o.g }
    }

    /// `k` times the exponent.
    pub fn times(&self, k: i32) -> Exponent {
        Exponent { c: self.c * k as i64, a: self.a * k, g: self.g * k }
    }
}

/// Shorthand: exponent `num/den + a*alpha + g*gamma`.
pub fn ex(num: i64, den: i64, a: i32, g: i32) -> Exponent {
    Exponent::new(num, den, a, g)
}

/// Operations a local factor may use.
pub trait LocalCtx {
    type R: Clone
        + Add<Output = Self::R>
        + Sub<Output = Self::R>
        + Mul<Output = Self::R>
        + Div<Output = Self::R>
        + Neg<Output = Self::R>;
    fn cst(&self, v: f64) -> Self::R;
    /// `p^{-e}`.
    fn pw(&self, e: Exponent) -> Self::R;
    /// The prime itself, when the factor needs a special case at small p.
    fn prime(&self) -> Option<u64>;
}

#[derive(Debug, Clone, Copy)]
pub struct NumCtx {
    pub p: u64,
    pub lnp: f64,
    pub alpha: C64,
    pub gamma: C64,
}

impl LocalCtx for NumCtx {
    type R = C64;
    fn cst(&self, v: f64) -> C64 {
        C64::new(v, 0.0)
    }
    fn pw(&self, e: Exponent) -> C64 {
        (-e.value(self.alpha, self.gamma) * self.lnp).exp()
    }
    fn prime(&self) -> Option<u64> {
        Some(self.p)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SerCtx {
    pub alpha: C64,
    pub gamma: C64,
    /// Monomials whose exponent has real part above this are dropped.
    pub cutoff: f64,
}

impl LocalCtx for SerCtx {
    type R = Series;
    fn cst(&self, v: f64) -> Series {
        Series::constant(*self, C64::new(v, 0.0))
    }
    fn pw(&self, e: Exponent) -> Series {
        let mut s = Series::zero(*self);
        s.push(e, C64::new(1.0, 0.0));
        s
    }
    fn prime(&self) -> Option<u64> {
        None
    }
}

/// Truncated formal sum of monomials `coef * p^{-e}`.
#[derive(Debug, Clone)]
pub struct Series {
    pub ctx: SerCtx,
    pub terms: BTreeMap<Exponent, C64>,
}

impl Series {
    pub fn zero(ctx: SerCtx) -> Self {
        Series { ctx, terms: BTreeMap::new() }
    }

    pub fn constant(ctx: SerCtx, v: C64) -> Self {
        let mut s = Series::zero(ctx);
        s.push(Exponent::ZERO, v);
        s
    }

    fn re_of(&self, e: &Exponent) -> f64 {
        e.value(self.ctx.alpha, self.ctx.gamma).re
    }

    fn push(&mut self, e: Exponent, v: C64) {
        if self.re_of(&e) > self.ctx.cutoff || v == C64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(e).or_insert(C64::new(0.0, 0.0)) += v;
    }

    pub fn constant_term(&self) -> C64 {
        self.terms.get(&Exponent::ZERO).copied().unwrap_or_default()
    }

    fn without_constant(&self) -> Series {
        let mut r = self.clone();
        r.terms.remove(&Exponent::ZERO);
        r
    }

    fn scale(&self, k: C64) -> Series {
        let mut r = self.clone();
        for v in r.terms.values_mut() {
            *v *= k;
        }
        r
    }

    fn min_re(&self) -> f64 {
        self.terms.keys().map(|e| self.re_of(e)).fold(f64::INFINITY, f64::min)
    }

    /// `1/self`, requiring a nonzero constant term and all other exponents
    /// with positive real part.
    pub fn inverse(&self) -> Series {
        let b0 = self.constant_term();
        assert!(b0.norm() > 0.0, "series inverse needs a nonzero constant term");
        let rest = self.without_constant().scale(-1.0 / b0);
        assert!(rest.terms.is_empty() || rest.min_re() > 0.0, "series inverse needs positive exponents");
        let mut acc = Series::constant(self.ctx, C64::new(1.0, 0.0));
        let mut power = acc.clone();
        loop {
            power = power * rest.clone();
            if power.terms.is_empty() {
                break;
            }
            acc = acc + power.clone();
        }
        acc.scale(1.0 / b0)
    }

    /// `log(self)` for a series with constant term 1.
    pub fn log(&self) -> Result<Series, KernelError> {
        let b0 = self.constant_term();
        if (b0 - 1.0).norm() > 1e-9 {
            return Err(KernelError::NonFinite);
        }
        let r = self.without_constant().scale(1.0 / b0);
        let mut acc = Series::zero(self.ctx);
        let mut power = Series::constant(self.ctx, C64::new(1.0, 0.0));
        let mut k = 1.0;
        loop {
            power = power * r.clone();
            if power.terms.is_empty() {
                break;
            }
            let sign = if (k as i64) % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc + power.scale(C64::new(sign / k, 0.0));
            k += 1.0;
        }
        Ok(acc)
    }
}

impl Add for Series {
    type Output = Series;
    fn add(mut self, o: Series) -> Series {
        for (e, v) in o.terms {
            self.push(e, v);
        }
        self
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        self + (-o)
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        let mut r = Series::zero(self.ctx);
        for (e1, v1) in &self.terms {
            for (e2, v2) in &o.terms {
                r.push(e1.plus(e2), v1 * v2);
            }
        }
        r
    }
}

impl Div for Series {
    type Output = Series;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Series) -> Series {
        self * o.inverse()
    }
}

/// A local factor `E_p(alpha, gamma)` of an Euler product.
pub trait LocalFactor {
    fn eval<C: LocalCtx>(&self, ctx: &C) -> C::R;
}

#[derive(Debug, Clone, Copy)]
pub struct EulerConfig {
    /// Primes up to this bound are multiplied directly.
    pub p_max: u64,
    /// Real-part cutoff for the tail expansion.
    pub cutoff: f64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        EulerConfig { p_max: 100_000, cutoff: 3.2 }
    }
}

const PRIME_TABLE_BOUND: u64 = 2_000_000;

pub fn prime_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(PRIME_TABLE_BOUND))
}

fn primes_to(p_max: u64) -> &'static [u64] {
    assert!(p_max <= PRIME_TABLE_BOUND, "p_max above the prime table bound");
    let t = prime_table();
    let n = t.partition_point(|&p| p <= p_max);
    &t[..n]
}

/// `sum_{p > P} p^{-b}` for `Re b > 1`, via
/// `log(zeta(b) prod_{p<=P}(1 - p^{-b})) = sum_{k>=1} T(kb)/k`.
pub fn prime_tail(b: C64, p_max: u64) -> Result<C64, KernelError> {
    if b.re <= 1.0 {
        return Err(KernelError::OutOfDomain(b.re));
    }
    let lp = (p_max as f64).ln();
    let bound = (p_max as f64).powf(1.0 - b.re) / ((b.re - 1.0) * lp);
    if bound < 1e-19 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut log_partial = C64::new(0.0, 0.0);
    for &p in primes_to(p_max) {
        let x = (-b * (p as f64).ln()).exp();
        log_partial += (C64::new(1.0, 0.0) - x).ln();
    }
    let z = zeta(b)?;
    let mut t = (z.ln() + log_partial).ln_exp_principal();
    let mut k = 2.0;
    loop {
        let kb = b * k;
        let bk = (p_max as f64).powf(1.0 - kb.re) / ((kb.re - 1.0) * lp);
        if bk < 1e-19 {
            break;
        }
        t -= prime_tail(kb, p_max)? / k;
        k += 1.0;
    }
    Ok(t)
}

trait PrincipalLog {
    fn ln_exp_principal(self) -> C64;
}

impl PrincipalLog for C64 {
    /// Reduces the imaginary part to (-pi, pi]: the tail sum is small.
    fn ln_exp_principal(self) -> C64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut im = self.im % two_pi;
        if im > std::f64::consts::PI {
            im -= two_pi;
        } else if im <= -std::f64::consts::PI {
            im += two_pi;
        }
        C64::new(self.re, im)
    }
}

/// `prod_p E_p(alpha, gamma)` with the tail beyond `cfg.p_max` summed from
/// the expansion of `log E_p`. Every monomial of that expansion must have
/// exponent with real part above 1, otherwise the product does not converge
/// absolutely and an error is returned.
pub fn euler_product<F: LocalFactor>(
    factor: &F,
    alpha: C64,
    gamma: C64,
    cfg: &EulerConfig,
) -> Result<C64, KernelError> {
    let mut log_sum = C64::new(0.0, 0.0);
    for &p in primes_to(cfg.p_max) {
        let ctx = NumCtx { p, lnp: (p as f64).ln(), alpha, gamma };
        let v = factor.eval(&ctx);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        if v.norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        log_sum += v.ln();
    }
    log_sum += euler_tail(factor, alpha, gamma, cfg)?;
    Ok(log_sum.exp())
}

/// `sum_{p > P} log E_p`.
pub fn euler_tail<F: LocalFactor>(
    factor: &F,
    alpha: C64,
    gamma: C64,
    cfg: &EulerConfig,
) -> Result<C64, KernelError> {
    let sctx = SerCtx { alpha, gamma, cutoff: cfg.cutoff };
    let logs = factor.eval(&sctx).log()?;
    let mut tail = C64::new(0.0, 0.0);
    for (e, coef) in &logs.terms {
        let b = e.value(alpha, gamma);
        if coef.norm() < 1e-11 {
            continue;
        }
        if b.re <= 1.0 {
            return Err(KernelError::GuardViolation(b.re));
        }
        tail += coef * prime_tail(b, cfg.p_max)?;
    }
    Ok(tail)
}

/// Expansion of `log E_p`, exposed for diagnostics and tests.
pub fn log_expansion<F: LocalFactor>(factor: &F, alpha: C64, gamma: C64, cutoff: f64) -> Result<Series, KernelError> {
    factor.eval(&SerCtx { alpha, gamma, cutoff }).log()
}

/// Evaluates a truncated expansion at a given prime.
pub fn eval_series_at(s: &Series, p: u64) -> C64 {
    let lnp = (p as f64).ln();
    s.terms
        .iter()
        .map(|(e, v)| v * (-e.value(s.ctx.alpha, s.ctx.gamma) * lnp).exp())
        .sum()
}

/// `E_1(z)` for `Re z > 0`, `|z| >= 1`, by its continued fraction.
pub fn exp_integral_e1(z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = C64::new(1.0 / tiny, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = one / (d * a + b);
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `sum_{p>P} p^{-b}` replaced by `int_P^inf u^{-b} du / log u = E_1((b-1) log P)`.
/// Accurate to about `|b| P^{1/2 - Re b}`; used where speed matters more.
pub fn prime_tail_smooth(b: C64, p_max: u64) -> C64 {
    let lp = (p_max as f64).ln();
    let z = (b - 1.0) * lp;
    if z.re > 700.0 {
        return C64::new(0.0, 0.0);
    }
    exp_integral_e1(z)
}

/// An Euler product prepared for many evaluations along a vertical line.
///
/// The monomials of `log E_p` with real part at most `extract_below` and an
/// integer coefficient `n` are pulled out as `zeta(b)^n`. The rest of the
/// product is multiplied directly over `p <= P`, and its tail is the smooth
/// approximation [`prime_tail_smooth`] of the remaining monomials.
#[derive(Debug, Clone)]
pub struct PreparedProduct {
    zetas: Vec<(Exponent, i32)>,
    residual: Vec<(Exponent, C64)>,
    primes: &'static [u64],
    p_max: u64,
    re_alpha: f64,
    re_gamma: f64,
}

impl PreparedProduct {
    pub fn new<F: LocalFactor>(
        factor: &F,
        alpha: C64,
        gamma: C64,
        p_max: u64,
        extract_below: f64,
        cutoff: f64,
    ) -> Result<Self, KernelError> {
        let sctx = SerCtx { alpha, gamma, cutoff };
        let mut logs = factor.eval(&sctx).log()?;
        let re = |e: &Exponent| e.value(alpha, gamma).re;
        let mut zetas = Vec::new();
        loop {
            let next = logs
                .terms
                .iter()
                .filter(|(e, c)| c.norm() > 1e-12 && re(e) <= extract_below)
                .filter(|(_, c)| (c.re - c.re.round()).abs() < 1e-9 && c.im.abs() < 1e-9)
                .min_by(|a, b| re(a.0).total_cmp(&re(b.0)))
                .map(|(e, c)| (*e, c.re.round() as i32));
            let Some((e, n)) = next else { break };
            zetas.push((e, n));
            // log zeta(b)^n = n sum_k p^{-kb} / k
            let mut k = 1;
            while re(&e) * k as f64 <= cutoff {
                let mut term = Series::zero(sctx);
                term.push(e.times(k), C64::new(-(n as f64) / k as f64, 0.0));
                logs = logs + term;
                k += 1;
            }
        }
        let residual: Vec<(Exponent, C64)> = logs.terms.into_iter().filter(|(_, c)| c.norm() > 1e-12).collect();
        if let Some((e, _)) = residual.iter().find(|(e, _)| re(e) <= 1.0) {
            return Err(KernelError::GuardViolation(re(e)));
        }
        Ok(PreparedProduct { zetas, residual, primes: primes_to(p_max), p_max, re_alpha: alpha.re, re_gamma: gamma.re })
    }

    /// Extracted factors `(b, n)` meaning `zeta(b)^n`.
    pub fn zeta_factors(&self) -> &[(Exponent, i32)] {
        &self.zetas
    }

    /// Evaluates at shifts with the same real parts as at preparation.
    pub fn eval<F: LocalFactor>(&self, factor: &F, alpha: C64, gamma: C64) -> Result<C64, KernelError> {
        if (alpha.re - self.re_alpha).abs() > 1e-12 || (gamma.re - self.re_gamma).abs() > 1e-12 {
            return Err(KernelError::OutOfDomain(alpha.re));
        }
        let one = C64::new(1.0, 0.0);
        let mut log_sum = C64::new(0.0, 0.0);
        for &p in self.primes {
            let ctx = NumCtx { p, lnp: (p as f64).ln(), alpha, gamma };
            let mut v = factor.eval(&ctx);
            for (e, n) in &self.zetas {
                v *= (one - ctx.pw(*e)).powi(*n);
            }
            if !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0 {
                return Err(KernelError::NonFinite);
            }
            log_sum += v.ln();
        }
        for (e, c) in &self.residual {
            log_sum += c * prime_tail_smooth(e.value(alpha, gamma), self.p_max);
        }
        let mut out = log_sum.exp();
        for (e, n) in &self.zetas {
            out *= zeta(e.value(alpha, gamma))?.powi(*n);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct InvZeta(Exponent);
    impl LocalFactor for InvZeta {
        fn eval<C: LocalCtx>(&self, ctx: &C) -> C::R {
            ctx.cst(1.0) - ctx.pw(self.0)
        }
    }

    #[test]
    fn reciprocal_zeta_product() {
        let cfg = EulerConfig { p_max: 10_000, cutoff: 4.0 };
        let zero = C64::new(0.0, 0.0);
        let v = euler_product(&InvZeta(ex(2, 1, 0, 0)), zero, zero, &cfg).unwrap();
        assert!((v - 6.0 / std::f64::consts::PI.powi(2)).norm() < 1e-13);
        let s = C64::new(0.3, 2.0);
        let v = euler_product(&InvZeta(ex(3, 2, 0, 1)), zero, s, &cfg).unwrap();
        let want = 1.0 / zeta(C64::new(1.5, 0.0) + s).unwrap();
        assert!((v - want).norm() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn prime_tail_matches_direct_sum() {
        let b = C64::new(2.5, 1.0);
        let t10 = prime_tail(b, 10).unwrap();
        let t1000 = prime_tail(b, 1000).unwrap();
        let direct: C64 = primes_up_to(1000)
            .into_iter()
            .filter(|&p| p > 10)
            .map(|p| (-b * (p as f64).ln()).exp())
            .sum();
        assert!((t10 - t1000 - direct).norm() < 1e-14);
    }

    #[test]
    fn e1_continued_fraction() {
        // E_1(1) and E_1(5) to 15 digits
        assert!((exp_integral_e1(C64::new(1.0, 0.0)).re - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert!((exp_integral_e1(C64::new(5.0, 0.0)).re - 1.148_295_591_275_325_9e-3).abs() < 1e-17);
    }

    #[test]
    fn prepared_product_extracts_zeta() {
        // prod (1 - p^{-2}) / (1 - p^{-(1.2 + gamma)}) = zeta(1.2 + gamma) / zeta(2)
        struct Q;
        impl LocalFactor for Q {
            fn eval<C: LocalCtx>(&self, ctx: &C) -> C::R {
                (ctx.cst(1.0) - ctx.pw(ex(2, 1, 0, 0))) / (ctx.cst(1.0) - ctx.pw(ex(6, 5, 0, 1)))
            }
        }
        let zero = C64::new(0.0, 0.0);
        let g = C64::new(0.0, 3.0);
        let prep = PreparedProduct::new(&Q, zero, g, 10_000, 2.5, 4.0).unwrap();
        assert_eq!(prep.zeta_factors().len(), 2);
        let v = prep.eval(&Q, zero, g).unwrap();
        let want = zeta(C64::new(1.2, 3.0)).unwrap() / zeta(C64::new(2.0, 0.0)).unwrap();
        assert!((v - want).norm() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn series_inverse_and_log_roundtrip() {
        let ctx = SerCtx { alpha: C64::new(0.1, 0.0), gamma: C64::new(0.0, 0.0), cutoff: 6.0 };
        let x = ctx.cst(1.0) - ctx.pw(ex(1, 2, 1, 0));
        let y = x.clone() * x.inverse();
        assert!((y.constant_term() - 1.0).norm() < 1e-15);
        let stray = y.terms.iter().filter(|(e, _)| **e != Exponent::ZERO).map(|(_, v)| v.norm()).fold(0.0, f64::max);
        assert!(stray < 1e-15);
        let l = (ctx.cst(1.0) / x).log().unwrap();
        let at = eval_series_at(&l, 1_000_003);
        let direct = -(1.0 - (-(0.6f64) * (1_000_003f64).ln()).exp()).ln();
        assert!((at.re - direct).abs() < 1e-16);
    }
}
