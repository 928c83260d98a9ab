//! Ratios-side analytic terms: the Euler products R_1^M, R_1^S, A_3, A_4,
//! the diagonal continuations A_3(-s,s) and A_4(-s,s), their behaviour at
//! s = 1/6, the constant C, the transition term J(X), the shifted
//! log-derivative average and the resulting density prediction.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::asym::{beta_at, constants, theta_e, x_at};
use crate::density::{
    log_conductor, prime_power_weights, theorem_main_prediction, DensityConfig, DensityError, PredictionReport,
    TestFunction,
};
use crate::euler::{euler_product, ex, EulerConfig, LocalCtx, LocalFactor, PreparedProduct};
use crate::numkernel::{gamma_pm, gamma_pm_ratio, zeta, zeta_log_derivative, zeta_re, KernelError, C64};
use crate::quad::{gauss_legendre, integrate};
use crate::Sign;

#[derive(Debug, Error)]
pub enum RatiosError {
    #[error("argument outside the domain: {0}")]
    DomainViolation(String),
    #[error("s = {0} is too close to the pole at 1/6")]
    PoleProximity(C64),
    #[error("Euler product not absolutely convergent: monomial with real part {0}")]
    SlowConvergence(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),
    #[error(transparent)]
    Kernel(KernelError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<KernelError> for RatiosError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::GuardViolation(re) => RatiosError::SlowConvergence(re),
            other => RatiosError::Kernel(other),
        }
    }
}

type Result<T> = std::result::Result<T, RatiosError>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// Local factors. Two-variable factors use the exponent slots as (alpha,
// gamma); one-variable factors put s in the alpha slot.

/// Local factor of `R_1^M(alpha, gamma)`, summed in closed form over e.
#[derive(Debug, Clone, Copy)]
pub struct R1MFactor;

impl LocalFactor for R1MFactor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        let u = k.pw(ex(1, 2, 1, 0));
        let v = k.pw(ex(1, 2, 0, 1));
        let w = k.pw(ex(1, 1, 0, 0));
        let om = one.clone() - u.clone();
        let mv = one.clone() - v.clone();
        let s = mv.clone() * mv.clone() / (k.cst(6.0) * om.clone() * om.clone())
            + (one.clone() - v.clone() * v.clone()) / (k.cst(2.0) * (one.clone() - u.clone() * u.clone()))
            + (one.clone() + v.clone() + v.clone() * v.clone())
                / (k.cst(3.0) * (one.clone() + u.clone() + u.clone() * u))
            + w.clone() * mv / om;
        let xp = one.clone() / (one + w.clone() + w.clone() * w.clone());
        xp * (w.clone() * w + s)
    }
}

/// Local factor of `R_1^S(alpha, gamma)`.
#[derive(Debug, Clone, Copy)]
pub struct R1SFactor;

impl LocalFactor for R1SFactor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        let u = k.pw(ex(1, 2, 1, 0));
        let v = k.pw(ex(1, 2, 0, 1));
        let w = k.pw(ex(1, 1, 0, 0));
        let t = k.pw(ex(1, 3, 0, 0));
        let t1 = one.clone() + t.clone();
        let om = one.clone() - u.clone();
        let mv = one.clone() - v.clone();
        let b = t1.clone() * t1.clone() * t1.clone() * mv.clone() * mv.clone() / (k.cst(6.0) * om.clone() * om.clone())
            + t1.clone() * (one.clone() + t.clone() * t.clone()) * (one.clone() - v.clone() * v.clone())
                / (k.cst(2.0) * (one.clone() - u.clone() * u.clone()))
            + (one.clone() + w.clone()) * (one.clone() + v.clone() + v.clone() * v)
                / (k.cst(3.0) * (one.clone() + u.clone() + u.clone() * u))
            + t1.clone() * t1.clone() * w.clone() * mv / om
            + t1 * w.clone() * w.clone();
        let yp = (one.clone() - t) / ((one.clone() - k.pw(ex(5, 3, 0, 0))) * (one + w));
        yp * b
    }
}

/// `(1 - p^{-(1+2a)}) / (1 - p^{-(1+a+g)}) R_1^M`.
#[derive(Debug, Clone, Copy)]
pub struct A3Factor;

impl LocalFactor for A3Factor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        (one.clone() - k.pw(ex(1, 1, 2, 0))) / (one - k.pw(ex(1, 1, 1, 1))) * R1MFactor.eval(k)
    }
}

/// `(1 - p^{-(5/6+a)})(1 - p^{-(1+2a)}) / ((1 - p^{-(5/6+g)})(1 - p^{-(1+a+g)})) R_1^S`.
#[derive(Debug, Clone, Copy)]
pub struct A4Factor;

impl LocalFactor for A4Factor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        (one.clone() - k.pw(ex(5, 6, 1, 0))) * (one.clone() - k.pw(ex(1, 1, 2, 0)))
            / ((one.clone() - k.pw(ex(5, 6, 0, 1))) * (one - k.pw(ex(1, 1, 1, 1))))
            * R1SFactor.eval(k)
    }
}

/// `p^{-(num/den + k s)}` with s in the alpha slot.
fn ps<C: LocalCtx>(k: &C, num: i64, den: i64, ks: i32) -> C::R {
    k.pw(ex(num, den, ks, 0))
}

/// Local factor of the product form of `A_3(-s,s)`.
#[derive(Debug, Clone, Copy)]
pub struct A3DiagFactor;

impl LocalFactor for A3DiagFactor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        k.cst(1.0) - ps(k, 3, 2, 1) + ps(k, 5, 2, -1) - ps(k, 5, 2, -3) - ps(k, 3, 1, -4) + ps(k, 9, 2, -5)
    }
}

/// Pieces shared by the continuation of `A_4(-s,s)`.
struct A4Pieces<R> {
    q: R,
    d: R,
    p3: R,
    a41: R,
    a42: R,
    a43: R,
}

fn a4_pieces<C: LocalCtx>(k: &C) -> A4Pieces<C::R> {
    let one = k.cst(1.0);
    let w = k.pw(ex(1, 1, 0, 0));
    let t = k.pw(ex(1, 3, 0, 0));
    let t2 = k.pw(ex(2, 3, 0, 0));
    let p43 = k.pw(ex(4, 3, 0, 0));
    let x = ps(k, 5, 6, -1);
    let y = ps(k, 5, 6, 1);
    let z = ps(k, 4, 3, -2);
    let v = ps(k, 1, 2, 1);
    let u = ps(k, 1, 2, -1);
    let v2 = ps(k, 1, 1, 2);
    let u2 = ps(k, 1, 1, -2);
    let q = (one.clone() - x.clone()) / (one.clone() - y.clone());
    let mv = one.clone() - v.clone();
    let sq = mv.clone() * mv.clone() * (one.clone() + u.clone()) / (one.clone() - u.clone());
    let tri = (one.clone() + v.clone() + v2.clone()) * (one.clone() - u2.clone())
        / (one.clone() + u.clone() + u2.clone());
    let a41 = q.clone()
        * (-(sq.clone() * p43.clone()) / k.cst(6.0) - (one.clone() - v2) * p43.clone() / k.cst(2.0)
            - tri.clone() * p43 / k.cst(3.0)
            + ((one.clone() + t - t2.clone() - w.clone()) * mv * (one.clone() + u) - one.clone()) * w.clone()
            + w.clone() * w.clone() * (one.clone() - t2) * (one.clone() - u2));
    let a42 = q.clone() * w.clone() * (-sq / k.cst(3.0) + tri / k.cst(3.0) + one.clone()) - w;
    let a43 = -ps(k, 3, 2, -1) + ps(k, 5, 2, -1) - k.pw(ex(4, 3, 0, 0)) + ps(k, 11, 6, 1) - ps(k, 11, 6, -1)
        + k.pw(ex(7, 3, 0, 0))
        - ps(k, 7, 3, -2);
    let d = one.clone() - y + x + z;
    A4Pieces { q, d, p3: ps(k, 3, 2, -3), a41, a42, a43 }
}

/// The absolutely convergent local factor of `A~_4(s)`.
#[derive(Debug, Clone, Copy)]
pub struct A4TildeFactor;

impl LocalFactor for A4TildeFactor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        let w = k.pw(ex(1, 1, 0, 0));
        let A4Pieces { q, d, p3, a41, a42, a43 } = a4_pieces(k);
        let mp3 = one.clone() - p3;
        let num = w * (mp3.clone() - q.clone()) + q.clone() * a43 + mp3 * (a42 + a41);
        one + num / (q * d)
    }
}

/// Local factor of `A_{4,4}(s)`: `D_3` with its divergent zeta factors removed.
#[derive(Debug, Clone, Copy)]
pub struct A44Factor;

impl LocalFactor for A44Factor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        let one_minus = |num: i64, den: i64, ks: i32| one.clone() - ps(k, num, den, ks);
        let A4Pieces { q, d, .. } = a4_pieces(k);
        q * d * one_minus(4, 3, -2) * one_minus(13, 6, -1)
            / (one_minus(8, 3, -4) * one_minus(5, 3, -2) * one_minus(13, 6, -3))
    }
}

/// Local factor of the product in the constant C and the double-pole limit.
#[derive(Debug, Clone, Copy)]
pub struct PoleProductFactor;

impl LocalFactor for PoleProductFactor {
    fn eval<C: LocalCtx>(&self, k: &C) -> C::R {
        let one = k.cst(1.0);
        let t2 = k.pw(ex(2, 3, 0, 0));
        let w = k.pw(ex(1, 1, 0, 0));
        let m = one.clone() - t2.clone();
        m.clone() * m * (one.clone() - w.clone()) * (one + k.cst(2.0) * t2 + w + k.pw(ex(4, 3, 0, 0)))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RatiosConfig {
    pub euler: EulerConfig,
}

impl Default for RatiosConfig {
    fn default() -> Self {
        RatiosConfig { euler: EulerConfig::default() }
    }
}

fn zeta_at(s: C64) -> Result<C64> {
    Ok(zeta(s)?)
}

fn check_shift(name: &str, v: C64, lower: f64) -> Result<()> {
    if !(v.re > lower) || !v.im.is_finite() {
        return Err(RatiosError::DomainViolation(format!("Re {name} = {} must exceed {lower}", v.re)));
    }
    Ok(())
}

/// `R_1^M(alpha, gamma)` as a direct product; needs `Re alpha, Re gamma > 1/2`.
pub fn r1m(alpha: C64, gamma: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_shift("alpha", alpha, 0.5)?;
    check_shift("gamma", gamma, 0.5)?;
    Ok(euler_product(&R1MFactor, alpha, gamma, &cfg.euler)?)
}

/// `R_1^S(alpha, gamma)` as a direct product; needs `Re alpha, Re gamma > 1/2`.
pub fn r1s(alpha: C64, gamma: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_shift("alpha", alpha, 0.5)?;
    check_shift("gamma", gamma, 0.5)?;
    Ok(euler_product(&R1SFactor, alpha, gamma, &cfg.euler)?)
}

const SHIFT_FLOOR: f64 = -1.0 / 6.0 + 1e-3;

/// `A_3(alpha, gamma) = zeta(1+a+g)/zeta(1+2a) R_1^M(alpha, gamma)`.
pub fn a3(alpha: C64, gamma: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_shift("alpha", alpha, SHIFT_FLOOR)?;
    check_shift("gamma", gamma, SHIFT_FLOOR)?;
    Ok(euler_product(&A3Factor, alpha, gamma, &cfg.euler)?)
}

/// `A_4(alpha, gamma) = zeta(5/6+g) zeta(1+a+g) / (zeta(5/6+a) zeta(1+2a)) R_1^S(alpha, gamma)`.
pub fn a4(alpha: C64, gamma: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_shift("alpha", alpha, SHIFT_FLOOR)?;
    check_shift("gamma", gamma, SHIFT_FLOOR)?;
    Ok(euler_product(&A4Factor, alpha, gamma, &cfg.euler)?)
}

fn check_diag(s: C64, pole_gap: f64) -> Result<()> {
    if !(s.re.abs() < 0.5 - 1e-3) || !s.im.is_finite() {
        return Err(RatiosError::DomainViolation(format!("|Re s| = {} must be below 1/2", s.re.abs())));
    }
    if (s - 1.0 / 6.0).norm() < pole_gap {
        return Err(RatiosError::PoleProximity(s));
    }
    Ok(())
}

/// `zeta(3) zeta(3/2 - 3s)`, the zeta part of the product form of `A_3(-s,s)`.
fn a3_diag_zetas(s: C64) -> Result<C64> {
    Ok(zeta_at(c(3.0))? * zeta_at(c(1.5) - s * 3.0)?)
}

/// `zeta(2) zeta(5/3) zeta(3/2-3s) zeta(4/3-2s) zeta(13/6-s) / (zeta(8/3-4s) zeta(5/3-2s) zeta(13/6-3s))`.
fn a4_diag_zetas(s: C64) -> Result<C64> {
    let z = |a: f64, k: f64| zeta_at(c(a) - s * k);
    let num = zeta_at(c(2.0))? * zeta_at(c(5.0 / 3.0))? * z(1.5, 3.0)? * z(4.0 / 3.0, 2.0)? * z(13.0 / 6.0, 1.0)?;
    let den = z(8.0 / 3.0, 4.0)? * z(5.0 / 3.0, 2.0)? * z(13.0 / 6.0, 3.0)?;
    Ok(num / den)
}

/// `A_3(-s,s)` on `|Re s| < 1/2` through its product form.
pub fn a3_diag(s: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_diag(s, 1e-8)?;
    Ok(a3_diag_zetas(s)? * euler_product(&A3DiagFactor, s, c(0.0), &cfg.euler)?)
}

/// `A_4(-s,s)` on `|Re s| < 1/2` as `zeta(2) zeta(5/3) zeta(3/2-3s) A~_4(s) D_3(s)`,
/// with `D_3` written through `A_{4,4}` and five zeta factors.
pub fn a4_diag(s: C64, cfg: &RatiosConfig) -> Result<C64> {
    check_diag(s, 1e-6)?;
    let zero = c(0.0);
    let tilde = euler_product(&A4TildeFactor, s, zero, &cfg.euler)?;
    let a44 = euler_product(&A44Factor, s, zero, &cfg.euler)?;
    Ok(a4_diag_zetas(s)? * tilde * a44)
}

/// `-zeta(3) / (3 zeta(5/3) zeta(2))`, the residue of `A_3(-s,s)` at 1/6.
pub fn a3_residue_closed_form() -> f64 {
    -zeta_re(3.0) / (3.0 * zeta_re(5.0 / 3.0) * zeta_re(2.0))
}

/// Two-point Richardson estimate of `lim (s - 1/6)^m f(s)` from `s = 1/6 + h`
/// and `s = 1/6 + h/10`, assuming an expansion in integer powers of h.
fn richardson_limit<F: Fn(C64) -> Result<C64>>(f: F, m: i32, h: f64) -> Result<f64> {
    let g = |hh: f64| -> Result<f64> { Ok((f(c(1.0 / 6.0 + hh))? * hh.powi(m)).re) };
    let coarse = g(h)?;
    let fine = g(h / 10.0)?;
    Ok((10.0 * fine - coarse) / 9.0)
}

/// `lim (s - 1/6) A_3(-s,s)` by Richardson extrapolation from step h.
pub fn a3_residue_richardson(h: f64, cfg: &RatiosConfig) -> Result<f64> {
    richardson_limit(|s| a3_diag(s, cfg), 1, h)
}

/// `lim (s - 1/6)^2 A_4(-s,s)` by Richardson extrapolation from step h.
pub fn a4_double_pole_richardson(h: f64, cfg: &RatiosConfig) -> Result<f64> {
    richardson_limit(|s| a4_diag(s, cfg), 2, h)
}

/// `prod_p (1 - p^{-2/3})^2 (1 - 1/p)(1 + 2p^{-2/3} + 1/p + p^{-4/3})`.
pub fn pole_product(cfg: &RatiosConfig) -> Result<f64> {
    Ok(euler_product(&PoleProductFactor, c(0.0), c(0.0), &cfg.euler)?.re)
}

/// Closed form of `lim (s - 1/6)^2 A_4(-s,s)`.
pub fn a4_double_pole_limit(cfg: &RatiosConfig) -> Result<f64> {
    Ok(zeta_re(2.0) * zeta_re(5.0 / 3.0) / (6.0 * zeta_re(4.0 / 3.0)) * pole_product(cfg)?)
}

/// `Gamma_±(1/3) / Gamma_±(2/3)`.
pub fn gamma_third_ratio(sign: Sign) -> Result<f64> {
    Ok((gamma_pm(sign, c(1.0 / 3.0))? / gamma_pm(sign, c(2.0 / 3.0))?).re)
}

/// The constant `C^±` of the transition term.
pub fn c_pm(sign: Sign, cfg: &RatiosConfig) -> Result<f64> {
    let r = constants(sign).ratio();
    let z23 = zeta_re(2.0 / 3.0);
    Ok(5.0 / 12.0 * r * gamma_third_ratio(sign)? * z23 * z23 * zeta_re(5.0 / 3.0) * zeta_re(2.0)
        / zeta_re(4.0 / 3.0)
        * pole_product(cfg)?)
}

/// `int phi_hat(xi) (X/(2 pi e)^2)^{xi/6} d xi`.
pub fn exponential_moment(x: f64, phi: &TestFunction) -> Result<f64> {
    let l = log_conductor(x);
    let s = phi.sigma;
    let r = integrate(|xi| phi.phi_hat(xi) * (l * xi / 6.0).exp(), -s, s, 0.0, 1e-13, 2000);
    if !r.converged {
        return Err(RatiosError::QuadratureNonconvergence("exponential moment".into()));
    }
    Ok(r.value)
}

/// `C^± X^{-1/3} int phi_hat(xi) (X/(2 pi e)^2)^{xi/6} d xi`, for support below 1.
pub fn j_asymptotic(x: f64, sign: Sign, phi: &TestFunction, cfg: &RatiosConfig) -> Result<f64> {
    if !(phi.sigma < 1.0) {
        return Err(RatiosError::DomainViolation(format!("support {} must be below 1", phi.sigma)));
    }
    Ok(c_pm(sign, cfg)? * x.powf(-1.0 / 3.0) * exponential_moment(x, phi)?)
}

/// Twice the residue at `s = 1/6` of the `A_4`-line integrand, kept in full:
/// `C (1-k) X^{-1/3} phi(L/(12 pi i)) + (12/5) k^2 X^{-1/6} G(1/6) zeta(2/3) Res A_3 phi(L/(12 pi i))`
/// with `k = (C2/C1) X^{-1/6}`. Its leading part is [`j_asymptotic`].
pub fn j_residue(x: f64, sign: Sign, phi: &TestFunction, cfg: &RatiosConfig) -> Result<f64> {
    let k = constants(sign).ratio() * x.powf(-1.0 / 6.0);
    let moment = exponential_moment(x, phi)?;
    let main = c_pm(sign, cfg)? * (1.0 - k) * x.powf(-1.0 / 3.0) * moment;
    let a3_part =
        2.4 * k * k * x.powf(-1.0 / 6.0) * gamma_third_ratio(sign)? * zeta_re(2.0 / 3.0) * a3_residue_closed_form() * moment;
    Ok(main + a3_part)
}

#[derive(Debug, Clone, Copy)]
pub struct ContourConfig {
    /// Abscissa of the `A_3` integral.
    pub line_a: f64,
    /// Abscissa of the `A_4` integral.
    pub line_b: f64,
    /// Initial truncation height, doubled until converged.
    pub t_start: f64,
    pub t_max: f64,
    /// Relative change allowed at the last doubling.
    pub rel_tol: f64,
    /// Gauss-Legendre panel width and order.
    pub panel: f64,
    pub nodes: usize,
    /// Direct-product bound for the Euler products along the lines.
    pub p_max: u64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            line_a: 0.2,
            line_b: 0.05,
            t_start: 16.0,
            t_max: 4096.0,
            rel_tol: 1e-4,
            panel: 0.25,
            nodes: 16,
            p_max: 10_000,
        }
    }
}

const EXTRACT_BELOW: f64 = 1.6;
const LINE_CUTOFF: f64 = 2.6;

/// `A_3(-s,s)` and `A_4(-s,s)` along one vertical line, with Euler products
/// prepared once for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct DiagonalLine {
    a3: PreparedProduct,
    a4: Option<(PreparedProduct, PreparedProduct)>,
}

impl DiagonalLine {
    pub fn new(sigma: f64, with_a4: bool, p_max: u64) -> Result<Self> {
        let s = c(sigma);
        let zero = c(0.0);
        let a3 = PreparedProduct::new(&A3DiagFactor, s, zero, p_max, EXTRACT_BELOW, LINE_CUTOFF)?;
        let a4 = if with_a4 {
            Some((
                PreparedProduct::new(&A4TildeFactor, s, zero, p_max, EXTRACT_BELOW, LINE_CUTOFF)?,
                PreparedProduct::new(&A44Factor, s, zero, p_max, EXTRACT_BELOW, LINE_CUTOFF)?,
            ))
        } else {
            None
        };
        Ok(DiagonalLine { a3, a4 })
    }

    pub fn a3(&self, s: C64) -> Result<C64> {
        Ok(a3_diag_zetas(s)? * self.a3.eval(&A3DiagFactor, s, c(0.0))?)
    }

    pub fn a4(&self, s: C64) -> Result<C64> {
        let Some((tilde, a44)) = self.a4.as_ref() else {
            return Err(RatiosError::DomainViolation("line prepared without A_4".into()));
        };
        let zero = c(0.0);
        Ok(a4_diag_zetas(s)? * tilde.eval(&A4TildeFactor, s, zero)? * a44.eval(&A44Factor, s, zero)?)
    }
}

/// Arithmetic parts of the contour integrands on one line, tabulated at
/// Gauss-Legendre nodes. They do not depend on X, the sign or phi.
#[derive(Debug, Clone)]
struct LineTable {
    sigma: f64,
    products: DiagonalLine,
    t: Vec<f64>,
    w: Vec<f64>,
    /// `zeta(1-2s) A_3(-s,s)` and, on the A_4 line,
    /// `zeta(1-2s) zeta(5/6-s)/zeta(5/6+s) A_4(-s,s)`.
    vals: Vec<[C64; 2]>,
    t_end: f64,
}

impl LineTable {
    fn new(sigma: f64, with_a4: bool, p_max: u64) -> Result<Self> {
        Ok(LineTable {
            sigma,
            products: DiagonalLine::new(sigma, with_a4, p_max)?,
            t: Vec::new(),
            w: Vec::new(),
            vals: Vec::new(),
            t_end: 0.0,
        })
    }

    fn extend_to(&mut self, t_to: f64, panel: f64, nodes: usize) -> Result<()> {
        let (gx, gw) = gauss_legendre(nodes);
        while self.t_end < t_to - 1e-12 {
            let a = self.t_end;
            let b = a + panel;
            for (x, wt) in gx.iter().zip(&gw) {
                let t = 0.5 * (a + b) + 0.5 * panel * x;
                let s = C64::new(self.sigma, t);
                let z1 = zeta_at(c(1.0) - s * 2.0)?;
                let a3v = z1 * self.products.a3(s)?;
                let a4v = if self.products.a4.is_some() {
                    z1 * zeta_at(c(5.0 / 6.0) - s)? / zeta_at(c(5.0 / 6.0) + s)? * self.products.a4(s)?
                } else {
                    c(0.0)
                };
                self.t.push(t);
                self.w.push(0.5 * panel * wt);
                self.vals.push([a3v, a4v]);
            }
            self.t_end = b;
        }
        Ok(())
    }
}

/// Reusable tables for [`j_contour_with`]; build once, evaluate for many X.
#[derive(Debug, Clone)]
pub struct ContourCache {
    cfg: ContourConfig,
    line_a: LineTable,
    line_b: LineTable,
}

impl ContourCache {
    pub fn new(cfg: ContourConfig) -> Result<Self> {
        if !(cfg.line_a > 1.0 / 6.0 && cfg.line_a < 0.5) {
            return Err(RatiosError::DomainViolation(format!("A_3 line {} must lie in (1/6, 1/2)", cfg.line_a)));
        }
        if !(cfg.line_b > 0.0 && cfg.line_b < 1.0 / 6.0) {
            return Err(RatiosError::DomainViolation(format!("A_4 line {} must lie in (0, 1/6)", cfg.line_b)));
        }
        Ok(ContourCache {
            cfg,
            line_a: LineTable::new(cfg.line_a, false, cfg.p_max)?,
            line_b: LineTable::new(cfg.line_b, true, cfg.p_max)?,
        })
    }

    pub fn config(&self) -> &ContourConfig {
        &self.cfg
    }

    /// Height up to which the tables are filled.
    pub fn tabulated_height(&self) -> f64 {
        self.line_a.t_end.min(self.line_b.t_end)
    }
}

/// Result of a truncated contour evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourValue {
    pub value: f64,
    /// Contributions of the A_3 line and the A_4 line.
    pub line_a_part: f64,
    pub line_b_part: f64,
    /// Truncation height at which the doubling rule was met.
    pub height: f64,
    /// Change at the last doubling.
    pub last_change: f64,
}

/// X-dependent pieces of the integrands.
struct JWeights {
    l: f64,
    x: f64,
    r: f64,
    k: f64,
    sign: Sign,
}

impl JWeights {
    fn new(x: f64, sign: Sign) -> Self {
        let r = constants(sign).ratio();
        JWeights { l: log_conductor(x), x, r, k: r * x.powf(-1.0 / 6.0), sign }
    }

    /// `phi(Ls/(2 pi i)) Gamma_±(1/2-s)/Gamma_±(1/2+s)`.
    fn common(&self, s: C64, phi: &TestFunction) -> Result<C64> {
        let z = s * self.l / C64::new(0.0, 2.0 * PI);
        Ok(phi.phi(z) * gamma_pm_ratio(self.sign, s)?)
    }

    fn x_pow(&self, s: C64) -> C64 {
        (-s * self.x.ln()).exp()
    }

    /// Integrand on the A_3 line, given `zeta(1-2s) A_3(-s,s)`.
    fn line_a(&self, s: C64, za3: C64, phi: &TestFunction) -> Result<C64> {
        Ok(self.common(s, phi)? * (1.0 - self.k) * self.x_pow(s) * za3 / (c(1.0) - s))
    }

    /// Integrand on the A_4 line.
    fn line_b(&self, s: C64, za3: C64, za4: C64, phi: &TestFunction) -> Result<C64> {
        let x6 = self.x.powf(-1.0 / 6.0);
        let brace = za4 * (1.0 - self.k) / (c(1.0) - s * 1.2) + za3 * self.k / (c(1.0) - s);
        Ok(self.common(s, phi)? * self.r * x6 * self.x_pow(s) * brace)
    }
}

fn line_integral(table: &LineTable, upto: f64, f: &dyn Fn(usize, C64) -> Result<C64>) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..table.t.len() {
        if table.t[i] > upto {
            break;
        }
        let s = C64::new(table.sigma, table.t[i]);
        acc += table.w[i] * f(i, s)?.re;
    }
    Ok(acc)
}

/// `J(X)` from its contour form, with arithmetic tables taken from `cache`.
pub fn j_contour_with(x: f64, sign: Sign, phi: &TestFunction, cache: &mut ContourCache) -> Result<ContourValue> {
    let cfg = cache.cfg;
    let jw = JWeights::new(x, sign);
    // J may pass through zero; the residue scale keeps the stopping rule finite
    let floor = j_asymptotic(x, sign, phi, &RatiosConfig::default())?.abs() * 1e-4;
    let eval = |cache: &ContourCache, upto: f64| -> Result<(f64, f64)> {
        let la = &cache.line_a;
        let lb = &cache.line_b;
        let ia = line_integral(la, upto, &|i, s| jw.line_a(s, la.vals[i][0], phi))?;
        let ib = line_integral(lb, upto, &|i, s| jw.line_b(s, lb.vals[i][0], lb.vals[i][1], phi))?;
        Ok((-2.0 / PI * ia, -2.0 / PI * ib))
    };
    let mut height = cfg.t_start;
    cache.line_a.extend_to(height, cfg.panel, cfg.nodes)?;
    cache.line_b.extend_to(height, cfg.panel, cfg.nodes)?;
    let (pa, pb) = eval(cache, height)?;
    let mut prev = pa + pb;
    while height < cfg.t_max {
        height *= 2.0;
        cache.line_a.extend_to(height, cfg.panel, cfg.nodes)?;
        cache.line_b.extend_to(height, cfg.panel, cfg.nodes)?;
        let (pa, pb) = eval(cache, height)?;
        let cur = pa + pb;
        let change = (cur - prev).abs();
        if change <= (cfg.rel_tol * cur.abs()).max(floor) {
            return Ok(ContourValue { value: cur, line_a_part: pa, line_b_part: pb, height, last_change: change });
        }
        prev = cur;
    }
    Err(RatiosError::QuadratureNonconvergence(format!(
        "contour integrals not settled at height {}",
        cfg.t_max
    )))
}

/// `J(X)` from its contour form.
pub fn j_contour(x: f64, sign: Sign, phi: &TestFunction, cfg: &ContourConfig) -> Result<ContourValue> {
    let mut cache = ContourCache::new(*cfg)?;
    j_contour_with(x, sign, phi, &mut cache)
}

/// `J(X)` from its defining form on the line `Re s = line` in (0, 1/6):
/// the prime sum over `p^{-5e/6}` plus one contour integral containing
/// `zeta'/zeta(5/6+s)`. Used to check the contour form.
pub fn j_definition(
    x: f64,
    sign: Sign,
    phi: &TestFunction,
    line: f64,
    height: f64,
    cfg: &ContourConfig,
    dcfg: &DensityConfig,
) -> Result<f64> {
    if !(line > 0.0 && line < 1.0 / 6.0) {
        return Err(RatiosError::DomainViolation(format!("line {line} must lie in (0, 1/6)")));
    }
    let jw = JWeights::new(x, sign);
    let x6 = x.powf(-1.0 / 6.0);
    let weight = jw.r * x6 * (1.0 - jw.k);
    // the weights carry log p p^{-e/2} phi_hat(e log p / L)
    let prime_sum: f64 = prime_power_weights(jw.l, phi, dcfg)?
        .iter()
        .map(|&(p, e, h)| (p as f64).powf(-(e as f64) / 3.0) * h)
        .sum();
    let mut table = LineTable::new(line, true, cfg.p_max)?;
    table.extend_to(height, cfg.panel, cfg.nodes)?;
    let integral = line_integral(&table, height, &|i, s| {
        let [za3, za4] = table.vals[i];
        let zlog = zeta_log_derivative(c(5.0 / 6.0) + s)?;
        let common = jw.common(s, phi)?;
        let braces = -(zlog * weight) * phi.phi(s * jw.l / C64::new(0.0, 2.0 * PI))
            + common * jw.x_pow(s) * za3 / (c(1.0) - s)
            + common * weight * jw.x_pow(s) * (za4 / (c(1.0) - s * 1.2) - za3 / (c(1.0) - s));
        Ok(braces)
    })?;
    Ok(2.0 * weight / jw.l * prime_sum - 2.0 / PI * integral)
}

/// The six terms of the conjectured average of `L'/L(1/2 + r, f_K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDerivativeAverage {
    /// `-sum (theta_e + 1/p) x_p log p / p^{e(1/2+r)}`.
    pub theta_sum: C64,
    /// `-k(1-k) sum (beta_e - p^{-e/3}) log p / p^{e(1/2+r)}`, `k = (C2/C1) X^{-1/6}`.
    pub beta_sum: C64,
    /// `k(1-k) zeta'/zeta(5/6+r)`.
    pub zeta_log: C64,
    /// `-X^{-r} G(r) zeta(1-2r) A_3(-r,r)/(1-r)`.
    pub a3_term: C64,
    /// The `A_4` correction with weight `k(1-k) X^{-r}`.
    pub a4_term: C64,
}

impl LogDerivativeAverage {
    pub fn total(&self) -> C64 {
        self.theta_sum + self.beta_sum + self.zeta_log + self.a3_term + self.a4_term
    }
}

/// Bound on the prime-power exponent in the direct sums.
fn max_power(p: f64, re: f64) -> u32 {
    ((40.0 / (re * p.ln())).ceil() as u32).max(1)
}

/// `sum_p sum_e coef(p, e) log p p^{-e(1/2+r)}` over `p <= P`, plus the tail
/// `p > P` with primes replaced by their density: `int_P^inf coef(u,e) u^{-e(1/2+r)} du`.
fn weighted_prime_sum<F: Fn(f64, u32) -> f64>(r: C64, p_max: u64, coef: F) -> Result<C64> {
    let h = c(0.5) + r;
    let mut acc = c(0.0);
    for &p in crate::euler::prime_table().iter().take_while(|&&p| p <= p_max) {
        let pf = p as f64;
        let lp = pf.ln();
        for e in 1..=max_power(pf, h.re) {
            acc += (-h * (e as f64 * lp)).exp() * (coef(pf, e) * lp);
        }
    }
    let lp = (p_max as f64).ln();
    for e in 1..=max_power(p_max as f64, h.re) {
        let ef = e as f64;
        // u = e^v: du = e^v dv
        let f = |v: f64, part: bool| {
            let z = (-(h * ef) * v + v).exp() * coef(v.exp(), e);
            if part {
                z.re
            } else {
                z.im
            }
        };
        let size = |v: f64| C64::new(f(v, true), f(v, false)).norm();
        let (f0, f1) = (size(lp), size(lp + 1.0));
        if f0 == 0.0 {
            continue;
        }
        let decay = (f0 / f1.max(f64::MIN_POSITIVE)).ln();
        if !(decay > 0.02) {
            return Err(RatiosError::SlowConvergence(decay));
        }
        let width = 4.0 / decay;
        let mut lo = lp;
        let mut tail = c(0.0);
        for _ in 0..400 {
            let re_part = integrate(|v| f(v, true), lo, lo + width, 1e-16, 1e-11, 4000);
            let im_part = integrate(|v| f(v, false), lo, lo + width, 1e-16, 1e-11, 4000);
            if !(re_part.converged && im_part.converged) {
                return Err(RatiosError::QuadratureNonconvergence("prime-sum tail".into()));
            }
            let piece = C64::new(re_part.value, im_part.value);
            tail += piece;
            lo += width;
            if piece.norm() <= 1e-16 * tail.norm().max(1e-300) {
                break;
            }
        }
        acc += tail;
    }
    Ok(acc)
}

/// `sum_{p,e} (theta_e + 1/p) x_p log p / p^{e(1/2+r)}` for `Re r > 0`.
///
/// The e = 2 part `sum_p log p p^{-(1+2r)}` converges too slowly to sum
/// directly; it is taken from `-zeta'/zeta(1+2r)` minus the higher prime powers.
pub fn theta_prime_sum(r: C64, p_max: u64) -> Result<C64> {
    if !(r.re > 0.0) {
        return Err(RatiosError::DomainViolation(format!("Re r = {} must be positive", r.re)));
    }
    let b = c(1.0) + r * 2.0;
    // sum_p log p p^{-b} = -zeta'/zeta(b) - sum_p sum_{k>=2} log p p^{-kb}
    let higher = weighted_prime_sum(r, p_max, |_, e| if e % 2 == 0 && e >= 4 { 1.0 } else { 0.0 })?;
    let main = -zeta_log_derivative(b)? - higher;
    let rest = weighted_prime_sum(r, p_max, |pf, e| {
        let x = x_at(pf);
        let full = (theta_e(e) as f64 + 1.0 / pf) * x;
        if e == 2 {
            full - 1.0
        } else {
            full
        }
    })?;
    Ok(main + rest)
}

/// `sum_{p,e} (beta_e(p) - p^{-e/3}) log p / p^{e(1/2+r)}` for `Re r > 0`.
pub fn beta_prime_sum(r: C64, p_max: u64) -> Result<C64> {
    if !(r.re > 0.0) {
        return Err(RatiosError::DomainViolation(format!("Re r = {} must be positive", r.re)));
    }
    weighted_prime_sum(r, p_max, |pf, e| {
        if e == 1 {
            crate::asym::beta1_minus_t_at(pf)
        } else {
            beta_at(pf, e) - pf.powf(-(e as f64) / 3.0)
        }
    })
}

/// Default direct-summation bound for the conjecture's prime sums.
pub const CONJECTURE_PRIME_BOUND: u64 = 1_000_000;

/// Right-hand side of the conjectured average of `L'/L(1/2 + r, f_K)`.
pub fn conjecture_log_derivative_avg(r: C64, x: f64, sign: Sign, cfg: &RatiosConfig) -> Result<LogDerivativeAverage> {
    if !(r.re > 0.0 && r.re < 1.0 / 6.0 - 1e-3) {
        return Err(RatiosError::DomainViolation(format!("Re r = {} must lie in (0, 1/6)", r.re)));
    }
    let ratio = constants(sign).ratio();
    let k = ratio * x.powf(-1.0 / 6.0);
    let weight = k * (1.0 - k);
    let xr = (-r * x.ln()).exp();
    let g = gamma_pm_ratio(sign, r)?;
    let z1 = zeta_at(c(1.0) - r * 2.0)?;
    let a3v = a3_diag(r, cfg)?;
    let a4v = a4_diag(r, cfg)?;
    let zr = zeta_at(c(5.0 / 6.0) - r)? / zeta_at(c(5.0 / 6.0) + r)?;
    Ok(LogDerivativeAverage {
        theta_sum: -theta_prime_sum(r, CONJECTURE_PRIME_BOUND)?,
        beta_sum: -beta_prime_sum(r, CONJECTURE_PRIME_BOUND)? * weight,
        zeta_log: zeta_log_derivative(c(5.0 / 6.0) + r)? * weight,
        a3_term: -xr * g * z1 * a3v / (c(1.0) - r),
        a4_term: -xr * g * z1 * weight * (zr * a4v / (c(1.0) - r * 1.2) - a3v / (c(1.0) - r)),
    })
}

/// How the transition term enters [`ratios_prediction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JMode {
    Contour,
    Asymptotic,
}

/// Ratios prediction: the unconditional terms plus `J(X)`.
#[allow(clippy::too_many_arguments)]
pub fn ratios_prediction(
    x: f64,
    sign: Sign,
    phi: &TestFunction,
    theta: f64,
    omega: f64,
    mode: JMode,
    cache: &mut ContourCache,
    cfg: &RatiosConfig,
    dcfg: &DensityConfig,
) -> Result<PredictionReport> {
    let base = theorem_main_prediction(x, sign, phi, theta, omega, dcfg)?;
    let j = match mode {
        JMode::Contour => j_contour_with(x, sign, phi, cache)?.value,
        JMode::Asymptotic => j_asymptotic(x, sign, phi, cfg)?,
    };
    Ok(base.with_j(j))
}

pub const RATIOS_HEADER: &str = "X,sign,sigma,term,value";

/// One block of `ratios.csv`.
#[derive(Debug, Clone)]
pub struct RatiosRow {
    pub report: PredictionReport,
    pub j_contour: Option<f64>,
    pub j_asymptotic: Option<f64>,
    /// Ratios prediction minus the unconditional prediction.
    pub discrepancy: f64,
}

pub fn write_ratios_csv(path: &Path, rows: &[RatiosRow]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        writeln!(w, "{RATIOS_HEADER}")?;
        for row in rows {
            let rep = &row.report;
            let mut line = |name: &str, v: f64| writeln!(w, "{},{},{},{name},{v:.12e}", rep.x, rep.sign, rep.sigma);
            for (name, v) in rep.terms() {
                line(name, v)?;
            }
            if let Some(v) = row.j_contour {
                line("j_contour", v)?;
            }
            if let Some(v) = row.j_asymptotic {
                line("j_asymptotic", v)?;
            }
            line("discrepancy", row.discrepancy)?;
        }
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| RatiosError::Io(e.error))?;
    Ok(())
}
