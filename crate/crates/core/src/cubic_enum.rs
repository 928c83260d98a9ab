//! Cubic fields through integral binary cubic forms.
//!
//! Each GL2(Z)-class of irreducible forms with a given sign of discriminant
//! has exactly one reduced representative:
//!
//! * D < 0: write `f(x,1) = a(x - t)(x^2 - 2ux + v)` with `a > 0`. The form
//!   is reduced when `0 < u < 1/2` and `v > 1`, tested exactly as
//!   `ad - bc > 0`, `(a+b)^2 + c(a+b) - ad > 0` and `d^2 - bd + ac - a^2 > 0`.
//!   For irreducible forms none of these can vanish.
//! * D > 0: the Hessian `(P, Q, R) = (b^2 - 3ac, bc - 9ad, c^2 - 3bd)` is
//!   positive definite and reduced (`0 <= Q <= P <= R`), `a > 0`, and the
//!   form is lexicographically least among its images under the
//!   automorphisms of the Hessian.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::primes::primes_up_to;
use crate::Sign;

/// Largest supported discriminant bound.
pub const X_CEILING: i64 = 10_000_000_000;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("integer overflow in form arithmetic")]
    Overflow,
    #[error("x_max {0} outside the supported range")]
    Unsupported(i64),
    #[error("corrupt field cache {path}: {reason}")]
    CacheCorruption { path: String, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `a x^3 + b x^2 y + c x y^2 + d y^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Form {
    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Form { a, b, c, d }
    }

    fn from_wide(w: [i128; 4]) -> Result<Self, EnumError> {
        let n = |v: i128| i64::try_from(v).map_err(|_| EnumError::Overflow);
        Ok(Form { a: n(w[0])?, b: n(w[1])?, c: n(w[2])?, d: n(w[3])? })
    }

    fn wide(&self) -> [i128; 4] {
        [self.a as i128, self.b as i128, self.c as i128, self.d as i128]
    }

    pub fn negate(&self) -> Form {
        Form::new(-self.a, -self.b, -self.c, -self.d)
    }

    /// `f(x,1)` evaluated exactly.
    pub fn eval(&self, x: i128, y: i128) -> i128 {
        let [a, b, c, d] = self.wide();
        ((a * x + b * y) * x + c * y * y) * x + d * y * y * y
    }

    /// `f(p x + q y, r x + s y)`.
    pub fn transform(&self, p: i64, q: i64, r: i64, s: i64) -> Result<Form, EnumError> {
        let [a, b, c, d] = self.wide();
        let (p, q, r, s) = (p as i128, q as i128, r as i128, s as i128);
        let na = self.eval(p, r);
        let nd = self.eval(q, s);
        let nb = 3 * a * p * p * q + b * (p * p * s + 2 * p * q * r) + c * (2 * p * r * s + q * r * r) + 3 * d * r * r * s;
        let nc = 3 * a * p * q * q + b * (2 * p * q * s + q * q * r) + c * (p * s * s + 2 * q * r * s) + 3 * d * r * s * s;
        Form::from_wide([na, nb, nc, nd])
    }

    pub fn content(&self) -> i64 {
        gcd(gcd(self.a, self.b), gcd(self.c, self.d))
    }
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.a, self.b, self.c, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldRecord {
    pub disc: i64,
    pub form: Form,
}

impl FieldRecord {
    pub fn sign(&self) -> Sign {
        if self.disc > 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Exact discriminant `18abcd + b^2c^2 - 4ac^3 - 4b^3d - 27a^2d^2`.
pub fn discriminant(f: &Form) -> Result<i128, EnumError> {
    let [a, b, c, d] = f.wide();
    let ov = || EnumError::Overflow;
    let m = |x: i128, y: i128| x.checked_mul(y).ok_or_else(ov);
    let t1 = m(m(m(m(18, a)?, b)?, c)?, d)?;
    let t2 = m(m(b, b)?, m(c, c)?)?;
    let t3 = m(m(4, a)?, m(m(c, c)?, c)?)?;
    let t4 = m(m(4, d)?, m(m(b, b)?, b)?)?;
    let t5 = m(m(27, m(a, a)?)?, m(d, d)?)?;
    t1.checked_add(t2)
        .and_then(|v| v.checked_sub(t3))
        .and_then(|v| v.checked_sub(t4))
        .and_then(|v| v.checked_sub(t5))
        .ok_or_else(ov)
}

/// Hessian coefficients `(P, Q, R)`; `Q^2 - 4PR = -3 disc`.
pub fn hessian(f: &Form) -> (i128, i128, i128) {
    let [a, b, c, d] = f.wide();
    (b * b - 3 * a * c, b * c - 9 * a * d, c * c - 3 * b * d)
}

fn has_root_mod(f: &Form, p: i64) -> bool {
    let m = |v: i64| v.rem_euclid(p);
    if m(f.a) == 0 {
        return true;
    }
    let (a, b, c, d) = (m(f.a), m(f.b), m(f.c), m(f.d));
    (0..p).any(|x| ((a * x + b) % p * x % p * x + c * x + d) % p == 0)
}

fn divisors(n: i64) -> Vec<i64> {
    let n = n.unsigned_abs();
    let mut out = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            out.push(i as i64);
            if i * i != n {
                out.push((n / i) as i64);
            }
        }
        i += 1;
    }
    out
}

/// True iff `f` has no linear factor over Q.
pub fn is_irreducible(f: &Form) -> bool {
    if f.a == 0 || f.d == 0 {
        return false;
    }
    // A rational root survives reduction mod every prime, so a prime with no
    // root in P^1(F_p) certifies irreducibility.
    const CERT: [i64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    if CERT.iter().any(|&p| !has_root_mod(f, p)) {
        return true;
    }
    for s in divisors(f.a) {
        for r in divisors(f.d) {
            if gcd(r, s) != 1 {
                continue;
            }
            if f.eval(r as i128, s as i128) == 0 || f.eval(-(r as i128), s as i128) == 0 {
                return false;
            }
        }
    }
    true
}

fn mul_mod(a: i64, b: i64, p: i64) -> i64 {
    ((a as i128 * b as i128).rem_euclid(p as i128)) as i64
}

fn pow_mod(mut b: i64, mut e: u64, p: i64) -> i64 {
    let mut r = 1 % p;
    b = b.rem_euclid(p);
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

fn inv_mod(a: i64, p: i64) -> i64 {
    pow_mod(a, (p - 2) as u64, p)
}

/// Polynomials over F_p, lowest degree first, no trailing zeros.
fn trim(mut v: Vec<i64>) -> Vec<i64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn poly_rem(a: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p);
    while r.len() > db {
        let k = r.len() - 1;
        let coef = mul_mod(r[k], lead_inv, p);
        for (i, &bi) in b.iter().enumerate() {
            let idx = k - db + i;
            r[idx] = (r[idx] - mul_mod(coef, bi, p)).rem_euclid(p);
        }
        r = trim(r);
    }
    r
}

fn poly_gcd(a: Vec<i64>, b: Vec<i64>, p: i64) -> Vec<i64> {
    let (mut a, mut b) = (trim(a), trim(b));
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_mul_mod(a: &[i64], b: &[i64], m: &[i64], p: i64) -> Vec<i64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    poly_rem(&trim(out), m, p)
}

/// Number of distinct roots of `g` (degree >= 1, monic not required) in F_p.
fn distinct_roots_affine(g: &[i64], p: i64) -> usize {
    let g = trim(g.to_vec());
    if g.len() <= 1 {
        return 0;
    }
    // gcd(g, x^p - x)
    let mut result = vec![1i64];
    let mut base = poly_rem(&[0, 1], &g, p);
    let mut e = p as u64;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_mod(&result, &base, &g, p);
        }
        base = poly_mul_mod(&base, &base, &g, p);
        e >>= 1;
    }
    let mut xp_minus_x = result;
    if xp_minus_x.len() < 2 {
        xp_minus_x.resize(2, 0);
    }
    xp_minus_x[1] = (xp_minus_x[1] - 1).rem_euclid(p);
    let h = poly_gcd(g.clone(), trim(xp_minus_x), p);
    if h.is_empty() {
        g.len() - 1
    } else {
        h.len() - 1
    }
}

/// Roots of the form in P^1(F_p) as `(count of distinct roots, has multiple root)`.
pub fn roots_mod_p(f: &Form, p: i64) -> (usize, bool) {
    let m = |v: i64| v.rem_euclid(p);
    let coeffs = [m(f.d), m(f.c), m(f.b), m(f.a)];
    if p <= 50 {
        let mut count = 0;
        let mut multiple = false;
        if coeffs[3] == 0 {
            count += 1;
            if coeffs[2] == 0 {
                multiple = true;
            }
        }
        for x in 0..p {
            let v = ((coeffs[3] * x + coeffs[2]) % p * x % p * x + coeffs[1] * x + coeffs[0]) % p;
            if v == 0 {
                count += 1;
                let dv = (3 * coeffs[3] % p * x % p * x + 2 * coeffs[2] * x + coeffs[1]) % p;
                if dv == 0 {
                    multiple = true;
                }
            }
        }
        return (count, multiple);
    }
    let g = trim(coeffs.to_vec());
    let mut count = distinct_roots_affine(&g, p);
    let deg = g.len().saturating_sub(1);
    let at_inf = 3 - deg;
    if at_inf > 0 {
        count += 1;
    }
    let deriv = trim(vec![g.get(1).copied().unwrap_or(0), 2 * g.get(2).copied().unwrap_or(0) % p, 3 * g.get(3).copied().unwrap_or(0) % p]);
    let gd = poly_gcd(g.clone(), deriv, p);
    let multiple = at_inf >= 2 || (gd.len() >= 2 && deg >= 2) || (gd.is_empty() && deg >= 2);
    (count, multiple)
}

/// An integer lift of the multiple root of `f` mod p as `(x, y)` with
/// `f(x, y) = 0 mod p`, or None if all roots are simple.
fn multiple_root_mod_p(f: &Form, p: i64) -> Option<(i64, i64)> {
    let m = |v: i64| v.rem_euclid(p);
    let (a, b, c, d) = (m(f.a), m(f.b), m(f.c), m(f.d));
    if a == 0 && b == 0 {
        return Some((1, 0));
    }
    if p <= 50 {
        for x in 0..p {
            let v = ((a * x + b) % p * x % p * x + c * x + d) % p;
            let dv = (3 * a % p * x % p * x + 2 * b * x + c) % p;
            if v == 0 && dv == 0 {
                return Some((x, 1));
            }
        }
        return None;
    }
    let g = trim(vec![d, c, b, a]);
    let deriv = trim(vec![c, 2 * b % p, 3 * a % p]);
    let h = poly_gcd(g, deriv, p);
    if h.len() < 2 {
        return None;
    }
    // The multiple root is the unique root of h (degree 1 or a square/cube of a linear factor).
    let lin = if h.len() == 2 {
        h
    } else {
        let hd: Vec<i64> = (1..h.len()).map(|i| mul_mod(h[i], i as i64, p)).collect();
        let hd = trim(hd);
        if hd.len() == 2 {
            // h = (x - r)^k with k = deg h; its derivative has root r too.
            let mut acc = h.clone();
            while acc.len() > 2 {
                let da: Vec<i64> = (1..acc.len()).map(|i| mul_mod(acc[i], i as i64, p)).collect();
                acc = trim(da);
            }
            acc
        } else {
            return None;
        }
    };
    let r = mul_mod(p - lin[0], inv_mod(lin[1], p), p);
    Some((r, 1))
}

/// p-maximality of the cubic ring attached to `f`.
pub fn is_maximal_at(f: &Form, p: i64) -> bool {
    if f.content() % p == 0 {
        return false;
    }
    let Some((x, y)) = multiple_root_mod_p(f, p) else {
        return true;
    };
    // Move the multiple root to (1:0): first column of the transformation is (x, y).
    let a2 = f.eval(x as i128, y as i128);
    a2.rem_euclid((p as i128) * (p as i128)) != 0
}

/// Primes p with p^2 dividing n.
pub fn square_prime_divisors(n: i128, small_primes: &[u64]) -> Vec<i64> {
    let mut m = n.unsigned_abs();
    let mut out = Vec::new();
    for &p in small_primes {
        let p = p as u128;
        if p * p * p > m {
            break;
        }
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if e >= 2 {
                out.push(p as i64);
            }
        }
    }
    // Cofactor has at most two prime factors, each larger than the cube root.
    if m > 1 {
        let r = isqrt_u128(m);
        if r * r == m && r > 1 {
            let q = r as i64;
            if crate::primes::is_prime(q as u64) {
                out.push(q);
            } else {
                // Small prime table was too short for this n: fall back.
                let mut k = q;
                let mut d = 2;
                while d * d <= k {
                    if k % d == 0 {
                        out.push(d);
                        while k % d == 0 {
                            k /= d;
                        }
                    }
                    d += 1;
                }
                if k > 1 {
                    out.push(k);
                }
            }
        } else {
            // Remaining small primes beyond the cube-root cut.
            let mut mm = m;
            for &p in small_primes {
                let p = p as u128;
                if p * p > mm {
                    break;
                }
                if mm % (p * p) == 0 {
                    out.push(p as i64);
                    while mm % p == 0 {
                        mm /= p;
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt_u128(n as u128);
    r * r == n as u128
}

fn small_prime_table() -> &'static [u64] {
    static T: std::sync::OnceLock<Vec<u64>> = std::sync::OnceLock::new();
    T.get_or_init(|| primes_up_to(1_000_000))
}

/// Full maximality test for a primitive irreducible form.
pub fn is_maximal(f: &Form, disc: i128) -> bool {
    if f.content() != 1 {
        return false;
    }
    square_prime_divisors(disc, small_prime_table()).into_iter().all(|p| is_maximal_at(f, p))
}

// ---------------------------------------------------------------- reduction

fn translate(f: &Form, k: i64) -> Result<Form, EnumError> {
    f.transform(1, k, 0, 1)
}

fn neg_reduced_tests(f: &Form) -> (bool, bool, bool, bool) {
    let [a, b, c, d] = f.wide();
    let u_pos = a * d - b * c > 0;
    let u_lt_half = (a + b) * (a + b) + c * (a + b) - a * d > 0;
    let u_gt_mhalf = (a - b) * (a - b) + c * (a - b) + a * d > 0;
    let v_gt_one = d * d - b * d + a * c - a * a > 0;
    (u_pos, u_lt_half, u_gt_mhalf, v_gt_one)
}

fn real_root(f: &Form) -> f64 {
    let (a, b, c, d) = (f.a as f64, f.b as f64, f.c as f64, f.d as f64);
    let g = |x: f64| ((a * x + b) * x + c) * x + d;
    let bound = 1.0 + (b.abs().max(c.abs()).max(d.abs())) / a.abs();
    let (mut lo, mut hi) = (-bound, bound);
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) == (glo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn reduce_negative(f: &Form) -> Result<Form, EnumError> {
    let mut g = if f.a < 0 { f.negate() } else { *f };
    for _ in 0..10_000 {
        let theta = real_root(&g);
        let u = (-(g.b as f64) / g.a as f64 - theta) / 2.0;
        let k = u.round();
        if k.is_finite() && k.abs() >= 1.0 && k.abs() < 1e15 {
            g = translate(&g, k as i64)?;
        }
        loop {
            let (_, lt, gt, _) = neg_reduced_tests(&g);
            if !gt {
                g = translate(&g, -1)?;
            } else if !lt {
                g = translate(&g, 1)?;
            } else {
                break;
            }
        }
        let (pos, _, _, v_gt_one) = neg_reduced_tests(&g);
        if !v_gt_one {
            g = Form::new(g.d, -g.c, g.b, -g.a);
            if g.a < 0 {
                g = g.negate();
            }
            continue;
        }
        if !pos {
            g = Form::new(g.a, -g.b, g.c, -g.d);
        }
        return Ok(g);
    }
    Err(EnumError::Overflow)
}

fn hessian_automorphisms(h: (i128, i128, i128)) -> Vec<(i64, i64, i64, i64)> {
    let (p0, q0, r0) = h;
    let mut out = Vec::new();
    for p in -2i64..=2 {
        for q in -2i64..=2 {
            for r in -2i64..=2 {
                for s in -2i64..=2 {
                    let det = p * s - q * r;
                    if det != 1 && det != -1 {
                        continue;
                    }
                    let (pw, qw, rw, sw) = (p as i128, q as i128, r as i128, s as i128);
                    let np = p0 * pw * pw + q0 * pw * rw + r0 * rw * rw;
                    let nr = p0 * qw * qw + q0 * qw * sw + r0 * sw * sw;
                    let nq = 2 * p0 * pw * qw + q0 * (pw * sw + qw * rw) + 2 * r0 * rw * sw;
                    if (np, nq, nr) == (p0, q0, r0) {
                        out.push((p, q, r, s));
                    }
                }
            }
        }
    }
    out
}

fn orbit_minimum(f: &Form) -> Result<Form, EnumError> {
    let h = hessian(f);
    let mut best = if f.a < 0 { f.negate() } else { *f };
    if h.1 == 0 || h.1 == h.0 || h.0 == h.2 {
        for (p, q, r, s) in hessian_automorphisms(h) {
            let mut g = f.transform(p, q, r, s)?;
            if g.a < 0 {
                g = g.negate();
            }
            if g < best {
                best = g;
            }
        }
    }
    Ok(best)
}

fn reduce_positive(f: &Form) -> Result<Form, EnumError> {
    let mut g = *f;
    for _ in 0..100_000 {
        let (p, q, r) = hessian(&g);
        if p > r {
            g = g.transform(0, 1, 1, 0)?;
            continue;
        }
        if q.abs() > p {
            // x -> x + k y sends Q to Q + 2kP.
            let k = -((q as f64) / (2.0 * p as f64)).round() as i64;
            let k = if k == 0 { -q.signum() as i64 } else { k };
            g = translate(&g, k)?;
            continue;
        }
        break;
    }
    let (_, q, _) = hessian(&g);
    if q < 0 {
        g = g.transform(-1, 0, 0, 1)?;
    }
    orbit_minimum(&g)
}

/// The reduced representative of the class of `f`; equal keys exactly for
/// GL2(Z)-equivalent irreducible forms.
pub fn canonical_key(f: &Form) -> Result<Form, EnumError> {
    let d = discriminant(f)?;
    if d < 0 {
        reduce_negative(f)
    } else {
        reduce_positive(f)
    }
}

/// Whether `f` is already the reduced representative of its class.
pub fn is_reduced(f: &Form) -> Result<bool, EnumError> {
    Ok(canonical_key(f)? == *f)
}

// -------------------------------------------------------------- enumeration

#[derive(Debug, Clone, Copy)]
pub struct EnumOptions {
    /// Keep fields with square discriminant (cyclic cubics).
    pub include_galois: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { include_galois: false }
    }
}

fn accept(f: Form, x_max: i64, sign: Sign, opts: &EnumOptions) -> Option<FieldRecord> {
    let disc = discriminant(&f).ok()?;
    let ok_range = match sign {
        Sign::Plus => disc > 0 && disc < x_max as i128,
        Sign::Minus => disc < 0 && -disc < x_max as i128,
    };
    if !ok_range {
        return None;
    }
    if !opts.include_galois && is_square(disc) {
        return None;
    }
    if f.content() != 1 || !is_irreducible(&f) || !is_maximal(&f, disc) {
        return None;
    }
    Some(FieldRecord { disc: disc as i64, form: f })
}

fn quad_roots(qa: f64, qb: f64, qc: f64) -> Option<(f64, f64)> {
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let r1 = (-qb - s) / (2.0 * qa);
    let r2 = (-qb + s) / (2.0 * qa);
    Some((r1.min(r2), r1.max(r2)))
}

fn negative_block(a: i64, b: i64, x: i64, opts: &EnumOptions, out: &mut Vec<FieldRecord>) {
    let xf = x as f64;
    let af = a as f64;
    let w_max = (xf / (4.0 * af.powi(4))).cbrt();
    let beta = -(b as f64) / af;
    // c/a = 2u beta - 3u^2 + w, u in (0, 1/2), w in (3/4, W].
    let g = |u: f64| 2.0 * u * beta - 3.0 * u * u;
    let mut lo = g(0.0).min(g(0.5));
    let mut hi = g(0.0).max(g(0.5));
    let uc = beta / 3.0;
    if uc > 0.0 && uc < 0.5 {
        hi = hi.max(g(uc));
        lo = lo.min(g(uc));
    }
    let c_lo = ((lo + 0.75) * af).floor() as i64 - 1;
    let c_hi = ((hi + w_max) * af).ceil() as i64 + 1;
    for c in c_lo..=c_hi {
        // D(d) = -27a^2 d^2 + (18abc - 4b^3) d + (b^2c^2 - 4ac^3)
        let (bf, cf) = (b as f64, c as f64);
        let qa = -27.0 * af * af;
        let qb = 18.0 * af * bf * cf - 4.0 * bf.powi(3);
        let qc = bf * bf * cf * cf - 4.0 * af * cf.powi(3);
        let Some((d1, d2)) = quad_roots(qa, qb, qc + xf) else {
            continue;
        };
        // Reducedness: bc/a < d < (a+b)(a+b+c)/a.
        let r_lo = (b as f64 * cf / af).floor();
        let r_hi = ((a + b) as f64 * (a + b + c) as f64 / af).ceil();
        let d_lo = d1.floor().max(r_lo) as i64 - 1;
        let d_hi = d2.ceil().min(r_hi) as i64 + 1;
        for d in d_lo..=d_hi {
            let f = Form::new(a, b, c, d);
            let (pos, lt, _, vg) = neg_reduced_tests(&f);
            if !(pos && lt && vg) {
                continue;
            }
            if let Some(rec) = accept(f, x, Sign::Minus, opts) {
                out.push(rec);
            }
        }
    }
}

fn positive_block(a: i64, b: i64, x: i64, opts: &EnumOptions, out: &mut Vec<FieldRecord>) {
    let xf = x as f64;
    let sqrt_x = xf.sqrt();
    let (ai, bi) = (a as i128, b as i128);
    let c_lo = ((bi * bi) as f64 - sqrt_x) / (3.0 * a as f64);
    let c_lo = c_lo.floor() as i64 - 1;
    let c_hi = ((bi * bi) as f64 / (3.0 * a as f64)).ceil() as i64 + 1;
    for c in c_lo..=c_hi {
        let ci = c as i128;
        let p = bi * bi - 3 * ai * ci;
        if p <= 0 || (p as f64) > sqrt_x + 1.0 {
            continue;
        }
        // 0 <= Q = bc - 9ad <= P
        let d_lo = ((bi * ci - p) as f64 / (9.0 * a as f64)).floor() as i64 - 1;
        let d_hi = ((bi * ci) as f64 / (9.0 * a as f64)).ceil() as i64 + 1;
        for d in d_lo..=d_hi {
            let f = Form::new(a, b, c, d);
            let (hp, hq, hr) = hessian(&f);
            if !(0 <= hq && hq <= hp && hp <= hr) {
                continue;
            }
            if (hq == 0 || hq == hp || hp == hr) && orbit_minimum(&f).map(|m| m != f).unwrap_or(true) {
                continue;
            }
            if let Some(rec) = accept(f, x, Sign::Plus, opts) {
                out.push(rec);
            }
        }
    }
}

fn blocks(x: i64, sign: Sign) -> Vec<(i64, i64)> {
    let xf = x as f64;
    let mut out = Vec::new();
    match sign {
        Sign::Minus => {
            let a_max = (16.0 * xf / 27.0).powf(0.25).floor() as i64 + 1;
            for a in 1..=a_max {
                let af = a as f64;
                let t = (xf / (3.0 * af.powi(4))).powf(0.25);
                let b_lo = (-af * (t + 1.5)).floor() as i64 - 1;
                let b_hi = (af * t).ceil() as i64 + 1;
                out.extend((b_lo..=b_hi).map(|b| (a, b)));
            }
        }
        Sign::Plus => {
            let a_max = ((4.0f64 / 27.0).sqrt() * xf.powf(0.25)).floor() as i64 + 1;
            for a in 1..=a_max {
                let bb = (1.5 * a as f64 + xf.powf(0.25)).ceil() as i64 + 1;
                out.extend((-bb..=bb).map(|b| (a, b)));
            }
        }
    }
    out
}

pub fn sort_records(v: &mut [FieldRecord]) {
    v.sort_by(|x, y| x.disc.abs().cmp(&y.disc.abs()).then(x.form.cmp(&y.form)));
}

/// All fields with `0 < sign*D < x_max`, one record per isomorphism class.
pub fn enumerate_with(x_max: i64, sign: Sign, opts: &EnumOptions) -> Result<Vec<FieldRecord>, EnumError> {
    if !(1..=X_CEILING).contains(&x_max) {
        return Err(EnumError::Unsupported(x_max));
    }
    let _ = small_prime_table();
    let mut recs: Vec<FieldRecord> = blocks(x_max, sign)
        .into_par_iter()
        .map(|(a, b)| {
            let mut out = Vec::new();
            match sign {
                Sign::Minus => negative_block(a, b, x_max, opts, &mut out),
                Sign::Plus => positive_block(a, b, x_max, opts, &mut out),
            }
            out
        })
        .flatten()
        .collect();
    sort_records(&mut recs);
    Ok(recs)
}

pub fn enumerate(x_max: i64, sign: Sign) -> Result<Vec<FieldRecord>, EnumError> {
    enumerate_with(x_max, sign, &EnumOptions::default())
}

// -------------------------------------------------------------------- cache

pub const CACHE_HEADER: &str = "disc,a,b,c,d";

/// Writes the records atomically (temporary file in the same directory, then rename).
pub fn write_cache(path: &Path, records: &[FieldRecord]) -> Result<(), EnumError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        writeln!(w, "{CACHE_HEADER}")?;
        for r in records {
            writeln!(w, "{},{},{},{},{}", r.disc, r.form.a, r.form.b, r.form.c, r.form.d)?;
        }
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| EnumError::Io(e.error))?;
    Ok(())
}

/// Reads and validates a cache file.
pub fn read_cache(path: &Path) -> Result<Vec<FieldRecord>, EnumError> {
    let corrupt = |reason: String| EnumError::CacheCorruption { path: path.display().to_string(), reason };
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == CACHE_HEADER => {}
        _ => return Err(corrupt("missing header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Result<Vec<i64>, _> = line.split(',').map(|t| t.trim().parse::<i64>()).collect();
        let nums = nums.map_err(|e| corrupt(format!("line {}: {e}", i + 2)))?;
        if nums.len() != 5 {
            return Err(corrupt(format!("line {}: expected 5 fields", i + 2)));
        }
        let form = Form::new(nums[1], nums[2], nums[3], nums[4]);
        let d = discriminant(&form)?;
        if d != nums[0] as i128 || d == 0 {
            return Err(corrupt(format!("line {}: discriminant mismatch", i + 2)));
        }
        out.push(FieldRecord { disc: nums[0], form });
    }
    let sorted = out.windows(2).all(|w| {
        (w[0].disc.abs(), w[0].form) <= (w[1].disc.abs(), w[1].form)
    });
    if !sorted {
        return Err(corrupt("records not sorted".into()));
    }
    Ok(out)
}

/// Cache file name for a given bound and sign.
pub fn cache_path(dir: &Path, x_max: i64, sign: Sign, include_galois: bool) -> PathBuf {
    let s = match sign {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    };
    let g = if include_galois { "_all" } else { "" };
    dir.join(format!("fields_{s}{g}_{x_max}.csv"))
}

/// Loads the family from the cache directory if a file covering `x_max`
/// exists, otherwise enumerates and writes it.
pub fn load_or_enumerate(
    dir: Option<&Path>,
    x_max: i64,
    sign: Sign,
    opts: &EnumOptions,
) -> Result<Vec<FieldRecord>, EnumError> {
    let Some(dir) = dir else {
        return enumerate_with(x_max, sign, opts);
    };
    if let Ok(entries) = fs::read_dir(dir) {
        let mut best: Option<(i64, PathBuf)> = None;
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().to_string();
            let prefix = cache_path(Path::new(""), 0, sign, opts.include_galois)
                .to_string_lossy()
                .trim_end_matches("0.csv")
                .to_string();
            if let Some(rest) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".csv")) {
                if let Ok(xc) = rest.parse::<i64>() {
                    if xc >= x_max && best.as_ref().map(|b| xc < b.0).unwrap_or(true) {
                        best = Some((xc, e.path()));
                    }
                }
            }
        }
        if let Some((_, path)) = best {
            let recs = read_cache(&path)?;
            return Ok(recs.into_iter().filter(|r| r.disc.abs() < x_max && sign.matches(r.disc)).collect());
        }
    }
    let recs = enumerate_with(x_max, sign, opts)?;
    write_cache(&cache_path(dir, x_max, sign, opts.include_galois), &recs)?;
    Ok(recs)
}
