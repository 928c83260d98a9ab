//! Independent cubic-field oracle: monic generators under Hunter's bound,
//! field discriminant from the index of Z[alpha] in the maximal order, and
//! isomorphism classes separated by root counts modulo small primes.

#![allow(dead_code)]

use std::collections::BTreeMap;

fn poly_disc(a1: i128, a2: i128, a3: i128) -> i128 {
    // x^3 + b x^2 + c x + d with b = -a1, c = a2, d = -a3
    let (b, c, d) = (-a1, a2, -a3);
    18 * b * c * d + b * b * c * c - 4 * c * c * c - 4 * b * b * b * d - 27 * d * d
}

fn has_rational_root(a1: i128, a2: i128, a3: i128) -> bool {
    if a3 == 0 {
        return true;
    }
    let n = a3.unsigned_abs();
    let mut k = 1u128;
    while k * k <= n {
        if n % k == 0 {
            for r in [k as i128, (n / k) as i128] {
                for x in [r, -r] {
                    if x * x * x - a1 * x * x + a2 * x - a3 == 0 {
                        return true;
                    }
                }
            }
        }
        k += 1;
    }
    false
}

type M3 = [[i128; 3]; 3];

fn mat_mul(x: &M3, y: &M3) -> M3 {
    let mut r = [[0i128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                r[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    r
}

fn char_poly(b: &M3) -> (i128, i128, i128) {
    let t = b[0][0] + b[1][1] + b[2][2];
    let s = b[0][0] * b[1][1] - b[0][1] * b[1][0] + b[0][0] * b[2][2] - b[0][2] * b[2][0] + b[1][1] * b[2][2]
        - b[1][2] * b[2][1];
    let n = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    (t, s, n)
}

fn integral_over(m: i128, (t, s, n): (i128, i128, i128)) -> bool {
    t % m == 0 && s % (m * m) == 0 && n % (m * m * m) == 0
}

/// Index of Z[alpha] in the maximal order, alpha a root of x^3 - a1 x^2 + a2 x - a3.
pub fn index_of_order(a1: i128, a2: i128, a3: i128) -> i128 {
    let d = poly_disc(a1, a2, a3).abs();
    // Multiplication by alpha on the basis (1, alpha, alpha^2), columns = images.
    let m: M3 = [[0, 0, a3], [1, 0, -a2], [0, 1, a1]];
    let m2 = mat_mul(&m, &m);
    let id: M3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let cands: Vec<i128> = (1..).take_while(|k: &i128| k * k <= d).filter(|k| d % (k * k) == 0).collect();
    let mut best1 = 1;
    for &k in cands.iter().rev() {
        let found = (0..k).any(|u| {
            let mut b = m;
            for i in 0..3 {
                b[i][i] += u;
            }
            integral_over(k, char_poly(&b))
        });
        if found {
            best1 = k;
            break;
        }
    }
    let mut best2 = 1;
    for &k in cands.iter().rev() {
        if k == 1 {
            break;
        }
        let mut found = false;
        'outer: for v in 0..k {
            for w in 0..k {
                let mut b = [[0i128; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        b[i][j] = m2[i][j] + v * m[i][j] + w * id[i][j];
                    }
                }
                if integral_over(k, char_poly(&b)) {
                    found = true;
                    break 'outer;
                }
            }
        }
        if found {
            best2 = k;
            break;
        }
    }
    best1 * best2
}

fn roots_mod(a1: i128, a2: i128, a3: i128, p: i128) -> usize {
    (0..p)
        .filter(|&x| (x * x * x - a1 * x * x + a2 * x - a3).rem_euclid(p) == 0)
        .count()
}

const FIRST_PRIMES: [i128; 60] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251, 257, 263, 269, 271, 277, 281,
];

fn same_field(g: (i128, i128, i128), h: (i128, i128, i128)) -> bool {
    let dd = poly_disc(g.0, g.1, g.2) * poly_disc(h.0, h.1, h.2);
    FIRST_PRIMES
        .iter()
        .filter(|&&p| dd % p != 0)
        .take(25)
        .all(|&p| roots_mod(g.0, g.1, g.2, p) == roots_mod(h.0, h.1, h.2, p))
}

/// Sorted field discriminants (with multiplicity) of non-Galois cubic fields
/// with `0 < sign * D <= bound`.
pub fn oracle_discriminants(bound: i64, positive: bool) -> Vec<i64> {
    let bf = bound as f64;
    let mut classes: BTreeMap<i64, Vec<(i128, i128, i128)>> = BTreeMap::new();
    for a1 in 0..=1i128 {
        let t2 = (a1 * a1) as f64 / 3.0 + 2.0 / 3.0 * bf.sqrt();
        let a2_max = ((a1 * a1) as f64 + t2) / 2.0;
        let a3_max = (t2 / 3.0).powf(1.5);
        let a2_lo = -(a2_max.floor() as i128);
        let a2_hi = a2_max.floor() as i128;
        let a3_hi = a3_max.floor() as i128;
        for a2 in a2_lo..=a2_hi {
            for a3 in -a3_hi..=a3_hi {
                let d = poly_disc(a1, a2, a3);
                if d == 0 || (d > 0) != positive {
                    continue;
                }
                if has_rational_root(a1, a2, a3) {
                    continue;
                }
                let i = index_of_order(a1, a2, a3);
                let dk = d / (i * i);
                if dk.abs() > bound as i128 {
                    continue;
                }
                let r = (dk.unsigned_abs() as f64).sqrt().round() as i128;
                if dk > 0 && r * r == dk {
                    continue;
                }
                let list = classes.entry(dk as i64).or_default();
                if !list.iter().any(|&h| same_field((a1, a2, a3), h)) {
                    list.push((a1, a2, a3));
                }
            }
        }
    }
    let mut out: Vec<i64> = Vec::new();
    for (d, list) in classes {
        out.extend(std::iter::repeat(d).take(list.len()));
    }
    out.sort_by_key(|d| d.abs());
    out
}
