//! Prime sieves: a plain sieve for small bounds and a segmented sieve that
//! streams primes in increasing order without holding the full range.

/// All primes `<= n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::with_capacity(if n > 10 { (n as f64 / (n as f64).ln() * 1.3) as usize } else { 4 });
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Streams the primes in `[2, limit]` one segment at a time.
pub struct SegmentedSieve {
    base: Vec<u64>,
    limit: u64,
    lo: u64,
    segment: usize,
    buf: Vec<u64>,
    pos: usize,
}

impl SegmentedSieve {
    pub fn new(limit: u64) -> Self {
        let root = (limit as f64).sqrt() as u64 + 2;
        SegmentedSieve {
            base: primes_up_to(root),
            limit,
            lo: 2,
            segment: 1 << 18,
            buf: Vec::new(),
            pos: 0,
        }
    }

    fn refill(&mut self) -> bool {
        self.buf.clear();
        self.pos = 0;
        while self.buf.is_empty() {
            if self.lo > self.limit {
                return false;
            }
            let hi = (self.lo + self.segment as u64 - 1).min(self.limit);
            let len = (hi - self.lo + 1) as usize;
            let mut composite = vec![false; len];
            for &p in &self.base {
                if p * p > hi {
                    break;
                }
                let start = ((self.lo + p - 1) / p * p).max(p * p);
                let mut j = start;
                while j <= hi {
                    composite[(j - self.lo) as usize] = true;
                    j += p;
                }
            }
            for (i, c) in composite.iter().enumerate() {
                if !c {
                    self.buf.push(self.lo + i as u64);
                }
            }
            self.lo = hi + 1;
        }
        true
    }
}

impl Iterator for SegmentedSieve {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        if self.pos >= self.buf.len() && !self.refill() {
            return None;
        }
        let p = self.buf[self.pos];
        self.pos += 1;
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmented_matches_plain() {
        let a = primes_up_to(1_000_003);
        let b: Vec<u64> = SegmentedSieve::new(1_000_003).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 78_499);
    }

    #[test]
    fn small_cases() {
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(13), vec![2, 3, 5, 7, 11, 13]);
        assert!(is_prime(9973) && !is_prime(9971));
    }
}
