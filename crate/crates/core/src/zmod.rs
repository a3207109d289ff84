//! Arithmetic in `Z/p^k` for small odd primes.
//!
//! Every value is kept reduced in `[0, p^k)`. Moduli stay far below `2^32`
//! so products fit in a `u64` without widening.

use serde::{Deserialize, Serialize};

/// The ring `Z/p^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Zpk {
    p: u64,
    k: u32,
    q: u64,
}

impl Zpk {
    pub fn new(p: u64, k: u32) -> Self {
        assert!(p >= 2 && k >= 1, "Z/p^k needs p >= 2 and k >= 1");
        let q = p.checked_pow(k).expect("modulus overflow");
        assert!(q < (1 << 31), "modulus {q} too large for u64 products");
        Zpk { p, k, q }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    /// The modulus `p^k`.
    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.q
    }

    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.q;
        a %= self.q;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// `p^e` reduced; zero once `e >= k`.
    pub fn p_pow(&self, e: u32) -> u64 {
        if e >= self.k {
            0
        } else {
            self.p.pow(e)
        }
    }

    /// p-adic valuation, with `val(0) = k`.
    pub fn val(&self, a: u64) -> u32 {
        if a == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut x = a;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, a: u64) -> bool {
        a % self.p != 0
    }

    /// Inverse of a unit.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if !self.is_unit(a) {
            return None;
        }
        // extended Euclid over i64
        let (mut r0, mut r1) = (self.q as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let qt = r0 / r1;
            (r0, r1) = (r1, r0 - qt * r1);
            (t0, t1) = (t1, t0 - qt * t1);
        }
        Some(self.from_i64(t0))
    }

    /// Writes a nonzero `a` as `p^v * u` and returns `(v, u)` with `u` a unit.
    pub fn split(&self, a: u64) -> (u32, u64) {
        let v = self.val(a);
        if v >= self.k {
            return (self.k, 0);
        }
        (v, a / self.p.pow(v))
    }

    /// Exact division `a / p^v`, valid when `val(a) >= v`. The quotient is only
    /// defined modulo `p^(k-v)`; the representative returned lies in `[0, p^(k-v))`.
    pub fn div_p_pow(&self, a: u64, v: u32) -> u64 {
        debug_assert!(self.val(a) >= v);
        a / self.p.pow(v)
    }

    /// Reduction map `Z/p^k -> Z/p^j` for `j <= k`.
    pub fn reduce_to(&self, a: u64, j: u32) -> u64 {
        a % self.p.pow(j)
    }

    pub fn with_k(&self, k: u32) -> Zpk {
        Zpk::new(self.p, k)
    }
}

/// Deterministic primality test for the small integers used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Returns `Some(e)` when `n = p^e`.
pub fn p_power_exponent(n: u64, p: u64) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let mut e = 0;
    let mut x = n;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    (x == 1).then_some(e)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}
