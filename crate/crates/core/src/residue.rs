//! Modular arithmetic on residues below 2^64: inverses, CRT data for `q = q0*q1`,
//! primitive roots, discrete logarithms and tables of additive characters.
//!
//! All products go through 128-bit intermediates, so any modulus that fits a
//! `u64` is safe.

use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResidueError {
    #[error("{a} is not invertible modulo {q}")]
    NotInvertible { a: u64, q: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime factors must be distinct, got {0} twice")]
    EqualFactors(u64),
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("modulus {q0}*{q1} does not fit in 64 bits")]
    Overflow { q0: u64, q1: u64 },
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    let (a, b) = (a % q, b % q);
    if a >= b {
        a - b
    } else {
        q - (b - a)
    }
}

/// Reduces a signed integer into `[0, q)`.
#[inline]
pub fn reduce_signed(a: i128, q: u64) -> u64 {
    a.rem_euclid(q as i128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `q` by the extended Euclidean algorithm.
///
/// `a` is reduced modulo `q` first; modulo 1 every residue is its own inverse.
pub fn mod_inverse(a: u64, q: u64) -> Result<u64, ResidueError> {
    if q == 0 {
        return Err(ResidueError::ZeroModulus);
    }
    if q == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = ((a % q) as i128, q as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return Err(ResidueError::NotInvertible { a, q });
    }
    Ok(reduce_signed(old_s, q))
}

/// Deterministic Miller–Rabin; the first twelve primes as witnesses are
/// sufficient for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> u64 {
    let mut m = n.max(2);
    while !is_prime(m) {
        m += 1;
    }
    m
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Smallest generator of `(Z/pZ)^×`.
pub fn primitive_root(p: u64) -> Result<u64, ResidueError> {
    if !is_prime(p) {
        return Err(ResidueError::NotPrime(p));
    }
    if p == 2 {
        return Ok(1);
    }
    let prime_divisors: Vec<u64> = factorize(p - 1).into_iter().map(|(r, _)| r).collect();
    let g = (2..p)
        .find(|&g| prime_divisors.iter().all(|&r| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("a prime always has a primitive root");
    Ok(g)
}

/// `q = q0*q1` with distinct primes and the two cross inverses used throughout
/// the CRT bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactoredModulus {
    q0: u64,
    q1: u64,
    q: u64,
    /// q1^{-1} mod q0
    inv_q1_mod_q0: u64,
    /// q0^{-1} mod q1
    inv_q0_mod_q1: u64,
}

impl FactoredModulus {
    pub fn new(q0: u64, q1: u64) -> Result<Self, ResidueError> {
        for p in [q0, q1] {
            if !is_prime(p) {
                return Err(ResidueError::NotPrime(p));
            }
        }
        if q0 == q1 {
            return Err(ResidueError::EqualFactors(q0));
        }
        let q = q0.checked_mul(q1).ok_or(ResidueError::Overflow { q0, q1 })?;
        Ok(Self {
            q0,
            q1,
            q,
            inv_q1_mod_q0: mod_inverse(q1 % q0, q0)?,
            inv_q0_mod_q1: mod_inverse(q0 % q1, q1)?,
        })
    }

    pub fn q0(&self) -> u64 {
        self.q0
    }

    pub fn q1(&self) -> u64 {
        self.q1
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn inv_q1_mod_q0(&self) -> u64 {
        self.inv_q1_mod_q0
    }

    pub fn inv_q0_mod_q1(&self) -> u64 {
        self.inv_q0_mod_q1
    }

    /// The unique residue mod `q` congruent to `r0` mod `q0` and `r1` mod `q1`.
    pub fn crt_combine(&self, r0: u64, r1: u64) -> u64 {
        // x = r0 + q0 * ((r1 - r0) * q0^{-1} mod q1)
        let t = mul_mod(sub_mod(r1, r0 % self.q1, self.q1), self.inv_q0_mod_q1, self.q1);
        (r0 % self.q0) + self.q0 * t
    }

    pub fn split(&self, x: u64) -> (u64, u64) {
        (x % self.q0, x % self.q1)
    }
}

/// Free-function form of [`FactoredModulus::crt_combine`].
pub fn crt_combine(r0: u64, r1: u64, m: &FactoredModulus) -> u64 {
    m.crt_combine(r0, r1)
}

/// `exp(2 pi i x / q)` for an arbitrary integer numerator.
#[inline]
pub fn unit_root(x: i128, q: u64) -> Complex64 {
    let r = reduce_signed(x, q);
    let (s, c) = (TAU * r as f64 / q as f64).sin_cos();
    Complex64::new(c, s)
}

/// Table of `e_q(x) = exp(2 pi i x/q)` for `x` in `[0, q)`.
#[derive(Debug, Clone)]
pub struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Result<Self, ResidueError> {
        if q == 0 {
            return Err(ResidueError::ZeroModulus);
        }
        let roots = (0..q).map(|x| unit_root(x as i128, q)).collect();
        Ok(Self { q, roots })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// `e_q(x)` for any `x`, reduced mod `q`.
    #[inline]
    pub fn e(&self, x: u64) -> Complex64 {
        self.roots[(x % self.q) as usize]
    }

    #[inline]
    pub fn e_signed(&self, x: i128) -> Complex64 {
        self.roots[reduce_signed(x, self.q) as usize]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.roots
    }
}

/// Discrete logarithm tables for a prime modulus, relative to its smallest
/// primitive root.
#[derive(Debug, Clone)]
pub struct DiscreteLog {
    p: u64,
    generator: u64,
    /// `powers[t] = g^t`, `t` in `[0, p-1)`
    powers: Vec<u64>,
    /// `logs[x] = t` with `g^t = x`; `logs[0]` is unused
    logs: Vec<u32>,
}

impl DiscreteLog {
    pub fn new(p: u64) -> Result<Self, ResidueError> {
        let g = primitive_root(p)?;
        let order = (p - 1) as usize;
        let mut powers = Vec::with_capacity(order);
        let mut logs = vec![0u32; p as usize];
        let mut x = 1u64;
        for t in 0..order {
            powers.push(x);
            logs[x as usize] = t as u32;
            x = mul_mod(x, g, p);
        }
        Ok(Self {
            p,
            generator: g,
            powers,
            logs,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// `g^t`, with `t` reduced mod `p-1`.
    #[inline]
    pub fn pow(&self, t: usize) -> u64 {
        self.powers[t % self.powers.len()]
    }

    /// Discrete log of a unit; `None` for multiples of `p`.
    #[inline]
    pub fn log(&self, x: u64) -> Option<usize> {
        let x = x % self.p;
        (x != 0).then(|| self.logs[x as usize] as usize)
    }

    pub fn group_order(&self) -> usize {
        self.powers.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(1, 7), Ok(1));
        assert_eq!(mod_inverse(2, 5), Ok(3));
        assert_eq!(
            mod_inverse(2, 4),
            Err(ResidueError::NotInvertible { a: 2, q: 4 })
        );
    }

    #[test]
    fn inverse_random_units() {
        let mut rng = crate::rng::XorShift64::new(17);
        let mut checked = 0;
        while checked < 1000 {
            let q = 2 + rng.below(1_000_000 - 1);
            let a = rng.below(q);
            if gcd(a, q) != 1 {
                continue;
            }
            let b = mod_inverse(a, q).unwrap();
            assert_eq!(mul_mod(a, b, q), 1 % q);
            checked += 1;
        }
    }

    #[test]
    fn crt_examples_and_bijection() {
        let m = FactoredModulus::new(3, 5).unwrap();
        assert_eq!(m.crt_combine(0, 0), 0);
        assert_eq!(m.crt_combine(2, 3), 8);
        assert_eq!(m.crt_combine(1, 1), 1);
        let mut seen = [false; 15];
        for r0 in 0..3 {
            for r1 in 0..5 {
                let x = m.crt_combine(r0, r1);
                assert_eq!(m.split(x), (r0, r1));
                assert!(!seen[x as usize]);
                seen[x as usize] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn factored_modulus_rejects_bad_input() {
        assert_eq!(FactoredModulus::new(4, 5), Err(ResidueError::NotPrime(4)));
        assert_eq!(FactoredModulus::new(7, 7), Err(ResidueError::EqualFactors(7)));
        let m = FactoredModulus::new(2063, 47).unwrap();
        assert_eq!(mul_mod(m.q1(), m.inv_q1_mod_q0(), m.q0()), 1);
        assert_eq!(mul_mod(m.q0(), m.inv_q0_mod_q1(), m.q1()), 1);
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(primitive_root(2), Ok(1));
        assert_eq!(primitive_root(5), Ok(2));
        assert_eq!(primitive_root(7), Ok(3));
        assert_eq!(primitive_root(8), Err(ResidueError::NotPrime(8)));
        // exhaustive order check for small primes
        for p in (3..400u64).filter(|&p| is_prime(p)) {
            let g = primitive_root(p).unwrap();
            let order = (1..p).find(|&k| pow_mod(g, k, p) == 1).unwrap();
            assert_eq!(order, p - 1);
            // nothing smaller generates
            for h in 2..g {
                let o = (1..p).find(|&k| pow_mod(h, k, p) == 1).unwrap();
                assert!(o < p - 1);
            }
        }
    }

    #[test]
    fn miller_rabin_against_sieve() {
        let n = 20_000usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..n {
            if sieve[i] {
                for j in (i * i..n).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for (i, &s) in sieve.iter().enumerate() {
            assert_eq!(is_prime(i as u64), s, "{i}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn root_table_group_law() {
        for q in [1u64, 2, 3, 7, 60, 97, 1000] {
            let t = RootTable::new(q).unwrap();
            for x in 0..q {
                assert!((t.e(x).norm() - 1.0).abs() < 1e-12);
            }
            let step = if q > 200 { 7 } else { 1 };
            for x in (0..q).step_by(step) {
                for y in 0..q {
                    let d = t.e(x) * t.e(y) - t.e(x + y);
                    assert!(d.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn discrete_log_round_trip() {
        let dl = DiscreteLog::new(101).unwrap();
        assert_eq!(dl.generator(), 2);
        for x in 1..101 {
            assert_eq!(dl.pow(dl.log(x).unwrap()), x);
        }
        assert_eq!(dl.log(0), None);
    }
}
