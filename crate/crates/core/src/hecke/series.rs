//! Exact integer power series truncated at a fixed length.
//!
//! Products are schoolbook for short or sparse operands and otherwise go
//! through number-theoretic transforms modulo several primes `c*2^k + 1`
//! below `2^31`, recombined with Garner's algorithm. The number of primes is
//! chosen from the a-priori bound `|c_n| <= (n+1) max|a| max|b|`, so the
//! recombination is always exact.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::residue::{is_prime, mod_inverse, pow_mod, primitive_root};

/// Largest supported transform length (products of series up to 2^22 terms).
pub const MAX_NTT_LOG2: u32 = 23;

/// Below this operand length products are schoolbook.
const SCHOOLBOOK_LEN: usize = 1024;

/// Coefficient storage: machine integers while they fit, big integers after.
#[derive(Debug, Clone, PartialEq)]
pub enum IntSeq {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

impl IntSeq {
    pub fn len(&self) -> usize {
        match self {
            IntSeq::Small(v) => v.len(),
            IntSeq::Big(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> BigInt {
        match self {
            IntSeq::Small(v) => BigInt::from(v[i]),
            IntSeq::Big(v) => v[i].clone(),
        }
    }

    pub fn get_i128(&self, i: usize) -> Option<i128> {
        match self {
            IntSeq::Small(v) => Some(v[i]),
            IntSeq::Big(v) => v[i].to_i128(),
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            IntSeq::Small(v) => v[i] as f64,
            IntSeq::Big(v) => v[i].to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn to_bigints(&self) -> Vec<BigInt> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Uses machine integers when every entry fits.
    pub fn from_bigints(v: Vec<BigInt>) -> Self {
        let small: Option<Vec<i128>> = v.iter().map(|x| x.to_i128()).collect();
        match small {
            Some(s) => IntSeq::Small(s),
            None => IntSeq::Big(v),
        }
    }

    /// Bit length of the largest magnitude.
    pub fn max_bits(&self) -> u64 {
        match self {
            IntSeq::Small(v) => v
                .iter()
                .map(|x| 128 - x.unsigned_abs().leading_zeros() as u64)
                .max()
                .unwrap_or(0),
            IntSeq::Big(v) => v.iter().map(|x| x.bits()).max().unwrap_or(0),
        }
    }

    fn nonzero_count(&self) -> usize {
        match self {
            IntSeq::Small(v) => v.iter().filter(|x| **x != 0).count(),
            IntSeq::Big(v) => v.iter().filter(|x| !x.is_zero()).count(),
        }
    }

    fn residues(&self, p: u64) -> Vec<u64> {
        match self {
            IntSeq::Small(v) => v
                .iter()
                .map(|x| x.rem_euclid(p as i128) as u64)
                .collect(),
            IntSeq::Big(v) => {
                let pb = BigInt::from(p);
                v.iter()
                    .map(|x| x.mod_floor(&pb).to_u64().expect("reduced"))
                    .collect()
            }
        }
    }

    /// `(offset + i, value)` pairs of nonzero entries.
    fn sparse(&self) -> Vec<(usize, BigInt)> {
        (0..self.len())
            .filter_map(|i| {
                let x = self.get(i);
                (!x.is_zero()).then_some((i, x))
            })
            .collect()
    }
}

/// Coefficients of `prod_{n>=1} (1 - x^n)` below `len`, from the pentagonal
/// number theorem.
pub fn euler_product(len: usize) -> IntSeq {
    let mut v = vec![0i128; len];
    if len == 0 {
        return IntSeq::Small(v);
    }
    v[0] = 1;
    let mut k: i128 = 1;
    loop {
        let sign = if k % 2 == 1 { -1 } else { 1 };
        let g1 = (k * (3 * k - 1) / 2) as usize;
        let g2 = (k * (3 * k + 1) / 2) as usize;
        if g1 >= len {
            break;
        }
        v[g1] = sign;
        if g2 < len {
            v[g2] = sign;
        }
        k += 1;
    }
    IntSeq::Small(v)
}

/// Product of two series truncated to `len` terms.
pub fn multiply(a: &IntSeq, b: &IntSeq, len: usize) -> IntSeq {
    let bound_bits = a.max_bits() + b.max_bits() + (usize::BITS - len.leading_zeros()) as u64;
    let small = a.len().min(b.len()) <= SCHOOLBOOK_LEN
        || a.nonzero_count().min(b.nonzero_count()) <= SCHOOLBOOK_LEN / 8;
    if small || (2 * len).next_power_of_two() > 1 << MAX_NTT_LOG2 {
        schoolbook(a, b, len, bound_bits)
    } else {
        ntt_multiply(a, b, len, bound_bits)
    }
}

fn schoolbook(a: &IntSeq, b: &IntSeq, len: usize, bound_bits: u64) -> IntSeq {
    let (x, y) = if a.nonzero_count() <= b.nonzero_count() {
        (a, b)
    } else {
        (b, a)
    };
    let sparse = x.sparse();
    if bound_bits < 126 {
        let yv: Vec<i128> = (0..y.len()).map(|i| y.get_i128(i).unwrap()).collect();
        let mut out = vec![0i128; len];
        for (i, c) in &sparse {
            let c = c.to_i128().unwrap();
            for (j, &d) in yv.iter().enumerate().take(len.saturating_sub(*i)) {
                out[i + j] += c * d;
            }
        }
        IntSeq::Small(out)
    } else {
        let yv = y.to_bigints();
        let mut out = vec![BigInt::zero(); len];
        for (i, c) in &sparse {
            for (j, d) in yv.iter().enumerate().take(len.saturating_sub(*i)) {
                if !d.is_zero() {
                    out[i + j] += c * d;
                }
            }
        }
        IntSeq::from_bigints(out)
    }
}

/// NTT-friendly primes `c*2^23 + 1` in `(2^29, 2^31)`, largest first, with a generator.
fn ntt_primes() -> &'static [(u64, u64)] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<(u64, u64)>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::new();
        let mut c = ((1u64 << 31) - 2) >> MAX_NTT_LOG2;
        while c >= 64 {
            let p = (c << MAX_NTT_LOG2) + 1;
            if is_prime(p) {
                out.push((p, primitive_root(p).expect("prime")));
            }
            c -= 1;
        }
        out
    })
}

fn ntt(a: &mut [u64], p: u64, g: u64, invert: bool) {
    let n = a.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(g, (p - 1) / len as u64, p);
        if invert {
            w = mod_inverse(w, p).expect("unit");
        }
        let half = len / 2;
        let mut tw = Vec::with_capacity(half);
        let mut cur = 1u64;
        for _ in 0..half {
            tw.push(cur);
            cur = cur * w % p;
        }
        for chunk in a.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let u = lo[k];
                let v = hi[k] * tw[k] % p;
                lo[k] = if u + v >= p { u + v - p } else { u + v };
                hi[k] = if u >= v { u - v } else { u + p - v };
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = mod_inverse(n as u64 % p, p).expect("unit");
        for x in a.iter_mut() {
            *x = *x * inv_n % p;
        }
    }
}

fn ntt_multiply(a: &IntSeq, b: &IntSeq, len: usize, bound_bits: u64) -> IntSeq {
    let size = (a.len().min(len) + b.len().min(len)).next_power_of_two();
    // need prod(p) > 2 * bound; every prime exceeds 2^29
    let primes = ntt_primes();
    let count = ((bound_bits + 2) as usize).div_ceil(29);
    assert!(count <= primes.len(), "coefficient bound too large for the prime set");
    let primes = &primes[..count];
    let residues: Vec<Vec<u64>> = primes
        .par_iter()
        .map(|&(p, g)| {
            let mut fa = a.residues(p);
            fa.truncate(len);
            fa.resize(size, 0);
            let mut fb = b.residues(p);
            fb.truncate(len);
            fb.resize(size, 0);
            ntt(&mut fa, p, g, false);
            ntt(&mut fb, p, g, false);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = *x * y % p;
            }
            ntt(&mut fa, p, g, true);
            fa.truncate(len);
            fa
        })
        .collect();
    garner(&residues, primes, len)
}

/// Symmetric CRT reconstruction from residues modulo the given primes.
fn garner(residues: &[Vec<u64>], primes: &[(u64, u64)], len: usize) -> IntSeq {
    let k = primes.len();
    let ps: Vec<u64> = primes.iter().map(|&(p, _)| p).collect();
    // inv[i][j] = p_i^{-1} mod p_j for i < j
    let mut inv = vec![vec![0u64; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            inv[i][j] = mod_inverse(ps[i] % ps[j], ps[j]).expect("distinct primes");
        }
    }
    let digits = |n: usize| -> Vec<u64> {
        let mut v: Vec<u64> = (0..k).map(|i| residues[i][n]).collect();
        for i in 0..k {
            for j in i + 1..k {
                let diff = (v[j] + ps[j] - v[i] % ps[j]) % ps[j];
                v[j] = diff * inv[i][j] % ps[j];
            }
        }
        v
    };
    if k <= 4 {
        let modulus: u128 = ps.iter().map(|&p| p as u128).product();
        let half = modulus / 2;
        let out: Vec<i128> = (0..len)
            .into_par_iter()
            .map(|n| {
                let d = digits(n);
                let mut x: u128 = 0;
                for i in (0..k).rev() {
                    x = x * ps[i] as u128 + d[i] as u128;
                }
                if x > half {
                    -((modulus - x) as i128)
                } else {
                    x as i128
                }
            })
            .collect();
        IntSeq::Small(out)
    } else {
        let modulus: BigUint = ps.iter().map(|&p| BigUint::from(p)).product();
        let half = &modulus >> 1;
        let out: Vec<BigInt> = (0..len)
            .into_par_iter()
            .map(|n| {
                let d = digits(n);
                let mut x = BigUint::zero();
                for i in (0..k).rev() {
                    x = x * ps[i] + d[i];
                }
                if x > half {
                    BigInt::from_biguint(Sign::Minus, &modulus - x)
                } else {
                    BigInt::from_biguint(Sign::Plus, x)
                }
            })
            .collect();
        IntSeq::from_bigints(out)
    }
}

/// `a^e` truncated to `len` terms by repeated squaring.
pub fn power(a: &IntSeq, mut e: u32, len: usize) -> IntSeq {
    let mut result = {
        let mut v = vec![0i128; len];
        if len > 0 {
            v[0] = 1;
        }
        IntSeq::Small(v)
    };
    let mut base = a.clone();
    let mut first = true;
    while e > 0 {
        if e & 1 == 1 {
            result = if first {
                base.clone()
            } else {
                multiply(&result, &base, len)
            };
            first = false;
        }
        e >>= 1;
        if e > 0 {
            base = multiply(&base, &base, len);
        }
    }
    result
}

/// `sum_{d | n} d^j` for `n < len` (entry 0 is 0).
pub fn sigma_table(j: u32, len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for d in 1..len {
        let dj = BigInt::from(d).pow(j);
        for m in (d..len).step_by(d) {
            out[m] += &dj;
        }
    }
    out
}

/// `1 + c * sum_{n>=1} sigma_j(n) x^n` truncated to `len` terms.
pub fn eisenstein(c: i64, j: u32, len: usize) -> IntSeq {
    let mut s = sigma_table(j, len);
    if len > 0 {
        s[0] = BigInt::from(1);
    }
    for x in s.iter_mut().skip(1) {
        *x *= c;
    }
    IntSeq::from_bigints(s)
}
