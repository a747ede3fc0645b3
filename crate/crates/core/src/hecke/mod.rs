//! Coefficients of level-1 holomorphic Hecke eigenforms, their symmetric
//! square lift, divisor functions and the Rankin–Selberg convolution.

pub mod gl3;
pub mod series;

use num_bigint::BigInt;
use thiserror::Error;

pub use gl3::{rankin_selberg_coefficient, sym_square_coefficients, GL3CoefficientTable};
use series::IntSeq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeckeError {
    #[error("no one-dimensional cusp space of weight {0} is supported")]
    UnsupportedWeight(u32),
    #[error("Hecke relation fails at n = {n} for weight {weight}")]
    HeckeRelationFailed { weight: u32, n: usize },
    #[error("source table has {have} coefficients, {need} required")]
    InsufficientSource { have: usize, need: usize },
    #[error("index {n} outside the table range 1..={max}")]
    OutOfRange { n: usize, max: usize },
    #[error("coefficient table is empty")]
    Empty,
}

/// Weights with a one-dimensional space of level-1 cusp forms.
pub const SUPPORTED_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// Exact coefficients `a(n)`, `1 <= n <= N`, of a normalized level-1
/// eigenform, with `lambda(n) = a(n) / n^{(k-1)/2}` alongside.
#[derive(Debug, Clone)]
pub struct GL2CoefficientTable {
    weight: u32,
    /// index 0 is unused and holds 0
    coeffs: IntSeq,
    lambda: Vec<f64>,
}

impl GL2CoefficientTable {
    /// Wraps exact coefficients (index 0 ignored) and checks every Hecke relation.
    pub fn from_coefficients(weight: u32, mut coeffs: IntSeq) -> Result<Self, HeckeError> {
        if coeffs.len() < 2 {
            return Err(HeckeError::Empty);
        }
        match &mut coeffs {
            IntSeq::Small(v) => v[0] = 0,
            IntSeq::Big(v) => v[0] = BigInt::from(0),
        }
        let half = (weight as f64 - 1.0) / 2.0;
        let lambda = (0..coeffs.len())
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    coeffs.get_f64(n) / (n as f64).powf(half)
                }
            })
            .collect();
        let table = Self {
            weight,
            coeffs,
            lambda,
        };
        table.verify_hecke()?;
        Ok(table)
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Largest index `N`.
    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coefficients(&self) -> &IntSeq {
        &self.coeffs
    }

    pub fn a(&self, n: usize) -> BigInt {
        self.coeffs.get(n)
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    /// `lambda(n)` indexed by `n`; entry 0 is 0.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Checks `a(1) = 1`, `a(m n) = a(m) a(n)` for coprime `m, n` and
    /// `a(p^{j+1}) = a(p) a(p^j) - p^{k-1} a(p^{j-1})`, exactly.
    ///
    /// Each `n` is split as `p^e * m` with `p` its smallest prime factor; these
    /// two checks over all `n <= N` imply every coprime product relation by
    /// induction on the number of prime factors.
    pub fn verify_hecke(&self) -> Result<(), HeckeError> {
        let n_max = self.len();
        let fail = |n| HeckeError::HeckeRelationFailed {
            weight: self.weight,
            n,
        };
        if self.coeffs.get_i128(1) != Some(1) {
            return Err(fail(1));
        }
        let spf = smallest_prime_factors(n_max);
        for n in 2..=n_max {
            let p = spf[n] as usize;
            let mut pe = p;
            while n % (pe * p) == 0 {
                pe *= p;
            }
            let ok = if pe != n {
                self.check_product(n, pe, n / pe)
            } else if pe == p {
                true
            } else {
                self.check_prime_power(p, pe)
            };
            if !ok {
                return Err(fail(n));
            }
        }
        Ok(())
    }

    fn check_product(&self, n: usize, a: usize, b: usize) -> bool {
        let c = &self.coeffs;
        if let (Some(x), Some(y), Some(z)) = (c.get_i128(a), c.get_i128(b), c.get_i128(n)) {
            if let Some(prod) = x.checked_mul(y) {
                return prod == z;
            }
        }
        c.get(a) * c.get(b) == c.get(n)
    }

    /// `a(p^{j+1}) = a(p) a(p^j) - p^{k-1} a(p^{j-1})` with `pe = p^{j+1}`.
    fn check_prime_power(&self, p: usize, pe: usize) -> bool {
        let c = &self.coeffs;
        let (prev, prev2) = (pe / p, pe / (p * p));
        let small = (|| {
            let pk = (p as i128).checked_pow(self.weight - 1)?;
            let lhs = c.get_i128(pe)?;
            let t1 = c.get_i128(p)?.checked_mul(c.get_i128(prev)?)?;
            let t2 = pk.checked_mul(c.get_i128(prev2)?)?;
            Some(lhs == t1.checked_sub(t2)?)
        })();
        if let Some(ok) = small {
            return ok;
        }
        let pk = BigInt::from(p).pow(self.weight - 1);
        c.get(pe) == c.get(p) * c.get(prev) - pk * c.get(prev2)
    }
}

/// Smallest prime factor of every `n <= n_max` (entries 0 and 1 are 0 and 1).
pub fn smallest_prime_factors(n_max: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n_max + 1];
    if n_max >= 1 {
        spf[1] = 1;
    }
    for i in 2..=n_max {
        if spf[i] == 0 {
            for j in (i..=n_max).step_by(i) {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
            }
        }
    }
    spf
}

/// Ramanujan's `tau(n)` for `n <= N`, from `Delta = x prod (1 - x^n)^24`.
pub fn delta_coefficients(n_max: usize) -> Result<GL2CoefficientTable, HeckeError> {
    GL2CoefficientTable::from_coefficients(12, delta_series(n_max))
}

/// `Delta` as a series with `N + 1` terms (index 0 is 0).
fn delta_series(n_max: usize) -> IntSeq {
    let len = n_max + 1;
    let p = series::euler_product(n_max);
    let p24 = series::power(&p, 24, n_max);
    shift_by_one(&p24, len)
}

fn shift_by_one(s: &IntSeq, len: usize) -> IntSeq {
    let mut v = vec![BigInt::from(0); len];
    for (i, slot) in v.iter_mut().enumerate().skip(1) {
        if i - 1 < s.len() {
            *slot = s.get(i - 1);
        }
    }
    IntSeq::from_bigints(v)
}

/// Eisenstein factor `E_{k-12}` as a product of `E_4` and `E_6`.
fn eisenstein_factor(weight: u32, len: usize) -> Result<Option<IntSeq>, HeckeError> {
    let e4 = || series::eisenstein(240, 3, len);
    let e6 = || series::eisenstein(-504, 5, len);
    let mul = |a: &IntSeq, b: &IntSeq| series::multiply(a, b, len);
    Ok(match weight {
        12 => None,
        16 => Some(e4()),
        18 => Some(e6()),
        20 => Some(mul(&e4(), &e4())),
        22 => Some(mul(&e4(), &e6())),
        26 => {
            let e4 = e4();
            Some(mul(&mul(&e4, &e4), &e6()))
        }
        w => return Err(HeckeError::UnsupportedWeight(w)),
    })
}

/// The normalized cusp form of weight `k`, built as `Delta * E_{k-12}`.
pub fn eigenform_coefficients(weight: u32, n_max: usize) -> Result<GL2CoefficientTable, HeckeError> {
    let len = n_max + 1;
    let factor = eisenstein_factor(weight, len)?;
    let delta = delta_series(n_max);
    let coeffs = match factor {
        None => delta,
        Some(e) => series::multiply(&delta, &e, len),
    };
    GL2CoefficientTable::from_coefficients(weight, coeffs)
}

/// Number of ordered `j`-tuples of positive integers with product `n`.
pub fn divisor_function(j: u32, n: u64) -> u64 {
    assert!(n >= 1, "n must be positive");
    crate::residue::factorize(n)
        .into_iter()
        .map(|(_, e)| binomial(e as u64 + j as u64 - 1, j as u64 - 1))
        .product()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
