//! Trace-function tables: periodic complex functions with modulus metadata,
//! hyper-Kloosterman sums, Fourier transforms and CRT products.

use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::fft::{cyclic_convolution, cyclic_convolution_direct, dft_direct, dft_fast, Sign};
use crate::pairwise;
use crate::residue::{
    gcd, mod_inverse, mul_mod, pow_mod, reduce_signed, unit_root, DiscreteLog, FactoredModulus,
    ResidueError, RootTable,
};

/// Moduli above this use the chirp transform; at or below, the direct sum.
pub const FAST_FT_THRESHOLD: u64 = 2048;

/// Primes above this tabulate Kl_d with the FFT convolution.
pub const FAST_KL_THRESHOLD: u64 = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("hyper-Kloosterman degree must be at least 1")]
    DegreeZero,
    #[error("moduli {0} and {1} are not coprime")]
    NonCoprimeModuli(u64, u64),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value of modulus {value} exceeds the declared sup-norm {hint}")]
    SupnormExceeded { value: f64, hint: f64 },
    #[error("modulus mismatch: expected {expected}, got {got}")]
    ModulusMismatch { expected: u64, got: u64 },
    #[error("character index {j} out of range for modulus {q}")]
    CharacterIndex { j: u64, q: u64 },
    #[error(transparent)]
    Residue(#[from] ResidueError),
}

/// A `q`-periodic complex function stored as its values on `[0, q)`.
#[derive(Debug, Clone)]
pub struct TraceFunction {
    modulus: u64,
    values: Vec<Complex64>,
    label: String,
    supnorm_hint: Option<f64>,
    fourier_supnorm: OnceLock<f64>,
}

impl TraceFunction {
    pub fn new(
        modulus: u64,
        values: Vec<Complex64>,
        label: impl Into<String>,
        supnorm_hint: Option<f64>,
    ) -> Result<Self, TraceError> {
        if modulus == 0 {
            return Err(ResidueError::ZeroModulus.into());
        }
        if values.len() as u64 != modulus {
            return Err(TraceError::LengthMismatch {
                expected: modulus as usize,
                got: values.len(),
            });
        }
        if let Some(hint) = supnorm_hint {
            let value = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if value > hint + 1e-9 {
                return Err(TraceError::SupnormExceeded { value, hint });
            }
        }
        Ok(Self {
            modulus,
            values,
            label: label.into(),
            supnorm_hint,
            fourier_supnorm: OnceLock::new(),
        })
    }

    pub fn zero(q: u64) -> Self {
        Self::constant(q, Complex64::new(0.0, 0.0))
    }

    pub fn constant(q: u64, c: Complex64) -> Self {
        Self::new(q, vec![c; q as usize], format!("const({c}) mod {q}"), Some(c.norm()))
            .expect("constant table is valid")
    }

    /// Indicator of the single residue `x0`.
    pub fn delta(q: u64, x0: u64) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); q as usize];
        v[(x0 % q) as usize] = Complex64::new(1.0, 0.0);
        Self::new(q, v, format!("delta_{x0} mod {q}"), Some(1.0)).expect("valid table")
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn supnorm_hint(&self) -> Option<f64> {
        self.supnorm_hint
    }

    #[inline]
    pub fn at(&self, x: u64) -> Complex64 {
        self.values[(x % self.modulus) as usize]
    }

    #[inline]
    pub fn at_signed(&self, x: i128) -> Complex64 {
        self.values[reduce_signed(x, self.modulus) as usize]
    }

    pub fn supnorm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |K^(n)|`, computed on first use.
    pub fn fourier_supnorm(&self) -> f64 {
        *self
            .fourier_supnorm
            .get_or_init(|| fourier_transform(self).supnorm())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            modulus: self.modulus,
            values: self.values.iter().map(|z| z * c).collect(),
            label: format!("{c}*{}", self.label),
            supnorm_hint: self.supnorm_hint.map(|h| h * c.norm()),
            fourier_supnorm: OnceLock::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// `x -> e(a x / q)`.
pub fn additive_char(a: u64, q: u64) -> Result<TraceFunction, TraceError> {
    let roots = RootTable::new(q)?;
    let values = (0..q).map(|x| roots.e(mul_mod(a, x, q))).collect();
    TraceFunction::new(q, values, format!("e({a}x/{q})"), Some(1.0))
}

/// The character with `chi(g^t) = e(j t / (q-1))` for the smallest primitive
/// root `g`, and `chi(0) = 0`.
pub fn dirichlet_char(q: u64, j: u64) -> Result<TraceFunction, TraceError> {
    let dl = DiscreteLog::new(q)?;
    let order = q - 1;
    if j >= order.max(1) {
        return Err(TraceError::CharacterIndex { j, q });
    }
    let roots = RootTable::new(order.max(1))?;
    let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
    for t in 0..order {
        values[dl.pow(t as usize) as usize] = roots.e(mul_mod(j, t, order));
    }
    TraceFunction::new(q, values, format!("chi_{j} mod {q}"), Some(1.0))
}

/// Which convolution routine tabulates the Kl_d recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionPath {
    Direct,
    Fast,
}

/// `Kl_d(n; p)` for every residue `n`, normalized by `p^{-(d-1)/2}`.
///
/// Built from `Kl_1(n) = e(n/p)` by
/// `Kl_{d+1}(n) = p^{-1/2} sum_{y != 0} Kl_d(n/y) e(y/p)`, which on units is a
/// cyclic convolution of length `p-1` in discrete-log coordinates. At `n = 0`
/// the recursion gives `Kl_d(0) = (-1)^{d-1} p^{-(d-1)/2}`.
pub fn hyper_kloosterman(d: u32, p: u64) -> Result<TraceFunction, TraceError> {
    let path = if p > FAST_KL_THRESHOLD {
        ConvolutionPath::Fast
    } else {
        ConvolutionPath::Direct
    };
    hyper_kloosterman_with(d, p, path)
}

pub fn hyper_kloosterman_with(
    d: u32,
    p: u64,
    path: ConvolutionPath,
) -> Result<TraceFunction, TraceError> {
    if d == 0 {
        return Err(TraceError::DegreeZero);
    }
    let dl = DiscreteLog::new(p)?;
    let order = dl.group_order();
    let roots = RootTable::new(p)?;
    // e(g^t / p) in log coordinates
    let kernel: Vec<Complex64> = (0..order).map(|t| roots.e(dl.pow(t))).collect();
    let mut on_units = kernel.clone();
    let mut at_zero = Complex64::new(1.0, 0.0);
    let norm = 1.0 / (p as f64).sqrt();
    for _ in 1..d {
        let conv = match path {
            ConvolutionPath::Direct => cyclic_convolution_direct(&on_units, &kernel),
            ConvolutionPath::Fast => cyclic_convolution(&on_units, &kernel),
        };
        on_units = conv.into_iter().map(|z| z * norm).collect();
        at_zero *= -norm;
    }
    let mut values = vec![at_zero; p as usize];
    for (t, z) in on_units.into_iter().enumerate() {
        values[dl.pow(t) as usize] = z;
    }
    TraceFunction::new(p, values, format!("Kl{d} mod {p}"), Some(d as f64))
}

/// `Kl_d(n; q)` for an arbitrary modulus by running the same recursion over
/// the units mod `q` with direct sums. Quadratic in `q` per degree step.
pub fn hyper_kloosterman_units(d: u32, q: u64) -> Result<TraceFunction, TraceError> {
    if d == 0 {
        return Err(TraceError::DegreeZero);
    }
    let roots = RootTable::new(q)?;
    let units: Vec<(u64, u64)> = (0..q)
        .filter(|&y| gcd(y, q) == 1)
        .map(|y| (y, mod_inverse(y, q).expect("unit")))
        .collect();
    let norm = 1.0 / (q as f64).sqrt();
    let mut cur: Vec<Complex64> = roots.as_slice().to_vec();
    for _ in 1..d {
        let next: Vec<Complex64> = (0..q)
            .map(|n| {
                pairwise::sum_by(units.len(), |i| {
                    let (y, y_inv) = units[i];
                    cur[mul_mod(n, y_inv, q) as usize] * roots.e(y)
                }) * norm
            })
            .collect();
        cur = next;
    }
    TraceFunction::new(q, cur, format!("Kl{d} mod {q}"), None)
}

/// `Kl_d(n; q0 q1) = Kl_d(q1^{-d} n; q0) Kl_d(q0^{-d} n; q1)`, assembled from
/// the two prime-modulus tables.
pub fn hyper_kloosterman_composite(
    d: u32,
    m: &FactoredModulus,
) -> Result<TraceFunction, TraceError> {
    let k0 = hyper_kloosterman(d, m.q0())?;
    let k1 = hyper_kloosterman(d, m.q1())?;
    let t0 = pow_mod(m.inv_q1_mod_q0(), d as u64, m.q0());
    let t1 = pow_mod(m.inv_q0_mod_q1(), d as u64, m.q1());
    let values = (0..m.q())
        .map(|n| k0.at(mul_mod(t0, n, m.q0())) * k1.at(mul_mod(t1, n, m.q1())))
        .collect();
    TraceFunction::new(
        m.q(),
        values,
        format!("Kl{d} mod {}", m.q()),
        Some((d * d) as f64),
    )
}

/// Unnormalized `S(a, b; c) = sum_{x mod c, (x,c)=1} e((a x + b xbar)/c)`.
pub fn classical_kloosterman(a: i128, b: i128, c: u64) -> Complex64 {
    assert!(c >= 1, "modulus must be positive");
    if c == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let a = reduce_signed(a, c);
    let b = reduce_signed(b, c);
    let units: Vec<u64> = (1..c).filter(|&x| gcd(x, c) == 1).collect();
    pairwise::sum_by(units.len(), |i| {
        let x = units[i];
        let xi = mod_inverse(x, c).expect("unit");
        let arg = (mul_mod(a, x, c) as u128 + mul_mod(b, xi, c) as u128) % c as u128;
        unit_root(arg as i128, c)
    })
}

/// `K^(n) = q^{-1/2} sum_x K(x) e(n x / q)`, choosing the path by size.
pub fn fourier_transform(k: &TraceFunction) -> TraceFunction {
    if k.modulus() > FAST_FT_THRESHOLD {
        fourier_transform_fast(k)
    } else {
        fourier_transform_direct(k)
    }
}

pub fn fourier_transform_direct(k: &TraceFunction) -> TraceFunction {
    finish_transform(k, dft_direct(k.values(), Sign::Positive))
}

pub fn fourier_transform_fast(k: &TraceFunction) -> TraceFunction {
    finish_transform(k, dft_fast(k.values(), Sign::Positive))
}

fn finish_transform(k: &TraceFunction, raw: Vec<Complex64>) -> TraceFunction {
    let norm = 1.0 / (k.modulus() as f64).sqrt();
    let values = raw.into_iter().map(|z| z * norm).collect();
    TraceFunction::new(k.modulus(), values, format!("FT[{}]", k.label()), None)
        .expect("transform keeps the modulus")
}

/// `K(n) = K0(n mod q0) K1(n mod q1)` on `Z/q0q1`.
pub fn crt_product(k0: &TraceFunction, k1: &TraceFunction) -> Result<TraceFunction, TraceError> {
    let (q0, q1) = (k0.modulus(), k1.modulus());
    if gcd(q0, q1) != 1 {
        return Err(TraceError::NonCoprimeModuli(q0, q1));
    }
    let q = q0
        .checked_mul(q1)
        .ok_or(ResidueError::Overflow { q0, q1 })?;
    let values = (0..q).map(|n| k0.at(n % q0) * k1.at(n % q1)).collect();
    let hint = match (k0.supnorm_hint(), k1.supnorm_hint()) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    TraceFunction::new(q, values, format!("{}*{}", k0.label(), k1.label()), hint)
}

/// Largest deviation from `K^(b) = K0^(b/q1) K1^(b/q0)` over all `b mod q`.
pub fn verify_twisted_multiplicativity(
    k0: &TraceFunction,
    k1: &TraceFunction,
    m: &FactoredModulus,
) -> Result<f64, TraceError> {
    for (k, expected) in [(k0, m.q0()), (k1, m.q1())] {
        if k.modulus() != expected {
            return Err(TraceError::ModulusMismatch {
                expected,
                got: k.modulus(),
            });
        }
    }
    let full = fourier_transform(&crt_product(k0, k1)?);
    let h0 = fourier_transform(k0);
    let h1 = fourier_transform(k1);
    let err = (0..m.q())
        .map(|b| {
            let rhs = h0.at(mul_mod(m.inv_q1_mod_q0(), b, m.q0()))
                * h1.at(mul_mod(m.inv_q0_mod_q1(), b, m.q1()));
            (full.at(b) - rhs).norm()
        })
        .fold(0.0, f64::max);
    Ok(err)
}
