//! Complete exponential sums: Möbius-twisted correlations of Fourier
//! transforms, `L`-sums, the `Z(v)` transform and its shifted
//! autocorrelation, and the `M` / `FT` sums of the GL3 x GL2 argument.
//!
//! Residues are `u64` in `[0, q)`. Signs written `±` / `∓` in the formulas
//! are selected by [`PmSign`]: `Plus` picks the upper sign everywhere.

use num_complex::Complex64;
use thiserror::Error;

use crate::residue::{gcd, mod_inverse, mul_mod, reduce_signed, unit_root, RootTable};
use crate::trace::{
    classical_kloosterman, crt_product, fourier_transform, hyper_kloosterman, TraceError,
    TraceFunction,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{n1} does not divide {rc}")]
    DivisibilityViolated { n1: u64, rc: u64 },
    #[error("modulus mismatch: expected {expected}, got {got}")]
    ModulusMismatch { expected: u64, got: u64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

type Result<T> = std::result::Result<T, CorrelationError>;

/// Upper or lower choice in a `±` / `∓` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PmSign {
    Plus,
    Minus,
}

impl PmSign {
    pub fn value(self) -> i128 {
        match self {
            PmSign::Plus => 1,
            PmSign::Minus => -1,
        }
    }

    /// `x` for `Plus`, `-x mod q` for `Minus`.
    pub fn apply(self, x: u64, q: u64) -> u64 {
        match self {
            PmSign::Plus => x % q,
            PmSign::Minus => (q - x % q) % q,
        }
    }
}

fn inv(a: u64, q: u64) -> Result<u64> {
    mod_inverse(a % q, q).map_err(|e| CorrelationError::Trace(e.into()))
}

fn unit(a: u64, q: u64, what: &str) -> Result<u64> {
    inv(a, q).map_err(|_| CorrelationError::InvalidParams(format!("{what} = {a} is not a unit mod {q}")))
}

/// A point of `P^1(F_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectivePoint {
    Finite(u64),
    Infinity,
}

/// `[[a, b], [c, d]]` with unit determinant mod `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoebiusMatrix {
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    q: u64,
}

impl MoebiusMatrix {
    pub fn new(a: i128, b: i128, c: i128, d: i128, q: u64) -> Result<Self> {
        let m = Self {
            a: reduce_signed(a, q),
            b: reduce_signed(b, q),
            c: reduce_signed(c, q),
            d: reduce_signed(d, q),
            q,
        };
        if gcd(m.determinant(), q) != 1 {
            return Err(CorrelationError::InvalidParams(format!(
                "determinant of {:?} is not a unit mod {q}",
                m.entries()
            )));
        }
        Ok(m)
    }

    pub fn identity(q: u64) -> Self {
        Self { a: 1 % q, b: 0, c: 0, d: 1 % q, q }
    }

    pub fn entries(&self) -> [u64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn determinant(&self) -> u64 {
        let q = self.q;
        (mul_mod(self.a, self.d, q) + q - mul_mod(self.b, self.c, q)) % q
    }

    pub fn mul(&self, o: &Self) -> Self {
        let q = self.q;
        let f = |x: u64, y: u64, z: u64, w: u64| (mul_mod(x, y, q) + mul_mod(z, w, q)) % q;
        Self {
            a: f(self.a, o.a, self.b, o.c),
            b: f(self.a, o.b, self.b, o.d),
            c: f(self.c, o.a, self.d, o.c),
            d: f(self.c, o.b, self.d, o.d),
            q,
        }
    }

    /// `[[d, -b], [-c, a]]`, the inverse up to the determinant.
    pub fn adjugate(&self) -> Self {
        let q = self.q;
        Self {
            a: self.d,
            b: (q - self.b) % q,
            c: (q - self.c) % q,
            d: self.a,
            q,
        }
    }

    pub fn scaled(&self, s: u64) -> Self {
        let q = self.q;
        Self {
            a: mul_mod(self.a, s, q),
            b: mul_mod(self.b, s, q),
            c: mul_mod(self.c, s, q),
            d: mul_mod(self.d, s, q),
            q,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d
    }
}

/// `gamma . alpha = (a alpha + b) / (c alpha + d)` on `P^1(F_q)`.
pub fn moebius_act(g: &MoebiusMatrix, alpha: ProjectivePoint) -> ProjectivePoint {
    let q = g.q;
    let (num, den) = match alpha {
        ProjectivePoint::Finite(x) => (
            (mul_mod(g.a, x, q) + g.b) % q,
            (mul_mod(g.c, x, q) + g.d) % q,
        ),
        ProjectivePoint::Infinity => (g.a, g.c),
    };
    if den == 0 {
        ProjectivePoint::Infinity
    } else {
        let di = mod_inverse(den, q).expect("prime modulus");
        ProjectivePoint::Finite(mul_mod(num, di, q))
    }
}

/// Whether `g2 g1^{-1}` is scalar.
pub fn is_scalar_pair(g1: &MoebiusMatrix, g2: &MoebiusMatrix) -> bool {
    g2.mul(&g1.adjugate()).is_scalar()
}

/// A correlation value with the number of `alpha` skipped at poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: Complex64,
    pub skipped: usize,
}

fn check_modulus(k: &TraceFunction, q: u64) -> Result<()> {
    if k.modulus() != q {
        return Err(CorrelationError::ModulusMismatch {
            expected: q,
            got: k.modulus(),
        });
    }
    Ok(())
}

/// `q0^{-1/2} sum*_alpha Khat0(alpha) conj Khat0(gamma . alpha)`, skipping poles.
pub fn matrix_correlation(khat0: &TraceFunction, g: &MoebiusMatrix) -> Result<Correlation> {
    let q0 = g.modulus();
    check_modulus(khat0, q0)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut skipped = 0;
    for alpha in 1..q0 {
        match moebius_act(g, ProjectivePoint::Finite(alpha)) {
            ProjectivePoint::Finite(y) => acc += khat0.at(alpha) * khat0.at(y).conj(),
            ProjectivePoint::Infinity => skipped += 1,
        }
    }
    Ok(Correlation {
        value: acc / (q0 as f64).sqrt(),
        skipped,
    })
}

/// Parameters of the Möbius-twisted correlation sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationParams {
    pub r1: i64,
    pub r2: i64,
    pub p1: u64,
    pub p2: u64,
    pub n_tilde: i64,
    pub q1: u64,
    pub sign: PmSign,
}

impl CorrelationParams {
    fn validate(&self, q0: u64) -> Result<()> {
        for (name, v) in [
            ("r1", reduce_signed(self.r1 as i128, q0)),
            ("r2", reduce_signed(self.r2 as i128, q0)),
            ("p1", self.p1),
            ("p2", self.p2),
            ("q1", self.q1),
        ] {
            unit(v, q0, name)?;
        }
        Ok(())
    }

    /// `[[-q1, r1], [0, p1 q1]]`.
    pub fn gamma1(&self, q0: u64) -> Result<MoebiusMatrix> {
        self.validate(q0)?;
        let (q1, p1) = (self.q1 as i128, self.p1 as i128);
        MoebiusMatrix::new(-q1, self.r1 as i128, 0, p1 * q1, q0)
    }

    /// `[[∓ñ r2 - p1 q1, p2 r2], [∓ñ p2 q1, p2^2 q1]]`.
    pub fn gamma2(&self, q0: u64) -> Result<MoebiusMatrix> {
        self.validate(q0)?;
        let s = -self.sign.value();
        let q0i = q0 as i128;
        let (q1, p1, p2) = (self.q1 as i128, self.p1 as i128, self.p2 as i128);
        let n = (self.n_tilde as i128).rem_euclid(q0i);
        let r2 = (self.r2 as i128).rem_euclid(q0i);
        MoebiusMatrix::new(
            (s * n * r2 - p1 * q1).rem_euclid(q0i),
            p2 * r2 % q0i,
            (s * n * p2 % q0i * q1).rem_euclid(q0i),
            p2 * p2 % q0i * q1 % q0i,
            q0,
        )
    }
}

/// The defining `alpha`-sum
/// `q0^{-1/2} sum*_alpha Khat0((q1bar r1 - alpha) p1bar) conj Khat0((q1bar r2 - inv(alphabar p2 ∓ ñ) p1) p2bar)`;
/// `alpha` with `alphabar p2 ∓ ñ = 0` are skipped.
pub fn correlation_sum(khat0: &TraceFunction, params: &CorrelationParams) -> Result<Correlation> {
    let q0 = khat0.modulus();
    params.validate(q0)?;
    let q1b = inv(params.q1, q0)?;
    let p1b = inv(params.p1, q0)?;
    let p2b = inv(params.p2, q0)?;
    let r1 = reduce_signed(params.r1 as i128, q0);
    let r2 = reduce_signed(params.r2 as i128, q0);
    let shift = params.sign.apply(reduce_signed(params.n_tilde as i128, q0), q0);
    let a1 = mul_mod(q1b, r1, q0);
    let a2 = mul_mod(q1b, r2, q0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut skipped = 0;
    for alpha in 1..q0 {
        let ab = inv(alpha, q0)?;
        // alphabar p2 ∓ ñ
        let t = (mul_mod(ab, params.p2, q0) + q0 - shift) % q0;
        if t == 0 {
            skipped += 1;
            continue;
        }
        let x1 = mul_mod((a1 + q0 - alpha) % q0, p1b, q0);
        let it = inv(t, q0)?;
        let x2 = mul_mod((a2 + q0 - mul_mod(it, params.p1, q0)) % q0, p2b, q0);
        acc += khat0.at(x1) * khat0.at(x2).conj();
    }
    Ok(Correlation {
        value: acc / (q0 as f64).sqrt(),
        skipped,
    })
}

/// `q0^{-1/2} sum*_alpha Khat0(gamma1 . alpha) conj Khat0(gamma2 . alpha)`.
pub fn correlation_by_matrices(
    khat0: &TraceFunction,
    params: &CorrelationParams,
) -> Result<Correlation> {
    let q0 = khat0.modulus();
    let g1 = params.gamma1(q0)?;
    let g2 = params.gamma2(q0)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut skipped = 0;
    for alpha in 1..q0 {
        let a = ProjectivePoint::Finite(alpha);
        match (moebius_act(&g1, a), moebius_act(&g2, a)) {
            (ProjectivePoint::Finite(x), ProjectivePoint::Finite(y)) => {
                acc += khat0.at(x) * khat0.at(y).conj()
            }
            _ => skipped += 1,
        }
    }
    Ok(Correlation {
        value: acc / (q0 as f64).sqrt(),
        skipped,
    })
}

/// `L_{alpha,beta}(u; q) = q^{-1/2} sum_{(b + beta u, q) = 1} Khat(b) e(alpha inv(b + beta u) / q)`.
pub fn l_sum(khat: &TraceFunction, alpha: u64, beta: u64, u: u64) -> Complex64 {
    let q = khat.modulus();
    let shift = mul_mod(beta % q, u % q, q);
    let alpha = alpha % q;
    let mut acc = Complex64::new(0.0, 0.0);
    for b in 0..q {
        let t = (b + shift) % q;
        if let Ok(ti) = mod_inverse(t, q) {
            acc += khat.at(b) * unit_root(mul_mod(alpha, ti, q) as i128, q);
        }
    }
    acc / (q as f64).sqrt()
}

/// A table `Z(v)`, `v mod q0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    pub modulus: u64,
    pub values: Vec<Complex64>,
    /// number of `(x, v)` terms with `x v = 0`, which go through the `Kl_2(0)` convention
    pub zero_convention_terms: usize,
}

/// `Z(v) = q0^{-1/2} sum_{x in F^x} Kl_2(beta gamma x) K0(x v) Kl_2(alpha x v)`.
pub fn z_transform(k0: &TraceFunction, alpha: u64, beta: u64, gamma: u64) -> Result<ZTable> {
    z_table(k0, alpha, beta, gamma, 1)
}

/// [`z_transform`] with the `x = 0` term included.
pub fn z_transform_completed(
    k0: &TraceFunction,
    alpha: u64,
    beta: u64,
    gamma: u64,
) -> Result<ZTable> {
    z_table(k0, alpha, beta, gamma, 0)
}

fn z_table(k0: &TraceFunction, alpha: u64, beta: u64, gamma: u64, x_start: u64) -> Result<ZTable> {
    let q0 = k0.modulus();
    let kl2 = hyper_kloosterman(2, q0)?;
    let bg = mul_mod(beta % q0, gamma % q0, q0);
    let alpha = alpha % q0;
    let norm = 1.0 / (q0 as f64).sqrt();
    let values = (0..q0)
        .map(|v| {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in x_start..q0 {
                let xv = mul_mod(x, v, q0);
                acc += kl2.at(mul_mod(bg, x, q0)) * k0.at(xv) * kl2.at(mul_mod(alpha, xv, q0));
            }
            acc * norm
        })
        .collect();
    let zero_convention_terms = if x_start == 0 {
        2 * q0 as usize - 1
    } else {
        q0 as usize - 1
    };
    Ok(ZTable {
        modulus: q0,
        values,
        zero_convention_terms,
    })
}

/// `sum_v Z(v) conj Z'(v - delta)`.
pub fn zz_correlation(z: &ZTable, zp: &ZTable, delta: u64) -> Result<Complex64> {
    if z.modulus != zp.modulus {
        return Err(CorrelationError::ModulusMismatch {
            expected: z.modulus,
            got: zp.modulus,
        });
    }
    let q = z.modulus;
    let delta = delta % q;
    Ok((0..q)
        .map(|v| z.values[v as usize] * zp.values[((v + q - delta) % q) as usize].conj())
        .sum())
}

/// Both sides of the error-term character sum.
///
/// The routes agree for `n != 0 mod q0`. For `n = 0` the `x = 0` term of the
/// `x`-route goes through the convention for `Kl_2(0)` and the routes differ
/// by exactly `K0(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharErrorSum {
    /// `q0^{-1/2} sum_x K0(x) e(r q1bar x / q0) Kl_2(±n x; q0)`
    pub x_route: Complex64,
    /// `q0^{-1/2} sum*_alpha Khat0((r - alpha q1) q1bar) e(∓alphabar n / q0)`
    pub alpha_route: Complex64,
}

pub fn char_error_sum(
    k0: &TraceFunction,
    r: i64,
    n: i64,
    q1: u64,
    sign: PmSign,
) -> Result<CharErrorSum> {
    let q0 = k0.modulus();
    let q1b = unit(q1, q0, "q1")?;
    let r = reduce_signed(r as i128, q0);
    let n = sign.apply(reduce_signed(n as i128, q0), q0);
    let roots = RootTable::new(q0).map_err(TraceError::from)?;
    let kl2 = hyper_kloosterman(2, q0)?;
    let norm = 1.0 / (q0 as f64).sqrt();
    let rq = mul_mod(r, q1b, q0);
    let x_route: Complex64 = (0..q0)
        .map(|x| k0.at(x) * roots.e(mul_mod(rq, x, q0)) * kl2.at(mul_mod(n, x, q0)))
        .sum::<Complex64>()
        * norm;
    let khat = fourier_transform(k0);
    let alpha_route: Complex64 = (1..q0)
        .map(|alpha| {
            let arg = mul_mod((r + q0 - mul_mod(alpha, q1 % q0, q0)) % q0, q1b, q0);
            let ab = mod_inverse(alpha, q0).expect("prime modulus");
            khat.at(arg) * roots.e((q0 - mul_mod(ab, n, q0)) % q0)
        })
        .sum::<Complex64>()
        * norm;
    Ok(CharErrorSum {
        x_route,
        alpha_route,
    })
}

/// Moduli and signs shared by the `M` sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MSumParams {
    pub r: u64,
    pub n1: u64,
    pub q0: u64,
    pub q1: u64,
    pub sign: PmSign,
}

/// `M_{n1,r}(m, n; rc) = sum*_{u mod c} e(±inv(u q1^2) q0bar m / c) S(q0bar r ubar, ±q0bar n; rc/n1)`.
pub fn m_sum(m: i64, n: i64, c: u64, p: &MSumParams) -> Result<Complex64> {
    if c == 0 || p.r == 0 || p.n1 == 0 {
        return Err(CorrelationError::InvalidParams("c, r, n1 must be positive".into()));
    }
    let rc = p.r * c;
    if rc % p.n1 != 0 {
        return Err(CorrelationError::DivisibilityViolated { n1: p.n1, rc });
    }
    let modulus = rc / p.n1;
    if gcd(c, p.q0 * p.q1) != 1 || gcd(modulus, p.q0) != 1 {
        return Err(CorrelationError::InvalidParams(format!(
            "c = {c} and rc/n1 = {modulus} must be coprime to q0 q1"
        )));
    }
    let s = p.sign.value();
    let q0_c = if c == 1 { 0 } else { inv(p.q0, c)? };
    let q1sq_c = if c == 1 { 0 } else { inv(mul_mod(p.q1 % c, p.q1 % c, c), c)? };
    let q0_k = if modulus == 1 { 0 } else { inv(p.q0, modulus)? };
    let mut acc = Complex64::new(0.0, 0.0);
    for u in 0..c {
        if gcd(u, c) != 1 {
            continue;
        }
        let ub = if c == 1 { 0 } else { inv(u, c)? };
        // inv(u q1^2) q0bar m, modulo c
        let phase = mul_mod(mul_mod(ub, q1sq_c, c), q0_c, c) as i128 * m as i128 * s;
        let a = q0_k as i128 * ((p.r as i128 * ub as i128) % modulus as i128);
        let b = s * q0_k as i128 * n as i128;
        acc += unit_root(phase, c) * classical_kloosterman(a, b, modulus);
    }
    Ok(acc)
}

/// Parameters of the `k`-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSumParams {
    pub m: i64,
    pub m_prime: i64,
    pub c1: u64,
    pub c2: u64,
    pub c2_prime: u64,
    pub base: MSumParams,
}

impl KSumParams {
    /// `k = r c1 c2 c2' / n1`.
    pub fn k(&self) -> Result<u64> {
        let rc1 = self.base.r * self.c1;
        if self.base.n1 == 0 || rc1 % self.base.n1 != 0 {
            return Err(CorrelationError::DivisibilityViolated {
                n1: self.base.n1,
                rc: rc1,
            });
        }
        Ok(rc1 / self.base.n1 * self.c2 * self.c2_prime)
    }
}

/// `FT(n; k)` together with the divisor-sum right-hand side it is compared to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSum {
    pub k: u64,
    pub value: Complex64,
    pub bound: f64,
    pub within_bound: bool,
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).take_while(|d| d * d <= n).filter(|d| n % d == 0).collect();
    let large: Vec<u64> = out.iter().rev().map(|d| n / d).filter(|&e| e * e != n).collect();
    out.extend(large);
    out
}

fn gcd_signed(a: i128, b: u64) -> u64 {
    gcd(a.rem_euclid(b as i128) as u64, b)
}

/// `FT(n; k) = k^{-1/2} sum_{v mod k} M(m, v; r c1 c2) conj M(m', v; r c1 c2') e(n v q0bar / k)`.
pub fn ft_k_sum(n: i64, p: &KSumParams) -> Result<KSum> {
    let k = p.k()?;
    let c = p.c1 * p.c2;
    let cp = p.c1 * p.c2_prime;
    if gcd(k, p.base.q0) != 1 {
        return Err(CorrelationError::InvalidParams(format!("k = {k} is not coprime to q0")));
    }
    let q0b = if k == 1 { 0 } else { inv(p.base.q0, k)? };
    let roots = RootTable::new(k).map_err(TraceError::from)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for v in 0..k {
        let a = m_sum(p.m, v as i64, c, &p.base)?;
        let b = m_sum(p.m_prime, v as i64, cp, &p.base)?;
        let phase = mul_mod(reduce_signed(n as i128, k), mul_mod(v, q0b, k), k);
        acc += a * b.conj() * roots.e(phase);
    }
    let value = acc / (k as f64).sqrt();
    let bound = ft_bound(n, p, k);
    Ok(KSum {
        k,
        value,
        bound,
        within_bound: value.norm() <= bound * (1.0 + 1e-9) + 1e-9,
    })
}

/// Divisor-sum right-hand side for `FT(n; k)` with implied constant 1.
pub fn ft_bound(n: i64, p: &KSumParams, k: u64) -> f64 {
    let sk = (k as f64).sqrt();
    let base = &p.base;
    if n == 0 {
        let c = p.c1 * p.c2;
        let dm = p.m as i128 - p.m_prime as i128;
        let ds = divisors(c);
        let mut s = 0u64;
        for &d in &ds {
            for &dp in &ds {
                let g = gcd(d, dp);
                if dm.rem_euclid(g as i128) == 0 {
                    s += g;
                }
            }
        }
        return sk * (base.r * c) as f64 * s as f64;
    }
    let rc1 = base.r * p.c1 / base.n1;
    let q1sq_n1 = base.q1 as i128 * base.q1 as i128 * base.n1 as i128;
    let target = -base.sign.value() * p.m as i128;
    let mut s1 = 0.0;
    for &d1 in &divisors(p.c1) {
        let count = (0..rc1)
            .filter(|&x| gcd(x, rc1) == 1 && (q1sq_n1 * x as i128 - target).rem_euclid(d1 as i128) == 0)
            .count();
        for &d1p in &divisors(p.c1) {
            s1 += (d1 * d1p) as f64 * count as f64;
        }
    }
    let g2 = gcd_signed(q1sq_n1 * p.c2_prime as i128 + n as i128 * p.m as i128, p.c2);
    let g2p = gcd_signed(q1sq_n1 * p.c2 as i128 + n as i128 * p.m_prime as i128, p.c2_prime);
    let s2: u64 = divisors(g2).iter().sum::<u64>() * divisors(g2p).iter().sum::<u64>();
    sk * s1 * s2 as f64
}

/// Inputs of the `q0`-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtQ0Params {
    pub m: i64,
    pub m_prime: i64,
    pub c: u64,
    pub c_prime: u64,
    pub r: u64,
    pub n1: u64,
    /// the shift `kbar n mod q0`, taken as a free input
    pub delta: u64,
    pub sign: PmSign,
}

/// The two evaluations of the `q0`-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtQ0Routes {
    /// triple `(u, u', v)` sum with `L`-sums over the full modulus `q`
    pub route_a: Complex64,
    /// `L(0) conj L'(0) sqrt(q0) sum_v Z(v) conj Z'(v - delta)`
    pub route_b: Complex64,
}

impl FtQ0Routes {
    /// `|A - B| / max(|A|, |B|, 1)`; both routes vanish identically for some
    /// parameters (e.g. `m = 0 mod q1` with a character `K1`), where a bare
    /// ratio would only compare rounding noise.
    pub fn relative_difference(&self) -> f64 {
        let scale = self.route_a.norm().max(self.route_b.norm()).max(1.0);
        (self.route_a - self.route_b).norm() / scale
    }
}

struct Q0Dictionary {
    /// `±cbar^2 rbar^2 m mod q`
    alpha_full: u64,
    /// `±cbar^3 rbar^3 n1^2 mod q0`
    gamma: u64,
}

fn q0_dictionary(m: i64, c: u64, p: &FtQ0Params, q0: u64, q1: u64) -> Result<Q0Dictionary> {
    let q = q0 * q1;
    let cb = unit(c, q, "c")?;
    let rb = unit(p.r, q, "r")?;
    unit(p.n1, q0, "n1")?;
    let cr = mul_mod(cb, rb, q);
    let alpha_full = p
        .sign
        .apply(mul_mod(mul_mod(cr, cr, q), reduce_signed(m as i128, q), q), q);
    let cr0 = cr % q0;
    let n1 = p.n1 % q0;
    let gamma = p.sign.apply(
        mul_mod(mul_mod(mul_mod(cr0, cr0, q0), cr0, q0), mul_mod(n1, n1, q0), q0),
        q0,
    );
    Ok(Q0Dictionary { alpha_full, gamma })
}

/// Evaluates the `q0`-sum
/// `q0^{-1/2} sum_{u,u'} L(u q1) conj L'(u' q1) sum_v Kl_2(gamma v ubar) conj Kl_2(gamma' v u'bar) e(delta v / q0)`
/// directly (route A, `u, u'` over units) and through the factorization into
/// `L`-sums mod `q1` and the `Z` transform (route B).
///
/// Route B uses [`z_transform_completed`]: dropping `x = 0` from `Z` leaves a
/// discrepancy of the size of the `Kl_2(0)` terms, while the completed sum
/// matches route A exactly.
///
/// Requires `m, m' != 0 mod q0`. For `m = 0 mod q0` the `q0`-part of the
/// `L`-sum is a Ramanujan sum rather than a `Kl_2` value, and the stored
/// `Kl_2(0)` convention does not reproduce it.
pub fn ft_q0_sum(k0: &TraceFunction, k1: &TraceFunction, p: &FtQ0Params) -> Result<FtQ0Routes> {
    let (q0, q1) = (k0.modulus(), k1.modulus());
    for (name, m) in [("m", p.m), ("m'", p.m_prime)] {
        if m.rem_euclid(q0 as i64) == 0 {
            return Err(CorrelationError::InvalidParams(format!("{name} = {m} is divisible by q0 = {q0}")));
        }
    }
    let q = q0 * q1;
    let d = q0_dictionary(p.m, p.c, p, q0, q1)?;
    let dp = q0_dictionary(p.m_prime, p.c_prime, p, q0, q1)?;
    let delta = p.delta % q0;

    // route A
    let khat = fourier_transform(&crt_product(k0, k1)?);
    let kl2 = hyper_kloosterman(2, q0)?;
    let roots = RootTable::new(q0).map_err(TraceError::from)?;
    let units: Vec<u64> = (1..q0).collect();
    let l: Vec<Complex64> = units
        .iter()
        .map(|&u| l_sum(&khat, d.alpha_full, 1, mul_mod(u, q1, q)))
        .collect();
    let lp: Vec<Complex64> = units
        .iter()
        .map(|&u| l_sum(&khat, dp.alpha_full, 1, mul_mod(u, q1, q)))
        .collect();
    let mut route_a = Complex64::new(0.0, 0.0);
    for (i, &u) in units.iter().enumerate() {
        let ub = inv(u, q0)?;
        let g = mul_mod(d.gamma, ub, q0);
        for (j, &up) in units.iter().enumerate() {
            let gp = mul_mod(dp.gamma, inv(up, q0)?, q0);
            let mut inner = Complex64::new(0.0, 0.0);
            for v in 0..q0 {
                inner += kl2.at(mul_mod(g, v, q0))
                    * kl2.at(mul_mod(gp, v, q0)).conj()
                    * roots.e(mul_mod(delta, v, q0));
            }
            route_a += l[i] * lp[j].conj() * inner;
        }
    }
    route_a /= (q0 as f64).sqrt();

    // route B
    let khat1 = fourier_transform(k1);
    let q0b1 = inv(q0, q1)?;
    let q1b0 = inv(q1, q0)?;
    let p0 = l_sum(&khat1, mul_mod(d.alpha_full % q1, mul_mod(q0b1, q0b1, q1), q1), 1, 0);
    let p0p = l_sum(&khat1, mul_mod(dp.alpha_full % q1, mul_mod(q0b1, q0b1, q1), q1), 1, 0);
    let q1b2 = mul_mod(q1b0, q1b0, q0);
    let z = z_transform_completed(k0, mul_mod(d.alpha_full % q0, q1b2, q0), 1, d.gamma)?;
    let zp = z_transform_completed(k0, mul_mod(dp.alpha_full % q0, q1b2, q0), 1, dp.gamma)?;
    let route_b = p0 * p0p.conj() * (q0 as f64).sqrt() * zz_correlation(&z, &zp, delta)?;
    Ok(FtQ0Routes { route_a, route_b })
}
