//! Twisted coefficient sums, arithmetic-progression sums, exact
//! summation-formula checks and the bound formulas they are compared with.

pub mod bessel;
pub mod bounds;
pub mod quadrature;
pub mod window;

use num_complex::Complex64;
use thiserror::Error;

use crate::fft::{dft_direct, dft_fast, Sign};
use crate::hecke::{GL2CoefficientTable, GL3CoefficientTable};
use crate::pairwise;
use crate::residue::{gcd, is_prime, mod_inverse, mul_mod, unit_root, FactoredModulus, RootTable};
use crate::trace::{hyper_kloosterman_composite, TraceError, TraceFunction, FAST_FT_THRESHOLD};

pub use bounds::{
    ap_corollary_bound, bound_thm1, bound_thm2, compute_r, thm2_min_x, BoundConstants,
    BoundError,
};
pub use window::{FnWindow, SmoothWindow, Window, ZeroWindow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SumError {
    #[error("coefficients needed up to n = {needed}, table ends at {available}")]
    CoefficientRangeExceeded { needed: usize, available: usize },
    #[error("residue class {a} mod {q} is not primitive")]
    NonPrimitiveClass { a: u64, q: u64 },
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("modulus {modulus} is not a multiple of the period {period}")]
    PeriodMismatch { period: u64, modulus: u64 },
    #[error("dual sum did not decay within {terms} terms")]
    TruncationNotConverged { terms: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl From<quadrature::QuadratureError> for SumError {
    fn from(e: quadrature::QuadratureError) -> Self {
        SumError::QuadratureFailure(e.to_string())
    }
}

/// Integers `n >= 1` with `n / x` inside the window support.
fn index_range<W: Window + ?Sized>(w: &W, x: f64) -> Option<(usize, usize)> {
    let (a, b) = w.support();
    if x <= 0.0 {
        return None;
    }
    let lo = (a * x).ceil().max(1.0);
    let hi = (b * x).floor();
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn require(coeffs_len: usize, hi: usize) -> Result<(), SumError> {
    if hi >= coeffs_len {
        return Err(SumError::CoefficientRangeExceeded {
            needed: hi,
            available: coeffs_len.saturating_sub(1),
        });
    }
    Ok(())
}

/// `sum_n lambda(n) K(n) V(n/X)`; `coeffs[n]` holds `lambda(n)`, entry 0 unused.
pub fn twisted_sum<W: Window + ?Sized>(
    coeffs: &[f64],
    k: &TraceFunction,
    v: &W,
    x: f64,
) -> Result<Complex64, SumError> {
    let Some((lo, hi)) = index_range(v, x) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    require(coeffs.len(), hi)?;
    Ok(pairwise::sum_by(hi - lo + 1, |i| {
        let n = lo + i;
        k.at(n as u64) * (coeffs[n] * v.eval(n as f64 / x))
    }))
}

/// Result of the GL3 x GL2 double sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsTwistedSum {
    /// sum over `r >= 1`
    pub value: Complex64,
    /// multiply by this to get the sum over all `r != 0`
    pub sign_factor: f64,
    pub r_max: usize,
}

/// `sum_{r >= 1} sum_{n >= 1} A(n, r) lambda_f(n) K(n r^2) V(n r^2 / X)`,
/// optionally restricted to `r <= r_max`.
pub fn rs_twisted_sum<W: Window + ?Sized>(
    g3: &GL3CoefficientTable,
    g2: &GL2CoefficientTable,
    k: &TraceFunction,
    v: &W,
    x: f64,
    r_max: Option<usize>,
) -> Result<RsTwistedSum, SumError> {
    let zero = RsTwistedSum {
        value: Complex64::new(0.0, 0.0),
        sign_factor: 2.0,
        r_max: 0,
    };
    let Some((lo, hi)) = index_range(v, x) else {
        return Ok(zero);
    };
    require(g3.n_max() + 1, hi)?;
    require(g2.len() + 1, hi)?;
    let mut r_top = (hi as f64).sqrt().floor() as usize;
    while r_top * r_top > hi {
        r_top -= 1;
    }
    if let Some(cap) = r_max {
        r_top = r_top.min(cap);
    }
    let rows: Vec<Complex64> = (1..=r_top)
        .map(|r| {
            let r2 = r * r;
            let n_lo = lo.div_ceil(r2).max(1);
            let n_hi = hi / r2;
            if n_lo > n_hi {
                return Complex64::new(0.0, 0.0);
            }
            let row = g3.row(r);
            pairwise::sum_by(n_hi - n_lo + 1, |i| {
                let n = n_lo + i;
                let m = n * r2;
                k.at(m as u64) * (row[n] * g2.lambda(n) * v.eval(m as f64 / x))
            })
        })
        .collect();
    Ok(RsTwistedSum {
        value: pairwise::sum_slice(&rows),
        sign_factor: 2.0,
        r_max: r_top,
    })
}

/// `sum_{n = a mod q} lambda(n) V(n/X)` for a primitive class.
pub fn ap_sum<W: Window + ?Sized>(
    coeffs: &[f64],
    a: u64,
    q: u64,
    v: &W,
    x: f64,
) -> Result<Complex64, SumError> {
    if q == 0 || gcd(a % q, q) != 1 {
        return Err(SumError::NonPrimitiveClass { a, q });
    }
    residue_class_sum(coeffs, a, q, v, x)
}

/// Same as [`ap_sum`] without the primitivity check.
pub fn residue_class_sum<W: Window + ?Sized>(
    coeffs: &[f64],
    a: u64,
    q: u64,
    v: &W,
    x: f64,
) -> Result<Complex64, SumError> {
    if q == 0 {
        return Err(SumError::InvalidParams("modulus 0".into()));
    }
    let Some((lo, hi)) = index_range(v, x) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    require(coeffs.len(), hi)?;
    let a = a % q;
    let lo_q = lo as u64;
    let first = lo_q + (a + q - lo_q % q) % q;
    if first > hi as u64 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let count = ((hi as u64 - first) / q + 1) as usize;
    let s: f64 = pairwise::sum_by(count, |i| {
        let n = (first + i as u64 * q) as usize;
        coeffs[n] * v.eval(n as f64 / x)
    });
    Ok(Complex64::new(s, 0.0))
}

/// `(X / q^{(d+1)/2}) sum_n lambda(n) Kl_d(a n; q) W(n X / q^d)` for real
/// coefficients, with `Kl_d` mod `q0 q1` assembled from the prime factors.
pub fn dual_ap_sum<W: Window + ?Sized>(
    coeffs: &[f64],
    a: u64,
    m: &FactoredModulus,
    d: u32,
    w: &W,
    x: f64,
) -> Result<Complex64, SumError> {
    let q = m.q();
    if gcd(a % q, q) != 1 {
        return Err(SumError::NonPrimitiveClass { a, q });
    }
    let kl = hyper_kloosterman_composite(d, m)?;
    let qd = (q as f64).powi(d as i32);
    let scale = qd / x;
    let Some((lo, hi)) = index_range(w, scale) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    require(coeffs.len(), hi)?;
    let s = pairwise::sum_by(hi - lo + 1, |i| {
        let n = lo + i;
        kl.at(mul_mod(a, n as u64, q)) * (coeffs[n] * w.eval(n as f64 / scale))
    });
    Ok(s * (x / (q as f64).powf((d as f64 + 1.0) / 2.0)))
}

/// `(p q0)^{-1} sum_{c | p q0} sum*_{alpha mod c} e(alpha (n - r) / c)`,
/// evaluated through Ramanujan sums: the four divisor terms factor as
/// `(1 + c_p(m)) (1 + c_q0(m)) / (p q0)` with `m = n - r`.
pub fn trivial_delta(n: i64, r: i64, p: u64, q0: u64) -> Result<Complex64, SumError> {
    if !is_prime(p) || !is_prime(q0) || p == q0 {
        return Err(SumError::InvalidParams(format!(
            "{p} and {q0} must be distinct primes"
        )));
    }
    let m = n as i128 - r as i128;
    let ramanujan = |c: u64| -> f64 {
        if m.rem_euclid(c as i128) == 0 {
            (c - 1) as f64
        } else {
            -1.0
        }
    };
    let value = (1.0 + ramanujan(p)) * (1.0 + ramanujan(q0)) / (p as f64 * q0 as f64);
    Ok(Complex64::new(value, 0.0))
}

/// Both sides of a summation identity and their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// absolute for Poisson, relative for Voronoi
    pub diff: f64,
    /// dual terms used
    pub terms: usize,
    /// size of the discarded dual tail, as estimated
    pub tail_estimate: f64,
}

/// `V^(xi) = int V(u) e(-xi u) du`.
pub fn window_fourier<W: Window + ?Sized>(v: &W, xi: f64, abs_tol: f64) -> Result<Complex64, SumError> {
    let (a, b) = v.support();
    let panels = (8.0f64).max((2.0 * xi.abs() * (b - a)).ceil()) as usize;
    let two_pi = std::f64::consts::TAU;
    Ok(quadrature::integrate(
        |u| Complex64::from_polar(v.eval(u), -two_pi * xi * u),
        a,
        b,
        abs_tol,
        panels,
    )?)
}

/// Poisson summation for `K` of period dividing `M`:
/// `sum_n K(n) V(n/X) = (X/M) sum_r (sum_{b mod M} K(b) e(r b / M)) V^(r X / M)`.
///
/// The dual sum runs over `|r| <= R0 = ceil(40 M max(Z,1) / X)`, plus a band
/// `R0 < |r| <= 2 R0` whose absolute size is the reported tail estimate; a
/// tail estimate above `tail_tol` is a [`SumError::QuadratureFailure`].
pub fn poisson_check(
    k: &TraceFunction,
    v: &SmoothWindow,
    x: f64,
    modulus: u64,
) -> Result<IdentityCheck, SumError> {
    poisson_check_with_tolerance(k, v, x, modulus, 1e-8)
}

pub fn poisson_check_with_tolerance(
    k: &TraceFunction,
    v: &SmoothWindow,
    x: f64,
    modulus: u64,
    tail_tol: f64,
) -> Result<IdentityCheck, SumError> {
    let q = k.modulus();
    if modulus == 0 || modulus % q != 0 {
        return Err(SumError::PeriodMismatch {
            period: q,
            modulus,
        });
    }
    let lhs = match index_range(v, x) {
        None => Complex64::new(0.0, 0.0),
        Some((lo, hi)) => pairwise::sum_by(hi - lo + 1, |i| {
            let n = lo + i;
            k.at(n as u64) * v.eval(n as f64 / x)
        }),
    };
    let extended: Vec<Complex64> = (0..modulus).map(|b| k.at(b)).collect();
    let g = if modulus > FAST_FT_THRESHOLD {
        dft_fast(&extended, Sign::Positive)
    } else {
        dft_direct(&extended, Sign::Positive)
    };
    let m = modulus as f64;
    let r0 = (40.0 * m * v.z().max(1.0) / x).ceil() as i64;
    let term = |r: i64| -> Result<Complex64, SumError> {
        let gr = g[r.rem_euclid(modulus as i64) as usize];
        if gr.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(gr * window_fourier(v, r as f64 * x / m, 1e-13)?)
    };
    let main: Vec<Complex64> = (-r0..=r0).map(term).collect::<Result<_, _>>()?;
    let band: Vec<Complex64> = (r0 + 1..=2 * r0)
        .flat_map(|r| [r, -r])
        .map(term)
        .collect::<Result<_, _>>()?;
    let scale = x / m;
    let tail_estimate = scale * band.iter().map(|z| z.norm()).sum::<f64>();
    if tail_estimate > tail_tol {
        return Err(SumError::QuadratureFailure(format!(
            "dual tail estimate {tail_estimate:e} exceeds {tail_tol:e}"
        )));
    }
    let rhs = (pairwise::sum_slice(&main) + pairwise::sum_slice(&band)) * scale;
    Ok(IdentityCheck {
        lhs,
        rhs,
        diff: (lhs - rhs).norm(),
        terms: main.len() + band.len(),
        tail_estimate,
    })
}

/// Absolute accuracy of each `W~(y)` and the smallest truncation threshold.
pub const VORONOI_FLOOR: f64 = 1e-12;

/// `W~(y) = 2 pi i^k int W(u) J_{k-1}(4 pi sqrt(u y)) du`.
pub fn voronoi_transform<W: Window + ?Sized>(
    w: &W,
    weight: u32,
    y: f64,
) -> Result<f64, SumError> {
    let (a, b) = w.support();
    if a < 0.0 {
        return Err(SumError::InvalidParams("window must live on the positive axis".into()));
    }
    let nu = weight - 1;
    let oscillations = 2.0 * y.sqrt() * (b.sqrt() - a.sqrt());
    let panels = (8.0f64).max((2.0 * oscillations).ceil()) as usize;
    let four_pi = 4.0 * std::f64::consts::PI;
    let integral = quadrature::integrate_real(
        |u| w.eval(u) * bessel::bessel_j(nu, four_pi * (u * y).sqrt()),
        a,
        b,
        VORONOI_FLOOR / (4.0 * std::f64::consts::PI),
        panels,
    )?;
    let ik = if (weight / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(std::f64::consts::TAU * ik * integral)
}

/// Voronoi summation for a level-1 holomorphic form:
/// `sum lambda(n) e(a n / c) W(n/X) = (X/c) sum lambda(n) e(-abar n / c) W~(n X / c^2)`.
///
/// The dual sum stops once `|W~|` has stayed below `1e-12` times its running
/// maximum for 64 consecutive terms past the Bessel transition
/// (`4 pi sqrt(y) > 2(k-1) + 10`). The threshold never drops below
/// [`VORONOI_FLOOR`], the accuracy at which each `W~` is integrated.
pub fn voronoi_check<W: Window + ?Sized>(
    f: &GL2CoefficientTable,
    a: u64,
    c: u64,
    w: &W,
    x: f64,
) -> Result<IdentityCheck, SumError> {
    const RUN: usize = 64;
    if c == 0 || gcd(a % c, c) != 1 {
        return Err(SumError::NonPrimitiveClass { a, q: c });
    }
    let roots = RootTable::new(c).map_err(TraceError::from)?;
    let a_inv = mod_inverse(a % c, c).map_err(TraceError::from)?;
    let lambda = f.lambdas();
    let lhs = match index_range(w, x) {
        None => Complex64::new(0.0, 0.0),
        Some((lo, hi)) => {
            require(lambda.len(), hi)?;
            pairwise::sum_by(hi - lo + 1, |i| {
                let n = lo + i;
                roots.e(mul_mod(a % c, n as u64, c)) * (lambda[n] * w.eval(n as f64 / x))
            })
        }
    };
    let c2 = (c as f64) * (c as f64);
    let transition = ((2.0 * (f.weight() - 1) as f64 + 10.0) / (4.0 * std::f64::consts::PI)).powi(2);
    let mut terms = Vec::new();
    let mut peak = 0.0f64;
    let mut quiet = 0usize;
    let mut n = 1usize;
    let mut tail_estimate = 0.0f64;
    loop {
        if n >= lambda.len() {
            return Err(SumError::TruncationNotConverged { terms: n - 1 });
        }
        let y = n as f64 * x / c2;
        let wt = voronoi_transform(w, f.weight(), y)?;
        peak = peak.max(wt.abs());
        let phase = roots.e((c - mul_mod(a_inv, n as u64, c)) % c);
        terms.push(phase * (lambda[n] * wt));
        if y > transition && wt.abs() <= (1e-12 * peak).max(VORONOI_FLOOR) {
            quiet += 1;
            tail_estimate = tail_estimate.max(wt.abs());
            if quiet >= RUN {
                break;
            }
        } else {
            quiet = 0;
        }
        n += 1;
    }
    let rhs = pairwise::sum_slice(&terms) * (x / c as f64);
    let diff = if lhs.norm() == 0.0 && rhs.norm() == 0.0 {
        0.0
    } else {
        (lhs - rhs).norm() / lhs.norm().max(rhs.norm())
    };
    Ok(IdentityCheck {
        lhs,
        rhs,
        diff,
        terms: terms.len(),
        tail_estimate: tail_estimate * x / c as f64,
    })
}

/// `e(x)` helper for callers that need a one-off root of unity.
pub fn e_frac(num: i128, den: u64) -> Complex64 {
    unit_root(num, den)
}
