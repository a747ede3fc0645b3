//! Coefficients `A(m, r)` of the symmetric square of a GL2 eigenform.
//!
//! With Satake parameter `alpha` at `p` (`lambda(p) = alpha + 1/alpha`), the
//! local parameters of the lift are `(alpha^2, 1, alpha^-2)` and
//! `A(p^a, p^b) = s_{(a+b, b, 0)}(alpha^2, 1, alpha^-2)`. The Schur polynomial
//! is evaluated through Jacobi–Trudi, `s_{(l1,l2)} = h_{l1} h_{l2} - h_{l1+1} h_{l2-1}`,
//! with the complete homogeneous polynomials from
//! `h_n = e1 h_{n-1} - e2 h_{n-2} + e3 h_{n-3}`, where
//! `e1 = e2 = lambda(p)^2 - 1` and `e3 = 1`. Everything stays real.

use super::{smallest_prime_factors, GL2CoefficientTable, HeckeError};

/// `h_0..=h_max` for the parameters attached to `lambda(p)`.
pub fn complete_homogeneous(lambda_p: f64, max: usize) -> Vec<f64> {
    let e = lambda_p * lambda_p - 1.0;
    let mut h = vec![0.0; max + 1];
    h[0] = 1.0;
    for n in 1..=max {
        let h1 = h[n - 1];
        let h2 = if n >= 2 { h[n - 2] } else { 0.0 };
        let h3 = if n >= 3 { h[n - 3] } else { 0.0 };
        h[n] = e * h1 - e * h2 + h3;
    }
    h
}

/// `A(p^a, p^b)` from `lambda(p)`.
pub fn local_coefficient(lambda_p: f64, a: u32, b: u32) -> f64 {
    let (l1, l2) = ((a + b) as usize, b as usize);
    let h = complete_homogeneous(lambda_p, l1 + 1);
    let lower = if l2 == 0 { 0.0 } else { h[l2 - 1] };
    h[l1] * h[l2] - h[l1 + 1] * lower
}

/// `A(m, r)` for all `m r^2 <= N`.
#[derive(Debug, Clone)]
pub struct GL3CoefficientTable {
    weight: u32,
    n_max: usize,
    /// `rows[r][m]`, `1 <= r`, `m <= N / r^2`; index 0 entries are 0
    rows: Vec<Vec<f64>>,
}

impl GL3CoefficientTable {
    pub fn source_weight(&self) -> u32 {
        self.weight
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `A(m, r)`, or `None` when `m r^2` exceeds the range.
    pub fn get(&self, m: usize, r: usize) -> Option<f64> {
        if m == 0 || r == 0 {
            return None;
        }
        self.rows.get(r)?.get(m).copied()
    }

    /// Largest `r` with at least one stored entry.
    pub fn r_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// Row `r` indexed by `m` (entry 0 is 0).
    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r]
    }
}

/// Symmetric square coefficients for `m r^2 <= N`.
pub fn sym_square_coefficients(
    src: &GL2CoefficientTable,
    n_max: usize,
) -> Result<GL3CoefficientTable, HeckeError> {
    if src.len() < n_max {
        return Err(HeckeError::InsufficientSource {
            have: src.len(),
            need: n_max,
        });
    }
    let spf = smallest_prime_factors(n_max);
    // local value cache keyed by (p, a, b) would be sparse; instead keep per-prime h tables
    let mut h_cache: Vec<Vec<f64>> = vec![Vec::new(); n_max + 1];
    let log_n = usize::BITS as usize;
    for p in 2..=n_max {
        if spf[p] as usize == p {
            h_cache[p] = complete_homogeneous(src.lambda(p), log_n + 2);
        }
    }
    let local = |p: usize, a: usize, b: usize| -> f64 {
        let h = &h_cache[p];
        let l1 = a + b;
        let lower = if b == 0 { 0.0 } else { h[b - 1] };
        h[l1] * h[b] - h[l1 + 1] * lower
    };
    let factor = |mut n: usize| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        while n > 1 {
            let p = spf[n] as usize;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    };
    let mut rows = vec![Vec::new()];
    let mut r = 1usize;
    while r * r <= n_max {
        let len = n_max / (r * r);
        let fr = factor(r);
        let mut row = vec![0.0; len + 1];
        for (m, slot) in row.iter_mut().enumerate().skip(1) {
            let fm = factor(m);
            let mut value = 1.0;
            let (mut i, mut j) = (0, 0);
            // merge the two sorted factorizations
            while i < fm.len() || j < fr.len() {
                let pm = fm.get(i).map_or(usize::MAX, |x| x.0);
                let pr = fr.get(j).map_or(usize::MAX, |x| x.0);
                if pm == pr {
                    value *= local(pm, fm[i].1, fr[j].1);
                    i += 1;
                    j += 1;
                } else if pm < pr {
                    value *= local(pm, fm[i].1, 0);
                    i += 1;
                } else {
                    value *= local(pr, 0, fr[j].1);
                    j += 1;
                }
            }
            *slot = value;
        }
        rows.push(row);
        r += 1;
    }
    Ok(GL3CoefficientTable {
        weight: src.weight(),
        n_max,
        rows,
    })
}

/// `sum_{m r^2 = n} A(m, r) lambda_f(m)`.
pub fn rankin_selberg_coefficient(
    g3: &GL3CoefficientTable,
    g2: &GL2CoefficientTable,
    n: usize,
) -> Result<f64, HeckeError> {
    let max = g3.n_max().min(g2.len());
    if n == 0 || n > max {
        return Err(HeckeError::OutOfRange { n, max });
    }
    let mut acc = 0.0;
    let mut r = 1;
    while r * r <= n {
        if n % (r * r) == 0 {
            let m = n / (r * r);
            acc += g3.get(m, r).expect("in range") * g2.lambda(m);
        }
        r += 1;
    }
    Ok(acc)
}
