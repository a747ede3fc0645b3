//! Discrete Fourier transforms of arbitrary length.
//!
//! The transform computed is `y[k] = sum_x a[x] e(sign * k x / n)`. Lengths
//! that are not powers of two go through Bluestein's chirp construction:
//! using `k x = (k^2 + x^2 - (k-x)^2) / 2` the transform becomes a linear
//! convolution with the chirp `e(sign * t^2 / 2n)`, done by a zero-padded
//! power-of-two FFT. Chirp angles are reduced exactly (`t^2 mod 2n` in
//! integers) before any floating-point work.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::residue::RootTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `e(+kx/n)`
    Positive,
    /// `e(-kx/n)`
    Negative,
}

impl Sign {
    fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// `O(n^2)` reference transform with exact index reduction.
pub fn dft_direct(input: &[Complex64], sign: Sign) -> Vec<Complex64> {
    let n = input.len();
    if n == 0 {
        return Vec::new();
    }
    let roots = RootTable::new(n as u64).expect("nonzero length");
    (0..n)
        .map(|k| {
            crate::pairwise::sum_by(n, |x| {
                let idx = ((k as u128 * x as u128) % n as u128) as u64;
                let w = match sign {
                    Sign::Positive => roots.e(idx),
                    Sign::Negative => roots.e((n as u64 - idx) % n as u64),
                };
                input[x] * w
            })
        })
        .collect()
}

/// A reusable plan for transforms of one length.
pub struct Bluestein {
    n: usize,
    sign: Sign,
    /// power-of-two path when `n` itself is one
    direct: Option<Arc<dyn Fft<f64>>>,
    forward: Option<Arc<dyn Fft<f64>>>,
    inverse: Option<Arc<dyn Fft<f64>>>,
    m: usize,
    /// chirp `w[t] = e(sign * t^2 / 2n)` for `t` in `0..n`
    chirp: Vec<Complex64>,
    /// FFT of the conjugate chirp laid out for a circular convolution
    kernel_hat: Vec<Complex64>,
}

impl Bluestein {
    pub fn new(n: usize, sign: Sign) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        if n.is_power_of_two() {
            let plan = match sign {
                Sign::Positive => planner.plan_fft_inverse(n),
                Sign::Negative => planner.plan_fft_forward(n),
            };
            return Self {
                n,
                sign,
                direct: Some(plan),
                forward: None,
                inverse: None,
                m: n,
                chirp: Vec::new(),
                kernel_hat: Vec::new(),
            };
        }
        let m = (2 * n - 1).next_power_of_two();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let two_n = 2 * n as u128;
        let s = sign.as_f64();
        let chirp: Vec<Complex64> = (0..n)
            .map(|t| {
                let r = (t as u128 * t as u128) % two_n;
                Complex64::from_polar(1.0, s * TAU * r as f64 / two_n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for t in 1..n {
            kernel[t] = chirp[t].conj();
            kernel[m - t] = chirp[t].conj();
        }
        forward.process(&mut kernel);
        Self {
            n,
            sign,
            direct: None,
            forward: Some(forward),
            inverse: Some(inverse),
            m,
            chirp,
            kernel_hat: kernel,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn process(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.n, "length mismatch");
        if let Some(plan) = &self.direct {
            let mut buf = input.to_vec();
            plan.process(&mut buf);
            return buf;
        }
        let (forward, inverse) = (self.forward.as_ref().unwrap(), self.inverse.as_ref().unwrap());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for t in 0..self.n {
            buf[t] = input[t] * self.chirp[t];
        }
        forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        inverse.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        (0..self.n).map(|k| buf[k] * self.chirp[k] * scale).collect()
    }
}

/// Fast transform of any length.
pub fn dft_fast(input: &[Complex64], sign: Sign) -> Vec<Complex64> {
    if input.is_empty() {
        return Vec::new();
    }
    Bluestein::new(input.len(), sign).process(input)
}

/// Cyclic convolution `c[s] = sum_t a[s-t] b[t]` of two equal-length sequences.
pub fn cyclic_convolution(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    assert_eq!(n, b.len(), "length mismatch");
    if n == 0 {
        return Vec::new();
    }
    let fwd = Bluestein::new(n, Sign::Negative);
    let inv = Bluestein::new(n, Sign::Positive);
    let fa = fwd.process(a);
    let fb = fwd.process(b);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let scale = 1.0 / n as f64;
    inv.process(&prod).into_iter().map(|z| z * scale).collect()
}

/// Reference `O(n^2)` cyclic convolution.
pub fn cyclic_convolution_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    assert_eq!(n, b.len(), "length mismatch");
    (0..n)
        .map(|s| crate::pairwise::sum_by(n, |t| a[(s + n - t) % n] * b[t]))
        .collect()
}
