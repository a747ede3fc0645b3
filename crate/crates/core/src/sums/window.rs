//! Compactly supported test functions.

/// A real weight function vanishing outside a closed interval.
pub trait Window: Sync {
    fn eval(&self, x: f64) -> f64;

    /// `(a, b)` with the window zero outside `[a, b]`.
    fn support(&self) -> (f64, f64);
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, built from `exp(-1/t)`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let g = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let a = g(t);
    a / (a + g(1.0 - t))
}

/// `V_Z(x) = psi(Z(x-1)) psi(Z(2-x))` on `[1, 2]`.
///
/// For `Z >= 2` the two transition regions are disjoint and
/// `V_Z = 1` on `[1 + 1/Z, 2 - 1/Z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothWindow {
    z: f64,
    derivative_cap: u32,
}

impl SmoothWindow {
    pub const DEFAULT_DERIVATIVE_CAP: u32 = 4;

    pub fn new(z: f64) -> Self {
        assert!(z >= 1.0, "roughness parameter must be at least 1");
        Self {
            z,
            derivative_cap: Self::DEFAULT_DERIVATIVE_CAP,
        }
    }

    pub fn with_derivative_cap(mut self, cap: u32) -> Self {
        self.derivative_cap = cap;
        self
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn derivative_cap(&self) -> u32 {
        self.derivative_cap
    }

    /// Measured `c_j = max |V^(j)| / Z^j` for `j = 0..=J`.
    ///
    /// Derivatives come from central finite differences of order `j` with step
    /// `h = 2^-10 / Z` on a grid of 4096 points per unit of `Z x`.
    pub fn derivative_constants(&self) -> Vec<f64> {
        let h = 1.0 / (1024.0 * self.z);
        let samples = (4096.0 * self.z).ceil() as usize;
        (0..=self.derivative_cap)
            .map(|j| {
                let mut max = 0.0f64;
                for i in 0..=samples {
                    let x = 1.0 + i as f64 / samples as f64;
                    max = max.max(central_difference(self, j, x, h).abs());
                }
                max / self.z.powi(j as i32)
            })
            .collect()
    }
}

/// `j`-th central difference quotient `delta_h^j f(x) / h^j`.
pub fn central_difference<W: Window + ?Sized>(w: &W, j: u32, x: f64, h: f64) -> f64 {
    // sum_k (-1)^k C(j,k) f(x + (j/2 - k) h)
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=j {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let offset = (j as f64 / 2.0 - k as f64) * h;
        acc += sign * binom * w.eval(x + offset);
        binom = binom * (j - k) as f64 / (k + 1) as f64;
    }
    acc / h.powi(j as i32)
}

impl Window for SmoothWindow {
    fn eval(&self, x: f64) -> f64 {
        smooth_step(self.z * (x - 1.0)) * smooth_step(self.z * (2.0 - x))
    }

    fn support(&self) -> (f64, f64) {
        (1.0, 2.0)
    }
}

/// A window given by a closure and an explicit support.
pub struct FnWindow<F> {
    f: F,
    support: (f64, f64),
}

impl<F: Fn(f64) -> f64 + Sync> FnWindow<F> {
    pub fn new(f: F, support: (f64, f64)) -> Self {
        assert!(support.0 <= support.1, "empty support");
        Self { f, support }
    }
}

impl<F: Fn(f64) -> f64 + Sync> Window for FnWindow<F> {
    fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            0.0
        } else {
            (self.f)(x)
        }
    }

    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// The zero window on `[1, 2]`.
pub struct ZeroWindow;

impl Window for ZeroWindow {
    fn eval(&self, _x: f64) -> f64 {
        0.0
    }

    fn support(&self) -> (f64, f64) {
        (1.0, 2.0)
    }
}
