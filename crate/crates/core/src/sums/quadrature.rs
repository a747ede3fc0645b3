//! Adaptive Gauss–Kronrod (7, 15) quadrature for smooth complex integrands.
//!
//! Panel rule: the interval starts as `initial_panels` equal panels. A panel
//! is accepted when `|K15 - G7|` is at most its share of the tolerance,
//! `abs_tol * width / (b - a)`; otherwise it is bisected. Bisection stops at
//! depth [`MAX_DEPTH`], which is reported as a failure.

use num_complex::Complex64;

pub const MAX_DEPTH: u32 = 40;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub estimate: f64,
}

impl std::fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no convergence on [{}, {}], error estimate {:e}",
            self.a, self.b, self.estimate
        )
    }
}

impl std::error::Error for QuadratureError {}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Result<Complex64, QuadratureError> {
    let (value, err) = gk15(f, a, b);
    if err <= tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs()) {
        return Ok(value);
    }
    if depth >= MAX_DEPTH {
        return Err(QuadratureError {
            a,
            b,
            estimate: err,
        });
    }
    let m = 0.5 * (a + b);
    Ok(adapt(f, a, m, 0.5 * tol, depth + 1)? + adapt(f, m, b, 0.5 * tol, depth + 1)?)
}

/// `int_a^b f` to absolute accuracy `abs_tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    initial_panels: usize,
) -> Result<Complex64, QuadratureError> {
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        total += adapt(&f, lo, hi, abs_tol / panels as f64, 0)?;
    }
    Ok(total)
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    initial_panels: usize,
) -> Result<f64, QuadratureError> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, initial_panels).map(|z| z.re)
}
