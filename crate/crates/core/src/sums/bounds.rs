//! Exponent constants and the upper-bound formulas the sweeps compare against.

use num_rational::Ratio;
use thiserror::Error;

pub type Q = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("X = {x} is below the admissible range X >= {min}")]
    RangeConstraintViolated { x: f64, min: f64 },
    #[error("bound inputs must be positive")]
    NonPositive,
}

/// Level-of-distribution and Landau exponents, kept as exact rationals.
pub struct BoundConstants;

impl BoundConstants {
    /// Exponent towards Ramanujan for GL3 coefficients.
    pub fn theta3() -> Q {
        Q::new(5, 14)
    }

    /// Standard level of distribution `2/(d+1)`.
    pub fn theta(d: i64) -> Q {
        Q::new(2, d + 1)
    }

    /// Landau exponent `(d-1)/(d+1)`.
    pub fn tau(d: i64) -> Q {
        Q::new(d - 1, d + 1)
    }

    /// `(2 - theta3) / (3 - 2 theta3)`
    pub fn thm2_x_exponent() -> Q {
        let t = Self::theta3();
        (Q::from(2) - t) / (Q::from(3) - t * 2)
    }

    /// `(1 - theta3) / (3 - 2 theta3)`
    pub fn thm2_modulus_exponent() -> Q {
        let t = Self::theta3();
        (Q::from(1) - t) / (Q::from(3) - t * 2)
    }

    /// `1 / (3 - 2 theta3)`
    pub fn r_exponent() -> Q {
        Q::from(1) / (Q::from(3) - Self::theta3() * 2)
    }

    /// Range of moduli for the arithmetic-progression corollary, `2/7 + 1/364`.
    pub fn ap_level() -> Q {
        Self::theta(6) + Q::new(1, 364)
    }
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn check_positive(values: &[f64]) -> Result<(), BoundError> {
    if values.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(BoundError::NonPositive)
    }
}

/// `khat1 (Z^{1/2} X^{1/2} q0^{1/2} + Z X^{1/2} q^{1/2} q0^{-1/4} + Z q^{1/2} q0^{1/4})`.
pub fn bound_thm1(x: f64, z: f64, q0: f64, q1: f64, khat1: f64) -> Result<f64, BoundError> {
    check_positive(&[x, z, q0, q1, khat1])?;
    let q = q0 * q1;
    let t1 = (z * x * q0).sqrt();
    let t2 = z * (x * q).sqrt() * q0.powf(-0.25);
    let t3 = z * q.sqrt() * q0.powf(0.25);
    Ok(khat1 * (t1 + t2 + t3))
}

/// Smallest admissible `X` for the GL3 x GL2 bound: `Z^4 q^2 q0^{1/2}`.
pub fn thm2_min_x(z: f64, q0: f64, q1: f64) -> f64 {
    let q = q0 * q1;
    z.powi(4) * q * q * q0.sqrt()
}

fn check_range(x: f64, z: f64, q0: f64, q1: f64) -> Result<f64, BoundError> {
    let min = thm2_min_x(z, q0, q1);
    if x < min * (1.0 - 1e-12) {
        return Err(BoundError::RangeConstraintViolated { x, min });
    }
    Ok(min)
}

/// `Z^2 (X^{3/4} q0^{3/4} + X^{23/32} (q^2 q0^{1/2})^{9/32} + X q0^{-1/4} + X^{3/4} q q0^{-1/2})`.
pub fn bound_thm2(x: f64, z: f64, q0: f64, q1: f64) -> Result<f64, BoundError> {
    check_positive(&[x, z, q0, q1])?;
    check_range(x, z, q0, q1)?;
    let q = q0 * q1;
    let a = to_f64(BoundConstants::thm2_x_exponent());
    let b = to_f64(BoundConstants::thm2_modulus_exponent());
    let t1 = (x * q0).powf(0.75);
    let t2 = x.powf(a) * (q * q * q0.sqrt()).powf(b);
    let t3 = x * q0.powf(-0.25);
    let t4 = x.powf(0.75) * q / q0.sqrt();
    Ok(z * z * (t1 + t2 + t3 + t4))
}

/// `R = (X / (Z^4 q^2 q0^{1/2}))^{1/(3 - 2 theta3)}`.
pub fn compute_r(x: f64, z: f64, q: f64, q0: f64) -> Result<f64, BoundError> {
    check_positive(&[x, z, q, q0])?;
    let min = thm2_min_x(z, q0, q / q0);
    if x < min * (1.0 - 1e-12) {
        return Err(BoundError::RangeConstraintViolated { x, min });
    }
    Ok((x / min).max(1.0).powf(to_f64(BoundConstants::r_exponent())))
}

/// `X^{1/4} q^{8/5} + q^{23/10}` and whether `q <= X^{15/52}`.
pub fn ap_corollary_bound(x: f64, q: f64) -> Result<(f64, bool), BoundError> {
    check_positive(&[x, q])?;
    let bound = x.powf(0.25) * q.powf(1.6) + q.powf(2.3);
    let level = q <= x.powf(to_f64(BoundConstants::ap_level()));
    Ok((bound, level))
}
