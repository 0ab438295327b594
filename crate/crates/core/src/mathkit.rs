//! Scalar numeric kernel: Gaussian tail, its inverse, binary entropy and
//! decibel conversions.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, domain, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("x", x));
    }
    Ok(q_unchecked(x))
}

#[inline]
pub(crate) fn q_unchecked(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[inline]
fn gaussian_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

const Q_INVERSE_BRACKET: f64 = 10.0;

/// Inverse of [`q_function`] on the open interval `(0, 1)`.
///
/// Bisection on `[-10, 10]` until the bracket is narrow, then Newton steps
/// guarded by the bracket.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0 && p < 1.0) {
        return Err(domain("p", p));
    }
    // the upper half loses relative precision in p, so solve on the small tail
    if p > 0.5 {
        return Ok(-q_inverse(1.0 - p)?);
    }
    let (mut lo, mut hi) = (-Q_INVERSE_BRACKET, Q_INVERSE_BRACKET);
    // Q is decreasing: Q(lo) >= p >= Q(hi) must hold
    if q_unchecked(hi) > p || q_unchecked(lo) < p {
        return Err(domain("p", p));
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if q_unchecked(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let q = q_unchecked(x);
        let resid = q - p;
        if resid.abs() <= 1e-15 * p {
            break;
        }
        if resid > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = resid / gaussian_pdf(x);
        let mut next = x + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `-p log2 p - (1-p) log2 (1-p)` with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0)?;
    Ok(xlog2x(p) + xlog2x(1.0 - p))
}

fn xlog2x(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon information between Alice and Bob for a sifted error rate
/// `e_b`, `1 + e log2 e + (1-e) log2 (1-e)`.
///
/// Only defined on `[0, 1/2]`; above one half the decision convention is
/// inverted.
pub fn mutual_information(e_b: f64) -> Result<f64> {
    check_range("e_b", e_b, 0.0, 0.5)?;
    let plog = |p: f64| if p == 0.0 { 0.0 } else { p * p.log2() };
    Ok(1.0 + plog(e_b) + plog(1.0 - e_b))
}

/// A signal-to-noise power ratio (`beta^2`) carried in both linear and
/// decibel form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrValue {
    pub linear: f64,
    pub db: f64,
}

impl SnrValue {
    pub fn from_linear(linear: f64) -> Result<Self> {
        if !(linear.is_finite() && linear > 0.0) {
            return Err(domain("snr", linear));
        }
        Ok(Self { linear, db: linear_to_db(linear) })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(domain("snr_db", db));
        }
        Ok(Self { linear: db_to_linear(db), db })
    }

    /// Amplitude ratio `beta = sqrt(snr)`.
    pub fn beta(&self) -> f64 {
        self.linear.sqrt()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
