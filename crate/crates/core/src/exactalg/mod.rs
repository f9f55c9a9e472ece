//! Exact rational scalars, Laurent polynomials over named symbols and
//! triangular matrices of such polynomials.

mod matrix;
mod mpoly;
mod scalar;

pub use matrix::{NumMatrix, Shape, TriMatrix};
pub use mpoly::{Binding, Bindings, MPoly};
pub use scalar::{Frac, Scalar};

use num::{BigInt, One, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num::BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("symbol `{0}` has no binding")]
    UnboundSymbol(String),
    #[error("diagonal entry {index} is not invertible: {entry}")]
    SingularDiagonal { index: usize, entry: String },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("polynomial {index} has degree {found} in `{symbol}`, expected {index}")]
    DegreeMismatch {
        index: usize,
        found: i64,
        symbol: String,
    },
    #[error("non-finite value in numeric matrix at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative power of `{0}` cannot be substituted by a non-unit")]
    NonUnitSubstitution(String),
    #[error("cannot parse `{0}` as a rational number")]
    Parse(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    // Large numerators and denominators overflow individually even when the
    // ratio is moderate, so shift both down to a common safe size first.
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let bits = r.numer().bits().max(r.denom().bits());
            let shift = bits.saturating_sub(900);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.3"` or
/// `"-1.25e-2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, AlgebraError> {
    let s = text.trim();
    let err = || AlgebraError::Parse(text.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let negative = mantissa.starts_with('-');
    let body = mantissa.trim_start_matches(['-', '+']);
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let mut value = Rational::from_integer(digits.parse::<BigInt>().map_err(|_| err())?);
    let scale = exponent - frac.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    value *= num::pow::Pow::pow(&ten, scale);
    Ok(if negative { -value } else { value })
}

/// Renders a rational as `p` or `p/q`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
