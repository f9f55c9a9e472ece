use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{One, Zero};

use super::{to_f64, AlgebraError, MPoly, Rational};

/// Commutative ring elements the closed-form formulas can be written over,
/// so that the same code runs in floating point, exact rationals, and
/// symbolic polynomials.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_rational(r: &Rational) -> Self {
        to_f64(r)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(n: i64) -> Self {
        super::int(n)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Scalar for MPoly {
    fn zero() -> Self {
        MPoly::zero()
    }
    fn one() -> Self {
        MPoly::one()
    }
    fn from_int(n: i64) -> Self {
        MPoly::int(n)
    }
    fn from_rational(r: &Rational) -> Self {
        MPoly::constant(r.clone())
    }
    fn is_zero(&self) -> bool {
        MPoly::is_zero(self)
    }
}

/// Formal fraction `num / den` over a ring. No cancellation is attempted;
/// equality is decided by cross multiplication.
#[derive(Debug, Clone)]
pub struct Frac<T> {
    pub num: T,
    pub den: T,
}

impl<T: Scalar> Frac<T> {
    pub fn new(num: T, den: T) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Frac { num, den })
    }

    pub fn from_value(v: T) -> Self {
        Frac {
            num: v,
            den: T::one(),
        }
    }

    pub fn int(n: i64) -> Self {
        Self::from_value(T::from_int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        Frac::new(self.den.clone(), self.num.clone())
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        Ok(self.clone() * other.recip()?)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        (self.num.clone() * other.den.clone() - other.num.clone() * self.den.clone()).is_zero()
    }
}

impl Frac<f64> {
    pub fn value(&self) -> f64 {
        self.num / self.den
    }
}

impl Frac<Rational> {
    pub fn value(&self) -> Rational {
        &self.num / &self.den
    }
}

impl<T: Scalar> PartialEq for Frac<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl<T: Scalar> Add for Frac<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.den == rhs.den {
            return Frac {
                num: self.num + rhs.num,
                den: self.den,
            };
        }
        Frac {
            num: self.num * rhs.den.clone() + rhs.num * self.den.clone(),
            den: self.den * rhs.den,
        }
    }
}

impl<T: Scalar> Sub for Frac<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Scalar> Mul for Frac<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Frac {
            num: self.num * rhs.num,
            den: self.den * rhs.den,
        }
    }
}

impl<T: Scalar> Neg for Frac<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Frac {
            num: -self.num,
            den: self.den,
        }
    }
}

/// Panics on a zero divisor; use [`Frac::checked_div`] when that can happen.
impl<T: Scalar> Div for Frac<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.checked_div(&rhs).expect("division by a zero fraction")
    }
}
