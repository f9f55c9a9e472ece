use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Signed, Zero};

use super::{fmt_rational, to_f64, AlgebraError, Rational};

/// A value bound to a symbol during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Exact(Rational),
    Real(f64),
}

impl Binding {
    pub fn as_f64(&self) -> f64 {
        match self {
            Binding::Exact(r) => to_f64(r),
            Binding::Real(x) => *x,
        }
    }
}

impl From<Rational> for Binding {
    fn from(r: Rational) -> Self {
        Binding::Exact(r)
    }
}

impl From<f64> for Binding {
    fn from(x: f64) -> Self {
        Binding::Real(x)
    }
}

pub type Bindings = BTreeMap<String, Binding>;

/// Exponent vector, ordered graded-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Monomial(Vec<i32>);

impl Monomial {
    fn degree(&self) -> i64 {
        self.0.iter().map(|&e| e as i64).sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate Laurent polynomial with rational coefficients.
///
/// Symbols are kept sorted and pruned to those that actually occur, so two
/// polynomials are equal exactly when their canonical forms coincide.
/// Negative exponents are allowed; they carry exponential symbols such as
/// `E_t` (standing for `exp(alpha t)`) whose inverse is needed by stationary
/// processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MPoly {
    symbols: Vec<String>,
    terms: BTreeMap<Monomial, Rational>,
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial(Vec::new()), c);
        }
        MPoly {
            symbols: Vec::new(),
            terms,
        }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(super::int(n))
    }

    pub fn var(name: &str) -> Self {
        Self::monomial(Rational::one(), &[(name, 1)])
    }

    /// `coeff * prod name^exp`.
    pub fn monomial(coeff: Rational, powers: &[(&str, i32)]) -> Self {
        let mut symbols: Vec<String> = powers.iter().map(|(s, _)| s.to_string()).collect();
        symbols.sort();
        symbols.dedup();
        let mut exps = vec![0; symbols.len()];
        for (s, e) in powers {
            let i = symbols.iter().position(|x| x == s).unwrap();
            exps[i] += e;
        }
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(exps), coeff);
        Self::normalized(symbols, terms)
    }

    fn normalized(symbols: Vec<String>, mut terms: BTreeMap<Monomial, Rational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        let used: Vec<bool> = (0..symbols.len())
            .map(|i| terms.keys().any(|m| m.0[i] != 0))
            .collect();
        if used.iter().all(|&u| u) {
            return MPoly { symbols, terms };
        }
        let kept: Vec<String> = symbols
            .iter()
            .zip(&used)
            .filter(|(_, &u)| u)
            .map(|(s, _)| s.clone())
            .collect();
        let terms = terms
            .into_iter()
            .map(|(m, c)| {
                let exps = m
                    .0
                    .iter()
                    .zip(&used)
                    .filter(|(_, &u)| u)
                    .map(|(&e, _)| e)
                    .collect();
                (Monomial(exps), c)
            })
            .collect();
        MPoly {
            symbols: kept,
            terms,
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if !self.is_constant() {
            return None;
        }
        Some(self.terms.values().next().cloned().unwrap_or_else(Rational::zero))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms as `(coefficient, [(symbol, exponent)])`, highest graded-lex first.
    pub fn terms(&self) -> Vec<(Rational, Vec<(String, i32)>)> {
        self.terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let powers = self
                    .symbols
                    .iter()
                    .zip(&m.0)
                    .filter(|(_, &e)| e != 0)
                    .map(|(s, &e)| (s.clone(), e))
                    .collect();
                (c.clone(), powers)
            })
            .collect()
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == name)
    }

    /// Largest exponent of `name`; `None` for the zero polynomial.
    pub fn degree_in(&self, name: &str) -> Option<i32> {
        if self.is_zero() {
            return None;
        }
        Some(match self.index_of(name) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).max().unwrap(),
            None => 0,
        })
    }

    pub fn min_degree_in(&self, name: &str) -> Option<i32> {
        if self.is_zero() {
            return None;
        }
        Some(match self.index_of(name) {
            Some(i) => self.terms.keys().map(|m| m.0[i]).min().unwrap(),
            None => 0,
        })
    }

    /// Coefficient of `name^k`, as a polynomial in the remaining symbols.
    pub fn coeff_in(&self, name: &str, k: i32) -> MPoly {
        let Some(i) = self.index_of(name) else {
            return if k == 0 { self.clone() } else { MPoly::zero() };
        };
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.0[i] == k)
            .map(|(m, c)| {
                let mut e = m.0.clone();
                e[i] = 0;
                (Monomial(e), c.clone())
            })
            .collect();
        Self::normalized(self.symbols.clone(), terms)
    }

    /// Re-expresses the exponent vectors over a superset of symbols.
    fn widen(&self, symbols: &[String]) -> impl Iterator<Item = (Vec<i32>, &Rational)> + '_ {
        let map: Vec<usize> = self
            .symbols
            .iter()
            .map(|s| symbols.iter().position(|x| x == s).unwrap())
            .collect();
        let n = symbols.len();
        self.terms.iter().map(move |(m, c)| {
            let mut e = vec![0; n];
            for (k, &j) in map.iter().enumerate() {
                e[j] = m.0[k];
            }
            (e, c)
        })
    }

    fn union(&self, other: &MPoly) -> Vec<String> {
        let mut s = self.symbols.clone();
        for x in &other.symbols {
            if !s.contains(x) {
                s.push(x.clone());
            }
        }
        s.sort();
        s
    }

    fn combine(&self, other: &MPoly, sign: i32) -> MPoly {
        if self.symbols == other.symbols {
            let mut terms = self.terms.clone();
            for (m, c) in &other.terms {
                let entry = terms.entry(m.clone()).or_insert_with(Rational::zero);
                if sign > 0 {
                    *entry += c;
                } else {
                    *entry -= c;
                }
            }
            return Self::normalized(self.symbols.clone(), terms);
        }
        let symbols = self.union(other);
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (e, c) in self.widen(&symbols) {
            *terms.entry(Monomial(e)).or_insert_with(Rational::zero) += c;
        }
        for (e, c) in other.widen(&symbols) {
            let entry = terms.entry(Monomial(e)).or_insert_with(Rational::zero);
            if sign > 0 {
                *entry += c;
            } else {
                *entry -= c;
            }
        }
        Self::normalized(symbols, terms)
    }

    fn product(&self, other: &MPoly) -> MPoly {
        if self.is_zero() || other.is_zero() {
            return MPoly::zero();
        }
        let symbols = self.union(other);
        let left: Vec<_> = self.widen(&symbols).collect();
        let right: Vec<_> = other.widen(&symbols).collect();
        let mut terms: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ea, ca) in &left {
            for (eb, cb) in &right {
                let e: Vec<i32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *terms.entry(Monomial(e)).or_insert_with(Rational::zero) += *ca * *cb;
            }
        }
        Self::normalized(symbols, terms)
    }

    pub fn scale(&self, c: &Rational) -> MPoly {
        let terms = self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect();
        Self::normalized(self.symbols.clone(), terms)
    }

    pub fn pow(&self, k: u32) -> MPoly {
        let mut acc = MPoly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Inverse of a single nonzero term, which is again a Laurent monomial.
    pub fn unit_inverse(&self) -> Option<MPoly> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let exps = m.0.iter().map(|e| -e).collect();
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(exps), c.recip());
        Some(MPoly {
            symbols: self.symbols.clone(),
            terms,
        })
    }

    /// Integer power, negative exponents allowed for units.
    pub fn powi(&self, k: i32) -> Option<MPoly> {
        if k >= 0 {
            Some(self.pow(k as u32))
        } else {
            self.unit_inverse().map(|u| u.pow((-k) as u32))
        }
    }

    /// Replaces `name` by `value` everywhere.
    pub fn substitute(&self, name: &str, value: &MPoly) -> Result<MPoly, AlgebraError> {
        let Some(i) = self.index_of(name) else {
            return Ok(self.clone());
        };
        let mut cache: BTreeMap<i32, MPoly> = BTreeMap::new();
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let k = m.0[i];
            if !cache.contains_key(&k) {
                let p = value
                    .powi(k)
                    .ok_or_else(|| AlgebraError::NonUnitSubstitution(name.to_string()))?;
                cache.insert(k, p);
            }
            let mut e = m.0.clone();
            e[i] = 0;
            let mut rest = BTreeMap::new();
            rest.insert(Monomial(e), c.clone());
            let rest = Self::normalized(self.symbols.clone(), rest);
            out = &out + &(&rest * &cache[&k]);
        }
        Ok(out)
    }

    /// Substitutes every bound symbol by an exact rational; unbound symbols stay.
    pub fn subs(&self, values: &BTreeMap<String, Rational>) -> Result<MPoly, AlgebraError> {
        let mut out = self.clone();
        for (name, v) in values {
            if out.index_of(name).is_some() {
                if v.is_zero() && out.min_degree_in(name).unwrap_or(0) < 0 {
                    return Err(AlgebraError::DivisionByZero);
                }
                out = out.substitute(name, &MPoly::constant(v.clone()))?;
            }
        }
        Ok(out)
    }

    pub fn rename(&self, from: &str, to: &str) -> MPoly {
        if from == to {
            return self.clone();
        }
        self.substitute(from, &MPoly::var(to))
            .expect("a variable is always a unit")
    }

    pub fn eval_exact(&self, values: &BTreeMap<String, Rational>) -> Result<Rational, AlgebraError> {
        let reduced = self.subs(values)?;
        match reduced.symbols.first() {
            Some(s) => Err(AlgebraError::UnboundSymbol(s.clone())),
            None => Ok(reduced.as_constant().unwrap()),
        }
    }

    pub fn eval_f64(&self, values: &BTreeMap<String, f64>) -> Result<f64, AlgebraError> {
        let xs: Vec<f64> = self
            .symbols
            .iter()
            .map(|s| {
                values
                    .get(s)
                    .copied()
                    .ok_or_else(|| AlgebraError::UnboundSymbol(s.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                to_f64(c)
                    * m.0
                        .iter()
                        .zip(&xs)
                        .map(|(&e, &x)| x.powi(e))
                        .product::<f64>()
            })
            .sum())
    }

    /// Evaluates exactly when every needed binding is rational, numerically
    /// otherwise.
    pub fn eval(&self, bindings: &Bindings) -> Result<Binding, AlgebraError> {
        let mut exact = BTreeMap::new();
        let mut real = BTreeMap::new();
        let mut all_exact = true;
        for s in &self.symbols {
            match bindings.get(s) {
                None => return Err(AlgebraError::UnboundSymbol(s.clone())),
                Some(Binding::Exact(r)) => {
                    exact.insert(s.clone(), r.clone());
                    real.insert(s.clone(), to_f64(r));
                }
                Some(Binding::Real(x)) => {
                    all_exact = false;
                    real.insert(s.clone(), *x);
                }
            }
        }
        if all_exact {
            self.eval_exact(&exact).map(Binding::Exact)
        } else {
            self.eval_f64(&real).map(Binding::Real)
        }
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (c, powers)) in self.terms().into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let factors: Vec<String> = powers
                .iter()
                .map(|(s, e)| {
                    if *e == 1 {
                        s.clone()
                    } else if *e < 0 {
                        format!("{s}^({e})")
                    } else {
                        format!("{s}^{e}")
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&MPoly> for &MPoly {
            type Output = MPoly;
            fn $method(self, rhs: &MPoly) -> MPoly {
                $body(self, rhs)
            }
        }
        impl $trait<MPoly> for MPoly {
            type Output = MPoly;
            fn $method(self, rhs: MPoly) -> MPoly {
                $body(&self, &rhs)
            }
        }
        impl $trait<&MPoly> for MPoly {
            type Output = MPoly;
            fn $method(self, rhs: &MPoly) -> MPoly {
                $body(&self, rhs)
            }
        }
        impl $trait<MPoly> for &MPoly {
            type Output = MPoly;
            fn $method(self, rhs: MPoly) -> MPoly {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &MPoly, b: &MPoly| a.combine(b, 1));
forward_binop!(Sub, sub, |a: &MPoly, b: &MPoly| a.combine(b, -1));
forward_binop!(Mul, mul, |a: &MPoly, b: &MPoly| a.product(b));

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&-Rational::one())
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&-Rational::one())
    }
}

impl From<Rational> for MPoly {
    fn from(r: Rational) -> Self {
        MPoly::constant(r)
    }
}

impl From<i64> for MPoly {
    fn from(n: i64) -> Self {
        MPoly::int(n)
    }
}
