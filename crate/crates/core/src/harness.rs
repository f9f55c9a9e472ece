//! Harness structure of a recurrence: the linear decomposition of the
//! coefficients over `{alpha_1(t), gamma_0(t)}`, the quadratic-harness
//! coefficients `A..F`, and the five recursive compatibility equations.

use std::collections::BTreeMap;
use std::fmt;

use num::Signed;
use thiserror::Error;

use crate::exactalg::{int, to_f64, AlgebraError, Frac, MPoly, Rational, Scalar};
use crate::orthopoly::{NormSequence, OrthoError, Recurrence, Sequence, Q, T};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("p̂(u) = p̂(s); the linear weights are undefined")]
    DegeneratePhat,
    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),
    #[error("alpha_1 and gamma_0 are proportional; the decomposition is not unique")]
    NonUniqueDecomposition,
    #[error("determinant {0} of the sample system is not a rational constant")]
    SymbolicDeterminant(String),
    #[error("not a harness: {coefficient}_{index} leaves residual {residual}")]
    NotAHarness {
        index: usize,
        coefficient: &'static str,
        residual: String,
    },
    #[error("the map needs p̂(t) = t")]
    NotNormalized,
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// The six numbers of a quadratic harness. `kappa` and `lambda` are always
/// recomputed from them.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessParams<T> {
    pub a: T,
    pub a_hat: T,
    pub b: T,
    pub b_hat: T,
    pub c: T,
    pub c_hat: T,
}

impl<T: Scalar> HarnessParams<T> {
    pub fn new(a: T, a_hat: T, b: T, b_hat: T, c: T, c_hat: T) -> Self {
        HarnessParams {
            a,
            a_hat,
            b,
            b_hat,
            c,
            c_hat,
        }
    }

    pub fn kappa(&self) -> T {
        T::one() + self.b.clone() * self.b_hat.clone() + self.a_hat.clone() * self.c.clone()
    }

    pub fn lambda(&self) -> T {
        self.a.clone() * self.c_hat.clone() - self.a_hat.clone() * self.c.clone()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> HarnessParams<U> {
        HarnessParams {
            a: f(&self.a),
            a_hat: f(&self.a_hat),
            b: f(&self.b),
            b_hat: f(&self.b_hat),
            c: f(&self.c),
            c_hat: f(&self.c_hat),
        }
    }

    /// `a + â p̂`
    pub fn alpha_factor(&self, p: &T) -> T {
        self.a.clone() + self.a_hat.clone() * p.clone()
    }

    /// `c + ĉ p̂`
    pub fn gamma_factor(&self, p: &T) -> T {
        self.c.clone() + self.c_hat.clone() * p.clone()
    }

    /// `b + b̂ p̂`
    pub fn beta_factor(&self, p: &T) -> T {
        self.b.clone() + self.b_hat.clone() * p.clone()
    }
}

impl HarnessParams<Rational> {
    pub fn to_f64(&self) -> HarnessParams<f64> {
        self.map(to_f64)
    }
}

impl HarnessParams<MPoly> {
    /// Exact values once every parameter symbol is bound.
    pub fn to_rational(&self, values: &BTreeMap<String, Rational>) -> Result<HarnessParams<Rational>, AlgebraError> {
        let ev = |p: &MPoly| p.eval_exact(values);
        Ok(HarnessParams {
            a: ev(&self.a)?,
            a_hat: ev(&self.a_hat)?,
            b: ev(&self.b)?,
            b_hat: ev(&self.b_hat)?,
            c: ev(&self.c)?,
            c_hat: ev(&self.c_hat)?,
        })
    }
}

/// Coefficient sequences `a_n, â_n, b_n, b̂_n, c_n, ĉ_n`, stored from index 0.
/// Reads past the end or at negative indices give zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceParams<T> {
    pub a: Vec<T>,
    pub a_hat: Vec<T>,
    pub b: Vec<T>,
    pub b_hat: Vec<T>,
    pub c: Vec<T>,
    pub c_hat: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Coefficient {
    A,
    AHat,
    B,
    BHat,
    C,
    CHat,
}

impl Coefficient {
    fn label(self) -> &'static str {
        match self {
            Coefficient::A => "a",
            Coefficient::AHat => "a_hat",
            Coefficient::B => "b",
            Coefficient::BHat => "b_hat",
            Coefficient::C => "c",
            Coefficient::CHat => "c_hat",
        }
    }
}

impl<T: Scalar> SequenceParams<T> {
    /// Builds the sequences from index functions, `0..=n_max`.
    pub fn from_fn(n_max: usize, f: impl Fn(Coefficient, usize) -> T) -> Self {
        let col = |k| (0..=n_max).map(|n| f(k, n)).collect();
        SequenceParams {
            a: col(Coefficient::A),
            a_hat: col(Coefficient::AHat),
            b: col(Coefficient::B),
            b_hat: col(Coefficient::BHat),
            c: col(Coefficient::C),
            c_hat: col(Coefficient::CHat),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn column(&self, k: Coefficient) -> &Vec<T> {
        match k {
            Coefficient::A => &self.a,
            Coefficient::AHat => &self.a_hat,
            Coefficient::B => &self.b,
            Coefficient::BHat => &self.b_hat,
            Coefficient::C => &self.c,
            Coefficient::CHat => &self.c_hat,
        }
    }

    pub fn get(&self, k: Coefficient, n: i64) -> T {
        if n < 0 {
            return T::zero();
        }
        self.column(k).get(n as usize).cloned().unwrap_or_else(T::zero)
    }

    /// Harness parameters carried by the first nontrivial entries:
    /// `a = a_2, â = â_2, b = b_1, b̂ = b̂_1, c = c_1, ĉ = ĉ_1`.
    pub fn harness_params(&self) -> HarnessParams<T> {
        HarnessParams {
            a: self.get(Coefficient::A, 2),
            a_hat: self.get(Coefficient::AHat, 2),
            b: self.get(Coefficient::B, 1),
            b_hat: self.get(Coefficient::BHat, 1),
            c: self.get(Coefficient::C, 1),
            c_hat: self.get(Coefficient::CHat, 1),
        }
    }

    /// Entries that break the boundary values
    /// `a_0 = â_0 = â_1 = b_0 = b̂_0 = c_0 = 0`, `a_1 = ĉ_0 = 1`.
    pub fn boundary_violations(&self) -> Vec<(Coefficient, usize)> {
        use Coefficient::*;
        let expect = [
            (A, 0, T::zero()),
            (AHat, 0, T::zero()),
            (AHat, 1, T::zero()),
            (B, 0, T::zero()),
            (BHat, 0, T::zero()),
            (C, 0, T::zero()),
            (A, 1, T::one()),
            (CHat, 0, T::one()),
        ];
        expect
            .into_iter()
            .filter(|(k, n, v)| self.get(*k, *n as i64) != *v)
            .map(|(k, n, _)| (k, n))
            .collect()
    }
}

impl SequenceParams<MPoly> {
    pub fn subs(&self, values: &BTreeMap<String, Rational>) -> Result<SequenceParams<MPoly>, AlgebraError> {
        let col = |v: &Vec<MPoly>| v.iter().map(|p| p.subs(values)).collect::<Result<Vec<_>, _>>();
        Ok(SequenceParams {
            a: col(&self.a)?,
            a_hat: col(&self.a_hat)?,
            b: col(&self.b)?,
            b_hat: col(&self.b_hat)?,
            c: col(&self.c)?,
            c_hat: col(&self.c_hat)?,
        })
    }
}

/// Output of [`extract_harness_params`].
#[derive(Debug, Clone)]
pub struct Extraction {
    pub sequences: SequenceParams<MPoly>,
    pub alpha1: MPoly,
    pub gamma0: MPoly,
    pub beta0: MPoly,
    /// `p̂(t) = p̂_1(t) = gamma_0 / alpha_1`, in reduced form when `alpha_1` is a unit.
    pub phat: Frac<MPoly>,
}

impl Extraction {
    pub fn harness_params(&self) -> HarnessParams<MPoly> {
        self.sequences.harness_params()
    }
}

fn is_time_symbol(s: &str) -> bool {
    s == T || s.starts_with("E_")
}

fn at_sample(p: &MPoly, v: &Rational) -> Result<MPoly, AlgebraError> {
    let values: BTreeMap<String, Rational> = p
        .symbols()
        .iter()
        .filter(|s| is_time_symbol(s))
        .map(|s| (s.clone(), v.clone()))
        .collect();
    p.subs(&values)
}

/// Writes `beta_n - beta_0`, `alpha_n` and `gamma_n` over the basis
/// `{alpha_1(t), gamma_0(t)}` for `n <= n_max + 2`.
///
/// Coefficients are found from two sample times and then confirmed as exact
/// polynomial identities. `norms` must agree with the recurrence at `n = 1`.
pub fn extract_harness_params(
    rec: &Recurrence,
    norms: &NormSequence,
    n_max: usize,
) -> Result<Extraction, HarnessError> {
    let alpha1 = rec.alpha(1);
    let gamma0 = rec.gamma(0);
    let beta0 = rec.beta(0);

    // first pair of sample times with a nonzero 2x2 determinant
    let candidates: Vec<Rational> = [1, 2, 3, 5, 7, 11, 13].iter().map(|&k| int(k)).collect();
    let mut chosen = None;
    'outer: for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let (t1, t2) = (&candidates[i], &candidates[j]);
            let det = &(&at_sample(&alpha1, t1)? * &at_sample(&gamma0, t2)?)
                - &(&at_sample(&alpha1, t2)? * &at_sample(&gamma0, t1)?);
            if !det.is_zero() {
                chosen = Some((t1.clone(), t2.clone(), det));
                break 'outer;
            }
        }
    }
    let (t1, t2, det) = chosen.ok_or(HarnessError::NonUniqueDecomposition)?;
    // a monomial in the parameters (e.g. mu) is still invertible
    let det_inv = det
        .unit_inverse()
        .ok_or_else(|| HarnessError::SymbolicDeterminant(det.to_string()))?;
    let (a1, a2) = (at_sample(&alpha1, &t1)?, at_sample(&alpha1, &t2)?);
    let (g1, g2) = (at_sample(&gamma0, &t1)?, at_sample(&gamma0, &t2)?);

    let solve = |target: &MPoly, k: Coefficient, n: usize| -> Result<(MPoly, MPoly), HarnessError> {
        let (y1, y2) = (at_sample(target, &t1)?, at_sample(target, &t2)?);
        // Cramer on [[a1, g1], [a2, g2]] (x, y) = (y1, y2)
        let x = &(&(&y1 * &g2) - &(&y2 * &g1)) * &det_inv;
        let y = &(&(&a1 * &y2) - &(&a2 * &y1)) * &det_inv;
        let residual = target - &(&(&x * &alpha1) + &(&y * &gamma0));
        if !residual.is_zero() {
            return Err(HarnessError::NotAHarness {
                index: n,
                coefficient: k.label(),
                residual: residual.to_string(),
            });
        }
        Ok((x, y))
    };

    let len = n_max + 3;
    let mut sp = SequenceParams {
        a: Vec::with_capacity(len),
        a_hat: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        b_hat: Vec::with_capacity(len),
        c: Vec::with_capacity(len),
        c_hat: Vec::with_capacity(len),
    };
    for n in 0..len {
        let ni = n as i64;
        let (a, ah) = solve(&rec.alpha(ni), Coefficient::A, n)?;
        let (b, bh) = solve(&(&rec.beta(ni) - &beta0), Coefficient::B, n)?;
        let (c, ch) = solve(&rec.gamma(ni), Coefficient::C, n)?;
        sp.a.push(a);
        sp.a_hat.push(ah);
        sp.b.push(b);
        sp.b_hat.push(bh);
        sp.c.push(c);
        sp.c_hat.push(ch);
    }

    let phat = match alpha1.unit_inverse() {
        Some(inv) => Frac::from_value(&gamma0 * &inv),
        None => Frac::new(gamma0.clone(), alpha1.clone())?,
    };
    if norms.len() > 1 {
        let lhs = norms.get(1) * &alpha1;
        let rhs = norms.get(0) * &gamma0;
        if lhs != rhs {
            return Err(HarnessError::NotAHarness {
                index: 1,
                coefficient: "p_hat",
                residual: (&lhs - &rhs).to_string(),
            });
        }
    }
    Ok(Extraction {
        sequences: sp,
        alpha1,
        gamma0,
        beta0,
        phat,
    })
}

/// Inverse of [`extract_harness_params`]: rebuilds the recurrence from the
/// sequences and the three seed functions. Indices past the stored range
/// read as zero.
pub fn build_recurrence(sp: &SequenceParams<MPoly>, alpha1: &MPoly, gamma0: &MPoly, beta0: &MPoly) -> Recurrence {
    let combine = |x: Vec<MPoly>, y: Vec<MPoly>, shift: Option<MPoly>| {
        let (alpha1, gamma0) = (alpha1.clone(), gamma0.clone());
        Sequence::new(move |n| {
            let pick = |v: &Vec<MPoly>| v.get(n as usize).cloned().unwrap_or_else(MPoly::zero);
            let base = &(&pick(&x) * &alpha1) + &(&pick(&y) * &gamma0);
            match &shift {
                Some(s) => &base + s,
                None => base,
            }
        })
    };
    Recurrence::new(
        combine(sp.a.clone(), sp.a_hat.clone(), None),
        combine(sp.b.clone(), sp.b_hat.clone(), Some(beta0.clone())),
        combine(sp.c.clone(), sp.c_hat.clone(), None),
    )
}

/// `(Â, B̂)` with `Â + B̂ = 1` and `Â p̂(s) + B̂ p̂(u) = p̂(t)`.
pub fn linear_weights<T: Scalar>(ps: &T, pt: &T, pu: &T) -> Result<(Frac<T>, Frac<T>), HarnessError> {
    let den = pu.clone() - ps.clone();
    if den.is_zero() {
        return Err(HarnessError::DegeneratePhat);
    }
    Ok((
        Frac {
            num: pu.clone() - pt.clone(),
            den: den.clone(),
        },
        Frac {
            num: pt.clone() - ps.clone(),
            den,
        },
    ))
}

pub fn linear_harness_weights(phat: impl Fn(f64) -> f64, s: f64, t: f64, u: f64) -> Result<(f64, f64), HarnessError> {
    let (wa, wb) = linear_weights(&phat(s), &phat(t), &phat(u))?;
    Ok((wa.value(), wb.value()))
}

/// `p̂_2 = p̂ (c + ĉ p̂) / (a + â p̂)`.
pub fn phat2<T: Scalar>(hp: &HarnessParams<T>, p: &T) -> Result<Frac<T>, HarnessError> {
    let den = hp.alpha_factor(p);
    if den.is_zero() {
        return Err(HarnessError::ZeroDenominator("a + â p̂(t)"));
    }
    Ok(Frac {
        num: p.clone() * hp.gamma_factor(p),
        den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhBranch {
    Generic,
    KappaZero,
    LambdaZero,
    /// `κ = λ = 0`: `B` is a free parameter.
    Degenerate,
}

/// `E(X_t² | F_{s,u}) = A X_s² + B X_s X_u + C X_u² + D X_s + E X_u + F`
/// in the orthogonal-polynomial form. Fields keep the customary capitals.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct QhCoeffs<T> {
    pub A: Frac<T>,
    pub B: Frac<T>,
    pub C: Frac<T>,
    pub D: Frac<T>,
    pub E: Frac<T>,
    pub F: Frac<T>,
    pub branch: QhBranch,
}

impl QhCoeffs<f64> {
    pub fn values(&self) -> [f64; 6] {
        [self.A.value(), self.B.value(), self.C.value(), self.D.value(), self.E.value(), self.F.value()]
    }
}

impl QhCoeffs<Rational> {
    pub fn values(&self) -> [Rational; 6] {
        [self.A.value(), self.B.value(), self.C.value(), self.D.value(), self.E.value(), self.F.value()]
    }
}

fn frac<T: Scalar>(num: T, den: T, what: &'static str) -> Result<Frac<T>, HarnessError> {
    if den.is_zero() {
        return Err(HarnessError::ZeroDenominator(what));
    }
    Ok(Frac { num, den })
}

/// Representative `B` for the `κ = λ = 0` branch:
/// `(p̂t − p̂s)(p̂u − p̂t) / ((p̂u − p̂s) p̂s (a + â p̂t))`.
pub fn default_free_b<T: Scalar>(hp: &HarnessParams<T>, ps: &T, pt: &T, pu: &T) -> Result<Frac<T>, HarnessError> {
    frac(
        (pt.clone() - ps.clone()) * (pu.clone() - pt.clone()),
        (pu.clone() - ps.clone()) * ps.clone() * hp.alpha_factor(pt),
        "(p̂(u) − p̂(s)) p̂(s) (a + â p̂(t))",
    )
}

/// Quadratic-harness coefficients from the harness parameters and the values
/// `p̂(s), p̂(t), p̂(u)`. `free_b` is consulted only when `κ = λ = 0`; if it is
/// `None` there, [`default_free_b`] is used.
pub fn qh_coeffs<T: Scalar>(
    hp: &HarnessParams<T>,
    ps: &T,
    pt: &T,
    pu: &T,
    free_b: Option<Frac<T>>,
) -> Result<QhCoeffs<T>, HarnessError> {
    let (kappa, lambda) = (hp.kappa(), hp.lambda());
    let (a, ah, c, ch) = (&hp.a, &hp.a_hat, &hp.c, &hp.c_hat);
    let d_us = pu.clone() - ps.clone();
    let d_ts = pt.clone() - ps.clone();
    let d_ut = pu.clone() - pt.clone();
    if d_us.is_zero() {
        return Err(HarnessError::DegeneratePhat);
    }
    let at = hp.alpha_factor(pt);

    let (big_a, big_b, big_c, branch) = match (kappa.is_zero(), lambda.is_zero()) {
        (false, false) => {
            let kml = kappa.clone() - lambda.clone();
            // p1 p2 â ĉ κ + p2 a ĉ κ + p1 a ĉ (κ − λ) + a c κ
            let dn = |p1: &T, p2: &T| {
                p1.clone() * p2.clone() * ah.clone() * ch.clone() * kappa.clone()
                    + p2.clone() * a.clone() * ch.clone() * kappa.clone()
                    + p1.clone() * a.clone() * ch.clone() * kml.clone()
                    + a.clone() * c.clone() * kappa.clone()
            };
            let den = at.clone() * d_us.clone() * dn(ps, pu);
            let what = "(a + â p̂(t)) (p̂(u) − p̂(s)) (p̂(s)p̂(u)âĉκ + p̂(u)aĉκ + p̂(s)aĉ(κ−λ) + acκ)";
            (
                frac(hp.alpha_factor(ps) * d_ut.clone() * dn(pt, pu), den.clone(), what)?,
                frac(a.clone() * ch.clone() * lambda.clone() * d_ts.clone() * d_ut.clone(), den.clone(), what)?,
                frac(hp.alpha_factor(pu) * d_ts.clone() * dn(ps, pt), den, what)?,
                QhBranch::Generic,
            )
        }
        (true, false) => {
            let den = at.clone() * d_us.clone() * ps.clone();
            let what = "(a + â p̂(t)) (p̂(u) − p̂(s)) p̂(s)";
            (
                frac(hp.alpha_factor(ps) * d_ut.clone() * pt.clone(), den.clone(), what)?,
                frac(-(d_ts.clone() * d_ut.clone()), den, what)?,
                frac(
                    hp.alpha_factor(pu) * d_ts.clone(),
                    at.clone() * d_us.clone(),
                    "(a + â p̂(t)) (p̂(u) − p̂(s))",
                )?,
                QhBranch::KappaZero,
            )
        }
        (false, true) => {
            let (wa, wc) = linear_weights(ps, pt, pu)?;
            (wa, Frac::from_value(T::zero()), wc, QhBranch::LambdaZero)
        }
        (true, true) => {
            let b = match free_b {
                Some(b) => b,
                None => default_free_b(hp, ps, pt, pu)?,
            };
            let (wa, wc) = linear_weights(ps, pt, pu)?;
            if ch.is_zero() {
                return Err(HarnessError::ZeroDenominator("ĉ"));
            }
            let shift_a = b.clone() * Frac { num: ah.clone() * c.clone(), den: ch.clone() };
            let shift_c = b.clone() * Frac::from_value(ah.clone() * ps.clone());
            (wa - shift_a, b, wc - shift_c, QhBranch::Degenerate)
        }
    };
    let d = -(big_b.clone() * Frac::from_value(hp.b.clone()));
    let e = -(big_b.clone() * Frac::from_value(hp.b_hat.clone() * ps.clone()));
    let f = -(big_b.clone() * Frac::from_value(ps.clone()));
    Ok(QhCoeffs {
        A: big_a,
        B: big_b,
        C: big_c,
        D: d,
        E: e,
        F: f,
        branch,
    })
}

/// Residuals of the linear system the coefficients solve: the `F` relation,
/// the three equations for `A, B, C`, and the two for `D, E`.
pub fn qh_identity_residuals<T: Scalar>(
    hp: &HarnessParams<T>,
    ps: &T,
    pt: &T,
    pu: &T,
    k: &QhCoeffs<T>,
) -> Result<[Frac<T>; 6], HarnessError> {
    let v = |x: T| Frac::from_value(x);
    let (fs, ft, fu) = (hp.gamma_factor(ps), hp.gamma_factor(pt), hp.gamma_factor(pu));
    let ratio = |p: &T| frac(p.clone() * hp.gamma_factor(p), hp.alpha_factor(p), "a + â p̂");

    let r_f = k.F.clone() + k.B.clone() * v(ps.clone());
    let r_1 = k.A.clone() + k.C.clone() + k.B.clone() * v(hp.alpha_factor(ps)) - v(T::one());
    let r_2 = ratio(pt)?
        - k.A.clone() * ratio(ps)?
        - k.C.clone() * ratio(pu)?
        - k.B.clone() * v(ps.clone() * fu.clone());
    let r_3 = v(ft)
        - k.A.clone() * v(fs.clone())
        - k.C.clone() * v(fu)
        - k.B.clone()
            * v((pu.clone() - ps.clone()) * (T::one() + hp.b.clone() * hp.b_hat.clone())
                + hp.alpha_factor(pu) * fs);
    let r_d1 = k.D.clone() + k.E.clone() + k.B.clone() * v(hp.beta_factor(ps));
    let r_d2 = k.D.clone() * v(ps.clone())
        + k.E.clone() * v(pu.clone())
        + k.B.clone() * v(ps.clone() * hp.beta_factor(pu));
    Ok([r_f, r_1, r_2, r_3, r_d1, r_d2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EquationId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquationId::E1 => "e1",
            EquationId::E2 => "e2",
            EquationId::E3 => "e3",
            EquationId::E4 => "e4",
            EquationId::E5 => "e5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationValues<T> {
    pub id: EquationId,
    pub lhs: T,
    pub rhs: T,
}

impl<T: Scalar> EquationValues<T> {
    pub fn holds(&self) -> bool {
        (self.lhs.clone() - self.rhs.clone()).is_zero()
    }
}

/// Both sides of the five compatibility equations at a single `n`.
/// `get(k, j)` must return the coefficient `k` at index `n + j`.
pub fn qh_equations<T: Scalar>(hp: &HarnessParams<T>, get: impl Fn(Coefficient, i64) -> T) -> [EquationValues<T>; 5] {
    use Coefficient::*;
    let (a, ah, b, bh, c, ch) = (
        hp.a.clone(),
        hp.a_hat.clone(),
        hp.b.clone(),
        hp.b_hat.clone(),
        hp.c.clone(),
        hp.c_hat.clone(),
    );
    let kappa = hp.kappa();
    let kml = kappa.clone() - hp.lambda();
    let ac = a.clone() * c.clone();
    let ahch = ah.clone() * ch.clone();
    let ach = a.clone() * ch.clone();
    let g = |k, j| get(k, j);
    let bmix = bh.clone() * c.clone() - b.clone() * ch.clone();
    let bmix2 = ah.clone() * b.clone() - a.clone() * bh.clone();

    let e1 = EquationValues {
        id: EquationId::E1,
        lhs: kappa.clone()
            * (ahch.clone() * g(A, 1) * g(A, 2) + g(AHat, 1) * g(AHat, 2) * ac.clone()
                - ach.clone() * g(A, 1) * g(AHat, 2)),
        rhs: kml.clone() * ach.clone() * g(AHat, 1) * g(A, 2),
    };
    let e2 = EquationValues {
        id: EquationId::E2,
        lhs: kappa.clone()
            * (ahch.clone() * g(C, -2) * g(C, -1) - ach.clone() * g(CHat, -2) * g(C, -1)
                + ac.clone() * g(CHat, -2) * g(CHat, -1)),
        rhs: kml.clone() * ach.clone() * g(C, -2) * g(CHat, -1),
    };
    let e3 = EquationValues {
        id: EquationId::E3,
        lhs: kappa.clone()
            * (ac.clone() * g(AHat, 1) * (g(BHat, 1) + g(BHat, 0))
                + ahch.clone() * g(A, 1) * (g(B, 1) + g(B, 0))
                - bmix.clone() * a.clone() * g(AHat, 1)
                - bmix2.clone() * ch.clone() * g(A, 1)),
        rhs: ach.clone()
            * (kml.clone() * (g(AHat, 1) * g(B, 1) + g(A, 1) * g(BHat, 0))
                + kappa.clone() * (g(A, 1) * g(BHat, 1) + g(AHat, 1) * g(B, 0))),
    };
    let e4 = EquationValues {
        id: EquationId::E4,
        lhs: kappa.clone()
            * (ahch.clone() * g(C, -1) * (g(B, 0) + g(B, -1))
                + ac.clone() * g(CHat, -1) * (g(BHat, 0) + g(BHat, -1))
                - bmix * a.clone() * g(CHat, -1)
                - bmix2 * ch.clone() * g(C, -1)),
        rhs: ach.clone()
            * (kml.clone() * (g(C, -1) * g(BHat, 0) + g(CHat, -1) * g(B, -1))
                + kappa.clone() * (g(CHat, -1) * g(B, 0) + g(C, -1) * g(BHat, -1))),
    };
    let e5 = EquationValues {
        id: EquationId::E5,
        lhs: kappa.clone()
            * (ac
                * (g(AHat, 1) * g(CHat, 0) + g(AHat, 0) * g(CHat, -1) + g(BHat, 0) * (g(BHat, 0) - bh.clone()))
                + ahch * (g(A, 1) * g(C, 0) + g(A, 0) * g(C, -1) + g(B, 0) * (g(B, 0) - b.clone()))
                + ach.clone()),
        rhs: ach
            * (kml * (g(AHat, 1) * g(C, 0) + g(A, 0) * g(CHat, -1) + g(B, 0) * g(BHat, 0))
                + kappa
                    * (g(A, 1) * g(CHat, 0) + g(AHat, 0) * g(C, -1) - b.clone() * bh.clone()
                        + (g(B, 0) - b) * (g(BHat, 0) - bh))),
    };
    [e1, e2, e3, e4, e5]
}

/// Scalars that may or may not have a numeric value (symbolic polynomials
/// do not until every symbol is bound).
pub trait Approx {
    fn approx(&self) -> Option<f64>;
}

impl Approx for f64 {
    fn approx(&self) -> Option<f64> {
        Some(*self)
    }
}

impl Approx for Rational {
    fn approx(&self) -> Option<f64> {
        Some(to_f64(self))
    }
}

impl Approx for MPoly {
    fn approx(&self) -> Option<f64> {
        self.as_constant().map(|c| to_f64(&c))
    }
}

#[derive(Debug, Clone)]
pub struct QhViolation<T> {
    pub equation: EquationId,
    pub n: usize,
    pub lhs: T,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct QhSystemReport<T> {
    pub ok: bool,
    /// In order of `n`, then equation.
    pub violations: Vec<QhViolation<T>>,
    /// `(n, p̂)` where `(a_n + â_n p̂)(c_n + ĉ_n p̂) <= 0`.
    pub positivity_violations: Vec<(usize, f64)>,
    /// False when some product could not be evaluated numerically.
    pub positivity_checked: bool,
}

impl<T> QhSystemReport<T> {
    pub fn witness(&self) -> Option<(EquationId, usize)> {
        self.violations.first().map(|v| (v.equation, v.n))
    }
}

/// Evaluates the five equations for `0 <= n <= n_max` and the positivity
/// constraint for `1 <= n <= n_max` at each `p̂` in `phat_samples`.
pub fn qh_system_check<T: Scalar + Approx>(
    sp: &SequenceParams<T>,
    hp: &HarnessParams<T>,
    n_max: usize,
    phat_samples: &[f64],
) -> QhSystemReport<T> {
    let mut violations = Vec::new();
    for n in 0..=n_max {
        let eqs = qh_equations(hp, |k, j| sp.get(k, n as i64 + j));
        for e in eqs {
            if !e.holds() {
                violations.push(QhViolation {
                    equation: e.id,
                    n,
                    lhs: e.lhs,
                    rhs: e.rhs,
                });
            }
        }
    }
    let mut positivity_violations = Vec::new();
    let mut positivity_checked = true;
    'pos: for n in 1..=n_max {
        let vals: Option<Vec<f64>> = [Coefficient::A, Coefficient::AHat, Coefficient::C, Coefficient::CHat]
            .iter()
            .map(|&k| sp.get(k, n as i64).approx())
            .collect();
        let Some(v) = vals else {
            positivity_checked = false;
            break 'pos;
        };
        for &p in phat_samples {
            if (v[0] + v[1] * p) * (v[2] + v[3] * p) <= 0.0 {
                positivity_violations.push((n, p));
            }
        }
    }
    QhSystemReport {
        ok: violations.is_empty() && positivity_violations.is_empty(),
        violations,
        positivity_violations,
        positivity_checked,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericFamily {
    /// `a_n = 1, â_n = b_n = b̂_n = c_n = 0, ĉ_n = [n+1]_q`.
    QHermite,
    /// `a_n = 1, b_n = n, ĉ_n = n + 1`, the rest zero.
    Poisson,
}

/// Symbol for `[n-1]_q` in the q-Hermite reduction.
pub const QN_SYMBOL: &str = "W";
/// Symbol for the index in the Poisson reduction.
pub const N_SYMBOL: &str = "n";

/// `[n + k]_q` written through `W = [n-1]_q`, valid for `k >= -1`.
pub fn shifted_q_int(k: i64) -> MPoly {
    assert!(k >= -1, "shift below the base index");
    let m = (k + 1) as u32;
    let q = MPoly::var(Q);
    &crate::orthopoly::q_int(m, &q) + &(&q.pow(m) * &MPoly::var(QN_SYMBOL))
}

/// The five equations with the index left symbolic (valid for `n >= 2`,
/// where no boundary value enters).
pub fn n_generic_reduction(family: GenericFamily, hp: &HarnessParams<MPoly>) -> [EquationValues<MPoly>; 5] {
    qh_equations(hp, |k, j| generic_value(family, k, j))
}

fn generic_value(family: GenericFamily, k: Coefficient, j: i64) -> MPoly {
    use Coefficient::*;
    let n = MPoly::var(N_SYMBOL);
    match (family, k) {
        (_, A) => MPoly::one(),
        (GenericFamily::QHermite, CHat) => shifted_q_int(j + 1),
        (GenericFamily::Poisson, CHat) => &n + &MPoly::int(j + 1),
        (GenericFamily::Poisson, B) => &n + &MPoly::int(j),
        _ => MPoly::zero(),
    }
}

fn shifted_name(base: &str, j: i64) -> String {
    match j {
        0 => base.to_string(),
        j if j > 0 => format!("{base}+{j}"),
        j => format!("{base}−{}", -j),
    }
}

fn generic_name(family: GenericFamily, k: Coefficient, j: i64) -> String {
    match (family, k) {
        (GenericFamily::QHermite, Coefficient::CHat) => format!("[{}]_q", shifted_name("n", j + 1)),
        (GenericFamily::Poisson, Coefficient::CHat) => shifted_name("n", j + 1),
        (GenericFamily::Poisson, Coefficient::B) => shifted_name("n", j),
        _ => format!("{}_{}", k.label(), shifted_name("n", j)),
    }
}

/// Polynomial in increasing total degree, no spaces, `−` for minus.
fn compact(p: &MPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms = p.terms();
    terms.sort_by_key(|(_, pw)| pw.iter().map(|(_, e)| *e).sum::<i32>());
    let mut out = String::new();
    for (k, (c, pw)) in terms.iter().enumerate() {
        if c.is_negative() {
            out.push('−');
        } else if k > 0 {
            out.push('+');
        }
        let mag = c.abs();
        let factors: Vec<String> = pw
            .iter()
            .map(|(s, e)| if *e == 1 { s.clone() } else { format!("{s}^{e}") })
            .collect();
        if factors.is_empty() || !num::One::is_one(&mag) {
            out.push_str(&mag.to_string());
        }
        out.push_str(&factors.join(""));
    }
    out
}

/// A coefficient as a leading factor: dropped when 1, a bare sign when −1,
/// parenthesized when it has several terms.
fn coefficient_prefix(c: &MPoly, alone: bool) -> String {
    if c.num_terms() > 1 {
        return format!("({})", compact(c));
    }
    match c.as_constant() {
        Some(v) if num::One::is_one(&v) && !alone => String::new(),
        Some(v) if num::One::is_one(&-v.clone()) && !alone => "−".into(),
        _ => compact(c),
    }
}

type Factor = (MPoly, String);

fn render_sum(terms: Vec<(MPoly, Vec<Factor>)>) -> String {
    let mut out = String::new();
    for (coef, factors) in terms {
        let value = factors.iter().fold(coef.clone(), |acc, (v, _)| &acc * v);
        if value.is_zero() {
            continue;
        }
        let shown: Vec<&Factor> = factors.iter().filter(|(v, _)| *v != MPoly::one()).collect();
        let mut term = coefficient_prefix(&coef, shown.is_empty());
        let wrap = shown.len() > 1 || !term.is_empty();
        for (_, name) in shown {
            if wrap && (name.contains('+') || name.contains('−')) && !name.starts_with('[') {
                term.push_str(&format!("({name})"));
            } else {
                term.push_str(name);
            }
        }
        if !out.is_empty() && !term.starts_with('−') {
            out.push('+');
        }
        out.push_str(&term);
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

/// The index-generic form of e5 with the parameter factors kept apart,
/// e.g. `(1+q)=(1+q)(−q[n]_q+[n+1]_q)` for q-Hermite sequences. Terms that
/// vanish identically are left out.
pub fn render_generic_e5(family: GenericFamily, hp: &HarnessParams<MPoly>) -> String {
    use Coefficient::*;
    let g = |k, j| (generic_value(family, k, j), generic_name(family, k, j));
    let shifted = |k, j, by: &MPoly| {
        let (v, name) = g(k, j);
        let label = if by.is_zero() { name } else { format!("{name}−{}", compact(by)) };
        (&v - by, label)
    };
    let (a, ah, b, bh, c, ch) = (&hp.a, &hp.a_hat, &hp.b, &hp.b_hat, &hp.c, &hp.c_hat);
    let kappa = hp.kappa();
    let kml = &kappa - &hp.lambda();
    let (ac, ahch, ach) = (a * c, ah * ch, a * ch);

    let inner = render_sum(vec![
        (ac.clone(), vec![g(AHat, 1), g(CHat, 0)]),
        (ac.clone(), vec![g(AHat, 0), g(CHat, -1)]),
        (ac, vec![g(BHat, 0), shifted(BHat, 0, bh)]),
        (ahch.clone(), vec![g(A, 1), g(C, 0)]),
        (ahch.clone(), vec![g(A, 0), g(C, -1)]),
        (ahch, vec![g(B, 0), shifted(B, 0, b)]),
        (ach.clone(), vec![]),
    ]);
    let lhs = if kappa == MPoly::one() {
        inner
    } else {
        format!("{}({inner})", coefficient_prefix(&kappa, false))
    };
    let bracket = render_sum(vec![
        (kml.clone(), vec![g(AHat, 1), g(C, 0)]),
        (kml.clone(), vec![g(A, 0), g(CHat, -1)]),
        (kml, vec![g(B, 0), g(BHat, 0)]),
        (kappa.clone(), vec![g(A, 1), g(CHat, 0)]),
        (kappa.clone(), vec![g(AHat, 0), g(C, -1)]),
        (-&(&(&kappa * b) * bh), vec![]),
        (kappa, vec![shifted(B, 0, b), shifted(BHat, 0, bh)]),
    ]);
    format!("{lhs}={}({bracket})", coefficient_prefix(&ach, false))
}

/// Parameters of the normalized form `p̂(t) = t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrycMap {
    pub sigma: Rational,
    pub tau: Rational,
    pub q_bmw: Rational,
}

impl BrycMap {
    /// `(b, b̂)` from `(η, θ)` by matching `E X_t³ = (b + b̂ t) t` with
    /// `((η + σθ) t² + (ητ + θ) t) / (1 − στ)`.
    pub fn b_from_eta_theta(&self, eta: &Rational, theta: &Rational) -> Result<(Rational, Rational), HarnessError> {
        let k = Rational::from_integer(1.into()) - &self.sigma * &self.tau;
        if k.is_zero() {
            return Err(HarnessError::DivisionByZero("1 − στ"));
        }
        let b = (eta * &self.tau + theta) / &k;
        let b_hat = (eta + &self.sigma * theta) / &k;
        Ok((b, b_hat))
    }

    /// Inverse of [`BrycMap::b_from_eta_theta`]: `η = b̂ − σb`, `θ = b − τb̂`.
    pub fn eta_theta_from_b(&self, b: &Rational, b_hat: &Rational) -> (Rational, Rational) {
        (b_hat - &self.sigma * b, b - &self.tau * b_hat)
    }

    /// `q ≤ 1 + 2√(στ)`; `None` when `στ < 0`.
    pub fn constraint_holds(&self) -> Option<bool> {
        let st = &self.sigma * &self.tau;
        if st.is_negative() {
            return None;
        }
        Some(to_f64(&self.q_bmw) <= 1.0 + 2.0 * to_f64(&st).sqrt() + 1e-15)
    }
}

/// `σ = â/a`, `τ = c/ĉ`, `q = −(κ − λ)/κ`. The caller asserts `p̂(t) = t`.
pub fn bryc_map(hp: &HarnessParams<Rational>, phat_is_identity: bool) -> Result<BrycMap, HarnessError> {
    if !phat_is_identity {
        return Err(HarnessError::NotNormalized);
    }
    if hp.a.is_zero() {
        return Err(HarnessError::DivisionByZero("a"));
    }
    if hp.c_hat.is_zero() {
        return Err(HarnessError::DivisionByZero("ĉ"));
    }
    let kappa = hp.kappa();
    if kappa.is_zero() {
        return Err(HarnessError::DivisionByZero("κ"));
    }
    Ok(BrycMap {
        sigma: &hp.a_hat / &hp.a,
        tau: &hp.c / &hp.c_hat,
        q_bmw: -(&kappa - &hp.lambda()) / &kappa,
    })
}

/// Largest `|f(t) − Â f(s) − B̂ f(u)|` over the triples, with the weights
/// taken from `g`. Zero up to rounding exactly when `f` is affine in `g`.
pub fn fun_eq_property(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, triples: &[(f64, f64, f64)]) -> f64 {
    triples
        .iter()
        .map(|&(s, t, u)| {
            let (gs, gt, gu) = (g(s), g(t), g(u));
            let wa = (gu - gt) / (gu - gs);
            let wb = (gt - gs) / (gu - gs);
            (f(t) - wa * f(s) - wb * f(u)).abs()
        })
        .fold(0.0, f64::max)
}
