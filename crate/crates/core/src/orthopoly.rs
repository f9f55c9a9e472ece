//! Three-term recurrences, the polynomial families built from them, their
//! norms, and the expansion coefficients of `p_1 p_n` and `p_2 p_n`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::exactalg::{AlgebraError, MPoly, Rational, Scalar, TriMatrix};

pub const X: &str = "x";
pub const T: &str = "t";
pub const Q: &str = "q";
pub const MU: &str = "mu";
pub const RHO: &str = "rho";
pub const Y: &str = "y";

/// Symbol standing for `exp(alpha * time)`.
pub fn exp_symbol(time: &str) -> String {
    format!("E_{time}")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrthoError {
    #[error("alpha_{n} = {value} is not invertible")]
    NonUnitLeading { n: i64, value: String },
    #[error("no norm formula known for family `{0}`")]
    UnknownNorms(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

// ---------------------------------------------------------------------------
// q-calculus, generic over the coefficient ring

/// `[n]_q = 1 + q + ... + q^(n-1)`.
pub fn q_int<T: Scalar>(n: u32, q: &T) -> T {
    let mut acc = T::zero();
    let mut pow = T::one();
    for _ in 0..n {
        acc = acc + pow.clone();
        pow = pow * q.clone();
    }
    acc
}

pub fn q_factorial<T: Scalar>(n: u32, q: &T) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * q_int(k, q))
}

/// Gaussian binomial via the q-Pascal rule, so no division is needed.
pub fn q_binomial<T: Scalar>(n: u32, k: u32, q: &T) -> T {
    if k > n {
        return T::zero();
    }
    let mut row = vec![T::one()];
    for m in 1..=n {
        let mut next = vec![T::one(); (m + 1) as usize];
        let mut qk = q.clone();
        for j in 1..m as usize {
            next[j] = row[j - 1].clone() + qk.clone() * row[j].clone();
            qk = qk * q.clone();
        }
        row = next;
    }
    row[k as usize].clone()
}

/// `(a; q)_n = prod_{i<n} (1 - a q^i)`.
pub fn q_pochhammer<T: Scalar>(a: &T, q: &T, n: u32) -> T {
    let mut acc = T::one();
    let mut term = a.clone();
    for _ in 0..n {
        acc = acc * (T::one() - term.clone());
        term = term * q.clone();
    }
    acc
}

// ---------------------------------------------------------------------------
// sequences and recurrences

type SeqFn = dyn Fn(i64) -> MPoly + Send + Sync;

/// Memoized integer-indexed sequence of polynomials.
#[derive(Clone)]
pub struct Sequence {
    f: Arc<SeqFn>,
    memo: Arc<Mutex<BTreeMap<i64, MPoly>>>,
}

impl Sequence {
    pub fn new(f: impl Fn(i64) -> MPoly + Send + Sync + 'static) -> Self {
        Sequence {
            f: Arc::new(f),
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    pub fn constant(v: MPoly) -> Self {
        Sequence::new(move |_| v.clone())
    }

    pub fn at(&self, n: i64) -> MPoly {
        if let Some(v) = self.memo.lock().unwrap().get(&n) {
            return v.clone();
        }
        let v = (self.f)(n);
        self.memo.lock().unwrap().insert(n, v.clone());
        v
    }

    pub fn map(&self, g: impl Fn(MPoly) -> MPoly + Send + Sync + 'static) -> Sequence {
        let inner = self.clone();
        Sequence::new(move |n| g(inner.at(n)))
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = (0..4).map(|n| self.at(n).to_string()).collect();
        write!(f, "Sequence[{}, ...]", shown.join(", "))
    }
}

/// `x p_n = alpha_{n+1} p_{n+1} + beta_n p_n + gamma_{n-1} p_{n-1}`.
///
/// Conventions: `alpha(n)` for `n >= 1` (zero below), `beta(n)` for `n >= 0`,
/// `gamma(n)` for `n >= 0` (zero for negative indices).
#[derive(Clone, Debug)]
pub struct Recurrence {
    alpha: Sequence,
    beta: Sequence,
    gamma: Sequence,
}

impl Recurrence {
    pub fn new(alpha: Sequence, beta: Sequence, gamma: Sequence) -> Self {
        Recurrence { alpha, beta, gamma }
    }

    pub fn alpha(&self, n: i64) -> MPoly {
        if n < 1 {
            MPoly::zero()
        } else {
            self.alpha.at(n)
        }
    }

    pub fn beta(&self, n: i64) -> MPoly {
        if n < 0 {
            MPoly::zero()
        } else {
            self.beta.at(n)
        }
    }

    pub fn gamma(&self, n: i64) -> MPoly {
        if n < 0 {
            MPoly::zero()
        } else {
            self.gamma.at(n)
        }
    }

    pub fn alpha_inverse(&self, n: i64) -> Result<MPoly, OrthoError> {
        let a = self.alpha(n);
        a.unit_inverse().ok_or(OrthoError::NonUnitLeading {
            n,
            value: a.to_string(),
        })
    }

    /// Applies `f` to every coefficient, e.g. to specialize a parameter.
    pub fn map(&self, f: impl Fn(&MPoly) -> MPoly + Send + Sync + Clone + 'static) -> Self {
        let (f1, f2, f3) = (f.clone(), f.clone(), f);
        Recurrence {
            alpha: self.alpha.map(move |p| f1(&p)),
            beta: self.beta.map(move |p| f2(&p)),
            gamma: self.gamma.map(move |p| f3(&p)),
        }
    }

    pub fn subs(&self, values: &BTreeMap<String, Rational>) -> Self {
        let values = values.clone();
        self.map(move |p| p.subs(&values).expect("parameter substitution"))
    }

    /// Same recurrence at another time symbol (`t` and `E_t` renamed).
    pub fn at_time(&self, time: &str) -> Self {
        let time = time.to_string();
        self.map(move |p| rename_time(p, &time))
    }

    /// `p_0, ..., p_{n_max}` in the variable `x`.
    pub fn generate(&self, n_max: usize) -> Result<Vec<MPoly>, OrthoError> {
        let x = MPoly::var(X);
        let mut out = vec![MPoly::one()];
        let mut prev = MPoly::zero();
        for n in 0..n_max as i64 {
            let cur = out[n as usize].clone();
            let rhs = &(&(&x - &self.beta(n)) * &cur) - &(&self.gamma(n - 1) * &prev);
            let next = &rhs * &self.alpha_inverse(n + 1)?;
            prev = cur;
            out.push(next);
        }
        Ok(out)
    }

    pub fn numeric(
        &self,
        values: &BTreeMap<String, f64>,
        n_max: usize,
    ) -> Result<NumericRecurrence, AlgebraError> {
        let mut alpha = vec![0.0; n_max + 2];
        let mut beta = vec![0.0; n_max + 1];
        let mut gamma = vec![0.0; n_max + 1];
        for n in 0..=n_max {
            alpha[n + 1] = self.alpha(n as i64 + 1).eval_f64(values)?;
            beta[n] = self.beta(n as i64).eval_f64(values)?;
            gamma[n] = self.gamma(n as i64).eval_f64(values)?;
        }
        Ok(NumericRecurrence { alpha, beta, gamma })
    }

    /// First `n <= n_max` where `alpha_n gamma_{n-1}` fails to be positive at
    /// one of the sampled parameter points.
    pub fn positivity_violation(
        &self,
        n_max: usize,
        samples: &[BTreeMap<String, f64>],
    ) -> Result<Option<usize>, AlgebraError> {
        for n in 1..=n_max as i64 {
            let prod = &self.alpha(n) * &self.gamma(n - 1);
            for s in samples {
                if prod.eval_f64(s)? <= 0.0 {
                    return Ok(Some(n as usize));
                }
            }
        }
        Ok(None)
    }
}

pub(crate) fn rename_time(p: &MPoly, time: &str) -> MPoly {
    p.rename(T, time).rename(&exp_symbol(T), &exp_symbol(time))
}

/// Recurrence coefficients evaluated at fixed parameters.
#[derive(Debug, Clone)]
pub struct NumericRecurrence {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl NumericRecurrence {
    pub fn n_max(&self) -> usize {
        self.beta.len() - 1
    }

    /// `p_0(x), ..., p_{n_max}(x)`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let n_max = self.n_max();
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(1.0);
        let mut prev = 0.0;
        for n in 0..n_max {
            let cur = out[n];
            let g = if n == 0 { 0.0 } else { self.gamma[n - 1] };
            let next = ((x - self.beta[n]) * cur - g * prev) / self.alpha[n + 1];
            prev = cur;
            out.push(next);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// families

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyName {
    QHermite,
    AlSalamChihara,
    Charlier,
    HermiteProb,
    ChebyshevU,
    Custom(String),
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyName::QHermite => write!(f, "q-Hermite"),
            FamilyName::AlSalamChihara => write!(f, "Al-Salam-Chihara"),
            FamilyName::Charlier => write!(f, "Charlier"),
            FamilyName::HermiteProb => write!(f, "Hermite"),
            FamilyName::ChebyshevU => write!(f, "Chebyshev-U"),
            FamilyName::Custom(s) => write!(f, "{s}"),
        }
    }
}

/// How a time-free family is turned into time-dependent martingale
/// polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScaling {
    None,
    /// `t^{n/2} p_n(x / sqrt t)`
    Diffusive,
    /// `exp(n alpha t) p_n(x)`, carried by the symbol `E_t`
    Exponential,
}

#[derive(Clone)]
enum NormRule {
    /// Closed form in `n`, before time scaling.
    Closed(Arc<dyn Fn(u32) -> MPoly + Send + Sync>),
    Telescoping,
    Unknown,
}

#[derive(Clone)]
pub struct PolyFamily {
    pub name: FamilyName,
    pub params: BTreeMap<String, Rational>,
    pub scaling: TimeScaling,
    recurrence: Recurrence,
    norms: NormRule,
}

impl fmt::Debug for PolyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolyFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("scaling", &self.scaling)
            .finish()
    }
}

fn param(name: &str, value: &Option<Rational>, params: &mut BTreeMap<String, Rational>) -> MPoly {
    match value {
        Some(v) => {
            params.insert(name.to_string(), v.clone());
            MPoly::constant(v.clone())
        }
        None => MPoly::var(name),
    }
}

impl PolyFamily {
    /// `x H_n = H_{n+1} + [n]_q H_{n-1}`; `None` keeps `q` symbolic.
    pub fn q_hermite(q: Option<Rational>) -> Self {
        let mut params = BTreeMap::new();
        let qp = param(Q, &q, &mut params);
        let qn = qp.clone();
        PolyFamily {
            name: FamilyName::QHermite,
            params,
            scaling: TimeScaling::None,
            recurrence: Recurrence::new(
                Sequence::constant(MPoly::one()),
                Sequence::constant(MPoly::zero()),
                Sequence::new(move |n| q_int((n + 1) as u32, &qp)),
            ),
            norms: NormRule::Closed(Arc::new(move |n| q_factorial(n, &qn))),
        }
    }

    /// `(x - rho y q^n) P_n = P_{n+1} + (1 - rho^2 q^{n-1}) [n]_q P_{n-1}`.
    pub fn al_salam_chihara(q: Option<Rational>, rho: Option<Rational>, y: Option<Rational>) -> Self {
        let mut params = BTreeMap::new();
        let qp = param(Q, &q, &mut params);
        let rp = param(RHO, &rho, &mut params);
        let yp = param(Y, &y, &mut params);
        let (q1, q2, q3) = (qp.clone(), qp.clone(), qp);
        let (r1, r2, r3) = (rp.clone(), rp.clone(), rp);
        PolyFamily {
            name: FamilyName::AlSalamChihara,
            params,
            scaling: TimeScaling::None,
            recurrence: Recurrence::new(
                Sequence::constant(MPoly::one()),
                Sequence::new(move |n| &(&r1 * &yp) * &q1.pow(n as u32)),
                Sequence::new(move |n| {
                    let damp = MPoly::one() - &(&r2 * &r2) * &q2.pow(n as u32);
                    &damp * &q_int((n + 1) as u32, &q2)
                }),
            ),
            norms: NormRule::Closed(Arc::new(move |n| {
                &q_factorial(n, &q3) * &q_pochhammer(&(&r3 * &r3), &q3, n)
            })),
        }
    }

    /// Poisson martingale polynomials:
    /// `x p_n = p_{n+1} + (n + mu t) p_n + n mu t p_{n-1}`.
    pub fn charlier(mu: Option<Rational>) -> Self {
        let mut params = BTreeMap::new();
        let m = param(MU, &mu, &mut params);
        let mt = &m * &MPoly::var(T);
        let (b, g) = (mt.clone(), mt);
        PolyFamily {
            name: FamilyName::Charlier,
            params,
            scaling: TimeScaling::None,
            recurrence: Recurrence::new(
                Sequence::constant(MPoly::one()),
                Sequence::new(move |n| &MPoly::int(n) + &b),
                Sequence::new(move |n| &MPoly::int(n + 1) * &g),
            ),
            norms: NormRule::Telescoping,
        }
    }

    pub fn hermite_prob() -> Self {
        PolyFamily {
            name: FamilyName::HermiteProb,
            params: BTreeMap::new(),
            scaling: TimeScaling::None,
            recurrence: Recurrence::new(
                Sequence::constant(MPoly::one()),
                Sequence::constant(MPoly::zero()),
                Sequence::new(|n| MPoly::int(n + 1)),
            ),
            norms: NormRule::Closed(Arc::new(|n| MPoly::int((1..=n as i64).product()))),
        }
    }

    /// `U_n(x/2)`: `x p_n = p_{n+1} + p_{n-1}`.
    pub fn chebyshev_u() -> Self {
        PolyFamily {
            name: FamilyName::ChebyshevU,
            params: BTreeMap::new(),
            scaling: TimeScaling::None,
            recurrence: Recurrence::new(
                Sequence::constant(MPoly::one()),
                Sequence::constant(MPoly::zero()),
                Sequence::constant(MPoly::one()),
            ),
            norms: NormRule::Closed(Arc::new(|_| MPoly::one())),
        }
    }

    /// Family given directly by its recurrence. Norms come from telescoping
    /// when `telescoping_norms` is set, otherwise they are unknown.
    pub fn custom(name: &str, recurrence: Recurrence, telescoping_norms: bool) -> Self {
        PolyFamily {
            name: FamilyName::Custom(name.to_string()),
            params: BTreeMap::new(),
            scaling: TimeScaling::None,
            recurrence,
            norms: if telescoping_norms {
                NormRule::Telescoping
            } else {
                NormRule::Unknown
            },
        }
    }

    pub fn with_scaling(mut self, scaling: TimeScaling) -> Self {
        self.scaling = scaling;
        self
    }

    /// Recurrence of the (possibly time-scaled) polynomials.
    pub fn recurrence(&self) -> Recurrence {
        match self.scaling {
            TimeScaling::None => self.recurrence.clone(),
            TimeScaling::Diffusive => {
                // p_n(x;t) = t^{n/2} h_n(x/sqrt t): gamma gains a factor t and
                // beta would gain sqrt t, so only centred families (beta = 0)
                // are meaningful here.
                let t = MPoly::var(T);
                let r = &self.recurrence;
                Recurrence::new(
                    r.alpha.clone(),
                    r.beta.clone(),
                    r.gamma.map(move |g| &g * &t),
                )
            }
            TimeScaling::Exponential => {
                // p_n(x;t) = E^n h_n(x): alpha_n / E, gamma_{n-1} * E.
                let e = MPoly::var(&exp_symbol(T));
                let e_inv = e.unit_inverse().unwrap();
                let r = &self.recurrence;
                Recurrence::new(
                    r.alpha.map(move |a| &a * &e_inv),
                    r.beta.clone(),
                    r.gamma.map(move |g| &g * &e),
                )
            }
        }
    }

    pub fn generate(&self, n_max: usize) -> Result<Vec<MPoly>, OrthoError> {
        self.recurrence().generate(n_max)
    }

    pub fn norms(&self, n_max: usize) -> Result<NormSequence, OrthoError> {
        match &self.norms {
            NormRule::Unknown => Err(OrthoError::UnknownNorms(self.name.to_string())),
            NormRule::Telescoping => telescoped_norms(&self.recurrence(), n_max),
            NormRule::Closed(f) => {
                let scale = match self.scaling {
                    TimeScaling::None => MPoly::one(),
                    TimeScaling::Diffusive => MPoly::var(T),
                    TimeScaling::Exponential => MPoly::var(&exp_symbol(T)).pow(2),
                };
                let phat = (0..=n_max as u32)
                    .map(|n| &f(n) * &scale.pow(n))
                    .collect();
                Ok(NormSequence { phat })
            }
        }
    }
}

/// Free-function form of [`PolyFamily::generate`].
pub fn generate(family: &PolyFamily, n_max: usize) -> Result<Vec<MPoly>, OrthoError> {
    family.generate(n_max)
}

/// Free-function form of [`PolyFamily::norms`].
pub fn norms(family: &PolyFamily, n_max: usize) -> Result<NormSequence, OrthoError> {
    family.norms(n_max)
}

// ---------------------------------------------------------------------------
// norms

/// `p̂_n(t) = E p_n(X_t; t)^2`, with `p̂_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSequence {
    pub phat: Vec<MPoly>,
}

impl NormSequence {
    pub fn get(&self, n: usize) -> &MPoly {
        &self.phat[n]
    }

    /// `p̂(t) = p̂_1(t)`.
    pub fn first(&self) -> &MPoly {
        &self.phat[1]
    }

    pub fn len(&self) -> usize {
        self.phat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phat.is_empty()
    }

    pub fn at_time(&self, time: &str) -> NormSequence {
        NormSequence {
            phat: self.phat.iter().map(|p| rename_time(p, time)).collect(),
        }
    }
}

/// `gamma_{n-1} p̂_{n-1} = alpha_n p̂_n`, solved upward from `p̂_0 = 1`.
pub fn telescoped_norms(rec: &Recurrence, n_max: usize) -> Result<NormSequence, OrthoError> {
    let mut phat = vec![MPoly::one()];
    for n in 1..=n_max as i64 {
        let prev = &phat[(n - 1) as usize];
        let next = &(&rec.gamma(n - 1) * prev) * &rec.alpha_inverse(n)?;
        phat.push(next);
    }
    Ok(NormSequence { phat })
}

// ---------------------------------------------------------------------------
// coefficient matrices and product expansions

/// Entry `(i, j)` is the coefficient of `x^j` in `polys[i]`.
pub fn coeff_matrix(polys: &[MPoly]) -> Result<TriMatrix, AlgebraError> {
    coeff_matrix_in(polys, X)
}

pub fn coeff_matrix_in(polys: &[MPoly], var: &str) -> Result<TriMatrix, AlgebraError> {
    let dim = polys.len();
    let mut m = TriMatrix::zeros(dim.max(1), crate::exactalg::Shape::Lower);
    for (i, p) in polys.iter().enumerate() {
        let found = p.degree_in(var).map(i64::from).unwrap_or(-1);
        if found != i as i64 || p.min_degree_in(var).unwrap_or(0) < 0 {
            return Err(AlgebraError::DegreeMismatch {
                index: i,
                found,
                symbol: var.to_string(),
            });
        }
        for j in 0..=i {
            m.set(i, j, p.coeff_in(var, j as i32));
        }
    }
    Ok(m)
}

/// Coordinates of `p` in the basis `basis[0..]` (degree `k` at position `k`).
pub fn expand_in_basis(p: &MPoly, basis: &[MPoly]) -> Result<Vec<MPoly>, OrthoError> {
    let deg = p.degree_in(X).unwrap_or(0).max(0) as usize;
    assert!(deg < basis.len(), "basis too short for degree {deg}");
    let mut rest = p.clone();
    let mut coords = vec![MPoly::zero(); deg + 1];
    for k in (0..=deg).rev() {
        let lead = basis[k].coeff_in(X, k as i32);
        let inv = lead.unit_inverse().ok_or(OrthoError::NonUnitLeading {
            n: k as i64,
            value: lead.to_string(),
        })?;
        let c = &rest.coeff_in(X, k as i32) * &inv;
        rest = &rest - &(&c * &basis[k]);
        coords[k] = c;
    }
    debug_assert!(rest.is_zero());
    Ok(coords)
}

/// `p_1 p_n = v_{1,n+1} p_{n+1} + v_{0,n} p_n + v_{-1,n-1} p_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCoeffs {
    /// `v_{1,n+1} = alpha_{n+1} / alpha_1`
    pub up: MPoly,
    /// `v_{0,n}`: `beta_n / alpha_1`, or `(beta_n - beta_0) / alpha_1` when centred
    pub mid: MPoly,
    /// `v_{-1,n-1} = gamma_{n-1} / alpha_1`
    pub down: MPoly,
    pub centered: bool,
}

pub fn linear_product_coeffs(
    rec: &Recurrence,
    n: usize,
    centered: bool,
) -> Result<LinearCoeffs, OrthoError> {
    let a1 = rec.alpha_inverse(1)?;
    let n = n as i64;
    let mut mid = rec.beta(n);
    if centered {
        mid = &mid - &rec.beta(0);
    }
    Ok(LinearCoeffs {
        up: &rec.alpha(n + 1) * &a1,
        mid: &mid * &a1,
        down: &rec.gamma(n - 1) * &a1,
        centered,
    })
}

/// `p_2 p_n = r_2 p_{n+2} + r_1 p_{n+1} + r_0 p_n + r_{-1} p_{n-1} + r_{-2} p_{n-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCoeffs {
    pub r2: MPoly,
    pub r1: MPoly,
    pub r0: MPoly,
    pub rm1: MPoly,
    pub rm2: MPoly,
}

impl QuadraticCoeffs {
    /// Coefficients in the order `[r_{-2}, r_{-1}, r_0, r_1, r_2]`.
    pub fn as_array(&self) -> [&MPoly; 5] {
        [&self.rm2, &self.rm1, &self.r0, &self.r1, &self.r2]
    }
}

pub fn quadratic_product_coeffs(rec: &Recurrence, n: usize) -> Result<QuadraticCoeffs, OrthoError> {
    let a1_inv = rec.alpha_inverse(1)?;
    let a2_inv = rec.alpha_inverse(2)?;
    let n = n as i64;
    // true product coefficients of p_1 p_k, indexed by the resulting degree
    let up = |m: i64| &rec.alpha(m) * &a1_inv;
    let mid = |m: i64| {
        if m < 0 {
            MPoly::zero()
        } else {
            &(&rec.beta(m) - &rec.beta(0)) * &a1_inv
        }
    };
    let down = |m: i64| &rec.gamma(m) * &a1_inv;
    // p_2 = k p_1^2 - l p_1 - c0 with
    let k = &rec.alpha(1) * &a2_inv;
    let l = &(&rec.beta(1) - &rec.beta(0)) * &a2_inv;
    let c0 = &rec.gamma(0) * &a2_inv;

    let r2 = &k * &(&up(n + 1) * &up(n + 2));
    let r1 = &up(n + 1) * &(&(&k * &(&mid(n + 1) + &mid(n))) - &l);
    let r0 = &(&(&k
        * &(&(&up(n + 1) * &down(n)) + &(&mid(n).pow(2) + &(&down(n - 1) * &up(n)))))
        - &(&l * &mid(n)))
        - &c0;
    let rm1 = &down(n - 1) * &(&(&k * &(&mid(n) + &mid(n - 1))) - &l);
    let rm2 = &k * &(&down(n - 1) * &down(n - 2));
    Ok(QuadraticCoeffs {
        r2,
        r1,
        r0,
        rm1,
        rm2,
    })
}
