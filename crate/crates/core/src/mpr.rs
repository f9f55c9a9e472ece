//! Structural matrices of Markov processes with polynomial regressions:
//! `V_n(t)`, regression matrices `A_n(s,t) = V_n(t) V_n(s)^{-1}`, moment
//! matrices, and the orthogonal-martingale and independent-increments tests.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::exactalg::{to_f64, AlgebraError, MPoly, NumMatrix, Rational, TriMatrix};
use crate::orthopoly::{
    coeff_matrix, exp_symbol, rename_time, NormSequence, OrthoError, PolyFamily, Recurrence,
    TimeScaling, MU, Q, T,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MprError {
    #[error("invalid process parameters: {0}")]
    InvalidParams(String),
    #[error("custom process supplies {given} martingales, level {needed} requested")]
    MissingMartingale { given: usize, needed: usize },
    #[error(transparent)]
    Ortho(#[from] OrthoError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessName {
    QWiener,
    AlphaQOU,
    Poisson,
    Custom(String),
}

impl fmt::Display for ProcessName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessName::QWiener => write!(f, "q-wiener"),
            ProcessName::AlphaQOU => write!(f, "q-ou"),
            ProcessName::Poisson => write!(f, "poisson"),
            ProcessName::Custom(s) => write!(f, "custom:{s}"),
        }
    }
}

/// Closed interval with optional infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexSet {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl IndexSet {
    pub fn contains(&self, t: f64) -> bool {
        self.lo.is_none_or(|l| t >= l) && self.hi.is_none_or(|h| t <= h)
    }
}

#[derive(Debug, Clone)]
pub struct ProcessSpec {
    pub name: ProcessName,
    pub family: PolyFamily,
    pub index_set: IndexSet,
    /// `None` keeps `q` symbolic.
    pub q: Option<Rational>,
    /// Only enters numerically, through `E_t = exp(alpha t)`.
    pub alpha: Rational,
    pub mu: Option<Rational>,
    martingales: Option<Vec<MPoly>>,
}

fn check_q(q: &Option<Rational>) -> Result<(), MprError> {
    if let Some(q) = q {
        if *q <= -Rational::one() || *q > Rational::one() {
            return Err(MprError::InvalidParams(format!(
                "q = {q} outside (-1, 1]"
            )));
        }
    }
    Ok(())
}

impl ProcessSpec {
    pub fn q_wiener(q: Option<Rational>) -> Result<Self, MprError> {
        check_q(&q)?;
        Ok(ProcessSpec {
            name: ProcessName::QWiener,
            family: PolyFamily::q_hermite(q.clone()).with_scaling(TimeScaling::Diffusive),
            index_set: IndexSet {
                lo: Some(0.0),
                hi: None,
            },
            q,
            alpha: Rational::one(),
            mu: None,
            martingales: None,
        })
    }

    pub fn alpha_q_ou(q: Option<Rational>, alpha: Rational) -> Result<Self, MprError> {
        check_q(&q)?;
        if !alpha.is_positive() {
            return Err(MprError::InvalidParams(format!("alpha = {alpha} must be > 0")));
        }
        Ok(ProcessSpec {
            name: ProcessName::AlphaQOU,
            family: PolyFamily::q_hermite(q.clone()).with_scaling(TimeScaling::Exponential),
            index_set: IndexSet { lo: None, hi: None },
            q,
            alpha,
            mu: None,
            martingales: None,
        })
    }

    pub fn poisson(mu: Option<Rational>) -> Result<Self, MprError> {
        if let Some(m) = &mu {
            if !m.is_positive() {
                return Err(MprError::InvalidParams(format!("mu = {m} must be > 0")));
            }
        }
        Ok(ProcessSpec {
            name: ProcessName::Poisson,
            family: PolyFamily::charlier(mu.clone()),
            index_set: IndexSet {
                lo: Some(0.0),
                hi: None,
            },
            q: None,
            alpha: Rational::one(),
            mu,
            martingales: None,
        })
    }

    /// A process sharing `base`'s law (and so its moments) but declaring its
    /// own martingale polynomials, which need not be orthogonal.
    pub fn custom(name: &str, base: &ProcessSpec, martingales: Vec<MPoly>) -> Self {
        ProcessSpec {
            name: ProcessName::Custom(name.to_string()),
            martingales: Some(martingales),
            ..base.clone()
        }
    }

    pub fn recurrence(&self) -> Recurrence {
        self.family.recurrence()
    }

    pub fn norms(&self, n: usize) -> Result<NormSequence, MprError> {
        Ok(self.family.norms(n)?)
    }

    /// Orthogonal martingale polynomials `p_0(x;t) .. p_n(x;t)`.
    pub fn orthogonal_polys(&self, n: usize) -> Result<Vec<MPoly>, MprError> {
        Ok(self.family.generate(n)?)
    }

    /// The declared martingale polynomials (the orthogonal ones unless custom).
    pub fn martingales(&self, n: usize) -> Result<Vec<MPoly>, MprError> {
        match &self.martingales {
            Some(m) if m.len() > n => Ok(m[..=n].to_vec()),
            Some(m) => Err(MprError::MissingMartingale {
                given: m.len(),
                needed: n,
            }),
            None => self.orthogonal_polys(n),
        }
    }

    /// Numeric values for every parameter symbol plus `time_symbol = time`
    /// and its exponential companion.
    pub fn bindings(&self, time_symbol: &str, time: f64) -> BTreeMap<String, f64> {
        let mut b = self.param_bindings();
        self.bind_time(&mut b, time_symbol, time);
        b
    }

    pub fn bind_time(&self, b: &mut BTreeMap<String, f64>, time_symbol: &str, time: f64) {
        b.insert(time_symbol.to_string(), time);
        b.insert(exp_symbol(time_symbol), (to_f64(&self.alpha) * time).exp());
    }

    fn param_bindings(&self) -> BTreeMap<String, f64> {
        let mut b = BTreeMap::new();
        if let Some(q) = &self.q {
            b.insert(Q.to_string(), to_f64(q));
        }
        if let Some(m) = &self.mu {
            b.insert(MU.to_string(), to_f64(m));
        }
        b
    }

    /// Parameter points used for positivity checks: a few times inside the
    /// index set crossed with a few values of any symbolic parameter.
    pub fn sample_points(&self) -> Vec<BTreeMap<String, f64>> {
        let times: &[f64] = match self.index_set.lo {
            Some(_) => &[0.25, 1.0, 3.5],
            None => &[-1.5, 0.0, 0.8],
        };
        let qs: Vec<Option<f64>> = match (&self.q, self.name == ProcessName::Poisson) {
            (None, false) => vec![Some(-0.6), Some(0.3), Some(0.9)],
            _ => vec![None],
        };
        let mus: Vec<Option<f64>> = match (&self.mu, self.name == ProcessName::Poisson) {
            (None, true) => vec![Some(0.4), Some(2.0)],
            _ => vec![None],
        };
        let mut out = Vec::new();
        for &t in times {
            for q in &qs {
                for m in &mus {
                    let mut b = self.bindings(T, t);
                    if let Some(q) = q {
                        b.insert(Q.to_string(), *q);
                    }
                    if let Some(m) = m {
                        b.insert(MU.to_string(), *m);
                    }
                    out.push(b);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrix {
    pub n: usize,
    pub v: TriMatrix,
    pub process: ProcessName,
    /// Left end of the index set, where `V` must reduce to the identity
    /// pattern for independent increments.
    pub left_endpoint: Option<f64>,
}

impl StructuralMatrix {
    pub fn at_time(&self, time: &str) -> TriMatrix {
        self.v.map(|p| rename_time(p, time))
    }
}

/// `V_n(t)`: inverse of the coefficient matrix of the martingale polynomials.
pub fn structural_matrix(spec: &ProcessSpec, n: usize) -> Result<StructuralMatrix, MprError> {
    let c = coeff_matrix(&spec.martingales(n)?)?;
    Ok(StructuralMatrix {
        n,
        v: c.tri_invert()?,
        process: spec.name.clone(),
        left_endpoint: spec.index_set.lo,
    })
}

/// `A_n(s,t) = V_n(t) V_n(s)^{-1}` with symbolic times.
pub fn regression_matrix(v: &StructuralMatrix, s: &str, t: &str) -> Result<TriMatrix, MprError> {
    let vt = v.at_time(t);
    let vs_inv = v.at_time(s).tri_invert()?;
    Ok(vt.mul(&vs_inv)?)
}

/// `A_n(s,t)` evaluated at numeric times.
pub fn regression_matrix_numeric(
    spec: &ProcessSpec,
    v: &StructuralMatrix,
    s: f64,
    t: f64,
) -> Result<NumMatrix, MprError> {
    let mut b = spec.bindings("s", s);
    spec.bind_time(&mut b, "t2", t);
    Ok(regression_matrix(v, "s", "t2")?.eval_f64(&b)?)
}

/// `M_n(t) = E X^{(n)} X^{(n)T}` built as `C^{-1} diag(p̂) C^{-T}` from the
/// orthogonal polynomials.
pub fn moment_matrix(spec: &ProcessSpec, n: usize) -> Result<TriMatrix, MprError> {
    let c = coeff_matrix(&spec.orthogonal_polys(n)?)?;
    let c_inv = c.tri_invert()?;
    let norms = spec.norms(n)?;
    let d = TriMatrix::diagonal(norms.phat.clone());
    Ok(c_inv.mul(&d)?.mul(&c_inv.transpose())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpmReport {
    pub is_opm: bool,
    /// Diagonal of `G = V^{-1} M V^{-T}`.
    pub diagonal: Vec<MPoly>,
    pub gram: TriMatrix,
    pub off_diagonal: Vec<(usize, usize)>,
    pub positive: bool,
}

/// Decides whether the declared martingales are orthogonal: `G` must be
/// diagonal with entries positive at every sampled parameter point.
pub fn opm_check(spec: &ProcessSpec, n: usize) -> Result<OpmReport, MprError> {
    let v_inv = coeff_matrix(&spec.martingales(n)?)?;
    let m = moment_matrix(spec, n)?;
    let gram = v_inv.mul(&m)?.mul(&v_inv.transpose())?;
    let off_diagonal = gram.off_diagonal_support();
    let diagonal = gram.diag();
    let samples = spec.sample_points();
    let mut positive = true;
    for d in &diagonal {
        for s in &samples {
            if d.eval_f64(s)? <= 0.0 {
                positive = false;
            }
        }
    }
    Ok(OpmReport {
        is_opm: off_diagonal.is_empty() && positive,
        diagonal,
        gram,
        off_diagonal,
        positive,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyRoute {
    /// `J = D^{-1} V(t)` where `D D^T = M(t)`.
    pub j: NumMatrix,
    pub max_off_diagonal: f64,
}

/// Numeric counterpart of [`opm_check`]: factor the moment matrix and check
/// that `D^{-1} V(t)` is diagonal.
pub fn opm_check_cholesky(spec: &ProcessSpec, n: usize, t: f64) -> Result<CholeskyRoute, MprError> {
    let b = spec.bindings(T, t);
    let m = moment_matrix(spec, n)?.eval_f64(&b)?;
    let d = m.cholesky()?;
    let v = structural_matrix(spec, n)?.v.eval_f64(&b)?;
    let j = d.lower_inverse().mul(&v)?;
    let mut worst: f64 = 0.0;
    for r in 0..j.dim() {
        for c in 0..j.dim() {
            if r != c {
                worst = worst.max(j.get(r, c).abs() / j.get(r, r).abs().max(1e-300));
            }
        }
    }
    Ok(CholeskyRoute {
        j,
        max_off_diagonal: worst,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub independent: bool,
    /// `g_0 = 1, g_1, ..., g_n` read off the first column.
    pub g: Vec<MPoly>,
    /// Every `(i, j)` with `v_{ij} != binom(i, j) g_{i-j}`, row-major.
    pub violations: Vec<(usize, usize)>,
    /// Offsets `d` whose `g_d` is nonzero at the left endpoint.
    pub endpoint_violations: Vec<usize>,
    /// False when the index set has no finite left end.
    pub endpoint_checked: bool,
}

impl IndependenceReport {
    pub fn witness(&self) -> Option<(usize, usize)> {
        self.violations.first().copied()
    }
}

fn binomial(n: usize, k: usize) -> Rational {
    let mut acc = Rational::one();
    for i in 0..k {
        acc = acc * Rational::from_integer((n - i).into()) / Rational::from_integer((i + 1).into());
    }
    acc
}

fn normalize_at(v: &TriMatrix, lo: f64) -> Option<TriMatrix> {
    let lo_r = Rational::from_float(lo)?;
    let mut at = BTreeMap::from([(T.to_string(), lo_r)]);
    if lo == 0.0 {
        at.insert(exp_symbol(T), Rational::one());
    }
    let v_lo = v.subs(&at).ok()?;
    let n = v_lo.n();
    let timed = |p: &MPoly| p.symbols().iter().any(|s| s == T || s.starts_with("E_"));
    if (0..=n).any(|i| (0..=i).any(|j| timed(v_lo.get(i, j)))) {
        return None;
    }
    v.mul(&v_lo.tri_invert().ok()?).ok()
}

/// Independent increments hold iff `v_{ij} = binom(i,j) g_{i-j}(t)` with
/// `g_d` vanishing at the left end of the index set.
///
/// `V` is only fixed up to a constant right factor, so with a finite left
/// end `lo` the test runs on `V(t) V(lo)^{-1} = A(lo, t)`.
pub fn independent_increments_check(v: &StructuralMatrix) -> IndependenceReport {
    let normalized = v.left_endpoint.and_then(|lo| normalize_at(&v.v, lo));
    let m = normalized.as_ref().unwrap_or(&v.v);
    let n = m.n();
    let g: Vec<MPoly> = (0..=n).map(|d| m.get(d, 0).clone()).collect();
    let mut violations = Vec::new();
    for i in 0..=n {
        for j in 0..i {
            let expect = g[i - j].scale(&binomial(i, j));
            if *m.get(i, j) != expect {
                violations.push((i, j));
            }
        }
    }
    let mut endpoint_violations = Vec::new();
    let endpoint_checked = v.left_endpoint.is_some();
    if let Some(lo) = v.left_endpoint {
        let lo_r = Rational::from_float(lo).unwrap_or_else(Rational::zero);
        let at = BTreeMap::from([(T.to_string(), lo_r)]);
        for (d, gd) in g.iter().enumerate().skip(1) {
            match gd.subs(&at) {
                Ok(p) if p.is_zero() => {}
                _ => endpoint_violations.push(d),
            }
        }
    }
    IndependenceReport {
        independent: violations.is_empty() && endpoint_violations.is_empty(),
        g,
        violations,
        endpoint_violations,
        endpoint_checked,
    }
}

/// `Q_n(y, s, t) = E(X_t^n | X_s = y)`: row `n` of `A_n(s,t)` applied to
/// `(1, y, ..., y^n)`.
pub fn conditional_moment(
    spec: &ProcessSpec,
    n: usize,
    s: &str,
    t: &str,
) -> Result<MPoly, MprError> {
    let v = structural_matrix(spec, n)?;
    let a = regression_matrix(&v, s, t)?;
    let y = MPoly::var("y");
    let mut out = MPoly::zero();
    for j in 0..=n {
        out = &out + &(a.get(n, j) * &y.pow(j as u32));
    }
    Ok(out)
}

/// Diagnostic only: whether `A_n(s,t)` has a nonsingular diagonal at the
/// given numeric times.
pub fn tli_rank_diagnostic(spec: &ProcessSpec, n: usize, s: f64, t: f64) -> Result<bool, MprError> {
    let v = structural_matrix(spec, n)?;
    let a = regression_matrix_numeric(spec, &v, s, t)?;
    Ok((0..a.dim()).all(|i| a.get(i, i).abs() > 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{int, rat};

    fn t() -> MPoly {
        MPoly::var(T)
    }

    #[test]
    fn q_wiener_level_two() {
        let spec = ProcessSpec::q_wiener(None).unwrap();
        let v = structural_matrix(&spec, 2).unwrap();
        let expect = TriMatrix::from_rows(vec![
            vec![MPoly::one(), MPoly::zero(), MPoly::zero()],
            vec![MPoly::zero(), MPoly::one(), MPoly::zero()],
            vec![t(), MPoly::zero(), MPoly::one()],
        ])
        .unwrap();
        assert_eq!(v.v, expect);
        let a = regression_matrix(&v, "s", "t").unwrap();
        assert_eq!(a.get(2, 0), &(t() - MPoly::var("s")));
        assert_eq!(regression_matrix(&v, "s", "s").unwrap(), TriMatrix::identity(3));
    }

    #[test]
    fn moment_matrix_level_two() {
        let spec = ProcessSpec::q_wiener(None).unwrap();
        let m = moment_matrix(&spec, 2).unwrap();
        assert_eq!(m.get(0, 0), &MPoly::one());
        assert_eq!(m.get(0, 2), &t());
        assert_eq!(m.get(2, 2), &(&(MPoly::int(2) + MPoly::var(Q)) * &t().pow(2)));
        let ou = ProcessSpec::alpha_q_ou(Some(rat(1, 2)), int(1)).unwrap();
        let m = moment_matrix(&ou, 2).unwrap();
        assert_eq!(m.get(2, 2), &MPoly::constant(rat(5, 2)));
        assert!(m.get(1, 1) == &MPoly::one());
    }

    #[test]
    fn invalid_params() {
        assert!(ProcessSpec::q_wiener(Some(int(2))).is_err());
        assert!(ProcessSpec::q_wiener(Some(int(-1))).is_err());
        assert!(ProcessSpec::alpha_q_ou(None, int(0)).is_err());
        assert!(ProcessSpec::poisson(Some(int(-1))).is_err());
    }

    #[test]
    fn custom_missing_martingales() {
        let base = ProcessSpec::q_wiener(None).unwrap();
        let c = ProcessSpec::custom("short", &base, vec![MPoly::one()]);
        assert!(matches!(
            structural_matrix(&c, 2),
            Err(MprError::MissingMartingale { .. })
        ));
    }

    #[test]
    fn level_one_is_vacuously_independent() {
        let spec = ProcessSpec::alpha_q_ou(None, int(1)).unwrap();
        let r = independent_increments_check(&structural_matrix(&spec, 1).unwrap());
        assert!(r.independent);
        assert!(!r.endpoint_checked);
    }
}
