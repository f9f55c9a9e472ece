//! q-Gaussian marginal and transition densities, quadrature on their
//! supports, and the orthogonal-polynomial expansion of transition kernels.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use thiserror::Error;

use crate::exactalg::{to_f64, AlgebraError};
use crate::mpr::{MprError, ProcessName, ProcessSpec};
use crate::orthopoly::{NumericRecurrence, T};

pub const DEFAULT_NODES: usize = 400;
pub const DEFAULT_EPS_PRODUCT: f64 = 1e-16;
const MAX_FACTORS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("product factor w_{k} = {value:e} is not positive")]
    ProductDivergence { k: usize, value: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid density parameters: {0}")]
    InvalidParams(String),
    #[error("process `{0}` has no transition density")]
    NotContinuous(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Mpr(#[from] MprError),
}

/// Interval, possibly with infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn real_line() -> Self {
        Support {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_compact(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn scaled(&self, c: f64) -> Support {
        Support {
            lo: self.lo * c,
            hi: self.hi * c,
        }
    }
}

/// `S(q) = [-2/sqrt(1-q), 2/sqrt(1-q)]`, the real line at `q = 1`.
pub fn support(q: f64) -> Support {
    if q >= 1.0 {
        return Support::real_line();
    }
    let r = 2.0 / (1.0 - q).sqrt();
    Support { lo: -r, hi: r }
}

/// Number of product factors so that `|q|^K < eps`, capped.
pub fn truncation_for(q: f64, eps: f64) -> usize {
    let a = q.abs();
    if a == 0.0 {
        return 1;
    }
    let k = (eps.ln() / a.ln()).ceil() as usize + 1;
    k.clamp(1, MAX_FACTORS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QDensityParams {
    pub q: f64,
    pub rho: f64,
    pub y: f64,
    pub truncation_k: usize,
    pub eps_product: f64,
}

impl QDensityParams {
    pub fn new(q: f64, rho: f64, y: f64) -> Result<Self, DensityError> {
        if !(q > -1.0 && q <= 1.0) {
            return Err(DensityError::InvalidParams(format!("q = {q} outside (-1, 1]")));
        }
        if !(rho.abs() < 1.0) {
            return Err(DensityError::InvalidParams(format!("|rho| = {} >= 1", rho.abs())));
        }
        Ok(QDensityParams {
            q,
            rho,
            y,
            truncation_k: truncation_for(q, DEFAULT_EPS_PRODUCT),
            eps_product: DEFAULT_EPS_PRODUCT,
        })
    }
}

/// q-Gaussian law at fixed `q`, with `(q;q)_inf` and the truncation cached.
#[derive(Debug, Clone)]
pub struct QGaussian {
    q: f64,
    k: usize,
    norm: f64,
}

impl QGaussian {
    pub fn new(q: f64) -> Self {
        let k = truncation_for(q, DEFAULT_EPS_PRODUCT);
        let mut qq = 1.0;
        if q < 1.0 {
            let mut p = q;
            for _ in 0..k {
                qq *= 1.0 - p;
                p *= q;
            }
        }
        QGaussian {
            q,
            k,
            norm: (1.0 - q).max(0.0).sqrt() * qq / (2.0 * PI),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn support(&self) -> Support {
        support(self.q)
    }

    pub fn density(&self, x: f64) -> f64 {
        let q = self.q;
        if q >= 1.0 {
            return (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        }
        let s = 4.0 - (1.0 - q) * x * x;
        if s <= 0.0 {
            return 0.0;
        }
        // the k = 0 factor equals s and cancels the square root below
        let mut prod = s.sqrt();
        let mut qk = q;
        for _ in 1..self.k {
            prod *= (1.0 + qk) * (1.0 + qk) - (1.0 - q) * x * x * qk;
            qk *= q;
        }
        self.norm * prod
    }

    /// `f_CN(x | y, rho, q) / f_N(x | q)` on the support.
    pub fn transition_ratio(&self, x: f64, y: f64, rho: f64) -> Result<f64, DensityError> {
        let q = self.q;
        if q >= 1.0 {
            let v = 1.0 - rho * rho;
            let z = (x - rho * y).powi(2) / v;
            return Ok((-0.5 * z + 0.5 * x * x).exp() / v.sqrt());
        }
        let r2 = rho * rho;
        let mut ratio = 1.0;
        let mut qk = 1.0;
        for k in 0..self.k {
            let q2k = qk * qk;
            let w = (1.0 - r2 * q2k).powi(2) - (1.0 - q) * rho * qk * (1.0 + r2 * q2k) * x * y
                + (1.0 - q) * r2 * q2k * (x * x + y * y);
            if w <= 0.0 {
                return Err(DensityError::ProductDivergence { k, value: w });
            }
            ratio *= (1.0 - r2 * qk) / w;
            qk *= q;
        }
        Ok(ratio)
    }

    pub fn transition(&self, x: f64, y: f64, rho: f64) -> Result<f64, DensityError> {
        if !self.support().contains(x) {
            return Ok(0.0);
        }
        let f = self.density(x);
        if f == 0.0 {
            return Ok(0.0);
        }
        Ok(f * self.transition_ratio(x, y, rho)?)
    }
}

pub fn f_n(x: f64, q: f64) -> f64 {
    QGaussian::new(q).density(x)
}

pub fn f_cn(x: f64, params: &QDensityParams) -> Result<f64, DensityError> {
    let mut g = QGaussian::new(params.q);
    g.k = params.truncation_k;
    g.transition(x, params.y, params.rho)
}

// ---------------------------------------------------------------------------
// quadrature

fn rule(n_nodes: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n_nodes)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(n_nodes.max(2)).expect("Gauss-Legendre degree >= 2");
            Arc::new(gl.as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// Quadrature nodes and weights on `support`: `x = m + c sin(theta)` for a
/// compact interval, `x = tan(theta)` on the real line.
pub fn nodes(support: Support, n_nodes: usize) -> Vec<(f64, f64)> {
    let r = rule(n_nodes);
    let half_pi = PI / 2.0;
    if support.is_compact() {
        let m = 0.5 * (support.lo + support.hi);
        let c = 0.5 * (support.hi - support.lo);
        r.iter()
            .map(|&(u, w)| {
                let th = half_pi * u;
                (m + c * th.sin(), w * half_pi * c * th.cos())
            })
            .collect()
    } else {
        r.iter()
            .map(|&(u, w)| {
                let th = half_pi * u;
                let cs = th.cos();
                (th.tan(), w * half_pi / (cs * cs))
            })
            .collect()
    }
}

pub fn integrate(
    f: impl Fn(f64) -> f64,
    support: Support,
    n_nodes: usize,
) -> Result<f64, DensityError> {
    let mut acc = 0.0;
    for (x, w) in nodes(support, n_nodes) {
        let v = f(x);
        if !v.is_finite() {
            return Err(DensityError::NonFinite { x });
        }
        if v != 0.0 {
            acc += w * v;
        }
    }
    Ok(acc)
}

/// Fallible integrand variant.
pub fn try_integrate(
    f: impl Fn(f64) -> Result<f64, DensityError>,
    support: Support,
    n_nodes: usize,
) -> Result<f64, DensityError> {
    let mut acc = 0.0;
    for (x, w) in nodes(support, n_nodes) {
        let v = f(x)?;
        if !v.is_finite() {
            return Err(DensityError::NonFinite { x });
        }
        if v != 0.0 {
            acc += w * v;
        }
    }
    Ok(acc)
}

/// `H_0(x|q) .. H_n(x|q)` at real `q`.
pub fn q_hermite_values(x: f64, q: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    let (mut prev, mut qn) = (0.0, 0.0);
    for k in 0..n {
        let next = x * out[k] - qn * prev;
        prev = out[k];
        qn = 1.0 + q * qn;
        out.push(next);
    }
    out
}

/// `P_0(x|y,rho,q) .. P_n(x|y,rho,q)`.
pub fn asc_values(x: f64, y: f64, rho: f64, q: f64, n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut prev = 0.0;
    let mut qk = 1.0; // q^k
    let mut qint = 0.0; // [k]_q
    let mut qkm1 = 0.0; // q^{k-1}
    for k in 0..n {
        let g = if k == 0 {
            0.0
        } else {
            (1.0 - rho * rho * qkm1) * qint
        };
        let next = (x - rho * y * qk) * out[k] - g * prev;
        prev = out[k];
        out.push(next);
        qkm1 = qk;
        qint = 1.0 + q * qint;
        qk *= q;
    }
    out
}

/// `[int H_m H_n f_N]_{m,n <= n_max}`.
pub fn orthogonality_matrix(q: f64, n_max: usize) -> Result<crate::NumMatrix, DensityError> {
    let g = QGaussian::new(q);
    gram(n_max, g.support(), |x| {
        Ok((g.density(x), q_hermite_values(x, q, n_max)))
    })
}

/// `[int P_m P_n f_CN(. | y, rho, q)]_{m,n <= n_max}`.
pub fn asc_orthogonality_matrix(
    q: f64,
    rho: f64,
    y: f64,
    n_max: usize,
) -> Result<crate::NumMatrix, DensityError> {
    let g = QGaussian::new(q);
    gram(n_max, g.support(), |x| {
        Ok((g.transition(x, y, rho)?, asc_values(x, y, rho, q, n_max)))
    })
}

fn gram(
    n_max: usize,
    support: Support,
    f: impl Fn(f64) -> Result<(f64, Vec<f64>), DensityError>,
) -> Result<crate::NumMatrix, DensityError> {
    let dim = n_max + 1;
    let mut acc = vec![0.0; dim * dim];
    for (x, w) in nodes(support, DEFAULT_NODES) {
        let (dens, p) = f(x)?;
        if dens == 0.0 {
            continue;
        }
        for i in 0..dim {
            for j in 0..=i {
                acc[i * dim + j] += w * dens * p[i] * p[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            acc[j * dim + i] = acc[i * dim + j];
        }
    }
    Ok(crate::NumMatrix::new(dim, acc)?)
}

// ---------------------------------------------------------------------------
// process-level densities

fn q_of(spec: &ProcessSpec) -> Result<f64, DensityError> {
    spec.q
        .as_ref()
        .map(to_f64)
        .ok_or_else(|| DensityError::InvalidParams("q must be numeric".into()))
}

/// Support of `X_t`.
pub fn process_support(spec: &ProcessSpec, t: f64) -> Result<Support, DensityError> {
    let q = q_of(spec)?;
    match spec.name {
        ProcessName::QWiener => Ok(support(q).scaled(t.sqrt())),
        ProcessName::AlphaQOU => Ok(support(q)),
        _ => Err(DensityError::NotContinuous(spec.name.to_string())),
    }
}

pub fn process_marginal(spec: &ProcessSpec, x: f64, t: f64) -> Result<f64, DensityError> {
    let g = QGaussian::new(q_of(spec)?);
    match spec.name {
        ProcessName::QWiener => {
            let r = t.sqrt();
            Ok(g.density(x / r) / r)
        }
        ProcessName::AlphaQOU => Ok(g.density(x)),
        _ => Err(DensityError::NotContinuous(spec.name.to_string())),
    }
}

/// Density of `X_t` at `x` given `X_s = y`, `s < t`.
pub fn process_transition(
    spec: &ProcessSpec,
    x: f64,
    t: f64,
    y: f64,
    s: f64,
) -> Result<f64, DensityError> {
    let g = QGaussian::new(q_of(spec)?);
    match spec.name {
        ProcessName::QWiener => {
            let r = t.sqrt();
            if s <= 0.0 {
                return Ok(g.density(x / r) / r);
            }
            let rho = (s / t).sqrt();
            Ok(g.transition(x / r, y / s.sqrt(), rho)? / r)
        }
        ProcessName::AlphaQOU => {
            let rho = (-to_f64(&spec.alpha) * (t - s)).exp();
            g.transition(x, y, rho)
        }
        _ => Err(DensityError::NotContinuous(spec.name.to_string())),
    }
}

/// Radon-Nikodym derivative of the transition law against the marginal at `t`.
pub fn closed_ratio(
    spec: &ProcessSpec,
    x: f64,
    t: f64,
    y: f64,
    s: f64,
) -> Result<f64, DensityError> {
    let g = QGaussian::new(q_of(spec)?);
    match spec.name {
        ProcessName::QWiener => {
            g.transition_ratio(x / t.sqrt(), y / s.sqrt(), (s / t).sqrt())
        }
        ProcessName::AlphaQOU => {
            g.transition_ratio(x, y, (-to_f64(&spec.alpha) * (t - s)).exp())
        }
        _ => Err(DensityError::NotContinuous(spec.name.to_string())),
    }
}

/// Numeric recurrence of the martingale polynomials at time `time`, and the
/// norms `p̂_0 .. p̂_k` by telescoping.
pub fn numeric_family(
    spec: &ProcessSpec,
    time: f64,
    k: usize,
) -> Result<(NumericRecurrence, Vec<f64>), DensityError> {
    let b = spec.bindings(T, time);
    let rec = spec.recurrence().numeric(&b, k)?;
    let mut phat = vec![1.0];
    for n in 1..=k {
        phat.push(rec.gamma[n - 1] * phat[n - 1] / rec.alpha[n]);
    }
    Ok((rec, phat))
}

/// Partial sum `sum_{n<=K} p_n(x;t) p_n(y;s) / p̂_n(t)`.
pub fn kernel_expansion(
    x: f64,
    y: f64,
    spec: &ProcessSpec,
    s: f64,
    t: f64,
    k: usize,
) -> Result<f64, DensityError> {
    Ok(kernel_terms(x, y, spec, s, t, k)?.iter().sum())
}

/// Individual terms of [`kernel_expansion`].
pub fn kernel_terms(
    x: f64,
    y: f64,
    spec: &ProcessSpec,
    s: f64,
    t: f64,
    k: usize,
) -> Result<Vec<f64>, DensityError> {
    let (rec_t, phat_t) = numeric_family(spec, t, k)?;
    let (rec_s, _) = numeric_family(spec, s, k)?;
    let px = rec_t.values(x);
    let py = rec_s.values(y);
    Ok((0..=k).map(|n| px[n] * py[n] / phat_t[n]).collect())
}

/// `|int p_n(x;t) eta(dx, t; y, s) - p_n(y;s)|`.
pub fn martingale_integral_check(
    spec: &ProcessSpec,
    n: usize,
    y: f64,
    s: f64,
    t: f64,
) -> Result<f64, DensityError> {
    let (rec_t, _) = numeric_family(spec, t, n)?;
    let (rec_s, _) = numeric_family(spec, s, n)?;
    let target = rec_s.values(y)[n];
    let integral = try_integrate(
        |x| Ok(rec_t.values(x)[n] * process_transition(spec, x, t, y, s)?),
        process_support(spec, t)?,
        DEFAULT_NODES,
    )?;
    Ok((integral - target).abs())
}

/// Residual of `E(p_n(X_s;s) | X_t = x) = (p̂_n(s)/p̂_n(t)) p_n(x;t)`,
/// integrating against the time-reversed kernel.
pub fn reversed_martingale_residual(
    spec: &ProcessSpec,
    n: usize,
    x: f64,
    s: f64,
    t: f64,
) -> Result<f64, DensityError> {
    let (rec_t, phat_t) = numeric_family(spec, t, n)?;
    let (rec_s, phat_s) = numeric_family(spec, s, n)?;
    let fx = process_marginal(spec, x, t)?;
    let integral = try_integrate(
        |y| {
            let back = process_transition(spec, x, t, y, s)? * process_marginal(spec, y, s)? / fx;
            Ok(rec_s.values(y)[n] * back)
        },
        process_support(spec, s)?,
        DEFAULT_NODES,
    )?;
    let target = phat_s[n] / phat_t[n] * rec_t.values(x)[n];
    Ok((integral - target).abs())
}

/// `|int f(x|z; t->u) f(z|y; s->t) dz - f(x|y; s->u)|`.
pub fn chapman_kolmogorov_residual(
    spec: &ProcessSpec,
    x: f64,
    y: f64,
    s: f64,
    t: f64,
    u: f64,
) -> Result<f64, DensityError> {
    let two_step = try_integrate(
        |z| Ok(process_transition(spec, x, u, z, t)? * process_transition(spec, z, t, y, s)?),
        process_support(spec, t)?,
        DEFAULT_NODES,
    )?;
    Ok((two_step - process_transition(spec, x, u, y, s)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn marginal_special_values() {
        assert_relative_eq!(f_n(0.0, 0.0), 1.0 / PI, max_relative = 1e-14);
        assert_eq!(f_n(3.0, 0.0), 0.0);
        assert_relative_eq!(f_n(0.0, 1.0), 1.0 / (2.0 * PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn transition_reductions() {
        for &q in &[0.0, 0.4, -0.3] {
            let p = QDensityParams::new(q, 0.0, 0.7).unwrap();
            for &x in &[-1.0, 0.2, 1.3] {
                assert_relative_eq!(f_cn(x, &p).unwrap(), f_n(x, q), max_relative = 1e-13);
            }
        }
        let (rho, x, y) = (0.6, 0.5, -1.1);
        let p = QDensityParams::new(0.0, rho, y).unwrap();
        let r2 = rho * rho;
        let expect = (1.0 - r2) / ((1.0 - r2).powi(2) - rho * (1.0 + r2) * x * y + r2 * (x * x + y * y));
        assert_relative_eq!(f_cn(x, &p).unwrap() / f_n(x, 0.0), expect, max_relative = 1e-13);
        let p = QDensityParams::new(1.0, rho, y).unwrap();
        let v: f64 = 1.0 - r2;
        let gauss = (-(x - rho * y).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        assert_relative_eq!(f_cn(x, &p).unwrap(), gauss, max_relative = 1e-13);
    }

    #[test]
    fn truncation_depth() {
        assert_eq!(truncation_for(0.0, 1e-16), 1);
        let k = truncation_for(0.5, 1e-16);
        assert!(0.5f64.powi(k as i32 - 1) < 1e-16);
        assert!(truncation_for(0.999, 1e-16) <= 400);
    }

    #[test]
    fn normalization_and_second_moment() {
        for &q in &[0.0, 0.3, 0.5, 0.7] {
            let s = support(q);
            assert_relative_eq!(integrate(|x| f_n(x, q), s, 400).unwrap(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(
                integrate(|x| x * x * f_n(x, q), s, 400).unwrap(),
                1.0,
                epsilon = 1e-9
            );
        }
        let gauss = integrate(|x| f_n(x, 1.0), support(1.0), 400).unwrap();
        assert_relative_eq!(gauss, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn nonfinite_integrand_reported() {
        let err = integrate(|_| f64::NAN, support(0.0), 10).unwrap_err();
        assert!(matches!(err, DensityError::NonFinite { .. }));
    }

    #[test]
    fn orthogonality_small() {
        let m = orthogonality_matrix(0.5, 3).unwrap();
        assert_relative_eq!(m.get(3, 3), 2.625, max_relative = 1e-9);
        assert!(m.get(0, 1).abs() < 1e-12);
        assert!(m.get(2, 3).abs() < 1e-8);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(QDensityParams::new(1.5, 0.0, 0.0).is_err());
        assert!(QDensityParams::new(0.5, 1.0, 0.0).is_err());
    }
}
