//! Monte Carlo paths of the q-Ornstein-Uhlenbeck, q-Wiener and Poisson
//! processes, and statistical checks of the martingale and harness
//! identities against them.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactalg::{to_f64, AlgebraError, Rational};
use crate::harness::{extract_harness_params, linear_harness_weights, qh_coeffs, HarnessError};
use crate::mpr::{MprError, ProcessName, ProcessSpec};
use crate::orthopoly::Q;
use crate::qdensity::{numeric_family, support, DensityError, QDensityParams, QGaussian};

pub const CDF_NODES: usize = 2048;
pub const Y_BINS: usize = 256;
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("tabulated CDF has zero mass")]
    EmptyCdf,
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Mpr(#[from] MprError),
}

/// Piecewise-linear CDF on a grid covering the support.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub params: QDensityParams,
    /// Mass before normalization; close to 1 when the grid resolves the density.
    pub raw_mass: f64,
}

impl TabulatedCdf {
    /// Tabulates `density` on `x = c sin(theta)`, `theta` uniform on `[-pi/2, pi/2]`.
    pub fn build(
        half_width: f64,
        n_nodes: usize,
        params: QDensityParams,
        density: impl Fn(f64) -> Result<f64, DensityError>,
    ) -> Result<Self, SimError> {
        let n = n_nodes.max(3);
        let step = PI / (n - 1) as f64;
        let mut grid = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        for i in 0..n {
            let th = -PI / 2.0 + step * i as f64;
            let x = half_width * th.sin();
            grid.push(x);
            g.push(density(x)?.max(0.0) * half_width * th.cos());
        }
        let mut cdf = vec![0.0; n];
        for i in 1..n {
            cdf[i] = cdf[i - 1] + 0.5 * step * (g[i - 1] + g[i]);
        }
        let raw_mass = cdf[n - 1];
        if !(raw_mass > 0.0) || !raw_mass.is_finite() {
            return Err(SimError::EmptyCdf);
        }
        for v in &mut cdf {
            *v /= raw_mass;
        }
        cdf[n - 1] = 1.0;
        Ok(TabulatedCdf {
            grid,
            cdf,
            params,
            raw_mass,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        let last = self.grid.len() - 1;
        if x >= self.grid[last] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let w = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.cdf[i] + w * (self.cdf[i + 1] - self.cdf[i])
    }

    pub fn inverse(&self, u: f64) -> f64 {
        let last = self.cdf.len() - 1;
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, last);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.grid[i - 1] + w * (self.grid[i] - self.grid[i - 1])
    }
}

/// Conditional laws `f_CN(. | y, rho)` at `Y_BINS` values of `y` across the support.
#[derive(Debug, Clone)]
struct TransitionTable {
    centers: Vec<f64>,
    cdfs: Vec<TabulatedCdf>,
}

impl TransitionTable {
    fn build(g: &QGaussian, rho: f64) -> Result<Self, SimError> {
        let c = g.support().hi;
        // theta-uniform rather than quantile spacing: the outer quantile gaps
        // are too wide for interpolating cubic conditional moments at large q
        let centers: Vec<f64> = (0..Y_BINS)
            .map(|i| c * (-PI / 2.0 + PI * i as f64 / (Y_BINS - 1) as f64).sin())
            .collect();
        let cdfs = centers
            .par_iter()
            .map(|&y| {
                let params = QDensityParams::new(g.q(), rho, y)?;
                TabulatedCdf::build(c, CDF_NODES, params, |x| g.transition(x, y, rho))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TransitionTable { centers, cdfs })
    }

    /// Draws from the CDF blended linearly between the two bins around `y`.
    fn sample(&self, y: f64, rng: &mut impl Rng) -> f64 {
        let last = self.centers.len() - 1;
        let j = self.centers.partition_point(|&c| c <= y).clamp(1, last);
        let (c0, c1) = (self.centers[j - 1], self.centers[j]);
        let w = if c1 > c0 { ((y - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
        let pick = if rng.gen::<f64>() < w { j } else { j - 1 };
        self.cdfs[pick].inverse(rng.gen())
    }
}

/// Stationary q-OU transition machinery at one `q`.
#[derive(Debug, Clone)]
pub struct QOuSampler {
    g: QGaussian,
    stationary: Option<TabulatedCdf>,
    tables: HashMap<u64, TransitionTable>,
}

impl QOuSampler {
    pub fn new(q: f64) -> Result<Self, SimError> {
        if !(q > -1.0 && q <= 1.0) {
            return Err(SimError::InvalidParams(format!("q = {q} outside (-1, 1]")));
        }
        let g = QGaussian::new(q);
        let stationary = if q < 1.0 {
            let c = support(q).hi;
            let params = QDensityParams::new(q, 0.0, 0.0)?;
            Some(TabulatedCdf::build(c, CDF_NODES, params, |x| Ok(g.density(x)))?)
        } else {
            None
        };
        Ok(QOuSampler {
            g,
            stationary,
            tables: HashMap::new(),
        })
    }

    pub fn stationary_cdf(&self) -> Option<&TabulatedCdf> {
        self.stationary.as_ref()
    }

    /// Tabulates the transition at correlation `rho`; idempotent.
    pub fn prepare(&mut self, rho: f64) -> Result<(), SimError> {
        if self.stationary.is_none() {
            return Ok(());
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(SimError::InvalidParams(format!("rho = {rho} outside (0, 1)")));
        }
        if !self.tables.contains_key(&rho.to_bits()) {
            let t = TransitionTable::build(&self.g, rho)?;
            self.tables.insert(rho.to_bits(), t);
        }
        Ok(())
    }

    pub fn sample_stationary(&self, rng: &mut impl Rng) -> f64 {
        match &self.stationary {
            Some(st) => st.inverse(rng.gen()),
            None => rng.sample(StandardNormal),
        }
    }

    /// `rho` must have been passed to [`QOuSampler::prepare`].
    pub fn sample_transition(&self, y: f64, rho: f64, rng: &mut impl Rng) -> f64 {
        if self.stationary.is_none() {
            let z: f64 = rng.sample(StandardNormal);
            return rho * y + (1.0 - rho * rho).sqrt() * z;
        }
        self.tables[&rho.to_bits()].sample(y, rng)
    }

    /// Unit-variance stationary path at `times` with correlation
    /// `exp(-alpha (t - s))` between consecutive times.
    fn path(&self, alpha: f64, times: &[f64], rng: &mut impl Rng) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut y = self.sample_stationary(rng);
        out.push(y);
        for w in times.windows(2) {
            y = self.sample_transition(y, (-alpha * (w[1] - w[0])).exp(), rng);
            out.push(y);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub path_id: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Independent stream per `(seed, path)`, so results do not depend on scheduling.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn check_times(times: &[f64]) -> Result<(), SimError> {
    if times.is_empty() {
        return Err(SimError::InvalidParams("no sampling times".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimError::InvalidParams("times must be strictly increasing".into()));
    }
    Ok(())
}

fn prepared_sampler(q: f64, alpha: f64, log_times: &[f64]) -> Result<QOuSampler, SimError> {
    let mut s = QOuSampler::new(q)?;
    for w in log_times.windows(2) {
        s.prepare((-alpha * (w[1] - w[0])).exp())?;
    }
    Ok(s)
}

pub fn sample_ou_path(q: f64, alpha: f64, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<PathSample>, SimError> {
    check_times(times)?;
    if !(alpha > 0.0) {
        return Err(SimError::InvalidParams(format!("alpha = {alpha} must be positive")));
    }
    let sampler = prepared_sampler(q, alpha, times)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| PathSample {
            path_id: i,
            seed,
            times: times.to_vec(),
            values: sampler.path(alpha, times, &mut path_rng(seed, i)),
        })
        .collect())
}

/// `X_tau = sqrt(tau) Y_{log tau}` with `Y` the q-OU process at `alpha = 1/2`.
pub fn sample_qwiener_path(
    q: f64,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    include_origin: bool,
) -> Result<Vec<PathSample>, SimError> {
    check_times(times)?;
    if times[0] <= 0.0 {
        return Err(SimError::InvalidParams("q-Wiener times must be positive".into()));
    }
    let log_times: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let sampler = prepared_sampler(q, 0.5, &log_times)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let y = sampler.path(0.5, &log_times, &mut path_rng(seed, i));
            let mut ts = Vec::with_capacity(times.len() + 1);
            let mut vs = Vec::with_capacity(times.len() + 1);
            if include_origin {
                ts.push(0.0);
                vs.push(0.0);
            }
            ts.extend_from_slice(times);
            vs.extend(times.iter().zip(&y).map(|(t, v)| t.sqrt() * v));
            PathSample {
                path_id: i,
                seed,
                times: ts,
                values: vs,
            }
        })
        .collect())
}

/// Poisson process of rate `mu` started at 0.
pub fn sample_poisson_path(mu: f64, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<PathSample>, SimError> {
    check_times(times)?;
    if !(mu > 0.0) || times[0] < 0.0 {
        return Err(SimError::InvalidParams("need mu > 0 and times >= 0".into()));
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut x = 0.0;
            let mut prev = 0.0;
            let values = times
                .iter()
                .map(|&t| {
                    let lam = mu * (t - prev);
                    if lam > 0.0 {
                        x += Poisson::new(lam).expect("positive rate").sample(&mut rng);
                    }
                    prev = t;
                    x
                })
                .collect();
            PathSample {
                path_id: i,
                seed,
                times: times.to_vec(),
                values,
            }
        })
        .collect())
}

fn numeric_param(v: &Option<Rational>, name: &str) -> Result<f64, SimError> {
    v.as_ref()
        .map(to_f64)
        .ok_or_else(|| SimError::InvalidParams(format!("{name} must be numeric to simulate")))
}

/// Paths of a named process.
pub fn sample_paths(spec: &ProcessSpec, times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<PathSample>, SimError> {
    match spec.name {
        ProcessName::AlphaQOU => sample_ou_path(numeric_param(&spec.q, "q")?, to_f64(&spec.alpha), times, n_paths, seed),
        ProcessName::QWiener => sample_qwiener_path(numeric_param(&spec.q, "q")?, times, n_paths, seed, false),
        ProcessName::Poisson => sample_poisson_path(numeric_param(&spec.mu, "mu")?, times, n_paths, seed),
        ProcessName::Custom(ref n) => Err(SimError::InvalidParams(format!("no sampler for `{n}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub z_score: f64,
    pub n_paths: usize,
}

impl MCReport {
    pub fn new(label: impl Into<String>, estimate: f64, stderr: f64, target: f64, n_paths: usize) -> Self {
        let z_score = if stderr > 0.0 {
            (estimate - target) / stderr
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        MCReport {
            label: label.into(),
            estimate,
            stderr,
            target,
            z_score,
            n_paths,
        }
    }

    pub fn passed(&self) -> bool {
        self.z_score.abs() <= Z_LIMIT
    }
}

/// Group of reports from one experiment; passes when every `|z| <= 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub name: String,
    pub reports: Vec<MCReport>,
    /// Set when the first attempt failed and the check was rerun at 4x paths.
    pub retried: bool,
}

impl McCheck {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(MCReport::passed)
    }

    pub fn worst(&self) -> Option<&MCReport> {
        self.reports
            .iter()
            .max_by(|a, b| a.z_score.abs().total_cmp(&b.z_score.abs()))
    }
}

/// Runs `check` and, if it fails, once more with four times the paths.
pub fn with_retry(
    n_paths: usize,
    check: impl Fn(usize) -> Result<McCheck, SimError>,
) -> Result<McCheck, SimError> {
    let first = check(n_paths)?;
    if first.passed() {
        return Ok(first);
    }
    let mut second = check(4 * n_paths)?;
    second.retried = true;
    Ok(second)
}

/// Sample mean with its standard error.
pub fn mean_report(label: &str, values: &[f64], target: f64) -> MCReport {
    let n = values.len();
    let m = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MCReport::new(label, m, (var / n as f64).sqrt(), target, n)
}

/// Least squares with heteroskedasticity-consistent (HC0) standard errors.
/// Each row of `x` is one observation.
pub fn ols_hc0(y: &[f64], x: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let k = x.first().map_or(0, Vec::len);
    if k == 0 || y.len() != x.len() || y.len() <= k {
        return Err(SimError::InvalidParams("regression needs more rows than regressors".into()));
    }
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in 0..k {
                xtx[i * k + j] += row[i] * row[j];
            }
        }
    }
    let xtx = crate::NumMatrix::new(k, xtx)?;
    let beta = xtx.spd_solve(&xty)?;
    let inv = xtx.spd_inverse()?;
    let mut meat = vec![0.0; k * k];
    for (row, &yi) in x.iter().zip(y) {
        let e = yi - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        let e2 = e * e;
        for i in 0..k {
            for j in 0..k {
                meat[i * k + j] += e2 * row[i] * row[j];
            }
        }
    }
    let meat = crate::NumMatrix::new(k, meat)?;
    let cov = inv.mul(&meat)?.mul(&inv)?;
    let se = (0..k).map(|i| cov.get(i, i).max(0.0).sqrt()).collect();
    Ok((beta, se))
}

/// `p_0 .. p_n` at `(x, time)` and `p̂_0 .. p̂_n` at `time`.
fn poly_values(spec: &ProcessSpec, n: usize, time: f64) -> Result<(crate::orthopoly::NumericRecurrence, Vec<f64>), SimError> {
    Ok(numeric_family(spec, time, n.max(1))?)
}

fn column(paths: &[PathSample], i: usize) -> Vec<f64> {
    paths.iter().map(|p| p.values[i]).collect()
}

fn regression_reports(
    labels: &[&str],
    y: &[f64],
    x: &[Vec<f64>],
    targets: &[f64],
) -> Result<Vec<MCReport>, SimError> {
    let (beta, se) = ols_hc0(y, x)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, l)| MCReport::new(*l, beta[i], se[i], targets[i], y.len()))
        .collect())
}

/// Regresses `p_n(X_t;t)` on `(1, p_n(X_s;s))`: slope 1, intercept 0.
/// With `reversed`, regresses `p_n(X_s;s)` on `(1, p_n(X_t;t))` with slope
/// `p̂_n(s)/p̂_n(t)`.
pub fn martingale_mc_check(
    spec: &ProcessSpec,
    n: usize,
    s: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
    reversed: bool,
) -> Result<McCheck, SimError> {
    let name = format!("{} martingale n={n}{}", spec.name, if reversed { " reversed" } else { "" });
    if n == 0 {
        return Ok(McCheck {
            name,
            reports: vec![MCReport::new("p_0", 1.0, 0.0, 1.0, n_paths)],
            retried: false,
        });
    }
    if !(s < t) {
        return Err(SimError::InvalidParams("need s < t".into()));
    }
    let (rs, phs) = poly_values(spec, n, s)?;
    let (rt, pht) = poly_values(spec, n, t)?;
    with_retry(n_paths, |np| {
        let paths = sample_paths(spec, &[s, t], np, seed)?;
        let ps: Vec<f64> = column(&paths, 0).iter().map(|&x| rs.values(x)[n]).collect();
        let pt: Vec<f64> = column(&paths, 1).iter().map(|&x| rt.values(x)[n]).collect();
        let (y, x, slope) = if reversed {
            (ps, pt, phs[n] / pht[n])
        } else {
            (pt, ps, 1.0)
        };
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
        Ok(McCheck {
            name: name.clone(),
            reports: regression_reports(&["intercept", "slope"], &y, &rows, &[0.0, slope])?,
            retried: false,
        })
    })
}

/// Exact harness targets: `(Â, B̂)` and `A..F` at `(s, t, u)`.
pub fn harness_targets(spec: &ProcessSpec, s: f64, t: f64, u: f64) -> Result<([f64; 2], [f64; 6]), SimError> {
    let rec = spec.recurrence();
    let ex = extract_harness_params(&rec, &spec.norms(2)?, 2)?;
    let mut vals: BTreeMap<String, Rational> = BTreeMap::new();
    if let Some(q) = &spec.q {
        vals.insert(Q.to_string(), q.clone());
    }
    if let Some(mu) = &spec.mu {
        vals.insert(crate::orthopoly::MU.to_string(), mu.clone());
    }
    let hp = ex.harness_params().to_rational(&vals)?.to_f64();
    let phat = |time: f64| numeric_family(spec, time, 1).map(|(_, p)| p[1]);
    let (ps, pt, pu) = (phat(s)?, phat(t)?, phat(u)?);
    let lin = linear_harness_weights(
        |x| if x == s { ps } else if x == t { pt } else { pu },
        s,
        t,
        u,
    )?;
    let k = qh_coeffs(&hp, &ps, &pt, &pu, None)?;
    Ok(([lin.0, lin.1], k.values()))
}

/// Recovers the linear-harness weights and the six quadratic-harness
/// coefficients by least squares on simulated `(X_s, X_t, X_u)`.
pub fn harness_mc_check(
    spec: &ProcessSpec,
    s: f64,
    t: f64,
    u: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McCheck, SimError> {
    if !(s < t && t < u) {
        return Err(SimError::InvalidParams("need s < t < u".into()));
    }
    let (lin, quad) = harness_targets(spec, s, t, u)?;
    let (rs, _) = poly_values(spec, 2, s)?;
    let (rt, _) = poly_values(spec, 2, t)?;
    let (ru, _) = poly_values(spec, 2, u)?;
    with_retry(n_paths, |np| {
        let paths = sample_paths(spec, &[s, t, u], np, seed)?;
        let vs: Vec<Vec<f64>> = column(&paths, 0).iter().map(|&x| rs.values(x)).collect();
        let vt: Vec<Vec<f64>> = column(&paths, 1).iter().map(|&x| rt.values(x)).collect();
        let vu: Vec<Vec<f64>> = column(&paths, 2).iter().map(|&x| ru.values(x)).collect();
        let y1: Vec<f64> = vt.iter().map(|v| v[1]).collect();
        let x1: Vec<Vec<f64>> = vs.iter().zip(&vu).map(|(a, b)| vec![a[1], b[1]]).collect();
        let mut reports = regression_reports(&["A_hat", "B_hat"], &y1, &x1, &lin)?;
        let y2: Vec<f64> = vt.iter().map(|v| v[2]).collect();
        let x2: Vec<Vec<f64>> = vs
            .iter()
            .zip(&vu)
            .map(|(a, b)| vec![a[2], a[1] * b[1], b[2], a[1], b[1], 1.0])
            .collect();
        reports.extend(regression_reports(&["A", "B", "C", "D", "E", "F"], &y2, &x2, &quad)?);
        Ok(McCheck {
            name: format!("{} harness ({s}, {t}, {u})", spec.name),
            reports,
            retried: false,
        })
    })
}

/// `E[(k + Y)^r]` for `Y ~ Bin(m, p)`.
pub fn binomial_bridge_moment(k: u64, m: u64, p: f64, r: i32) -> f64 {
    let mut pmf = (1.0 - p).powi(m as i32);
    let mut total = 0.0;
    for y in 0..=m {
        if y > 0 {
            pmf *= (m - y + 1) as f64 / y as f64 * p / (1.0 - p);
        }
        total += pmf * ((k + y) as f64).powi(r);
    }
    total
}

/// Conditional moments of orders 1 to 4 of `X_t` given `(X_s, X_u)` against
/// the binomial bridge. Each report pools `X_t^r − E[X_t^r | X_s, X_u]`
/// over all paths, target 0. A degenerate bucket `X_u = X_s` with
/// `X_t ≠ X_s` is reported as an infinite z-score.
pub fn poisson_bridge_check(mu: f64, s: f64, t: f64, u: f64, n_paths: usize, seed: u64) -> Result<McCheck, SimError> {
    if !(s < t && t < u) {
        return Err(SimError::InvalidParams("need s < t < u".into()));
    }
    let p = (t - s) / (u - s);
    with_retry(n_paths, |np| {
        let paths = sample_poisson_path(mu, &[s, t, u], np, seed)?;
        let mut reports = Vec::new();
        for r in 1..=4 {
            let resid: Vec<f64> = paths
                .iter()
                .map(|pa| {
                    let (k, x, n) = (pa.values[0] as u64, pa.values[1], pa.values[2] as u64);
                    x.powi(r) - binomial_bridge_moment(k, n - k, p, r)
                })
                .collect();
            reports.push(mean_report(&format!("order {r}"), &resid, 0.0));
        }
        let bad = paths
            .iter()
            .filter(|pa| pa.values[0] == pa.values[2] && pa.values[1] != pa.values[0])
            .count();
        reports.push(MCReport::new("degenerate buckets", bad as f64, 0.0, 0.0, np));
        Ok(McCheck {
            name: format!("poisson bridge ({s}, {t}, {u})"),
            reports,
            retried: false,
        })
    })
}

/// Joint moments `E[X_s^i X_u^j]`, `1 <= i + j <= 3`, from two-step
/// sampling `s -> t -> u` against one-step `s -> u`, on independent streams.
pub fn chapman_kolmogorov_mc_check(
    spec: &ProcessSpec,
    s: f64,
    t: f64,
    u: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McCheck, SimError> {
    if !(s < t && t < u) {
        return Err(SimError::InvalidParams("need s < t < u".into()));
    }
    with_retry(n_paths, |np| {
        let two = sample_paths(spec, &[s, t, u], np, seed)?;
        let one = sample_paths(spec, &[s, u], np, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        let mut reports = Vec::new();
        for deg in 1..=3 {
            for i in 0..=deg {
                let j = deg - i;
                let m = |xs: f64, xu: f64| xs.powi(i) * xu.powi(j);
                let a: Vec<f64> = two.iter().map(|p| m(p.values[0], p.values[2])).collect();
                let b: Vec<f64> = one.iter().map(|p| m(p.values[0], p.values[1])).collect();
                let (ra, rb) = (mean_report("", &a, 0.0), mean_report("", &b, 0.0));
                let se = (ra.stderr.powi(2) + rb.stderr.powi(2)).sqrt();
                reports.push(MCReport::new(
                    format!("E[X_s^{i} X_u^{j}]"),
                    ra.estimate - rb.estimate,
                    se,
                    0.0,
                    np,
                ));
            }
        }
        Ok(McCheck {
            name: format!("{} chapman-kolmogorov ({s}, {t}, {u})", spec.name),
            reports,
            retried: false,
        })
    })
}

/// Kolmogorov-Smirnov distance of `draws` against `cdf`.
pub fn ks_statistic(draws: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = draws.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_cdf_endpoints() {
        let s = QOuSampler::new(0.5).unwrap();
        let c = s.stationary_cdf().unwrap();
        assert!(c.cdf[0].abs() < 1e-10 && (c.cdf[c.cdf.len() - 1] - 1.0).abs() < 1e-10);
        assert!(c.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!((c.raw_mass - 1.0).abs() < 1e-6, "{}", c.raw_mass);
        assert!((c.inverse(0.5)).abs() < 1e-9);
    }

    #[test]
    fn paths_are_deterministic() {
        let a = sample_ou_path(0.3, 1.0, &[0.0, 0.5, 1.0], 50, 7).unwrap();
        let b = sample_ou_path(0.3, 1.0, &[0.0, 0.5, 1.0], 50, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_ou_path(0.3, 1.0, &[0.0, 0.5, 1.0], 50, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bridge_moments() {
        let p = 1.0 / 3.0;
        assert!((binomial_bridge_moment(2, 3, p, 1) - 3.0).abs() < 1e-12);
        assert!((binomial_bridge_moment(2, 3, p, 0) - 1.0).abs() < 1e-12);
        let (k, m) = (2.0, 3.0);
        let second = k * k + 2.0 * k * p * m + p * m + p * p * m * (m - 1.0);
        assert!((binomial_bridge_moment(2, 3, p, 2) - second).abs() < 1e-12);
        assert_eq!(binomial_bridge_moment(4, 0, p, 3), 64.0);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 + 3.0 * i as f64).collect();
        let (b, se) = ols_hc0(&y, &x).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-10 && (b[1] - 3.0).abs() < 1e-10);
        assert!(se.iter().all(|s| *s < 1e-6));
    }
}
