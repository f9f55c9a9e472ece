use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

use opm_core::exactalg::{fmt_rational, to_f64, Frac, MPoly, Rational, TriMatrix};
use opm_core::harness::{
    extract_harness_params, qh_coeffs, qh_identity_residuals, qh_system_check, Coefficient, HarnessParams, QhBranch,
    SequenceParams,
};
use opm_core::mpr::{
    independent_increments_check, opm_check, opm_check_cholesky, regression_matrix, structural_matrix, ProcessSpec,
};
use opm_core::orthopoly::{MU, Q, T};
use opm_core::qdensity::{chapman_kolmogorov_residual, closed_ratio, kernel_expansion, support};
use opm_core::simulate::{sample_paths, SimError};

use crate::config::{parse_list, parse_number, Format, RunConfig};
use crate::report::{Check, Report};
use crate::CliError;

/// A finished command: the report plus what `pretty` and `csv` print.
pub struct Output {
    pub report: Report,
    pub text: Vec<String>,
    pub csv: Option<String>,
}

impl Output {
    pub(crate) fn new(command: &str, checks: Vec<Check>, data: Option<Value>, text: Vec<String>) -> Self {
        Output {
            report: Report {
                command: command.into(),
                checks,
                timing_ms: 0,
                data,
            },
            text,
            csv: None,
        }
    }
}

fn failed(e: impl Display) -> CliError {
    CliError::Failed(e.to_string())
}

pub fn poly_json(p: &MPoly) -> Value {
    Value::Array(
        p.terms()
            .into_iter()
            .map(|(c, powers)| {
                let pw: Map<String, Value> = powers.into_iter().map(|(s, e)| (s, json!(e))).collect();
                json!({"coeff": fmt_rational(&c), "powers": pw})
            })
            .collect(),
    )
}

fn param_values(spec: &ProcessSpec) -> BTreeMap<String, Rational> {
    let mut v = BTreeMap::new();
    if let Some(q) = &spec.q {
        v.insert(Q.to_string(), q.clone());
    }
    if let Some(mu) = &spec.mu {
        v.insert(MU.to_string(), mu.clone());
    }
    v
}

fn param_line(spec: &ProcessSpec) -> String {
    let mut parts = vec![spec.name.to_string()];
    match &spec.q {
        Some(q) => parts.push(format!("q = {}", fmt_rational(q))),
        None if spec.name != opm_core::mpr::ProcessName::Poisson => parts.push("q symbolic".into()),
        None => {}
    }
    if spec.name == opm_core::mpr::ProcessName::AlphaQOU {
        parts.push(format!("alpha = {}", fmt_rational(&spec.alpha)));
    }
    if spec.name == opm_core::mpr::ProcessName::Poisson {
        parts.push(match &spec.mu {
            Some(m) => format!("mu = {}", fmt_rational(m)),
            None => "mu symbolic".into(),
        });
    }
    parts.join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructuralCheck {
    Semigroup,
    Independence,
    All,
}

pub fn semigroup_check(spec: &ProcessSpec, n: usize) -> Result<Check, CliError> {
    let v = structural_matrix(spec, n).map_err(failed)?;
    let st = regression_matrix(&v, "s", "t").map_err(failed)?;
    let tu = regression_matrix(&v, "t", "u").map_err(failed)?;
    let su = regression_matrix(&v, "s", "u").map_err(failed)?;
    let composed = tu.mul(&st).map_err(failed)? == su;
    let identity = regression_matrix(&v, "s", "s").map_err(failed)? == TriMatrix::identity(n + 1);
    Ok(Check::new(
        format!("semigroup {}", spec.name),
        composed && identity,
        format!("A(t,u)A(s,t) = A(s,u): {composed}; A(s,s) = I: {identity}; n = {n}"),
    ))
}

pub fn independence_check(spec: &ProcessSpec, n: usize) -> Result<Check, CliError> {
    let v = structural_matrix(spec, n).map_err(failed)?;
    let r = independent_increments_check(&v);
    let detail = if r.independent {
        "V(t) has the binomial form binom(i,j) g_{i-j}(t)".to_string()
    } else {
        let named = if r.violations.contains(&(4, 2)) { (4, 2) } else { r.violations.first().copied().unwrap_or((0, 0)) };
        let mut d = format!(
            "witness v_{{{},{}}} is not binom(i,j) g_{{i-j}}(t); {} violations, first v_{{{},{}}}",
            named.0,
            named.1,
            r.violations.len(),
            r.witness().map_or(0, |w| w.0),
            r.witness().map_or(0, |w| w.1),
        );
        if !r.endpoint_violations.is_empty() {
            d.push_str(&format!("; g_d(left end) != 0 for d in {:?}", r.endpoint_violations));
        }
        d
    };
    let mut detail = detail;
    if !r.endpoint_checked {
        detail.push_str(" (no finite left end, endpoint condition skipped)");
    }
    Ok(Check::new(format!("independent increments {}", spec.name), r.independent, detail))
}

pub fn structural(cfg: &RunConfig, which: StructuralCheck) -> Result<Output, CliError> {
    let spec = cfg.spec()?;
    let n = cfg.n_max.unwrap_or(6);
    let v = structural_matrix(&spec, n).map_err(failed)?;
    let mut checks = Vec::new();
    if matches!(which, StructuralCheck::Semigroup | StructuralCheck::All) {
        checks.push(semigroup_check(&spec, n)?);
    }
    if matches!(which, StructuralCheck::Independence | StructuralCheck::All) {
        checks.push(independence_check(&spec, n)?);
    }
    let dim = v.v.dim();
    let rows: Vec<Value> = (0..dim)
        .map(|i| Value::Array((0..=i).map(|j| poly_json(v.v.get(i, j))).collect()))
        .collect();
    let mut text = vec![format!("V_{n}(t) for {}:", param_line(&spec))];
    for i in 0..dim {
        let cells: Vec<String> = (0..=i).map(|j| v.v.get(i, j).to_string()).collect();
        text.push(format!("  row {i}: {}", cells.join(" | ")));
    }
    let data = json!({"process": spec.name.to_string(), "n": n, "matrix": rows});
    Ok(Output::new("structural", checks, Some(data), text))
}

pub fn opm(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = cfg.spec()?;
    let n = cfg.n_max.unwrap_or(4);
    let r = opm_check(&spec, n).map_err(failed)?;
    let diag: Vec<String> = r.diagonal.iter().map(ToString::to_string).collect();
    let mut checks = vec![
        Check::new(
            "gram diagonal",
            r.is_opm,
            if r.is_opm {
                format!("V^-1 M V^-T is diagonal for n <= {n}")
            } else {
                format!("off-diagonal entries at {:?}", r.off_diagonal)
            },
        ),
        Check::new("gram positive", r.positive, format!("diagonal {}", diag.join(", "))),
    ];
    let numeric = spec.q.is_some() || spec.name == opm_core::mpr::ProcessName::Poisson && spec.mu.is_some();
    if numeric {
        let t = if spec.index_set.lo.is_some() { 1.0 } else { 0.5 };
        let tol = cfg.tolerance("cholesky");
        let c = opm_check_cholesky(&spec, n, t).map_err(failed)?;
        checks.push(
            Check::new(
                "cholesky route",
                c.max_off_diagonal <= tol,
                format!("max off-diagonal {:.2e} at t = {t} (tolerance {tol:e})", c.max_off_diagonal),
            )
            .with_residual(c.max_off_diagonal),
        );
    } else {
        checks.push(Check::skip("cholesky route", "parameters are symbolic"));
    }
    let mut text = vec![format!("E p_k(X_t;t)^2 for {}:", param_line(&spec))];
    text.extend(diag.iter().enumerate().map(|(k, d)| format!("  k = {k}: {d}")));
    let data = json!({"process": spec.name.to_string(), "n": n, "diagonal": r.diagonal.iter().map(poly_json).collect::<Vec<_>>()});
    Ok(Output::new("opm-check", checks, Some(data), text))
}

fn read_sequences(path: &Path) -> Result<SequenceParams<MPoly>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let obj: BTreeMap<String, Vec<Value>> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let keys = ["a", "a_hat", "b", "b_hat", "c", "c_hat"];
    if let Some(k) = obj.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("unknown sequence `{k}`, expected one of {keys:?}")));
    }
    let mut seqs: BTreeMap<&str, Vec<Rational>> = BTreeMap::new();
    for k in keys {
        let vals = obj.get(k).cloned().unwrap_or_default();
        let parsed = vals
            .iter()
            .map(|v| match v {
                Value::Number(n) => parse_number(&n.to_string()),
                Value::String(s) => parse_number(s),
                other => Err(CliError::Usage(format!("`{k}` holds {other}, expected a number"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        seqs.insert(k, parsed);
    }
    let len = seqs.values().map(Vec::len).max().unwrap_or(0);
    if len < 3 {
        return Err(CliError::Usage("sequences need at least three entries".into()));
    }
    let pick = |k: &str, n: usize| seqs[k].get(n).cloned().map_or_else(MPoly::zero, MPoly::constant);
    Ok(SequenceParams::from_fn(len - 1, |c, n| {
        let key = match c {
            Coefficient::A => "a",
            Coefficient::AHat => "a_hat",
            Coefficient::B => "b",
            Coefficient::BHat => "b_hat",
            Coefficient::C => "c",
            Coefficient::CHat => "c_hat",
        };
        pick(key, n)
    }))
}

/// Where `p̂(s), p̂(t), p̂(u)` come from.
enum Phat {
    Process(ProcessSpec, Frac<MPoly>),
    /// A bare sequence file: the clock is taken as `p̂(t) = t`.
    Identity,
}

fn const_of(p: &MPoly) -> Option<Rational> {
    if p.is_zero() {
        Some(Rational::from_integer(0.into()))
    } else {
        p.as_constant()
    }
}

fn show_frac(f: &Frac<MPoly>) -> String {
    match (const_of(&f.num), const_of(&f.den)) {
        (Some(n), Some(d)) => fmt_rational(&(n / d)),
        _ => format!("({}) / ({})", f.num, f.den),
    }
}

fn show_poly(p: &MPoly) -> String {
    const_of(p).map_or_else(|| p.to_string(), |r| fmt_rational(&r))
}

/// Fixed-point text without a stray sign on values that round to zero.
fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn exact_phat(phat: &Frac<MPoly>, time: &Rational) -> Option<MPoly> {
    if phat.num.symbols().iter().chain(phat.den.symbols()).any(|s| s.starts_with("E_")) {
        return None;
    }
    let at = BTreeMap::from([(T.to_string(), time.clone())]);
    let num = phat.num.subs(&at).ok()?;
    let den = const_of(&phat.den.subs(&at).ok()?)?;
    (!num::Zero::is_zero(&den)).then(|| num.scale(&(Rational::from_integer(1.into()) / den)))
}

/// Coefficients at `(s,t,u)`: a check, a JSON object and display lines.
fn coefficients(
    hp: &HarnessParams<MPoly>,
    phat: &Phat,
    stu: &[Rational; 3],
    tol: f64,
) -> Result<(Check, Value, Vec<String>), CliError> {
    let exact: Option<[MPoly; 3]> = match phat {
        Phat::Identity => Some(stu.clone().map(MPoly::constant)),
        Phat::Process(_, f) => {
            let v: Option<Vec<MPoly>> = stu.iter().map(|t| exact_phat(f, t)).collect();
            v.map(|v| [v[0].clone(), v[1].clone(), v[2].clone()])
        }
    };
    let stu_text = stu.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
    if let Some([ps, pt, pu]) = exact {
        let k = qh_coeffs(hp, &ps, &pt, &pu, None).map_err(failed)?;
        let residual_ok = qh_identity_residuals(hp, &ps, &pt, &pu, &k)
            .map_err(failed)?
            .iter()
            .all(Frac::is_zero);
        let shown: Vec<String> = [&k.A, &k.B, &k.C, &k.D, &k.E, &k.F].iter().map(|f| show_frac(f)).collect();
        let obj: Map<String, Value> = NAMES.iter().zip(&shown).map(|(n, v)| (n.to_string(), json!(v))).collect();
        let text = NAMES.iter().zip(&shown).map(|(n, v)| format!("  {n} = {v}")).collect();
        let check = Check::new(
            "quadratic harness coefficients",
            residual_ok,
            format!(
                "exact at (s,t,u) = ({stu_text}), branch {:?}: {}",
                k.branch,
                NAMES.iter().zip(&shown).map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")
            ),
        );
        return Ok((check, json!({"exact": true, "branch": format!("{:?}", k.branch), "values": obj}), text));
    }
    let Phat::Process(spec, f) = phat else { unreachable!() };
    let numeric: Option<Vec<f64>> = [&hp.a, &hp.a_hat, &hp.b, &hp.b_hat, &hp.c, &hp.c_hat]
        .iter()
        .map(|p| const_of(p).map(|r| to_f64(&r)))
        .collect();
    let Some(h) = numeric else {
        return Err(CliError::Usage(format!("{} coefficients need numeric parameters (pass --q)", spec.name)));
    };
    let hp64 = HarnessParams::new(h[0], h[1], h[2], h[3], h[4], h[5]);
    let ph = |t: &Rational| -> Result<f64, CliError> {
        let b = spec.bindings(T, to_f64(t));
        Ok(f.num.eval_f64(&b).map_err(failed)? / f.den.eval_f64(&b).map_err(failed)?)
    };
    let (ps, pt, pu) = (ph(&stu[0])?, ph(&stu[1])?, ph(&stu[2])?);
    let k = qh_coeffs(&hp64, &ps, &pt, &pu, None).map_err(failed)?;
    let worst = qh_identity_residuals(&hp64, &ps, &pt, &pu, &k)
        .map_err(failed)?
        .iter()
        .map(|r| r.value().abs())
        .fold(0.0, f64::max);
    let vals = k.values();
    let obj: Map<String, Value> = NAMES.iter().zip(vals).map(|(n, v)| (n.to_string(), json!(v))).collect();
    let text = NAMES.iter().zip(vals).map(|(n, v)| format!("  {n} = {}", fixed(v, 10))).collect();
    let check = Check::new(
        "quadratic harness coefficients",
        worst <= tol,
        format!(
            "numeric at (s,t,u) = ({stu_text}), branch {:?}, max residual {worst:.1e}: {}",
            k.branch,
            NAMES.iter().zip(vals).map(|(n, v)| format!("{n}={}", fixed(v, 6))).collect::<Vec<_>>().join(", ")
        ),
    )
    .with_residual(worst);
    Ok((check, json!({"exact": false, "branch": format!("{:?}", k.branch), "values": obj}), text))
}

pub fn harness(cfg: &RunConfig, sequences: Option<&Path>, system: bool) -> Result<Output, CliError> {
    let command = if system { "harness" } else { "qh-coeffs" };
    let mut checks = Vec::new();
    let mut text = Vec::new();
    let (sp, phat, n_max) = match sequences {
        Some(path) => {
            let sp = read_sequences(path)?;
            let fits = sp.len() - 3;
            let n = cfg.n_max.map_or(fits, |n| n.min(fits));
            text.push(format!("sequences from {} (p̂(t) = t assumed)", path.display()));
            (sp, Phat::Identity, n)
        }
        None => {
            let spec = cfg.spec()?;
            let n = cfg.n_max.unwrap_or(20);
            let norms = spec.norms(3).map_err(failed)?;
            let ex = match extract_harness_params(&spec.recurrence(), &norms, n) {
                Ok(ex) => ex,
                Err(e) => {
                    checks.push(Check::new("harness decomposition", false, e.to_string()));
                    return Ok(Output::new(command, checks, None, text));
                }
            };
            let vals = param_values(&spec);
            let sp = ex.sequences.subs(&vals).map_err(failed)?;
            let phat = Frac {
                num: ex.phat.num.subs(&vals).map_err(failed)?,
                den: ex.phat.den.subs(&vals).map_err(failed)?,
            };
            text.push(format!("{} with p̂(t) = {}", param_line(&spec), show_frac(&phat)));
            checks.push(Check::new(
                "harness decomposition",
                true,
                format!("alpha_n, beta_n - beta_0, gamma_n in span(alpha_1, gamma_0) for n <= {}", n + 2),
            ));
            (sp, Phat::Process(spec, phat), n)
        }
    };
    let hp = sp.harness_params();
    let params = [
        ("a", &hp.a),
        ("a_hat", &hp.a_hat),
        ("b", &hp.b),
        ("b_hat", &hp.b_hat),
        ("c", &hp.c),
        ("c_hat", &hp.c_hat),
    ];
    let (kappa, lambda) = (show_poly(&hp.kappa()), show_poly(&hp.lambda()));
    text.push(format!(
        "  {}",
        params.iter().map(|(n, v)| format!("{n} = {}", show_poly(v))).collect::<Vec<_>>().join(", ")
    ));
    text.push(format!("  kappa = {kappa}, lambda = {lambda}"));
    let mut data = Map::new();
    data.insert(
        "params".into(),
        Value::Object(params.iter().map(|(n, v)| (n.to_string(), json!(show_poly(v)))).collect()),
    );
    // same layout `--sequences` reads back
    let seq_json: Map<String, Value> = [
        ("a", Coefficient::A),
        ("a_hat", Coefficient::AHat),
        ("b", Coefficient::B),
        ("b_hat", Coefficient::BHat),
        ("c", Coefficient::C),
        ("c_hat", Coefficient::CHat),
    ]
    .into_iter()
    .map(|(k, c)| (k.to_string(), json!((0..sp.len()).map(|n| show_poly(&sp.get(c, n as i64))).collect::<Vec<_>>())))
    .collect();
    data.insert("sequences".into(), Value::Object(seq_json));
    data.insert("kappa".into(), json!(kappa));
    data.insert("lambda".into(), json!(lambda));

    if system {
        let boundary = sp.boundary_violations();
        checks.push(Check::new(
            "boundary values",
            boundary.is_empty(),
            if boundary.is_empty() {
                "a_0 = â_0 = â_1 = b_0 = b̂_0 = c_0 = 0, a_1 = ĉ_0 = 1".to_string()
            } else {
                format!("violated at {boundary:?}")
            },
        ));
        let samples = [0.25, 1.0, 4.0];
        let r = qh_system_check(&sp, &hp, n_max, &samples);
        let detail = match r.violations.first() {
            None => format!("e1..e5 hold exactly for 0 <= n <= {n_max}"),
            Some(v) => format!(
                "first violation ({}, n={}): lhs {} vs rhs {}; {} violations",
                v.equation,
                v.n,
                show_poly(&v.lhs),
                show_poly(&v.rhs),
                r.violations.len()
            ),
        };
        checks.push(Check::new("recursive system", r.violations.is_empty(), detail));
        checks.push(if !r.positivity_checked {
            Check::skip("positivity", "sequences are symbolic")
        } else {
            Check::new(
                "positivity",
                r.positivity_violations.is_empty(),
                if r.positivity_violations.is_empty() {
                    format!("(a_n + â_n p̂)(c_n + ĉ_n p̂) > 0 at p̂ in {samples:?}")
                } else {
                    format!("fails at (n, p̂) = {:?}", r.positivity_violations)
                },
            )
        });
        if let Some(v) = r.violations.first() {
            data.insert("witness".into(), json!({"equation": v.equation.to_string(), "n": v.n}));
        }
    }

    let stu = match cfg.stu()? {
        Some(stu) => Some(stu),
        None if !system => Some([1, 2, 4].map(|k| Rational::from_integer(k.into()))),
        None => None,
    };
    match stu {
        Some(stu) => {
            let (check, coeffs, lines) = coefficients(&hp, &phat, &stu, cfg.tolerance("coefficients"))?;
            checks.push(check);
            text.push("  E(X_t^2 | X_s, X_u) coefficients:".into());
            text.extend(lines);
            data.insert("coefficients".into(), coeffs);
        }
        None => checks.push(Check::skip("quadratic harness coefficients", "no --stu given")),
    }
    if let Phat::Process(_, _) = phat {
        if hp.kappa().is_zero() && hp.lambda().is_zero() {
            text.push(format!("  note: B is free on the {:?} branch", QhBranch::Degenerate));
        }
    }
    Ok(Output::new(command, checks, Some(Value::Object(data)), text))
}

pub struct KernelArgs {
    pub rho: f64,
    pub y: f64,
}

pub fn kernel(cfg: &RunConfig, args: &KernelArgs) -> Result<Output, CliError> {
    let q = cfg.q()?.unwrap_or_else(|| Rational::new(1.into(), 2.into()));
    let qf = to_f64(&q);
    if !(0.0 < args.rho && args.rho < 1.0) {
        return Err(CliError::Usage(format!("--rho = {} must lie in (0, 1)", args.rho)));
    }
    let spec = ProcessSpec::alpha_q_ou(Some(q.clone()), Rational::from_integer(1.into()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let k = cfg.n_max.unwrap_or(60);
    let t = -args.rho.ln();
    let sup = support(qf);
    let (lo, hi) = (sup.lo.max(-4.0), sup.hi.min(4.0));
    let mut grid = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        let x = lo + (hi - lo) * i as f64 / 20.0;
        let series = kernel_expansion(x, args.y, &spec, 0.0, t, k).map_err(failed)?;
        let closed = closed_ratio(&spec, x, t, args.y, 0.0).map_err(failed)?;
        worst = worst.max((series - closed).abs());
        grid.push((x, series, closed));
    }
    let tol = cfg.tolerance("kernel");
    let mut ck: f64 = 0.0;
    for &(x, y) in &[(0.0, args.y), (0.7, -0.4), (-1.2, 1.0)] {
        ck = ck.max(chapman_kolmogorov_residual(&spec, x, y, 0.0, 0.6, 1.5).map_err(failed)?);
    }
    let ck_tol = cfg.tolerance("ck");
    let checks = vec![
        Check::new(
            "kernel expansion",
            worst <= tol,
            format!(
                "sup |sum_{{n<={k}}} rho^n H_n(x)H_n(y)/[n]_q! - f_CN/f_N| = {worst:.2e} on 21 points (tolerance {tol:e})"
            ),
        )
        .with_residual(worst),
        Check::new("chapman-kolmogorov", ck <= ck_tol, format!("max residual {ck:.2e} (tolerance {ck_tol:e})"))
            .with_residual(ck),
    ];
    let mut text = vec![format!("q = {}, rho = {}, y = {}, K = {k}", fmt_rational(&q), args.rho, args.y)];
    text.push(format!("  {:>10} {:>16} {:>16}", "x", "series", "closed"));
    text.extend(grid.iter().map(|(x, s, c)| format!("  {x:>10.5} {s:>16.10} {c:>16.10}")));
    let data = json!({
        "q": fmt_rational(&q), "rho": args.rho, "y": args.y, "terms": k,
        "grid": grid.iter().map(|(x, s, c)| json!({"x": x, "series": s, "closed": c})).collect::<Vec<_>>(),
    });
    Ok(Output::new("kernel", checks, Some(data), text))
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidParams(m) => CliError::Usage(m),
        other => failed(other),
    }
}

pub fn simulate(cfg: &RunConfig, times: &str) -> Result<Output, CliError> {
    let spec = cfg.spec()?;
    let times: Vec<f64> = parse_list(times)?.iter().map(to_f64).collect();
    if spec.index_set.lo.is_some_and(|lo| times.iter().any(|&t| t < lo)) {
        return Err(CliError::Usage(format!("{} is indexed by t >= 0", spec.name)));
    }
    let n_paths = cfg.paths.unwrap_or(1000);
    let seed = cfg.seed.unwrap_or(0);
    let paths = sample_paths(&spec, &times, n_paths, seed).map_err(sim_error)?;
    let finite = paths.iter().all(|p| p.values.iter().all(|v| v.is_finite()));
    let checks = vec![Check::new(
        "sampled",
        finite,
        format!("{n_paths} paths at {} times, seed {seed}{}", times.len(), if finite { "" } else { ", non-finite values" }),
    )];
    let mut text = vec![format!("{} paths of {}", n_paths, param_line(&spec))];
    text.push(format!("  {:>10} {:>14} {:>14}", "time", "mean", "variance"));
    for (i, t) in times.iter().enumerate() {
        let vals: Vec<f64> = paths.iter().map(|p| p.values[i]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (vals.len().max(2) - 1) as f64;
        text.push(format!("  {t:>10.4} {m:>14.6} {v:>14.6}"));
    }
    let mut csv = String::from("path_id,time,value\n");
    for p in &paths {
        for (t, v) in p.times.iter().zip(&p.values) {
            csv.push_str(&format!("{},{t},{v}\n", p.path_id));
        }
    }
    let data = match cfg.format() {
        Format::Json => Some(json!({"process": spec.name.to_string(), "seed": seed, "paths": paths})),
        _ => None,
    };
    let mut out = Output::new("simulate", checks, data, text);
    out.csv = Some(csv);
    Ok(out)
}
