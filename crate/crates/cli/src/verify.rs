use std::time::Instant;

use serde_json::json;

use opm_core::exactalg::{to_f64, Frac, MPoly, Rational, TriMatrix};
use opm_core::harness::{
    extract_harness_params, qh_coeffs, qh_system_check, render_generic_e5, EquationId, GenericFamily,
};
use opm_core::mpr::{independent_increments_check, opm_check, structural_matrix, ProcessSpec};
use opm_core::orthopoly::{exp_symbol, q_factorial, Q, T};
use opm_core::qdensity::{asc_orthogonality_matrix, chapman_kolmogorov_residual, closed_ratio, kernel_expansion, orthogonality_matrix, support};
use opm_core::simulate::{harness_mc_check, martingale_mc_check, poisson_bridge_check, McCheck};

use crate::commands::{semigroup_check, Output};
use crate::config::RunConfig;
use crate::report::Check;
use crate::CliError;

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn qpoly(coeffs: &[i64]) -> MPoly {
    let q = MPoly::var(Q);
    coeffs
        .iter()
        .enumerate()
        .fold(MPoly::zero(), |acc, (k, &c)| &acc + &(&q.pow(k as u32) * &MPoly::int(c)))
}

/// Rows of the 6x6 table, before the time factors.
fn v6_table() -> TriMatrix {
    let z = MPoly::zero;
    let o = MPoly::one;
    TriMatrix::from_rows(vec![
        vec![o(), z(), z(), z(), z(), z()],
        vec![z(), o(), z(), z(), z(), z()],
        vec![o(), z(), o(), z(), z(), z()],
        vec![z(), qpoly(&[2, 1]), z(), o(), z(), z()],
        vec![qpoly(&[2, 1]), z(), qpoly(&[3, 2, 1]), z(), o(), z()],
        vec![z(), qpoly(&[5, 6, 3, 1]), z(), qpoly(&[4, 3, 2, 1]), z(), o()],
    ])
    .expect("square table")
}

fn structural_suite(q: &Rational) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let t = MPoly::var(T);
    let table = v6_table();
    let qw = structural_matrix(&ProcessSpec::q_wiener(None).map_err(failed)?, 5).map_err(failed)?;
    let mut expect = table.clone();
    for i in 0..6 {
        for j in 0..i {
            let e = expect.get(i, j) * &t.pow(((i - j) / 2) as u32);
            expect.set(i, j, e);
        }
    }
    checks.push(Check::new("V_6 table q-wiener", qw.v == expect, "36 entries, q symbolic"));
    let ou = structural_matrix(&ProcessSpec::alpha_q_ou(None, int(1)).map_err(failed)?, 5).map_err(failed)?;
    let e = MPoly::var(&exp_symbol(T));
    let unscaled = ou.v.mul(&TriMatrix::diagonal((0..6).map(|j| e.pow(j)).collect())).map_err(failed)?;
    checks.push(Check::new("V_6 table q-ou", unscaled == table, "36 entries after removing e^{jαt}, q symbolic"));

    for spec in [
        ProcessSpec::q_wiener(None),
        ProcessSpec::alpha_q_ou(None, int(1)),
        ProcessSpec::poisson(None),
    ] {
        checks.push(semigroup_check(&spec.map_err(failed)?, 6)?);
    }

    let e = MPoly::var(&exp_symbol(T));
    for (spec, scale) in [
        (ProcessSpec::q_wiener(Some(q.clone())).map_err(failed)?, t.clone()),
        (ProcessSpec::alpha_q_ou(Some(q.clone()), int(1)).map_err(failed)?, e.pow(2)),
    ] {
        let r = opm_check(&spec, 4).map_err(failed)?;
        let qm = MPoly::constant(q.clone());
        let diag_ok = (0..=4u32).all(|k| r.diagonal[k as usize] == &scale.pow(k) * &q_factorial(k, &qm));
        checks.push(Check::new(
            format!("orthogonal martingales {}", spec.name),
            r.is_opm && diag_ok,
            format!("Gram matrix diagonal with p̂_k = ({scale})^k [k]_q!, k <= 4"),
        ));
    }

    let at_one = structural_matrix(&ProcessSpec::q_wiener(Some(int(1))).map_err(failed)?, 6).map_err(failed)?;
    let mut ok = independent_increments_check(&at_one).independent;
    for qv in [Some(int(0)), Some(rat(1, 2)), None] {
        let v = structural_matrix(&ProcessSpec::q_wiener(qv).map_err(failed)?, 6).map_err(failed)?;
        let r = independent_increments_check(&v);
        ok &= !r.independent && r.violations.contains(&(4, 2));
    }
    checks.push(Check::new(
        "independence dichotomy",
        ok,
        "independent at q = 1; v_{4,2} violated at q = 0, 1/2 and symbolic q",
    ));
    Ok(checks)
}

fn harness_suite() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let extract = |spec: &ProcessSpec, n: usize| {
        extract_harness_params(&spec.recurrence(), &spec.norms(3).map_err(failed)?, n).map_err(failed)
    };
    let start = Instant::now();
    let mut ok = true;
    for spec in [
        ProcessSpec::q_wiener(None).map_err(failed)?,
        ProcessSpec::alpha_q_ou(None, int(1)).map_err(failed)?,
        ProcessSpec::poisson(None).map_err(failed)?,
    ] {
        let ex = extract(&spec, 20)?;
        ok &= qh_system_check(&ex.sequences, &ex.harness_params(), 20, &[]).violations.is_empty();
    }
    let secs = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "recursive system, named processes",
        ok && secs < 1.0,
        if secs < 1.0 {
            "e1..e5 exact for n <= 20, under 1 s".to_string()
        } else {
            format!("e1..e5 for n <= 20 took {secs:.2}s (limit 1 s)")
        },
    ));

    let ex = extract(&ProcessSpec::poisson(Some(int(1))).map_err(failed)?, 12)?;
    let mut sp = ex.sequences.clone();
    for (n, b) in sp.b.iter_mut().enumerate() {
        *b = MPoly::int((n * n) as i64);
    }
    let w = qh_system_check(&sp, &ex.harness_params(), 10, &[]).witness();
    checks.push(Check::new(
        "mutated sequence rejected",
        w == Some((EquationId::E4, 2)),
        format!("b_n = n^2 fails first at {w:?}"),
    ));

    let hq = extract(&ProcessSpec::q_wiener(None).map_err(failed)?, 2)?.harness_params();
    let hp = extract(&ProcessSpec::poisson(None).map_err(failed)?, 2)?.harness_params();
    let (rq, rp) = (render_generic_e5(GenericFamily::QHermite, &hq), render_generic_e5(GenericFamily::Poisson, &hp));
    checks.push(Check::new(
        "index-generic reduction",
        rq == "(1+q)=(1+q)(−q[n]_q+[n+1]_q)" && rp == "2=2(−n+n+1)",
        format!("{rq}; {rp}"),
    ));

    let (s, t, u) = (MPoly::var("s"), MPoly::var("t"), MPoly::var("u"));
    let q = MPoly::var(Q);
    let k = qh_coeffs(&hq, &s, &t, &u, None).map_err(failed)?;
    let den = &(&u - &s) * &(&u - &(&q * &s));
    let a_ok = k.A == Frac::new(&(&u - &t) * &(&u - &(&q * &t)), den).map_err(failed)?;
    let kp = qh_coeffs(&hp, &(&MPoly::var("mu") * &s), &(&MPoly::var("mu") * &t), &(&MPoly::var("mu") * &u), None)
        .map_err(failed)?;
    let p_ok = kp.A == Frac::new((&u - &t).pow(2), (&u - &s).pow(2)).map_err(failed)? && kp.D == -kp.B.clone();
    checks.push(Check::new(
        "closed-form coefficients",
        a_ok && p_ok,
        "q-Wiener A = (u-t)(u-qt)/((u-s)(u-qs)); Poisson A = (u-t)^2/(u-s)^2, D = -B",
    ));
    Ok(checks)
}

fn qfact(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| (0..k).map(|j| q.powi(j as i32)).sum::<f64>()).product()
}

fn quadrature_suite(cfg: &RunConfig, q: f64) -> Result<Vec<Check>, CliError> {
    let (tol, asc_tol) = (cfg.tolerance("quadrature"), cfg.tolerance("asc"));
    let mut qs = vec![0.0, 0.3, 0.7];
    if !qs.contains(&q) && q < 1.0 {
        qs.push(q);
    }
    let mut checks = Vec::new();
    for &qv in &qs {
        let m = orthogonality_matrix(qv, 8).map_err(failed)?;
        let mut worst: f64 = 0.0;
        for i in 0..=8 {
            for j in 0..=8 {
                let nf = qfact(i, qv);
                let target = if i == j { nf } else { 0.0 };
                worst = worst.max((m.get(i, j) - target).abs() / nf.max(1.0));
            }
        }
        checks.push(
            Check::new(
                format!("q-Hermite orthogonality q = {qv}"),
                worst <= tol,
                format!("n, m <= 8, scaled error {worst:.1e} (tolerance {tol:e})"),
            )
            .with_residual(worst),
        );
        let mut worst: f64 = 0.0;
        for &rho in &[0.3, 0.8] {
            let m = asc_orthogonality_matrix(qv, rho, 0.5, 8).map_err(failed)?;
            for i in 0..=8 {
                for j in 0..=8 {
                    let poch: f64 = (0..i).map(|k| 1.0 - rho * rho * qv.powi(k as i32)).product();
                    let target = if i == j { qfact(i, qv) * poch } else { 0.0 };
                    worst = worst.max((m.get(i, j) - target).abs());
                }
            }
        }
        checks.push(
            Check::new(
                format!("Al-Salam-Chihara orthogonality q = {qv}"),
                worst <= asc_tol,
                format!("rho in {{0.3, 0.8}}, error {worst:.1e} (tolerance {asc_tol:e})"),
            )
            .with_residual(worst),
        );
    }
    Ok(checks)
}

fn kernel_suite(cfg: &RunConfig, q: &Rational) -> Result<Vec<Check>, CliError> {
    let spec = ProcessSpec::alpha_q_ou(Some(q.clone()), int(1)).map_err(failed)?;
    let sup = support(to_f64(q));
    let (lo, hi) = (sup.lo.max(-4.0), sup.hi.min(4.0));
    let t = -f64::ln(0.3);
    let mut worst: f64 = 0.0;
    for &y in &[0.0, 1.0] {
        for i in 0..21 {
            let x = lo + (hi - lo) * i as f64 / 20.0;
            let series = kernel_expansion(x, y, &spec, 0.0, t, 60).map_err(failed)?;
            worst = worst.max((series - closed_ratio(&spec, x, t, y, 0.0).map_err(failed)?).abs());
        }
    }
    let mut ck: f64 = 0.0;
    for &(x, y) in &[(0.0, 0.0), (0.7, -0.4), (-1.2, 1.0)] {
        ck = ck.max(chapman_kolmogorov_residual(&spec, x, y, 0.0, 0.6, 1.5).map_err(failed)?);
    }
    let (tol, ck_tol) = (cfg.tolerance("kernel"), cfg.tolerance("ck"));
    Ok(vec![
        Check::new(
            "kernel expansion",
            worst <= tol,
            format!("K = 60, rho = 0.3, y in {{0, 1}}: sup error {worst:.1e} (tolerance {tol:e})"),
        )
        .with_residual(worst),
        Check::new("chapman-kolmogorov", ck <= ck_tol, format!("residual {ck:.1e} (tolerance {ck_tol:e})"))
            .with_residual(ck),
    ])
}

fn mc_check(c: &McCheck, z: f64) -> Check {
    let worst = c.worst().map_or(0.0, |r| r.z_score.abs());
    let detail = match c.worst() {
        Some(r) => format!(
            "max |z| {worst:.2} ({}: {:.5} vs {:.5}), {} paths{}",
            r.label,
            r.estimate,
            r.target,
            r.n_paths,
            if c.retried { ", retried" } else { "" }
        ),
        None => "no reports".into(),
    };
    Check::new(c.name.clone(), c.reports.iter().all(|r| r.z_score.abs() <= z), detail).with_residual(worst)
}

fn mc_suite(cfg: &RunConfig, q: &Rational) -> Result<Vec<Check>, CliError> {
    let paths = cfg.paths.unwrap_or(100_000);
    let seed = cfg.seed.unwrap_or(7);
    let z = cfg.tolerance("z");
    let mut out = Vec::new();
    let ou = ProcessSpec::alpha_q_ou(Some(q.clone()), int(1)).map_err(failed)?;
    let qw = ProcessSpec::q_wiener(Some(q.clone())).map_err(failed)?;
    for (spec, s, t) in [(&ou, 0.3, 1.0), (&qw, 1.0, 2.0)] {
        for n in 1..=3 {
            let c = martingale_mc_check(spec, n, s, t, paths, seed + n as u64, false).map_err(failed)?;
            out.push(mc_check(&c, z));
        }
    }
    out.push(mc_check(&harness_mc_check(&qw, 1.0, 2.0, 4.0, paths, seed + 10).map_err(failed)?, z));
    let poisson = ProcessSpec::poisson(Some(int(1))).map_err(failed)?;
    out.push(mc_check(&harness_mc_check(&poisson, 1.0, 2.0, 4.0, paths, seed + 11).map_err(failed)?, z));
    out.push(mc_check(&poisson_bridge_check(1.0, 1.0, 2.0, 4.0, paths, seed + 12).map_err(failed)?, z));
    Ok(out)
}

pub fn verify_all(cfg: &RunConfig, with_mc: bool) -> Result<Output, CliError> {
    let q = cfg.q()?.unwrap_or_else(|| rat(1, 2));
    if q <= int(-1) || q >= int(1) {
        return Err(CliError::Usage(format!("verify-all needs -1 < q < 1, got {q}")));
    }
    let mut checks = Vec::new();
    let mut sections = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut() -> Result<Vec<Check>, CliError>| -> Result<(), CliError> {
        let start = Instant::now();
        let c = f()?;
        sections.push(json!({"section": name, "checks": c.len(), "ms": start.elapsed().as_millis() as u64}));
        checks.extend(c);
        Ok(())
    };
    run("structural", &mut || structural_suite(&q))?;
    run("harness", &mut harness_suite)?;
    run("quadrature", &mut || quadrature_suite(cfg, to_f64(&q)))?;
    run("kernel", &mut || kernel_suite(cfg, &q))?;
    if with_mc {
        run("monte-carlo", &mut || mc_suite(cfg, &q))?;
    } else {
        checks.push(Check::skip("monte carlo", "pass --mc to sample paths"));
    }
    let text = vec![format!(
        "verify-all at q = {}{}",
        opm_core::exactalg::fmt_rational(&q),
        if with_mc { ", with Monte Carlo" } else { "" }
    )];
    Ok(Output::new("verify-all", checks, Some(json!({"sections": sections})), text))
}
