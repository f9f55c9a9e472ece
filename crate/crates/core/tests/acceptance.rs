//! One PASS/FAIL line per acceptance criterion. Exits nonzero when an
//! asserted criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use opm_core::exactalg::{int, rat, to_f64, Frac, MPoly, Rational, TriMatrix};
use opm_core::harness::{
    extract_harness_params, fun_eq_property, n_generic_reduction, qh_coeffs, qh_system_check, render_generic_e5,
    EquationId, GenericFamily, HarnessParams,
};
use opm_core::mpr::{
    independent_increments_check, opm_check, regression_matrix, structural_matrix, ProcessSpec,
};
use opm_core::orthopoly::{exp_symbol, q_factorial, PolyFamily, MU, Q, T};
use opm_core::qdensity::{
    asc_orthogonality_matrix, chapman_kolmogorov_residual, closed_ratio, kernel_expansion, orthogonality_matrix,
    support,
};
use opm_core::simulate::{harness_mc_check, martingale_mc_check, poisson_bridge_check, McCheck};

struct Outcome {
    failed: Vec<usize>,
}

impl Outcome {
    fn line(&mut self, n: usize, ok: bool, detail: &str) {
        println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }
}

fn q() -> MPoly {
    MPoly::var(Q)
}

fn qpoly(coeffs: &[i64]) -> MPoly {
    coeffs
        .iter()
        .enumerate()
        .fold(MPoly::zero(), |acc, (k, &c)| &acc + &(&q().pow(k as u32) * &MPoly::int(c)))
}

fn golden() -> Vec<Vec<MPoly>> {
    let z = MPoly::zero;
    let o = MPoly::one;
    vec![
        vec![o(), z(), z(), z(), z(), z()],
        vec![z(), o(), z(), z(), z(), z()],
        vec![o(), z(), o(), z(), z(), z()],
        vec![z(), qpoly(&[2, 1]), z(), o(), z(), z()],
        vec![qpoly(&[2, 1]), z(), qpoly(&[3, 2, 1]), z(), o(), z()],
        vec![z(), qpoly(&[5, 6, 3, 1]), z(), qpoly(&[4, 3, 2, 1]), z(), o()],
    ]
}

fn criterion_1(out: &mut Outcome) {
    let start = Instant::now();
    let t = MPoly::var(T);
    let qw = structural_matrix(&ProcessSpec::q_wiener(None).unwrap(), 5).unwrap();
    let mut rows = golden();
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if i > j {
                *e = &*e * &t.pow(((i - j) / 2) as u32);
            }
        }
    }
    let qw_ok = qw.v == TriMatrix::from_rows(rows).unwrap()
        && qw.v.get(5, 1) == &(&t.pow(2) * &qpoly(&[5, 6, 3, 1]));
    let ou = structural_matrix(&ProcessSpec::alpha_q_ou(None, int(1)).unwrap(), 5).unwrap();
    let e = MPoly::var(&exp_symbol(T));
    let scale = TriMatrix::diagonal((0..6).map(|j| e.pow(j)).collect());
    let ou_ok = ou.v.mul(&scale).unwrap() == TriMatrix::from_rows(golden()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    out.line(
        1,
        qw_ok && ou_ok && secs < 5.0,
        &format!("q-Wiener {qw_ok}, OU {ou_ok}, {secs:.2}s (limit 5s)"),
    );
}

fn named_specs() -> Vec<ProcessSpec> {
    vec![
        ProcessSpec::q_wiener(None).unwrap(),
        ProcessSpec::alpha_q_ou(None, int(1)).unwrap(),
        ProcessSpec::poisson(None).unwrap(),
    ]
}

fn criterion_2(out: &mut Outcome) {
    let start = Instant::now();
    let mut ok = true;
    for spec in named_specs() {
        let v = structural_matrix(&spec, 6).unwrap();
        let st = regression_matrix(&v, "s", "t").unwrap();
        let tu = regression_matrix(&v, "t", "u").unwrap();
        let su = regression_matrix(&v, "s", "u").unwrap();
        ok &= tu.mul(&st).unwrap() == su;
        ok &= regression_matrix(&v, "s", "s").unwrap() == TriMatrix::identity(7);
    }
    let secs = start.elapsed().as_secs_f64();
    out.line(2, ok && secs < 10.0, &format!("three processes at n = 6, {secs:.2}s (limit 10s)"));
}

fn criterion_3(out: &mut Outcome) {
    let t = MPoly::var(T);
    let e = MPoly::var(&exp_symbol(T));
    let qw = opm_check(&ProcessSpec::q_wiener(None).unwrap(), 4).unwrap();
    let ou = opm_check(&ProcessSpec::alpha_q_ou(None, int(1)).unwrap(), 4).unwrap();
    let mut ok = qw.is_opm && ou.is_opm && qw.off_diagonal.is_empty() && ou.off_diagonal.is_empty();
    for k in 0..=4u32 {
        ok &= qw.diagonal[k as usize] == &t.pow(k) * &q_factorial(k, &q());
        ok &= ou.diagonal[k as usize] == &e.pow(2 * k) * &q_factorial(k, &q());
    }
    out.line(3, ok, "Gram diagonal t^k [k]_q! and e^{2kαt} [k]_q!, k <= 4");
}

fn criterion_4(out: &mut Outcome) {
    let one = structural_matrix(&ProcessSpec::q_wiener(Some(int(1))).unwrap(), 6).unwrap();
    let mut ok = independent_increments_check(&one).independent;
    for qv in [Some(int(0)), Some(rat(1, 2)), None] {
        let v = structural_matrix(&ProcessSpec::q_wiener(qv).unwrap(), 6).unwrap();
        let r = independent_increments_check(&v);
        ok &= !r.independent && r.violations.contains(&(4, 2));
    }
    out.line(4, ok, "independent at q = 1; v_{4,2} violated at q = 0, 1/2, symbolic");
}

fn fr(num: MPoly, den: MPoly) -> Frac<MPoly> {
    Frac::new(num, den).unwrap()
}

fn harness_params(spec: &ProcessSpec, n_max: usize) -> (HarnessParams<MPoly>, opm_core::harness::Extraction) {
    let ex = extract_harness_params(&spec.recurrence(), &spec.norms(3).unwrap(), n_max).unwrap();
    (ex.harness_params(), ex)
}

fn criterion_5(out: &mut Outcome) {
    let v = MPoly::var;
    let one_q = &MPoly::one() + &q();
    let q_hermite_ok = |hp: &HarnessParams<MPoly>, ps: &MPoly, pt: &MPoly, pu: &MPoly| {
        let k = qh_coeffs(hp, ps, pt, pu, None).unwrap();
        let den = &(pu - ps) * &(pu - &(&q() * ps));
        k.A == fr(&(pu - pt) * &(pu - &(&q() * pt)), den.clone())
            && k.B == fr(&(&one_q * &(pt - ps)) * &(pu - pt), den.clone())
            && k.C == fr(&(pt - ps) * &(pt - &(&q() * ps)), den)
            && k.D.is_zero()
            && k.E.is_zero()
            && k.F == -(k.B.clone() * Frac::from_value(ps.clone()))
    };
    let (s, t, u) = (v("s"), v("t"), v("u"));
    let (hq, _) = harness_params(&ProcessSpec::q_wiener(None).unwrap(), 2);
    let qw = q_hermite_ok(&hq, &s, &t, &u);
    let (ho, _) = harness_params(&ProcessSpec::alpha_q_ou(None, int(1)).unwrap(), 2);
    let ou = q_hermite_ok(&ho, &v("P_s"), &v("P_t"), &v("P_u"));

    let (hp, _) = harness_params(&ProcessSpec::poisson(None).unwrap(), 2);
    let mu = v(MU);
    let ps = &mu * &s;
    let k = qh_coeffs(&hp, &ps, &(&mu * &t), &(&mu * &u), None).unwrap();
    let den = (&u - &s).pow(2);
    let po = k.A == fr((&u - &t).pow(2), den.clone())
        && k.B == fr(&(&MPoly::int(2) * &(&u - &t)) * &(&t - &s), den.clone())
        && k.C == fr((&t - &s).pow(2), den)
        && k.D == -k.B.clone()
        && k.E.is_zero()
        && k.F == -(k.B.clone() * Frac::from_value(ps));
    out.line(
        5,
        qw && ou && po,
        &format!("q-Wiener {qw}, OU (p̂ = e^{{2αt}}) {ou}, Poisson {po} (Poisson E = 0 since b̂ = 0)"),
    );
}

fn criterion_6(out: &mut Outcome) {
    let start = Instant::now();
    let mut ok = true;
    for spec in named_specs() {
        let (hp, ex) = harness_params(&spec, 20);
        ok &= qh_system_check(&ex.sequences, &hp, 20, &[]).violations.is_empty();
    }
    // mutated Poisson: b_n = n^2
    let (hp, ex) = harness_params(&ProcessSpec::poisson(Some(int(1))).unwrap(), 12);
    let mut sp = ex.sequences.clone();
    for (n, b) in sp.b.iter_mut().enumerate() {
        *b = MPoly::int((n * n) as i64);
    }
    let mutated = qh_system_check(&sp, &hp, 10, &[]);
    let witness_ok = mutated.witness() == Some((EquationId::E4, 2));
    let secs = start.elapsed().as_secs_f64();

    let (hq, _) = harness_params(&ProcessSpec::q_wiener(None).unwrap(), 2);
    let (hpo, _) = harness_params(&ProcessSpec::poisson(None).unwrap(), 2);
    let reductions_hold = n_generic_reduction(GenericFamily::QHermite, &hq).iter().all(|e| e.holds())
        && n_generic_reduction(GenericFamily::Poisson, &hpo).iter().all(|e| e.holds());
    let rq = render_generic_e5(GenericFamily::QHermite, &hq);
    let rp = render_generic_e5(GenericFamily::Poisson, &hpo);
    let verbatim = rq == "(1+q)=(1+q)(−q[n]_q+[n+1]_q)" && rp == "2=2(−n+n+1)";
    out.line(
        6,
        ok && witness_ok && reductions_hold && verbatim && secs < 1.0,
        &format!("n <= 20 {ok}, mutated witness {:?}, {rq} and {rp}, {secs:.3}s (limit 1s)", mutated.witness()),
    );
}

fn qfact(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| (0..k).map(|j| q.powi(j as i32)).sum::<f64>()).product()
}

fn criterion_7(out: &mut Outcome) {
    let start = Instant::now();
    let mut worst_h: f64 = 0.0;
    let mut worst_asc: f64 = 0.0;
    for &q in &[0.0, 0.3, 0.7] {
        let m = orthogonality_matrix(q, 8).unwrap();
        for i in 0..=8 {
            for j in 0..=8 {
                let nf = qfact(i, q);
                let target = if i == j { nf } else { 0.0 };
                worst_h = worst_h.max((m.get(i, j) - target).abs() / nf.max(1.0));
            }
        }
        for &rho in &[0.3, 0.8] {
            let m = asc_orthogonality_matrix(q, rho, 0.5, 8).unwrap();
            for i in 0..=8 {
                for j in 0..=8 {
                    let poch: f64 = (0..i).map(|k| 1.0 - rho * rho * q.powi(k as i32)).product();
                    let target = if i == j { qfact(i, q) * poch } else { 0.0 };
                    worst_asc = worst_asc.max((m.get(i, j) - target).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.line(
        7,
        worst_h <= 1e-8 && worst_asc <= 1e-7 && secs < 30.0,
        &format!("q-Hermite scaled error {worst_h:.1e} (1e-8), ASC error {worst_asc:.1e} (1e-7), {secs:.2}s"),
    );
}

fn criterion_8(out: &mut Outcome) {
    let mut asserted_ok = true;
    let mut cells = Vec::new();
    let mut infeasible = Vec::new();
    for q in [int(0), rat(1, 2), rat(7, 10)] {
        let spec = ProcessSpec::alpha_q_ou(Some(q.clone()), int(1)).unwrap();
        let sup = support(to_f64(&q));
        for &rho in &[0.3, 0.9] {
            for &y in &[0.0, 1.0] {
                let t = -f64::ln(rho);
                let err = (0..21)
                    .map(|i| {
                        let x = sup.lo + (sup.hi - sup.lo) * i as f64 / 20.0;
                        let series = kernel_expansion(x, y, &spec, 0.0, t, 60).unwrap();
                        (series - closed_ratio(&spec, x, t, y, 0.0).unwrap()).abs()
                    })
                    .fold(0.0, f64::max);
                if rho < 0.5 {
                    asserted_ok &= err <= 1e-6;
                    cells.push(err);
                } else {
                    infeasible.push(format!("q={q} y={y}: {err:.1e}"));
                }
            }
        }
    }
    let mut ck: f64 = 0.0;
    for q in [int(0), rat(1, 2), rat(7, 10)] {
        let spec = ProcessSpec::alpha_q_ou(Some(q), int(1)).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.7, -0.4), (-1.2, 1.0)] {
            ck = ck.max(chapman_kolmogorov_residual(&spec, x, y, 0.0, 0.6, 1.5).unwrap());
        }
    }
    asserted_ok &= ck <= 1e-6;
    let worst = cells.iter().cloned().fold(0.0, f64::max);
    out.line(
        8,
        asserted_ok,
        &format!("rho = 0.3 sup error {worst:.1e} (1e-6), CK residual {ck:.1e} (1e-6)"),
    );
    // the rho = 0.9 cells: 60 terms of a series decaying like 0.9^n cannot reach 1e-6
    println!(
        "criterion 8 (rho = 0.9, K = 60): FAIL, not attainable, not asserted [{}]",
        infeasible.join("; ")
    );
}

fn mc_summary(c: &McCheck) -> String {
    let w = c.worst().map_or(0.0, |r| r.z_score.abs());
    format!("{} max|z| {w:.2}{}", c.name, if c.retried { " (retried)" } else { "" })
}

fn criterion_9(out: &mut Outcome) {
    let start = Instant::now();
    let paths = 100_000;
    let mut checks = Vec::new();
    for spec in [
        ProcessSpec::alpha_q_ou(Some(rat(1, 2)), int(1)).unwrap(),
        ProcessSpec::q_wiener(Some(rat(1, 2))).unwrap(),
    ] {
        let (s, t) = if spec.index_set.lo.is_some() { (1.0, 2.0) } else { (0.3, 1.0) };
        for n in 1..=3 {
            checks.push(martingale_mc_check(&spec, n, s, t, paths, 31 + n as u64, false).unwrap());
        }
    }
    let qw = ProcessSpec::q_wiener(Some(rat(1, 2))).unwrap();
    let lin = harness_mc_check(&qw, 1.0, 2.0, 4.0, paths, 37).unwrap();
    let weights_ok = lin.reports.iter().take(2).all(|r| r.passed())
        && (lin.reports[0].target - 2.0 / 3.0).abs() < 1e-14
        && (lin.reports[1].target - 1.0 / 3.0).abs() < 1e-14;
    checks.push(lin);
    checks.push(harness_mc_check(&ProcessSpec::poisson(Some(int(1))).unwrap(), 1.0, 2.0, 4.0, paths, 41).unwrap());
    checks.push(poisson_bridge_check(1.0, 1.0, 2.0, 4.0, paths, 43).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let ok = weights_ok && checks.iter().all(McCheck::passed) && secs < 300.0;
    for c in &checks {
        println!("    {}", mc_summary(c));
    }
    out.line(9, ok, &format!("{} checks at 1e5 paths, |z| <= 3, {secs:.1}s (limit 300s)", checks.len()));
}

fn criterion_10(out: &mut Outcome) {
    let mut runner = TestRunner::new_with_rng(
        Config {
            failure_persistence: None,
            ..Config::with_cases(64)
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let poly = prop::collection::vec((-4i64..=4, 0u32..3, 0u32..3), 0..5).prop_map(|terms| {
        terms.into_iter().fold(MPoly::zero(), |acc, (c, a, b)| {
            &acc + &(&(&MPoly::var("q").pow(a) * &MPoly::var("t").pow(b)) * &MPoly::int(c))
        })
    });
    let ring = runner
        .run(&(poly.clone(), poly.clone(), poly.clone()), |(a, b, c)| {
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            Ok(())
        })
        .is_ok();
    let inversion = runner
        .run(&prop::collection::vec(poly, 6), |cells| {
            let mut m = TriMatrix::identity(4);
            let idx = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];
            for (c, (i, j)) in cells.into_iter().zip(idx) {
                m.set(i, j, c);
            }
            prop_assert_eq!(m.mul(&m.tri_invert().unwrap()).unwrap(), TriMatrix::identity(4));
            Ok(())
        })
        .is_ok();
    let telescoping = runner
        .run(&(-9i64..=9, 0i64..10), |(qk, r)| {
            let f = PolyFamily::al_salam_chihara(Some(rat(qk, 10)), Some(rat(r, 10)), Some(int(1)));
            let (rec, norms) = (f.recurrence(), f.norms(6).unwrap());
            for n in 1..=6usize {
                prop_assert_eq!(
                    norms.get(n) * &rec.alpha(n as i64),
                    norms.get(n - 1) * &rec.gamma(n as i64 - 1)
                );
            }
            Ok(())
        })
        .is_ok();
    let sym = PolyFamily::q_hermite(None).generate(8).unwrap();
    let special = [(int(1), PolyFamily::hermite_prob()), (int(0), PolyFamily::chebyshev_u())]
        .into_iter()
        .all(|(qv, fam)| {
            let at: BTreeMap<String, Rational> = BTreeMap::from([(Q.to_string(), qv.clone())]);
            let sub: Vec<MPoly> = sym.iter().map(|p| p.subs(&at).unwrap()).collect();
            sub == fam.generate(8).unwrap() && PolyFamily::q_hermite(Some(qv)).generate(8).unwrap() == sub
        });
    let g = |t: f64| (0.4 * t).exp();
    let triples = [(0.0, 0.5, 1.0), (0.2, 1.1, 3.0), (1.0, 2.0, 4.0)];
    let fun_eq = fun_eq_property(|t| 2.0 - 3.0 * g(t), g, &triples) <= 1e-10
        && fun_eq_property(|t| t * t, |t| t, &triples) > 1e-3;
    let ok = ring && inversion && telescoping && special && fun_eq;
    out.line(
        10,
        ok,
        &format!("ring {ring}, inversion {inversion}, telescoping {telescoping}, specializations {special}, fun_eq {fun_eq}"),
    );
}

fn main() {
    let mut out = Outcome { failed: Vec::new() };
    criterion_1(&mut out);
    criterion_2(&mut out);
    criterion_3(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out);
    criterion_6(&mut out);
    criterion_7(&mut out);
    criterion_8(&mut out);
    criterion_9(&mut out);
    criterion_10(&mut out);
    if !out.failed.is_empty() {
        eprintln!("failed: {:?}", out.failed);
        std::process::exit(1);
    }
}
