use std::collections::BTreeMap;

use proptest::prelude::*;

use opm_core::exactalg::{fmt_rational, int, parse_rational, rat, MPoly, NumMatrix, Rational, TriMatrix};
use opm_core::harness::{
    bryc_map, fun_eq_property, linear_weights, qh_coeffs, qh_identity_residuals, HarnessParams, QhBranch,
};
use opm_core::mpr::{regression_matrix_numeric, structural_matrix, ProcessSpec};
use opm_core::orthopoly::{PolyFamily, Q, X};
use opm_core::qdensity::{asc_values, q_hermite_values};

fn small_poly() -> impl Strategy<Value = MPoly> {
    prop::collection::vec((-4i64..=4, 0u32..3, 0u32..3), 0..5).prop_map(|terms| {
        terms.into_iter().fold(MPoly::zero(), |acc, (c, eq, et)| {
            let m = &(&MPoly::var("q").pow(eq) * &MPoly::var("t").pow(et)) * &MPoly::int(c);
            &acc + &m
        })
    })
}

fn small_rat() -> impl Strategy<Value = Rational> {
    (-50i64..=50, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

/// q in (-1, 1) on a grid of tenths.
fn q_value() -> impl Strategy<Value = Rational> {
    (-9i64..=9).prop_map(|k| rat(k, 10))
}

fn unit_lower(dim: usize) -> impl Strategy<Value = TriMatrix> {
    prop::collection::vec(small_poly(), dim * dim).prop_map(move |cells| {
        let mut m = TriMatrix::identity(dim);
        for i in 0..dim {
            for j in 0..i {
                m.set(i, j, cells[i * dim + j].clone());
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in small_poly(), b in small_poly(), c in small_poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in small_poly(), b in small_poly(), q in small_rat(), t in small_rat()) {
        let at = BTreeMap::from([("q".to_string(), q), ("t".to_string(), t)]);
        let ev = |p: &MPoly| p.eval_exact(&at).unwrap();
        prop_assert_eq!(ev(&(&a * &b)), ev(&a) * ev(&b));
        prop_assert_eq!(ev(&(&a + &b)), ev(&a) + ev(&b));
    }

    #[test]
    fn rational_text_round_trip(r in small_rat()) {
        prop_assert_eq!(parse_rational(&fmt_rational(&r)).unwrap(), r);
    }

    #[test]
    fn triangular_inverse_round_trip(m in unit_lower(4)) {
        let inv = m.tri_invert().unwrap();
        prop_assert_eq!(m.mul(&inv).unwrap(), TriMatrix::identity(4));
        prop_assert_eq!(inv.mul(&m).unwrap(), TriMatrix::identity(4));
        prop_assert_eq!(inv.tri_invert().unwrap(), m);
    }

    #[test]
    fn cholesky_reconstructs(cells in prop::collection::vec(-3.0f64..3.0, 16)) {
        let b = NumMatrix::new(4, cells).unwrap();
        let mut a = b.mul(&b.transpose()).unwrap();
        for i in 0..4 {
            a.set(i, i, a.get(i, i) + 1.0);
        }
        let l = a.cholesky().unwrap();
        prop_assert!(l.mul(&l.transpose()).unwrap().max_abs_diff(&a) <= 1e-10 * a.max_abs().max(1.0));
        let li = l.lower_inverse();
        prop_assert!(li.mul(&l).unwrap().max_abs_diff(&NumMatrix::identity(4)) <= 1e-10);
    }

    #[test]
    fn norm_telescoping(q in q_value(), r in 0i64..10, y in -5i64..=5) {
        let families = [
            PolyFamily::q_hermite(Some(q.clone())),
            PolyFamily::al_salam_chihara(Some(q), Some(rat(r, 10)), Some(rat(y, 3))),
        ];
        for f in families {
            let rec = f.recurrence();
            let norms = f.norms(6).unwrap();
            for n in 1..=6usize {
                let lhs = norms.get(n) * &rec.alpha(n as i64);
                let rhs = norms.get(n - 1) * &rec.gamma(n as i64 - 1);
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn recurrence_matches_numeric_evaluation(q in q_value(), x in -2.0f64..2.0, r in 0i64..10, y in -1.0f64..1.0) {
        let qf = opm_core::exactalg::to_f64(&q);
        let polys = PolyFamily::q_hermite(Some(q.clone())).generate(8).unwrap();
        let num = q_hermite_values(x, qf, 8);
        let at = BTreeMap::from([(X.to_string(), x)]);
        for (p, v) in polys.iter().zip(&num) {
            let e = p.eval_f64(&at).unwrap();
            prop_assert!((e - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
        let rho = r as f64 / 10.0;
        let yr = rat((y * 1000.0).round() as i64, 1000);
        let asc = PolyFamily::al_salam_chihara(Some(q), Some(rat(r, 10)), Some(yr.clone())).generate(6).unwrap();
        let num = asc_values(x, opm_core::exactalg::to_f64(&yr), rho, qf, 6);
        for (p, v) in asc.iter().zip(&num) {
            let e = p.eval_f64(&at).unwrap();
            prop_assert!((e - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn asc_at_zero_rho_is_q_hermite(q in q_value(), y in -5i64..=5) {
        let asc = PolyFamily::al_salam_chihara(Some(q.clone()), Some(int(0)), Some(rat(y, 2))).generate(7).unwrap();
        prop_assert_eq!(asc, PolyFamily::q_hermite(Some(q)).generate(7).unwrap());
    }

    #[test]
    fn generic_coefficients_solve_the_system(
        a in 1i64..5, ah in 0i64..4, b in -3i64..4, bh in -3i64..4, c in 0i64..4, ch in 1i64..5,
        ps in 1i64..5, dt in 1i64..5, du in 1i64..5,
    ) {
        let hp = HarnessParams::new(int(a), int(ah), int(b), int(bh), int(c), int(ch));
        let (ps, pt, pu) = (int(ps), int(ps + dt), int(ps + dt + du));
        if let Ok(k) = qh_coeffs(&hp, &ps, &pt, &pu, None) {
            if k.branch == QhBranch::Generic {
                for r in qh_identity_residuals(&hp, &ps, &pt, &pu, &k).unwrap() {
                    prop_assert!(r.is_zero());
                }
            }
        }
        let (wa, wb) = linear_weights(&ps, &pt, &pu).unwrap();
        prop_assert_eq!(wa.value() + wb.value(), int(1));
        prop_assert_eq!(wa.value() * &ps + wb.value() * &pu, pt);
    }

    #[test]
    fn bryc_round_trip(ah in 0i64..3, c in 0i64..3, b in -3i64..4, bh in -3i64..4) {
        let hp = HarnessParams::new(int(1), int(ah), int(b), int(bh), int(c), int(2));
        if let Ok(m) = bryc_map(&hp, true) {
            let (eta, theta) = m.eta_theta_from_b(&hp.b, &hp.b_hat);
            if let Ok(back) = m.b_from_eta_theta(&eta, &theta) {
                prop_assert_eq!(back, (hp.b.clone(), hp.b_hat.clone()));
            }
        }
    }

    #[test]
    fn affine_functions_of_the_clock(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, s in 0.0f64..1.0, d1 in 0.05f64..1.0, d2 in 0.05f64..1.0) {
        let tr = [(s, s + d1, s + d1 + d2)];
        let g = |t: f64| (0.7 * t).exp();
        prop_assert!(fun_eq_property(|t| c0 + c1 * g(t), g, &tr) <= 1e-10);
        prop_assert!(fun_eq_property(|t| c0 + c1 * t, |t| t, &tr) <= 1e-10);
        prop_assert!(fun_eq_property(|t| t * t, |t| t, &tr) > 1e-6);
    }

    #[test]
    fn numeric_semigroup(s in 0.1f64..1.0, d1 in 0.1f64..1.0, d2 in 0.1f64..1.0, q in q_value()) {
        let spec = ProcessSpec::q_wiener(Some(q)).unwrap();
        let v = structural_matrix(&spec, 4).unwrap();
        let (t, u) = (s + d1, s + d1 + d2);
        let st = regression_matrix_numeric(&spec, &v, s, t).unwrap();
        let tu = regression_matrix_numeric(&spec, &v, t, u).unwrap();
        let su = regression_matrix_numeric(&spec, &v, s, u).unwrap();
        prop_assert!(tu.mul(&st).unwrap().max_abs_diff(&su) <= 1e-10 * su.max_abs().max(1.0));
    }
}

#[test]
fn specialization_chain() {
    let n = 9;
    assert_eq!(
        PolyFamily::q_hermite(Some(int(1))).generate(n).unwrap(),
        PolyFamily::hermite_prob().generate(n).unwrap()
    );
    assert_eq!(
        PolyFamily::q_hermite(Some(int(0))).generate(n).unwrap(),
        PolyFamily::chebyshev_u().generate(n).unwrap()
    );
    let sym = PolyFamily::q_hermite(None).generate(n).unwrap();
    for (qv, fam) in [(int(1), PolyFamily::hermite_prob()), (int(0), PolyFamily::chebyshev_u())] {
        let at = BTreeMap::from([(Q.to_string(), qv)]);
        let sub: Vec<MPoly> = sym.iter().map(|p| p.subs(&at).unwrap()).collect();
        assert_eq!(sub, fam.generate(n).unwrap());
    }
    let norms = PolyFamily::q_hermite(Some(int(1))).norms(n).unwrap();
    assert_eq!(norms, PolyFamily::hermite_prob().norms(n).unwrap());
}
