use opm_core::exactalg::{int, rat, Rational};
use opm_core::mpr::ProcessSpec;
use opm_core::qdensity::{
    asc_orthogonality_matrix, chapman_kolmogorov_residual, closed_ratio, kernel_expansion, martingale_integral_check,
    orthogonality_matrix, reversed_martingale_residual, support,
};

fn q_factorial(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| (0..k).map(|j| q.powi(j as i32)).sum::<f64>()).product()
}

fn q_poch(a: f64, q: f64, n: usize) -> f64 {
    (0..n).map(|k| 1.0 - a * q.powi(k as i32)).product()
}

#[test]
fn q_hermite_orthogonality() {
    for &q in &[0.0, 0.3, 0.7] {
        let m = orthogonality_matrix(q, 8).unwrap();
        for i in 0..=8 {
            for j in 0..=8 {
                let nf = q_factorial(i, q);
                let target = if i == j { nf } else { 0.0 };
                let err = (m.get(i, j) - target).abs();
                assert!(err <= 1e-8 * nf.max(1.0), "q={q} ({i},{j}) err {err:e}");
            }
        }
    }
}

#[test]
fn al_salam_chihara_orthogonality() {
    for &q in &[0.0, 0.3, 0.7] {
        for &rho in &[0.3, 0.8] {
            for &y in &[0.0, 0.9] {
                let m = asc_orthogonality_matrix(q, rho, y, 8).unwrap();
                for i in 0..=8 {
                    for j in 0..=8 {
                        let target = if i == j { q_factorial(i, q) * q_poch(rho * rho, q, i) } else { 0.0 };
                        let err = (m.get(i, j) - target).abs();
                        assert!(err <= 1e-7, "q={q} rho={rho} y={y} ({i},{j}) err {err:e}");
                    }
                }
            }
        }
    }
}

fn ou(q: Rational) -> ProcessSpec {
    ProcessSpec::alpha_q_ou(Some(q), int(1)).unwrap()
}

fn to_f64(q: &Rational) -> f64 {
    opm_core::exactalg::to_f64(q)
}

/// Sup over a 21-point grid across the support of |kernel_K − closed ratio|,
/// with `ρ = e^{-(t-s)}` on the unit-rate OU clock.
fn kernel_sup_error(q: &Rational, rho: f64, y: f64, k: usize) -> f64 {
    let spec = ou(q.clone());
    let (s, t) = (0.0, -rho.ln());
    let sup = support(to_f64(q));
    (0..21)
        .map(|i| {
            let x = sup.lo + (sup.hi - sup.lo) * i as f64 / 20.0;
            let series = kernel_expansion(x, y, &spec, s, t, k).unwrap();
            let closed = closed_ratio(&spec, x, t, y, s).unwrap();
            (series - closed).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn kernel_expansion_matches_closed_ratio_at_small_rho() {
    for q in [int(0), rat(1, 2), rat(7, 10)] {
        for &y in &[0.0, 1.0] {
            let e = kernel_sup_error(&q, 0.3, y, 60);
            assert!(e <= 1e-6, "q={q} y={y} sup {e:e}");
        }
    }
}

#[test]
fn kernel_expansion_converges_slowly_at_large_rho() {
    // not asserted against the tolerance: with 60 terms the tail at rho = 0.9 stays visible
    let coarse = kernel_sup_error(&int(0), 0.9, 0.0, 20);
    let fine = kernel_sup_error(&int(0), 0.9, 0.0, 60);
    assert!(fine < coarse);
}

#[test]
fn chapman_kolmogorov() {
    for q in [int(0), rat(1, 2), rat(7, 10)] {
        let spec = ou(q.clone());
        for &(x, y) in &[(0.0, 0.0), (0.7, -0.4), (-1.2, 1.0)] {
            let r = chapman_kolmogorov_residual(&spec, x, y, 0.0, 0.6, 1.5).unwrap();
            assert!(r <= 1e-6, "q={q} x={x} y={y} residual {r:e}");
        }
        let qw = ProcessSpec::q_wiener(Some(q.clone())).unwrap();
        let r = chapman_kolmogorov_residual(&qw, 0.3, -0.5, 1.0, 2.0, 4.0).unwrap();
        assert!(r <= 1e-6, "q-Wiener q={q} residual {r:e}");
    }
}

#[test]
fn martingale_integrals() {
    for q in [int(0), rat(3, 10), rat(7, 10)] {
        for spec in [ou(q.clone()), ProcessSpec::q_wiener(Some(q.clone())).unwrap()] {
            let (s, t) = if spec.index_set.lo.is_some() { (1.0, 2.5) } else { (0.2, 0.9) };
            for n in 1..=4 {
                let r = martingale_integral_check(&spec, n, 0.4, s, t).unwrap();
                assert!(r <= 1e-8, "{:?} q={q} n={n} {r:e}", spec.name);
                let back = reversed_martingale_residual(&spec, n, -0.3, s, t).unwrap();
                assert!(back <= 1e-8, "{:?} q={q} n={n} reversed {back:e}", spec.name);
            }
        }
    }
}
