//! Property tests for the invariants that hold across whole parameter
//! ranges rather than at hand-picked points.

use proptest::prelude::*;

use varineq_core::catalogue::prop11_constant;
use varineq_core::linalg::{dot, hess_inv_quadform, SymMatrix};
use varineq_core::measures::{case1_guard, case2_guard, ParamTriple};
use varineq_core::quad::{compactify_inv, compactify_map, integrate_1d, Domain1D, QuadratureSpec};

fn spd_from(seed: Vec<f64>, n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += seed[k * n + i] * seed[k * n + j];
            }
            m[(i, j)] = s + if i == j { 1.0 } else { 0.0 };
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The compactification map is a monotone bijection with the stated
    /// Jacobian, and its inverse round-trips.
    #[test]
    fn compactify_roundtrip(x in -1e6f64..1e6) {
        let t = compactify_inv(x);
        prop_assert!((-1.0..1.0).contains(&t));
        let (back, jac) = compactify_map(t);
        prop_assert!(jac > 0.0);
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
    }

    /// Case-1 guard: any beta strictly above the threshold is valid with
    /// A > 0 and beta > 2r; anything at or below is invalid.
    #[test]
    fn case1_guard_threshold(n in 1usize..5, r in -1.0f64..2.5, db in 1e-6f64..4.0) {
        let nf = n as f64;
        let threshold = r + (nf + (nf * nf + 4.0 * (r * r - r) * nf).sqrt()) / 2.0;
        let (ok, a) = case1_guard(&ParamTriple::new(n, threshold + db, r));
        prop_assert!(ok);
        let a = a.unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(threshold + db > 2.0 * r);
        let (bad, none) = case1_guard(&ParamTriple::new(n, threshold - db.min(0.5), r));
        prop_assert!(!bad);
        prop_assert!(none.is_none());
    }

    /// Case-2 guard: validity gives B > 0.
    #[test]
    fn case2_guard_threshold(n in 1usize..5, r in -1.0f64..2.5, db in 1e-6f64..4.0) {
        let nf = n as f64;
        let threshold = -r + (-nf + (nf * nf + 4.0 * (r * r - r) * nf).sqrt()) / 2.0;
        let (ok, b) = case2_guard(&ParamTriple::new(n, threshold + db, r));
        prop_assert!(ok);
        prop_assert!(b.unwrap() > 0.0);
    }

    /// Guard reductions: 1/A at r=0 is n/(beta-n); 1/B is n/(n+beta).
    #[test]
    fn guard_reductions(n in 1usize..5, db in 0.1f64..6.0) {
        let nf = n as f64;
        let beta = nf + db;
        let (ok, a) = case1_guard(&ParamTriple::new(n, beta, 0.0));
        prop_assert!(ok);
        prop_assert!((1.0 / a.unwrap() - nf / (beta - nf)).abs() < 1e-12);
        let (ok, b) = case2_guard(&ParamTriple::new(n, db, 0.0));
        prop_assert!(ok);
        prop_assert!((1.0 / b.unwrap() - nf / (nf + db)).abs() < 1e-12);
    }

    /// The pointwise dual estimate `2<v,w> - <Hv,v> <= <H^{-1}w,w>`.
    #[test]
    fn pointwise_dual_estimate(
        seed in proptest::collection::vec(-1.0f64..1.0, 16),
        v in proptest::collection::vec(-2.0f64..2.0, 4),
        w in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let h = spd_from(seed, 4);
        let lhs = 2.0 * dot(&v, &w) - dot(&h.matvec(&v), &v);
        let rhs = hess_inv_quadform(&h, &w).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }

    /// Trace bound `(Tr Q)^2 <= n ||Q||_HS^2` for symmetric Q.
    #[test]
    fn trace_hilbert_schmidt(entries in proptest::collection::vec(-5.0f64..5.0, 10)) {
        let n = 4;
        let mut qm = SymMatrix::zeros(n);
        let mut it = entries.into_iter();
        for i in 0..n {
            for j in i..n {
                let v = it.next().unwrap();
                qm[(i, j)] = v;
                qm[(j, i)] = v;
            }
        }
        prop_assert!(qm.trace().powi(2) <= n as f64 * qm.hs_norm_sq() + 1e-12);
    }

    /// `C_r` stays inside (9/5, 4] on [1, 2].
    #[test]
    fn prop11_constant_bounds(r in 1.0f64..=2.0) {
        let c = prop11_constant(r);
        prop_assert!(c > 1.8 && c <= 4.0, "C_{r} = {c}");
    }
}

proptest! {
    // quadrature cases are costlier; fewer of them
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Linearity of the adaptive rule within the summed error bounds,
    /// on random cubics over a random finite interval.
    #[test]
    fn quadrature_linearity(
        c0 in -2.0f64..2.0,
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        a in -3.0f64..0.0,
        b in 0.1f64..3.0,
        s in -3.0f64..3.0,
    ) {
        let spec = QuadratureSpec::default();
        let f = move |x: f64| c0 + c1 * x + c2 * x * x;
        let g = move |x: f64| (x).sin();
        let ef = integrate_1d(f, Domain1D::interval(a, b), &spec, &[]).unwrap();
        let eg = integrate_1d(g, Domain1D::interval(a, b), &spec, &[]).unwrap();
        let combo = integrate_1d(move |x| f(x) + s * g(x), Domain1D::interval(a, b), &spec, &[]).unwrap();
        let expect = ef.value + s * eg.value;
        let budget = combo.error_bound + ef.error_bound + s.abs() * eg.error_bound + 1e-12;
        prop_assert!((combo.value - expect).abs() <= budget);
    }

    /// Odd integrands over symmetric compactified domains vanish.
    #[test]
    fn odd_integrand_vanishes(k in 1usize..4, scale in 0.1f64..2.0) {
        let spec = QuadratureSpec::default();
        let est = integrate_1d(
            move |x: f64| scale * x.powi(2 * k as i32 - 1) * (-x * x).exp(),
            Domain1D::RealLine,
            &spec,
            &[],
        )
        .unwrap();
        prop_assert!(est.value.abs() <= est.error_bound.max(1e-11));
    }
}
