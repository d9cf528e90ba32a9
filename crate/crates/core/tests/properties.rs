//! Property tests for the algebraic invariants of the core operations.

use proptest::prelude::*;

use locwidth::ellipse::{contains, elliptic_norm, rescale_problem, EllipseSpec, LocalizedSection};
use locwidth::optimize::{max_linear_over_intersection, project_ellipse};
use locwidth::packing::greedy_packing;

fn sorted_eigenvalues(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..2.0, dim).prop_map(|mut v| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

proptest! {
    #[test]
    fn enorm_absolutely_homogeneous(
        eig in sorted_eigenvalues(4),
        v in point(4),
        t in -10.0f64..10.0,
    ) {
        let e = EllipseSpec::new(eig, 1.0).unwrap();
        let base = elliptic_norm(&e, &v).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * t).collect();
        let got = elliptic_norm(&e, &scaled).unwrap();
        let expect = t.abs() * base;
        prop_assert!((got - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn contains_monotone_in_tol(
        eig in sorted_eigenvalues(3),
        v in point(3),
        r in 0.2f64..3.0,
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let e = EllipseSpec::new(eig, r).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let at_lo = contains(&e, &v, lo).unwrap();
        let at_hi = contains(&e, &v, hi).unwrap();
        prop_assert!(!at_lo || at_hi);
    }

    #[test]
    fn rescale_round_trip(
        eig in sorted_eigenvalues(3),
        r in 0.2f64..4.0,
        sigma in 0.001f64..1.0,
        scale in 0.0f64..0.99,
    ) {
        let e = EllipseSpec::new(eig.clone(), r).unwrap();
        // A center guaranteed inside: shrink the boundary spike.
        let center = vec![scale * r * eig[0].sqrt(), 0.0, 0.0];
        let (unit, c, s) = rescale_problem(&e, &center, sigma).unwrap();
        prop_assert_eq!(unit.radius(), 1.0);
        for (orig, back) in center.iter().zip(c.iter().map(|x| x * r)) {
            prop_assert!((orig - back).abs() <= 1e-12 * orig.abs().max(1.0));
        }
        prop_assert!((s * r - sigma).abs() <= 1e-12 * sigma);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_idempotent_nonexpansive(
        eig in sorted_eigenvalues(5),
        r in 0.2f64..3.0,
        y in point(5),
        z in point(5),
    ) {
        let e = EllipseSpec::new(eig, r).unwrap();
        let (py, _) = project_ellipse(&e, &y).unwrap();
        let (pz, _) = project_ellipse(&e, &z).unwrap();
        let (ppy, _) = project_ellipse(&e, &py).unwrap();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        prop_assert!(dist(&py, &ppy) <= 1e-9);
        prop_assert!(dist(&py, &pz) <= dist(&y, &z) + 1e-9);
    }

    #[test]
    fn max_linear_positively_homogeneous(
        eig in sorted_eigenvalues(3),
        w in point(3),
        delta in 0.05f64..0.8,
        t in 0.1f64..20.0,
    ) {
        let e = EllipseSpec::new(eig, 1.0).unwrap();
        let sec = LocalizedSection::with_default_eta(e, vec![0.0; 3], delta).unwrap();
        let base = max_linear_over_intersection(&sec, &w, 1e-10).unwrap();
        let wt: Vec<f64> = w.iter().map(|x| x * t).collect();
        let scaled = max_linear_over_intersection(&sec, &wt, 1e-10 * t.max(1.0)).unwrap();
        prop_assert!(
            (scaled.primal_value - t * base.primal_value).abs()
                <= 1e-6 * (t * base.primal_value).abs().max(1e-9)
        );
        prop_assert!(base.primal_value >= -1e-12);
    }

    #[test]
    fn greedy_packing_monotone_in_epsilon(
        pts in prop::collection::vec(point(3), 2..60),
        e1 in 0.01f64..1.0,
        e2 in 0.01f64..1.0,
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let at_lo = greedy_packing(&pts, lo).unwrap().count;
        let at_hi = greedy_packing(&pts, hi).unwrap().count;
        prop_assert!(at_hi <= at_lo);
    }
}
