use std::f64::consts::{PI, TAU};

use levi_core::dynamics::{harmonic, integrate};
use levi_core::{
    build_levi, ConvexBody, FourierSupport, LeviConfig, LeviPotential, MarkerCurve, Profile, Vec2,
};
use proptest::prelude::*;

fn support() -> impl Strategy<Value = FourierSupport<f64>> {
    (
        0.5f64..2.0,
        prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 0..6),
    )
        .prop_map(|(z0, m)| {
            FourierSupport::new(z0, m.into_iter().map(|(a, b)| [a, b]).collect()).unwrap()
        })
}

fn close(a: &FourierSupport<f64>, b: &FourierSupport<f64>, tol: f64) -> bool {
    let n = a.order().max(b.order());
    (0..=n).all(|j| {
        (0..2).all(|c| (a.mode(j)[c] - b.mode(j)[c]).abs() <= tol * (1.0 + a.mode(j)[c].abs()))
    })
}

fn square() -> LeviPotential<f64> {
    let pts = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)].map(|(x, y)| Vec2::new(x, y));
    build_levi(
        &ConvexBody::from_points(pts.to_vec()).unwrap(),
        Profile::FlatExp,
        LeviConfig::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_linear(f in support(), g in support(), k in -2.0f64..2.0, t in -0.5f64..1.5) {
        let lhs = (&f + &(&g * k)).evolve(t);
        let rhs = &f.evolve(t) + &(&g.evolve(t) * k);
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn evolution_is_a_semigroup(f in support(), t in -0.3f64..1.0, s in -0.3f64..1.0) {
        prop_assert!(close(&f.evolve(t).evolve(s), &f.evolve(t + s), 1e-12));
    }

    #[test]
    fn translation_mode_is_invariant(f in support(), t in -1.0f64..2.0) {
        prop_assert_eq!(f.evolve(t).center(), f.center());
    }

    #[test]
    fn forward_sets_are_nested(f in support(), t in 0.0f64..1.0, dt in 0.0f64..0.5, s in 0.0f64..TAU) {
        prop_assume!(f.convexity_margin() > 0.0);
        prop_assert!(f.evolve(t + dt).evaluate(s).0 >= f.evolve(t).evaluate(s).0 - 1e-12);
    }

    #[test]
    fn membership_agrees_with_hull(x in -2.5f64..2.5, y in -2.5f64..2.5) {
        // away from a band around the boundary where the truncated series rings
        let d = (x.abs() - 1.0).max(y.abs() - 1.0);
        prop_assume!(d.abs() > 0.05);
        let p = square();
        let tau = p.tau(Vec2::new(x, y)).unwrap();
        prop_assert_eq!(tau == 0.0, d < 0.0);
    }

    #[test]
    fn speed_field_identities(r in 1.6f64..6.0, ang in 0.0f64..TAU) {
        let p = square();
        let x = Vec2::from_angle(ang) * r;
        let e = p.eval(x).unwrap();
        let f = p.eval_fields(x).unwrap();
        prop_assert!((f.speed * f.speed * f.curvature / e.grad.norm() - 1.0).abs() < 1e-10);
        prop_assert!(f.velocity.dot(e.grad).abs() <= 1e-10 * f.speed * e.grad.norm());
    }

    #[test]
    fn arrival_time_is_continuous(r in 1.6f64..6.0, ang in 0.0f64..TAU, dx in -1e-6f64..1e-6, dy in -1e-6f64..1e-6) {
        let p = square();
        let x = Vec2::from_angle(ang) * r;
        let dt = (p.tau(x).unwrap() - p.tau(x + Vec2::new(dx, dy)).unwrap()).abs();
        prop_assert!(dt <= 2e-6);
    }

    #[test]
    fn flow_phi_composes(r in 1.6f64..4.0, ang in 0.0f64..TAU, a in 0.0f64..0.3, b in 0.0f64..0.3) {
        let p = square();
        let x = Vec2::from_angle(ang) * r;
        let once = p.flow_phi(x, a + b).unwrap();
        let twice = p.flow_phi(p.flow_phi(x, a).unwrap(), b).unwrap();
        prop_assert!(once.distance(twice) <= 1e-6 * (1.0 + x.norm()));
        prop_assert!((p.tau(once).unwrap() - p.tau(x).unwrap() - a - b).abs() <= 1e-8);
    }

    #[test]
    fn verlet_runs_backward(qx in -2.0f64..2.0, qy in -2.0f64..2.0, vx in -1.0f64..1.0, vy in -1.0f64..1.0) {
        let p = harmonic(1.3);
        let (q0, v0) = (Vec2::new(qx, qy), Vec2::new(vx, vy));
        let fwd = integrate(&p, q0, v0, 1e-3, 2000, 2000).unwrap();
        let end = *fwd.samples.last().unwrap();
        let back = integrate(&p, end.q, -end.v, 1e-3, 2000, 2000).unwrap();
        let last = back.samples.last().unwrap();
        prop_assert!(last.q.distance(q0) < 1e-8 && last.v.distance(-v0) < 1e-8);
    }

    #[test]
    fn resampling_keeps_circles(n in 32usize..200, r in 0.1f64..10.0) {
        let c = MarkerCurve::circle(Vec2::new(0.3, -0.2), r, n).unwrap();
        let again = c.resampled(0.1).unwrap();
        prop_assert_eq!(again.len(), n);
        for p in again.points() {
            prop_assert!((p.distance(Vec2::new(0.3, -0.2)) - r).abs() < 1e-5 * r);
        }
    }
}

#[test]
fn multi_mode_blowup_matches_dense_scan() {
    // radius of curvature h + h'' under backward evolution, scanned on a fine grid
    let h = FourierSupport::cosine_modes(1.0, &[(2, 0.1), (3, 0.01)]);
    let min_radius = |t: f64| {
        let g = h.evolve(t);
        (0..20000)
            .map(|k| g.radius_of_curvature(2.0 * PI * k as f64 / 20000.0))
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (-1.0, 0.0);
    assert!(min_radius(lo) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_radius(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = h.blowup_time_backward().unwrap().finite().unwrap();
    assert!((t - hi).abs() < 1e-6, "{t} vs {hi}");
}
