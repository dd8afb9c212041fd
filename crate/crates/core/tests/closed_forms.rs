//! Closed-form families against fixed-step integration, and the invariants
//! each family promises.

use condex_core::affine::{solve_endpoint_d, AffineExtremal};
use condex_core::ode::{integrate_ivp, track_sum, ExtremalCurve};
use condex_core::quat_group::{lifted_field, SegmentSolution};
use condex_core::space_forms::weierstrass::wp_eval;
use condex_core::space_forms::{HorizontalForm, WeierstrassCurve};
use condex_core::{DMatrix, DVector, EmbeddedPoint, ManifoldTag, PriorField, Quat, Signature, TangentVec, Vector3};
use proptest::prelude::*;
use std::f64::consts::TAU;

const STEP: f64 = 1e-3;

fn max_gap(a: &ExtremalCurve, b: &ExtremalCurve) -> f64 {
    assert_eq!(a.len(), b.len());
    a.points.iter().zip(&b.points).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn sphere_start(z: f64, phi: f64, v: [f64; 3]) -> (EmbeddedPoint, TangentVec) {
    let r = (1.0 - z * z).sqrt();
    let x0 = EmbeddedPoint::new(ManifoldTag::SpaceForm(Signature::Sphere), DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])).unwrap();
    let v0 = TangentVec::projected(x0.clone(), &DVector::from_vec(v.to_vec()));
    (x0, v0)
}

fn hyperboloid_start(p: f64, q: f64, v: [f64; 3]) -> (EmbeddedPoint, TangentVec) {
    let x0 = EmbeddedPoint::new(ManifoldTag::SpaceForm(Signature::Hyperbolic), DVector::from_vec(vec![p, q, (1.0 + p * p + q * q).sqrt()])).unwrap();
    let v0 = TangentVec::projected(x0.clone(), &DVector::from_vec(v.to_vec()));
    (x0, v0)
}

fn vel() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.2f64..1.2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_boundary_solution_hits_both_ends(
        b in prop::collection::vec(-1.0f64..1.0, 9),
        c in prop::collection::vec(-1.0f64..1.0, 3),
        x0 in prop::collection::vec(-1.0f64..1.0, 3),
        x1 in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let (b, c) = (DMatrix::from_vec(3, 3, b), DVector::from_vec(c));
        let (x0, x1) = (DVector::from_vec(x0), DVector::from_vec(x1));
        let d = solve_endpoint_d(&b, &c, &x0, &x1, 0.5, 1.5).unwrap();
        let sol = AffineExtremal::new(b, c, x0.clone(), d, 0.5).unwrap();
        prop_assert!((sol.state(0.5).0 - &x0).norm() < 1e-12);
        prop_assert!((sol.state(1.5).0 - &x1).norm() < 1e-9);
    }

    #[test]
    fn affine_track_sum_joins_at_the_observation_times(
        b in prop::collection::vec(-1.0f64..1.0, 4),
        pts in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let (b, c) = (DMatrix::from_vec(2, 2, b), DVector::from_vec(vec![0.3, -0.2]));
        let obs: Vec<(f64, DVector<f64>)> = pts.chunks(2).enumerate().map(|(k, p)| (k as f64, DVector::from_column_slice(p))).collect();
        let segs: Vec<ExtremalCurve> = obs.windows(2).map(|w| {
            let d = solve_endpoint_d(&b, &c, &w[0].1, &w[1].1, w[0].0, w[1].0).unwrap();
            AffineExtremal::new(b.clone(), c.clone(), w[0].1.clone(), d, w[0].0).unwrap().sample(w[1].0, 50)
        }).collect();
        let curve = track_sum(segs).unwrap();
        prop_assert_eq!(curve.segments.len(), 2);
        for (seg, (t, x)) in curve.segments.iter().zip(&obs) {
            prop_assert_eq!(curve.times[seg.start], *t);
            prop_assert!((&curve.points[seg.start] - x).norm() < 1e-9);
        }
        prop_assert!((curve.end() - &obs[2].1).norm() < 1e-9);
    }

    #[test]
    fn group_segment_matches_rk4(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0), q in prop::array::uniform4(-1.0f64..1.0)) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 0.05);
        let x0 = Quat::new(q[0], q[1], q[2], q[3]).normalize();
        let (a_l, b_l) = (Vector3::from(a), Vector3::from(b));
        let seg = SegmentSolution { a_l, b_l, x_start: x0, t_start: 0.0, t_end: 1.0 };
        let field = lifted_field(&a_l, x0);
        let p0 = EmbeddedPoint::new(ManifoldTag::UnitQuaternions, x0.to_dvector()).unwrap();
        let v0 = TangentVec::new(p0.clone(), seg.state(0.0).1.to_dvector()).unwrap();
        let ivp = integrate_ivp(&field, &p0, &v0, 0.0, 1.0, STEP).unwrap();
        prop_assert!(max_gap(&seg.sample(1000), &ivp) < 1e-8);
        // the segment reaches its own endpoint through the two exponentials
        let x1 = seg.state(1.0).0;
        let back = SegmentSolution::solve(a_l, x0, x1, 0.0, 1.0).unwrap();
        prop_assert!((back.b_l - b_l).norm() < 1e-8);
    }

    #[test]
    fn horizontal_form_invariants_and_integrator(z in -0.8f64..0.8, phi in 0.0f64..TAU, v in vel(), beta in -2.0f64..2.0, hyperbolic: bool) {
        let (sig, (x0, v0)) = if hyperbolic {
            (Signature::Hyperbolic, hyperboloid_start(z, 0.5 * phi.sin(), v))
        } else {
            (Signature::Sphere, sphere_start(z, phi, v))
        };
        let Ok(f) = HorizontalForm::from_initial_data(sig, beta, &x0, &v0) else { return Ok(()) };
        let s = sig.sigma();
        prop_assert!(s * (1.0 - f.lambda * f.lambda) >= -1e-12);
        prop_assert!(f.epsilon > 0.0);
        let ivp = integrate_ivp(&PriorField::symmetric(sig, beta, 0.0), &x0, &v0, 0.0, 1.0, STEP).unwrap();
        let closed = f.sample(1.0, 1001).unwrap();
        let scale = ivp.points.iter().map(|p| p.norm()).fold(1.0, f64::max);
        prop_assert!(max_gap(&closed, &ivp) / scale < 1e-8);
    }

    #[test]
    fn weierstrass_curve_invariants_and_integrator(z in -0.8f64..0.8, phi in 0.0f64..TAU, v in vel(), beta in -1.5f64..1.5, gamma in 0.3f64..1.5) {
        let (x0, v0) = sphere_start(z, phi, v);
        let sig = Signature::Sphere;
        let Ok(wc) = WeierstrassCurve::from_initial_data(sig, beta, gamma, &x0, &v0) else { return Ok(()) };
        let f = &wc.form;
        prop_assert!((f.g2 - (12.0 * f.delta * f.delta + f.dbar)).abs() < 1e-10 * (1.0 + f.g2.abs()));
        prop_assert!((f.g3 - (-8.0 * f.delta.powi(3) - f.delta * f.dbar)).abs() < 1e-10 * (1.0 + f.g3.abs()));
        let (wp_a, _) = wp_eval(f.a, f.g2, f.g3).unwrap();
        prop_assert!((wp_a.re - (z * z + f.delta)).abs() < 1e-8 * (1.0 + wp_a.norm()));
        let Ok(closed) = wc.sample(1.0, 1001) else { return Ok(()) };
        let a = PriorField::symmetric(sig, beta, gamma);
        let ivp = integrate_ivp(&a, &x0, &v0, 0.0, 1.0, STEP).unwrap();
        prop_assert!(max_gap(&closed, &ivp) < 1e-7);
        let (rb, rc) = closed.conservation_residuals(&a);
        prop_assert!(rb < 1e-8 && rc < 1e-8);
    }

    #[test]
    fn integration_stays_on_the_manifold_and_conserves(z in -0.8f64..0.8, phi in 0.0f64..TAU, v in vel(), beta in -1.5f64..1.5, gamma in -1.5f64..1.5) {
        let (x0, v0) = sphere_start(z, phi, v);
        let a = PriorField::symmetric(Signature::Sphere, beta, gamma);
        let ivp = integrate_ivp(&a, &x0, &v0, 0.0, 3.0, STEP).unwrap();
        for p in &ivp.points {
            prop_assert!((p.norm() - 1.0).abs() < 1e-9);
        }
        let (rb, rc) = ivp.conservation_residuals(&a);
        prop_assert!(rb < 1e-8 && rc < 1e-8, "rb = {rb:e}, rc = {rc:e}");
    }
}
