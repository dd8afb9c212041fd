//! Fixtures shared by the benchmarks.

use condex_core::{DVector, EmbeddedPoint, ManifoldTag, Quat, Signature, TangentVec};

pub const S2: ManifoldTag = ManifoldTag::SpaceForm(Signature::Sphere);

/// A point on S² at height 1/2 moving east at unit speed.
pub fn sphere_start() -> (EmbeddedPoint, TangentVec) {
    let x0 = EmbeddedPoint::new(S2, DVector::from_vec(vec![0.75f64.sqrt(), 0.0, 0.5])).expect("on the sphere");
    let v0 = TangentVec::new(x0.clone(), DVector::from_vec(vec![0.0, 1.0, 0.0])).expect("tangent");
    (x0, v0)
}

/// Two waypoints on S² one time unit apart.
pub fn sphere_waypoints() -> Vec<(f64, EmbeddedPoint)> {
    let p = |x: [f64; 3]| EmbeddedPoint::new(S2, DVector::from_vec(x.to_vec()).normalize()).expect("on the sphere");
    vec![(0.0, p([0.866, 0.0, 0.5])), (1.0, p([0.5187, 0.8486, 0.1039]))]
}

/// Five unit-quaternion observations at unit spacing.
pub fn group_observations() -> Vec<(Quat, f64)> {
    [
        Quat::new(1.0, 0.0, 0.0, 0.0),
        Quat::new(0.6, 0.3, -0.5, 0.54),
        Quat::new(-0.2, 0.7, 0.1, 0.68),
        Quat::new(-0.8, 0.1, 0.5, 0.3),
        Quat::new(-0.4, -0.6, 0.6, -0.35),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, q)| (q.normalize(), k as f64))
    .collect()
}
