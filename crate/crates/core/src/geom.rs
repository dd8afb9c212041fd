//! Ambient-coordinate geometry of Euclidean space, the space forms
//! `M_σ = { y ∈ ℝ³ : ⟨y, y⟩_σ = σ }` and the unit quaternions.
//!
//! Points and tangent vectors are stored as ambient coordinate vectors; no
//! charts are used anywhere in the crate.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::quaternion::Quat;

/// Constraint tolerance used when validating points.
pub const TOL_MANIFOLD: f64 = 1e-9;
/// Tangency tolerance used when validating tangent vectors.
pub const TOL_TANGENT: f64 = 1e-9;

/// Curvature sign of a two-dimensional space form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signature {
    /// σ = +1, the unit sphere S².
    Sphere,
    /// σ = −1, the upper sheet of the unit hyperboloid H².
    Hyperbolic,
}

impl Signature {
    pub fn sigma(self) -> f64 {
        match self {
            Signature::Sphere => 1.0,
            Signature::Hyperbolic => -1.0,
        }
    }

    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if sigma == 1.0 {
            Ok(Signature::Sphere)
        } else if sigma == -1.0 {
            Ok(Signature::Hyperbolic)
        } else {
            Err(Error::InvalidInput(format!("signature must be ±1, got {sigma}")))
        }
    }
}

/// Which manifold a point or field lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldTag {
    Euclidean(usize),
    SpaceForm(Signature),
    UnitQuaternions,
}

impl fmt::Display for ManifoldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldTag::Euclidean(m) => write!(f, "E^{m}"),
            ManifoldTag::SpaceForm(Signature::Sphere) => write!(f, "S^2"),
            ManifoldTag::SpaceForm(Signature::Hyperbolic) => write!(f, "H^2"),
            ManifoldTag::UnitQuaternions => write!(f, "S^3"),
        }
    }
}

/// Signature-σ bilinear form `v₁w₁ + v₂w₂ + σ v₃w₃`.
pub fn metric_inner(sigma: Signature, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    v[0] * w[0] + v[1] * w[1] + sigma.sigma() * v[2] * w[2]
}

impl ManifoldTag {
    pub fn ambient_dim(&self) -> usize {
        match self {
            ManifoldTag::Euclidean(m) => *m,
            ManifoldTag::SpaceForm(_) => 3,
            ManifoldTag::UnitQuaternions => 4,
        }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldTag::Euclidean(m) => *m,
            ManifoldTag::SpaceForm(_) => 2,
            ManifoldTag::UnitQuaternions => 3,
        }
    }

    pub fn signature(&self) -> Option<Signature> {
        match self {
            ManifoldTag::SpaceForm(s) => Some(*s),
            _ => None,
        }
    }

    /// Ambient bilinear form restricting to the Riemannian metric.
    pub fn inner(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        match self {
            ManifoldTag::SpaceForm(s) => metric_inner(*s, v, w),
            _ => v.dot(w),
        }
    }

    pub fn norm_sq(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v)
    }

    /// Diagonal of the ambient Gram matrix.
    pub fn gram_diag(&self) -> DVector<f64> {
        let mut g = DVector::from_element(self.ambient_dim(), 1.0);
        if let ManifoldTag::SpaceForm(s) = self {
            g[2] = s.sigma();
        }
        g
    }

    /// Scale-relative violation of the defining constraint at `x`.
    pub fn constraint_violation(&self, x: &DVector<f64>) -> f64 {
        match self {
            ManifoldTag::Euclidean(_) => 0.0,
            ManifoldTag::SpaceForm(s) => {
                let q = metric_inner(*s, x, x);
                (q - s.sigma()).abs() / x.norm_squared().max(1.0)
            }
            ManifoldTag::UnitQuaternions => (x.norm() - 1.0).abs(),
        }
    }

    /// Orthogonal projection onto the tangent space at `x`: `v − σ⟨v,x⟩_σ x`
    /// on the space forms, `v − ⟨v,x⟩x` on S³.
    pub fn project(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            ManifoldTag::Euclidean(_) => v.clone(),
            ManifoldTag::SpaceForm(s) => v - x * (s.sigma() * metric_inner(*s, v, x)),
            ManifoldTag::UnitQuaternions => v - x * v.dot(x),
        }
    }

    /// Euclidean normal direction of the constraint surface (the ambient
    /// gradient of the constraint, up to a factor 2).
    pub fn euclidean_normal(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            ManifoldTag::Euclidean(_) => None,
            ManifoldTag::SpaceForm(_) => Some(x.component_mul(&self.gram_diag())),
            ManifoldTag::UnitQuaternions => Some(x.clone()),
        }
    }

    /// Euclidean-orthogonal projection onto the tangent plane. Used by the
    /// curve optimizer, which works with ambient Euclidean gradients.
    pub fn project_euclidean(&self, x: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        match self.euclidean_normal(x) {
            None => g.clone(),
            Some(n) => {
                let nn = n.norm_squared();
                g - &n * (g.dot(&n) / nn)
            }
        }
    }

    /// Map an ambient point near the manifold back onto it.
    pub fn retract(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ManifoldTag::Euclidean(_) => x.clone(),
            ManifoldTag::SpaceForm(Signature::Sphere) | ManifoldTag::UnitQuaternions => x / x.norm(),
            ManifoldTag::SpaceForm(Signature::Hyperbolic) => {
                let q = -metric_inner(Signature::Hyperbolic, x, x);
                let mut y = x / q.abs().sqrt();
                if y[2] < 0.0 {
                    y = -y;
                }
                y
            }
        }
    }

    /// Orthonormal basis of the tangent space at `x`.
    pub fn tangent_basis(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        match self {
            ManifoldTag::Euclidean(m) => (0..*m).map(|i| DVector::from_fn(*m, |j, _| if i == j { 1.0 } else { 0.0 })).collect(),
            ManifoldTag::SpaceForm(s) => {
                // pick the two coordinate axes least aligned with x
                let mut axes = [0usize, 1, 2];
                axes.sort_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap());
                let unit = |i: usize| DVector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 });
                let (a, b) = if *s == Signature::Hyperbolic { (0, 1) } else { (axes[0], axes[1]) };
                let u1 = self.project(x, &unit(a));
                let u1 = &u1 / self.norm_sq(&u1).sqrt();
                let p2 = self.project(x, &unit(b));
                let u2 = &p2 - &u1 * self.inner(&p2, &u1);
                let u2 = &u2 / self.norm_sq(&u2).sqrt();
                vec![u1, u2]
            }
            ManifoldTag::UnitQuaternions => {
                let q = Quat::from_dvector(x);
                [Quat::I, Quat::J, Quat::K].iter().map(|e| (q * *e).to_dvector()).collect()
            }
        }
    }

    /// Initial velocity of the minimal unit-time geodesic from `x` to `y`.
    /// Antipodal points on the spheres get an arbitrary minimal direction.
    pub fn log(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        match self {
            ManifoldTag::Euclidean(_) => y - x,
            ManifoldTag::SpaceForm(Signature::Sphere) | ManifoldTag::UnitQuaternions => {
                let p = self.project(x, y);
                let s = p.norm();
                let angle = s.atan2(x.dot(y));
                if s < 1e-300 {
                    if x.dot(y) > 0.0 {
                        return DVector::zeros(x.len());
                    }
                    return &self.tangent_basis(x)[0] * std::f64::consts::PI;
                }
                p * (angle / s)
            }
            ManifoldTag::SpaceForm(Signature::Hyperbolic) => {
                let p = self.project(x, y);
                let s = self.norm_sq(&p).max(0.0).sqrt();
                if s < 1e-300 {
                    return DVector::zeros(3);
                }
                p * (s.asinh() / s)
            }
        }
    }

    /// Riemannian distance.
    pub fn distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.norm_sq(&self.log(x, y)).max(0.0).sqrt()
    }

    /// Exponential map: the geodesic through `x` with initial velocity `v`,
    /// evaluated at time `t`.
    pub fn geodesic(&self, x: &DVector<f64>, v: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            ManifoldTag::Euclidean(_) => x + v * t,
            ManifoldTag::SpaceForm(Signature::Sphere) | ManifoldTag::UnitQuaternions => {
                let speed = self.norm_sq(v).max(0.0).sqrt();
                if speed * t.abs() < 1e-300 {
                    return x.clone();
                }
                let a = speed * t;
                x * a.cos() + v * (a.sin() / speed)
            }
            ManifoldTag::SpaceForm(Signature::Hyperbolic) => {
                let speed = self.norm_sq(v).max(0.0).sqrt();
                if speed * t.abs() < 1e-300 {
                    return x.clone();
                }
                let a = speed * t;
                x * a.cosh() + v * (a.sinh() / speed)
            }
        }
    }
}

/// A point of a manifold in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedPoint {
    manifold: ManifoldTag,
    coords: DVector<f64>,
}

impl EmbeddedPoint {
    /// Validating constructor.
    pub fn new(manifold: ManifoldTag, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: manifold.ambient_dim(), found: coords.len() });
        }
        if let ManifoldTag::Euclidean(0) = manifold {
            return Err(Error::InvalidInput("Euclidean dimension must be at least 1".into()));
        }
        let violation = manifold.constraint_violation(&coords);
        if !(violation <= TOL_MANIFOLD) {
            return Err(Error::NotOnManifold { manifold, violation });
        }
        if manifold == ManifoldTag::SpaceForm(Signature::Hyperbolic) && coords[2] <= 0.0 {
            return Err(Error::NotOnManifold { manifold, violation: f64::INFINITY });
        }
        Ok(Self { manifold, coords })
    }

    pub fn from_slice(manifold: ManifoldTag, coords: &[f64]) -> Result<Self> {
        Self::new(manifold, DVector::from_column_slice(coords))
    }

    /// Retract arbitrary ambient coordinates onto the manifold.
    pub fn projected(manifold: ManifoldTag, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: manifold.ambient_dim(), found: coords.len() });
        }
        Self::new(manifold, manifold.retract(&coords))
    }

    /// Skips validation; callers guarantee the constraint.
    pub(crate) fn new_unchecked(manifold: ManifoldTag, coords: DVector<f64>) -> Self {
        Self { manifold, coords }
    }

    pub fn manifold(&self) -> ManifoldTag {
        self.manifold
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn ensure_on(&self, manifold: ManifoldTag) -> Result<()> {
        if self.manifold != manifold {
            return Err(Error::ManifoldMismatch { expected: manifold, found: self.manifold });
        }
        Ok(())
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec {
    pub base: EmbeddedPoint,
    pub vec: DVector<f64>,
}

impl TangentVec {
    pub fn new(base: EmbeddedPoint, vec: DVector<f64>) -> Result<Self> {
        let m = base.manifold();
        if vec.len() != m.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: vec.len() });
        }
        let violation = match m {
            ManifoldTag::Euclidean(_) => 0.0,
            _ => m.inner(&vec, base.coords()).abs() / (vec.norm() * base.coords().norm()).max(1.0),
        };
        if !(violation <= TOL_TANGENT) {
            return Err(Error::NotTangent { violation });
        }
        Ok(Self { base, vec })
    }

    /// Project an arbitrary ambient vector to the tangent space at `base`.
    pub fn projected(base: EmbeddedPoint, v: &DVector<f64>) -> Self {
        let vec = base.manifold().project(base.coords(), v);
        Self { base, vec }
    }

    pub fn norm_sq(&self) -> f64 {
        self.base.manifold().norm_sq(&self.vec)
    }
}

/// `v − σ⟨v,x⟩_σ x`, the tangential part of `v` at `x`.
pub fn project_to_tangent(x: &EmbeddedPoint, v: &DVector<f64>) -> TangentVec {
    TangentVec::projected(x.clone(), v)
}

/// Point at time `t` on the geodesic leaving `x0` with velocity `v`.
pub fn geodesic_point(x0: &EmbeddedPoint, v: &TangentVec, t: f64) -> EmbeddedPoint {
    let m = x0.manifold();
    let y = m.geodesic(x0.coords(), &v.vec, t);
    EmbeddedPoint::new_unchecked(m, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use std::f64::consts::PI;

    const S2: ManifoldTag = ManifoldTag::SpaceForm(Signature::Sphere);
    const H2: ManifoldTag = ManifoldTag::SpaceForm(Signature::Hyperbolic);

    #[test]
    fn metric_examples() {
        assert_eq!(metric_inner(Signature::Sphere, &dvector![1.0, 0.0, 0.0], &dvector![1.0, 0.0, 0.0]), 1.0);
        assert_eq!(metric_inner(Signature::Hyperbolic, &dvector![0.0, 0.0, 1.0], &dvector![0.0, 0.0, 1.0]), -1.0);
        assert_eq!(metric_inner(Signature::Hyperbolic, &dvector![1.0, 2.0, 3.0], &dvector![4.0, 5.0, 6.0]), -4.0);
    }

    #[test]
    fn projection_examples() {
        let x = EmbeddedPoint::from_slice(S2, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(project_to_tangent(&x, &dvector![1.0, 1.0, 0.0]).vec, dvector![0.0, 1.0, 0.0]);
        let p = EmbeddedPoint::from_slice(H2, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(project_to_tangent(&p, &dvector![0.0, 0.0, 5.0]).vec, dvector![0.0, 0.0, 0.0]);
        let n = EmbeddedPoint::from_slice(S2, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(project_to_tangent(&n, &dvector![2.0, 3.0, 4.0]).vec, dvector![2.0, 3.0, 0.0]);
    }

    #[test]
    fn geodesic_examples() {
        let x = EmbeddedPoint::from_slice(S2, &[1.0, 0.0, 0.0]).unwrap();
        let v = TangentVec::new(x.clone(), dvector![0.0, 1.0, 0.0]).unwrap();
        let y = geodesic_point(&x, &v, PI / 2.0);
        assert!((y.coords() - dvector![0.0, 1.0, 0.0]).norm() < 1e-15);
        assert_eq!(geodesic_point(&x, &v, 0.0), x);

        let p = EmbeddedPoint::from_slice(H2, &[0.0, 0.0, 1.0]).unwrap();
        let w = TangentVec::new(p.clone(), dvector![1.0, 0.0, 0.0]).unwrap();
        let q = geodesic_point(&p, &w, 1.0);
        assert!((q.coords() - dvector![1f64.sinh(), 0.0, 1f64.cosh()]).norm() < 1e-15);
    }

    #[test]
    fn log_inverts_geodesic() {
        let x = dvector![0.6, 0.0, 0.8];
        let v = dvector![0.0, 1.3, 0.0];
        let y = S2.geodesic(&x, &v, 1.0);
        assert!((S2.log(&x, &y) - &v).norm() < 1e-14);
        let p = dvector![0.3, -0.4, 1.25f64.sqrt()];
        let w = H2.project(&p, &dvector![1.0, 2.0, 0.5]);
        let q = H2.geodesic(&p, &w, 1.0);
        assert!((H2.log(&p, &q) - &w).norm() < 1e-12);
        assert!((H2.distance(&p, &q) - H2.norm_sq(&w).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(matches!(EmbeddedPoint::from_slice(S2, &[1.0, 1.0, 0.0]), Err(Error::NotOnManifold { .. })));
        assert!(EmbeddedPoint::from_slice(H2, &[0.0, 0.0, -1.0]).is_err());
        assert!(matches!(EmbeddedPoint::from_slice(S2, &[1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        let x = EmbeddedPoint::from_slice(S2, &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(TangentVec::new(x, dvector![1.0, 0.0, 0.0]), Err(Error::NotTangent { .. })));
    }

    #[test]
    fn tangent_bases_are_orthonormal() {
        let pts = [
            (S2, dvector![0.6, 0.0, 0.8]),
            (H2, dvector![0.3, -0.4, (1.0f64 + 0.25).sqrt()]),
            (ManifoldTag::UnitQuaternions, dvector![0.5, 0.5, 0.5, 0.5]),
            (ManifoldTag::Euclidean(2), dvector![3.0, -1.0]),
        ];
        for (m, x) in pts {
            let basis = m.tangent_basis(&x);
            assert_eq!(basis.len(), m.dim());
            for (i, a) in basis.iter().enumerate() {
                if m.euclidean_normal(&x).is_some() {
                    assert!(m.inner(a, &x).abs() < 1e-14);
                }
                for (j, b) in basis.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((m.inner(a, b) - want).abs() < 1e-14);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn sphere_point() -> impl Strategy<Value = DVector<f64>> {
            (-1.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(|(z, phi)| {
                let r = (1.0 - z * z).sqrt();
                dvector![r * phi.cos(), r * phi.sin(), z]
            })
        }

        fn hyperboloid_point() -> impl Strategy<Value = DVector<f64>> {
            (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| dvector![a, b, (1.0 + a * a + b * b).sqrt()])
        }

        proptest! {
            #[test]
            fn projection_is_tangent(x in sphere_point(), y in hyperboloid_point(), v in proptest::collection::vec(-5.0f64..5.0, 3)) {
                let v = DVector::from_vec(v);
                for (m, p) in [(S2, x.clone()), (H2, y.clone())] {
                    let t = m.project(&p, &v);
                    prop_assert!(m.inner(&t, &p).abs() <= 1e-12 * (1.0 + v.norm() * p.norm_squared()));
                }
            }

            #[test]
            fn geodesics_stay_on_manifold(x in sphere_point(), y in hyperboloid_point(),
                                          v in proptest::collection::vec(-1.0f64..1.0, 3), t in -100.0f64..100.0) {
                let v = DVector::from_vec(v);
                let ts = S2.project(&x, &v);
                prop_assume!(ts.norm() > 1e-3);
                let unit = &ts / ts.norm();
                let g = S2.geodesic(&x, &unit, t);
                prop_assert!((g.norm_squared() - 1.0).abs() <= 1e-12);
                // speed check by central differences
                let h = 1e-4;
                let d = (S2.geodesic(&x, &unit, t + h) - S2.geodesic(&x, &unit, t - h)) / (2.0 * h);
                prop_assert!((d.norm() - 1.0).abs() < 1e-6);

                let th = H2.project(&y, &v);
                prop_assume!(H2.norm_sq(&th) > 1e-6);
                let unit_h = &th / H2.norm_sq(&th).sqrt();
                // hyperbolic growth limits the meaningful horizon to where cosh(t) is representable
                let th_t = t / 10.0;
                let g = H2.geodesic(&y, &unit_h, th_t);
                prop_assert!(H2.constraint_violation(&g) <= 1e-12);
            }
        }
    }
}
