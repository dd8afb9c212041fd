//! Prior vector fields and the exterior-derivative machinery the
//! Euler–Lagrange equation needs: `½ grad‖A‖²`, the contraction
//! `θ_{A,X}^{−T}` dual to `Y ↦ dA^T(X, Y)`, closedness and reflexivity checks.
//!
//! Every named family supplies an analytic ambient Jacobian; with `J` the
//! Jacobian of the ambient extension and `G` the ambient Gram matrix,
//! `dA^T(X,Y) = ⟨JX, Y⟩_G − ⟨JY, X⟩_G` on tangent vectors.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::geom::{EmbeddedPoint, ManifoldTag, Signature, TangentVec};
use crate::quaternion::Quat;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A coefficient of the symmetric family: a constant, or a function of the
/// height `x₃` together with its derivative.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function { value: ScalarFn, derivative: ScalarFn },
}

impl Coefficient {
    pub fn function(value: impl Fn(f64) -> f64 + Send + Sync + 'static, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function { value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    pub fn value(&self, x3: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function { value, .. } => value(x3),
        }
    }

    pub fn derivative(&self, x3: f64) -> f64 {
        match self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Function { derivative, .. } => derivative(x3),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Function { .. } => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function { .. } => write!(f, "Function(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

#[derive(Clone)]
pub enum PriorField {
    /// Constant field on Eᵐ.
    ConstantE { c: DVector<f64> },
    /// `A(y) = By + c` on Eᵐ.
    AffineE { b: DMatrix<f64>, c: DVector<f64> },
    /// `β(x₃)·(−x₂, x₁, 0) + γ(x₃)·((0,0,1) − x₃x)` on S² or H².
    Symmetric { signature: Signature, beta: Coefficient, gamma: Coefficient },
    /// `A(x) = x·a` on S³ for a pure quaternion `a`.
    LeftInvariantS3 { generator: Vector3<f64> },
    /// User field; the Jacobian of its ambient extension is optional.
    Custom { manifold: ManifoldTag, field: FieldFn, jacobian: Option<JacobianFn> },
}

impl fmt::Debug for PriorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorField::ConstantE { c } => f.debug_struct("ConstantE").field("c", &c.as_slice()).finish(),
            PriorField::AffineE { b, c } => f.debug_struct("AffineE").field("b", b).field("c", &c.as_slice()).finish(),
            PriorField::Symmetric { signature, beta, gamma } => {
                f.debug_struct("Symmetric").field("signature", signature).field("beta", beta).field("gamma", gamma).finish()
            }
            PriorField::LeftInvariantS3 { generator } => f.debug_struct("LeftInvariantS3").field("generator", generator).finish(),
            PriorField::Custom { manifold, jacobian, .. } => {
                f.debug_struct("Custom").field("manifold", manifold).field("has_jacobian", &jacobian.is_some()).finish()
            }
        }
    }
}

/// A potential `φ` with `grad φ = A`, supplied for conservative fields.
pub type PotentialFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// The rotational field `(−x₂, x₁, 0)`.
pub fn rotational_field(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[-x[1], x[0], 0.0])
}

/// The height-gradient field `(0,0,1) − x₃x`.
pub fn height_field(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[-x[2] * x[0], -x[2] * x[1], 1.0 - x[2] * x[2]])
}

/// Right multiplication `x ↦ x·a` as a 4×4 matrix.
fn right_mul_matrix(a: &Vector3<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> =
        [Quat::ONE, Quat::I, Quat::J, Quat::K].iter().map(|e| (*e * Quat::pure(a)).to_dvector()).collect();
    DMatrix::from_columns(&cols)
}

impl PriorField {
    pub fn constant(c: DVector<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidInput("empty constant field".into()));
        }
        Ok(PriorField::ConstantE { c })
    }

    pub fn affine(b: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::InvalidInput(format!("affine matrix must be square, got {}×{}", b.nrows(), b.ncols())));
        }
        if b.nrows() != c.len() || c.is_empty() {
            return Err(Error::DimensionMismatch { expected: b.nrows(), found: c.len() });
        }
        Ok(PriorField::AffineE { b, c })
    }

    pub fn symmetric(signature: Signature, beta: impl Into<Coefficient>, gamma: impl Into<Coefficient>) -> Self {
        PriorField::Symmetric { signature, beta: beta.into(), gamma: gamma.into() }
    }

    pub fn left_invariant(generator: Vector3<f64>) -> Self {
        PriorField::LeftInvariantS3 { generator }
    }

    pub fn custom(manifold: ManifoldTag, field: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        PriorField::Custom { manifold, field: Arc::new(field), jacobian: None }
    }

    pub fn manifold(&self) -> ManifoldTag {
        match self {
            PriorField::ConstantE { c } => ManifoldTag::Euclidean(c.len()),
            PriorField::AffineE { c, .. } => ManifoldTag::Euclidean(c.len()),
            PriorField::Symmetric { signature, .. } => ManifoldTag::SpaceForm(*signature),
            PriorField::LeftInvariantS3 { .. } => ManifoldTag::UnitQuaternions,
            PriorField::Custom { manifold, .. } => *manifold,
        }
    }

    /// Constant `(β̄, γ̄)` of a symmetric field with constant coefficients.
    pub fn symmetric_constants(&self) -> Option<(Signature, f64, f64)> {
        match self {
            PriorField::Symmetric { signature, beta, gamma } => Some((*signature, beta.as_constant()?, gamma.as_constant()?)),
            _ => None,
        }
    }

    /// Field value at an ambient point.
    pub fn value_at(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            PriorField::ConstantE { c } => c.clone(),
            PriorField::AffineE { b, c } => b * x + c,
            PriorField::Symmetric { beta, gamma, .. } => {
                rotational_field(x) * beta.value(x[2]) + height_field(x) * gamma.value(x[2])
            }
            PriorField::LeftInvariantS3 { generator } => (Quat::from_dvector(x) * Quat::pure(generator)).to_dvector(),
            PriorField::Custom { field, .. } => field(x),
        }
    }

    /// Jacobian of the ambient extension, when available in closed form.
    pub fn ambient_jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match self {
            PriorField::ConstantE { c } => Some(DMatrix::zeros(c.len(), c.len())),
            PriorField::AffineE { b, .. } => Some(b.clone()),
            PriorField::Symmetric { beta, gamma, .. } => {
                let (b, g) = (beta.value(x[2]), gamma.value(x[2]));
                let (db, dg) = (beta.derivative(x[2]), gamma.derivative(x[2]));
                let mut j = DMatrix::zeros(3, 3);
                j[(0, 1)] = -b;
                j[(1, 0)] = b;
                for i in 0..3 {
                    j[(i, i)] -= g * x[2];
                    j[(i, 2)] -= g * x[i];
                }
                let bf = rotational_field(x);
                let cf = height_field(x);
                for i in 0..3 {
                    j[(i, 2)] += db * bf[i] + dg * cf[i];
                }
                Some(j)
            }
            PriorField::LeftInvariantS3 { generator } => Some(right_mul_matrix(generator)),
            PriorField::Custom { jacobian, .. } => jacobian.as_ref().map(|f| f(x)),
        }
    }

    /// Potential of a conservative named family.
    pub fn potential(&self) -> Option<PotentialFn> {
        match self {
            PriorField::ConstantE { c } => {
                let c = c.clone();
                Some(Arc::new(move |x: &DVector<f64>| c.dot(x)))
            }
            PriorField::AffineE { b, c } if (b - b.transpose()).amax() == 0.0 => {
                let (b, c) = (b.clone(), c.clone());
                Some(Arc::new(move |x: &DVector<f64>| 0.5 * x.dot(&(&b * x)) + c.dot(x)))
            }
            PriorField::Symmetric { signature, beta: Coefficient::Constant(b), gamma: Coefficient::Constant(g) } if *b == 0.0 => {
                let k = signature.sigma() * g;
                Some(Arc::new(move |x: &DVector<f64>| k * x[2]))
            }
            _ => None,
        }
    }

    fn check(&self, x: &EmbeddedPoint) -> Result<()> {
        x.ensure_on(self.manifold())
    }
}

/// Tangent vectors at `x` along which a finite-difference fallback probes the
/// field, together with the manifold.
fn fd_step(x: &DVector<f64>) -> f64 {
    1e-5 * x.norm().max(1.0)
}

/// Columns `J·eᵢ` for an orthonormal tangent basis, by central differences
/// along geodesics (so callbacks are only ever evaluated on the manifold).
fn tangent_jacobian_fd(a: &PriorField, x: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let m = a.manifold();
    let h = fd_step(x);
    let basis = m.tangent_basis(x);
    let cols = basis
        .iter()
        .map(|e| {
            let xp = m.geodesic(x, e, h);
            let xm = m.geodesic(x, e, -h);
            (a.value_at(&xp) - a.value_at(&xm)) / (2.0 * h)
        })
        .collect();
    (basis, cols)
}

/// `θ_{A,X}^{−T}` at ambient point `x` for ambient tangent `xv`.
pub fn theta_at(a: &PriorField, x: &DVector<f64>, xv: &DVector<f64>) -> DVector<f64> {
    let m = a.manifold();
    match a.ambient_jacobian(x) {
        Some(j) => {
            let g = m.gram_diag();
            let jx = &j * xv;
            // G⁻¹ Jᵀ G X
            let jt = (j.transpose() * xv.component_mul(&g)).component_div(&g);
            m.project(x, &(jx - jt))
        }
        None => {
            let (basis, cols) = tangent_jacobian_fd(a, x);
            let jx: DVector<f64> = basis.iter().zip(&cols).fold(DVector::zeros(x.len()), |acc, (e, c)| acc + c * m.inner(e, xv));
            basis.iter().zip(&cols).fold(DVector::zeros(x.len()), |acc, (e, c)| acc + e * (m.inner(&jx, e) - m.inner(c, xv)))
        }
    }
}

/// `½ grad‖A‖²` at an ambient point.
pub fn half_grad_norm_sq_at(a: &PriorField, x: &DVector<f64>) -> DVector<f64> {
    let m = a.manifold();
    let av = a.value_at(x);
    match a.ambient_jacobian(x) {
        Some(j) => {
            let g = m.gram_diag();
            let grad = (j.transpose() * av.component_mul(&g)).component_div(&g);
            m.project(x, &grad)
        }
        None => {
            let (basis, cols) = tangent_jacobian_fd(a, x);
            basis.iter().zip(&cols).fold(DVector::zeros(x.len()), |acc, (e, c)| acc + e * m.inner(c, &av))
        }
    }
}

/// `dA^T(X, Y)` at an ambient point.
pub fn two_form_at(a: &PriorField, x: &DVector<f64>, xv: &DVector<f64>, yv: &DVector<f64>) -> f64 {
    a.manifold().inner(&theta_at(a, x, xv), yv)
}

/// The field as a tangent vector at `x`.
pub fn eval_field(a: &PriorField, x: &EmbeddedPoint) -> Result<TangentVec> {
    a.check(x)?;
    Ok(TangentVec::projected(x.clone(), &a.value_at(x.coords())))
}

/// The vector metrically dual to `Y ↦ dA^T(X, Y)`.
pub fn theta_contraction(a: &PriorField, x: &EmbeddedPoint, xv: &TangentVec) -> Result<TangentVec> {
    a.check(x)?;
    Ok(TangentVec { base: x.clone(), vec: theta_at(a, x.coords(), &xv.vec) })
}

/// `½ grad‖A‖²`, the first forcing term of the Euler–Lagrange equation.
pub fn grad_norm_sq(a: &PriorField, x: &EmbeddedPoint) -> Result<TangentVec> {
    a.check(x)?;
    Ok(TangentVec { base: x.clone(), vec: half_grad_norm_sq_at(a, x.coords()) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosednessReport {
    pub is_closed: bool,
    pub max_violation: f64,
}

/// Largest `|dA^T(X, Y)|` over the samples.
pub fn closedness_check(a: &PriorField, samples: &[(EmbeddedPoint, TangentVec, TangentVec)], tol: f64) -> Result<ClosednessReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut worst: f64 = 0.0;
    for (x, xv, yv) in samples {
        a.check(x)?;
        worst = worst.max(two_form_at(a, x.coords(), &xv.vec, &yv.vec).abs());
    }
    Ok(ClosednessReport { is_closed: worst <= tol, max_violation: worst })
}

/// `4(φ(xₙ) − φ(x₀))`: the curve-independent gap between the reversed and
/// forward functionals for a field with potential `φ`.
pub fn reflexivity_constant(phi: &PotentialFn, x0: &EmbeddedPoint, xn: &EmbeddedPoint) -> f64 {
    4.0 * (phi(xn.coords()) - phi(x0.coords()))
}
