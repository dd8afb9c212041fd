//! Closed-form extremals on Eᵐ for affine priors `A(y) = By + c`:
//! `x(t) = e^{(t−t₀)B}x₀ + ∫_{t₀}^{t} e^{(t−s)B}(e^{−sBᵀ}d + c) ds`.
//!
//! Both integral terms come out of a single block exponential
//! `exp(T·[[B, I, I], [0, −Bᵀ, 0], [0, 0, 0]])`, whose top block row is
//! `[e^{TB}, ∫₀ᵀ e^{(T−u)B}e^{−uBᵀ}du, ∫₀ᵀ e^{(T−u)B}du]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::ManifoldTag;
use crate::linalg::expm;
use crate::ode::{ExtremalCurve, Segment};
use crate::prior::PriorField;

#[derive(Clone, Debug, PartialEq)]
pub struct AffineExtremal {
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub x0: DVector<f64>,
    /// Free constant; `x′ − A(x) = e^{−tBᵀ}d`.
    pub d: DVector<f64>,
    pub t0: f64,
}

/// `(e^{TB}, ∫e^{(T−u)B}e^{−uBᵀ}du, ∫e^{(T−u)B}du)` over `[0, T]`.
fn propagators(b: &DMatrix<f64>, span: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let m = b.nrows();
    let mut big = DMatrix::zeros(3 * m, 3 * m);
    big.view_mut((0, 0), (m, m)).copy_from(b);
    big.view_mut((0, m), (m, m)).fill_with_identity();
    big.view_mut((0, 2 * m), (m, m)).fill_with_identity();
    big.view_mut((m, m), (m, m)).copy_from(&(-b.transpose()));
    let e = expm(&(big * span));
    (e.view((0, 0), (m, m)).into(), e.view((0, m), (m, m)).into(), e.view((0, 2 * m), (m, m)).into())
}

/// Split an affine or constant prior into `(B, c)`.
pub fn affine_parts(a: &PriorField) -> Result<(DMatrix<f64>, DVector<f64>)> {
    match a {
        PriorField::AffineE { b, c } => Ok((b.clone(), c.clone())),
        PriorField::ConstantE { c } => Ok((DMatrix::zeros(c.len(), c.len()), c.clone())),
        other => Err(Error::ManifoldMismatch { expected: ManifoldTag::Euclidean(0), found: other.manifold() }),
    }
}

impl AffineExtremal {
    pub fn new(b: DMatrix<f64>, c: DVector<f64>, x0: DVector<f64>, d: DVector<f64>, t0: f64) -> Result<Self> {
        let m = b.nrows();
        if !b.is_square() {
            return Err(Error::InvalidInput("affine matrix must be square".into()));
        }
        for v in [&c, &x0, &d] {
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: v.len() });
            }
        }
        Ok(Self { b, c, x0, d, t0 })
    }

    /// Position and velocity at time `t`.
    pub fn state(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let (e, f1, f2) = propagators(&self.b, t - self.t0);
        let shifted = expm(&(self.b.transpose() * -self.t0)) * &self.d;
        let x = e * &self.x0 + f1 * shifted + f2 * &self.c;
        let v = &self.b * &x + expm(&(self.b.transpose() * -t)) * &self.d + &self.c;
        (x, v)
    }

    /// Sampled curve on an even grid of `n` intervals over `[t0, t1]`.
    pub fn sample(&self, t1: f64, n: usize) -> ExtremalCurve {
        let times: Vec<f64> = (0..=n).map(|i| self.t0 + (t1 - self.t0) * i as f64 / n as f64).collect();
        let (points, velocities): (Vec<_>, Vec<_>) = times.iter().map(|&t| self.state(t)).unzip();
        let a = PriorField::AffineE { b: self.b.clone(), c: self.c.clone() };
        let b = crate::ode::energy(&a, &points[0], &velocities[0]);
        ExtremalCurve {
            manifold: ManifoldTag::Euclidean(self.c.len()),
            times,
            points,
            velocities,
            segments: vec![Segment { start: 0, b, c: None }],
            max_drift: 0.0,
        }
    }
}

pub fn affine_extremal_eval(sol: &AffineExtremal, t: f64) -> DVector<f64> {
    sol.state(t).0
}

/// The `d` for which the extremal from `x0` at `t0` reaches `x1` at `t1`.
/// A numerically singular endpoint map is reported, never regularized.
pub fn solve_endpoint_d(b: &DMatrix<f64>, c: &DVector<f64>, x0: &DVector<f64>, x1: &DVector<f64>, t0: f64, t1: f64) -> Result<DVector<f64>> {
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let m = b.nrows();
    for v in [c, x0, x1] {
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: v.len() });
        }
    }
    let (e, f1, f2) = propagators(b, t1 - t0);
    let map = f1 * expm(&(b.transpose() * -t0));
    let rhs = x1 - e * x0 - f2 * c;
    if !map.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularEndpointMap { rcond: 0.0 });
    }
    let svd = map.svd(true, true);
    let smax = svd.singular_values.max();
    let rcond = if smax > 0.0 { svd.singular_values.min() / smax } else { 0.0 };
    if !(rcond > 1e-13) {
        return Err(Error::SingularEndpointMap { rcond });
    }
    svd.solve(&rhs, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))
}
