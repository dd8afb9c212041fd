//! Closed-form extremals for the purely rotational prior `β̄B` (`γ̄ = 0`).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geom::{EmbeddedPoint, ManifoldTag, Signature, TangentVec};
use crate::ode::{ExtremalCurve, Segment};

use super::conserved_constants;

const UNIT_TOL: f64 = 1e-12;

/// `x₃ = ±λ sin(εt + v₀)` on the sphere, `x₃ = λ cosh(εt + v₀)` on the
/// hyperboloid; the angle advances at `β̄` plus an arctan term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizontalForm {
    pub sigma: Signature,
    pub lambda: f64,
    pub epsilon: f64,
    pub v0: f64,
    pub psi0: f64,
    pub beta: f64,
    pub sign3: f64,
    pub sign_psi: f64,
}

/// Continuous branch of `arctan(k tan u)`, equal to `u` at multiples of π.
fn unwrapped_arctan(k: f64, u: f64) -> f64 {
    let n = (u / std::f64::consts::PI).round();
    let r = u - n * std::f64::consts::PI;
    n * std::f64::consts::PI + (k * r.tan()).atan()
}

impl HorizontalForm {
    #[allow(clippy::too_many_arguments)]
    pub fn new(sigma: Signature, lambda: f64, epsilon: f64, v0: f64, psi0: f64, beta: f64, sign3: f64, sign_psi: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("need ε > 0 and λ ≥ 0, got ε = {epsilon}, λ = {lambda}")));
        }
        if sigma.sigma() * (1.0 - lambda * lambda) < -UNIT_TOL {
            return Err(Error::InvalidInput(format!("λ = {lambda} is outside the admissible range for {}", ManifoldTag::SpaceForm(sigma))));
        }
        if sigma == Signature::Hyperbolic && sign3 < 0.0 {
            return Err(Error::InvalidInput("the lower sheet is excluded".into()));
        }
        let lambda = if (lambda - 1.0).abs() <= UNIT_TOL { 1.0 } else { lambda };
        Ok(Self { sigma, lambda, epsilon, v0, psi0, beta, sign3: sign3.signum(), sign_psi: sign_psi.signum() })
    }

    /// Parameters of the extremal of `β̄B` through `(x0, v0)`.
    pub fn from_initial_data(sigma: Signature, beta: f64, x0: &EmbeddedPoint, v0: &TangentVec) -> Result<Self> {
        x0.ensure_on(ManifoldTag::SpaceForm(sigma))?;
        let (b, c, _) = conserved_constants(sigma, beta, 0.0, x0, v0);
        let (x, v) = (x0.coords(), &v0.vec);
        let eps2 = sigma.sigma() * (b - 2.0 * beta * c);
        if !(eps2 > 0.0) {
            return Err(Error::InvalidInput(format!("b − 2β̄c = {} gives no oscillating height; see the constant-height families", b - 2.0 * beta * c)));
        }
        let eps = eps2.sqrt();
        let (x3, x3dot) = (x[2], v[2]);
        let angle = x[1].atan2(x[0]);
        let r0 = x[0].hypot(x[1]);
        let horizontal_angle = |rdot: f64| v[1].atan2(v[0]) + if rdot < 0.0 { std::f64::consts::PI } else { 0.0 };
        match sigma {
            Signature::Sphere => {
                let mut lambda = (x3 * x3 + x3dot * x3dot / eps2).sqrt();
                if (lambda - 1.0).abs() <= UNIT_TOL {
                    lambda = 1.0;
                }
                let u0 = if lambda > 0.0 { (x3 / lambda).atan2(x3dot / (lambda * eps)) } else { 0.0 };
                let k = (1.0 - lambda * lambda).max(0.0).sqrt();
                let sign_psi = if c < 0.0 { -1.0 } else { 1.0 };
                let psi0 = if lambda == 1.0 {
                    if r0 < 1e-12 {
                        horizontal_angle(-eps * u0.sin())
                    } else if u0.cos() < 0.0 {
                        angle + std::f64::consts::PI
                    } else {
                        angle
                    }
                } else {
                    angle - sign_psi * unwrapped_arctan(k, u0)
                };
                Self::new(sigma, lambda, eps, u0, psi0, beta, 1.0, sign_psi)
            }
            Signature::Hyperbolic => {
                let mut lambda = (x3 * x3 - x3dot * x3dot / eps2).max(0.0).sqrt();
                if (lambda - 1.0).abs() <= UNIT_TOL {
                    lambda = 1.0;
                }
                let u0 = (x3dot / (lambda * eps)).asinh();
                let kappa = (lambda * lambda - 1.0).max(0.0).sqrt();
                let sign_psi = if c > 0.0 { -1.0 } else { 1.0 };
                let psi0 = if lambda == 1.0 {
                    if r0 < 1e-12 {
                        horizontal_angle(eps * u0.cosh())
                    } else if u0.sinh() < 0.0 {
                        angle + std::f64::consts::PI
                    } else {
                        angle
                    }
                } else {
                    angle - sign_psi * (u0.tanh() / kappa).atan()
                };
                Self::new(sigma, lambda, eps, u0, psi0, beta, 1.0, sign_psi)
            }
        }
    }

    /// `sin` on the sphere, `cosh` on the hyperboloid.
    pub fn branch(&self) -> &'static str {
        match self.sigma {
            Signature::Sphere => "sin",
            Signature::Hyperbolic => "cosh",
        }
    }

    /// Rotational constant `c`.
    pub fn c(&self) -> f64 {
        let l2 = self.lambda * self.lambda;
        match self.sigma {
            Signature::Sphere => self.sign_psi * self.epsilon * (1.0 - l2).max(0.0).sqrt(),
            Signature::Hyperbolic => -self.sign_psi * self.epsilon * (l2 - 1.0).max(0.0).sqrt(),
        }
    }

    /// Energy constant `b` in the form `σ‖x′‖² = β̄²(1−x₃²) + b`.
    pub fn b(&self) -> f64 {
        2.0 * self.beta * self.c() + self.sigma.sigma() * self.epsilon * self.epsilon
    }

    /// Point and velocity at time `t`.
    pub fn state(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        let u = self.epsilon * t + self.v0;
        let (l, e) = (self.lambda, self.epsilon);
        let (x3, x3dot, r, rdot, psi, psidot) = match self.sigma {
            Signature::Sphere => {
                let (su, cu) = u.sin_cos();
                let (x3, x3dot) = (self.sign3 * l * su, self.sign3 * l * e * cu);
                if l == 1.0 {
                    (x3, x3dot, cu, -e * su, self.psi0 + self.beta * t, self.beta)
                } else {
                    let k = (1.0 - l * l).sqrt();
                    let r = (1.0 - l * l * su * su).sqrt();
                    let psi = self.psi0 + self.beta * t + self.sign_psi * unwrapped_arctan(k, u);
                    (x3, x3dot, r, -l * l * e * su * cu / r, psi, self.beta + self.sign_psi * e * k / (r * r))
                }
            }
            Signature::Hyperbolic => {
                let (sh, ch) = (u.sinh(), u.cosh());
                let (x3, x3dot) = (l * ch, l * e * sh);
                if l == 1.0 {
                    (x3, x3dot, sh, e * ch, self.psi0 + self.beta * t, self.beta)
                } else {
                    let kappa = (l * l - 1.0).sqrt();
                    let r = (l * l * ch * ch - 1.0).sqrt();
                    let psi = self.psi0 + self.beta * t + self.sign_psi * (u.tanh() / kappa).atan();
                    (x3, x3dot, r, l * l * e * ch * sh / r, psi, self.beta + self.sign_psi * e * kappa / (r * r))
                }
            }
        };
        let (sp, cp) = psi.sin_cos();
        let x = DVector::from_vec(vec![r * cp, r * sp, x3]);
        let v = DVector::from_vec(vec![rdot * cp - r * psidot * sp, rdot * sp + r * psidot * cp, x3dot]);
        (x, v)
    }

    /// Samples on a uniform grid over `[0, t1]`.
    pub fn sample(&self, t1: f64, n: usize) -> Result<ExtremalCurve> {
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let times: Vec<f64> = (0..n).map(|i| t1 * i as f64 / (n - 1) as f64).collect();
        let (points, velocities) = times.iter().map(|&t| self.state(t)).unzip();
        Ok(ExtremalCurve {
            manifold: ManifoldTag::SpaceForm(self.sigma),
            times,
            points,
            velocities,
            segments: vec![Segment { start: 0, b: self.sigma.sigma() * self.b(), c: Some(self.c()) }],
            max_drift: 0.0,
        })
    }
}

/// Point of the horizontal closed form at time `t`.
pub fn horizontal_closed_form(params: &HorizontalForm, t: f64) -> EmbeddedPoint {
    EmbeddedPoint::new_unchecked(ManifoldTag::SpaceForm(params.sigma), params.state(t).0)
}
