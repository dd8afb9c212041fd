//! Rotationally symmetric priors `β̄B + γ̄C` with constant coefficients on the
//! sphere and the upper hyperboloid: conserved constants, the reduced height
//! equation, closed forms and the angle quadrature.

pub mod horizontal;
pub mod weierstrass;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geom::{EmbeddedPoint, ManifoldTag, Signature, TangentVec};
use crate::linalg::cumulative_simpson;
use crate::ode::{ExtremalCurve, Segment};

pub use horizontal::{horizontal_closed_form, HorizontalForm};
pub use weierstrass::{find_shift_a, weierstrass_invariants, weierstrass_x3, wp_eval, WeierstrassForm};

/// Constants `(b, c, d)` of an extremal through `(x0, v0)`:
/// `σ‖x′‖² = (β̄²+γ̄²)(1−x₃²) + b`, `σ(x₁x₂′ − x₂x₁′) = β̄(1−x₃²) + c`, and
/// `x₃′² + bx₃² = γ̄²(1−x₃²)² − 2β̄c(1−x₃²) + d`.
pub fn conserved_constants(sigma: Signature, beta: f64, gamma: f64, x0: &EmbeddedPoint, v0: &TangentVec) -> (f64, f64, f64) {
    let s = sigma.sigma();
    let (x, v) = (x0.coords(), &v0.vec);
    let m = ManifoldTag::SpaceForm(sigma);
    let h = 1.0 - x[2] * x[2];
    let b = s * m.norm_sq(v) - (beta * beta + gamma * gamma) * h;
    let c = s * (x[0] * v[1] - x[1] * v[0]) - beta * h;
    let d = v[2] * v[2] + b * x[2] * x[2] - gamma * gamma * h * h + 2.0 * beta * c * h;
    (b, c, d)
}

/// Constant-coefficient symmetric prior together with the constants of one
/// of its extremals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricScenario {
    pub sigma: Signature,
    pub beta: f64,
    pub gamma: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SymmetricScenario {
    pub fn from_initial_data(sigma: Signature, beta: f64, gamma: f64, x0: &EmbeddedPoint, v0: &TangentVec) -> Result<Self> {
        x0.ensure_on(ManifoldTag::SpaceForm(sigma))?;
        let (b, c, d) = conserved_constants(sigma, beta, gamma, x0, v0);
        Ok(Self { sigma, beta, gamma, b, c, d })
    }

    pub fn manifold(&self) -> ManifoldTag {
        ManifoldTag::SpaceForm(self.sigma)
    }

    /// LHS − RHS of the first-order height equation.
    pub fn x3_first_order_residual(&self, x3: f64, x3dot: f64) -> f64 {
        let h = 1.0 - x3 * x3;
        x3dot * x3dot + self.b * x3 * x3 - (self.gamma * self.gamma * h * h - 2.0 * self.beta * self.c * h + self.d)
    }

    /// `σ‖x′ − A‖² = b − 2β̄c + 2γ̄²(1−x₃²) − 2γ̄x₃′`.
    pub fn integrand_closed_form(&self, x3: f64, x3dot: f64) -> f64 {
        self.b - 2.0 * self.beta * self.c + 2.0 * self.gamma * self.gamma * (1.0 - x3 * x3) - 2.0 * self.gamma * x3dot
    }

    /// The alternative identity `b − 2cβ̄ + 2γ̄(1−2x₃²)x₃′`, kept for
    /// comparison; it disagrees with direct evaluation whenever `γ̄ ≠ 0`.
    pub fn integrand_alternative_form(&self, x3: f64, x3dot: f64) -> f64 {
        self.b - 2.0 * self.c * self.beta + 2.0 * self.gamma * (1.0 - 2.0 * x3 * x3) * x3dot
    }

    /// Angle rate `ψ′ = β̄ + c/(1 − x₃²)`.
    pub fn psi_rate(&self, x3: f64) -> f64 {
        self.beta + self.c / (1.0 - x3 * x3)
    }

    /// `ψ` on the grid by cumulative Simpson quadrature of the angle rate.
    pub fn psi_quadrature(&self, times: &[f64], x3: &[f64], psi0: f64) -> Result<Vec<f64>> {
        if times.len() != x3.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: x3.len() });
        }
        let mut rate = Vec::with_capacity(times.len());
        for (&t, &h) in times.iter().zip(x3) {
            if (1.0 - h * h).abs() < 1e-8 {
                return Err(Error::PoleCrossing { time: t });
            }
            rate.push(self.psi_rate(h));
        }
        let acc = cumulative_simpson(times, &rate).ok_or(Error::TooFewSamples { needed: 3, got: times.len() })?;
        Ok(acc.into_iter().map(|a| psi0 + a).collect())
    }

    /// `(r cos ψ, r sin ψ, x₃)` with `r = √(σ(1−x₃²))`.
    pub fn reconstruct(&self, x3: f64, psi: f64) -> DVector<f64> {
        let r = (self.sigma.sigma() * (1.0 - x3 * x3)).max(0.0).sqrt();
        DVector::from_vec(vec![r * psi.cos(), r * psi.sin(), x3])
    }

    /// Point and velocity from height, angle and their rates.
    pub fn reconstruct_state(&self, x3: f64, x3dot: f64, psi: f64) -> (DVector<f64>, DVector<f64>) {
        let s = self.sigma.sigma();
        let r = (s * (1.0 - x3 * x3)).max(0.0).sqrt();
        let rdot = if r > 0.0 { -s * x3 * x3dot / r } else { 0.0 };
        let w = self.psi_rate(x3);
        let (sn, cs) = psi.sin_cos();
        let x = DVector::from_vec(vec![r * cs, r * sn, x3]);
        let v = DVector::from_vec(vec![rdot * cs - r * w * sn, rdot * sn + r * w * cs, x3dot]);
        (x, v)
    }

    /// Energy constant `‖x′‖² − ‖A‖²` in the convention of [`ExtremalCurve`].
    pub fn energy_constant(&self) -> f64 {
        self.sigma.sigma() * self.b
    }
}

/// Closed-form height and angle for `γ̄ ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeierstrassCurve {
    pub scenario: SymmetricScenario,
    pub form: WeierstrassForm,
    pub psi0: f64,
}

impl WeierstrassCurve {
    pub fn from_initial_data(sigma: Signature, beta: f64, gamma: f64, x0: &EmbeddedPoint, v0: &TangentVec) -> Result<Self> {
        let scenario = SymmetricScenario::from_initial_data(sigma, beta, gamma, x0, v0)?;
        let (x, v) = (x0.coords(), &v0.vec);
        let form = WeierstrassForm::new(gamma, beta, scenario.b, scenario.c, scenario.d, x[2], v[2])?;
        if x[0].hypot(x[1]) < 1e-12 {
            return Err(Error::InvalidInput("start point is a pole; the angle is undefined".into()));
        }
        Ok(Self { scenario, form, psi0: x[1].atan2(x[0]) })
    }

    /// Samples on a uniform grid over `[0, t1]`; the angle comes from
    /// quadrature, so the grid must avoid the poles.
    pub fn sample(&self, t1: f64, n: usize) -> Result<ExtremalCurve> {
        if n < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: n });
        }
        let times: Vec<f64> = (0..n).map(|i| t1 * i as f64 / (n - 1) as f64).collect();
        let hv = self.form.x3_grid(&times)?;
        let x3: Vec<f64> = hv.iter().map(|p| p.0).collect();
        let psi = self.scenario.psi_quadrature(&times, &x3, self.psi0)?;
        let (points, velocities) = hv.iter().zip(&psi).map(|(&(h, hd), &p)| self.scenario.reconstruct_state(h, hd, p)).unzip();
        Ok(ExtremalCurve {
            manifold: self.scenario.manifold(),
            times,
            points,
            velocities,
            segments: vec![Segment { start: 0, b: self.scenario.energy_constant(), c: Some(self.scenario.c) }],
            max_drift: 0.0,
        })
    }
}

/// Families of extremals with constant height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstantFamily {
    /// `(cos(ωt+ψ₀), sin(ωt+ψ₀), 0)` for any rate `ω`.
    Equator,
    /// Height `h` with `σ(1−h²) > 0`, turning at the given rate.
    Latitude { rate: f64 },
    FixedPoint([f64; 3]),
    /// `A = 0`: constant curves are degenerate geodesics.
    Degenerate,
}

impl ConstantFamily {
    /// Member of the family; `param` is the rate for the equator and the
    /// height for a latitude, ignored otherwise.
    pub fn point(&self, sigma: Signature, param: f64, psi0: f64, t: f64) -> Option<DVector<f64>> {
        match *self {
            ConstantFamily::Equator => Some(DVector::from_vec(vec![(param * t + psi0).cos(), (param * t + psi0).sin(), 0.0])),
            ConstantFamily::Latitude { rate } => {
                let r2 = sigma.sigma() * (1.0 - param * param);
                if r2 <= 0.0 || (sigma == Signature::Hyperbolic && param <= 0.0) {
                    return None;
                }
                let r = r2.sqrt();
                let a = rate * t + psi0;
                Some(DVector::from_vec(vec![r * a.cos(), r * a.sin(), param]))
            }
            ConstantFamily::FixedPoint(p) => Some(DVector::from_column_slice(&p)),
            ConstantFamily::Degenerate => None,
        }
    }
}

/// Extremals along which `x₃` is constant. The equator only lies on the
/// sphere; the hyperboloid has a single pole.
pub fn constant_solutions(sigma: Signature, beta: f64, gamma: f64) -> Vec<ConstantFamily> {
    let mut out = Vec::new();
    if sigma == Signature::Sphere {
        out.push(ConstantFamily::Equator);
    }
    if gamma == 0.0 {
        out.push(ConstantFamily::Latitude { rate: beta });
    }
    out.push(ConstantFamily::FixedPoint([0.0, 0.0, 1.0]));
    if sigma == Signature::Sphere {
        out.push(ConstantFamily::FixedPoint([0.0, 0.0, -1.0]));
    }
    if beta == 0.0 && gamma == 0.0 {
        out.push(ConstantFamily::Degenerate);
    }
    out
}

/// Poincaré disc coordinates `(y₁, y₂)/(1 + y₃)` of a point on the upper sheet.
pub fn poincare_map(y: &[f64]) -> Result<[f64; 2]> {
    if y.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: y.len() });
    }
    if y[2] <= 0.0 {
        return Err(Error::NotOnManifold { manifold: ManifoldTag::SpaceForm(Signature::Hyperbolic), violation: y[2].abs() });
    }
    Ok([y[0] / (1.0 + y[2]), y[1] / (1.0 + y[2])])
}
