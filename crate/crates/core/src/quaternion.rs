//! Quaternion arithmetic for the unit-quaternion group S³ ⊂ ℍ.
//!
//! Pure-imaginary quaternions (the Lie algebra) are passed around as
//! `Vector3`, ordered `(i, j, k)`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Quat {
    pub w: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quat {
    pub const ONE: Quat = Quat { w: 1.0, i: 0.0, j: 0.0, k: 0.0 };
    pub const I: Quat = Quat { w: 0.0, i: 1.0, j: 0.0, k: 0.0 };
    pub const J: Quat = Quat { w: 0.0, i: 0.0, j: 1.0, k: 0.0 };
    pub const K: Quat = Quat { w: 0.0, i: 0.0, j: 0.0, k: 1.0 };

    pub const fn new(w: f64, i: f64, j: f64, k: f64) -> Self {
        Self { w, i, j, k }
    }

    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_parts(w: f64, v: &Vector3<f64>) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn from_dvector(v: &DVector<f64>) -> Self {
        Self::from_slice(v.as_slice())
    }

    pub fn to_dvector(self) -> DVector<f64> {
        DVector::from_column_slice(&self.to_array())
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.i, self.j, self.k]
    }

    /// Imaginary part.
    pub fn im(self) -> Vector3<f64> {
        Vector3::new(self.i, self.j, self.k)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.i, -self.j, -self.k)
    }

    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.i * self.i + self.j * self.j + self.k * self.k
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn inverse(self) -> Self {
        self.conj() * (1.0 / self.norm_sq())
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.i * o.i + self.j * o.j + self.k * o.k
    }

    /// Adjoint action `q v q⁻¹` on a pure quaternion.
    pub fn rotate(self, v: &Vector3<f64>) -> Vector3<f64> {
        (self * Quat::pure(v) * self.inverse()).im()
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.i * o.i - self.j * o.j - self.k * o.k,
            self.w * o.i + self.i * o.w + self.j * o.k - self.k * o.j,
            self.w * o.j - self.i * o.k + self.j * o.w + self.k * o.i,
            self.w * o.k + self.i * o.j - self.j * o.i + self.k * o.w,
        )
    }
}

impl Mul<f64> for Quat {
    type Output = Quat;
    fn mul(self, s: f64) -> Quat {
        Quat::new(self.w * s, self.i * s, self.j * s, self.k * s)
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat::new(self.w + o.w, self.i + o.i, self.j + o.j, self.k + o.k)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat::new(self.w - o.w, self.i - o.i, self.j - o.j, self.k - o.k)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self * -1.0
    }
}

/// `e^{t u} = cos(t‖u‖) + sin(t‖u‖) u/‖u‖` for pure imaginary `u`.
pub fn qexp(u: &Vector3<f64>, t: f64) -> Quat {
    let n = u.norm();
    let theta = t * n;
    // t·sin(θ)/θ, the factor multiplying u
    let (c, s) = if theta.abs() < 1e-4 {
        let t2 = theta * theta;
        (1.0 - t2 / 2.0 + t2 * t2 / 24.0, t * (1.0 - t2 / 6.0 + t2 * t2 / 120.0))
    } else {
        (theta.cos(), theta.sin() / n)
    };
    Quat::from_parts(c, &(u * s))
}

/// Principal logarithm of a unit quaternion, `‖qlog(q)‖ ≤ π`.
///
/// Fails at (and numerically next to) `−1`, where the logarithm is not unique.
pub fn qlog(q: Quat) -> Result<Vector3<f64>> {
    let q = q.normalize();
    let v = q.im();
    let s = v.norm();
    if q.w < 0.0 && s < 1e-12 {
        let axis = if s > 0.0 { v / s } else { Vector3::x() };
        let a = axis * std::f64::consts::PI;
        return Err(Error::Antipodal { candidates: vec![a.into(), (-a).into()] });
    }
    let theta = s.atan2(q.w);
    if s == 0.0 {
        return Ok(Vector3::zeros());
    }
    Ok(v * (theta / s))
}

/// Lie bracket `[a, b] = ab − ba = 2 a × b` of pure quaternions.
pub fn bracket(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    2.0 * a.cross(b)
}
