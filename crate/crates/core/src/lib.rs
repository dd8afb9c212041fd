//! Conditional extrema: curves on Riemannian manifolds that interpolate
//! waypoints while staying as close as possible, in L², to a prior vector
//! field.
//!
//! The crate works in ambient coordinates on Euclidean space, the sphere S²,
//! the hyperboloid H² and the unit quaternions S³, and provides both general
//! numerical solvers and the closed-form families available for affine,
//! left-invariant and rotationally symmetric priors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod ode;
pub mod prior;
pub mod quat_group;
pub mod quaternion;
pub mod space_forms;
pub mod variational;

pub use error::{Error, Result};
pub use geom::{geodesic_point, metric_inner, project_to_tangent, EmbeddedPoint, ManifoldTag, Signature, TangentVec};
pub use ode::ExtremalCurve;
pub use prior::{Coefficient, PotentialFn, PriorField};
pub use quaternion::{qexp, qlog, Quat};
pub use nalgebra::{DMatrix, DVector, Vector3};
pub use num_complex::Complex64;
