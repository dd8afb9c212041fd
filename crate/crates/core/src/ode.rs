//! Numerical solution of the Euler–Lagrange equation
//! `∇_t x′ = ½ grad‖A‖² + θ_{A,x′}^{−T}`: fixed-step RK4 with manifold
//! reprojection, Gauss–Newton shooting for two-point problems, conservation
//! monitors and track-sums of segments.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{EmbeddedPoint, ManifoldTag, TangentVec, TOL_MANIFOLD};
use crate::linalg::simpson;
use crate::prior::{half_grad_norm_sq_at, theta_at, PriorField};
use crate::quaternion::Quat;

/// Relative drift of the energy constant that triggers a warning.
pub const DRIFT_TOL: f64 = 1e-6;
/// Relative drift that aborts integration.
pub const DRIFT_TOL_FAIL: f64 = 1e-3;

/// One smooth piece of an extremal and its conserved constants.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    /// Index of the first sample of the segment.
    pub start: usize,
    /// `‖x′‖² − ‖A(x)‖²`.
    pub b: f64,
    /// `σ(x₁x₂′ − x₂x₁′) − β̄(x₃)(1 − x₃²)` for symmetric priors.
    pub c: Option<f64>,
}

/// A sampled extremal. Junction samples are duplicated across segments so
/// that each segment carries its own one-sided velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalCurve {
    pub manifold: ManifoldTag,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub segments: Vec<Segment>,
    /// Largest relative energy drift observed while integrating.
    pub max_drift: f64,
}

impl ExtremalCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn b(&self) -> f64 {
        self.segments[0].b
    }

    pub fn c(&self) -> Option<f64> {
        self.segments[0].c
    }

    pub fn point(&self, i: usize) -> EmbeddedPoint {
        EmbeddedPoint::new_unchecked(self.manifold, self.points[i].clone())
    }

    pub fn velocity(&self, i: usize) -> TangentVec {
        TangentVec { base: self.point(i), vec: self.velocities[i].clone() }
    }

    pub fn start(&self) -> &DVector<f64> {
        &self.points[0]
    }

    pub fn end(&self) -> &DVector<f64> {
        self.points.last().expect("non-empty curve")
    }

    /// Sample index ranges of the segments.
    pub fn segment_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.segments.len());
        for (k, s) in self.segments.iter().enumerate() {
            let end = self.segments.get(k + 1).map_or(self.len(), |n| n.start);
            out.push(s.start..end);
        }
        out
    }

    /// Largest absolute deviation of `‖x′‖² − ‖A‖²` and of the rotational
    /// quantity from their recorded segment constants.
    pub fn conservation_residuals(&self, a: &PriorField) -> (f64, f64) {
        let mut rb: f64 = 0.0;
        let mut rc: f64 = 0.0;
        for (seg, range) in self.segments.iter().zip(self.segment_ranges()) {
            for i in range {
                let (x, v) = (&self.points[i], &self.velocities[i]);
                rb = rb.max((energy(a, x, v) - seg.b).abs());
                if let (Some(c), Some(ci)) = (seg.c, rotational(a, x, v)) {
                    rc = rc.max((ci - c).abs());
                }
            }
        }
        (rb, rc)
    }
}

/// `‖v‖² − ‖A(x)‖²`.
pub fn energy(a: &PriorField, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let m = a.manifold();
    m.norm_sq(v) - m.norm_sq(&a.value_at(x))
}

/// Rotational constant for the symmetric family, `None` otherwise.
pub fn rotational(a: &PriorField, x: &DVector<f64>, v: &DVector<f64>) -> Option<f64> {
    match a {
        PriorField::Symmetric { signature, beta, .. } => {
            let w = signature.sigma() * (x[0] * v[1] - x[1] * v[0]);
            Some(w - beta.value(x[2]) * (1.0 - x[2] * x[2]))
        }
        _ => None,
    }
}

/// Ambient second derivative `x″` of an extremal through `x` with velocity `v`.
pub fn el_rhs_at(a: &PriorField, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let m = a.manifold();
    match (m, a) {
        (ManifoldTag::UnitQuaternions, PriorField::LeftInvariantS3 { generator }) => {
            // reduced velocity V = x̄x′, and x″ = x(V′ + V²) with V′ = [V, A]
            let q = Quat::from_dvector(x);
            let vl = (q.conj() * Quat::from_dvector(v)).im();
            let acc = Quat::pure(&(2.0 * vl.cross(generator))) - Quat::ONE * vl.norm_squared();
            (q * acc).to_dvector()
        }
        (ManifoldTag::Euclidean(_), _) => half_grad_norm_sq_at(a, x) + theta_at(a, x, v),
        (ManifoldTag::SpaceForm(s), _) => {
            half_grad_norm_sq_at(a, x) + theta_at(a, x, v) - x * (s.sigma() * m.norm_sq(v))
        }
        (ManifoldTag::UnitQuaternions, _) => half_grad_norm_sq_at(a, x) + theta_at(a, x, v) - x * v.norm_squared(),
    }
}

/// `x″` of the extremal through `x` with velocity `v`, in ambient coordinates.
pub fn el_rhs(a: &PriorField, x: &EmbeddedPoint, v: &TangentVec) -> Result<DVector<f64>> {
    x.ensure_on(a.manifold())?;
    Ok(el_rhs_at(a, x.coords(), &v.vec))
}

fn rk4_step(a: &PriorField, x: &DVector<f64>, v: &DVector<f64>, h: f64) -> (DVector<f64>, DVector<f64>) {
    let m = a.manifold();
    let k1x = v.clone();
    let k1v = el_rhs_at(a, x, v);
    let x2 = x + &k1x * (h / 2.0);
    let v2 = v + &k1v * (h / 2.0);
    let k2v = el_rhs_at(a, &x2, &v2);
    let x3 = x + &v2 * (h / 2.0);
    let v3 = v + &k2v * (h / 2.0);
    let k3v = el_rhs_at(a, &x3, &v3);
    let x4 = x + &v3 * h;
    let v4 = v + &k3v * h;
    let k4v = el_rhs_at(a, &x4, &v4);
    let xn = x + (k1x + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
    let vn = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    let xn = m.retract(&xn);
    let vn = m.project(&xn, &vn);
    (xn, vn)
}

fn drift_scale(a: &PriorField, x: &DVector<f64>, b: f64) -> f64 {
    (b.abs() + a.manifold().norm_sq(&a.value_at(x)).abs()).max(1.0)
}

fn step_count(t0: f64, t1: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInput(format!("bad integration span [{t0}, {t1}] with step {step}")));
    }
    Ok((((t1 - t0).abs() / step) - 1e-9).ceil().max(1.0) as usize)
}

/// Fixed-step RK4 from `(x0, v0)` at `t0` to `t1`, with `x` retracted to the
/// manifold and `v` reprojected after every step. The step is shrunk so that
/// it divides the span evenly; `t1 < t0` integrates backwards.
pub fn integrate_ivp(a: &PriorField, x0: &EmbeddedPoint, v0: &TangentVec, t0: f64, t1: f64, step: f64) -> Result<ExtremalCurve> {
    x0.ensure_on(a.manifold())?;
    let n = step_count(t0, t1, step)?;
    let h = (t1 - t0) / n as f64;
    let m = a.manifold();
    let mut x = x0.coords().clone();
    let mut v = m.project(&x, &v0.vec);
    let b = energy(a, &x, &v);
    let c = rotational(a, &x, &v);
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    times.push(t0);
    points.push(x.clone());
    velocities.push(v.clone());
    let mut max_drift: f64 = 0.0;
    let mut warned = false;
    for i in 1..=n {
        let (xn, vn) = rk4_step(a, &x, &v, h);
        x = xn;
        v = vn;
        let t = t0 + h * i as f64;
        let drift = (energy(a, &x, &v) - b).abs() / drift_scale(a, &x, b);
        if !drift.is_finite() || drift > DRIFT_TOL_FAIL {
            return Err(Error::IntegrationDrift { time: t, drift });
        }
        if drift > DRIFT_TOL && !warned {
            warn!("energy drift {drift:.3e} at t = {t}");
            warned = true;
        }
        max_drift = max_drift.max(drift);
        times.push(t);
        points.push(x.clone());
        velocities.push(v.clone());
    }
    Ok(ExtremalCurve { manifold: m, times, points, velocities, segments: vec![Segment { start: 0, b, c }], max_drift })
}

/// Endpoint of the flow without storing samples.
pub fn flow_endpoint(a: &PriorField, x0: &DVector<f64>, v0: &DVector<f64>, t0: f64, t1: f64, step: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = step_count(t0, t1, step)?;
    let h = (t1 - t0) / n as f64;
    let m = a.manifold();
    let mut x = x0.clone();
    let mut v = m.project(&x, v0);
    for _ in 0..n {
        let (xn, vn) = rk4_step(a, &x, &v, h);
        if !xn.iter().chain(vn.iter()).all(|c| c.is_finite()) {
            return Err(Error::IntegrationDrift { time: t1, drift: f64::INFINITY });
        }
        x = xn;
        v = vn;
    }
    Ok((x, v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    /// Integration step.
    pub step: f64,
    /// Ambient endpoint distance accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { step: 1e-3, tol: 1e-9, max_iter: 50, fd_step: 1e-7 }
    }
}

/// Two-point boundary-value problem by shooting: Gauss–Newton on the initial
/// velocity, written in an orthonormal tangent basis at `x0`, driving the
/// ambient endpoint mismatch to zero.
pub fn shoot_bvp(
    a: &PriorField,
    x0: &EmbeddedPoint,
    x1: &EmbeddedPoint,
    t0: f64,
    t1: f64,
    v0_init: &TangentVec,
    opts: &ShootOptions,
) -> Result<ExtremalCurve> {
    let m = a.manifold();
    x0.ensure_on(m)?;
    x1.ensure_on(m)?;
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!("shooting needs t1 > t0, got [{t0}, {t1}]")));
    }
    let xs = x0.coords();
    let target = x1.coords();
    let basis = m.tangent_basis(xs);
    let to_vec = |coef: &DVector<f64>| basis.iter().zip(coef.iter()).fold(DVector::zeros(xs.len()), |acc, (e, c)| acc + e * *c);
    let residual = |coef: &DVector<f64>| -> Option<DVector<f64>> {
        let (xe, _) = flow_endpoint(a, xs, &to_vec(coef), t0, t1, opts.step).ok()?;
        let r = xe - target;
        r.iter().all(|c| c.is_finite()).then_some(r)
    };
    let mut coef = DVector::from_iterator(basis.len(), basis.iter().map(|e| m.inner(e, &v0_init.vec)));
    let mut r = residual(&coef).ok_or(Error::NoConvergence { iterations: 0, residual: f64::INFINITY })?;
    let mut iter = 0;
    while r.norm() > opts.tol {
        if iter >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: iter, residual: r.norm() });
        }
        iter += 1;
        let mut jac = DMatrix::zeros(r.len(), coef.len());
        for k in 0..coef.len() {
            let h = opts.fd_step * coef[k].abs().max(1.0);
            let mut c = coef.clone();
            c[k] += h;
            let rk = residual(&c).ok_or(Error::NoConvergence { iterations: iter, residual: r.norm() })?;
            jac.set_column(k, &((rk - &r) / h));
        }
        let svd = jac.svd(true, true);
        let delta = svd.solve(&(-&r), 1e-12 * svd.singular_values.max()).map_err(|e| Error::InvalidInput(e.to_string()))?;
        // backtrack until the residual decreases
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &coef + &delta * lambda;
            if let Some(rt) = residual(&trial) {
                if rt.norm() < r.norm() {
                    coef = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: iter, residual: r.norm() });
        }
        debug!("shooting iteration {iter}: residual {:.3e}", r.norm());
    }
    let v0 = TangentVec { base: x0.clone(), vec: to_vec(&coef) };
    integrate_ivp(a, x0, &v0, t0, t1, opts.step)
}

/// Shooting from the geodesic initial guess plus `starts − 1` seeded random
/// initial velocities. Returns every converged extremal, distinct ones only,
/// sorted by `J`.
#[allow(clippy::too_many_arguments)]
pub fn shoot_multistart(
    a: &PriorField,
    x0: &EmbeddedPoint,
    x1: &EmbeddedPoint,
    t0: f64,
    t1: f64,
    opts: &ShootOptions,
    starts: usize,
    seed: u64,
) -> Result<Vec<(f64, ExtremalCurve)>> {
    let m = a.manifold();
    let xs = x0.coords();
    let geo = m.log(xs, x1.coords()) / (t1 - t0);
    let scale = (m.norm_sq(&geo).abs().sqrt() + m.norm_sq(&a.value_at(xs)).abs().sqrt()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut guesses = vec![geo];
    let basis = m.tangent_basis(xs);
    while guesses.len() < starts.max(1) {
        let v = basis.iter().fold(DVector::zeros(xs.len()), |acc, e| acc + e * rng.gen_range(-2.0 * scale..2.0 * scale));
        guesses.push(v);
    }
    let mut found: Vec<(f64, ExtremalCurve)> = Vec::new();
    let mut last_err = None;
    for g in guesses {
        let init = TangentVec { base: x0.clone(), vec: g };
        match shoot_bvp(a, x0, x1, t0, t1, &init, opts) {
            Ok(curve) => {
                let dup = found.iter().any(|(_, c)| (&c.velocities[0] - &curve.velocities[0]).norm() < 1e-6 * scale);
                if !dup {
                    let j = functional_j(&curve, a)?;
                    found.push((j, curve));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if found.is_empty() {
        return Err(last_err.unwrap_or(Error::NoConvergence { iterations: 0, residual: f64::INFINITY }));
    }
    found.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(found)
}

/// Concatenate segments into one curve; consecutive segments must meet in
/// position and time.
pub fn track_sum(segments: Vec<ExtremalCurve>) -> Result<ExtremalCurve> {
    let mut iter = segments.into_iter();
    let mut out = iter.next().ok_or(Error::EmptySamples)?;
    for (k, seg) in iter.enumerate() {
        if seg.manifold != out.manifold {
            return Err(Error::ManifoldMismatch { expected: out.manifold, found: seg.manifold });
        }
        if seg.is_empty() {
            return Err(Error::EmptySamples);
        }
        let gap = (out.end() - seg.start()).norm();
        let t_end = *out.times.last().unwrap();
        let dt = (seg.times[0] - t_end).abs();
        if gap > TOL_MANIFOLD * out.end().norm().max(1.0) || dt > 1e-12 * t_end.abs().max(1.0) {
            return Err(Error::JunctionMismatch { index: k + 1, gap: gap.max(dt) });
        }
        let offset = out.len();
        out.segments.extend(seg.segments.into_iter().map(|s| Segment { start: s.start + offset, ..s }));
        out.times.extend(seg.times);
        out.points.extend(seg.points);
        out.velocities.extend(seg.velocities);
        out.max_drift = out.max_drift.max(seg.max_drift);
    }
    Ok(out)
}

/// `x̄(u) = x(−u)` on the negated, reversed grid. Segment energies carry
/// over; rotational constants are dropped.
pub fn reverse_curve(curve: &ExtremalCurve) -> ExtremalCurve {
    let n = curve.len();
    let ranges = curve.segment_ranges();
    let segments = curve.segments.iter().zip(&ranges).rev().map(|(s, r)| Segment { start: n - r.end, b: s.b, c: None }).collect();
    ExtremalCurve {
        manifold: curve.manifold,
        times: curve.times.iter().rev().map(|t| -t).collect(),
        points: curve.points.iter().rev().cloned().collect(),
        velocities: curve.velocities.iter().rev().map(|v| -v).collect(),
        segments,
        max_drift: curve.max_drift,
    }
}

/// `∫ ‖x′ − A(x)‖² dt` by composite Simpson on each segment.
pub fn functional_j(curve: &ExtremalCurve, a: &PriorField) -> Result<f64> {
    let m = curve.manifold;
    let mut total = 0.0;
    for range in curve.segment_ranges() {
        if range.len() < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: range.len() });
        }
        let f: Vec<f64> = range.clone().map(|i| m.norm_sq(&(&curve.velocities[i] - a.value_at(&curve.points[i])))).collect();
        total += simpson(&curve.times[range], &f).expect("at least three samples");
    }
    Ok(total)
}
