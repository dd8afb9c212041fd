//! Closed-form extremals on the unit quaternions for left-invariant priors
//! `A(x) = x·a`.
//!
//! A segment from `x₀` is `x(t) = e^{τB}e^{τA}x₀` with `τ = t − t_start`, where
//! `e^{sB}e^{sA} = x₁x₀⁻¹` over the segment duration `s`. It is an extremal of
//! the left-invariant field whose generator is `x₀⁻¹ a x₀` (see
//! [`lifted_field`]); costs are unaffected because the metric is bi-invariant.

use log::debug;
use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geom::ManifoldTag;
use crate::ode::{ExtremalCurve, Segment};
use crate::prior::PriorField;
use crate::quaternion::{bracket, qexp, qlog, Quat};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentSolution {
    pub a_l: Vector3<f64>,
    pub b_l: Vector3<f64>,
    pub x_start: Quat,
    pub t_start: f64,
    pub t_end: f64,
}

/// `B = log(x₁x₀⁻¹e^{−sA})/s` on the principal branch.
pub fn solve_segment_bl(a_l: &Vector3<f64>, x0: Quat, x1: Quat, s: f64) -> Result<Vector3<f64>> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("segment duration must be positive, got {s}")));
    }
    let y = x1 * x0.inverse();
    match qlog(y * qexp(a_l, -s)) {
        Ok(l) => Ok(l / s),
        Err(Error::Antipodal { candidates }) => {
            Err(Error::Antipodal { candidates: candidates.into_iter().map(|c| c.map(|v| v / s)).collect() })
        }
        Err(e) => Err(e),
    }
}

impl SegmentSolution {
    pub fn solve(a_l: Vector3<f64>, x0: Quat, x1: Quat, t_start: f64, t_end: f64) -> Result<Self> {
        let b_l = solve_segment_bl(&a_l, x0, x1, t_end - t_start)?;
        Ok(Self { a_l, b_l, x_start: x0, t_start, t_end })
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Position and velocity at time `t`.
    pub fn state(&self, t: f64) -> (Quat, Quat) {
        let tau = t - self.t_start;
        let eb = qexp(&self.b_l, tau);
        let ea = qexp(&self.a_l, tau);
        let (pa, pb) = (Quat::pure(&self.a_l), Quat::pure(&self.b_l));
        let x = eb * ea * self.x_start;
        let v = pb * x + eb * pa * ea * self.x_start;
        (x, v)
    }

    /// Left-reduced velocity `x̄x′`.
    pub fn reduced_velocity(&self, t: f64) -> Vector3<f64> {
        let (x, v) = self.state(t);
        (x.conj() * v).im()
    }

    /// Sampled segment with `n` intervals.
    pub fn sample(&self, n: usize) -> ExtremalCurve {
        let field = lifted_field(&self.a_l, self.x_start);
        let times: Vec<f64> = (0..=n).map(|i| self.t_start + self.duration() * i as f64 / n as f64).collect();
        let (points, velocities): (Vec<_>, Vec<_>) = times
            .iter()
            .map(|&t| {
                let (x, v) = self.state(t);
                (x.to_dvector(), v.to_dvector())
            })
            .unzip();
        let b = crate::ode::energy(&field, &points[0], &velocities[0]);
        ExtremalCurve { manifold: ManifoldTag::UnitQuaternions, times, points, velocities, segments: vec![Segment { start: 0, b, c: None }], max_drift: 0.0 }
    }
}

pub fn segment_eval(seg: &SegmentSolution, t: f64) -> Quat {
    seg.state(t).0
}

/// `(t_end − t_start)‖B‖²`.
pub fn segment_cost(seg: &SegmentSolution) -> f64 {
    seg.duration() * seg.b_l.norm_squared()
}

/// Left-invariant field of which a segment starting at `x0` is an extremal.
pub fn lifted_field(a_l: &Vector3<f64>, x0: Quat) -> PriorField {
    PriorField::left_invariant(x0.conj().rotate(a_l))
}

/// `((1 − e^{−s·ad a})/ad a)·w` with `ad_a w = 2a × w`.
pub fn transport_operator(a_l: &Vector3<f64>, s: f64, w: &Vector3<f64>) -> Vector3<f64> {
    let n = a_l.norm();
    if n * s.abs() < 1e-4 {
        return transport_series(a_l, s, w, 12);
    }
    let axis = a_l / n;
    let par = axis * axis.dot(w);
    let perp = w - par;
    let theta = 2.0 * n;
    par * s + perp * ((s * theta).sin() / theta) - axis.cross(&perp) * ((1.0 - (s * theta).cos()) / theta)
}

/// Truncated series `Σₖ (−s·ad a)ᵏ s/(k+1)! w`.
pub fn transport_series(a_l: &Vector3<f64>, s: f64, w: &Vector3<f64>, terms: usize) -> Vector3<f64> {
    let mut term = *w * s;
    let mut acc = term;
    for k in 1..terms {
        term = bracket(a_l, &term) * (-s / (k as f64 + 1.0));
        acc += term;
    }
    acc
}

/// Observations `(xₖ, tₖ)` with strictly increasing times.
fn check_observations(obs: &[(Quat, f64)]) -> Result<()> {
    if obs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: obs.len() });
    }
    if obs.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        return Err(Error::InvalidInput("observation times must increase".into()));
    }
    Ok(())
}

/// Every segment of the interpolant for the prior `a`.
pub fn interpolant(a_l: &Vector3<f64>, obs: &[(Quat, f64)]) -> Result<Vec<SegmentSolution>> {
    check_observations(obs)?;
    obs.windows(2).map(|w| SegmentSolution::solve(*a_l, w[0].0, w[1].0, w[0].1, w[1].1)).collect()
}

/// `J = Σ sₖ‖Bₖ‖²` as a function of the prior.
pub fn prior_cost(a_l: &Vector3<f64>, obs: &[(Quat, f64)]) -> Result<f64> {
    Ok(interpolant(a_l, obs)?.iter().map(segment_cost).sum())
}

/// Exact gradient of [`prior_cost`]: `−2 Σ ((1 − e^{−sₖ ad a})/ad a) Bₖ`.
pub fn prior_cost_gradient(a_l: &Vector3<f64>, obs: &[(Quat, f64)]) -> Result<Vector3<f64>> {
    let segs = interpolant(a_l, obs)?;
    Ok(segs.iter().fold(Vector3::zeros(), |acc, s| acc - transport_operator(a_l, s.duration(), &s.b_l) * 2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stationarity {
    pub b: Vec<Vector3<f64>>,
    /// `Σ sₖ·((1 − e^{−sₖ ad a})/ad a) Bₖ`, zero at an optimal prior.
    pub b_bar: Vector3<f64>,
    pub sum_b: Vector3<f64>,
}

pub fn stationarity_residual(a_l: &Vector3<f64>, obs: &[(Quat, f64)]) -> Result<Stationarity> {
    let segs = interpolant(a_l, obs)?;
    let b: Vec<Vector3<f64>> = segs.iter().map(|s| s.b_l).collect();
    let b_bar = segs.iter().fold(Vector3::zeros(), |acc, s| acc + transport_operator(a_l, s.duration(), &s.b_l) * s.duration());
    let sum_b = b.iter().sum();
    Ok(Stationarity { b, b_bar, sum_b })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GradientMode {
    /// Closed-form gradient through the transport operator.
    Analytic,
    /// Central differences with the given step.
    FiniteDifference(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub gradient: GradientMode,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { gradient: GradientMode::Analytic, grad_tol: 1e-9, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorFit {
    pub a_l: Vector3<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn cost_gradient(a: &Vector3<f64>, obs: &[(Quat, f64)], mode: GradientMode) -> Result<Vector3<f64>> {
    match mode {
        GradientMode::Analytic => prior_cost_gradient(a, obs),
        GradientMode::FiniteDifference(h) => {
            let mut g = Vector3::zeros();
            for k in 0..3 {
                let mut p = *a;
                let mut m = *a;
                p[k] += h;
                m[k] -= h;
                g[k] = (prior_cost(&p, obs)? - prior_cost(&m, obs)?) / (2.0 * h);
            }
            Ok(g)
        }
    }
}

/// Minimize `Σ sₖ‖Bₖ(a)‖²` over `a ∈ ℝ³` by BFGS with backtracking.
pub fn optimize_prior_al(obs: &[(Quat, f64)], init: &Vector3<f64>, opts: &OptimizeOptions) -> Result<PriorFit> {
    let mut a = *init;
    let mut f = prior_cost(&a, obs)?;
    let mut g = cost_gradient(&a, obs, opts.gradient)?;
    let mut h_inv = Matrix3::identity();
    for iter in 0..opts.max_iter {
        if g.norm() < opts.grad_tol {
            return Ok(PriorFit { a_l: a, cost: f, iterations: iter, grad_norm: g.norm() });
        }
        let mut dir = -(h_inv * g);
        if dir.dot(&g) >= 0.0 {
            h_inv = Matrix3::identity();
            dir = -g;
        }
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let trial = a + dir * step;
            if let Ok(ft) = prior_cost(&trial, obs) {
                if ft <= f + 1e-4 * step * g.dot(&dir) {
                    next = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((a_new, f_new)) = next else {
            // no decrease representable in floating point: a stationary point to working precision
            if g.norm() < 1e-6 * (1.0 + f) {
                return Ok(PriorFit { a_l: a, cost: f, iterations: iter, grad_norm: g.norm() });
            }
            return Err(Error::LineSearchStall { iteration: iter, grad_norm: g.norm() });
        };
        let g_new = cost_gradient(&a_new, obs, opts.gradient)?;
        if f - f_new <= 4.0 * f64::EPSILON * f.abs() && g_new.norm() >= g.norm() && g.norm() < 1e-6 * (1.0 + f) {
            // the cost can no longer resolve the decrease and the gradient stopped shrinking
            return Ok(PriorFit { a_l: a, cost: f, iterations: iter, grad_norm: g.norm() });
        }
        let s = a_new - a;
        let y = g_new - g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let i = Matrix3::identity();
            h_inv = (i - s * y.transpose() * rho) * h_inv * (i - y * s.transpose() * rho) + s * s.transpose() * rho;
        }
        debug!("prior fit iteration {iter}: cost {f_new:.12}, |g| {:.3e}", g_new.norm());
        a = a_new;
        f = f_new;
        g = g_new;
    }
    if g.norm() < opts.grad_tol {
        return Ok(PriorFit { a_l: a, cost: f, iterations: opts.max_iter, grad_norm: g.norm() });
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: g.norm() })
}

/// Optimal prior for three equally spaced observations: `e^{sA}` is the
/// geodesic midpoint `y₁·exp(½log(y₁⁻¹y₂))`, and `e^{sB₁}e^{sA} = y₁`.
pub fn three_point_al(x0: Quat, x1: Quat, x2: Quat, s: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("segment duration must be positive, got {s}")));
    }
    let y1 = x1 * x0.inverse();
    let y2 = x2 * x1.inverse();
    let mid = y1 * qexp(&qlog(y1.inverse() * y2)?, 0.5);
    let a = qlog(mid)? / s;
    let b1 = qlog(y1 * mid.inverse())? / s;
    Ok((a, b1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::EmbeddedPoint;
    use crate::geom::TangentVec;
    use crate::ode::integrate_ivp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn s3ex() -> (Vector3<f64>, Vector3<f64>, Quat) {
        (Vector3::new(-0.5, -0.5, 0.3), Vector3::new(0.2, 0.2, 0.2), Quat::new(-0.0359448, -0.228089, -0.937324, -0.260972))
    }

    #[test]
    fn five_observation_fit() {
        let xs = [
            [1.0, 0.0, 0.0, 0.0],
            [0.1304, 0.7923, 0.4574, 0.3821],
            [0.5809, 0.0381, 0.3385, 0.7393],
            [0.5523, 0.6251, 0.5513, 0.0172],
            [0.2810, 0.1241, 0.6817, 0.6640],
        ];
        let obs: Vec<(Quat, f64)> = xs.iter().enumerate().map(|(k, x)| (Quat::from_slice(x).normalize(), 0.25 * k as f64)).collect();
        let reference = Vector3::new(1.40398, 0.196766, 1.05334);
        for init in [Vector3::zeros(), reference] {
            let fit = optimize_prior_al(&obs, &init, &OptimizeOptions::default()).unwrap();
            assert!((fit.a_l - reference).amax() < 1e-3, "{}", fit.a_l);
            assert!(stationarity_residual(&fit.a_l, &obs).unwrap().sum_b.norm() < 1e-6);
        }
        let b1 = stationarity_residual(&reference, &obs).unwrap().b[0];
        assert!((b1 - Vector3::new(2.7669, 2.3129, 2.0736)).amax() < 2e-3);
    }

    fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
        Quat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize()
    }

    fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
        Vector3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
    }

    #[test]
    fn worked_segment() {
        let (a, b, x1) = s3ex();
        let seg = SegmentSolution { a_l: a, b_l: b, x_start: Quat::ONE, t_start: 0.0, t_end: PI };
        let x = segment_eval(&seg, PI);
        for (p, q) in x.to_array().iter().zip(x1.to_array()) {
            assert!((p - q).abs() < 1e-4);
        }
        let back = solve_segment_bl(&a, Quat::ONE, x, PI).unwrap();
        assert!((back - b).norm() < 1e-12);
        let back = solve_segment_bl(&a, Quat::ONE, x1, PI).unwrap();
        assert!((back - b).norm() < 1e-4);
        assert_eq!(segment_eval(&seg, 0.0), Quat::ONE);
        assert!((segment_cost(&seg) - PI * 0.12).abs() < 1e-15);
        let doubled = SegmentSolution { t_end: 2.0 * PI, ..seg };
        assert!((segment_cost(&doubled) - 2.0 * segment_cost(&seg)).abs() < 1e-14);
    }

    #[test]
    fn segment_cost_matches_quadrature() {
        let (a, b, _) = s3ex();
        let x0 = Quat::new(0.3, -0.1, 0.8, 0.5).normalize();
        let seg = SegmentSolution { a_l: a, b_l: b, x_start: x0, t_start: 0.5, t_end: 0.5 + PI };
        let curve = seg.sample(2000);
        let j = crate::ode::functional_j(&curve, &lifted_field(&a, x0)).unwrap();
        assert!((j - segment_cost(&seg)).abs() < 1e-6);
    }

    #[test]
    fn integral_curves_need_no_correction() {
        let a = Vector3::new(0.4, -1.0, 0.2);
        let x0 = Quat::new(0.5, 0.5, -0.5, 0.5);
        let x1 = qexp(&a, 0.7) * x0;
        assert!(solve_segment_bl(&a, x0, x1, 0.7).unwrap().norm() < 1e-14);
        let (t0, t1, ts) = (0.0, 1.0, 1.6);
        let x1 = qexp(&a, ts - t0) * x0;
        let b = solve_segment_bl(&a, x0, x1, t1 - t0).unwrap();
        assert!((b - a * ((ts - t1) / (t1 - t0))).norm() < 1e-12);
    }

    #[test]
    fn antipodal_segment_lists_branches() {
        let a = Vector3::zeros();
        match solve_segment_bl(&a, Quat::ONE, -Quat::ONE, 2.0) {
            Err(Error::Antipodal { candidates }) => {
                assert_eq!(candidates.len(), 2);
                assert!((Vector3::from(candidates[0]).norm() - PI / 2.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transport_examples() {
        let w = Vector3::new(0.3, -0.2, 1.1);
        assert_eq!(transport_operator(&Vector3::zeros(), 0.7, &w), w * 0.7);
        let a = Vector3::new(1.0, 2.0, -0.5);
        let got = transport_operator(&a, 0.7, &(a * 0.3));
        assert!((got - a * 0.21).norm() < 1e-15);
    }

    /// Seeded random priors and observations on S³.
    fn random_observations(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<(Quat, f64)> {
        let a = random_vec(rng, 1.5);
        let mut x = random_quat(rng);
        let mut out = vec![(x, 0.0)];
        for k in 1..=n {
            x = qexp(&random_vec(rng, spread), 1.0) * qexp(&a, 0.25) * x;
            out.push((x, 0.25 * k as f64));
        }
        out
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let obs = random_observations(&mut rng, 4, 0.4);
            let a = random_vec(&mut rng, 1.0);
            let g = prior_cost_gradient(&a, &obs).unwrap();
            let fd = cost_gradient(&a, &obs, GradientMode::FiniteDifference(1e-6)).unwrap();
            assert!((g - fd).norm() < 1e-6 * (1.0 + g.norm()), "{g} {fd}");
        }
    }

    #[test]
    fn recovers_generator_of_integral_curve() {
        let a = Vector3::new(0.9, -0.4, 0.3);
        let x0 = Quat::new(0.2, 0.4, -0.1, 0.9).normalize();
        let obs: Vec<(Quat, f64)> = (0..5).map(|k| (qexp(&a, 0.25 * k as f64) * x0, 0.25 * k as f64)).collect();
        let st = stationarity_residual(&a, &obs).unwrap();
        assert!(st.b_bar.norm() < 1e-12 && st.sum_b.norm() < 1e-12);
        let fit = optimize_prior_al(&obs, &Vector3::zeros(), &OptimizeOptions::default()).unwrap();
        assert!((fit.a_l - a).norm() < 1e-8);
        assert!(fit.cost < 1e-16);
    }

    #[test]
    fn optimum_orthogonality_and_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..5 {
            let obs = random_observations(&mut rng, 4, 0.3);
            let fit = optimize_prior_al(&obs, &Vector3::zeros(), &OptimizeOptions::default()).unwrap();
            let st = stationarity_residual(&fit.a_l, &obs).unwrap();
            let weighted: Vector3<f64> = st.b.iter().map(|b| b * 0.25).sum();
            assert!(fit.a_l.dot(&weighted).abs() < 1e-6);
            assert!(st.sum_b.norm() < 1e-6);
            assert!(st.b_bar.norm() < 1e-8);
            let fd = optimize_prior_al(&obs, &Vector3::zeros(), &OptimizeOptions { gradient: GradientMode::FiniteDifference(1e-7), ..Default::default() });
            if let Ok(fd) = fd {
                assert!((fd.a_l - fit.a_l).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn three_points() {
        let g = Quat::new(0.9, 0.1, -0.3, 0.2).normalize();
        let x0 = Quat::new(0.1, 0.7, 0.1, -0.2).normalize();
        let (x1, x2) = (g * x0, g * g * x0);
        let (a, b1) = three_point_al(x0, x1, x2, 0.5).unwrap();
        assert!((qexp(&a, 0.5) - g).norm() < 1e-14);
        assert!(b1.norm() < 1e-13);
        let (a, b1) = three_point_al(x0, x0, x0, 0.5).unwrap();
        assert!(a.norm() < 1e-15 && b1.norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..5 {
            let obs = random_observations(&mut rng, 2, 0.5);
            let s = 0.25;
            let (a, b1) = three_point_al(obs[0].0, obs[1].0, obs[2].0, s).unwrap();
            // the two-segment interpolant reaches both observations
            let segs = interpolant(&a, &obs).unwrap();
            assert!((segs[0].b_l - b1).norm() < 1e-10);
            assert!((segs[1].b_l + b1).norm() < 1e-10);
            let cost = prior_cost(&a, &obs).unwrap();
            for _ in 0..200 {
                let p = a + random_vec(&mut rng, 1e-2);
                assert!(prior_cost(&p, &obs).unwrap() >= cost - 1e-14);
            }
            let fit = optimize_prior_al(&obs, &a, &OptimizeOptions::default()).unwrap();
            assert!((fit.a_l - a).norm() < 1e-8);
        }
    }

    #[test]
    fn segment_matches_integrator() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for _ in 0..5 {
            let a = random_vec(&mut rng, 1.0);
            let b = random_vec(&mut rng, 1.0);
            let x0 = random_quat(&mut rng);
            let seg = SegmentSolution { a_l: a, b_l: b, x_start: x0, t_start: 0.0, t_end: 2.0 };
            let field = lifted_field(&a, x0);
            let p0 = EmbeddedPoint::new(ManifoldTag::UnitQuaternions, x0.to_dvector()).unwrap();
            let (_, v0) = seg.state(0.0);
            let curve = integrate_ivp(&field, &p0, &TangentVec::new(p0.clone(), v0.to_dvector()).unwrap(), 0.0, 2.0, 1e-3).unwrap();
            for (t, x) in curve.times.iter().zip(&curve.points).step_by(100) {
                assert!((segment_eval(&seg, *t).to_dvector() - x).norm() < 1e-6);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn transport_matches_series(a in proptest::array::uniform3(-0.2f64..0.2), w in proptest::array::uniform3(-2.0f64..2.0), s in 0.0f64..1.0) {
            let (a, w) = (Vector3::from(a), Vector3::from(w));
            let series = transport_series(&a, s, &w, 12);
            let closed = transport_operator(&a, s, &w);
            prop_assert!((series - closed).norm() <= 1e-10);
        }

        #[test]
        fn norm_identities(a in proptest::array::uniform3(-1.5f64..1.5), b in proptest::array::uniform3(-1.5f64..1.5), q in proptest::array::uniform4(-1.0f64..1.0)) {
            let (a, b) = (Vector3::from(a), Vector3::from(b));
            let x0 = Quat::from_slice(&q);
            prop_assume!(x0.norm() > 0.1);
            let x0 = x0.normalize();
            let seg = SegmentSolution { a_l: a, b_l: b, x_start: x0, t_start: 0.0, t_end: 3.0 };
            let field = lifted_field(&a, x0);
            for i in 0..50 {
                let t = 3.0 * i as f64 / 49.0;
                let (x, v) = seg.state(t);
                let av = Quat::from_dvector(&field.value_at(&x.to_dvector()));
                prop_assert!((v.norm() - (a + b).norm()).abs() < 1e-9);
                prop_assert!(((v - av).norm() - b.norm()).abs() < 1e-9);
                prop_assert!((v.dot(av) - (a + b).dot(&a)).abs() < 1e-9);
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
            }
        }

        /// V(t) = Ad(e^{−τA})V(0) in the reduced frame of the lifted field.
        #[test]
        fn reduced_velocity_is_transported(a in proptest::array::uniform3(-1.5f64..1.5), b in proptest::array::uniform3(-1.5f64..1.5), t in 0.0f64..3.0) {
            let (a, b) = (Vector3::from(a), Vector3::from(b));
            let x0 = Quat::new(0.3, -0.5, 0.2, 0.7).normalize();
            let seg = SegmentSolution { a_l: a, b_l: b, x_start: x0, t_start: 0.0, t_end: 3.0 };
            let lifted = x0.conj().rotate(&a);
            let h = 1e-5;
            let fd = |t: f64| {
                let x = segment_eval(&seg, t);
                let v = (segment_eval(&seg, t + h) - segment_eval(&seg, t - h)) * (0.5 / h);
                (x.conj() * v).im()
            };
            let want = qexp(&lifted, -t).rotate(&fd(0.0));
            prop_assert!((fd(t) - want).norm() < 1e-8);
            prop_assert!((seg.reduced_velocity(t) - want).norm() < 1e-8);
        }
    }
}
