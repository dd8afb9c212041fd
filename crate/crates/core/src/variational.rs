//! Direct minimization of the discretized functional over sampled curves with
//! pinned waypoints.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{EmbeddedPoint, ManifoldTag};
use crate::linalg::simpson;
use crate::prior::PriorField;

/// Samples of a curve on a time grid; `pinned` lists the indices held fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    pub manifold: ManifoldTag,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub pinned: Vec<usize>,
}

impl DiscreteCurve {
    pub fn new(manifold: ManifoldTag, times: Vec<f64>, points: Vec<DVector<f64>>, mut pinned: Vec<usize>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: points.len() });
        }
        if times.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: times.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        for p in &points {
            if p.len() != manifold.ambient_dim() {
                return Err(Error::DimensionMismatch { expected: manifold.ambient_dim(), found: p.len() });
            }
            let violation = manifold.constraint_violation(p);
            if violation > crate::geom::TOL_MANIFOLD {
                return Err(Error::NotOnManifold { manifold, violation });
            }
        }
        pinned.sort_unstable();
        pinned.dedup();
        if pinned.last().is_some_and(|&i| i >= times.len()) {
            return Err(Error::InvalidInput("pinned index out of range".into()));
        }
        Ok(Self { manifold, times, points, pinned })
    }

    /// Geodesic interpolation between consecutive waypoints with `per_segment`
    /// intervals in each segment; the waypoints are pinned.
    pub fn geodesic_init(waypoints: &[(f64, EmbeddedPoint)], per_segment: usize) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: waypoints.len() });
        }
        if per_segment < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: per_segment });
        }
        let m = waypoints[0].1.manifold();
        let mut times = vec![waypoints[0].0];
        let mut points = vec![waypoints[0].1.coords().clone()];
        let mut pinned = vec![0];
        for w in waypoints.windows(2) {
            let ((t0, x0), (t1, x1)) = (&w[0], &w[1]);
            x1.ensure_on(m)?;
            if !(t1 > t0) {
                return Err(Error::InvalidInput("waypoint times must be strictly increasing".into()));
            }
            let v = m.log(x0.coords(), x1.coords());
            for k in 1..=per_segment {
                let s = k as f64 / per_segment as f64;
                times.push(t0 + (t1 - t0) * s);
                points.push(if k == per_segment { x1.coords().clone() } else { m.retract(&m.geodesic(x0.coords(), &v, s)) });
            }
            pinned.push(times.len() - 1);
        }
        Self::new(m, times, points, pinned)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn free_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 0..self.len() {
            if self.pinned.binary_search(&i).is_ok() {
                if i > start {
                    runs.push((start, i));
                }
                start = i + 1;
            }
        }
        if start < self.len() {
            runs.push((start, self.len()));
        }
        runs
    }
}

/// Time-reversed curve `x̄(u) = x(−u)`; pinned indices follow their points.
pub fn reverse_data(curve: &DiscreteCurve) -> DiscreteCurve {
    let n = curve.len();
    let mut pinned: Vec<usize> = curve.pinned.iter().map(|&i| n - 1 - i).collect();
    pinned.sort_unstable();
    DiscreteCurve {
        manifold: curve.manifold,
        times: curve.times.iter().rev().map(|t| -t).collect(),
        points: curve.points.iter().rev().cloned().collect(),
        pinned,
    }
}

/// Waypoints in reverse order at negated times.
pub fn reverse_scenario(waypoints: &[(f64, EmbeddedPoint)]) -> Vec<(f64, EmbeddedPoint)> {
    waypoints.iter().rev().map(|(t, x)| (-t, x.clone())).collect()
}

fn residuals(curve: &DiscreteCurve, a: &PriorField, points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    (0..points.len() - 1)
        .map(|i| {
            let h = curve.times[i + 1] - curve.times[i];
            (&points[i + 1] - &points[i]) / h - a.value_at(&points[i])
        })
        .collect()
}

fn j_of(curve: &DiscreteCurve, a: &PriorField, points: &[DVector<f64>]) -> f64 {
    let m = curve.manifold;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (i, f) in residuals(curve, a, points).iter().enumerate() {
        let term = (curve.times[i + 1] - curve.times[i]) * m.norm_sq(f);
        // Neumaier summation
        let t = sum + term;
        comp += if f64::abs(sum) >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    sum + comp
}

/// `Σ hᵢ ‖(pᵢ₊₁ − pᵢ)/hᵢ − A(pᵢ)‖²` in the manifold's ambient form.
pub fn discrete_j(curve: &DiscreteCurve, a: &PriorField) -> f64 {
    j_of(curve, a, &curve.points)
}

fn field_jacobian(a: &PriorField, x: &DVector<f64>) -> DMatrix<f64> {
    a.ambient_jacobian(x).unwrap_or_else(|| {
        let n = x.len();
        let h = 1e-6 * (1.0 + x.norm());
        let mut j = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            j.set_column(k, &((a.value_at(&xp) - a.value_at(&xm)) / (2.0 * h)));
        }
        j
    })
}

/// Ambient gradient of [`discrete_j`] with respect to every sample.
pub fn discrete_j_gradient(curve: &DiscreteCurve, a: &PriorField) -> Vec<DVector<f64>> {
    gradient_of(curve, a, &curve.points)
}

fn gradient_of(curve: &DiscreteCurve, a: &PriorField, points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let g = curve.manifold.gram_diag();
    let f = residuals(curve, a, points);
    let mut grad = vec![DVector::zeros(g.len()); points.len()];
    for (i, fi) in f.iter().enumerate() {
        let gf = fi.component_mul(&g) * 2.0;
        let h = curve.times[i + 1] - curve.times[i];
        grad[i + 1] += &gf;
        grad[i] -= &gf;
        grad[i] -= field_jacobian(a, &points[i]).transpose() * &gf * h;
    }
    grad
}

/// Gradient restricted to free samples, each projected onto the tangent
/// space along the Euclidean normal of the constraint.
fn projected_gradient(curve: &DiscreteCurve, a: &PriorField, points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let m = curve.manifold;
    let mut grad = gradient_of(curve, a, points);
    for (i, gi) in grad.iter_mut().enumerate() {
        if curve.pinned.binary_search(&i).is_ok() {
            gi.fill(0.0);
        } else {
            *gi = m.project_euclidean(&points[i], gi);
        }
    }
    grad
}

/// Solve the weighted chain Laplacian plus a mass term on each free run,
/// with the pinned neighbours held at zero.
fn sobolev_solve(curve: &DiscreteCurve, runs: &[(usize, usize)], grad: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = curve.len();
    let dim = grad[0].len();
    let mut out = vec![DVector::zeros(dim); n];
    let w = |i: usize| 2.0 / (curve.times[i + 1] - curve.times[i]);
    for &(s, e) in runs {
        let len = e - s;
        let mut diag = vec![0.0; len];
        let mut off = vec![0.0; len];
        for k in 0..len {
            let i = s + k;
            let mut d = 0.0;
            let mut mass = 0.0;
            if i > 0 {
                d += w(i - 1);
                mass += curve.times[i] - curve.times[i - 1];
            }
            if i + 1 < n {
                d += w(i);
                mass += curve.times[i + 1] - curve.times[i];
                off[k] = -w(i);
            }
            diag[k] = d + mass;
        }
        // Thomas algorithm, all coordinates at once
        let mut c = vec![0.0; len];
        let mut rhs: Vec<DVector<f64>> = (s..e).map(|i| grad[i].clone()).collect();
        let mut denom = diag[0];
        c[0] = off[0] / denom;
        rhs[0] /= denom;
        for k in 1..len {
            denom = diag[k] - off[k - 1] * c[k - 1];
            c[k] = off[k] / denom;
            let prev = rhs[k - 1].clone();
            rhs[k] = (&rhs[k] - prev * off[k - 1]) / denom;
        }
        for k in (0..len.saturating_sub(1)).rev() {
            let next = rhs[k + 1].clone();
            rhs[k] -= next * c[k];
        }
        for (k, r) in rhs.into_iter().enumerate() {
            out[s + k] = r;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-8, max_iter: 20000, armijo: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimized {
    pub curve: DiscreteCurve,
    /// Value of the discrete objective.
    pub j: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn stacked_norm(v: &[DVector<f64>]) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// Projected descent on [`discrete_j`] over the unpinned samples, using the
/// chain-Laplacian metric for the search direction and backtracking for the
/// step. Stops when the projected gradient falls below `grad_tol`, or when
/// the predicted decrease is below rounding level of the objective.
pub fn minimize_curve(init: &DiscreteCurve, a: &PriorField, opts: &MinimizeOptions) -> Result<Minimized> {
    let m = init.manifold;
    if a.manifold() != m {
        return Err(Error::ManifoldMismatch { expected: m, found: a.manifold() });
    }
    let runs = init.free_runs();
    let mut points = init.points.clone();
    let mut j = j_of(init, a, &points);
    let mut grad = projected_gradient(init, a, &points);
    let mut gnorm = stacked_norm(&grad);
    let mut iterations = 0;
    while gnorm >= opts.grad_tol && iterations < opts.max_iter {
        iterations += 1;
        let mut dir = sobolev_solve(init, &runs, &grad);
        for &(s, e) in &runs {
            for i in s..e {
                dir[i] = m.project_euclidean(&points[i], &dir[i]);
            }
        }
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
        if !(slope > 0.0) {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let mut trial = points.clone();
            for &(s, e) in &runs {
                for i in s..e {
                    trial[i] = m.retract(&(&points[i] - &dir[i] * step));
                }
            }
            let jt = j_of(init, a, &trial);
            if jt <= j - opts.armijo * step * slope {
                accepted = Some((trial, jt));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, jt)) => {
                points = trial;
                j = jt;
                grad = projected_gradient(init, a, &points);
                gnorm = stacked_norm(&grad);
            }
            None if slope <= 1e-12 * (1.0 + j.abs()) => break,
            None => return Err(Error::LineSearchStall { iteration: iterations, grad_norm: gnorm }),
        }
    }
    log::debug!("minimize_curve: {iterations} iterations, J = {j}, |grad| = {gnorm:.3e}");
    let curve = DiscreteCurve { points, ..init.clone() };
    Ok(Minimized { curve, j, iterations, grad_norm: gnorm })
}

/// Second-order velocities on a possibly non-uniform grid.
pub fn finite_difference_velocities(t: &[f64], p: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = t.len();
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b, c) = if i == 0 {
            (0, 1, 2)
        } else if i == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        // derivative at t[i] of the quadratic through samples a, b, c
        let (ta, tb, tc, ti) = (t[a], t[b], t[c], t[i]);
        let la = ((ti - tb) + (ti - tc)) / ((ta - tb) * (ta - tc));
        let lb = ((ti - ta) + (ti - tc)) / ((tb - ta) * (tb - tc));
        let lc = ((ti - ta) + (ti - tb)) / ((tc - ta) * (tc - tb));
        v.push(&p[a] * la + &p[b] * lb + &p[c] * lc);
    }
    v
}

/// `J` of a sampled curve by Simpson quadrature between consecutive pinned
/// samples, with velocities from second-order differences on each piece.
pub fn report_j(curve: &DiscreteCurve, a: &PriorField) -> Result<f64> {
    let m = curve.manifold;
    let mut cuts: Vec<usize> = curve.pinned.clone();
    if cuts.first() != Some(&0) {
        cuts.insert(0, 0);
    }
    if cuts.last() != Some(&(curve.len() - 1)) {
        cuts.push(curve.len() - 1);
    }
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1] + 1);
        if e - s < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: e - s });
        }
        let (t, p) = (&curve.times[s..e], &curve.points[s..e]);
        let v = finite_difference_velocities(t, p);
        let f: Vec<f64> = p.iter().zip(&v).map(|(x, v)| m.norm_sq(&(v - a.value_at(x)))).collect();
        total += simpson(t, &f).ok_or(Error::TooFewSamples { needed: 3, got: e - s })?;
    }
    Ok(total)
}
