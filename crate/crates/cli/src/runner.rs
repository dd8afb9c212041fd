//! Dispatch a validated scenario to the solvers and collect curves and a
//! summary.

use std::collections::BTreeMap;

use condex_core::affine::{affine_parts, solve_endpoint_d, AffineExtremal};
use condex_core::linalg::expm;
use condex_core::ode::{self, functional_j, integrate_ivp, reverse_curve, shoot_multistart, track_sum, ExtremalCurve, ShootOptions};
use condex_core::quat_group::{lifted_field, optimize_prior_al, segment_cost, stationarity_residual, OptimizeOptions, SegmentSolution};
use condex_core::space_forms::{conserved_constants, HorizontalForm, WeierstrassCurve};
use condex_core::variational::{finite_difference_velocities, minimize_curve, report_j, reverse_data, reverse_scenario, DiscreteCurve, MinimizeOptions};
use condex_core::{DMatrix, DVector, EmbeddedPoint, ManifoldTag, PriorField, Quat, Vector3};
use log::info;
use serde_json::{json, Value};

use crate::config::{PriorSpec, Scenario, SolverKind};
use crate::error::{CliError, CliResult};

/// A sampled curve with the per-sample columns written to CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveData {
    pub label: String,
    pub manifold: ManifoldTag,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    /// `‖x′ − A(x)‖²`.
    pub integrand: Vec<f64>,
    /// Energy minus its value at the segment start.
    pub res_b: Vec<f64>,
    /// Rotational quantity minus its value at the segment start; zero where
    /// the prior has none.
    pub res_c: Vec<f64>,
}

impl CurveData {
    /// Columns for an extremal whose segment `k` belongs to `fields(k)`.
    pub fn from_extremal(label: &str, curve: &ExtremalCurve, fields: &dyn Fn(usize) -> PriorField) -> Self {
        let ranges = curve.segment_ranges();
        let mut integrand = Vec::with_capacity(curve.len());
        let mut res_b = Vec::with_capacity(curve.len());
        let mut res_c = Vec::with_capacity(curve.len());
        let m = curve.manifold;
        for (k, range) in ranges.into_iter().enumerate() {
            let a = fields(k);
            let (x0, v0) = (&curve.points[range.start], &curve.velocities[range.start]);
            let b0 = ode::energy(&a, x0, v0);
            let c0 = ode::rotational(&a, x0, v0);
            for i in range {
                let (x, v) = (&curve.points[i], &curve.velocities[i]);
                integrand.push(m.norm_sq(&(v - a.value_at(x))));
                res_b.push(ode::energy(&a, x, v) - b0);
                res_c.push(match (c0, ode::rotational(&a, x, v)) {
                    (Some(c0), Some(c)) => c - c0,
                    _ => 0.0,
                });
            }
        }
        CurveData {
            label: label.to_string(),
            manifold: m,
            times: curve.times.clone(),
            points: curve.points.clone(),
            velocities: curve.velocities.clone(),
            integrand,
            res_b,
            res_c,
        }
    }

    /// Columns for a discrete curve, with velocities by finite differences on
    /// each pinned run.
    pub fn from_discrete(label: &str, curve: &DiscreteCurve, a: &PriorField) -> Self {
        let mut velocities = Vec::with_capacity(curve.len());
        let mut segments = Vec::new();
        for w in curve.pinned.windows(2) {
            let (i, j) = (w[0], w[1]);
            let v = finite_difference_velocities(&curve.times[i..=j], &curve.points[i..=j]);
            if i > 0 {
                // the junction sample belongs to the later run
                velocities.pop();
            }
            segments.push(ode::Segment { start: i, b: ode::energy(a, &curve.points[i], &v[0]), c: None });
            velocities.extend(v);
        }
        let ex = ExtremalCurve {
            manifold: curve.manifold,
            times: curve.times.clone(),
            points: curve.points.clone(),
            velocities,
            segments,
            max_drift: 0.0,
        };
        Self::from_extremal(label, &ex, &|_| a.clone())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Everything one run produces.
#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub hash: String,
    pub manifold: ManifoldTag,
    pub curves: Vec<CurveData>,
    /// Integral curves of the prior, drawn as reference.
    pub orbits: Vec<Vec<DVector<f64>>>,
    pub summary: BTreeMap<String, Value>,
}

/// The prior as the solvers see it.
enum Prior {
    Field(PriorField),
    /// Group prior: each segment from `xₖ` follows `lifted_field(a, xₖ)`.
    Group(Vector3<f64>),
}

impl Prior {
    fn field_at(&self, start: &EmbeddedPoint) -> PriorField {
        match self {
            Prior::Field(a) => a.clone(),
            Prior::Group(a) => lifted_field(a, Quat::from_dvector(start.coords())),
        }
    }
}

fn vec_json(v: &[f64]) -> Value {
    json!(v)
}

fn v3(v: &Vector3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn solver_err(solver: &'static str) -> impl Fn(condex_core::Error) -> CliError {
    move |source| CliError::Solver { solver, source }
}

struct Run<'a> {
    scn: &'a Scenario,
    prior: Prior,
    curves: Vec<CurveData>,
    summary: BTreeMap<String, Value>,
}

impl Run<'_> {
    fn put(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }

    fn segment_fields(&self) -> Vec<PriorField> {
        self.scn.waypoints.iter().map(|(_, p)| self.prior.field_at(p)).collect()
    }

    fn record(&mut self, label: &str, curve: &ExtremalCurve, fields: &[PriorField]) -> CliResult<f64> {
        let j = if fields.len() == 1 {
            functional_j(curve, &fields[0])
        } else {
            curve
                .segment_ranges()
                .into_iter()
                .enumerate()
                .map(|(k, r)| {
                    let part = ExtremalCurve {
                        manifold: curve.manifold,
                        times: curve.times[r.clone()].to_vec(),
                        points: curve.points[r.clone()].to_vec(),
                        velocities: curve.velocities[r.clone()].to_vec(),
                        segments: vec![ode::Segment { start: 0, b: curve.segments[k].b, c: None }],
                        max_drift: 0.0,
                    };
                    functional_j(&part, &fields[k.min(fields.len() - 1)])
                })
                .collect::<condex_core::Result<Vec<f64>>>()
                .map(|v| v.iter().sum())
        }
        .map_err(solver_err("quadrature"))?;
        let data = CurveData::from_extremal(label, curve, &|k| fields[k.min(fields.len() - 1)].clone());
        let worst = |v: &[f64]| v.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        self.put(&format!("{label}.J"), json!(j));
        self.put(&format!("{label}.max_res_b"), json!(worst(&data.res_b)));
        self.put(&format!("{label}.max_res_c"), json!(worst(&data.res_c)));
        self.curves.push(data);
        Ok(j)
    }

    fn closed_form(&mut self) -> CliResult<bool> {
        let scn = self.scn;
        let n = scn.config.grid.n;
        match (&scn.config.prior, scn.manifold) {
            (PriorSpec::Constant { .. } | PriorSpec::Affine { .. }, _) => {
                let Prior::Field(a) = &self.prior else { unreachable!() };
                let a = a.clone();
                let (b, c) = affine_parts(&a).map_err(solver_err("closed_form"))?;
                if scn.waypoints.len() >= 2 {
                    let mut segs = Vec::new();
                    for w in scn.waypoints.windows(2) {
                        let ((t0, x0), (t1, x1)) = (&w[0], &w[1]);
                        let d = solve_endpoint_d(&b, &c, x0.coords(), x1.coords(), *t0, *t1).map_err(solver_err("closed_form"))?;
                        let sol = AffineExtremal::new(b.clone(), c.clone(), x0.coords().clone(), d, *t0).map_err(solver_err("closed_form"))?;
                        segs.push(sol.sample(*t1, n));
                    }
                    let curve = track_sum(segs).map_err(solver_err("closed_form"))?;
                    self.record("closed_form", &curve, std::slice::from_ref(&a))?;
                    self.reversed("closed_form", &curve)?;
                }
                if let Some((x0, v0)) = &scn.initial {
                    let t0 = scn.waypoints[0].0;
                    let d = expm(&(b.transpose() * t0)) * (&v0.vec - a.value_at(x0.coords()));
                    let sol = AffineExtremal::new(b, c, x0.coords().clone(), d, t0).map_err(solver_err("closed_form"))?;
                    let curve = sol.sample(t0 + scn.config.horizon.unwrap_or(0.0), n);
                    self.record("closed_form_ivp", &curve, &[a])?;
                }
                Ok(true)
            }
            (PriorSpec::Symmetric { beta, gamma }, ManifoldTag::SpaceForm(sig)) => {
                let Some((x0, v0)) = &scn.initial else { return Ok(false) };
                let (t0, horizon) = (scn.waypoints[0].0, scn.config.horizon.unwrap_or(0.0));
                let (b, c, d) = conserved_constants(sig, *beta, *gamma, x0, v0);
                self.put("constants.b", json!(b));
                self.put("constants.c", json!(c));
                self.put("constants.d", json!(d));
                let mut curve = if *gamma == 0.0 {
                    let f = HorizontalForm::from_initial_data(sig, *beta, x0, v0).map_err(solver_err("closed_form"))?;
                    self.put("horizontal.lambda", json!(f.lambda));
                    self.put("horizontal.epsilon", json!(f.epsilon));
                    self.put("horizontal.branch", json!(f.branch()));
                    f.sample(horizon, n + 1).map_err(solver_err("closed_form"))?
                } else {
                    let w = WeierstrassCurve::from_initial_data(sig, *beta, *gamma, x0, v0).map_err(solver_err("closed_form"))?;
                    self.put("weierstrass.delta", json!(w.form.delta));
                    self.put("weierstrass.dbar", json!(w.form.dbar));
                    self.put("weierstrass.g2", json!(w.form.g2));
                    self.put("weierstrass.g3", json!(w.form.g3));
                    self.put("weierstrass.shift", json!([w.form.a.re, w.form.a.im]));
                    self.put("weierstrass.period", json!(w.form.period()));
                    w.sample(horizon, n + 1).map_err(solver_err("closed_form"))?
                };
                for t in &mut curve.times {
                    *t += t0;
                }
                let a = self.prior.field_at(x0);
                self.record("closed_form", &curve, std::slice::from_ref(&a))?;
                self.reversed("closed_form", &curve)?;
                Ok(true)
            }
            (PriorSpec::LeftInvariant { .. } | PriorSpec::GroupGenerator { .. } | PriorSpec::FitGroupGenerator { .. }, ManifoldTag::UnitQuaternions) => {
                let group = match &self.prior {
                    Prior::Group(a) => Some(*a),
                    Prior::Field(_) => None,
                };
                let generator = |x: &EmbeddedPoint| match (group, &scn.config.prior) {
                    (Some(a), _) => a,
                    (None, PriorSpec::LeftInvariant { generator }) => {
                        Quat::from_dvector(x.coords()).rotate(&Vector3::from_column_slice(generator))
                    }
                    _ => unreachable!(),
                };
                if scn.waypoints.len() >= 2 {
                    let mut segs = Vec::new();
                    let mut fields = Vec::new();
                    let mut bs = Vec::new();
                    let mut cost = 0.0;
                    for w in scn.waypoints.windows(2) {
                        let ((t0, x0), (t1, x1)) = (&w[0], &w[1]);
                        let a_k = generator(x0);
                        let q0 = Quat::from_dvector(x0.coords());
                        let seg = SegmentSolution::solve(a_k, q0, Quat::from_dvector(x1.coords()), *t0, *t1).map_err(solver_err("closed_form"))?;
                        cost += segment_cost(&seg);
                        bs.push(v3(&seg.b_l));
                        fields.push(lifted_field(&a_k, q0));
                        segs.push(seg.sample(n));
                    }
                    let sum: Vector3<f64> = bs.iter().map(|b| Vector3::new(b[0].as_f64().unwrap(), b[1].as_f64().unwrap(), b[2].as_f64().unwrap())).sum();
                    self.put("group.b_l", Value::Array(bs));
                    self.put("group.sum_b_norm", json!(sum.norm()));
                    self.put("group.cost", json!(cost));
                    let curve = track_sum(segs).map_err(solver_err("closed_form"))?;
                    self.record("closed_form", &curve, &fields)?;
                }
                if let Some((x0, v0)) = &scn.initial {
                    let (t0, horizon) = (scn.waypoints[0].0, scn.config.horizon.unwrap_or(0.0));
                    let a_k = generator(x0);
                    let q0 = Quat::from_dvector(x0.coords());
                    let b_l = (Quat::from_dvector(&v0.vec) * q0.conj()).im() - a_k;
                    let seg = SegmentSolution { a_l: a_k, b_l, x_start: q0, t_start: t0, t_end: t0 + horizon };
                    self.put("group_ivp.b_l", v3(&b_l));
                    self.record("closed_form_ivp", &seg.sample(n), &[lifted_field(&a_k, q0)])?;
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn reversed(&mut self, label: &str, curve: &ExtremalCurve) -> CliResult<()> {
        if !self.scn.config.reverse {
            return Ok(());
        }
        if let Prior::Field(a) = &self.prior {
            let j = functional_j(&reverse_curve(curve), a).map_err(solver_err("quadrature"))?;
            self.put(&format!("{label}.reversed.J"), json!(j));
        }
        Ok(())
    }

    fn shoot(&mut self) -> CliResult<bool> {
        let scn = self.scn;
        if scn.waypoints.len() < 2 {
            return Ok(false);
        }
        let opts = ShootOptions { step: scn.config.grid.step, ..ShootOptions::default() };
        let fields = self.segment_fields();
        let mut segs = Vec::new();
        let mut found = Vec::new();
        for (k, w) in scn.waypoints.windows(2).enumerate() {
            let ((t0, x0), (t1, x1)) = (&w[0], &w[1]);
            let all = shoot_multistart(&fields[k], x0, x1, *t0, *t1, &opts, scn.config.starts, scn.config.seed.wrapping_add(k as u64))
                .map_err(solver_err("shoot"))?;
            found.push(json!(all.iter().map(|(j, _)| *j).collect::<Vec<_>>()));
            segs.push(all.into_iter().next().expect("nonempty on success").1);
        }
        self.put("shoot.extrema_J", Value::Array(found));
        let curve = track_sum(segs).map_err(solver_err("shoot"))?;
        self.record("shoot", &curve, &fields)?;
        self.reversed("shoot", &curve)?;
        Ok(true)
    }

    fn integrate(&mut self) -> CliResult<bool> {
        let scn = self.scn;
        let Some((x0, v0)) = &scn.initial else { return Ok(false) };
        let t0 = scn.waypoints[0].0;
        let a = self.prior.field_at(x0);
        let curve = integrate_ivp(&a, x0, v0, t0, t0 + scn.config.horizon.unwrap_or(0.0), scn.config.grid.step).map_err(solver_err("integrate"))?;
        self.put("integrate.max_drift", json!(curve.max_drift));
        self.record("integrate", &curve, &[a])?;
        self.reversed("integrate", &curve)?;
        Ok(true)
    }

    fn variational(&mut self) -> CliResult<bool> {
        let scn = self.scn;
        if scn.waypoints.len() < 2 {
            return Ok(false);
        }
        let a = match &self.prior {
            Prior::Field(a) => a.clone(),
            Prior::Group(_) if scn.waypoints.len() == 2 => self.prior.field_at(&scn.waypoints[0].1),
            // one field per segment has no single discrete functional
            Prior::Group(_) => return Ok(false),
        };
        let opts = MinimizeOptions::default();
        let err = solver_err("variational");
        let init = DiscreteCurve::geodesic_init(&scn.waypoints, scn.config.grid.n).map_err(&err)?;
        let fwd = minimize_curve(&init, &a, &opts).map_err(&err)?;
        let j = report_j(&fwd.curve, &a).map_err(&err)?;
        self.put("variational.J", json!(j));
        self.put("variational.discrete_J", json!(fwd.j));
        self.put("variational.iterations", json!(fwd.iterations));
        self.curves.push(CurveData::from_discrete("variational", &fwd.curve, &a));
        if scn.config.reverse {
            let rev_init = DiscreteCurve::geodesic_init(&reverse_scenario(&scn.waypoints), scn.config.grid.n).map_err(&err)?;
            let rev = minimize_curve(&rev_init, &a, &opts).map_err(&err)?;
            self.put("variational.reverse_data.J", json!(report_j(&rev.curve, &a).map_err(&err)?));
            self.put("variational.reversed_forward.J", json!(report_j(&reverse_data(&fwd.curve), &a).map_err(&err)?));
            self.curves.push(CurveData::from_discrete("variational_reverse", &rev.curve, &a));
        }
        Ok(true)
    }
}

fn build_prior(scn: &Scenario, summary: &mut BTreeMap<String, Value>) -> CliResult<Prior> {
    let field = match (&scn.config.prior, scn.manifold) {
        (PriorSpec::Constant { c }, _) => PriorField::constant(DVector::from_column_slice(c)),
        (PriorSpec::Affine { b, c }, _) => {
            let m = c.len();
            PriorField::affine(DMatrix::from_fn(m, m, |i, j| b[i][j]), DVector::from_column_slice(c))
        }
        (PriorSpec::Symmetric { beta, gamma }, ManifoldTag::SpaceForm(sig)) => Ok(PriorField::symmetric(sig, *beta, *gamma)),
        (PriorSpec::LeftInvariant { generator }, _) => Ok(PriorField::left_invariant(Vector3::from_column_slice(generator))),
        (PriorSpec::GroupGenerator { a_l }, _) => return Ok(Prior::Group(Vector3::from_column_slice(a_l))),
        (PriorSpec::FitGroupGenerator { init }, _) => {
            let obs: Vec<(Quat, f64)> = scn.waypoints.iter().map(|(t, p)| (Quat::from_dvector(p.coords()), *t)).collect();
            let fit = optimize_prior_al(&obs, &Vector3::from_column_slice(init), &OptimizeOptions::default()).map_err(solver_err("fit"))?;
            let st = stationarity_residual(&fit.a_l, &obs).map_err(solver_err("fit"))?;
            summary.insert("fit.a_l".into(), v3(&fit.a_l));
            summary.insert("fit.cost".into(), json!(fit.cost));
            summary.insert("fit.iterations".into(), json!(fit.iterations));
            summary.insert("fit.sum_b_norm".into(), json!(st.sum_b.norm()));
            return Ok(Prior::Group(fit.a_l));
        }
        _ => unreachable!("validated prior"),
    };
    field.map(Prior::Field).map_err(solver_err("prior"))
}

/// Integral curves of the prior from a few seed points, both ways in time.
fn prior_orbits(scn: &Scenario, prior: &Prior) -> Vec<Vec<DVector<f64>>> {
    let m = scn.manifold;
    let mut seeds: Vec<DVector<f64>> = scn.waypoints.iter().map(|(_, p)| p.coords().clone()).collect();
    match m {
        ManifoldTag::SpaceForm(condex_core::Signature::Sphere) => {
            for z in [-0.8, -0.4, 0.0, 0.4, 0.8] {
                let r = (1.0f64 - z * z).sqrt();
                seeds.push(DVector::from_vec(vec![r, 0.0, z]));
                seeds.push(DVector::from_vec(vec![-r, 0.0, z]));
            }
        }
        ManifoldTag::SpaceForm(condex_core::Signature::Hyperbolic) => {
            for r in [0.25f64, 0.5, 1.0, 1.5, 2.0] {
                seeds.push(DVector::from_vec(vec![r.sinh(), 0.0, r.cosh()]));
            }
        }
        _ => {}
    }
    let span = match m {
        ManifoldTag::Euclidean(_) => 1.0,
        _ => std::f64::consts::TAU,
    };
    let steps = 400;
    let h = span / steps as f64;
    let mut out = Vec::new();
    for seed in seeds {
        let Ok(start) = EmbeddedPoint::new(m, seed.clone()) else { continue };
        let a = prior.field_at(&start);
        let mut orbit = Vec::new();
        for dir in [-1.0, 1.0] {
            let mut x = seed.clone();
            let mut part = vec![x.clone()];
            for _ in 0..steps {
                let f = |y: &DVector<f64>| a.value_at(y) * dir;
                let k1 = f(&x);
                let k2 = f(&(&x + &k1 * (h / 2.0)));
                let k3 = f(&(&x + &k2 * (h / 2.0)));
                let k4 = f(&(&x + &k3 * h));
                x = m.retract(&(&x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)));
                if !x.iter().all(|v| v.is_finite()) || x.norm() > 1e3 {
                    break;
                }
                part.push(x.clone());
            }
            if dir < 0.0 {
                part.reverse();
                part.pop();
                orbit = part;
            } else {
                orbit.extend(part);
            }
        }
        out.push(orbit);
    }
    out
}

/// Run every requested solver that applies to the scenario.
pub fn run_scenario(scn: &Scenario) -> CliResult<Report> {
    let mut summary = BTreeMap::new();
    summary.insert("scenario".into(), json!(scn.config.name));
    summary.insert("manifold".into(), json!(scn.manifold.to_string()));
    summary.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    summary.insert("hash".into(), json!(scn.config.hash()));
    summary.insert("waypoints".into(), json!(scn.waypoints.iter().map(|(t, p)| json!({ "t": t, "x": vec_json(p.coords().as_slice()) })).collect::<Vec<_>>()));
    if !scn.warnings.is_empty() {
        summary.insert("warnings".into(), json!(scn.warnings));
    }
    let prior = build_prior(scn, &mut summary)?;
    let orbits = prior_orbits(scn, &prior);
    let mut run = Run { scn, prior, curves: Vec::new(), summary };
    let solver = scn.config.solver;
    let mut ran = Vec::new();
    let mut skipped = Vec::new();
    let steps = [
        (SolverKind::ClosedForm, "closed_form"),
        (SolverKind::Integrate, "integrate"),
        (SolverKind::Shoot, "shoot"),
        (SolverKind::Variational, "variational"),
    ];
    for (kind, name) in steps {
        if !solver.includes(kind) {
            continue;
        }
        info!("{}: running {name}", scn.config.name);
        let applied = match kind {
            SolverKind::ClosedForm => run.closed_form()?,
            SolverKind::Integrate => run.integrate()?,
            SolverKind::Shoot => run.shoot()?,
            _ => run.variational()?,
        };
        if applied {
            ran.push(name);
        } else {
            skipped.push(name);
        }
    }
    if ran.is_empty() {
        return Err(CliError::config(&scn.config.name, format!("no solver in {skipped:?} applies to this scenario")));
    }
    run.put("solvers", json!(ran));
    if !skipped.is_empty() {
        run.put("skipped", json!(skipped));
    }
    Ok(Report { name: scn.config.name.clone(), hash: scn.config.hash(), manifold: scn.manifold, curves: run.curves, orbits, summary: run.summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn scenario(text: &str) -> Scenario {
        ScenarioConfig::from_json("t.json", text).unwrap().validate("t.json").unwrap()
    }

    #[test]
    fn affine_boundary_and_initial_value() {
        let s = scenario(
            r#"{ "name": "aff", "manifold": "E2",
                 "prior": { "kind": "affine", "b": [[0, 1], [-1, 0]], "c": [0.5, 0] },
                 "waypoints": [ { "t": 0, "x": [1, 0] }, { "t": 1, "x": [0, 2] } ],
                 "initial_velocity": [0.2, 0.3], "horizon": 1.0, "solver": "all", "grid": { "n": 200 } }"#,
        );
        let r = run_scenario(&s).unwrap();
        let labels: Vec<&str> = r.curves.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["closed_form", "closed_form_ivp", "integrate", "shoot", "variational"]);
        let j = |k: &str| r.summary[k].as_f64().unwrap();
        assert!((j("closed_form.J") - j("shoot.J")).abs() < 1e-6);
        assert!((j("closed_form.J") - j("variational.J")).abs() < 1e-2);
        let (cf, ig) = (&r.curves[1], &r.curves[2]);
        assert!((cf.points.last().unwrap() - ig.points.last().unwrap()).norm() < 1e-8);
        assert!(ig.res_b.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn group_prior_segments() {
        let s = scenario(
            r#"{ "name": "q", "manifold": "S3",
                 "prior": { "kind": "group_generator", "a_l": [-0.5, -0.5, 0.3] },
                 "waypoints": [ { "t": 0, "x": [1, 0, 0, 0] }, { "t": 3.141592653589793, "x": [-0.0359448, -0.228089, -0.937324, -0.260972] } ],
                 "solver": "closed_form" }"#,
        );
        let r = run_scenario(&s).unwrap();
        let b = r.summary["group.b_l"][0].as_array().unwrap();
        for (got, want) in b.iter().zip([0.2, 0.2, 0.2]) {
            assert!((got.as_f64().unwrap() - want).abs() < 1e-5);
        }
        // the integrand is ‖B‖² all along the segment
        let w = &r.curves[0].integrand;
        let spread = w.iter().fold(0.0f64, |m, v| m.max((v - w[0]).abs()));
        assert!(spread < 1e-10, "{spread}");
        assert!((w[0] - 0.12).abs() < 1e-5, "{}", w[0]);
    }

    #[test]
    fn unusable_solver_is_an_error() {
        let s = scenario(
            r#"{ "name": "h", "manifold": "S2", "prior": { "kind": "symmetric", "beta": 1, "gamma": 0 },
                 "waypoints": [ { "t": 0, "x": [1, 0, 0] }, { "t": 1, "x": [0, 1, 0] } ], "solver": "integrate" }"#,
        );
        assert!(matches!(run_scenario(&s), Err(CliError::Config { .. })));
    }
}
