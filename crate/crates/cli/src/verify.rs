//! The acceptance suite behind `condex verify`: ten criteria, each a list of
//! clauses with measured values and tolerances.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use condex_core::affine::AffineExtremal;
use condex_core::ode::{functional_j, integrate_ivp, ExtremalCurve};
use condex_core::prior::{closedness_check, two_form_at};
use condex_core::quat_group::{lifted_field, optimize_prior_al, segment_eval, solve_segment_bl, stationarity_residual, OptimizeOptions, SegmentSolution};
use condex_core::space_forms::{conserved_constants, HorizontalForm, SymmetricScenario, WeierstrassCurve};
use condex_core::variational::{discrete_j, discrete_j_gradient, minimize_curve, report_j, reverse_data, reverse_scenario, DiscreteCurve, MinimizeOptions};
use condex_core::{Coefficient, DMatrix, DVector, EmbeddedPoint, Error, ManifoldTag, PriorField, Quat, Signature, TangentVec, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::runner::run_scenario;
use crate::scenarios::{bundled, BUNDLED};

const S2: Signature = Signature::Sphere;
const H2: Signature = Signature::Hyperbolic;

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub name: String,
    pub detail: String,
    pub pass: bool,
    /// Fails for a documented reason; reported, never hidden.
    pub known_deviation: bool,
}

impl Clause {
    fn holds(name: &str, pass: bool, detail: String) -> Self {
        Clause { name: name.to_string(), detail, pass, known_deviation: false }
    }

    fn within(name: &str, got: f64, want: f64, tol: f64) -> Self {
        let err = (got - want).abs();
        Self::holds(name, err <= tol, format!("got {got:.9}, want {want} ± {tol:e} (off {err:.3e})"))
    }

    fn at_most(name: &str, got: f64, bound: f64) -> Self {
        Self::holds(name, got <= bound, format!("{got:.3e} ≤ {bound:e}"))
    }

    fn runtime(name: &str, took: Duration, limit: Duration) -> Self {
        Self::holds(name, took < limit, format!("{took:?} < {limit:?}"))
    }

    fn known(mut self) -> Self {
        self.known_deviation = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub clauses: Vec<Clause>,
    pub elapsed: Duration,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    /// Passes once documented deviations are set aside.
    pub fn passed_except_known(&self) -> bool {
        self.clauses.iter().all(|c| c.pass || c.known_deviation)
    }

    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.clauses.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {:>2} {status} {} ({:.2?})", self.id, self.title, self.elapsed);
        if !failed.is_empty() {
            write!(s, " failing: {}", failed.join("; ")).unwrap();
        }
        s
    }
}

type Clauses = condex_core::Result<Vec<Clause>>;

pub const TITLES: [&str; 10] = [
    "quaternion round trip",
    "S3 prior optimization",
    "Weierstrass constants, conservative field",
    "Weierstrass constants, hyperbolic spiral field",
    "closed forms against the integrator",
    "variational reversal on the sphere",
    "distinct extrema of a rotational field",
    "reversal dichotomy",
    "property suites",
    "determinism",
];

/// Run one criterion, 1 through 10.
pub fn criterion(id: u8) -> Criterion {
    let start = Instant::now();
    let result = match id {
        1 => quaternion_round_trip(),
        2 => s3_prior_fit(),
        3 => lamex_constants(),
        4 => poin2ex_constants(),
        5 => closed_form_oracle(),
        6 => refex_reversal(),
        7 => hor2ex_extrema(),
        8 => reversal_dichotomy(),
        9 => property_suites(),
        10 => determinism(),
        _ => Err(Error::InvalidInput(format!("no criterion {id}"))),
    };
    let clauses = result.unwrap_or_else(|e| vec![Clause::holds("evaluation", false, e.to_string())]);
    let title = TITLES.get(usize::from(id).wrapping_sub(1)).copied().unwrap_or("unknown");
    Criterion { id, title, clauses, elapsed: start.elapsed() }
}

pub fn run_all() -> Vec<Criterion> {
    (1..=10).map(criterion).collect()
}

/// Pass/fail table with one row per criterion and the clauses below it.
pub fn table(results: &[Criterion]) -> String {
    let mut out = String::new();
    writeln!(out, "{:>2}  {:<6} {:<46} {:>10}", "#", "result", "criterion", "time").unwrap();
    for c in results {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "{:>2}  {:<6} {:<46} {:>10.3?}", c.id, status, c.title, c.elapsed).unwrap();
        for cl in &c.clauses {
            let mark = match (cl.pass, cl.known_deviation) {
                (true, _) => "ok",
                (false, true) => "KNOWN",
                (false, false) => "FAIL",
            };
            writeln!(out, "      {mark:<5} {}: {}", cl.name, cl.detail).unwrap();
        }
    }
    let passed = results.iter().filter(|c| c.passed()).count();
    writeln!(out, "{passed}/{} criteria pass", results.len()).unwrap();
    out
}

fn point(sig: Signature, x: &[f64]) -> condex_core::Result<EmbeddedPoint> {
    EmbeddedPoint::from_slice(ManifoldTag::SpaceForm(sig), x)
}

fn on(sig: Signature, x: &[f64]) -> condex_core::Result<EmbeddedPoint> {
    EmbeddedPoint::projected(ManifoldTag::SpaceForm(sig), DVector::from_column_slice(x))
}

fn tangent(x: &EmbeddedPoint, v: &[f64]) -> condex_core::Result<TangentVec> {
    TangentVec::new(x.clone(), DVector::from_column_slice(v))
}

fn worst(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn quaternion_round_trip() -> Clauses {
    let a = Vector3::new(-0.5, -0.5, 0.3);
    let b = Vector3::new(0.2, 0.2, 0.2);
    let reference = Quat::new(-0.0359448, -0.228089, -0.937324, -0.260972);
    let run = || -> condex_core::Result<(Quat, Vector3<f64>)> {
        let seg = SegmentSolution { a_l: a, b_l: b, x_start: Quat::ONE, t_start: 0.0, t_end: PI };
        let x1 = segment_eval(&seg, PI);
        Ok((x1, solve_segment_bl(&a, Quat::ONE, x1, PI)?))
    };
    run()?;
    let start = Instant::now();
    let (x1, b_back) = run()?;
    let took = start.elapsed();
    let off = worst(x1.to_array().iter().zip(reference.to_array()).map(|(p, q)| (p - q).abs()));
    Ok(vec![
        Clause::at_most("x(π) matches the reference quaternion per component", off, 1e-4),
        Clause::at_most("segment inversion recovers B", (b_back - b).amax(), 1e-6),
        Clause::runtime("runtime", took, Duration::from_millis(1)),
    ])
}

fn s3ex2_observations() -> Vec<(Quat, f64)> {
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.1304, 0.7923, 0.4574, 0.3821],
        [0.5809, 0.0381, 0.3385, 0.7393],
        [0.5523, 0.6251, 0.5513, 0.0172],
        [0.2810, 0.1241, 0.6817, 0.6640],
    ]
    .iter()
    .enumerate()
    .map(|(k, x)| (Quat::from_slice(x).normalize(), 0.25 * k as f64))
    .collect()
}

fn s3_prior_fit() -> Clauses {
    let obs = s3ex2_observations();
    let reference_a = Vector3::new(1.40398, 0.196766, 1.05334);
    let reference_b = [
        Vector3::new(2.7669, 2.3129, 2.0736),
        -Vector3::new(1.0075, 4.2867, 1.4298),
        -Vector3::new(2.1680, -3.6097, 2.4150),
        Vector3::new(0.4086, -1.6359, 1.7713),
    ];
    let start = Instant::now();
    let fit = optimize_prior_al(&obs, &Vector3::zeros(), &OptimizeOptions::default())?;
    let took = start.elapsed();
    let at_fit = stationarity_residual(&fit.a_l, &obs)?;
    let at_reference = stationarity_residual(&reference_a, &obs)?;
    let b_off = worst(at_reference.b.iter().zip(&reference_b).map(|(g, w)| (g - w).amax()));
    Ok(vec![
        Clause::holds(
            "optimized generator matches the reference one per component",
            (fit.a_l - reference_a).amax() <= 1e-3,
            format!("got ({:.6}, {:.6}, {:.6}), off {:.3e}", fit.a_l.x, fit.a_l.y, fit.a_l.z, (fit.a_l - reference_a).amax()),
        ),
        Clause::at_most("segment generators match the reference ones", b_off, 2e-3),
        Clause::at_most("segment generators sum to zero at the optimum", at_fit.sum_b.norm(), 1e-6),
        Clause::runtime("runtime", took, Duration::from_secs(1)),
    ])
}

fn lamex_constants() -> Clauses {
    let x0 = point(S2, &[0.75f64.sqrt(), 0.0, 0.5])?;
    let v0 = tangent(&x0, &[0.0, 1.0, 0.0])?;
    let (b, _, d) = conserved_constants(S2, 0.0, 1.0, &x0, &v0);
    let wc = WeierstrassCurve::from_initial_data(S2, 0.0, 1.0, &x0, &v0)?;
    let a = PriorField::symmetric(S2, 0.0, 1.0);
    let ivp = integrate_ivp(&a, &x0, &v0, 0.0, 14.0, 1e-3)?;
    let hv = wc.form.x3_grid(&ivp.times)?;
    let x3_gap = worst(hv.iter().zip(&ivp.points).map(|(h, p)| (h.0 - p[2]).abs()));
    let period = wc.form.period().ok_or(Error::InvalidInput("no real period".into()))?;
    let times: Vec<f64> = (0..200).map(|i| 0.07 * i as f64).collect();
    let shift = |k: f64| -> condex_core::Result<Vec<f64>> {
        Ok(wc.form.x3_grid(&times.iter().map(|t| t + k * period).collect::<Vec<_>>())?.iter().map(|p| p.0).collect())
    };
    let (h0, h1, h2) = (shift(0.0)?, shift(1.0)?, shift(2.0)?);
    let periodic = worst(h0.iter().zip(&h1).map(|(p, q)| (p - q).abs()));
    let squares = worst(h0.iter().zip(&h1).map(|(p, q)| (p * p - q * q).abs()));
    let twice = worst(h0.iter().zip(&h2).map(|(p, q)| (p - q).abs()));
    Ok(vec![
        Clause::within("b", b, 0.25, 1e-12),
        Clause::within("d", d, -0.5, 1e-10),
        Clause::within("δ̄", wc.form.delta, -0.75, 1e-10),
        Clause::within("g2", wc.form.g2, 4.75, 1e-10),
        Clause::within("g3", wc.form.g3, 1.875, 1e-10),
        Clause::at_most("x3 matches RK4 on [0, 14]", x3_gap, 1e-6),
        Clause::at_most("x3 repeats over the real period of ℘", periodic, 1e-8).known(),
        Clause::at_most("x3² repeats over the real period of ℘", squares, 1e-8),
        Clause::at_most("x3 repeats over twice that period", twice, 1e-8),
    ])
}

fn poin2ex_constants() -> Clauses {
    let x0 = point(H2, &[0.1, 0.1, 1.02f64.sqrt()])?;
    let a = PriorField::symmetric(H2, -1.0, 2.0);
    let mut clauses = Vec::new();
    let reference = [0.9 * 1.002f64.sqrt(), 0.0, 0.9];
    let readings = [
        ("projected reference v0", TangentVec::projected(x0.clone(), &DVector::from_column_slice(&reference)), true),
        ("v0 = (0.9√1.02, 0, 0.09)", tangent(&x0, &[0.9 * 1.02f64.sqrt(), 0.0, 0.09])?, false),
    ];
    for (label, v0, known) in readings {
        let wc = WeierstrassCurve::from_initial_data(H2, -1.0, 2.0, &x0, &v0)?;
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs();
        let mut g2 = Clause::at_most(&format!("{label}: g2 = 1.17393 (relative)"), rel(wc.form.g2, 1.17393), 1e-2);
        let mut g3 = Clause::at_most(&format!("{label}: g3 = −0.220814 (relative)"), rel(wc.form.g3, -0.220814), 1e-2);
        g2.detail = format!("g2 = {:.6}, {}", wc.form.g2, g2.detail);
        g3.detail = format!("g3 = {:.6}, {}", wc.form.g3, g3.detail);
        if known {
            g2 = g2.known();
            g3 = g3.known();
        }
        clauses.push(g2);
        clauses.push(g3);
        let ivp = integrate_ivp(&a, &x0, &v0, 0.0, 1.0, 1e-4)?;
        let hv = wc.form.x3_grid(&ivp.times)?;
        let gap = worst(hv.iter().zip(&ivp.points).map(|(h, p)| (h.0 - p[2]).abs() / p[2].abs()));
        clauses.push(Clause::at_most(&format!("{label}: x3 matches integration (relative)"), gap, 1e-6));
    }
    Ok(clauses)
}

/// One randomized family: the worst pointwise gap and conservation residual.
#[derive(Default)]
struct FamilyStats {
    cases: usize,
    draws: usize,
    gap: f64,
    conservation: f64,
}

fn record_pair(stats: &mut FamilyStats, closed: &ExtremalCurve, ivp: &ExtremalCurve, a: &PriorField) {
    stats.cases += 1;
    let relative = closed.manifold == ManifoldTag::SpaceForm(H2);
    for (p, q) in closed.points.iter().zip(&ivp.points) {
        // coordinates on the hyperboloid grow like e^t
        let scale = if relative { q.norm() } else { 1.0 };
        stats.gap = stats.gap.max((p - q).norm() / scale);
    }
    if closed.len() != ivp.len() {
        stats.gap = f64::INFINITY;
    }
    let (rb, rc) = ivp.conservation_residuals(a);
    let (cb, cc) = closed.conservation_residuals(a);
    let m = closed.manifold;
    // relative to the kinetic scale, which also grows like e^t on H²
    let scale = if relative {
        closed.points.iter().zip(&closed.velocities).map(|(x, v)| 1.0 + m.norm_sq(v).abs() + m.norm_sq(&a.value_at(x)).abs()).fold(1.0, f64::max)
    } else {
        1.0
    };
    stats.conservation = stats.conservation.max(rb.max(rc).max(cb).max(cc) / scale);
}

fn family_clauses(name: &str, stats: &FamilyStats) -> Vec<Clause> {
    vec![
        Clause::holds(&format!("{name}: 20 scenarios"), stats.cases == 20, format!("{} cases from {} draws", stats.cases, stats.draws)),
        Clause::at_most(&format!("{name}: closed form vs integrator"), stats.gap, 1e-6),
        Clause::at_most(&format!("{name}: conservation residuals{}", if name.ends_with("H²") { " (relative)" } else { "" }), stats.conservation, 1e-8),
    ]
}

const CASES: usize = 20;
const SPAN: f64 = 1.5;
const STEP: f64 = 1e-3;

/// Height beyond which an H² orbit counts as escaping.
const ESCAPE_HEIGHT: f64 = 20.0;

fn random_space_form_start(rng: &mut ChaCha8Rng, sig: Signature) -> condex_core::Result<(EmbeddedPoint, TangentVec)> {
    let x0 = match sig {
        S2 => {
            let z: f64 = rng.gen_range(-0.8..0.8);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            point(sig, &[r * phi.cos(), r * phi.sin(), z])?
        }
        H2 => {
            let (p, q): (f64, f64) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
            point(sig, &[p, q, (1.0 + p * p + q * q).sqrt()])?
        }
    };
    let v0 = TangentVec::projected(x0.clone(), &DVector::from_fn(3, |_, _| rng.gen_range(-1.2..1.2)));
    Ok((x0, v0))
}

fn closed_form_oracle() -> Clauses {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = (SPAN / STEP).round() as usize;
    let mut clauses = Vec::new();

    let mut stats = FamilyStats::default();
    while stats.cases < CASES && stats.draws < 10 * CASES {
        stats.draws += 1;
        let m = rng.gen_range(2..=4);
        let b = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        let c = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let x0 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let v0 = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let a = PriorField::affine(b.clone(), c.clone())?;
        let d = &v0 - a.value_at(&x0);
        let closed = AffineExtremal::new(b, c, x0.clone(), d, 0.0)?.sample(SPAN, n);
        let p0 = EmbeddedPoint::new(ManifoldTag::Euclidean(m), x0)?;
        let ivp = integrate_ivp(&a, &p0, &TangentVec::new(p0.clone(), v0)?, 0.0, SPAN, STEP)?;
        record_pair(&mut stats, &closed, &ivp, &a);
    }
    clauses.extend(family_clauses("affine on Eᵐ", &stats));

    let mut stats = FamilyStats::default();
    while stats.cases < CASES && stats.draws < 10 * CASES {
        stats.draws += 1;
        let mut v = || Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let (a_l, b_l) = (v(), v());
        let x0 = Quat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let seg = SegmentSolution { a_l, b_l, x_start: x0, t_start: 0.0, t_end: SPAN };
        let closed = seg.sample(n);
        let field = lifted_field(&a_l, x0);
        let p0 = EmbeddedPoint::new(ManifoldTag::UnitQuaternions, x0.to_dvector())?;
        let ivp = integrate_ivp(&field, &p0, &TangentVec::new(p0.clone(), seg.state(0.0).1.to_dvector())?, 0.0, SPAN, STEP)?;
        record_pair(&mut stats, &closed, &ivp, &field);
    }
    clauses.extend(family_clauses("left-invariant on S³", &stats));

    for (sig, name) in [(S2, "horizontal on S²"), (H2, "horizontal on H²")] {
        let mut stats = FamilyStats::default();
        while stats.cases < CASES && stats.draws < 10 * CASES {
            stats.draws += 1;
            let beta = rng.gen_range(-2.0..2.0);
            let (x0, v0) = random_space_form_start(&mut rng, sig)?;
            let Ok(f) = HorizontalForm::from_initial_data(sig, beta, &x0, &v0) else { continue };
            let a = PriorField::symmetric(sig, beta, 0.0);
            let closed = f.sample(SPAN, n + 1)?;
            let ivp = integrate_ivp(&a, &x0, &v0, 0.0, SPAN, STEP)?;
            record_pair(&mut stats, &closed, &ivp, &a);
        }
        clauses.extend(family_clauses(name, &stats));
    }

    for (sig, name) in [(S2, "Weierstrass on S²"), (H2, "Weierstrass on H²")] {
        let mut stats = FamilyStats::default();
        let mut height: f64 = 0.0;
        while stats.cases < CASES && stats.draws < 10 * CASES {
            stats.draws += 1;
            let beta = rng.gen_range(-1.5..1.5);
            let gamma = rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (x0, v0) = random_space_form_start(&mut rng, sig)?;
            let a = PriorField::symmetric(sig, beta, gamma);
            // start points whose orbit reaches a pole are redrawn
            let Ok(wc) = WeierstrassCurve::from_initial_data(sig, beta, gamma, &x0, &v0) else { continue };
            let Ok(closed) = wc.sample(SPAN, n + 1) else { continue };
            // on H² the height can blow up at a pole of ℘ inside the span
            if closed.points.iter().any(|x| x[2].abs() > ESCAPE_HEIGHT) {
                continue;
            }
            let ivp = integrate_ivp(&a, &x0, &v0, 0.0, SPAN, STEP)?;
            record_pair(&mut stats, &closed, &ivp, &a);
            for (x, v) in closed.points.iter().zip(&closed.velocities) {
                height = height.max(wc.scenario.x3_first_order_residual(x[2], v[2]).abs());
            }
        }
        stats.conservation = stats.conservation.max(height);
        clauses.extend(family_clauses(name, &stats));
    }
    Ok(clauses)
}

/// Minimized `J` on both the data and the reversed data, and `J` of the
/// reversed forward minimum.
fn refex_run(n: usize) -> condex_core::Result<(f64, f64)> {
    let a = PriorField::symmetric(S2, -1.0, 0.0);
    let wp = vec![(0.0, on(S2, &[0.866, 0.0, 0.5])?), (1.0, on(S2, &[0.5187, 0.8486, 0.1039])?)];
    let opts = MinimizeOptions::default();
    let fwd = minimize_curve(&DiscreteCurve::geodesic_init(&wp, n)?, &a, &opts)?;
    let rev = minimize_curve(&DiscreteCurve::geodesic_init(&reverse_scenario(&wp), n)?, &a, &opts)?;
    Ok((report_j(&rev.curve, &a)?, report_j(&reverse_data(&fwd.curve), &a)?))
}

fn refex_reversal() -> Clauses {
    let start = Instant::now();
    let (j_star, j_bar) = refex_run(400)?;
    let (j_star2, j_bar2) = refex_run(800)?;
    let took = start.elapsed();
    Ok(vec![
        Clause::within("minimum for the reversed data", j_star, 0.18, 0.02),
        Clause::within("reversed forward minimum", j_bar, 0.44, 0.02).known(),
        Clause::at_most("N = 800 moves the reversed-data minimum by", (j_star2 - j_star).abs(), 0.005),
        Clause::at_most("N = 800 moves the reversed forward minimum by", (j_bar2 - j_bar).abs(), 0.005),
        Clause::holds("not reflexive: margin above 0.1", j_bar - j_star > 0.1, format!("{j_bar:.6} − {j_star:.6} = {:.6}", j_bar - j_star)),
        Clause::runtime("runtime", took, Duration::from_secs(30)),
    ])
}

fn hor2ex_extrema() -> Clauses {
    let a = PriorField::symmetric(S2, -1.0, 0.0);
    let mut clauses = Vec::new();
    for (eps, want_min) in [(7.0f64, 0.519), (2f64.sqrt(), 2.011)] {
        let f = HorizontalForm::new(S2, 1.0, eps, 0.0, 0.0, -1.0, 1.0, 1.0)?;
        let closed = f.sample(1.0, 2000)?;
        let j_closed = functional_j(&closed, &a)?;
        let wp = vec![(0.0, on(S2, closed.start().as_slice())?), (1.0, on(S2, closed.end().as_slice())?)];
        let min = minimize_curve(&DiscreteCurve::geodesic_init(&wp, 400)?, &a, &MinimizeOptions::default())?;
        let j_min = report_j(&min.curve, &a)?;
        let sc = SymmetricScenario::from_initial_data(S2, -1.0, 0.0, &point(S2, closed.start().as_slice())?, &TangentVec::new(point(S2, closed.start().as_slice())?, closed.velocities[0].clone())?)?;
        let label = if eps == 7.0 { "ε = 7" } else { "ε = √2" };
        clauses.push(Clause::within(&format!("{label}: minimized J"), j_min, want_min, 0.02));
        clauses.push(Clause::within(&format!("{label}: integrand b − 2β̄c"), sc.b - 2.0 * sc.beta * sc.c, eps * eps, 1e-9));
        clauses.push(Clause::within(&format!("{label}: closed-form J"), j_closed, eps * eps, 1e-6));
    }
    Ok(clauses)
}

/// Smooth random feasible curve on the sphere.
fn random_curve(rng: &mut ChaCha8Rng, n: usize) -> condex_core::Result<DiscreteCurve> {
    let k: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = ManifoldTag::SpaceForm(S2);
    let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let points = times
        .iter()
        .map(|&t| {
            m.retract(&DVector::from_vec(vec![
                k[0] + k[1] * (2.0 * t).sin() + 0.5,
                k[2] + k[3] * (3.0 * t).cos(),
                k[4] + k[5] * t * t + k[6] * (t + k[7]).sin() + k[8],
            ]))
        })
        .collect();
    DiscreteCurve::new(m, times, points, vec![0, n - 1])
}

fn random_samples(rng: &mut ChaCha8Rng, count: usize) -> condex_core::Result<Vec<(EmbeddedPoint, TangentVec, TangentVec)>> {
    let m = ManifoldTag::SpaceForm(S2);
    (0..count)
        .map(|_| {
            let x = EmbeddedPoint::projected(m, DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)))?;
            let xv = TangentVec::projected(x.clone(), &DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)));
            let yv = TangentVec::projected(x.clone(), &DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)));
            Ok((x, xv, yv))
        })
        .collect()
}

fn reversal_dichotomy() -> Clauses {
    let a = PriorField::symmetric(S2, -1.0, 0.0);
    let n = 2000;
    let times: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let points = times.iter().map(|&t| DVector::from_vec(vec![t.cos(), -t.sin(), 0.0])).collect();
    let equator = DiscreteCurve::new(ManifoldTag::SpaceForm(S2), times, points, vec![0, n])?;
    let mut clauses = vec![
        Clause::at_most("integral loop has J = 0", discrete_j(&equator, &a), 1e-4),
        Clause::within("its reverse has J = 8π", discrete_j(&reverse_data(&equator), &a), 8.0 * PI, 0.01),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut gap: f64 = 0.0;
    for _ in 0..10 {
        let gamma = rng.gen_range(-2.0..2.0);
        let c = PriorField::symmetric(S2, 0.0, gamma);
        let curve = random_curve(&mut rng, 1001)?;
        let j = report_j(&curve, &c)?;
        let jr = report_j(&reverse_data(&curve), &c)?;
        let dz = curve.points[1000][2] - curve.points[0][2];
        gap = gap.max((jr - j - 4.0 * gamma * dz).abs());
    }
    clauses.push(Clause::at_most("conservative field: J̄ − J = 4γ̄Δx3 on 10 curves", gap, 1e-4));
    let samples = random_samples(&mut rng, 100)?;
    let exact = closedness_check(&PriorField::symmetric(S2, 0.0, 1.7), &samples, 1e-10)?;
    let rotational = closedness_check(&PriorField::symmetric(S2, 1.3, 0.0), &samples, 1e-10)?;
    clauses.push(Clause::holds("γ̄C is closed", exact.is_closed, format!("max |dA| = {:.3e}", exact.max_violation)));
    clauses.push(Clause::holds("β̄B is not closed", !rotational.is_closed, format!("max |dA| = {:.3e}", rotational.max_violation)));
    Ok(clauses)
}

fn property_suites() -> Clauses {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut clauses = Vec::new();

    // discrete functional gradient
    let a = PriorField::symmetric(S2, 0.8, -0.6);
    let curve = random_curve(&mut rng, 41)?;
    let g = discrete_j_gradient(&curve, &a);
    let mut rel: f64 = 0.0;
    let h = 1e-6;
    for (i, gi) in g.iter().enumerate().take(40).skip(1) {
        for (k, gik) in gi.iter().enumerate() {
            let (mut p, mut q) = (curve.clone(), curve.clone());
            p.points[i][k] += h;
            q.points[i][k] -= h;
            let fd = (discrete_j(&p, &a) - discrete_j(&q, &a)) / (2.0 * h);
            rel = rel.max((fd - gik).abs() / (1.0 + gik.abs()));
        }
    }
    clauses.push(Clause::at_most("discrete J gradient vs central differences (relative)", rel, 1e-5));

    // norm identities along group segments
    let mut ident: f64 = 0.0;
    for _ in 0..20 {
        let mut v = || Vector3::from_fn(|_, _| rng.gen_range(-1.5..1.5));
        let (a_l, b_l) = (v(), v());
        let x0 = Quat::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let seg = SegmentSolution { a_l, b_l, x_start: x0, t_start: 0.0, t_end: 2.0 };
        let field = lifted_field(&a_l, x0);
        for i in 0..=20 {
            let (x, xv) = seg.state(0.1 * i as f64);
            let (x, xv) = (x.to_dvector(), xv.to_dvector());
            let ax = field.value_at(&x);
            ident = ident
                .max((xv.norm() - (a_l + b_l).norm()).abs())
                .max(((&xv - &ax).norm() - b_l.norm()).abs())
                .max((xv.dot(&ax) - (a_l + b_l).dot(&a_l)).abs());
        }
    }
    clauses.push(Clause::at_most("group segment norm identities", ident, 1e-9));

    // product rule for the exterior derivative
    let b0 = 0.9;
    let scaled = PriorField::symmetric(S2, Coefficient::function(move |z| b0 * (1.0 + 0.5 * z.sin()), move |z| b0 * 0.5 * z.cos()), 0.0);
    let base = PriorField::symmetric(S2, b0, 0.0);
    let m = ManifoldTag::SpaceForm(S2);
    let mut prod: f64 = 0.0;
    for (x, xv, yv) in random_samples(&mut rng, 50)? {
        let (x, xv, yv) = (x.coords(), &xv.vec, &yv.vec);
        let alpha = 1.0 + 0.5 * x[2].sin();
        let dalpha = |w: &DVector<f64>| 0.5 * x[2].cos() * w[2];
        let av = base.value_at(x);
        let want = alpha * two_form_at(&base, x, xv, yv) + dalpha(xv) * m.inner(&av, yv) - m.inner(&av, xv) * dalpha(yv);
        prod = prod.max((two_form_at(&scaled, x, xv, yv) - want).abs());
    }
    clauses.push(Clause::at_most("product rule for the two-form", prod, 1e-6));

    // RK4 order on a geodesic
    let zero = PriorField::symmetric(S2, 0.0, 0.0);
    let x0 = point(S2, &[1.0, 0.0, 0.0])?;
    let v0 = tangent(&x0, &[0.0, 1.5, 0.0])?;
    let t1 = 3.0;
    let exact = DVector::from_vec(vec![(1.5f64 * t1).cos(), (1.5f64 * t1).sin(), 0.0]);
    let err = |h: f64| -> condex_core::Result<f64> { Ok((integrate_ivp(&zero, &x0, &v0, 0.0, t1, h)?.end() - &exact).norm()) };
    let ratio = err(0.01)? / err(0.005)?;
    clauses.push(Clause::within("RK4 error ratio per halving", ratio, 16.0, 2.0));

    // corrected integrand identity
    let x0 = point(S2, &[0.75f64.sqrt(), 0.0, 0.5])?;
    let v0 = tangent(&x0, &[0.0, 1.0, 0.0])?;
    let c = PriorField::symmetric(S2, 0.0, 1.0);
    clauses.push(Clause::within("direct ‖x′ − A‖² at the lamex start", m.norm_sq(&(&v0.vec - c.value_at(x0.coords()))), 1.75, 1e-12));
    let mut ident: f64 = 0.0;
    for (sig, beta, gamma) in [(S2, 0.0, 1.0), (S2, 0.7, -0.8), (H2, -1.0, 0.6)] {
        let a = PriorField::symmetric(sig, beta, gamma);
        // redraw starts whose orbit escapes to infinity within the span
        let mut drawn = None;
        for _ in 0..20 {
            let (x0, v0) = random_space_form_start(&mut rng, sig)?;
            match integrate_ivp(&a, &x0, &v0, 0.0, 2.0, 1e-3) {
                Ok(ivp) if ivp.points.iter().all(|x| x[2].abs() <= ESCAPE_HEIGHT) => {
                    drawn = Some((x0, v0, ivp));
                    break;
                }
                Ok(_) | Err(Error::IntegrationDrift { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (x0, v0, ivp) = drawn.ok_or_else(|| Error::InvalidInput("every drawn start escaped".into()))?;
        let sc = SymmetricScenario::from_initial_data(sig, beta, gamma, &x0, &v0)?;
        let mm = ManifoldTag::SpaceForm(sig);
        for (x, v) in ivp.points.iter().zip(&ivp.velocities) {
            let direct = sig.sigma() * mm.norm_sq(&(v - a.value_at(x)));
            ident = ident.max((direct - sc.integrand_closed_form(x[2], v[2])).abs());
        }
    }
    clauses.push(Clause::at_most("corrected integrand identity along trajectories", ident, 1e-8));
    Ok(clauses)
}

/// Write every bundled scenario's outputs into `dir`.
pub fn write_bundled(dir: &Path) -> crate::CliResult<()> {
    for (name, _) in BUNDLED {
        let report = run_scenario(&bundled(name)?)?;
        crate::write_outputs(&report, dir)?;
    }
    Ok(())
}

fn determinism() -> Clauses {
    let io = |e: crate::CliError| Error::InvalidInput(e.to_string());
    let dirs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut listings = Vec::new();
    for d in &dirs {
        let d = d.as_ref().map_err(|e| Error::InvalidInput(e.to_string()))?;
        write_bundled(d.path()).map_err(io)?;
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(d.path())
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .filter_map(|e| e.ok())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
            .collect();
        files.sort();
        listings.push(files);
    }
    let names = |l: &[(String, Vec<u8>)]| l.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
    let csv_or_summary = |n: &str| n.ends_with(".csv") || n.ends_with(".summary.json");
    let differing: Vec<String> = listings[0].iter().zip(&listings[1]).filter(|(p, q)| p != q).map(|(p, _)| p.0.clone()).collect();
    let checked = listings[0].iter().filter(|f| csv_or_summary(&f.0)).count();
    Ok(vec![
        Clause::holds("same files both runs", names(&listings[0]) == names(&listings[1]), format!("{} files", listings[0].len())),
        Clause::holds(
            "byte-identical CSV and summaries",
            differing.iter().all(|n| !csv_or_summary(n)) && checked > 0,
            format!("{checked} compared, differing: {differing:?}"),
        ),
        Clause::holds("byte-identical figures", differing.is_empty(), format!("differing: {differing:?}")),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_helpers() {
        assert!(Clause::within("x", 1.0, 1.05, 0.1).pass);
        assert!(!Clause::within("x", 1.0, 1.2, 0.1).pass);
        assert!(!Clause::within("x", f64::NAN, 1.0, 0.1).pass);
        assert!(Clause::at_most("x", 0.0, 0.0).pass);
        let c = Criterion { id: 1, title: "t", clauses: vec![Clause::at_most("a", 2.0, 1.0).known()], elapsed: Duration::ZERO };
        assert!(!c.passed() && c.passed_except_known());
        assert!(c.line().contains("FAIL") && c.line().contains("failing: a"));
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!criterion(11).passed());
    }
}
