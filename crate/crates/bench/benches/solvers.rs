use std::hint::black_box;

use condex_bench::{group_observations, sphere_start, sphere_waypoints};
use condex_core::ode::integrate_ivp;
use condex_core::quat_group::{optimize_prior_al, OptimizeOptions, SegmentSolution};
use condex_core::space_forms::WeierstrassCurve;
use condex_core::variational::{minimize_curve, DiscreteCurve, MinimizeOptions};
use condex_core::{PriorField, Quat, Signature, Vector3};
use criterion::{criterion_group, criterion_main, Criterion};

fn closed_forms(c: &mut Criterion) {
    let (x0, v0) = sphere_start();
    let a = PriorField::symmetric(Signature::Sphere, 0.0, 1.0);
    c.bench_function("rk4 on S2, 14 time units at h = 1e-3", |b| {
        b.iter(|| integrate_ivp(black_box(&a), &x0, &v0, 0.0, 14.0, 1e-3).unwrap())
    });
    c.bench_function("weierstrass curve, 1400 samples", |b| {
        b.iter(|| {
            let wc = WeierstrassCurve::from_initial_data(Signature::Sphere, 0.0, 1.0, black_box(&x0), &v0).unwrap();
            wc.sample(14.0, 1401).unwrap()
        })
    });
    let q1 = Quat::new(-0.0359448, -0.228089, -0.937324, -0.260972).normalize();
    let a_l = Vector3::new(-0.5, -0.5, 0.3);
    c.bench_function("group segment solve", |b| {
        b.iter(|| SegmentSolution::solve(black_box(a_l), Quat::new(1.0, 0.0, 0.0, 0.0), q1, 0.0, std::f64::consts::PI).unwrap())
    });
}

fn optimizers(c: &mut Criterion) {
    let obs = group_observations();
    c.bench_function("group prior fit from zero", |b| {
        b.iter(|| optimize_prior_al(black_box(&obs), &Vector3::zeros(), &OptimizeOptions::default()).unwrap())
    });
    let a = PriorField::symmetric(Signature::Sphere, -1.0, 0.0);
    let init = DiscreteCurve::geodesic_init(&sphere_waypoints(), 100).unwrap();
    let mut group = c.benchmark_group("variational");
    group.sample_size(10);
    group.bench_function("minimize on S2, N = 100", |b| b.iter(|| minimize_curve(black_box(&init), &a, &MinimizeOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, closed_forms, optimizers);
criterion_main!(benches);
