use criterion::{criterion_group, criterion_main, Criterion};
use efl_core::{
    arc_length_reparam, axis_length_reparam, build_streamtube_map, clustered_nodes, disturbance_rates, frame_explicit,
    frame_residuals, integrate_trajectory, AxisLengthCurve, Fixture, PathPoint, Seed,
};
use std::hint::black_box;

fn swirl() -> Fixture {
    Fixture::StagnationSwirl { alpha: 1.0, omega0: 1.0 }
}

fn trajectory(c: &mut Criterion) {
    let f = swirl();
    c.bench_function("integrate_trajectory", |b| {
        b.iter(|| integrate_trajectory(&f, black_box(Seed::new(0.5, 0.0, 1.0)), (0.0, 1.0), 1e-10).unwrap())
    });
}

fn frames(c: &mut Criterion) {
    let f = swirl();
    let traj = integrate_trajectory(&f, Seed::new(0.5, 0.0, 1.0), (0.0, 1.0), 1e-10).unwrap();
    let curve = axis_length_reparam(&traj, &f, 1e-10).unwrap();
    let arc = arc_length_reparam(&curve).unwrap();
    c.bench_function("frame_explicit", |b| b.iter(|| frame_explicit(&curve, black_box(1.5)).unwrap()));
    let [r, theta, t] = curve.state_at(1.5).unwrap();
    let frame = frame_explicit(&curve, 1.5).unwrap();
    let s = arc.s_at(1.5).unwrap();
    let p = PathPoint { t, r, theta, z: 1.5 };
    c.bench_function("frame_residuals", |b| b.iter(|| frame_residuals(&f, s, black_box(&p), &frame, 1e-4).unwrap()));
}

fn tube_map(c: &mut Criterion) {
    let f = swirl();
    let nodes = clustered_nodes(9, 1.0);
    let t_nodes = [0.0, 0.5, 1.0];
    let mut group = c.benchmark_group("streamtube");
    group.sample_size(10);
    group.bench_function("build_streamtube_map", |b| {
        b.iter(|| build_streamtube_map(&f, black_box(&nodes), (1.0, 2.0), &t_nodes, 1e-10).unwrap())
    });
    let map = build_streamtube_map(&f, &nodes, (1.0, 2.0), &t_nodes, 1e-10).unwrap();
    group.bench_function("disturbance_rates", |b| b.iter(|| disturbance_rates(&map, black_box(0.4), 1.5, 0.5).unwrap()));
    group.finish();
}

criterion_group!(benches, trajectory, frames, tube_map);
criterion_main!(benches);
