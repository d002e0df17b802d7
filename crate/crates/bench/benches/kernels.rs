use criterion::{black_box, criterion_group, criterion_main, Criterion};
use quadric_cr::convex::{support_function, ConvexBody};
use quadric_cr::fock::{fock_basis, rep_apply};
use quadric_cr::rockland::rockland_spectrum;
use quadric_cr::spectral::spectral_data;
use quadric_cr::suites::heis_bump;
use quadric_cr::transform::{bandlimit_project, extension_of, inverse_fn, spectral_window, Route};
use quadric_cr::{AmbientPoint, GridSpec, GroupPoint, QuadraticModel, C64};

fn spectral(c: &mut Criterion) {
    let model = QuadraticModel::diagonal(&[vec![1.0, 0.5, 0.0], vec![0.2, -1.0, 0.3]]).unwrap();
    c.bench_function("spectral_data n=3 m=2", |b| b.iter(|| spectral_data(&model, black_box(&[0.7, 0.4])).unwrap()));
}

fn fock(c: &mut Criterion) {
    let sd = spectral_data(&QuadraticModel::heisenberg(), &[1.0]).unwrap();
    let trunc = fock_basis(&sd, 12).unwrap();
    let p = GroupPoint::new(vec![C64::new(0.4, -0.3)], vec![0.7]);
    c.bench_function("rep_apply heis D=12", |b| b.iter(|| rep_apply(&trunc, &[], black_box(&p)).unwrap()));
    c.bench_function("rockland_spectrum heis D=12", |b| b.iter(|| rockland_spectrum(black_box(&trunc), &[]).unwrap()));
}

fn convex(c: &mut Criterion) {
    let verts: Vec<Vec<f64>> = (0..64).map(|i| {
        let t = i as f64 * 0.1;
        vec![t.cos(), t.sin(), (2.0 * t).cos()]
    }).collect();
    let k = ConvexBody::new(3, verts, false).unwrap();
    c.bench_function("support_function 64 vertices", |b| b.iter(|| support_function(&k, black_box(&[0.3, -0.2, 0.9]))));
}

fn transform(c: &mut Criterion) {
    let model = QuadraticModel::heisenberg();
    let small = GridSpec::new(3.0, 100.0, 13, 257).unwrap();
    let profile = heis_bump(1.5, 0.5, small).unwrap();
    let bl = inverse_fn(&model, &profile).unwrap();
    let ext = extension_of(&bl, Route::B).unwrap();
    let a = AmbientPoint::new(vec![C64::new(0.3, 0.2)], vec![C64::new(1.0, 0.5)]);
    let mut g = c.benchmark_group("transform");
    g.sample_size(10);
    g.bench_function("extension route B eval", |b| b.iter(|| ext.eval(black_box(&a)).unwrap()));
    g.bench_function("inverse sampled 13x13x257", |b| b.iter(|| bl.sampled_on(small).grid_values().unwrap()));
    let f = bl.sampled_on(small);
    let w = spectral_window(&ConvexBody::cuboid(&[(1.0, 2.0)]), 0.2, small).unwrap();
    g.bench_function("bandlimit_project 13x13x257", |b| b.iter(|| bandlimit_project(&model, &f, &w).unwrap().grid_values().unwrap()));
    g.finish();
}

criterion_group!(benches, spectral, fock, convex, transform);
criterion_main!(benches);
