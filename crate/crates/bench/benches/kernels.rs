use std::f64::consts::{PI, TAU};
use std::hint::black_box;

use cauchy_core::interval::{
    calderon_projections, find_eigenvalues, sf_mas_experiment, CalderonMethod, DoubleCoupling, IntervalSystem,
    OperatorPath, RealizedOperator, SfMasOptions,
};
use cauchy_core::linalg::{c, real, CMat, CVec};
use cauchy_core::random::{self, SymbolShape};
use cauchy_core::sectorial::{sectorial_projection, TangentialMatrix};
use cauchy_core::symplectic::LagrangianFrame;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn sectorial(cr: &mut Criterion) {
    let mut g = cr.benchmark_group("sectorial_projection");
    let mut rng = random::rng(1);
    for n in [2, 4, 8] {
        let b0 = TangentialMatrix::new(random::matrix_with_margin(&mut rng, n, 0.1)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &b0, |b, b0| {
            b.iter(|| sectorial_projection(black_box(b0), 0.25).unwrap())
        });
    }
    g.finish();
}

fn calderon(cr: &mut Criterion) {
    let mut g = cr.benchmark_group("calderon_projections");
    let mut rng = random::rng(2);
    for n in [2, 4] {
        let sys = random::symmetric_system(&mut rng, n, SymbolShape::VariableK).unwrap();
        let coupling = DoubleCoupling::default_for(&sys).unwrap();
        for (label, method) in [("complement", CalderonMethod::Complement), ("jump", CalderonMethod::Jump)] {
            g.bench_function(BenchmarkId::new(label, n), |b| {
                b.iter(|| calderon_projections(black_box(&sys), &coupling, method).unwrap())
            });
        }
    }
    g.finish();
}

fn morse(cr: &mut Criterion) {
    let l = 4.0 * PI;
    let j = CMat::from_row_slice(2, 2, &[real(0.0), real(-1.0), real(1.0), real(0.0)]);
    let k = CMat::from_diagonal(&CVec::from_vec(vec![real(-l), real(-l)]));
    let w = CMat::from_diagonal(&CVec::from_vec(vec![real(l), real(0.0)]));
    let sys = IntervalSystem::symmetric(j, k).unwrap().with_weight(w).unwrap();
    let mut d = CMat::zeros(4, 2);
    d[(1, 0)] = real(1.0);
    d[(3, 1)] = real(1.0);
    let op = RealizedOperator::new(sys, LagrangianFrame::new(d).unwrap()).unwrap();
    cr.bench_function("find_eigenvalues/morse", |b| {
        b.iter(|| find_eigenvalues(black_box(&op), (-2.0, 0.5)).unwrap())
    });
}

fn flow(cr: &mut Criterion) {
    let base = IntervalSystem::new(CMat::from_element(1, 1, c(0.0, -1.0)), CMat::zeros(1, 1)).unwrap();
    let path = OperatorPath::new(base, vec![CMat::from_element(1, 1, real(1.0)).into()], (0.0, TAU), 16).unwrap();
    let domain = LagrangianFrame::new(CMat::from_column_slice(2, 1, &[real(1.0), real(1.0)])).unwrap();
    let opts = SfMasOptions::default();
    let mut g = cr.benchmark_group("sf_mas");
    g.sample_size(10);
    g.bench_function("periodic_shift", |b| {
        b.iter(|| sf_mas_experiment(black_box(&path), &domain, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sectorial, calderon, morse, flow);
criterion_main!(benches);
