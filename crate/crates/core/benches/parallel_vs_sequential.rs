use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hamclosure::bracket::check_flatness;
use hamclosure::closures::{Branch, Closure, ClosureFamily};
use hamclosure::sim::{Derivative, Field, FieldState, FluidModel, FluidSolver, Grid, Operators, Perturbation};
use hamclosure::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn burby(level: usize) -> Closure {
    Closure::new(ClosureFamily::Burby {
        level,
        branch: Branch::Plus,
    })
    .unwrap()
}

fn fluid_rhs(c: &mut Criterion) {
    let closure = burby(4);
    let mut group = c.benchmark_group("fluid_rhs_burby_m4");
    for nx in [1024, 16384] {
        let grid = Grid::new(2.0 * PI, nx).unwrap();
        let mut state = FieldState::homogeneous(&grid, 1.0, 0.0, &[0.05, 0.1, 0.2, 0.3]);
        state
            .perturb(&grid, &Perturbation::cosine(Field::Density, 0.01, 1))
            .unwrap();
        for (name, exec) in MODES {
            let solver = FluidSolver::new(
                Operators::new(grid, Derivative::Spectral),
                FluidModel::new(&closure),
                exec,
            );
            group.bench_with_input(BenchmarkId::new(name, nx), &state, |b, s| {
                b.iter(|| solver.rhs(black_box(s)).unwrap())
            });
        }
    }
    group.finish();
}

fn flatness(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_flatness_burby");
    group.sample_size(10);
    for level in [4, 6] {
        let closure = burby(level);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, level), &closure, |b, cl| {
                b.iter(|| assert!(check_flatness(black_box(cl), exec).passed()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, fluid_rhs, flatness);
criterion_main!(benches);
