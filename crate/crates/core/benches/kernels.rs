use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dislocflow::grid::{Field, Grid};
use dislocflow::operators::{fractional_laplacian, LevyOperator, DEFAULT_INNER_CELLS};
use dislocflow::par::{map_collect, ExecMode};
use dislocflow::profile::AlphaParams;
use dislocflow::solver::{InitialCondition, RunConfig, Solver};
use std::hint::black_box;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn levy_quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("levy_quadrature");
    for n in [1024usize, 4096] {
        let g = Grid::new(n, 8.0).unwrap();
        let op = LevyOperator::new(g, 0.75, DEFAULT_INNER_CELLS).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &f, |b, f| {
                b.iter(|| op.apply_raw(black_box(f), mode).unwrap())
            });
        }
    }
    group.finish();
}

fn spectral_multiplier(c: &mut Criterion) {
    let mut group = c.benchmark_group("fractional_laplacian");
    for n in [1024usize, 8192] {
        let f = Field::from_fn(Grid::new(n, 8.0).unwrap(), |x| (-x * x).exp()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| fractional_laplacian(black_box(f), 0.75).unwrap())
        });
    }
    group.finish();
}

fn alpha_sweep(c: &mut Criterion) {
    let alphas: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
    let g = Grid::new(1024, 8.0).unwrap();
    let run = |&alpha: &f64| {
        let p = AlphaParams::new(alpha).unwrap();
        let cfg = RunConfig::new(
            alpha,
            g,
            0.5,
            InitialCondition::Box {
                width: 1.0,
                height: 1.0,
            },
        );
        let mut s = Solver::from_config(cfg, &p).unwrap();
        s.advance_to(0.5, |_| Ok(())).unwrap();
        s.state().v.sup_norm()
    };
    let mut group = c.benchmark_group("alpha_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| map_collect(black_box(&alphas), mode, run))
        });
    }
    group.finish();
}

criterion_group!(benches, levy_quadrature, spectral_multiplier, alpha_sweep);
criterion_main!(benches);
