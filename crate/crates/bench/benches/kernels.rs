use std::hint::black_box;

use besselhit::closed_form::{kappa, tau0_tail};
use besselhit::numerics::{reg_gamma_q, Quadrature};
use besselhit::pde_oracle::solve_survival;
use besselhit::simulate::{hitting_before, tau0_sample};
use besselhit::{EulerConfig, RngStream, SignedIndex, SurvivalGrid};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn special(c: &mut Criterion) {
    let mut g = c.benchmark_group("special");
    for &(s, x) in &[(0.3, 0.01), (0.7, 1.5), (2.5, 40.0)] {
        g.bench_with_input(BenchmarkId::new("reg_gamma_q", format!("{s}/{x}")), &(s, x), |b, &(s, x)| {
            b.iter(|| reg_gamma_q(black_box(s), black_box(x)))
        });
    }
    g.bench_function("tau0_tail", |b| b.iter(|| tau0_tail(black_box(0.7), 2.0, black_box(1e4))));
    g.bench_function("kappa", |b| b.iter(|| kappa(black_box(0.4))));
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let q = Quadrature::with_tol(1e-12);
    c.bench_function("quad/endpoint_singular", |b| {
        b.iter(|| q.integrate(|x: f64| x.powf(-0.6) * (-x).exp(), 0.0, black_box(5.0)))
    });
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for &per_decade in &[25usize, 50] {
        let grid = SurvivalGrid::for_tail(1.0, 2.0, 1e-3, 1e3, per_decade, 10, 32).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", per_decade), &grid, |b, grid| {
            b.iter(|| solve_survival(0.8, 1.0, grid).unwrap())
        });
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sampling");
    g.bench_function("tau0_sample", |b| {
        let mut rng = RngStream::new(7, 0).rng();
        b.iter(|| tau0_sample(0.7, 1.5, &mut rng).unwrap())
    });
    let index = SignedIndex::minus(0.8).unwrap();
    for &dt in &[1e-2, 1e-3] {
        let cfg = EulerConfig::with_dt(dt);
        g.bench_with_input(BenchmarkId::new("hitting_before", dt), &cfg, |b, cfg| {
            let mut rng = RngStream::new(7, 1).rng();
            b.iter(|| hitting_before(index, 2.0, 1.0, 5.0, cfg, &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, special, quadrature, oracle, sampling);
criterion_main!(benches);
