use boolgrain::estimators::{volume_fraction_exact, volume_fraction_levels};
use boolgrain::field::{simulate_realization, Window, WindowShape};
use boolgrain::grains::{BaseShape, GrainModel, HeavyTailLaw};
use boolgrain::rng::RngStream;
use criterion::{criterion_group, criterion_main, Criterion};

fn pareto(nu: usize, xm: f64) -> GrainModel {
    GrainModel::homothetic(nu, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, xm).unwrap()).unwrap()
}

fn simulate(c: &mut Criterion) {
    let model = pareto(2, 1.0 / 3.0);
    let window = Window::new(WindowShape::unit_box(2), 2, 50.0).unwrap();
    let mut rep = 0;
    c.bench_function("simulate nu=2 lambda=50", |b| {
        b.iter(|| {
            rep += 1;
            simulate_realization(&model, &window, &mut RngStream::new(1, rep)).unwrap()
        })
    });
    let rz = simulate_realization(&model, &window, &mut RngStream::new(1, 0)).unwrap();
    let mut rng = RngStream::new(2, 0);
    c.bench_function("volume fraction 10k points nu=2", |b| b.iter(|| volume_fraction_levels(&rz, 2, 10_000, &mut rng).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let model = pareto(1, 1.0 / 6.0);
    let window = Window::new(WindowShape::unit_box(1), 1, 200.0).unwrap();
    let rz = simulate_realization(&model, &window, &mut RngStream::new(3, 0)).unwrap();
    c.bench_function("exact line sweep nu=1 lambda=200", |b| b.iter(|| volume_fraction_exact(&rz, 2).unwrap()));
}

criterion_group!(benches, simulate, sweep);
criterion_main!(benches);
