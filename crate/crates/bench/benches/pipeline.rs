use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use catmet_bench::{cat_input, lossy_fixture};
use catmet_core::channels::{lindblad_evolve, loss_channel};
use catmet_core::fisher::output_qfi;
use catmet_core::{best_working_point, qfi, rho_derivative, LossModel, Observable, ObservableKind};

fn bench_loss_channel(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_channel");
    for n in [10, 20, 40] {
        let rho = cat_input(0.49, n).density();
        group.bench_with_input(BenchmarkId::from_parameter(n), &rho, |b, rho| {
            b.iter(|| loss_channel(rho, 0.95, 0.95).unwrap())
        });
    }
    group.finish();
}

fn bench_qfi(c: &mut Criterion) {
    let (_, _, rho) = lossy_fixture(40);
    let d = rho_derivative(&rho);
    c.bench_function("qfi_n40", |b| b.iter(|| qfi(&rho, &d, 1).unwrap()));

    let (input, model, _) = lossy_fixture(40);
    c.bench_function("output_qfi_n40", |b| b.iter(|| output_qfi(&input, &model, 1).unwrap()));
}

fn bench_working_point(c: &mut Criterion) {
    let (input, model, _) = lossy_fixture(40);
    for kind in [ObservableKind::ParityB, ObservableKind::Jz] {
        let obs = Observable::single_shot(kind);
        c.bench_function(&format!("best_working_point_{kind}_n40"), |b| {
            b.iter(|| best_working_point(&input, &model, obs).unwrap())
        });
    }
}

fn bench_lindblad(c: &mut Criterion) {
    let rho = cat_input(0.5, 10).density();
    let model = LossModel::symmetric(0.2, 1.0).unwrap();
    let dt = model.default_step(10);
    let mut group = c.benchmark_group("lindblad_rk4");
    group.sample_size(10);
    group.bench_function("n10_gt0.2", |b| b.iter(|| lindblad_evolve(&rho, &model, dt).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_loss_channel, bench_qfi, bench_working_point, bench_lindblad);
criterion_main!(benches);
