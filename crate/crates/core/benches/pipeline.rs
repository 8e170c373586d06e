//! Sequential vs parallel execution of the dense-field pipeline stages.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phasekit::internal::{build_characteristic_with, translation_kernel_with};
use phasekit::moments::{internal_moment_table_with, moment_xp_with};
use phasekit::phase_space::{density, probability_amplitude_with, wigner_moyal_with};
use phasekit::states::build_state;
use phasekit::{Convention, Execution, Grid1D, OperatorOrder, StateSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn pipeline(c: &mut Criterion) {
    for n in [256usize, 1024] {
        let grid = Grid1D::new(-16.0, 32.0 / n as f64, n).unwrap();
        let psi = build_state(&StateSpec::gaussian(1.5, -2.0, 1.0), &grid, 1.0).unwrap();
        let xi = build_characteristic_with(&psi, Convention::Plain, Execution::Sequential);
        let phi = probability_amplitude_with(&xi, Execution::Sequential);
        let f = density(&phi);

        let mut group = c.benchmark_group(format!("n={n}"));
        group.sample_size(10);
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new("characteristic", name), |b| {
                b.iter(|| build_characteristic_with(&psi, Convention::Plain, exec))
            });
            group.bench_function(BenchmarkId::new("probability_amplitude", name), |b| {
                b.iter(|| probability_amplitude_with(&xi, exec))
            });
            group.bench_function(BenchmarkId::new("translation_kernel", name), |b| {
                b.iter(|| translation_kernel_with(&xi, 0.5, exec).unwrap())
            });
            group.bench_function(BenchmarkId::new("wigner_moyal", name), |b| {
                b.iter(|| wigner_moyal_with(&f, 0.5, exec))
            });
            group.bench_function(BenchmarkId::new("moment_x2p2", name), |b| {
                b.iter(|| moment_xp_with(&xi, 2, 2, OperatorOrder::XP, exec))
            });
            group.bench_function(BenchmarkId::new("moment_table_4x4", name), |b| {
                b.iter(|| internal_moment_table_with(&xi, 4, 4, exec).unwrap())
            });
        }
        group.finish();
    }
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
