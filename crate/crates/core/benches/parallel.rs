use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use silentspecies::analysis::{self, ReportOptions};
use silentspecies::resampling::{accumulate_tally, bootstrap_ci, AccumulateOptions, BootstrapOptions};
use silentspecies::synth::{self, AbundanceModel, PopulationSpec};
use silentspecies::tally::{GroupedDataset, Mode, Tally};
use silentspecies::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn zipf(s_true: usize, n: u64, seed: u64) -> Tally {
    let pop = synth::generate(&PopulationSpec {
        s_true,
        distribution: AbundanceModel::Zipf { alpha: 1.0 },
        seed,
    })
    .unwrap();
    synth::sample(&pop, n, seed).unwrap().into()
}

fn bootstrap(c: &mut Criterion) {
    let t = zipf(2000, 50_000, 1);
    let mut g = c.benchmark_group("bootstrap_1000");
    for (name, execution) in MODES {
        let opts = BootstrapOptions { execution, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| bootstrap_ci(black_box(&t), &opts).unwrap()));
    }
    g.finish();
}

fn accumulate(c: &mut Criterion) {
    let t = zipf(2000, 20_000, 2);
    let sizes = [1000, 5000, 10_000, 20_000];
    let mut g = c.benchmark_group("accumulate_200");
    g.sample_size(10);
    for (name, execution) in MODES {
        let opts = AccumulateOptions { replicates: 200, execution, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| accumulate_tally(black_box(&t), &sizes, &opts).unwrap())
        });
    }
    g.finish();
}

fn report(c: &mut Criterion) {
    let groups = (0..200).map(|i| (format!("g{i:03}"), zipf(500, 5000, i))).collect();
    let ds = GroupedDataset::new("group", Mode::Abundance, groups).unwrap();
    let mut g = c.benchmark_group("report_200_groups");
    for (name, execution) in MODES {
        let opts = ReportOptions { execution, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| analysis::report(black_box(&ds), &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bootstrap, accumulate, report);
criterion_main!(benches);
