use criterion::{criterion_group, criterion_main, Criterion};
use relaymimo::mc::{mc_ber_with, mc_mi_gaussian, McOptions};
use relaymimo::replica::{jdd_rate, solve_branches, SolverOptions};
use relaymimo::scalar::{eps_actual, scalar_mi, ScalarParams};
use relaymimo::{
    build_network, db_to_linear, BetaMode, ChannelNorm, Constellation, DetectorSpec, NetworkConfig,
};
use std::hint::black_box;

fn net(antennas: &[usize], db: f64) -> NetworkConfig {
    let r = db_to_linear(db);
    let k = antennas.len() - 1;
    build_network(
        k,
        antennas,
        &vec![r; k],
        BetaMode::Auto,
        ChannelNorm::default(),
    )
    .unwrap()
}

fn scalar(c: &mut Criterion) {
    let q = Constellation::qpsk();
    let psk8 = Constellation::psk(8).unwrap();
    let p = ScalarParams::new(3.0, 1.0, 1.0).unwrap();
    c.bench_function("scalar_mi qpsk", |b| {
        b.iter(|| scalar_mi(black_box(3.0), 1.0, &q))
    });
    c.bench_function("scalar_mi 8psk", |b| {
        b.iter(|| scalar_mi(black_box(3.0), 1.0, &psk8))
    });
    c.bench_function("eps_actual qpsk", |b| {
        b.iter(|| eps_actual(black_box(&p), &q, &q))
    });
}

fn replica(c: &mut Criterion) {
    let g = Constellation::gaussian();
    let q = Constellation::qpsk();
    let cfg = net(&[8, 8, 8, 8], 10.0);
    c.bench_function("jdd_rate gaussian K=3", |b| {
        b.iter(|| jdd_rate(black_box(&cfg), &g, true))
    });
    c.bench_function("jdd_rate qpsk K=3", |b| {
        b.iter(|| jdd_rate(black_box(&cfg), &q, true))
    });
    let fig8 = net(&[10, 9, 8, 7], 18.5);
    let map = DetectorSpec::map(&q);
    c.bench_function("branches map fig8 18.5dB", |b| {
        b.iter(|| solve_branches(black_box(&fig8), &map, &q, &SolverOptions::default()))
    });
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte carlo");
    g.sample_size(10);
    let cfg = net(&[8, 8, 8, 8], 10.0);
    g.bench_function("log-det 100 realizations", |b| {
        b.iter(|| mc_mi_gaussian(black_box(&cfg), 100, 1))
    });
    let q = Constellation::qpsk();
    let cfg = net(&[24, 28, 36], 10.0);
    let opts = McOptions::new(20, 16, 1);
    g.bench_function("lmmse ber 20 realizations", |b| {
        b.iter(|| mc_ber_with(black_box(&cfg), &DetectorSpec::lmmse(), &q, &opts))
    });
    g.finish();
}

criterion_group!(benches, scalar, replica, monte_carlo);
criterion_main!(benches);
