use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use juggernaut_bench::{enumeration_slice, gc3, juggernaut};
use juggernaut_core::harness::{enumerate, execute};
use juggernaut_core::Setting;

fn end_to_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("juggernaut");
    for (n, t_s, t_i) in [(4, 1, 1), (7, 3, 1), (9, 4, 2)] {
        for setting in [Setting::Authenticated, Setting::Sabotaged] {
            let cfg = juggernaut(n, t_s, t_i, setting);
            g.bench_with_input(BenchmarkId::new(setting.name(), n), &cfg, |b, cfg| {
                b.iter(|| execute(cfg).expect("valid scenario"))
            });
        }
    }
    g.finish();
}

fn three_grade(c: &mut Criterion) {
    let mut g = c.benchmark_group("gc3");
    for (n, t_s, t_i) in [(4, 1, 1), (7, 2, 1), (10, 3, 2)] {
        let cfg = gc3(n, t_s, t_i);
        g.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| b.iter(|| execute(cfg).expect("valid")));
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let spec = enumeration_slice();
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    g.bench_function(&spec.name, |b| b.iter(|| enumerate(&spec).expect("within limits")));
    g.finish();
}

criterion_group!(benches, end_to_end, three_grade, enumeration);
criterion_main!(benches);
