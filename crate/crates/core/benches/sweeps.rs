use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quadcert::composite::uniform_certificate;
use quadcert::oracle::{bounds_sweep, identity_sweep, SWEEP_EXPONENTS};
use quadcert::{Execution, FunctionSpec, Interval, LambdaPolicy, LambdaRule, PowerExponent};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn oracle_sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("identity_sweep", name), &exec, |b, &e| {
            b.iter(|| identity_sweep(black_box(e), 1e-12, 1e-10).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("bounds_sweep", name), &exec, |b, &e| {
            b.iter(|| bounds_sweep(black_box(e), &SWEEP_EXPONENTS, 1e-12).unwrap())
        });
    }
    g.finish();
}

fn uniform(c: &mut Criterion) {
    let f = FunctionSpec::parse("exp(x) * x^4 + 1/(x + 1)").unwrap();
    let iv = Interval::new(0.0, 2.0).unwrap();
    let mut g = c.benchmark_group("uniform_certificate");
    for (name, exec) in MODES {
        for policy in [
            LambdaPolicy::fixed(LambdaRule::SIMPSON),
            LambdaPolicy::PerCellBest,
        ] {
            let levels = if policy == LambdaPolicy::PerCellBest {
                8
            } else {
                14
            };
            let id = format!("{name}/{}", if levels == 8 { "best" } else { "simpson" });
            g.bench_function(id, |b| {
                b.iter(|| {
                    uniform_certificate(&f, iv, levels, policy, PowerExponent::ONE, black_box(exec))
                        .unwrap()
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, oracle_sweeps, uniform);
criterion_main!(benches);
