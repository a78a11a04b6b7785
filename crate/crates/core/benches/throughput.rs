//! Sequential vs rayon execution of the data-parallel kernels: running a
//! corpus through a target (the cmin / sweep scoring path) and validating it.

use std::hint::black_box;

use chatfuzz::harness::{default_seeds, lookup};
use chatfuzz::mutate::havoc::havoc;
use chatfuzz::parallel;
use chatfuzz::validate::Format;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(target: &str, size: usize) -> Vec<Vec<u8>> {
    let seeds = default_seeds(target).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..size)
        .map(|i| {
            let s = &seeds[i % seeds.len()];
            if i % 3 == 0 { s.clone() } else { havoc(s, &mut rng, &[], None, 4096) }
        })
        .collect()
}

fn execute(c: &mut Criterion) {
    let mut g = c.benchmark_group("execute");
    for target in ["toy-xml", "toy-script"] {
        let h = lookup(target).unwrap();
        let inputs = corpus(target, 2000);
        g.bench_with_input(BenchmarkId::new("sequential", target), &inputs, |b, inputs| {
            b.iter(|| parallel::map_seq(inputs, |s| black_box(h.run(s).map(|r| r.trace.len()))))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", target), &inputs, |b, inputs| {
            b.iter(|| parallel::map_par(inputs, |s| black_box(h.run(s).map(|r| r.trace.len()))))
        });
    }
    g.finish();
}

fn validate(c: &mut Criterion) {
    let mut g = c.benchmark_group("validate");
    for (target, format) in [("toy-json", Format::Json), ("toy-xml", Format::Xml)] {
        let inputs = corpus(target, 4000);
        g.bench_with_input(BenchmarkId::new("sequential", target), &inputs, |b, inputs| {
            b.iter(|| parallel::map_seq(inputs, |s| format.validate(s).is_valid()))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("parallel", target), &inputs, |b, inputs| {
            b.iter(|| parallel::map_par(inputs, |s| format.validate(s).is_valid()))
        });
    }
    g.finish();
}

criterion_group!(benches, execute, validate);
criterion_main!(benches);
