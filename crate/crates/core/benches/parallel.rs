use berkovich::corpus::{builtin, Corpus};
use berkovich::dynamics::{nu, DynOptions, Exec};
use berkovich::map::RationalMap;
use berkovich::point::BerkPoint;
use berkovich::poly::Poly;
use berkovich::rational::frac;
use berkovich::suite::{verify_corpus, SuiteConfig};
use berkovich::valuation::FieldContext;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn pullback_levels(c: &mut Criterion) {
    let ctx = FieldContext::new(5, 20).unwrap();
    let phi =
        RationalMap::new(Poly::new(vec![frac(-1, 25), frac(0, 1), frac(1, 1)]), Poly::new(vec![frac(1, 1)]), &ctx)
            .unwrap();
    let mut group = c.benchmark_group("nu_level_4");
    for (name, exec) in MODES {
        let opts = DynOptions { exec, ..DynOptions::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| nu(black_box(&phi), &BerkPoint::gauss(), 4, &opts).unwrap())
        });
    }
    group.finish();
}

fn corpus_suite(c: &mut Criterion) {
    let corpus = Corpus { maps: builtin().maps.into_iter().take(6).collect(), fault_injection: None };
    let mut group = c.benchmark_group("verify_corpus");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SuiteConfig {
            n_max: 3,
            derivative_samples: 50,
            lipschitz_pairs: 500,
            trees: 50,
            opts: DynOptions { exec, ..DynOptions::default() },
            ..SuiteConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_corpus(black_box(&corpus), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pullback_levels, corpus_suite);
criterion_main!(benches);
