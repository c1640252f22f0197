use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use eann::layers::Mode;
use eann::model::{Model, ModelConfig, Variant};
use eann::preprocess::{build_vocab, Document, Label};
use eann::synthetic::{keyword_corpus, synthetic_glove, CorpusSpec};
use eann::train::batch_gradients;
use eann::Exec;

fn setup() -> (Model, Vec<Document>) {
    let docs = keyword_corpus(&CorpusSpec {
        n_docs: 64,
        offensive_ratio: 0.3,
        seed: 1,
        ..CorpusSpec::default()
    });
    let cfg = ModelConfig {
        embed_dim: 32,
        lstm_hidden: 32,
        attention_dim: 32,
        filters: 32,
        dense_units: 64,
        maxlen: 20,
        ..ModelConfig::new(Variant::CnnBilstmEaEmoji)
    };
    let (vocab, table) = build_vocab(&docs, &synthetic_glove(32, 1), 1).unwrap();
    (Model::build(cfg, table, vocab).unwrap(), docs)
}

fn execs() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    if Exec::parallel_available() {
        v.push(("parallel", Exec::Parallel));
    }
    v
}

fn inference(c: &mut Criterion) {
    let (model, docs) = setup();
    let mut group = c.benchmark_group("forward_64_docs");
    for (name, exec) in execs() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| model.forward(black_box(&docs), exec).unwrap())
        });
    }
    group.finish();
}

fn gradient_step(c: &mut Criterion) {
    let (model, docs) = setup();
    let inputs = model.prepare_all(&docs[..32]).unwrap();
    let refs: Vec<_> = inputs.iter().collect();
    let labels: Vec<Label> = docs[..32].iter().map(|d| d.label).collect();
    let seeds: Vec<u64> = (0..33).collect();
    let mut group = c.benchmark_group("batch_gradients_32_docs");
    for (name, exec) in execs() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                batch_gradients(model.config(), model.params(), &refs, &labels, Mode::Train, &seeds, exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = inference, gradient_step
}
criterion_main!(benches);
