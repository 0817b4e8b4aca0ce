use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use zkimg::cost::{CommitModes, SegmentShape};
use zkimg::gadgets::SynthConfig;
use zkimg::pipeline::synthesize_segment;
use zkimg::poseidon::{hash_image, permute};
use zkimg::{check_constraints, Fe, Image, TransformSpec};

fn sample(w: u32, h: u32) -> Image {
    Image::from_fn(w, h, |x, y, c| (x * 7 + y * 13 + c as u32 * 29) as u8)
}

fn poseidon(c: &mut Criterion) {
    let state = [Fe::from(1u64), Fe::from(2u64), Fe::from(3u64)];
    c.bench_function("permute", |b| b.iter(|| permute(black_box(state))));
    let img = sample(64, 48);
    c.bench_function("hash_image 64x48", |b| b.iter(|| hash_image(black_box(&img))));
}

fn segment(c: &mut Criterion) {
    let img = sample(64, 48);
    let ts: Vec<TransformSpec> = vec!["contrast f=1.5".parse().unwrap()];
    let ks = SegmentShape::new(&ts, img.dims(), CommitModes::BOTH).unwrap().baseline_ks();
    let mut g = c.benchmark_group("contrast segment 64x48");
    g.sample_size(10);
    g.bench_function("synthesize", |b| {
        b.iter(|| synthesize_segment(&ts, &img, &ks, CommitModes::BOTH, SynthConfig::default()).unwrap())
    });
    let built = synthesize_segment(&ts, &img, &ks, CommitModes::BOTH, SynthConfig::default()).unwrap();
    let s = &built.circuit;
    g.bench_function("check_constraints", |b| {
        b.iter(|| assert!(check_constraints(&s.layout, &s.witness, &s.instance).unwrap().satisfied))
    });
    g.finish();
}

criterion_group!(benches, poseidon, segment);
criterion_main!(benches);
