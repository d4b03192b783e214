use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use radargnn::geometry::rotated_iou;
use radargnn::graph::KdTree;
use radargnn::model::postprocess;
use radargnn::{build_graph, AbsoluteBox, GraphConfig, InvarianceMode, RadarGnn};
use radargnn_bench::{model_config, scene};

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for objects in [2, 8] {
        let s = scene(objects, 1);
        let positions = s.cloud.positions();
        group.bench_with_input(BenchmarkId::from_parameter(positions.len()), &positions, |b, pts| {
            b.iter(|| {
                let tree = KdTree::new(pts);
                (0..pts.len()).map(|i| tree.nearest(i, 20).len()).sum::<usize>()
            })
        });
    }
    group.finish();
}

fn graphs(c: &mut Criterion) {
    let s = scene(4, 2);
    let cfg = GraphConfig::default();
    let mut group = c.benchmark_group("build_graph");
    for mode in InvarianceMode::ALL {
        group.bench_function(mode.name(), |b| b.iter(|| build_graph(black_box(&s.cloud), &cfg, mode).unwrap()));
    }
    group.finish();
}

fn forward(c: &mut Criterion) {
    let s = scene(4, 3);
    let mut group = c.benchmark_group("forward");
    group.sample_size(20);
    for mode in InvarianceMode::ALL {
        let model = RadarGnn::new(model_config(mode, 64)).unwrap();
        let params = model.init_params(0).unwrap();
        let graph = model.build_graph(&s.cloud).unwrap();
        group.bench_function(mode.name(), |b| b.iter(|| model.forward(&params, black_box(&graph)).unwrap()));
    }
    group.finish();
}

fn gradients(c: &mut Criterion) {
    let s = scene(4, 4);
    let model = RadarGnn::new(model_config(InvarianceMode::TranslationRotation, 64)).unwrap();
    let params = model.init_params(0).unwrap();
    let example = model.prepare(&s).unwrap();
    let mut group = c.benchmark_group("objective_gradients");
    group.sample_size(20);
    group.bench_function("translation_rotation", |b| {
        b.iter(|| model.objective_gradients(&params, &example, &[1.0; 6]).unwrap())
    });
    group.finish();
}

fn detection(c: &mut Criterion) {
    let a = AbsoluteBox::new(0.0, 0.0, 1.8, 4.5, 0.3);
    let b = AbsoluteBox::new(0.7, -0.4, 2.0, 4.0, 1.1);
    c.bench_function("rotated_iou", |bench| bench.iter(|| rotated_iou(black_box(&a), black_box(&b))));

    let s = scene(6, 5);
    let model = RadarGnn::new(model_config(InvarianceMode::TranslationRotation, 32)).unwrap();
    let params = model.init_params(0).unwrap();
    let pred = model.forward(&params, &model.build_graph(&s.cloud).unwrap()).unwrap();
    let mut cfg = model.config().clone();
    cfg.class_thresholds = [0.0; 5];
    c.bench_function("postprocess", |bench| bench.iter(|| postprocess(&pred, &s.cloud, &cfg).unwrap()));
}

criterion_group!(benches, knn, graphs, forward, gradients, detection);
criterion_main!(benches);
