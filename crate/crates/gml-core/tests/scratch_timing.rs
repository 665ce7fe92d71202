// temporary calibration probe; deleted before finalizing
use gml_core::graph_ops::{degree_vector, moment_vector, PropagationRule};
use gml_core::graphgen::{build_benchmark, gen_ba, gen_er, BenchmarkKind};
use gml_core::nn::ModelSpec;
use gml_core::rng::child_seed;
use gml_core::training::{train_classifier, train_regression, TrainConfig};
use gml_core::{Activation, Graph};
use std::time::Instant;

fn ba_degree_dataset(count: usize, n: usize, m: usize, seed: u64) -> Vec<(Graph, Vec<f64>)> {
    (0..count)
        .map(|k| {
            let g = gen_ba(n, m, child_seed(seed, k as u64)).unwrap();
            let d = degree_vector(&g);
            (g, d)
        })
        .collect()
}

#[test]
#[ignore]
fn time_fc() {
    // biggest FC cell: units=50, dataset for 10000 train samples
    let ds = 14286;
    let t0 = Instant::now();
    let data: Vec<(Graph, Vec<f64>)> = (0..ds)
        .map(|k| {
            let g = gen_er(20, 0.3, child_seed(5, k as u64)).unwrap();
            let d = degree_vector(&g);
            (g, d)
        })
        .collect();
    println!("ER gen {ds}: {:?}", t0.elapsed());
    let spec = ModelSpec::fc_baseline(50);
    let cfg = TrainConfig { epochs: 5, patience: 5, seed: 1, ..TrainConfig::default() };
    let t1 = Instant::now();
    let r = train_regression(&spec, &data, &cfg).unwrap();
    println!("FC u=50 ds={ds}: 5 epochs {:?} ({:?}/epoch) best_val={}", t1.elapsed(), t1.elapsed()/5, r.best_val_loss);
}

#[test]
#[ignore]
fn time_n50_classification() {
    let bench = build_benchmark(BenchmarkKind::BaVsEr, 50, 500, 42).unwrap();
    let spec = ModelSpec::modular_classifier(3, 16, &PropagationRule::ALL, 2);
    let cfg = TrainConfig { epochs: 10, patience: 10, seed: 1, ..TrainConfig::default() };
    let t1 = Instant::now();
    let r = train_classifier(&spec, &bench.graphs, &cfg).unwrap();
    println!("N=50: 10 epochs {:?} ({:?}/epoch) acc={}", t1.elapsed(), t1.elapsed()/10, r.test_metric);
}

#[test]
#[ignore]
fn ablation_single_rule_arm() {
    let bench = build_benchmark(BenchmarkKind::BaVsEr, 30, 500, 42).unwrap();
    // {f1} with branch width 48 to match 3-rule params
    let mut spec = ModelSpec::modular_classifier(3, 16, &[PropagationRule::Adjacency], 2);
    spec.branch_units = 48;
    let cfg = TrainConfig { epochs: 40, patience: 40, seed: 1, ..TrainConfig::default() };
    let t1 = Instant::now();
    let r = train_classifier(&spec, &bench.graphs, &cfg).unwrap();
    println!("f1-only: 40 epochs {:?} acc={} best_epoch={}", t1.elapsed(), r.test_metric, r.best_epoch);
}

#[test]
#[ignore]
fn moment_exact_cells() {
    // p=n cells of the moments grid: need MSE < 1e-3 with linear activation
    for (p, layers) in [(1usize, 1usize), (2, 2), (3, 3)] {
        let data: Vec<(Graph, Vec<f64>)> = (0..300)
            .map(|k| {
                let g = gen_ba(20, 2, child_seed(9, k as u64)).unwrap();
                let t = moment_vector(&g, p);
                (g, t)
            })
            .collect();
        let spec = ModelSpec::plain_gcn(layers, 2, PropagationRule::Adjacency, Activation::Linear, true, false);
        let cfg = TrainConfig { epochs: 1000, patience: 150, learning_rate: 3e-3, seed: 1, ..TrainConfig::default() };
        let t1 = Instant::now();
        let r = train_regression(&spec, &data, &cfg).unwrap();
        println!("p={p} n={layers}: {:?} epochs_run={} test={}", t1.elapsed(), r.epochs_run, r.test_metric);
    }
}
