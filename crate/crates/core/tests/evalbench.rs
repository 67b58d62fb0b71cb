use egvi::evalbench::{
    evaluate_similarity, inventory_stats, inventory_stats_for, pearson, Benchmark, EvalError,
    PlantedFixture, Scoring,
};
use egvi::inventory::{build_inventory, BuildOptions, InductionParams, WordSelection};
use proptest::prelude::*;

fn inventory(f: &PlantedFixture, lambda: f64) -> egvi::SenseInventory {
    build_inventory(
        &f.matrix,
        &WordSelection::All,
        &InductionParams {
            lambda,
            ..InductionParams::with_neighbors(30, 30)
        },
        &BuildOptions::default(),
    )
    .unwrap()
    .inventory
}

#[test]
fn lambda_one_matches_baseline() {
    let f = PlantedFixture::build();
    let bench = f.benchmark(30);
    let inv = inventory(&f, 1.0);
    let senses = evaluate_similarity(&f.matrix, Scoring::Senses(&inv), &bench).unwrap();
    let baseline = evaluate_similarity(&f.matrix, Scoring::Baseline, &bench).unwrap();
    assert!((senses.pearson - baseline.pearson).abs() < 1e-6);
    assert_eq!(senses.coverage, 1.0);
}

#[test]
fn baseline_ignores_the_inventory() {
    let f = PlantedFixture::build();
    let bench = f.benchmark(30);
    let a = evaluate_similarity(&f.matrix, Scoring::Baseline, &bench).unwrap();
    let inv = inventory(&f, 0.5);
    let b = evaluate_similarity(&f.matrix, Scoring::Baseline, &bench).unwrap();
    let c = evaluate_similarity(&f.matrix, Scoring::Senses(&inv), &bench).unwrap();
    assert_eq!(a, b);
    assert_eq!(c.mode, "senses");
}

#[test]
fn degenerate_benchmark_is_an_error() {
    let f = PlantedFixture::build();
    let bench = Benchmark::read(
        "flat",
        "hub\tc1m00\t5\nhub\tc2m00\t5\nhub\tc3m00\t5\n".as_bytes(),
    )
    .unwrap();
    assert!(matches!(
        evaluate_similarity(&f.matrix, Scoring::Baseline, &bench),
        Err(EvalError::DegenerateVariance)
    ));
}

#[test]
fn fixture_inventory_statistics() {
    let f = PlantedFixture::build();
    let inv = inventory(&f, 0.5);
    let all = inventory_stats(&inv).unwrap();
    assert_eq!(all.words, 61);
    assert!(all.mean >= 1.0);
    assert_eq!(all.histogram.values().sum::<usize>(), 61);
    let hub = inventory_stats_for(&inv, ["hub", "hub", "missing"]).unwrap();
    assert_eq!((hub.words, hub.mean, hub.max), (1, 3.0, 3));
}

#[test]
fn report_serializes_to_json() {
    let f = PlantedFixture::build();
    let report = evaluate_similarity(&f.matrix, Scoring::Baseline, &f.benchmark(30)).unwrap();
    let json: serde_json::Value = serde_json::to_value(&report).unwrap();
    assert_eq!(json["n_pairs"], 30);
    assert!(json["coverage"].as_f64().unwrap() <= 1.0);
    assert!(report.to_string().contains("coverage"));
}

proptest! {
    #[test]
    fn pearson_is_affine_invariant(
        xs in proptest::collection::vec(-100.0f64..100.0, 3..40),
        noise in proptest::collection::vec(-10.0f64..10.0, 40),
        a in 0.01f64..50.0,
        b in -100.0f64..100.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
        let base = match pearson(&xs, &ys) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        prop_assert!((pearson(&moved, &ys).unwrap() - base).abs() < 1e-9);
        let moved_y: Vec<f64> = ys.iter().map(|y| a * y - b).collect();
        prop_assert!((pearson(&xs, &moved_y).unwrap() - base).abs() < 1e-9);
    }
}
