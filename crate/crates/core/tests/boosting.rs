use zkfl_core::boosting::{
    build_histogram, calibration_edges, merge_histograms, metrics, shard_gradients,
    train_centralized, BinnedMatrix, BoostParams, Ensemble, LossSpec,
};
use zkfl_core::data::generate_synthetic;

fn loss() -> LossSpec {
    LossSpec::fit(14, 6.0, 16, 32.0).unwrap()
}

fn train_accuracy_curve(noise: f64, seed: u64, rounds: usize) -> Vec<f64> {
    let data = generate_synthetic(2000, 10, noise, seed).unwrap();
    let edges = calibration_edges(&data.features, 32, seed);
    let binned = BinnedMatrix::new(&edges, &data.features).unwrap();
    let loss = loss();
    let params = BoostParams {
        rounds,
        ..BoostParams::default()
    };
    let mut curve = Vec::new();
    train_centralized(
        &binned,
        &data.labels,
        edges,
        loss.surrogate(),
        &params,
        |_, ens, raw| {
            let margins: Vec<f64> = raw.iter().map(|&r| ens.margin_from_raw(r)).collect();
            curve.push(metrics(&margins, &data.labels).accuracy);
        },
    )
    .unwrap();
    curve
}

#[test]
fn noiseless_data_is_learnable() {
    let curve = train_accuracy_curve(0.0, 7, 20);
    let last = *curve.last().unwrap();
    assert!(last >= 0.85, "training accuracy {last}");
}

#[test]
fn early_rounds_do_not_lose_accuracy() {
    let curve = train_accuracy_curve(0.05, 7, 5);
    for w in curve.windows(2) {
        assert!(w[1] >= w[0], "accuracy curve {curve:?}");
    }
}

#[test]
fn random_labels_stay_near_chance() {
    let data = generate_synthetic(2000, 10, 0.5, 5).unwrap();
    let test = generate_synthetic(2000, 10, 0.5, 6).unwrap();
    let edges = calibration_edges(&data.features, 32, 5);
    let binned = BinnedMatrix::new(&edges, &data.features).unwrap();
    let ens = train_centralized(
        &binned,
        &data.labels,
        edges,
        loss().surrogate(),
        &BoostParams::default(),
        |_, _, _| {},
    )
    .unwrap();
    let margins: Vec<f64> = test.features.iter().map(|x| ens.predict(x)).collect();
    let acc = metrics(&margins, &test.labels).accuracy;
    assert!((acc - 0.5).abs() <= 0.03, "held-out accuracy {acc}");
}

#[test]
fn fifty_node_merge_equals_pooled_histogram() {
    let data = generate_synthetic(2000, 10, 0.05, 3).unwrap();
    let edges = calibration_edges(&data.features, 32, 3);
    let binned = BinnedMatrix::new(&edges, &data.features).unwrap();
    let loss = loss();
    let ens = Ensemble::new(0.3, 16, edges.clone());
    let raw: Vec<i64> = (0..2000).map(|i| (i as i64 - 1000) * 97).collect();
    let grads = shard_gradients(loss.surrogate(), &ens, &data.labels, &raw).unwrap();
    let shape = edges.shape();
    let pooled = build_histogram(&binned, &shape, &grads, 0..2000);
    let per_node: Vec<_> = (0..50)
        .map(|k| build_histogram(&binned, &shape, &grads, k * 40..(k + 1) * 40))
        .collect();
    assert_eq!(merge_histograms(&per_node).unwrap(), pooled);
}
