use roadgnn::datasets::{
    generate_synthetic, load_dataset, make_windows, split, write_dataset, SplitSpec, SyntheticConfig,
    Topology,
};
use roadgnn::graph::GraphContext;
use roadgnn::models::{Checkpoint, Model, ModelSpec};
use roadgnn::training::{evaluate, HistoricalMean};
use roadgnn::Rng;

#[test]
fn written_dataset_reloads_bit_for_bit() {
    let ds = generate_synthetic(&SyntheticConfig {
        num_nodes: 15,
        num_timesteps: 40,
        seed: 8,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (graph, features) = write_dataset(&ds, dir.path()).unwrap();
    assert_eq!(load_dataset(&graph, &features).unwrap(), ds);
}

#[test]
fn grid_edges_match_enumeration() {
    // 20 nodes on a 4x5 lattice: count right and down neighbours directly
    let (rows, cols) = (4, 5);
    let mut expected = 0;
    for r in 0..rows {
        for c in 0..cols {
            expected += usize::from(c + 1 < cols) + usize::from(r + 1 < rows);
        }
    }
    let ds = generate_synthetic(&SyntheticConfig {
        num_nodes: 20,
        num_timesteps: 10,
        topology: Topology::Grid,
        ..SyntheticConfig::default()
    })
    .unwrap();
    assert_eq!(ds.graph().edges().len(), expected);
    assert_eq!(expected, 31);
}

#[test]
fn baseline_error_on_pure_noise_is_the_noise_level() {
    let sigma = 0.5;
    let ds = generate_synthetic(&SyntheticConfig {
        num_nodes: 30,
        num_timesteps: 400,
        diffusion_rate: 0.0,
        amplitude: 0.0,
        noise_std: sigma,
        seed: 12,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let s = split(make_windows(&ds, 6).unwrap(), &SplitSpec::default()).unwrap();
    let m = HistoricalMean::fit(&s.train).unwrap().evaluate(&s.test).unwrap();
    // the mean of ~275 noisy draws sits within σ/16 of the latent level, so RMSE ≈ σ
    assert!((m.rmse - sigma).abs() < 0.1 * sigma, "rmse {} for sigma {sigma}", m.rmse);
    assert!(m.mae <= m.rmse);
}

#[test]
fn checkpoint_reload_preserves_test_metrics() {
    let ds = generate_synthetic(&SyntheticConfig {
        num_nodes: 10,
        num_timesteps: 50,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let ctx = GraphContext::new(ds.graph()).unwrap();
    let s = split(make_windows(&ds, 3).unwrap(), &SplitSpec::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(6);
    for spec in [ModelSpec::gcn(9, 2, 5), ModelSpec::sage(9, 5, vec![3]), ModelSpec::ggnn(9, 2, 5)] {
        let model = Model::new(spec, &mut rng).unwrap();
        let before = evaluate(&model, &ctx, &s.test).unwrap();
        let path = dir.path().join(format!("{}.json", model.spec().key()));
        Checkpoint::from_model(&model, serde_json::Value::Null).write(&path).unwrap();
        let reloaded = Checkpoint::read(&path).unwrap().into_model().unwrap();
        let after = evaluate(&reloaded, &ctx, &s.test).unwrap();
        assert_eq!(before.rmse.to_bits(), after.rmse.to_bits());
        assert_eq!(before.mae.to_bits(), after.mae.to_bits());
    }
}
