//! Fixtures shared by the criterion benchmarks in `benches/`.

use roadgnn::datasets::{
    fit_normalizer, generate_synthetic, make_windows, split, SplitSpec, Splits, SyntheticConfig,
    WindowedSample,
};
use roadgnn::{GraphContext, Matrix, Rng};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
}

/// The canonical synthetic dataset (or a smaller one), windowed, split and normalised.
pub fn prepared(num_nodes: usize, num_timesteps: usize, window: usize) -> (GraphContext, Splits<WindowedSample>) {
    let ds = generate_synthetic(&SyntheticConfig {
        num_nodes,
        num_timesteps,
        ..SyntheticConfig::default()
    })
    .expect("valid synthetic config");
    let raw = split(make_windows(&ds, window).expect("window fits"), &SplitSpec::default()).expect("split");
    let norm = fit_normalizer(&raw.train, ds.num_channels()).expect("normaliser");
    let splits = Splits {
        train: norm.apply(&raw.train).expect("normalise"),
        val: norm.apply(&raw.val).expect("normalise"),
        test: norm.apply(&raw.test).expect("normalise"),
    };
    (GraphContext::new(ds.graph()).expect("graph"), splits)
}
