use proptest::prelude::*;

use roadgnn::datasets::{fit_normalizer, make_windows, split, SplitSpec, TrafficDataset, CHANNEL_NAMES};
use roadgnn::graph::{build_adjacency, permute_graph, permute_rows, symmetric_normalize, RoadGraph};
use roadgnn::models::layers::{ggnn_step_cached, GgnnWeights};
use roadgnn::training::Metrics;
use roadgnn::Matrix;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn graph(max_n: usize) -> impl Strategy<Value = RoadGraph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            let edges = pairs.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e).collect();
            RoadGraph::new(n, edges).unwrap()
        })
    })
}

fn graph_and_perm(max_n: usize) -> impl Strategy<Value = (RoadGraph, Vec<usize>)> {
    graph(max_n).prop_flat_map(|g| {
        let ids: Vec<usize> = (0..g.num_nodes()).collect();
        (Just(g), Just(ids).prop_shuffle())
    })
}

proptest! {
    #[test]
    fn matmul_is_associative(
        (a, b, c) in (1usize..6, 1usize..6, 1usize..6, 1usize..6)
            .prop_flat_map(|(m, k, l, n)| (matrix(m, k), matrix(k, l), matrix(l, n)))
    ) {
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-9);
    }

    #[test]
    fn relu_is_idempotent(x in matrix(3, 4)) {
        let once = x.relu();
        prop_assert_eq!(once.relu(), once);
    }

    #[test]
    fn sigmoid_is_symmetric(x in -60.0f64..60.0) {
        let s = Matrix::row_vector(&[x]).sigmoid().get(0, 0);
        let t = Matrix::row_vector(&[-x]).sigmoid().get(0, 0);
        prop_assert!((s + t - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalisation_conjugates_under_permutation((g, perm) in graph_and_perm(7)) {
        let a = build_adjacency(&g).unwrap();
        let norm = symmetric_normalize(&a).unwrap();
        let gp = permute_graph(&g, &perm).unwrap();
        let norm_p = symmetric_normalize(&build_adjacency(&gp).unwrap()).unwrap();
        // P·Â·Pᵀ = permute rows, then permute rows of the transpose
        let rows = permute_rows(norm.matrix(), &perm).unwrap();
        let conj = permute_rows(&rows.transpose(), &perm).unwrap().transpose();
        prop_assert!(norm_p.matrix().max_abs_diff(&conj) <= 1e-12);
    }

    #[test]
    fn mae_never_exceeds_rmse(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..200)
    ) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = Metrics::from_pairs(&p, &y).unwrap();
        prop_assert!(m.mae <= m.rmse + 1e-12);
    }

    #[test]
    fn ggnn_state_stays_between_old_and_candidate(
        (g, weights, b, h) in (graph(6), 1usize..5).prop_flat_map(|(g, d)| {
            let n = g.num_nodes();
            (Just(g), prop::collection::vec(matrix(d, d), 7), matrix(1, d), matrix(n, d))
        }),
    ) {
        let w = GgnnWeights {
            msg_w: &weights[0],
            msg_b: &b,
            update_w: &weights[1],
            update_u: &weights[2],
            reset_w: &weights[3],
            reset_u: &weights[4],
            cand_w: &weights[5],
            cand_u: &weights[6],
        };
        let adj = build_adjacency(&g).unwrap();
        let (next, cache) = ggnn_step_cached(&adj, &h, w).unwrap();
        for i in 0..next.as_slice().len() {
            let (old, cand, new) = (h.as_slice()[i], cache.candidate().as_slice()[i], next.as_slice()[i]);
            prop_assert!(old.min(cand) <= new && new <= old.max(cand), "{old} {cand} {new}");
        }
    }

    #[test]
    fn normaliser_ignores_everything_after_the_training_split(
        values in prop::collection::vec(0.0f64..50.0, 2 * 20 * 3),
        replacement in 0.0f64..1e4,
    ) {
        let build = |vals: &[f64]| {
            let targets = (0..20 * 2).map(|i| vals[i * 3]).collect();
            let names = CHANNEL_NAMES.iter().map(|s| s.to_string()).collect();
            TrafficDataset::new(RoadGraph::new(2, vec![(0, 1)]).unwrap(), 20, vals.to_vec(), targets, names).unwrap()
        };
        let fit = |ds: &TrafficDataset| {
            let s = split(make_windows(ds, 3).unwrap(), &SplitSpec::default()).unwrap();
            fit_normalizer(&s.train, 3).unwrap()
        };
        let base = fit(&build(&values));
        // 17 windows → 11 train samples, whose inputs reach timestep 12 at most
        let mut altered = values.clone();
        for x in &mut altered[13 * 2 * 3..] {
            *x = replacement;
        }
        prop_assert_eq!(fit(&build(&altered)), base);
    }
}
