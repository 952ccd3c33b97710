use std::path::Path;

use proptest::prelude::*;

use oversmooth::io;

use oversmooth::layers::{
    dropedge_sample, g2_step, gat_step, gcn_step, gcnii_step, graphcon_step, pairnorm_apply, sage_step, Activation,
    Coupling, G2Params, GatParams, GcnParams, GcniiParams, GraphconParams, GraphconState, SageParams,
};
use oversmooth::{
    dirichlet_measure, fit_decay, mad, DecayClass, FitOptions, Graph, GraphKind, Matrix, MeasureSeries, Normalization,
};

fn graph_strategy(max_v: usize) -> impl Strategy<Value = Graph> {
    (2..=max_v).prop_flat_map(|v| {
        let pairs: Vec<(usize, usize)> = (0..v).flat_map(|i| (i + 1..v).map(move |j| (i, j))).collect();
        proptest::sample::subsequence(pairs.clone(), 0..=pairs.len())
            .prop_map(move |edges| Graph::from_edges(v, &edges).unwrap())
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
}

/// A graph with features of width `m` and a node permutation.
fn instance(max_v: usize, m: usize) -> impl Strategy<Value = (Graph, Matrix, Vec<usize>)> {
    graph_strategy(max_v).prop_flat_map(move |g| {
        let v = g.node_count();
        (Just(g), matrix(v, m), Just((0..v).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dirichlet_ignores_constant_shifts((g, x, _) in instance(12, 3), c in proptest::collection::vec(-5.0..5.0f64, 3)) {
        let shifted = x.add_row_vector(&c).unwrap();
        let a = dirichlet_measure(&x, &g, 2.0, Normalization::Plain).unwrap();
        let b = dirichlet_measure(&shifted, &g, 2.0, Normalization::Plain).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn dirichlet_is_absolutely_homogeneous((g, x, _) in instance(12, 3), s in -4.0..4.0f64, p in 1.0..4.0f64) {
        let a = dirichlet_measure(&x, &g, p, Normalization::Plain).unwrap();
        let b = dirichlet_measure(&x.scale(s), &g, p, Normalization::Plain).unwrap();
        prop_assert!((b - s.abs() * a).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn measures_are_permutation_invariant((g, x, perm) in instance(12, 3)) {
        let gp = g.permute(&perm).unwrap();
        let xp = x.permute_rows(&perm);
        for p in [1.5, 2.0, 3.0] {
            let a = dirichlet_measure(&x, &g, p, Normalization::Plain).unwrap();
            let b = dirichlet_measure(&xp, &gp, p, Normalization::Plain).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        }
        prop_assert!((mad(&x, &g).unwrap() - mad(&xp, &gp).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn mad_is_bounded_and_ignores_positive_row_scaling(
        (g, x, _) in instance(12, 3),
        d in proptest::collection::vec(0.1..10.0f64, 12),
    ) {
        let v = g.node_count();
        let mu = mad(&x, &g).unwrap();
        prop_assert!(mu >= 0.0 && mu <= 4.0 * g.edge_count() as f64 / v as f64 + 1e-12);
        let scaled = Matrix::from_fn(v, x.cols(), |i, k| d[i] * x[(i, k)]);
        prop_assert!((mad(&scaled, &g).unwrap() - mu).abs() <= 1e-10);
    }

    #[test]
    fn layers_are_permutation_equivariant((g, x, perm) in instance(10, 3), w in matrix(3, 3), b in matrix(1, 3), a in proptest::collection::vec(-1.0..1.0f64, 6)) {
        let gp = g.permute(&perm).unwrap();
        let xp = x.permute_rows(&perm);
        let bias = Some(b.as_slice().to_vec());
        let gcn = GcnParams::new(w.clone(), bias.clone()).unwrap();
        let gat = GatParams::new(w.clone(), a, bias.clone()).unwrap();
        let sage = SageParams::new(w.clone(), w.transpose(), bias).unwrap();
        let act = Activation::Tanh;

        let lhs = gcn_step(&xp, &gp, &gcn, act).unwrap();
        prop_assert!(close(&lhs, &gcn_step(&x, &g, &gcn, act).unwrap().permute_rows(&perm), 1e-12));
        let lhs = gat_step(&xp, &gp, &gat, act).unwrap();
        prop_assert!(close(&lhs, &gat_step(&x, &g, &gat, act).unwrap().permute_rows(&perm), 1e-12));
        let lhs = sage_step(&xp, &gp, &sage, act).unwrap();
        prop_assert!(close(&lhs, &sage_step(&x, &g, &sage, act).unwrap().permute_rows(&perm), 1e-12));

        let g2 = G2Params { gate: gcn.clone(), p: 2.0 };
        let coupling = Coupling::Gcn(gcn.clone());
        let lhs = g2_step(&xp, &gp, &coupling, &g2, act).unwrap();
        prop_assert!(close(&lhs, &g2_step(&x, &g, &coupling, &g2, act).unwrap().permute_rows(&perm), 1e-12));

        let state = GraphconState::new(x.clone(), x.scale(0.5)).unwrap();
        let state_p = GraphconState::new(xp.clone(), xp.scale(0.5)).unwrap();
        let params = GraphconParams { gamma: 1.0, alpha: 0.5, dt: 0.3 };
        let lhs = graphcon_step(&state_p, &gp, &coupling, &params, act).unwrap();
        let rhs = graphcon_step(&state, &g, &coupling, &params, act).unwrap();
        prop_assert!(close(&lhs.x, &rhs.x.permute_rows(&perm), 1e-12));
        prop_assert!(close(&lhs.y, &rhs.y.permute_rows(&perm), 1e-12));

        let gcnii = GcniiParams { alpha: 0.1, beta: 0.4, weight: w };
        let x0 = x.scale(-1.0);
        let lhs = gcnii_step(&xp, &x0.permute_rows(&perm), &gp, &gcnii, act).unwrap();
        prop_assert!(close(&lhs, &gcnii_step(&x, &x0, &g, &gcnii, act).unwrap().permute_rows(&perm), 1e-12));
    }

    #[test]
    fn pairnorm_is_idempotent_and_fixes_the_scale((_, x, _) in instance(12, 3), s in 0.1..5.0f64) {
        prop_assume!(!x.rows_identical());
        let once = pairnorm_apply(&x, s).unwrap();
        let twice = pairnorm_apply(&once, s).unwrap();
        prop_assert!(close(&once, &twice, 1e-9));
        let v = once.rows() as f64;
        let mean_sq = once.as_slice().iter().map(|a| a * a).sum::<f64>() / v;
        prop_assert!((mean_sq - s * s).abs() <= 1e-9 * s * s);
        prop_assert!(once.column_means().iter().all(|c| c.abs() <= 1e-9));
    }

    #[test]
    fn dropedge_keeps_a_symmetric_subgraph(g in graph_strategy(15), rate in 0.0..=1.0f64, seed in any::<u64>()) {
        let h = dropedge_sample(&g, rate, seed).unwrap();
        prop_assert_eq!(h.node_count(), g.node_count());
        for (i, j) in h.edges() {
            prop_assert!(g.has_edge(i, j));
            prop_assert!(h.has_edge(j, i));
        }
        prop_assert_eq!(dropedge_sample(&g, rate, seed).unwrap().edges().collect::<Vec<_>>(), h.edges().collect::<Vec<_>>());
    }

    #[test]
    fn fit_ignores_positive_scaling(
        values in proptest::collection::vec(1e-6..1e3f64, 6..60),
        factor in 1e-3..1e3f64,
    ) {
        let s = MeasureSeries::layered("dirichlet", "r", values).unwrap();
        let opts = FitOptions::default();
        let a = fit_decay(&s, &opts).unwrap();
        let b = fit_decay(&s.scaled(factor), &opts).unwrap();
        prop_assert_eq!(a.classification, b.classification);
        prop_assert!((a.c2 - b.c2).abs() <= 1e-9 * (1.0 + a.c2.abs()));
    }

    #[test]
    fn exact_exponentials_are_recovered(c1 in 1e-3..1e3f64, c2 in 0.06..2.0f64, n in 10usize..80) {
        let values = (0..n).map(|k| c1 * (-c2 * k as f64).exp()).collect();
        let s = MeasureSeries::layered("dirichlet", "r", values).unwrap();
        let f = fit_decay(&s, &FitOptions::default()).unwrap();
        prop_assert_eq!(f.classification, DecayClass::Exponential);
        prop_assert!((f.c2 - c2).abs() <= 1e-9 * c2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_csv_round_trips_exactly(
        runs in proptest::collection::btree_map("[a-z][a-z0-9:_-]{0,8}", proptest::collection::vec(0.0..1e6f64, 0..20), 0..4),
    ) {
        let series: Vec<MeasureSeries> = runs
            .into_iter()
            .map(|(id, values)| MeasureSeries::layered("dirichlet", id, values).unwrap().with_metadata("seed", 3))
            .collect();
        let text = io::format_series(&series).unwrap();
        let back = io::parse_series(&text, Path::new("mem")).unwrap();
        let nonempty: Vec<&MeasureSeries> = series.iter().filter(|s| !s.is_empty()).collect();
        prop_assert_eq!(back.len(), nonempty.len());
        for (a, b) in back.iter().zip(nonempty) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(io::format_series(&back).unwrap().lines().filter(|l| !l.starts_with('#')).count(),
            text.lines().filter(|l| !l.starts_with('#')).count());
    }

    #[test]
    fn edge_lists_round_trip(g in graph_strategy(20)) {
        let text = io::format_edge_list(&g);
        let back = io::parse_edge_list(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(back.graph.node_count(), g.node_count());
        prop_assert_eq!(back.graph.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}

#[test]
fn gcn_preserves_constants_on_regular_graphs() {
    for kind in [GraphKind::Ring(9), GraphKind::Complete(6), GraphKind::Grid2d { height: 1, width: 2 }] {
        let g = Graph::generate(kind).unwrap();
        let x = Matrix::broadcast_row(g.node_count(), &[1.5, -2.0, 0.25]);
        let params = GcnParams::new(Matrix::identity(3), None).unwrap();
        let y = gcn_step(&x, &g, &params, Activation::Identity).unwrap();
        assert!(y.max_abs_diff(&x) <= 1e-14, "{kind}");
    }
}
