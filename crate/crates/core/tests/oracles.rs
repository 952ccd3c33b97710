//! Dense linear-algebra oracles for the sparse kernels.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oversmooth::continuous::laplacian_lambda_max;
use oversmooth::{dirichlet_energy, Graph, GraphKind, Matrix, Normalization};

fn random_graph(rng: &mut ChaCha8Rng, v: usize, p: f64) -> Graph {
    let edges: Vec<(usize, usize)> = (0..v)
        .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
        .filter(|_| rng.random_bool(p))
        .collect();
    Graph::from_edges(v, &edges).unwrap()
}

fn adjacency(g: &Graph) -> DMatrix<f64> {
    let v = g.node_count();
    DMatrix::from_fn(v, v, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 })
}

fn laplacian(g: &Graph) -> DMatrix<f64> {
    let a = adjacency(g);
    DMatrix::from_diagonal(&a.column_sum()) - a
}

fn dense(x: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(x.rows(), x.cols(), |i, k| x[(i, k)])
}

#[test]
fn energy_matches_laplacian_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let v = rng.random_range(2..60);
        let p = rng.random_range(0.05..0.6);
        let g = random_graph(&mut rng, v, p);
        let x = Matrix::from_fn(v, rng.random_range(1..6), |_, _| rng.random_range(-2.0..2.0));
        let xd = dense(&x);
        let l = laplacian(&g);

        let plain = 2.0 / v as f64 * (xd.transpose() * &l * &xd).trace();
        assert_relative_eq!(
            dirichlet_energy(&x, &g, 2.0, Normalization::Plain).unwrap(),
            plain,
            max_relative = 1e-10,
            epsilon = 1e-12
        );

        let scale = DMatrix::from_fn(v, v, |i, j| {
            if i == j {
                1.0 / (1.0 + g.degree(i) as f64).sqrt()
            } else {
                0.0
            }
        });
        let y = &scale * &xd;
        let degree = 2.0 * (y.transpose() * &l * &y).trace();
        assert_relative_eq!(
            dirichlet_energy(&x, &g, 2.0, Normalization::Degree).unwrap(),
            degree,
            max_relative = 1e-10,
            epsilon = 1e-12
        );
    }
}

#[test]
fn normalized_operator_matches_dense_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let v = rng.random_range(1..40);
        let g = random_graph(&mut rng, v, 0.2);
        let a_hat = adjacency(&g) + DMatrix::identity(v, v);
        let d = a_hat.column_sum().map(|s| 1.0 / s.sqrt());
        let p = DMatrix::from_diagonal(&d) * a_hat * DMatrix::from_diagonal(&d);
        let ours = g.normalized_operator().to_dense();
        for i in 0..v {
            for j in 0..v {
                assert_relative_eq!(ours[(i, j)], p[(i, j)], epsilon = 1e-15);
            }
        }
        let x = Matrix::from_fn(v, 3, |_, _| rng.random_range(-1.0..1.0));
        let px = g.normalized_operator().apply(&x).unwrap();
        let oracle = &p * dense(&x);
        for i in 0..v {
            for k in 0..3 {
                assert_relative_eq!(px[(i, k)], oracle[(i, k)], epsilon = 1e-13);
            }
        }
    }
}

#[test]
fn power_iteration_matches_dense_eigenvalues() {
    for kind in [
        GraphKind::Ring(10),
        GraphKind::Grid2d { height: 5, width: 7 },
        GraphKind::Star(9),
        GraphKind::Barbell(5),
        GraphKind::Complete(8),
    ] {
        let g = Graph::generate(kind).unwrap();
        let eig = SymmetricEigen::new(laplacian(&g));
        let top = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
        assert_relative_eq!(laplacian_lambda_max(&g), top, max_relative = 1e-6);
    }
}
