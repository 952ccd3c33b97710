//! Regenerates the bundled sample datasets under `data/`.
//!
//! `cargo run -p oversmooth --example make_sample_data -- data`

use std::fmt::Write as _;
use std::path::PathBuf;

use oversmooth::io::format_edge_list;
use oversmooth::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Preferential attachment: each new node links to one or two existing nodes
/// chosen proportionally to degree. Sized like the WebKB Texas graph.
fn heterophily_scale_graph(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = vec![(0, 1), (1, 2), (0, 2)];
    let mut endpoints: Vec<usize> = vec![0, 1, 1, 2, 0, 2];
    for new in 3..n {
        let links = if rng.random_bool(0.6) { 2 } else { 1 };
        let mut chosen = Vec::new();
        while chosen.len() < links {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for t in chosen {
            edges.push((t, new));
            endpoints.extend([t, new]);
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are valid")
}

struct Sbm {
    graph: Graph,
    labels: Vec<usize>,
    splits: Vec<&'static str>,
    features: Vec<Vec<f64>>,
}

/// Three-community stochastic block model with noisy class-centroid features
/// and a 60/20/20 split.
fn sbm(seed: u64) -> Sbm {
    let (classes, per_class, dim) = (3, 80, 16);
    let (p_in, p_out) = (0.05, 0.006);
    let n = classes * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i / per_class).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let centroids: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let features = labels
        .iter()
        .map(|&c| {
            centroids[c]
                .iter()
                .map(|mu| 0.6 * mu + rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut splits = vec!["train"; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = match rank * 10 / n {
            0..=5 => "train",
            6 | 7 => "val",
            _ => "test",
        };
    }
    Sbm {
        graph: Graph::from_edges(n, &edges).expect("generated edges are valid"),
        labels,
        splits,
        features,
    }
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(dir.join("sbm"))?;

    let texas = heterophily_scale_graph(183, 7);
    std::fs::write(
        dir.join("texas_scale.edges"),
        format!("# preferential-attachment graph sized like WebKB Texas\n{}", format_edge_list(&texas)),
    )?;

    let data = sbm(11);
    std::fs::write(dir.join("sbm/graph.edges"), format_edge_list(&data.graph))?;
    let mut labels = String::new();
    let mut splits = String::new();
    let mut features = String::new();
    for i in 0..data.labels.len() {
        let _ = writeln!(labels, "{i} {} {}", data.labels[i], data.splits[i]);
        let _ = writeln!(splits, "{i} {}", data.splits[i]);
        let row: Vec<String> = data.features[i].iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(features, "{i} {}", row.join(" "));
    }
    std::fs::write(dir.join("sbm/labels.txt"), labels)?;
    std::fs::write(dir.join("sbm/splits.txt"), splits)?;
    std::fs::write(dir.join("sbm/features.txt"), features)?;
    println!(
        "texas_scale: {} nodes, {} edges; sbm: {} nodes, {} edges",
        texas.node_count(),
        texas.edge_count(),
        data.graph.node_count(),
        data.graph.edge_count()
    );
    Ok(())
}
