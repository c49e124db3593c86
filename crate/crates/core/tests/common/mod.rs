#![allow(dead_code)]

use bpcol::gen::{generate, GenParams, PlantedInstance};
use bpcol::graph::{ArcTable, Graph};
use bpcol::lab::ArcVector;
use bpcol::rng;
use nalgebra::DMatrix;
use rand::Rng;

pub fn planted(per_class: usize, d: usize, seed: u64) -> (PlantedInstance, ArcTable) {
    let inst = generate(&GenParams::new(per_class, d, seed)).expect("generation succeeds");
    let arcs = ArcTable::new(&inst.graph);
    (inst, arcs)
}

pub fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.num_vertices();
    let mut a = DMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    a
}

/// Chi-square statistic of observed counts against a uniform distribution.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

/// 99% critical value of the chi-square distribution with `dof` degrees.
pub fn chi_square_critical_99(dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99)
}

/// `L` as an explicit `3|A| × 3|A|` matrix, index `3 * arc + color`, built
/// from the edge list alone.
pub fn dense_l(g: &Graph, arcs: &ArcTable) -> DMatrix<f64> {
    let k = arcs.len();
    let mut l = DMatrix::zeros(3 * k, 3 * k);
    for (v, w) in (0..k).map(|a| arcs.endpoints(a)) {
        let row = arcs.arc(v, w).unwrap();
        for &u in g.neighbors(v) {
            if u == w {
                continue;
            }
            let col = arcs.arc(u, v).unwrap();
            for c in 0..3 {
                l[(3 * row + c, 3 * col + c)] = -0.5;
            }
        }
    }
    l
}

pub fn random_vector(len: usize, scale: f64, seed: u64) -> ArcVector {
    let mut r = rng::stream(seed, 0);
    ArcVector(
        (0..len)
            .map(|_| std::array::from_fn(|_| r.random_range(-scale..scale)))
            .collect(),
    )
}

pub fn random_zero_sum(len: usize, scale: f64, seed: u64) -> ArcVector {
    let mut r = rng::stream(seed, 0);
    ArcVector(
        (0..len)
            .map(|_| loop {
                let a = r.random_range(-scale..scale);
                let b = r.random_range(-scale..scale);
                if (a + b).abs() <= scale {
                    break [a, b, -a - b];
                }
            })
            .collect(),
    )
}

pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::stream(seed, 1);
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| r.random_range(0.0..1.0) < p)
        .collect();
    Graph::from_edges(n, edges).unwrap()
}
