//! Spectral regularity checks and the spectral coloring heuristic.
//!
//! A planted graph is regular in the spectral sense when every difference of
//! class indicators `1_i - 1_j` is an eigenvector of the adjacency matrix with
//! eigenvalue `-d` (R1), and `‖Aξ‖ <= εd‖ξ‖` for all `ξ` orthogonal to the
//! three indicators (R2).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::CLASS_PAIRS;
use crate::graph::{Graph, PlantedColoring};

pub fn adjacency_matvec(graph: &Graph, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != graph.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: graph.num_vertices(),
            found: x.len(),
        });
    }
    Ok(matvec(graph, x))
}

fn matvec(graph: &Graph, x: &[f64]) -> Vec<f64> {
    (0..graph.num_vertices())
        .map(|v| graph.neighbors(v).iter().map(|&w| x[w]).sum())
        .collect()
}

/// `‖A(1_i - 1_j) + d(1_i - 1_j)‖∞` for the class pairs (0,1), (0,2), (1,2),
/// computed in integer arithmetic.
pub fn verify_r1(graph: &Graph, coloring: &PlantedColoring, d: usize) -> [f64; 3] {
    CLASS_PAIRS.map(|(i, j)| {
        let x = |v: usize| -> i64 {
            match coloring.class_of(v) {
                c if c == i => 1,
                c if c == j => -1,
                _ => 0,
            }
        };
        (0..graph.num_vertices())
            .map(|v| {
                let ax: i64 = graph.neighbors(v).iter().map(|&w| x(w)).sum();
                (ax + d as i64 * x(v)).unsigned_abs()
            })
            .max()
            .unwrap_or(0) as f64
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub r1_residual: f64,
    pub epsilon_hat: f64,
    pub power_iters: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct PowerSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerSettings {
    fn default() -> Self {
        PowerSettings {
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

/// Removes the class-indicator components: subtracts each class mean.
fn deflate_classes(x: &mut [f64], coloring: &PlantedColoring) {
    let mut sum = [0.0; 3];
    for (v, xv) in x.iter().enumerate() {
        sum[coloring.class_of(v)] += xv;
    }
    let sizes = coloring.class_sizes();
    let mean: [f64; 3] = std::array::from_fn(|c| {
        if sizes[c] > 0 {
            sum[c] / sizes[c] as f64
        } else {
            0.0
        }
    });
    for (v, xv) in x.iter_mut().enumerate() {
        *xv -= mean[coloring.class_of(v)];
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Estimates `ε̂ = max ‖Aξ‖ / (d‖ξ‖)` over `ξ` orthogonal to the class
/// indicators, by power iteration on `P A² P` where `P` removes the indicator
/// components.
pub fn estimate_epsilon<R: Rng + ?Sized>(
    graph: &Graph,
    coloring: &PlantedColoring,
    d: usize,
    settings: PowerSettings,
    rng: &mut R,
) -> Result<RegularityReport> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    if coloring.num_vertices() != graph.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: graph.num_vertices(),
            found: coloring.num_vertices(),
        });
    }
    let r1_residual = verify_r1(graph, coloring, d)
        .into_iter()
        .fold(0.0, f64::max);
    let n = graph.num_vertices();
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    deflate_classes(&mut v, coloring);
    let nv = norm(&v);
    let report = |theta: f64, iters, converged| RegularityReport {
        r1_residual,
        epsilon_hat: theta.max(0.0).sqrt() / d as f64,
        power_iters: iters,
        converged,
    };
    if nv == 0.0 {
        return Ok(report(0.0, 0, true));
    }
    v.iter_mut().for_each(|x| *x /= nv);
    // Values of sqrt(theta) below this are indistinguishable from round-off.
    let floor = 1e-10 * d as f64;
    let mut theta_prev = f64::NAN;
    for k in 1..=settings.max_iters {
        let av = matvec(graph, &v);
        let theta = av.iter().map(|x| x * x).sum::<f64>();
        if theta.sqrt() <= floor {
            return Ok(report(theta, k, true));
        }
        if (theta - theta_prev).abs() <= settings.tol * theta {
            return Ok(report(theta, k, true));
        }
        theta_prev = theta;
        let mut w = matvec(graph, &av);
        deflate_classes(&mut w, coloring);
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(report(theta, k, true));
        }
        v = w.into_iter().map(|x| x / nw).collect();
    }
    Ok(report(theta_prev, settings.max_iters, false))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralColoring {
    pub colors: Vec<u8>,
    /// Ritz values of `-A` for the two extracted eigenvectors.
    pub ritz_values: [f64; 2],
    pub iters: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralSettings {
    /// Clustering tolerance relative to the eigenvector sup norm.
    pub cluster_tol: f64,
    /// Residual tolerance relative to the degree bound.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        SpectralSettings {
            cluster_tol: 1e-6,
            tol: 1e-11,
            max_iters: 10_000,
        }
    }
}

fn orthonormalize(block: &mut DMatrix<f64>) {
    let n = block.nrows();
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    for j in 0..block.ncols() {
        for _ in 0..2 {
            let ones: f64 = block.column(j).sum() * inv_sqrt_n;
            block.column_mut(j).add_scalar_mut(-ones * inv_sqrt_n);
            for k in 0..j {
                let dot = block.column(k).dot(&block.column(j));
                let ck = block.column(k).clone_owned();
                block.column_mut(j).axpy(-dot, &ck, 1.0);
            }
        }
        let nj = block.column(j).norm();
        if nj > 0.0 {
            block.column_mut(j).scale_mut(1.0 / nj);
        }
    }
}

/// Two orthonormal eigenvectors of `A` for its most negative eigenvalue
/// (nominally `-d`), found by block power iteration on `-A` with the all-ones
/// direction removed, followed by a Rayleigh-Ritz rotation each step.
fn bottom_pair<R: Rng + ?Sized>(
    graph: &Graph,
    settings: &SpectralSettings,
    rng: &mut R,
) -> (DMatrix<f64>, [f64; 2], usize, bool) {
    let n = graph.num_vertices();
    let p = 4.min(n.saturating_sub(1)).max(2);
    let mut block = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    orthonormalize(&mut block);
    let max_deg = (0..n).map(|v| graph.degree(v)).max().unwrap_or(0).max(1) as f64;
    let mut ritz = [0.0; 2];
    for iter in 1..=settings.max_iters {
        let mut image = DMatrix::zeros(n, p);
        for j in 0..p {
            let col: Vec<f64> = block.column(j).iter().copied().collect();
            let av = matvec(graph, &col);
            for (i, x) in av.into_iter().enumerate() {
                image[(i, j)] = -x;
            }
        }
        let h = block.transpose() * &image;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let rot = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
        let vecs = &block * &rot;
        let imgs = &image * &rot;
        ritz = [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]];
        let resid = (0..2)
            .map(|j| (imgs.column(j) - vecs.column(j) * ritz[j]).norm())
            .fold(0.0, f64::max);
        if resid <= settings.tol * max_deg {
            return (vecs.columns(0, 2).into_owned(), ritz, iter, true);
        }
        block = imgs;
        orthonormalize(&mut block);
    }
    (
        block.columns(0, 2).into_owned(),
        ritz,
        settings.max_iters,
        false,
    )
}

/// Groups points whose coordinates agree within `tol` (sup distance) with a
/// group's first member. Returns group labels in order of first appearance.
fn cluster(points: &[[f64; 2]], tol: f64) -> Vec<usize> {
    let mut leaders: Vec<[f64; 2]> = Vec::new();
    points
        .iter()
        .map(|p| {
            let hit = leaders
                .iter()
                .position(|q| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol);
            hit.unwrap_or_else(|| {
                leaders.push(*p);
                leaders.len() - 1
            })
        })
        .collect()
}

/// Colors the graph by clustering vertices on their coordinates in the
/// bottom eigenspace of the adjacency matrix.
pub fn spectral_color<R: Rng + ?Sized>(
    graph: &Graph,
    settings: &SpectralSettings,
    rng: &mut R,
) -> Result<SpectralColoring> {
    let n = graph.num_vertices();
    if n < 3 {
        return Err(Error::ClusteringFailed(n));
    }
    let (vecs, ritz_values, iters, converged) = bottom_pair(graph, settings, rng);
    let scale = vecs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let points: Vec<[f64; 2]> = (0..n)
        .map(|v| [vecs[(v, 0)] / scale, vecs[(v, 1)] / scale])
        .collect();
    let labels = cluster(&points, settings.cluster_tol);
    let groups = labels.iter().max().map_or(0, |&g| g + 1);
    if groups != 3 {
        return Err(Error::ClusteringFailed(groups));
    }
    Ok(SpectralColoring {
        colors: labels.into_iter().map(|g| g as u8).collect(),
        ritz_values,
        iters,
        converged,
    })
}

/// `|e(S,T) - |S||T|p| / (d^0.51 sqrt(|S||T|))` with `p = d/m`.
pub fn discrepancy(graph: &Graph, s: &[usize], t: &[usize], d: usize, m: usize) -> f64 {
    let mut in_t = vec![false; graph.num_vertices()];
    for &w in t {
        in_t[w] = true;
    }
    let e: usize = s
        .iter()
        .map(|&v| graph.neighbors(v).iter().filter(|&&w| in_t[w]).count())
        .sum();
    let st = (s.len() * t.len()) as f64;
    let p = d as f64 / m as f64;
    (e as f64 - st * p).abs() / ((d as f64).powf(0.51) * st.sqrt())
}

/// Largest normalized discrepancy over random subsets `S ⊂ V_i`, `T ⊂ V_j`
/// of uniformly random sizes.
pub fn discrepancy_check<R: Rng + ?Sized>(
    graph: &Graph,
    coloring: &PlantedColoring,
    d: usize,
    num_samples: usize,
    rng: &mut R,
) -> f64 {
    let mut members: Vec<Vec<usize>> = (0..3).map(|c| coloring.members(c)).collect();
    let m = coloring.class_sizes()[0];
    let mut worst = 0.0f64;
    for _ in 0..num_samples {
        let (i, j) = CLASS_PAIRS[rng.random_range(0..3)];
        if members[i].is_empty() || members[j].is_empty() {
            continue;
        }
        let ks = rng.random_range(1..=members[i].len());
        let kt = rng.random_range(1..=members[j].len());
        let s = members[i].partial_shuffle(rng, ks).0.to_vec();
        let t = members[j].partial_shuffle(rng, kt).0.to_vec();
        worst = worst.max(discrepancy(graph, &s, &t, d, m));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::matches_up_to_permutation;
    use crate::graph::octahedron;
    use crate::rng;

    #[test]
    fn matvec_examples() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(
            adjacency_matvec(&tri, &[1.0, 0.0, 0.0]).unwrap(),
            vec![0.0, 1.0, 1.0]
        );
        assert!(adjacency_matvec(&tri, &[1.0]).is_err());
        let (g, c) = octahedron();
        assert_eq!(adjacency_matvec(&g, &[1.0; 6]).unwrap(), vec![4.0; 6]);
        let x: Vec<f64> = (0..6)
            .map(|v| match c.class_of(v) {
                0 => 1.0,
                1 => -1.0,
                _ => 0.0,
            })
            .collect();
        let ax = adjacency_matvec(&g, &x).unwrap();
        for v in 0..6 {
            assert_eq!(ax[v], -2.0 * x[v]);
        }
    }

    #[test]
    fn r1_octahedron() {
        let (g, c) = octahedron();
        assert_eq!(verify_r1(&g, &c, 2), [0.0; 3]);
        assert_eq!(verify_r1(&g, &c, 3), [1.0; 3]);
        let cut = Graph::from_edges(6, g.edges().iter().copied().filter(|&e| e != (0, 2))).unwrap();
        assert_eq!(verify_r1(&cut, &c, 2)[0], 1.0);
    }

    #[test]
    fn epsilon_octahedron_is_zero() {
        let (g, c) = octahedron();
        let mut r = rng::stream(0, 0);
        let rep = estimate_epsilon(&g, &c, 2, PowerSettings::default(), &mut r).unwrap();
        assert!(rep.epsilon_hat < 1e-8, "{rep:?}");
        assert!(rep.converged);
        assert_eq!(rep.r1_residual, 0.0);
    }

    #[test]
    fn epsilon_on_two_octahedra() {
        let (g, _) = octahedron();
        let edges = g
            .edges()
            .iter()
            .flat_map(|&(u, v)| [(u, v), (u + 6, v + 6)]);
        let g2 = Graph::from_edges(12, edges).unwrap();
        let classes = [0u8, 0, 1, 1, 2, 2];
        let c2 = PlantedColoring::new(classes.iter().chain(&classes).copied().collect()).unwrap();
        let mut r = rng::stream(0, 0);
        let rep = estimate_epsilon(&g2, &c2, 2, PowerSettings::default(), &mut r).unwrap();
        assert!(rep.converged);
        // all-ones on one copy minus all-ones on the other is orthogonal to the
        // merged indicators and has eigenvalue 2d = 4, so ε̂ = 4/2.
        assert!((rep.epsilon_hat - 2.0).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn spectral_color_octahedron() {
        let (g, c) = octahedron();
        let mut r = rng::stream(0, 0);
        let out = spectral_color(&g, &SpectralSettings::default(), &mut r).unwrap();
        assert!(matches_up_to_permutation(&out.colors, c.classes()));
        assert!((out.ritz_values[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn discrepancy_examples() {
        let (g, c) = octahedron();
        let full = discrepancy(&g, &c.members(0), &c.members(1), 2, 2);
        assert_eq!(full, 0.0);
        let single = discrepancy(&g, &[0], &[2], 2, 2);
        assert_eq!(single, 0.0);
        let inst = crate::gen::generate(&crate::gen::GenParams::new(10, 3, 1)).unwrap();
        let (v, w) = inst.graph.edges()[0];
        let got = discrepancy(&inst.graph, &[v], &[w], 3, 10);
        assert!((got - (1.0 - 0.3) / 3f64.powf(0.51)).abs() < 1e-15);
        let mut r = rng::stream(0, 0);
        let worst = discrepancy_check(&inst.graph, &inst.coloring, 3, 200, &mut r);
        assert!(worst.is_finite() && worst >= 0.0);
    }
}
