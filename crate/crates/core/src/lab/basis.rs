//! The class-structured subspace and the dominant eigenvectors of `L`.
//!
//! For an ordered class pair `(i, j)`, `e_ij` is the indicator of the arcs
//! from class `i` to class `j`. On a planted-regular graph their span `E₀` is
//! invariant under `M - K`, which acts there as the 6×6 matrix
//! [`m_matrix`] in the basis order `(e01, e02, e10, e12, e20, e21)`.

use nalgebra::{Complex, Matrix6, Vector6};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ArcTable, PlantedColoring};

use super::operators::{apply_l, apply_l_single, apply_m};
use super::vector::{norm2, ArcVector};

/// Ordered class pairs in basis order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

pub fn pair_index(i: usize, j: usize) -> Option<usize> {
    PAIRS.iter().position(|&p| p == (i, j))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralConstants {
    pub d: usize,
    /// `λ = d/4 + sqrt(d² - 8d + 4)/4`, the dominant eigenvalue of `L`.
    pub lambda: f64,
    /// `Λ = -d/2 - sqrt(d² - 8d + 4)/2`, so that `λ = -Λ/2`.
    pub big_lambda: f64,
    /// `Λ' = -d/2 + sqrt(d² - 8d + 4)/2`.
    pub big_lambda_prime: f64,
    /// Eigenvalue of `L` on the color-constant vectors `e^a`.
    pub e_eigenvalue: f64,
}

impl SpectralConstants {
    /// Needs `d >= 8`: below that `d² - 8d + 4 < 0` and `Λ` is not real.
    pub fn new(d: usize) -> Result<SpectralConstants> {
        if d < 8 {
            return Err(Error::DegreeTooSmall(d));
        }
        let df = d as f64;
        let root = (df * df - 8.0 * df + 4.0).sqrt();
        Ok(SpectralConstants {
            d,
            lambda: df / 4.0 + root / 4.0,
            big_lambda: -df / 2.0 - root / 2.0,
            big_lambda_prime: -df / 2.0 + root / 2.0,
            e_eigenvalue: 0.5 - df,
        })
    }
}

/// `M - K` on `E₀`, built from `(M - K) e_ij = d e_jk + (d - 1) e_ji` with `k`
/// the third class.
pub fn m_matrix(d: usize) -> Matrix6<f64> {
    let df = d as f64;
    let mut m = Matrix6::zeros();
    for (col, &(i, j)) in PAIRS.iter().enumerate() {
        let k = 3 - i - j;
        m[(pair_index(j, k).expect("pair"), col)] += df;
        m[(pair_index(j, i).expect("pair"), col)] += df - 1.0;
    }
    m
}

/// Eigenvalues of [`m_matrix`], sorted by real part.
pub fn m_eigenvalues(d: usize) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m_matrix(d).complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    ev
}

/// Orthonormal basis of the null space of a 6×6 matrix of nullity two.
fn null_pair(a: Matrix6<f64>) -> Result<[Vector6<f64>; 2]> {
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Eigen("SVD did not return V".into()))?;
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let sv = |k: usize| svd.singular_values[order[k]];
    let scale = svd.singular_values.max().max(1.0);
    if sv(1) > 1e-9 * scale || sv(2) < 1e-6 * scale {
        return Err(Error::Eigen(format!(
            "expected a two-dimensional null space, singular values {:?}",
            svd.singular_values.as_slice()
        )));
    }
    Ok([0, 1].map(|k| vt.row(order[k]).transpose()))
}

/// Two orthogonal `Λ`-eigenvectors of `M - K` on `E₀` with equal norms and
/// coefficient 1 on `e01`. The first is the one closer to the pattern
/// `e01 + e02 - e10 - e12`.
pub fn zeta_coefficients(d: usize) -> Result<[[f64; 6]; 2]> {
    let c = SpectralConstants::new(d)?;
    let [q1, q2] = null_pair(m_matrix(d) - Matrix6::identity() * c.big_lambda)?;
    let g = [q1[0], q2[0]];
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gn < 1e-12 {
        return Err(Error::Eigen("eigenspace has no e01 component".into()));
    }
    let u = [g[0] / gn, g[1] / gn];
    let perp = [-u[1], u[0]];
    let mut pair = [1.0, -1.0].map(|s: f64| {
        let w = [(u[0] + s * perp[0]) / gn, (u[1] + s * perp[1]) / gn];
        let v = q1 * w[0] + q2 * w[1];
        let e01 = v[0];
        std::array::from_fn::<f64, 6, _>(|k| v[k] / e01)
    });
    let pattern = [1.0, 1.0, -1.0, -1.0, 0.0, 0.0];
    let dist = |z: &[f64; 6]| {
        z.iter()
            .zip(&pattern)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    if dist(&pair[1]) < dist(&pair[0]) {
        pair.swap(0, 1);
    }
    Ok(pair)
}

/// The class-structured vectors of one planted-regular graph: the 18
/// indicators `e_ij^a`, the three `e^a`, and the six dominant eigenvectors
/// `ζ_i^a` of `L`.
#[derive(Clone, Debug)]
pub struct EigBasis {
    pub constants: SpectralConstants,
    /// `ζ₂`, `ζ₃` in `e_ij` coordinates.
    pub coeffs: [[f64; 6]; 2],
    classes: Vec<u8>,
    pair_of_arc: Vec<u8>,
    pair_counts: [usize; 6],
    zeta_single: [Vec<f64>; 2],
}

impl EigBasis {
    pub fn num_vertices(&self) -> usize {
        self.classes.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.pair_of_arc.len()
    }

    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn pair_of_arc(&self, arc: usize) -> usize {
        self.pair_of_arc[arc] as usize
    }

    /// Single-color indicator `e_ij` for basis pair `pair`.
    pub fn e_ij(&self, pair: usize) -> Vec<f64> {
        self.pair_of_arc
            .iter()
            .map(|&p| if p as usize == pair { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn e_ij_a(&self, pair: usize, a: usize) -> ArcVector {
        ArcVector::from_color(a, &self.e_ij(pair))
    }

    /// `e^a = Σ_{i≠j} e_ij^a`: 1 on every arc in color `a`.
    pub fn e_a(&self, a: usize) -> ArcVector {
        ArcVector::from_color(a, &vec![1.0; self.num_arcs()])
    }

    /// Single-color lift of `ζ_{i+2}` (`i` is 0 or 1).
    pub fn zeta_single(&self, i: usize) -> &[f64] {
        &self.zeta_single[i]
    }

    pub fn zeta(&self, i: usize, a: usize) -> ArcVector {
        ArcVector::from_color(a, &self.zeta_single[i])
    }

    pub fn zeta_norm(&self, i: usize) -> f64 {
        norm2(&self.zeta_single[i])
    }

    /// `⟨v, ζ_i^a⟩` without materializing `ζ_i^a`.
    pub fn dot_zeta(&self, v: &ArcVector, i: usize, a: usize) -> f64 {
        v.0.iter()
            .zip(&self.zeta_single[i])
            .map(|(x, z)| x[a] * z)
            .sum()
    }

    /// `⟨v, e^a⟩`, the color-`a` total.
    pub fn dot_e(&self, v: &ArcVector, a: usize) -> f64 {
        v.0.iter().map(|x| x[a]).sum()
    }

    /// Norm of the part of `v` outside span{e_ij^a}. The indicators have
    /// disjoint supports, so the projection replaces each block by its mean.
    pub fn span_residual(&self, v: &ArcVector) -> f64 {
        let mut sum = [[0.0; 3]; 6];
        for (arc, x) in v.0.iter().enumerate() {
            for c in 0..3 {
                sum[self.pair_of_arc[arc] as usize][c] += x[c];
            }
        }
        let mean: Vec<[f64; 3]> = (0..6)
            .map(|p| {
                let k = self.pair_counts[p].max(1) as f64;
                sum[p].map(|s| s / k)
            })
            .collect();
        ArcVector(
            v.0.iter()
                .enumerate()
                .map(|(arc, x)| {
                    let m = mean[self.pair_of_arc[arc] as usize];
                    [x[0] - m[0], x[1] - m[1], x[2] - m[2]]
                })
                .collect(),
        )
        .norm()
    }

    /// Removes the `E₀` component of a single-color vector.
    pub fn project_out_e0(&self, xi: &mut [f64]) {
        let mut sum = [0.0; 6];
        for (arc, x) in xi.iter().enumerate() {
            sum[self.pair_of_arc[arc] as usize] += x;
        }
        for (arc, x) in xi.iter_mut().enumerate() {
            let p = self.pair_of_arc[arc] as usize;
            *x -= sum[p] / self.pair_counts[p].max(1) as f64;
        }
    }
}

pub fn build_eig_basis(arcs: &ArcTable, coloring: &PlantedColoring, d: usize) -> Result<EigBasis> {
    let constants = SpectralConstants::new(d)?;
    if coloring.num_vertices() != arcs.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: arcs.num_vertices(),
            found: coloring.num_vertices(),
        });
    }
    let mut pair_counts = [0usize; 6];
    let pair_of_arc: Vec<u8> = (0..arcs.len())
        .map(|arc| {
            let (v, w) = arcs.endpoints(arc);
            let p = pair_index(coloring.class_of(v), coloring.class_of(w)).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "edge {{{v}, {w}}} joins two vertices of one class"
                ))
            })?;
            pair_counts[p] += 1;
            Ok(p as u8)
        })
        .collect::<Result<_>>()?;
    let coeffs = zeta_coefficients(d)?;
    let zeta_single = coeffs.map(|c| {
        pair_of_arc
            .iter()
            .map(|&p| c[p as usize])
            .collect::<Vec<f64>>()
    });
    let basis = EigBasis {
        constants,
        coeffs,
        classes: coloring.classes().to_vec(),
        pair_of_arc,
        pair_counts,
        zeta_single,
    };
    for i in 0..2 {
        let z = basis.zeta_single(i);
        let lz = apply_l_single(arcs, z)?;
        let resid: Vec<f64> = lz
            .iter()
            .zip(z)
            .map(|(a, b)| a - constants.lambda * b)
            .collect();
        let rel = norm2(&resid) / norm2(z);
        if rel.is_nan() || rel > 1e-6 {
            return Err(Error::EigenResidual(rel));
        }
    }
    Ok(basis)
}

/// `‖Lξ‖ / ‖ξ‖` for the part of `xi` orthogonal to the `e^a` and `ζ_i^a`.
/// `xi` should lie in span{e_ij^a}.
pub fn s3_ratio(arcs: &ArcTable, basis: &EigBasis, xi: &ArcVector) -> Result<f64> {
    let mut dirs: Vec<ArcVector> = (0..3).map(|a| basis.e_a(a)).collect();
    for i in 0..2 {
        for a in 0..3 {
            dirs.push(basis.zeta(i, a));
        }
    }
    let mut ortho: Vec<ArcVector> = Vec::new();
    for mut v in dirs {
        for _ in 0..2 {
            for q in &ortho {
                let c = v.dot(q);
                v.axpy(-c, q);
            }
        }
        let n = v.norm();
        ortho.push(v.scale(1.0 / n));
    }
    let mut x = xi.clone();
    for _ in 0..2 {
        for q in &ortho {
            let c = x.dot(q);
            x.axpy(-c, q);
        }
    }
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(apply_l(arcs, &x)?.norm() / nx)
}

/// `‖M²ξ‖ / (d²‖ξ‖)` for a single-color `xi`, after removing its `E₀` part.
pub fn s5_ratio(arcs: &ArcTable, basis: &EigBasis, xi: &[f64]) -> Result<f64> {
    let mut x = xi.to_vec();
    basis.project_out_e0(&mut x);
    let nx = norm2(&x);
    if nx == 0.0 {
        return Err(Error::ZeroVector);
    }
    let m2 = apply_m(arcs, &apply_m(arcs, &x)?)?;
    let d = basis.constants.d as f64;
    Ok(norm2(&m2) / (d * d * nx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let c = SpectralConstants::new(8).unwrap();
        assert_eq!(c.lambda, 2.5);
        assert_eq!(c.big_lambda, -5.0);
        assert_eq!(c.big_lambda_prime, -3.0);
        assert_eq!(c.e_eigenvalue, -7.5);
        assert!(matches!(
            SpectralConstants::new(7),
            Err(Error::DegreeTooSmall(7))
        ));
        for d in [8, 9, 16, 100] {
            let c = SpectralConstants::new(d).unwrap();
            assert!((c.lambda + c.big_lambda / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_matches_printed_form() {
        for d in [1usize, 2, 8, 16] {
            let df = d as f64;
            let e = df - 1.0;
            #[rustfmt::skip]
            let printed = Matrix6::from_row_slice(&[
                0.0, 0.0, e, 0.0, df, 0.0,
                0.0, 0.0, df, 0.0, e, 0.0,
                e, 0.0, 0.0, 0.0, 0.0, df,
                df, 0.0, 0.0, 0.0, 0.0, e,
                0.0, e, 0.0, df, 0.0, 0.0,
                0.0, df, 0.0, e, 0.0, 0.0,
            ]);
            assert_eq!(m_matrix(d), printed);
            assert_eq!(m_matrix(d).trace(), 0.0);
        }
    }

    #[test]
    fn closed_form_eigenvalues() {
        let ev = m_eigenvalues(8);
        let want = [-5.0, -5.0, -3.0, -3.0, 1.0, 15.0];
        for (g, w) in ev.iter().zip(want) {
            assert!((g.re - w).abs() < 1e-9 && g.im.abs() < 1e-9, "{ev:?}");
        }
    }

    #[test]
    fn zeta_pair_properties() {
        for d in [8, 16, 32] {
            let z = zeta_coefficients(d).unwrap();
            let m = m_matrix(d);
            let lam = SpectralConstants::new(d).unwrap().big_lambda;
            for zi in &z {
                let v = Vector6::from_column_slice(zi);
                assert!((m * v - v * lam).norm() < 1e-10 * v.norm());
                assert_eq!(zi[0], 1.0);
            }
            let a = Vector6::from_column_slice(&z[0]);
            let b = Vector6::from_column_slice(&z[1]);
            assert!(a.dot(&b).abs() < 1e-12 * a.norm_squared());
            assert!((a.norm() - b.norm()).abs() < 1e-12 * a.norm());
        }
    }
}
