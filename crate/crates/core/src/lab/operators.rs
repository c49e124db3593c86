//! The message operators on R^3 ⊗ R^A.
//!
//! * `B`: the BP update in centered coordinates, `Δ(l+1) = BΔ(l)`.
//! * `B'`: its derivative at 0.
//! * `L`: `B'` without the color-mixing term; equal to `B'` on vectors whose
//!   colors sum to zero on every arc.
//! * `M`, `K`: single-color operators with `L = -1/2 I_3 ⊗ (M - K)`.

use crate::bp::{centered_normalize, THIRD};
use crate::error::{Error, Result};
use crate::graph::ArcTable;

use super::vector::ArcVector;

/// `(BΓ)^a_{v->w} = -1/3 + Π(1 - 3Γ^a/2) / Σ_b Π(1 - 3Γ^b/2)`, products over
/// in-arcs `u->v` with `u != w`, each evaluated directly.
pub fn apply_b(arcs: &ArcTable, gamma: &ArcVector) -> Result<ArcVector> {
    gamma.check_len(arcs.len())?;
    let g = &gamma.0;
    let mut out = Vec::with_capacity(arcs.len());
    for arc in 0..arcs.len() {
        let (v, w) = arcs.endpoints(arc);
        let mut log_abs = [0.0f64; 3];
        let mut negative = [false; 3];
        let mut any_negative = false;
        for a in arcs.in_arcs(v) {
            if arcs.source(a) == w {
                continue;
            }
            for c in 0..3 {
                let f = 1.0 - 1.5 * g[a][c];
                if f < 0.0 {
                    negative[c] = !negative[c];
                    any_negative = true;
                    log_abs[c] += (-f).ln();
                } else {
                    log_abs[c] += (-1.5 * g[a][c]).ln_1p();
                }
            }
        }
        let zero = || Error::ZeroDenominator {
            source_vertex: v,
            target: w,
        };
        let next = if !any_negative {
            centered_normalize(log_abs).ok_or_else(zero)?
        } else {
            let mx = log_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if mx == f64::NEG_INFINITY {
                return Err(zero());
            }
            let p: [f64; 3] = std::array::from_fn(|c| {
                let m = (log_abs[c] - mx).exp();
                if negative[c] {
                    -m
                } else {
                    m
                }
            });
            let z = p[0] + p[1] + p[2];
            if z == 0.0 {
                return Err(zero());
            }
            p.map(|x| x / z - THIRD)
        };
        out.push(next);
    }
    Ok(ArcVector(out))
}

/// Sum of `Γ_{u->v}` over in-arcs of `v` except the one from `w`, per color.
fn excluded_sum(arcs: &ArcTable, g: &[[f64; 3]], arc: usize) -> [f64; 3] {
    let (v, w) = arcs.endpoints(arc);
    let mut s = [0.0; 3];
    for a in arcs.in_arcs(v) {
        if arcs.source(a) != w {
            for c in 0..3 {
                s[c] += g[a][c];
            }
        }
    }
    s
}

/// `(B'Γ)^a = -1/2 Σ_{u∈N(v)\w} Γ^a_{u->v} + 1/6 Σ_b Σ_{u∈N(v)\w} Γ^b_{u->v}`.
pub fn apply_b_prime(arcs: &ArcTable, gamma: &ArcVector) -> Result<ArcVector> {
    gamma.check_len(arcs.len())?;
    Ok(ArcVector(
        (0..arcs.len())
            .map(|arc| {
                let s = excluded_sum(arcs, &gamma.0, arc);
                let mix = (s[0] + s[1] + s[2]) / 6.0;
                s.map(|x| -0.5 * x + mix)
            })
            .collect(),
    ))
}

fn in_totals(arcs: &ArcTable, g: &[[f64; 3]]) -> Vec<[f64; 3]> {
    (0..arcs.num_vertices())
        .map(|v| {
            let mut t = [0.0; 3];
            for a in arcs.in_arcs(v) {
                for c in 0..3 {
                    t[c] += g[a][c];
                }
            }
            t
        })
        .collect()
}

/// `(LΓ)^a_{v->w} = -1/2 Σ_{u∈N(v)\w} Γ^a_{u->v}`, computed as the full in-sum
/// at `v` minus the reverse arc.
pub fn apply_l(arcs: &ArcTable, gamma: &ArcVector) -> Result<ArcVector> {
    gamma.check_len(arcs.len())?;
    let g = &gamma.0;
    let totals = in_totals(arcs, g);
    Ok(ArcVector(
        (0..arcs.len())
            .map(|arc| {
                let t = totals[arcs.source(arc)];
                let back = g[arcs.reverse(arc)];
                [
                    -0.5 * (t[0] - back[0]),
                    -0.5 * (t[1] - back[1]),
                    -0.5 * (t[2] - back[2]),
                ]
            })
            .collect(),
    ))
}

/// `(MΞ)_{v->w} = Σ_{u∈N(v)} Ξ_{u->v}`.
pub fn apply_m(arcs: &ArcTable, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() != arcs.len() {
        return Err(Error::DimensionMismatch {
            expected: arcs.len(),
            found: xi.len(),
        });
    }
    let totals: Vec<f64> = (0..arcs.num_vertices())
        .map(|v| arcs.in_arcs(v).map(|a| xi[a]).sum())
        .collect();
    Ok((0..arcs.len())
        .map(|arc| totals[arcs.source(arc)])
        .collect())
}

/// `(KΞ)_{v->w} = Ξ_{w->v}`.
pub fn apply_k(arcs: &ArcTable, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() != arcs.len() {
        return Err(Error::DimensionMismatch {
            expected: arcs.len(),
            found: xi.len(),
        });
    }
    Ok((0..arcs.len()).map(|arc| xi[arcs.reverse(arc)]).collect())
}

/// `L` on a single color block: `-1/2 (M - K) ξ`.
pub fn apply_l_single(arcs: &ArcTable, xi: &[f64]) -> Result<Vec<f64>> {
    let m = apply_m(arcs, xi)?;
    let k = apply_k(arcs, xi)?;
    Ok(m.iter().zip(&k).map(|(a, b)| -0.5 * (a - b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{bp_step, MessageState};
    use crate::graph::{octahedron, Graph};
    use crate::rng;
    use rand::Rng;

    fn random_zero_sum(len: usize, scale: f64, seed: u64) -> ArcVector {
        let mut r = rng::stream(seed, 0);
        ArcVector(
            (0..len)
                .map(|_| {
                    let a = r.random_range(-scale..scale);
                    let b = r.random_range(-scale..scale);
                    [a, b, -a - b]
                })
                .collect(),
        )
    }

    #[test]
    fn b_of_zero_is_zero() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        assert_eq!(
            apply_b(&t, &ArcVector::zeros(t.len())).unwrap().norm_inf(),
            0.0
        );
    }

    #[test]
    fn b_indicator_fixed() {
        let (g, c) = octahedron();
        let t = ArcTable::new(&g);
        let ind = ArcVector(
            (0..t.len())
                .map(|a| {
                    let mut e = [-THIRD; 3];
                    e[c.class_of(t.source(a))] = 2.0 * THIRD;
                    e
                })
                .collect(),
        );
        let out = apply_b(&t, &ind).unwrap();
        assert!(out.sub(&ind).norm_inf() < 1e-15);
    }

    #[test]
    fn b_matches_bp_step() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        let mut r = rng::stream(4, 0);
        for _ in 0..50 {
            let eta: Vec<[f64; 3]> = (0..t.len())
                .map(|_| {
                    let x: [f64; 3] = std::array::from_fn(|_| r.random_range(0.0..1.0));
                    let s: f64 = x.iter().sum();
                    x.map(|v| v / s)
                })
                .collect();
            let st = MessageState::from_eta(&eta).unwrap();
            let via_b = apply_b(&t, &ArcVector::from_state(&st)).unwrap();
            let via_step = ArcVector::from_state(&bp_step(&t, &st).unwrap());
            assert!(via_b.sub(&via_step).norm_inf() <= 1e-14);
        }
    }

    #[test]
    fn b_with_negative_factors() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let t = ArcTable::new(&g);
        let mut gamma = ArcVector::zeros(t.len());
        gamma.0[t.arc(0, 1).unwrap()] = [1.0, -0.5, -0.5];
        let out = apply_b(&t, &gamma).unwrap();
        let p = [1.0 - 1.5, 1.0 + 0.75, 1.0 + 0.75];
        let z: f64 = p.iter().sum();
        let got = out.0[t.arc(1, 2).unwrap()];
        for c in 0..3 {
            assert!((got[c] - (p[c] / z - THIRD)).abs() < 1e-15);
        }
    }

    #[test]
    fn b_prime_equals_l_on_zero_sum() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        let x = random_zero_sum(t.len(), 1.0, 1);
        let bp = apply_b_prime(&t, &x).unwrap();
        let l = apply_l(&t, &x).unwrap();
        assert!(bp.sub(&l).norm_inf() < 1e-15);
        assert!(l.column_sum_residual() < 1e-15);
    }

    #[test]
    fn b_prime_kills_constants() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        let ones = ArcVector(vec![[1.0; 3]; t.len()]);
        assert!(apply_b_prime(&t, &ones).unwrap().norm_inf() < 1e-15);
    }

    #[test]
    fn b_prime_is_derivative() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        let x = random_zero_sum(t.len(), 0.2, 2);
        let deriv = apply_b_prime(&t, &x).unwrap();
        let mut errs = Vec::new();
        for step in [1e-3, 1e-4, 1e-5] {
            let fd = apply_b(&t, &x.scale(step)).unwrap().scale(1.0 / step);
            errs.push(fd.sub(&deriv).norm_inf());
        }
        for w in errs.windows(2) {
            let rate = w[0] / w[1];
            assert!((5.0..20.0).contains(&rate), "{errs:?}");
        }
    }

    #[test]
    fn k_is_isometric_involution() {
        let (g, _) = octahedron();
        let t = ArcTable::new(&g);
        let x = random_zero_sum(t.len(), 1.0, 3).color(0);
        let kx = apply_k(&t, &x).unwrap();
        assert_eq!(apply_k(&t, &kx).unwrap(), x);
        let sorted = |v: &[f64]| {
            let mut s = v.to_vec();
            s.sort_by(f64::total_cmp);
            s
        };
        assert_eq!(sorted(&kx), sorted(&x));
    }
}
