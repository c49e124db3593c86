//! Normalized projections of an initial perturbation onto the dominant
//! eigenvectors, and the feasibility predicate built on them.

use serde::Serialize;

use crate::error::{Error, Result};

use super::basis::EigBasis;
use super::vector::ArcVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Projections {
    /// `x[i][a] = sqrt(n) ⟨Δ(0), ζ_{i+2}^a⟩ / (‖Δ(0)‖ ‖ζ_{i+2}^a‖)`.
    pub x: [[f64; 3]; 2],
    /// `ν = ‖Δ(0)‖ / (sqrt(n) ‖ζ₂¹‖)`.
    pub nu: f64,
}

pub fn projections(delta0: &ArcVector, basis: &EigBasis) -> Result<Projections> {
    delta0.check_len(basis.num_arcs())?;
    let norm0 = delta0.norm();
    if norm0 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let sqrt_n = (basis.num_vertices() as f64).sqrt();
    let x = [0, 1].map(|i| {
        let zn = basis.zeta_norm(i);
        [0, 1, 2].map(|a| sqrt_n * basis.dot_zeta(delta0, i, a) / norm0 / zn)
    });
    Ok(Projections {
        x,
        nu: norm0 / (sqrt_n * basis.zeta_norm(0)),
    })
}

/// `y[i][a]` for class `i` and color `a`: `y_0 = x_0 + x_1`, `y_1 = -x_0`,
/// `y_2 = -x_1`, where `x_0`, `x_1` belong to `ζ₂`, `ζ₃`.
pub fn y_from_x(x: &[[f64; 3]; 2]) -> [[f64; 3]; 3] {
    [
        [0, 1, 2].map(|a| x[0][a] + x[1][a]),
        [0, 1, 2].map(|a| -x[0][a]),
        [0, 1, 2].map(|a| -x[1][a]),
    ]
}

/// Largest deviation of `y` from the target pattern: 1 on own class
/// (`i = a`), -1/2 elsewhere.
pub fn target_deviation(y: &[[f64; 3]; 3]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in y.iter().enumerate() {
        for (a, &v) in row.iter().enumerate() {
            let target = if i == a { 1.0 } else { -0.5 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Feasibility {
    /// `Δ(0) ⊥ e^a` for every color, within `1e-9 ‖Δ(0)‖`.
    pub f1: bool,
    /// `max_a |⟨Δ(0), e^a⟩| / ‖Δ(0)‖`.
    pub f1_residual: f64,
    pub target_deviation: f64,
    /// F1 and every deviation below `exp(-1/ε)`.
    pub strict: bool,
    /// F1 and every deviation below `τ`.
    pub relaxed: bool,
}

pub fn is_feasible(
    delta0: &ArcVector,
    basis: &EigBasis,
    epsilon: f64,
    relaxed_tau: f64,
) -> Result<Feasibility> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 1)"
        )));
    }
    if !(relaxed_tau > 0.0 && relaxed_tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxed_tau = {relaxed_tau} not in (0, 1)"
        )));
    }
    let p = projections(delta0, basis)?;
    let norm0 = delta0.norm();
    let f1_residual = (0..3)
        .map(|a| basis.dot_e(delta0, a).abs() / norm0)
        .fold(0.0, f64::max);
    let f1 = f1_residual <= 1e-9;
    let dev = target_deviation(&y_from_x(&p.x));
    Ok(Feasibility {
        f1,
        f1_residual,
        target_deviation: dev,
        strict: f1 && dev < (-1.0 / epsilon).exp(),
        relaxed: f1 && dev < relaxed_tau,
    })
}
