//! Lockstep evolution of the true centered messages `Δ(l+1) = BΔ(l)` and the
//! linearized ones `Ξ(l+1) = LΞ(l)` from the same start.

use std::io::Write;

use serde::Serialize;

use crate::bp::{PROPER_OFF, PROPER_OWN};
use crate::error::{Error, Result};
use crate::graph::ArcTable;

use super::basis::EigBasis;
use super::operators::{apply_b, apply_l};
use super::projection::{is_feasible, projections, y_from_x};
use super::vector::ArcVector;

#[derive(Clone, Copy, Debug)]
pub struct TrajectoryConfig {
    pub epsilon: f64,
    pub relaxed_tau: f64,
    pub max_iters: usize,
    /// Allowed relative deviation of the per-step growth from `λ`.
    pub growth_tol: f64,
    pub envelope_low: f64,
    pub envelope_high: f64,
    /// Multiplier on `-ln ε` in the linearization-error bound.
    pub linearization_slack: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            epsilon: 0.05,
            relaxed_tau: 0.2,
            max_iters: 10_000,
            growth_tol: 0.05,
            envelope_low: 0.49,
            envelope_high: 1.1,
            linearization_slack: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub l: usize,
    pub xi_inf: f64,
    pub delta_inf: f64,
    pub err_inf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub lambda: f64,
    pub epsilon: f64,
    pub x: [[f64; 3]; 2],
    pub y: [[f64; 3]; 3],
    pub nu: f64,
    pub f1: bool,
    pub feasible_strict: bool,
    pub feasible_relaxed: bool,
    /// `2 ceil(ln n)`.
    pub l1: usize,
    /// Last `l` with `‖Ξ(l)‖∞ <= ε`.
    pub l2: usize,
    /// `νλ^{L₂}`.
    pub mu: f64,
    /// Properness of `Δ(L₂+1)` and `Δ(L₂+2)`.
    pub proper_after: [bool; 2],
    pub l3: Option<usize>,
    pub proper_at_l3: bool,
    /// `‖Ξ(l+1)‖∞ / ‖Ξ(l)‖∞` for `L₁ <= l <= L₂`.
    pub growth: Vec<f64>,
    pub growth_max_rel_dev: Option<f64>,
    pub growth_ok: bool,
    /// Extremes of `‖Ξ(l)‖∞ / (νλ^l)` over `L₁ <= l <= L₂`.
    pub envelope_min: Option<f64>,
    pub envelope_max: Option<f64>,
    pub envelope_ok: bool,
    /// `‖Δ(L₂) - Ξ(L₂)‖∞ / ‖Ξ(L₂)‖∞²`.
    pub linearization_ratio: f64,
    pub linearization_bound: f64,
    pub linearization_ok: bool,
    pub series: Vec<TrajectoryPoint>,
}

fn proper(v: &ArcVector, arcs: &ArcTable, classes: &[u8]) -> bool {
    v.0.iter().enumerate().all(|(arc, x)| {
        let own = classes[arcs.source(arc)] as usize;
        (0..3).all(|c| {
            if c == own {
                x[c] >= PROPER_OWN
            } else {
                x[c] <= PROPER_OFF
            }
        })
    })
}

fn point(l: usize, xi: &ArcVector, delta: &ArcVector) -> TrajectoryPoint {
    TrajectoryPoint {
        l,
        xi_inf: xi.norm_inf(),
        delta_inf: delta.norm_inf(),
        err_inf: delta.sub(xi).norm_inf(),
    }
}

pub fn trajectory_diagnostics(
    arcs: &ArcTable,
    basis: &EigBasis,
    delta0: &ArcVector,
    config: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    delta0.check_len(arcs.len())?;
    let eps = config.epsilon;
    let lambda = basis.constants.lambda;
    let proj = projections(delta0, basis)?;
    let feas = is_feasible(delta0, basis, eps, config.relaxed_tau)?;
    if delta0.norm_inf() > eps {
        return Err(Error::InvalidParameter(format!(
            "‖Δ(0)‖∞ = {} already exceeds epsilon = {eps}",
            delta0.norm_inf()
        )));
    }

    let mut xi = delta0.clone();
    let mut delta = delta0.clone();
    let mut series = vec![point(0, &xi, &delta)];
    let mut crossing = None;
    for l in 1..=config.max_iters {
        xi = apply_l(arcs, &xi)?;
        delta = apply_b(arcs, &delta)?;
        series.push(point(l, &xi, &delta));
        if xi.norm_inf() > eps {
            crossing = Some(l);
            break;
        }
    }
    let l2 = crossing.ok_or(Error::NoCrossing(config.max_iters))? - 1;
    let after_one = proper(&delta, arcs, basis.classes());
    let after_two = proper(&apply_b(arcs, &delta)?, arcs, basis.classes());
    let l3 = if after_one {
        Some(l2 + 1)
    } else if after_two {
        Some(l2 + 2)
    } else {
        None
    };

    let n = basis.num_vertices() as f64;
    let l1 = 2 * n.ln().ceil() as usize;
    let growth: Vec<f64> = (l1..=l2)
        .map(|l| series[l + 1].xi_inf / series[l].xi_inf)
        .collect();
    let growth_max_rel_dev = growth
        .iter()
        .map(|g| (g / lambda - 1.0).abs())
        .reduce(f64::max);
    let envelope: Vec<f64> = (l1..=l2)
        .map(|l| series[l].xi_inf / (proj.nu * lambda.powi(l as i32)))
        .collect();
    let envelope_min = envelope.iter().copied().reduce(f64::min);
    let envelope_max = envelope.iter().copied().reduce(f64::max);

    let at = series[l2];
    let linearization_ratio = if at.xi_inf > 0.0 {
        at.err_inf / (at.xi_inf * at.xi_inf)
    } else {
        0.0
    };
    let linearization_bound = config.linearization_slack * -eps.ln();

    Ok(TrajectoryRecord {
        lambda,
        epsilon: eps,
        x: proj.x,
        y: y_from_x(&proj.x),
        nu: proj.nu,
        f1: feas.f1,
        feasible_strict: feas.strict,
        feasible_relaxed: feas.relaxed,
        l1,
        l2,
        mu: proj.nu * lambda.powi(l2 as i32),
        proper_after: [after_one, after_two],
        l3,
        proper_at_l3: l3.is_some(),
        growth_ok: growth_max_rel_dev.is_some_and(|g| g <= config.growth_tol),
        growth,
        growth_max_rel_dev,
        envelope_ok: envelope_min.is_some_and(|m| m >= config.envelope_low)
            && envelope_max.is_some_and(|m| m <= config.envelope_high),
        envelope_min,
        envelope_max,
        linearization_ratio,
        linearization_bound,
        linearization_ok: linearization_ratio <= linearization_bound,
        series,
    })
}

/// Writes the per-iteration norms as CSV with columns `l, xi_inf, delta_inf, err_inf`.
pub fn write_series_csv(record: &TrajectoryRecord, sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for p in &record.series {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
