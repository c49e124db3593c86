//! Belief propagation for 3-coloring (BPCol).
//!
//! Messages are stored centered: for arc `v->w` and color `a` the state keeps
//! `Δ^a = η^a - 1/3`. Near the uniform point the interesting signal is far
//! below the resolution of `η` itself (a perturbation of 1e-30 vanishes when
//! added to 1/3), while `Δ` keeps full relative precision.
//!
//! The update works on log factors `ℓ = ln(1 - 3Δ/2)`, which differ from
//! `ln(1 - η)` by the constant `ln(2/3)`; the constant cancels in the
//! normalization.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ArcTable, Graph, PlantedColoring};

pub const THIRD: f64 = 1.0 / 3.0;

/// Own-class threshold of a proper state, in centered coordinates.
pub const PROPER_OWN: f64 = 0.99 - THIRD;
/// Off-class threshold of a proper state, in centered coordinates.
pub const PROPER_OFF: f64 = 0.01 - THIRD;

/// Factors `1 - η` at or below this are treated as ill-conditioned for the
/// subtract-the-excluded-term shortcut.
const ILL_CONDITIONED: f64 = 1e-12;

const PAR_MIN_ARCS: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageState {
    delta: Vec<[f64; 3]>,
    iteration: usize,
}

impl MessageState {
    pub fn uniform(num_arcs: usize) -> MessageState {
        MessageState {
            delta: vec![[0.0; 3]; num_arcs],
            iteration: 0,
        }
    }

    /// Builds a state from beliefs `η`. Each arc's beliefs must lie in [0, 1]
    /// and sum to 1 within 1e-9.
    pub fn from_eta(eta: &[[f64; 3]]) -> Result<MessageState> {
        for (arc, e) in eta.iter().enumerate() {
            if e.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidParameter(format!(
                    "arc {arc}: belief outside [0, 1]"
                )));
            }
            if (e.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "arc {arc}: beliefs do not sum to 1"
                )));
            }
        }
        Ok(MessageState {
            delta: eta.iter().map(|e| e.map(|x| x - THIRD)).collect(),
            iteration: 0,
        })
    }

    /// Builds a state from centered values; each arc must sum to 0 within
    /// 1e-9 and keep `η` inside [0, 1].
    pub fn from_delta(delta: Vec<[f64; 3]>) -> Result<MessageState> {
        for (arc, x) in delta.iter().enumerate() {
            if x.iter()
                .any(|&v| !(-THIRD - 1e-12..=2.0 * THIRD + 1e-12).contains(&v))
            {
                return Err(Error::InvalidParameter(format!(
                    "arc {arc}: belief outside [0, 1]"
                )));
            }
            if x.iter().sum::<f64>().abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "arc {arc}: beliefs do not sum to 1"
                )));
            }
        }
        Ok(MessageState {
            delta,
            iteration: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn delta(&self, arc: usize) -> [f64; 3] {
        self.delta[arc]
    }

    pub fn deltas(&self) -> &[[f64; 3]] {
        &self.delta
    }

    pub fn into_deltas(self) -> Vec<[f64; 3]> {
        self.delta
    }

    pub fn eta(&self, arc: usize) -> [f64; 3] {
        self.delta[arc].map(|x| THIRD + x)
    }

    /// Largest componentwise difference of the centered values.
    pub fn sup_distance(&self, other: &MessageState) -> f64 {
        self.delta
            .iter()
            .zip(&other.delta)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.delta.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// JSON dump: a header followed by the centered values, arc-major.
    pub fn to_json(&self, num_vertices: usize) -> serde_json::Value {
        serde_json::json!({
            "n": num_vertices,
            "arcs": self.delta.len(),
            "iteration": self.iteration,
            "delta": self.delta.iter().flatten().collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<MessageState> {
        let bad = |what: &str| Error::Parse(format!("message dump: {what}"));
        let arcs = value["arcs"].as_u64().ok_or_else(|| bad("missing arcs"))? as usize;
        let iteration = value["iteration"]
            .as_u64()
            .ok_or_else(|| bad("missing iteration"))? as usize;
        let flat = value["delta"]
            .as_array()
            .ok_or_else(|| bad("missing delta"))?;
        if flat.len() != 3 * arcs {
            return Err(Error::DimensionMismatch {
                expected: 3 * arcs,
                found: flat.len(),
            });
        }
        let nums: Vec<f64> = flat
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad("non-numeric entry")))
            .collect::<Result<_>>()?;
        let mut state =
            MessageState::from_delta(nums.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())?;
        state.iteration = iteration;
        Ok(state)
    }
}

/// `x[0] + x[1] + x[2]` added in sorted order, so relabeling colors cannot
/// change the rounding.
#[inline]
pub(crate) fn sum3(x: [f64; 3]) -> f64 {
    let lo = x[0].min(x[1]);
    let hi = x[0].max(x[1]);
    let (a, b, c) = if x[2] <= lo {
        (x[2], lo, hi)
    } else if x[2] <= hi {
        (lo, x[2], hi)
    } else {
        (lo, hi, x[2])
    };
    (a + b) + c
}

/// Normalizes three log-weights into centered beliefs `p_a - 1/3`.
///
/// Returns `None` when every weight is zero (all `-inf`). Weights close to
/// each other go through `expm1`, so differences far below 1e-16 survive.
/// The result is equivariant under permuting the inputs, bit for bit.
pub fn centered_normalize(s: [f64; 3]) -> Option<[f64; 3]> {
    if s.iter().all(|&x| x == f64::NEG_INFINITY) {
        return None;
    }
    if s.iter().all(|x| x.is_finite()) {
        let mean = sum3(s) / 3.0;
        let t = s.map(|x| x - mean);
        if t.iter().all(|x| x.abs() <= 1.0) {
            let u = t.map(f64::exp_m1);
            let su = sum3(u);
            let den = 3.0 * (3.0 + su);
            return Some(u.map(|ua| (3.0 * ua - su) / den));
        }
    }
    let mx = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = s.map(|x| (x - mx).exp());
    let z = sum3(e);
    Some(e.map(|x| x / z - THIRD))
}

/// Sum in ascending order. Every vertex that sees the same multiset of
/// incoming values gets the same total, whatever its neighbor order; without
/// this, last-bit differences between symmetric vertices seed the unstable
/// color-constant modes.
fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

#[inline]
fn log_factor(delta: f64) -> f64 {
    (-1.5 * delta).ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    Parallel,
    Auto,
}

/// One synchronous BP update.
pub fn bp_step(arcs: &ArcTable, state: &MessageState) -> Result<MessageState> {
    bp_step_with(arcs, state, Schedule::Auto)
}

pub fn bp_step_with(
    arcs: &ArcTable,
    state: &MessageState,
    schedule: Schedule,
) -> Result<MessageState> {
    if state.len() != arcs.len() {
        return Err(Error::DimensionMismatch {
            expected: arcs.len(),
            found: state.len(),
        });
    }
    let parallel = match schedule {
        Schedule::Serial => false,
        Schedule::Parallel => true,
        Schedule::Auto => arcs.len() >= PAR_MIN_ARCS,
    };
    let n = arcs.num_vertices();
    let old = &state.delta;

    let total_of = |v: usize| {
        let mut buf = Vec::with_capacity(arcs.in_arcs(v).len());
        std::array::from_fn(|c| {
            buf.clear();
            buf.extend(arcs.in_arcs(v).map(|a| log_factor(old[a][c])));
            sorted_sum(&mut buf)
        })
    };
    let totals: Vec<[f64; 3]> = if parallel {
        (0..n).into_par_iter().map(total_of).collect()
    } else {
        (0..n).map(total_of).collect()
    };

    let update = |arc: usize| -> [f64; 3] {
        let v = arcs.source(arc);
        let excluded = arcs.reverse(arc);
        let mut s = totals[v];
        for c in 0..3 {
            let factor = 1.0 - 1.5 * old[excluded][c];
            if factor <= 1.5 * ILL_CONDITIONED {
                let mut buf: Vec<f64> = arcs
                    .in_arcs(v)
                    .filter(|&a| a != excluded)
                    .map(|a| log_factor(old[a][c]))
                    .collect();
                s[c] = sorted_sum(&mut buf);
            } else {
                s[c] -= log_factor(old[excluded][c]);
            }
        }
        centered_normalize(s).unwrap_or([f64::NAN; 3])
    };
    let delta: Vec<[f64; 3]> = if parallel {
        (0..arcs.len()).into_par_iter().map(update).collect()
    } else {
        (0..arcs.len()).map(update).collect()
    };
    if let Some(arc) = delta.iter().position(|x| x[0].is_nan()) {
        let (v, w) = arcs.endpoints(arc);
        return Err(Error::Contradiction {
            source_vertex: v,
            target: w,
        });
    }
    Ok(MessageState {
        delta,
        iteration: state.iteration + 1,
    })
}

/// True iff every arc leaving a class-`a` vertex has `η^a >= 0.99` and
/// `η^b <= 0.01` for the other colors.
pub fn is_proper(arcs: &ArcTable, state: &MessageState, classes: &[u8]) -> bool {
    (0..arcs.len()).all(|arc| {
        let own = classes[arcs.source(arc)] as usize;
        let x = state.delta[arc];
        (0..3).all(|c| {
            if c == own {
                x[c] >= PROPER_OWN
            } else {
                x[c] <= PROPER_OFF
            }
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rounding {
    pub colors: Vec<u8>,
    /// Vertices without neighbors; they get color 0.
    pub isolated: Vec<usize>,
}

/// Beliefs `β_v^a = |N(v)|^-1 Σ_{u∈N(v)} (1 - η^a_{u->v})`.
pub fn beliefs(arcs: &ArcTable, state: &MessageState, v: usize) -> Option<[f64; 3]> {
    let deg = arcs.in_arcs(v).len();
    if deg == 0 {
        return None;
    }
    let mut sum = [0.0; 3];
    for a in arcs.in_arcs(v) {
        for (s, x) in sum.iter_mut().zip(state.delta[a]) {
            *s += x;
        }
    }
    Some(sum.map(|s| 2.0 * THIRD - s / deg as f64))
}

/// Colors each vertex by its largest belief, ties going to the lowest color.
///
/// The argmax is taken on `-Σ Δ^a` rather than on `β` itself: the two are
/// related by a positive affine map, and the sum avoids absorbing tiny
/// differences into 2/3.
pub fn round_beliefs(arcs: &ArcTable, state: &MessageState) -> Rounding {
    let n = arcs.num_vertices();
    let mut colors = vec![0u8; n];
    let mut isolated = Vec::new();
    for (v, color) in colors.iter_mut().enumerate() {
        if arcs.in_arcs(v).len() == 0 {
            isolated.push(v);
            continue;
        }
        let mut sum = [0.0; 3];
        for a in arcs.in_arcs(v) {
            for (s, x) in sum.iter_mut().zip(state.delta[a]) {
                *s += x;
            }
        }
        let mut best = 0;
        for c in 1..3 {
            if sum[c] < sum[best] {
                best = c;
            }
        }
        *color = best as u8;
    }
    Rounding { colors, isolated }
}

pub fn is_proper_coloring(graph: &Graph, colors: &[u8]) -> bool {
    colors.len() == graph.num_vertices()
        && graph.edges().iter().all(|&(u, v)| colors[u] != colors[v])
}

/// True iff the two colorings induce the same partition.
pub fn matches_up_to_permutation(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = [None::<u8>; 256];
    let mut bwd = [None::<u8>; 256];
    for (&x, &y) in a.iter().zip(b) {
        match (fwd[x as usize], bwd[y as usize]) {
            (None, None) => {
                fwd[x as usize] = Some(y);
                bwd[y as usize] = Some(x);
            }
            (Some(fy), Some(bx)) if fy == y && bx == x => {}
            _ => return false,
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Independent,
    Balanced,
    Aligned,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Independent => "independent",
            InitMode::Balanced => "balanced",
            InitMode::Aligned => "aligned",
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<InitMode> {
        match s {
            "independent" => Ok(InitMode::Independent),
            "balanced" => Ok(InitMode::Balanced),
            "aligned" => Ok(InitMode::Aligned),
            other => Err(Error::InvalidParameter(format!(
                "unknown init mode {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitRecord {
    pub mode: InitMode,
    /// The color each vertex pushed its out-messages towards.
    pub w_partition: Vec<u8>,
}

impl InitRecord {
    pub fn w_sizes(&self) -> [usize; 3] {
        let mut s = [0; 3];
        for &c in &self.w_partition {
            s[c as usize] += 1;
        }
        s
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..THIRD).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} not in [0, 1/3)"
        )));
    }
    Ok(())
}

fn state_from_w(arcs: &ArcTable, w: &[u8], delta: f64) -> MessageState {
    let mut out = vec![[-0.5 * delta; 3]; arcs.len()];
    for (v, &c) in w.iter().enumerate() {
        for a in arcs.out_arcs(v) {
            out[a][c as usize] = delta;
        }
    }
    MessageState {
        delta: out,
        iteration: 0,
    }
}

/// Every vertex picks a color uniformly and independently.
pub fn init_independent<R: Rng + ?Sized>(
    arcs: &ArcTable,
    delta: f64,
    rng: &mut R,
) -> Result<(MessageState, InitRecord)> {
    check_delta(delta)?;
    let w: Vec<u8> = (0..arcs.num_vertices())
        .map(|_| rng.random_range(0..3u8))
        .collect();
    Ok((
        state_from_w(arcs, &w, delta),
        InitRecord {
            mode: InitMode::Independent,
            w_partition: w,
        },
    ))
}

/// A random permutation splits the vertices into three equal color groups.
pub fn init_balanced<R: Rng + ?Sized>(
    arcs: &ArcTable,
    delta: f64,
    rng: &mut R,
) -> Result<(MessageState, InitRecord)> {
    check_delta(delta)?;
    let n = arcs.num_vertices();
    if n % 3 != 0 {
        return Err(Error::InvalidParameter(format!(
            "balanced init needs n divisible by 3, got {n}"
        )));
    }
    let mut w: Vec<u8> = (0..3u8)
        .flat_map(|c| std::iter::repeat_n(c, n / 3))
        .collect();
    w.shuffle(rng);
    Ok((
        state_from_w(arcs, &w, delta),
        InitRecord {
            mode: InitMode::Balanced,
            w_partition: w,
        },
    ))
}

/// Each vertex pushes towards its planted class.
pub fn init_aligned(
    arcs: &ArcTable,
    coloring: &PlantedColoring,
    delta: f64,
) -> Result<(MessageState, InitRecord)> {
    check_delta(delta)?;
    if coloring.num_vertices() != arcs.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: arcs.num_vertices(),
            found: coloring.num_vertices(),
        });
    }
    let w = coloring.classes().to_vec();
    Ok((
        state_from_w(arcs, &w, delta),
        InitRecord {
            mode: InitMode::Aligned,
            w_partition: w,
        },
    ))
}

pub fn initialize<R: Rng + ?Sized>(
    arcs: &ArcTable,
    mode: InitMode,
    delta: f64,
    coloring: Option<&PlantedColoring>,
    rng: &mut R,
) -> Result<(MessageState, InitRecord)> {
    match mode {
        InitMode::Independent => init_independent(arcs, delta, rng),
        InitMode::Balanced => init_balanced(arcs, delta, rng),
        InitMode::Aligned => {
            let c = coloring.ok_or_else(|| {
                Error::InvalidParameter("aligned init needs the planted coloring".into())
            })?;
            init_aligned(arcs, c, delta)
        }
    }
}

/// `exp(-ln^3 n)`, clamped to [1e-200, 0.3].
pub fn default_delta(n: usize) -> f64 {
    let ln = (n.max(1) as f64).ln();
    let raw = (-ln.powi(3)).exp();
    if raw < 1e-200 {
        log::warn!("default delta {raw:e} for n = {n} clamped to 1e-200");
        1e-200
    } else {
        raw.min(0.3)
    }
}

/// `ceil(ln^4 n)`, at least 1.
pub fn default_l_star(n: usize) -> usize {
    let ln = (n.max(1) as f64).ln();
    (ln.powi(4).ceil() as usize).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestColor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpParams {
    pub delta: f64,
    pub l_star: usize,
    pub early_stop: bool,
    pub tie_break: TieBreak,
}

impl BpParams {
    pub fn for_graph(n: usize) -> BpParams {
        BpParams {
            delta: default_delta(n),
            l_star: default_l_star(n),
            early_stop: true,
            tie_break: TieBreak::LowestColor,
        }
    }

    fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if self.l_star < 1 {
            return Err(Error::InvalidParameter("l_star must be >= 1".into()));
        }
        Ok(())
    }
}

/// Relative sup-norm change below which two consecutive states count as equal.
pub const CONVERGENCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationCap,
    Converged,
    Proper,
    Contradiction,
}

#[derive(Clone, Debug, Serialize)]
pub struct BpOutcome {
    pub colors: Vec<u8>,
    pub isolated: Vec<usize>,
    pub iterations_run: usize,
    pub success: bool,
    pub stop: StopReason,
    pub contradiction: Option<String>,
    pub init: InitRecord,
}

/// Iterates BP from `state` and rounds the result.
///
/// With early stopping, the run ends when the rounded coloring makes the
/// state proper, or when `‖Δ(l+1) - Δ(l)‖∞ <= 1e-12 ‖Δ(l+1)‖∞`. The test is
/// relative because a run started at `δ ≈ 1e-100` changes by far less than
/// any absolute tolerance during its early growth phase.
pub fn run_from(
    graph: &Graph,
    arcs: &ArcTable,
    mut state: MessageState,
    params: &BpParams,
    init: InitRecord,
) -> BpOutcome {
    let mut stop = StopReason::IterationCap;
    let mut contradiction = None;
    for _ in 0..params.l_star {
        let next = match bp_step(arcs, &state) {
            Ok(s) => s,
            Err(e) => {
                stop = StopReason::Contradiction;
                contradiction = Some(e.to_string());
                break;
            }
        };
        if params.early_stop {
            if next.sup_distance(&state) <= CONVERGENCE_TOL * next.sup_norm() {
                state = next;
                stop = StopReason::Converged;
                break;
            }
            let r = round_beliefs(arcs, &next);
            if is_proper(arcs, &next, &r.colors) {
                state = next;
                stop = StopReason::Proper;
                break;
            }
        }
        state = next;
    }
    let r = round_beliefs(arcs, &state);
    let success = contradiction.is_none() && is_proper_coloring(graph, &r.colors);
    BpOutcome {
        colors: r.colors,
        isolated: r.isolated,
        iterations_run: state.iteration,
        success,
        stop,
        contradiction,
        init,
    }
}

/// BPCol: initialize, iterate, round.
pub fn run_bpcol<R: Rng + ?Sized>(
    graph: &Graph,
    arcs: &ArcTable,
    params: &BpParams,
    mode: InitMode,
    coloring: Option<&PlantedColoring>,
    rng: &mut R,
) -> Result<BpOutcome> {
    params.validate()?;
    let (state, init) = initialize(arcs, mode, params.delta, coloring, rng)?;
    Ok(run_from(graph, arcs, state, params, init))
}
