//! Seeded trials and parameter sweeps.
//!
//! A sweep is described by a TOML file:
//!
//! ```toml
//! trials = 20
//! base_seed = 1
//! output = "results.csv"   # optional; format follows `format`
//! format = "csv"           # "csv" (default) or "json"
//! diagnostics = true       # lab projections, L2/L3 and epsilon_hat per trial
//! record_timing = false    # wall_time column; makes output nondeterministic
//! iters = 200              # optional cap on BP iterations
//!
//! [grid]
//! per_class = [100, 300]
//! d = [16]
//! init = ["balanced", "independent"]
//! delta = [1e-30]          # optional; omitted means the default for each n
//! epsilon = [0.05]         # optional
//! relaxed_tau = [0.2]      # optional
//! ```
//!
//! Cells are the cartesian product of the grid lists, enumerated with
//! `per_class` outermost and `relaxed_tau` innermost. Trial `t` of cell `c`
//! uses seed `derive_seed(base_seed, [c, t])`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{self, BpParams, InitMode, StopReason};
use crate::error::{Error, Result};
use crate::gen::{self, GenParams, Sampler};
use crate::graph::{ArcTable, Graph, PlantedColoring};
use crate::lab::{self, ArcVector, TrajectoryConfig};
use crate::rng;
use crate::spectral::{self, PowerSettings};

/// Stream used for the BP initialization of a trial.
const INIT_STREAM: u64 = 8;
/// Stream used for the power-iteration start vector.
const POWER_STREAM: u64 = 9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub per_class: Vec<usize>,
    pub d: Vec<usize>,
    pub init: Vec<InitMode>,
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    #[serde(default = "default_epsilons")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_taus")]
    pub relaxed_tau: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.05]
}

fn default_taus() -> Vec<f64> {
    vec![0.2]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub iters: Option<usize>,
    pub grid: Grid,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<SweepConfig> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<SweepConfig> {
        SweepConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        let g = &self.grid;
        if g.per_class.is_empty()
            || g.d.is_empty()
            || g.init.is_empty()
            || g.epsilon.is_empty()
            || g.relaxed_tau.is_empty()
            || g.delta.as_ref().is_some_and(|v| v.is_empty())
        {
            return bad("every grid list must be non-empty".into());
        }
        if let Some(&d) = g.d.iter().find(|&&d| d < 1) {
            return bad(format!("d = {d} must be >= 1"));
        }
        if let Some(&m) = g.per_class.iter().find(|&&m| m < 1) {
            return bad(format!("per_class = {m} must be >= 1"));
        }
        if let Some(e) = g.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("epsilon = {e} not in (0, 1)"));
        }
        if let Some(t) = g.relaxed_tau.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return bad(format!("relaxed_tau = {t} not in (0, 1)"));
        }
        if let Some(x) = g
            .delta
            .iter()
            .flatten()
            .find(|x| !(0.0..bp::THIRD).contains(*x))
        {
            return bad(format!("delta = {x} not in [0, 1/3)"));
        }
        if self.iters == Some(0) {
            return bad("iters must be >= 1".into());
        }
        Ok(())
    }

    /// All grid cells, in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let deltas: Vec<Option<f64>> = match &g.delta {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for &per_class in &g.per_class {
            for &d in &g.d {
                for &delta in &deltas {
                    for &init in &g.init {
                        for &epsilon in &g.epsilon {
                            for &relaxed_tau in &g.relaxed_tau {
                                out.push(Cell {
                                    per_class,
                                    d,
                                    delta,
                                    init,
                                    epsilon,
                                    relaxed_tau,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub per_class: usize,
    pub d: usize,
    /// `None` means `default_delta(n)`.
    pub delta: Option<f64>,
    pub init: InitMode,
    pub epsilon: f64,
    pub relaxed_tau: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct TrialOptions {
    pub l_star: Option<usize>,
    pub early_stop: bool,
    pub diagnostics: bool,
    pub record_timing: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            l_star: None,
            early_stop: true,
            diagnostics: true,
            record_timing: false,
        }
    }
}

/// Measurements from one BPCol run.
///
/// `x[k][a]` is the projection on `ζ_{k+2}^a` and `y[i][a]` the derived value
/// for class `i`, color `a` (all indices 0-based). Fields that depend on the
/// planted coloring or on `d >= 8` are `None` when unavailable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub per_class: usize,
    pub d: usize,
    pub delta: f64,
    pub init_mode: InitMode,
    pub epsilon: f64,
    pub relaxed_tau: f64,
    pub sampler: Option<Sampler>,
    pub iterations_run: usize,
    pub stop: Option<StopReason>,
    pub success: bool,
    pub success_matches_planted: bool,
    pub w_sizes: Option<[usize; 3]>,
    pub feasible_f1: Option<bool>,
    pub feasible_strict: Option<bool>,
    pub feasible_relaxed: Option<bool>,
    pub l2: Option<usize>,
    pub l3: Option<usize>,
    pub epsilon_hat: Option<f64>,
    pub x: Option<[[f64; 3]; 2]>,
    pub y: Option<[[f64; 3]; 3]>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub wall_time: Option<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    fn failed(cell: usize, trial: usize, seed: u64, c: &Cell, err: &Error) -> TrialRecord {
        TrialRecord {
            cell,
            trial,
            seed,
            per_class: c.per_class,
            d: c.d,
            delta: c.delta.unwrap_or(bp::default_delta(3 * c.per_class)),
            init_mode: c.init,
            epsilon: c.epsilon,
            relaxed_tau: c.relaxed_tau,
            sampler: None,
            iterations_run: 0,
            stop: None,
            success: false,
            success_matches_planted: false,
            w_sizes: None,
            feasible_f1: None,
            feasible_strict: None,
            feasible_relaxed: None,
            l2: None,
            l3: None,
            epsilon_hat: None,
            x: None,
            y: None,
            nu: None,
            lambda: None,
            wall_time: None,
            error: Some(err.to_string()),
        }
    }

    /// CSV column names; `x` and `y` are flattened to `x_k_a` and `y_i_a`.
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = [
            "cell",
            "trial",
            "seed",
            "per_class",
            "d",
            "delta",
            "init_mode",
            "epsilon",
            "relaxed_tau",
            "sampler",
            "iterations_run",
            "stop",
            "success",
            "success_matches_planted",
            "w0",
            "w1",
            "w2",
            "feasible_f1",
            "feasible_strict",
            "feasible_relaxed",
            "l2",
            "l3",
            "epsilon_hat",
        ]
        .map(String::from)
        .to_vec();
        for k in 0..2 {
            for a in 0..3 {
                h.push(format!("x_{k}_{a}"));
            }
        }
        for i in 0..3 {
            for a in 0..3 {
                h.push(format!("y_{i}_{a}"));
            }
        }
        h.extend(["nu", "lambda", "wall_time", "error"].map(String::from));
        h
    }

    pub fn csv_fields(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut f = vec![
            self.cell.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
            self.per_class.to_string(),
            self.d.to_string(),
            format!("{:e}", self.delta),
            self.init_mode.to_string(),
            self.epsilon.to_string(),
            self.relaxed_tau.to_string(),
            opt(self.sampler.map(|s| match s {
                Sampler::Exact => "exact",
                Sampler::SwitchRepair => "switch_repair",
            })),
            self.iterations_run.to_string(),
            opt(self.stop.map(|s| match s {
                StopReason::IterationCap => "iteration_cap",
                StopReason::Converged => "converged",
                StopReason::Proper => "proper",
                StopReason::Contradiction => "contradiction",
            })),
            self.success.to_string(),
            self.success_matches_planted.to_string(),
        ];
        for c in 0..3 {
            f.push(opt(self.w_sizes.map(|w| w[c])));
        }
        f.extend([
            opt(self.feasible_f1),
            opt(self.feasible_strict),
            opt(self.feasible_relaxed),
            opt(self.l2),
            opt(self.l3),
            opt(self.epsilon_hat),
        ]);
        for k in 0..2 {
            for a in 0..3 {
                f.push(opt(self.x.map(|x| x[k][a])));
            }
        }
        for i in 0..3 {
            for a in 0..3 {
                f.push(opt(self.y.map(|y| y[i][a])));
            }
        }
        f.extend([
            opt(self.nu),
            opt(self.lambda),
            opt(self.wall_time),
            self.error.clone().unwrap_or_default(),
        ]);
        f
    }
}

/// Lab measurements of an initial state; any failure leaves them empty.
#[derive(Default)]
struct LabFields {
    feasible_f1: Option<bool>,
    feasible_strict: Option<bool>,
    feasible_relaxed: Option<bool>,
    l2: Option<usize>,
    l3: Option<usize>,
    x: Option<[[f64; 3]; 2]>,
    y: Option<[[f64; 3]; 3]>,
    nu: Option<f64>,
    lambda: Option<f64>,
}

fn lab_fields(
    arcs: &ArcTable,
    coloring: &PlantedColoring,
    d: usize,
    delta0: &ArcVector,
    epsilon: f64,
    relaxed_tau: f64,
) -> LabFields {
    let mut out = LabFields::default();
    let basis = match lab::build_eig_basis(arcs, coloring, d) {
        Ok(b) => b,
        Err(e) => {
            log::debug!("no eigenbasis: {e}");
            return out;
        }
    };
    out.lambda = Some(basis.constants.lambda);
    match lab::is_feasible(delta0, &basis, epsilon, relaxed_tau) {
        Ok(f) => {
            out.feasible_f1 = Some(f.f1);
            out.feasible_strict = Some(f.strict);
            out.feasible_relaxed = Some(f.relaxed);
        }
        Err(e) => log::debug!("feasibility: {e}"),
    }
    if let Ok(p) = lab::projections(delta0, &basis) {
        out.x = Some(p.x);
        out.y = Some(lab::y_from_x(&p.x));
        out.nu = Some(p.nu);
    }
    let config = TrajectoryConfig {
        epsilon,
        relaxed_tau,
        ..TrajectoryConfig::default()
    };
    match lab::trajectory_diagnostics(arcs, &basis, delta0, &config) {
        Ok(t) => {
            out.l2 = Some(t.l2);
            out.l3 = t.l3;
        }
        Err(e) => log::debug!("trajectory: {e}"),
    }
    out
}

/// Runs BPCol on a given graph. With a planted coloring, the record also
/// carries the match flag and, under `diagnostics`, the lab fields and
/// `epsilon_hat`.
pub fn run_on_graph(
    graph: &Graph,
    coloring: Option<&PlantedColoring>,
    d: usize,
    cell: &Cell,
    seed: u64,
    options: &TrialOptions,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let n = graph.num_vertices();
    let arcs = ArcTable::new(graph);
    let mut params = BpParams::for_graph(n);
    if let Some(delta) = cell.delta {
        params.delta = delta;
    }
    if let Some(l) = options.l_star {
        params.l_star = l;
    }
    params.early_stop = options.early_stop;
    let (state, init) = bp::initialize(
        &arcs,
        cell.init,
        params.delta,
        coloring,
        &mut rng::stream(seed, INIT_STREAM),
    )?;
    let w_sizes = init.w_sizes();

    let mut lab = LabFields::default();
    let mut epsilon_hat = None;
    if let (true, Some(c)) = (options.diagnostics, coloring) {
        let delta0 = ArcVector::from_state(&state);
        lab = lab_fields(&arcs, c, d, &delta0, cell.epsilon, cell.relaxed_tau);
        let report = spectral::estimate_epsilon(
            graph,
            c,
            d,
            PowerSettings::default(),
            &mut rng::stream(seed, POWER_STREAM),
        )?;
        epsilon_hat = Some(report.epsilon_hat);
    }

    let outcome = bp::run_from(graph, &arcs, state, &params, init);
    let matches = outcome.success
        && coloring.is_some_and(|c| bp::matches_up_to_permutation(&outcome.colors, c.classes()));
    Ok(TrialRecord {
        cell: 0,
        trial: 0,
        seed,
        per_class: n / 3,
        d,
        delta: params.delta,
        init_mode: cell.init,
        epsilon: cell.epsilon,
        relaxed_tau: cell.relaxed_tau,
        sampler: None,
        iterations_run: outcome.iterations_run,
        stop: Some(outcome.stop),
        success: outcome.success,
        success_matches_planted: matches,
        w_sizes: Some(w_sizes),
        feasible_f1: lab.feasible_f1,
        feasible_strict: lab.feasible_strict,
        feasible_relaxed: lab.feasible_relaxed,
        l2: lab.l2,
        l3: lab.l3,
        epsilon_hat,
        x: lab.x,
        y: lab.y,
        nu: lab.nu,
        lambda: lab.lambda,
        wall_time: options.record_timing.then(|| start.elapsed().as_secs_f64()),
        error: outcome.contradiction,
    })
}

/// Generates a planted instance from `seed` and runs one trial on it.
pub fn run_trial(cell: &Cell, seed: u64, options: &TrialOptions) -> Result<TrialRecord> {
    let start = Instant::now();
    let inst = gen::generate(&GenParams::new(cell.per_class, cell.d, seed))?;
    let mut rec = run_on_graph(
        &inst.graph,
        Some(&inst.coloring),
        inst.d,
        cell,
        seed,
        options,
    )?;
    rec.per_class = cell.per_class;
    rec.sampler = Some(inst.sampler);
    if options.record_timing {
        rec.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(rec)
}

/// Per-cell aggregates. Rates are means of the row flags over all trials,
/// including failed ones.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    #[serde(flatten)]
    pub params: Cell,
    pub trials: usize,
    pub errors: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub matches_planted: usize,
    pub matches_planted_rate: f64,
    pub feasible_relaxed_rate: Option<f64>,
    pub feasible_strict_rate: Option<f64>,
    pub mean_epsilon_hat: Option<f64>,
}

/// Standard normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn rate<I: Iterator<Item = Option<bool>>>(flags: I) -> Option<f64> {
    let v: Vec<bool> = flags.collect::<Option<Vec<bool>>>()?;
    (!v.is_empty()).then(|| v.iter().filter(|&&b| b).count() as f64 / v.len() as f64)
}

pub fn summarize(cells: &[Cell], records: &[TrialRecord]) -> Vec<CellSummary> {
    cells
        .iter()
        .enumerate()
        .map(|(i, params)| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.cell == i).collect();
            let trials = rows.len();
            let successes = rows.iter().filter(|r| r.success).count();
            let matches = rows.iter().filter(|r| r.success_matches_planted).count();
            let (lo, hi) = wilson_interval(successes, trials, Z95);
            let eps: Option<Vec<f64>> = rows.iter().map(|r| r.epsilon_hat).collect();
            CellSummary {
                cell: i,
                params: *params,
                trials,
                errors: rows.iter().filter(|r| r.error.is_some()).count(),
                successes,
                success_rate: if trials > 0 {
                    successes as f64 / trials as f64
                } else {
                    0.0
                },
                wilson_low: lo,
                wilson_high: hi,
                matches_planted: matches,
                matches_planted_rate: if trials > 0 {
                    matches as f64 / trials as f64
                } else {
                    0.0
                },
                feasible_relaxed_rate: rate(rows.iter().map(|r| r.feasible_relaxed)),
                feasible_strict_rate: rate(rows.iter().map(|r| r.feasible_strict)),
                mean_epsilon_hat: eps
                    .filter(|v| !v.is_empty())
                    .map(|v| v.iter().sum::<f64>() / v.len() as f64),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

/// Runs every trial of every cell. Trials run in parallel; a trial that
/// fails is recorded with its error and does not stop the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells = config.cells();
    let options = TrialOptions {
        l_star: config.iters,
        early_stop: true,
        diagnostics: config.diagnostics,
        record_timing: config.record_timing,
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let seed = rng::derive_seed(config.base_seed, &[c as u64, t as u64]);
            let mut rec = run_trial(&cells[c], seed, &options).unwrap_or_else(|e| {
                log::warn!("cell {c} trial {t}: {e}");
                TrialRecord::failed(c, t, seed, &cells[c], &e)
            });
            rec.cell = c;
            rec.trial = t;
            rec
        })
        .collect();
    let summary = summarize(&cells, &records);
    Ok(SweepResult { records, summary })
}

pub fn write_records_csv(records: &[TrialRecord], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TrialRecord::csv_header())?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the sweep in `format`: CSV rows only, or one JSON document with
/// `records` and `summary`.
pub fn write_sweep(result: &SweepResult, format: OutputFormat, mut sink: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => write_records_csv(&result.records, sink),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, result)?;
            writeln!(sink)?;
            Ok(())
        }
    }
}

/// JSON schema (draft 2020-12) for a serialized [`TrialRecord`].
pub fn trial_record_schema() -> serde_json::Value {
    use serde_json::json;
    let num = json!({"type": "number"});
    let opt_num = json!({"type": ["number", "null"]});
    let opt_bool = json!({"type": ["boolean", "null"]});
    let count = json!({"type": "integer", "minimum": 0});
    let opt_count = json!({"type": ["integer", "null"], "minimum": 0});
    let row3 = json!({"type": "array", "items": num, "minItems": 3, "maxItems": 3});
    let matrix = |rows: usize| {
        json!({
            "type": ["array", "null"],
            "items": row3,
            "minItems": rows,
            "maxItems": rows
        })
    };
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "TrialRecord",
        "type": "object",
        "additionalProperties": false,
        "required": [
            "cell", "trial", "seed", "per_class", "d", "delta", "init_mode", "epsilon",
            "relaxed_tau", "sampler", "iterations_run", "stop", "success",
            "success_matches_planted", "w_sizes", "feasible_f1", "feasible_strict",
            "feasible_relaxed", "l2", "l3", "epsilon_hat", "x", "y", "nu", "lambda",
            "wall_time", "error"
        ],
        "properties": {
            "cell": count,
            "trial": count,
            "seed": count,
            "per_class": count,
            "d": count,
            "delta": {"type": "number", "minimum": 0, "exclusiveMaximum": bp::THIRD},
            "init_mode": {"enum": ["independent", "balanced", "aligned"]},
            "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "relaxed_tau": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "sampler": {"enum": ["exact", "switch_repair", null]},
            "iterations_run": count,
            "stop": {"enum": ["iteration_cap", "converged", "proper", "contradiction", null]},
            "success": {"type": "boolean"},
            "success_matches_planted": {"type": "boolean"},
            "w_sizes": {
                "type": ["array", "null"],
                "items": count,
                "minItems": 3,
                "maxItems": 3
            },
            "feasible_f1": opt_bool,
            "feasible_strict": opt_bool,
            "feasible_relaxed": opt_bool,
            "l2": opt_count,
            "l3": opt_count,
            "epsilon_hat": {"type": ["number", "null"], "minimum": 0},
            "x": matrix(2),
            "y": matrix(3),
            "nu": opt_num,
            "lambda": opt_num,
            "wall_time": {"type": ["number", "null"], "minimum": 0},
            "error": {"type": ["string", "null"]}
        },
        "if": {"properties": {"success_matches_planted": {"const": true}}},
        "then": {"properties": {"success": {"const": true}}}
    })
}
