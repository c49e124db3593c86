//! `bpcol`: generate planted graphs, run BPCol and the spectral baseline,
//! verify regularity, inspect trajectories and run seeded sweeps.
//!
//! Exit status: 0 on success, 1 when the algorithm fails on its input (for
//! example an improper coloring) or output cannot be written, 2 on usage
//! errors such as bad flags or unreadable input files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bpcol::bp::{self, InitMode};
use bpcol::experiment::{self, Cell, OutputFormat, SweepConfig, TrialOptions, TrialRecord};
use bpcol::gen::{self, GenParams};
use bpcol::graph::{check_planted_regular, ArcTable};
use bpcol::io::{read_graph, write_graph, GraphFile};
use bpcol::lab::{self, ArcVector, TrajectoryConfig};
use bpcol::rng;
use bpcol::spectral::{self, PowerSettings, SpectralSettings};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Streams of the command seed used by the single-run subcommands.
const POWER_STREAM: u64 = 9;
const SPECTRAL_STREAM: u64 = 10;

#[derive(Parser, Debug)]
#[command(
    name = "bpcol",
    version,
    about = "Belief propagation 3-coloring of planted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Seed for every random choice of the command.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file, written atomically. Standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a planted 3-colorable graph with d neighbors in each other class.
    Gen {
        #[arg(long)]
        per_class: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run BPCol on a graph file and report a trial record.
    Bp {
        graph: PathBuf,
        #[arg(long, default_value = "balanced")]
        init: InitMode,
        /// Initial perturbation; defaults to exp(-ln³ n).
        #[arg(long)]
        delta: Option<f64>,
        /// Iteration cap; defaults to ceil(ln⁴ n).
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        no_early_stop: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Color a graph from the bottom eigenspace of its adjacency matrix.
    Spectral {
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check planted regularity and estimate epsilon_hat.
    Verify {
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Track the true and linearized messages from one initialization.
    Lab {
        graph: PathBuf,
        #[arg(long, default_value = "balanced")]
        init: InitMode,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        relaxed_tau: f64,
        /// Write the per-iteration norms as CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a seeded parameter sweep described by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `format` from the config.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Debug, PartialEq, Eq)]
enum Status {
    Success,
    AlgorithmFailed,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type Outcome = Result<Status, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn exit_code(outcome: &Outcome) -> u8 {
    match outcome {
        Ok(Status::Success) => 0,
        Ok(Status::AlgorithmFailed) | Err(Failure::Runtime(_)) => 1,
        Err(Failure::Usage(_)) => 2,
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Success
    } else {
        Status::AlgorithmFailed
    }
}

/// Writes through `f` to `out`, or to standard output. Files are written to a
/// temporary sibling and renamed into place.
fn write_output(
    out: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> Result<(), Failure> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(runtime)?;
            lock.flush().map_err(runtime)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))
                .map_err(runtime)?;
            let mut w = BufWriter::new(tmp);
            f(&mut w).map_err(runtime)?;
            let tmp = w.into_inner().map_err(|e| runtime(e.into_error()))?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime)?;
            Ok(())
        }
    }
}

fn write_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<(), Failure> {
    write_output(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn load_graph(path: &Path) -> Result<GraphFile, Failure> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(usage)?;
    read_graph(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn cmd_gen(per_class: usize, d: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let inst = gen::generate(&GenParams::new(per_class, d, seed)).map_err(|e| match e {
        bpcol::Error::InvalidParameter(_) => usage(e),
        other => runtime(other),
    })?;
    log::info!("sampled with {:?}", inst.sampler);
    write_output(out, |w| {
        write_graph(&inst.graph, Some(&inst.coloring), d, w)?;
        Ok(())
    })?;
    Ok(Status::Success)
}

fn write_record(record: &TrialRecord, common: &Common) -> Result<(), Failure> {
    match common.format {
        Format::Json => write_json(common.out.as_deref(), record),
        Format::Csv => write_output(common.out.as_deref(), |w| {
            experiment::write_records_csv(std::slice::from_ref(record), w)?;
            Ok(())
        }),
    }
}

fn cmd_bp(
    graph: &Path,
    init: InitMode,
    delta: Option<f64>,
    iters: Option<usize>,
    no_early_stop: bool,
    common: &Common,
) -> Outcome {
    let file = load_graph(graph)?;
    if init == InitMode::Aligned && file.coloring.is_none() {
        return Err(usage(anyhow!(
            "aligned init needs a graph file with a coloring"
        )));
    }
    if iters == Some(0) {
        return Err(usage(anyhow!("--iters must be >= 1")));
    }
    let cell = Cell {
        per_class: file.graph.num_vertices() / 3,
        d: file.d,
        delta,
        init,
        epsilon: 0.05,
        relaxed_tau: 0.2,
    };
    let options = TrialOptions {
        l_star: iters,
        early_stop: !no_early_stop,
        diagnostics: file.d > 0,
        record_timing: false,
    };
    let record = experiment::run_on_graph(
        &file.graph,
        file.coloring.as_ref(),
        file.d,
        &cell,
        common.seed,
        &options,
    )
    .map_err(usage)?;
    write_record(&record, common)?;
    Ok(status(record.success))
}

fn cmd_spectral(graph: &Path, common: &Common) -> Outcome {
    let file = load_graph(graph)?;
    let result = spectral::spectral_color(
        &file.graph,
        &SpectralSettings::default(),
        &mut rng::stream(common.seed, SPECTRAL_STREAM),
    );
    let (report, ok) = match result {
        Ok(sc) => {
            let proper = bp::is_proper_coloring(&file.graph, &sc.colors);
            let matches = file
                .coloring
                .as_ref()
                .map(|c| bp::matches_up_to_permutation(&sc.colors, c.classes()));
            (
                json!({
                    "success": proper,
                    "matches_planted": matches,
                    "ritz_values": sc.ritz_values,
                    "iters": sc.iters,
                    "converged": sc.converged,
                    "colors": sc.colors,
                    "error": null,
                }),
                proper,
            )
        }
        Err(e) => (json!({"success": false, "error": e.to_string()}), false),
    };
    match common.format {
        Format::Json => write_json(common.out.as_deref(), &report)?,
        Format::Csv => write_output(common.out.as_deref(), |w| {
            writeln!(w, "vertex,color")?;
            if let Some(colors) = report["colors"].as_array() {
                for (v, c) in colors.iter().enumerate() {
                    writeln!(w, "{v},{c}")?;
                }
            }
            Ok(())
        })?,
    }
    Ok(status(ok))
}

fn cmd_verify(graph: &Path, common: &Common) -> Outcome {
    let file = load_graph(graph)?;
    let coloring = file
        .coloring
        .as_ref()
        .ok_or_else(|| usage(anyhow!("verify needs a graph file with a coloring")))?;
    if file.d == 0 {
        return Err(usage(anyhow!("verify needs d in the graph header")));
    }
    let check = check_planted_regular(&file.graph, coloring, file.d);
    let r1 = spectral::verify_r1(&file.graph, coloring, file.d);
    let r1_residual = r1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let report = spectral::estimate_epsilon(
        &file.graph,
        coloring,
        file.d,
        PowerSettings::default(),
        &mut rng::stream(common.seed, POWER_STREAM),
    )
    .map_err(runtime)?;
    let value = json!({
        "planted_regular": check.pass,
        "degree_violations": check.degree_violations.len(),
        "intra_class_edges": check.intra_class_edges.len(),
        "r1_residual": r1_residual,
        "epsilon_hat": report.epsilon_hat,
        "epsilon_hat_sqrt_d": report.epsilon_hat * (file.d as f64).sqrt(),
        "power_iters": report.power_iters,
        "converged": report.converged,
    });
    match common.format {
        Format::Json => write_json(common.out.as_deref(), &value)?,
        Format::Csv => write_output(common.out.as_deref(), |w| {
            let obj = value.as_object().expect("object");
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            writeln!(w, "{}", keys.join(","))?;
            let vals: Vec<String> = obj.values().map(|v| v.to_string()).collect();
            writeln!(w, "{}", vals.join(","))?;
            Ok(())
        })?,
    }
    Ok(status(check.pass && r1_residual == 0.0))
}

fn cmd_lab(
    graph: &Path,
    init: InitMode,
    delta: Option<f64>,
    epsilon: f64,
    relaxed_tau: f64,
    dump: Option<&Path>,
    common: &Common,
) -> Outcome {
    let file = load_graph(graph)?;
    let coloring = file
        .coloring
        .as_ref()
        .ok_or_else(|| usage(anyhow!("lab needs a graph file with a coloring")))?;
    let arcs = ArcTable::new(&file.graph);
    let basis = lab::build_eig_basis(&arcs, coloring, file.d).map_err(|e| match e {
        bpcol::Error::EigenResidual(_) => runtime(e),
        other => usage(other),
    })?;
    let delta = delta.unwrap_or_else(|| bp::default_delta(file.graph.num_vertices()));
    let (state, _) = bp::initialize(
        &arcs,
        init,
        delta,
        Some(coloring),
        &mut rng::stream(common.seed, 8),
    )
    .map_err(usage)?;
    let config = TrajectoryConfig {
        epsilon,
        relaxed_tau,
        ..TrajectoryConfig::default()
    };
    let record =
        match lab::trajectory_diagnostics(&arcs, &basis, &ArcVector::from_state(&state), &config) {
            Ok(r) => r,
            Err(e @ bpcol::Error::NoCrossing(_)) => {
                log::error!("{e}");
                return Ok(Status::AlgorithmFailed);
            }
            Err(e) => return Err(usage(e)),
        };
    if let Some(path) = dump {
        write_output(Some(path), |w| {
            lab::write_series_csv(&record, w)?;
            Ok(())
        })?;
    }
    match common.format {
        Format::Json => write_json(common.out.as_deref(), &record)?,
        Format::Csv => write_output(common.out.as_deref(), |w| {
            lab::write_series_csv(&record, w)?;
            Ok(())
        })?,
    }
    Ok(status(record.proper_at_l3))
}

/// `results.csv` → `results.summary.json`.
fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.json"))
}

fn cmd_sweep(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
) -> Outcome {
    let mut cfg = SweepConfig::load(config)
        .with_context(|| format!("loading {}", config.display()))
        .map_err(usage)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(f) = format {
        cfg.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    let out = out.or_else(|| cfg.output.clone());
    let result = experiment::run_sweep(&cfg).map_err(usage)?;
    write_output(out.as_deref(), |w| {
        experiment::write_sweep(&result, cfg.format, w)?;
        Ok(())
    })?;
    if cfg.format == OutputFormat::Csv {
        match &out {
            Some(path) => write_json(Some(&summary_path(path)), &result.summary)?,
            None => {
                for s in &result.summary {
                    eprintln!(
                        "cell {}: {}/{} successes, rate {:.3} [{:.3}, {:.3}]",
                        s.cell, s.successes, s.trials, s.success_rate, s.wilson_low, s.wilson_high
                    );
                }
            }
        }
    }
    let errors: usize = result.summary.iter().map(|s| s.errors).sum();
    if errors > 0 {
        log::warn!("{errors} trials failed with errors; see the error column");
    }
    Ok(Status::Success)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen {
            per_class,
            d,
            seed,
            out,
        } => cmd_gen(per_class, d, seed, out.as_deref()),
        Command::Bp {
            graph,
            init,
            delta,
            iters,
            no_early_stop,
            common,
        } => cmd_bp(&graph, init, delta, iters, no_early_stop, &common),
        Command::Spectral { graph, common } => cmd_spectral(&graph, &common),
        Command::Verify { graph, common } => cmd_verify(&graph, &common),
        Command::Lab {
            graph,
            init,
            delta,
            epsilon,
            relaxed_tau,
            dump_trajectory,
            common,
        } => cmd_lab(
            &graph,
            init,
            delta,
            epsilon,
            relaxed_tau,
            dump_trajectory.as_deref(),
            &common,
        ),
        Command::Sweep {
            config,
            seed,
            out,
            format,
        } => cmd_sweep(&config, seed, out, format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = run(cli);
    match &outcome {
        Err(Failure::Usage(e)) => eprintln!("error: {e:#}"),
        Err(Failure::Runtime(e)) => eprintln!("error: {e:#}"),
        Ok(Status::AlgorithmFailed) => eprintln!("bpcol: algorithm did not succeed"),
        Ok(Status::Success) => {}
    }
    ExitCode::from(exit_code(&outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        let mut full = vec!["bpcol"];
        full.extend_from_slice(args);
        run(Cli::try_parse_from(full).expect("valid arguments"))
    }

    fn path_str(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    #[test]
    fn gen_writes_octahedron_with_coloring() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.txt");
        let o = run_args(&[
            "gen",
            "--per-class",
            "2",
            "--d",
            "2",
            "--seed",
            "7",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(exit_code(&o), 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("p planted3 6 12 2\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("c ")).count(), 6);
        assert_eq!(text.lines().filter(|l| l.starts_with("e ")).count(), 12);
        let file = read_graph(text.as_bytes()).unwrap();
        assert!(check_planted_regular(&file.graph, file.coloring.as_ref().unwrap(), 2).pass);
        // No stray temporary files are left beside the output.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn gen_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        for p in [&a, &b] {
            run_args(&[
                "gen",
                "--per-class",
                "30",
                "--d",
                "5",
                "--seed",
                "3",
                "--out",
                path_str(p),
            ])
            .unwrap();
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    fn generated(dir: &Path, per_class: &str, d: &str) -> PathBuf {
        let g = dir.join(format!("g{per_class}_{d}.txt"));
        run_args(&[
            "gen",
            "--per-class",
            per_class,
            "--d",
            d,
            "--seed",
            "11",
            "--out",
            path_str(&g),
        ])
        .unwrap();
        g
    }

    #[test]
    fn bp_reports_a_trial_record() {
        let dir = tempfile::tempdir().unwrap();
        let g = generated(dir.path(), "50", "16");
        let out = dir.path().join("r.json");
        let o = run_args(&[
            "bp",
            path_str(&g),
            "--init",
            "aligned",
            "--delta",
            "1e-6",
            "--seed",
            "1",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(exit_code(&o), 0);
        let rec: TrialRecord =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert!(rec.success && rec.success_matches_planted);
        assert_eq!(rec.init_mode, InitMode::Aligned);
        assert_eq!(rec.per_class, 50);
        assert!(rec.epsilon_hat.is_some() && rec.y.is_some());

        let csv_out = dir.path().join("r.csv");
        run_args(&[
            "bp",
            path_str(&g),
            "--init",
            "balanced",
            "--delta",
            "1e-10",
            "--seed",
            "1",
            "--format",
            "csv",
            "--out",
            path_str(&csv_out),
        ])
        .unwrap();
        let text = std::fs::read_to_string(&csv_out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("cell,trial,seed"));
    }

    #[test]
    fn bp_failure_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let g = generated(dir.path(), "30", "8");
        // A zero perturbation leaves every message uniform.
        let o = run_args(&[
            "bp",
            path_str(&g),
            "--delta",
            "0",
            "--iters",
            "5",
            "--out",
            path_str(&dir.path().join("r.json")),
        ]);
        assert_eq!(o.unwrap(), Status::AlgorithmFailed);
    }

    #[test]
    fn usage_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.txt");
        assert_eq!(exit_code(&run_args(&["bp", path_str(&missing)])), 2);
        assert_eq!(exit_code(&run_args(&["verify", path_str(&missing)])), 2);
        let g = generated(dir.path(), "10", "2");
        assert_eq!(
            exit_code(&run_args(&["bp", path_str(&g), "--delta", "0.9"])),
            2
        );
        assert_eq!(exit_code(&run_args(&["lab", path_str(&g)])), 2);
        assert_eq!(
            exit_code(&run_args(&["gen", "--per-class", "2", "--d", "5"])),
            2
        );
        assert!(Cli::try_parse_from(["bpcol", "bp", "g.txt", "--init", "random"]).is_err());
        assert!(Cli::try_parse_from(["bpcol", "frobnicate"]).is_err());

        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "p planted3 3 1 0\ne 1 1\n").unwrap();
        match run_args(&["spectral", path_str(&bad)]) {
            Err(Failure::Usage(e)) => assert!(format!("{e:#}").contains("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_reports_zero_r1_residual() {
        let dir = tempfile::tempdir().unwrap();
        let g = generated(dir.path(), "40", "8");
        let out = dir.path().join("v.json");
        let o = run_args(&["verify", path_str(&g), "--out", path_str(&out)]);
        assert_eq!(exit_code(&o), 0);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["r1_residual"], 0.0);
        assert_eq!(v["planted_regular"], true);
        assert!(v["epsilon_hat"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn spectral_recovers_planted_coloring() {
        let dir = tempfile::tempdir().unwrap();
        let g = generated(dir.path(), "50", "8");
        let out = dir.path().join("s.json");
        assert_eq!(
            exit_code(&run_args(&[
                "spectral",
                path_str(&g),
                "--out",
                path_str(&out)
            ])),
            0
        );
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["matches_planted"], true);
        assert_eq!(v["colors"].as_array().unwrap().len(), 150);
    }

    #[test]
    fn lab_dumps_trajectory() {
        let dir = tempfile::tempdir().unwrap();
        let g = generated(dir.path(), "50", "16");
        let out = dir.path().join("lab.json");
        let dump = dir.path().join("traj.csv");
        let o = run_args(&[
            "lab",
            path_str(&g),
            "--init",
            "aligned",
            "--delta",
            "1e-20",
            "--dump-trajectory",
            path_str(&dump),
            "--out",
            path_str(&out),
        ]);
        assert_eq!(exit_code(&o), 0);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["proper_at_l3"], true);
        let l2 = v["l2"].as_u64().unwrap() as usize;
        let csv = std::fs::read_to_string(&dump).unwrap();
        assert_eq!(csv.lines().next(), Some("l,xi_inf,delta_inf,err_inf"));
        assert_eq!(csv.lines().count(), l2 + 3);
    }

    #[test]
    fn sweep_writes_rows_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("sweep.toml");
        std::fs::write(
            &cfg,
            "trials = 2\nbase_seed = 5\n[grid]\nper_class = [2]\nd = [2]\ninit = [\"aligned\"]\ndelta = [0.1]\n",
        )
        .unwrap();
        let out = dir.path().join("res.csv");
        let o = run_args(&["sweep", "--config", path_str(&cfg), "--out", path_str(&out)]);
        assert_eq!(exit_code(&o), 0);
        let first = std::fs::read(&out).unwrap();
        assert_eq!(String::from_utf8_lossy(&first).lines().count(), 3);
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("res.summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(summary[0]["success_rate"], 1.0);

        run_args(&["sweep", "--config", path_str(&cfg), "--out", path_str(&out)]).unwrap();
        assert_eq!(std::fs::read(&out).unwrap(), first);

        let json_out = dir.path().join("res.json");
        run_args(&[
            "sweep",
            "--config",
            path_str(&cfg),
            "--format",
            "json",
            "--out",
            path_str(&json_out),
        ])
        .unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 2);

        std::fs::write(&cfg, "trials = 0\nbase_seed = 5\n").unwrap();
        assert_eq!(
            exit_code(&run_args(&["sweep", "--config", path_str(&cfg)])),
            2
        );
    }
}
