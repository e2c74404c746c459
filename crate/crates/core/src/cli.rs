//! The `groupmatch` command line: match, simulate, estimate, evaluate.
//!
//! Exit codes: 0 success, 2 no match found, 1 usage or data error.

use std::cmp::Ordering;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_algorithms, GridConfig, RunConfig};
use crate::criteria::{compare_solutions, Problem};
use crate::dataset::{load_dataset, write_dataset, Dataset, Schema};
use crate::error::{MatchError, Result};
use crate::harness::{
    evaluate_run, run_experiment_grid, write_rows_csv, Aggregate, EvalMetrics, GridOptions, RunRow,
};
use crate::search::{
    calibrate_rate, estimate_exhaustive, write_trace, Algorithm, MatchResult,
};
use crate::stats::TestRegistry;
use crate::synthgen::{generate_dataset, read_truth, write_truth, SyntheticSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_MATCH: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "groupmatch", version, about = "Select covariate-matched subsets of grouped subjects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for matched subsets as described by a run config.
    Match(Overrides),
    /// Generate a synthetic dataset and its truth sidecar from a spec.
    Simulate(SimulateArgs),
    /// Project the running time of exhaustive search on a run config.
    Estimate(EstimateArgs),
    /// Run an experiment grid over synthetic data.
    Evaluate(Overrides),
}

/// Flags that override scalar config fields.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated: greedy, random:I, h3:L[:rho], h4:L[:rho], exhaustive:n
    #[arg(long)]
    pub algorithms: Option<String>,
}

impl Overrides {
    pub fn new(config: impl Into<PathBuf>) -> Self {
        Overrides {
            config: config.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Synthetic dataset spec (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Removal bound; defaults to what the first configured algorithm needs.
    #[arg(long)]
    pub bound: Option<usize>,
    /// Configurations per second; measured on the dataset when omitted.
    #[arg(long)]
    pub rate: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let out = match &cli.command {
        Command::Match(o) => cmd_match(o),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(&a.common, a.bound, a.rate),
        Command::Evaluate(o) => cmd_evaluate(o),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.threads {
        cfg.threads = Some(t);
    }
    if let Some(b) = o.budget {
        cfg.budget = b;
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(a) = &o.algorithms {
        cfg.algorithms = parse_algorithms(a)?;
    }
    if cfg.algorithms.is_empty() {
        return Err(MatchError::InvalidConfig("no algorithms configured".into()));
    }
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    config: &'a C,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_sha256: Option<String>,
    outputs: Vec<&'a str>,
}

fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    seed: u64,
    dataset: Option<&Path>,
    outputs: Vec<&str>,
) -> Result<()> {
    let canonical = serde_json::to_vec(config).expect("configs serialize");
    let dataset_sha256 = match dataset {
        Some(p) => Some(sha256_hex(&fs::read(p).map_err(|e| MatchError::io(p, e))?)),
        None => None,
    };
    let m = Manifest {
        tool: "groupmatch",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(&canonical),
        config,
        seed,
        dataset_sha256,
        outputs,
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| MatchError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| MatchError::io(dir, e))
}

/// Success first, then the solution ranking; earlier algorithms win ties.
fn better(a: &MatchResult, b: &MatchResult) -> bool {
    match (a.success, b.success) {
        (true, false) => return true,
        (false, true) => return false,
        _ => {}
    }
    match (&a.rank, &b.rank) {
        (Some(x), Some(y)) => compare_solutions(x, y) == Ordering::Greater,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Runs every configured algorithm and writes `solutions.txt`,
/// `metrics.csv`, `trace.jsonl` and `manifest.json` for the overall best.
pub fn cmd_match(o: &Overrides) -> Result<i32> {
    let mut cfg = RunConfig::load(&o.config)?;
    apply_overrides(&mut cfg, o)?;
    let schema = cfg.dataset.schema()?;
    let d = load_dataset(&cfg.dataset.path, &schema)?;
    let truth = match &cfg.dataset.truth {
        Some(p) => Some(read_truth(&d, p)?),
        None => None,
    };
    let mcfg = cfg.match_config()?;
    let registry = TestRegistry::with_builtins();
    // Surface config problems once, before any search runs.
    Problem::new(&d, &mcfg, &registry)?;

    let mut rows = Vec::new();
    let mut best: Option<MatchResult> = None;
    for alg in &cfg.algorithms {
        let label = alg.label();
        match alg.run(&d, &mcfg, &registry) {
            Ok(res) => {
                let m = evaluate_run(&d, &res, truth.as_deref(), &mcfg);
                print_result(&label, &res, &m);
                rows.push(row(&label, mcfg.seed, &d, m, None));
                if best.as_ref().is_none_or(|b| better(&res, b)) {
                    best = Some(res);
                }
            }
            Err(e) => {
                println!("{label}: failed: {e}");
                rows.push(row(&label, mcfg.seed, &d, empty_metrics(&d), Some(e.to_string())));
            }
        }
    }

    create_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let metrics_path = dir.join("metrics.csv");
    let file = fs::File::create(&metrics_path).map_err(|e| MatchError::io(&metrics_path, e))?;
    write_rows_csv(file, &rows)?;

    let Some(best) = best else {
        return Err(MatchError::InvalidConfig("every algorithm failed".into()));
    };
    write_file(&dir.join("solutions.txt"), best.solutions_text(&d).as_bytes())?;
    let mut trace = Vec::new();
    write_trace(&mut trace, &best.trace).map_err(|e| MatchError::io(dir.join("trace.jsonl"), e))?;
    write_file(&dir.join("trace.jsonl"), &trace)?;
    write_manifest(
        dir,
        "match",
        &cfg,
        cfg.seed,
        Some(&cfg.dataset.path),
        vec!["solutions.txt", "metrics.csv", "trace.jsonl"],
    )?;

    println!(
        "best: {} with {} of {} kept ({} solution{})",
        best.algorithm,
        best.best().kept_count(),
        d.len(),
        best.solutions.len(),
        if best.solutions.len() == 1 { "" } else { "s" }
    );
    for c in &best.criteria {
        println!(
            "  {} {} [{}]: p = {:.4} (alpha {}){}",
            c.test,
            c.covariate,
            c.groups.join(", "),
            c.p,
            c.alpha,
            if c.p < c.alpha { "  FAIL" } else { "" }
        );
    }
    Ok(if best.success { EXIT_OK } else { EXIT_NO_MATCH })
}

fn print_result(label: &str, res: &MatchResult, m: &EvalMetrics) {
    println!(
        "{label}: {} removed {} of {} ({:.1}%), r = {}, {} solution(s), {:.3}s",
        if res.success { "matched," } else { "no match," },
        m.n_excluded,
        m.n_items,
        m.pct_excluded_items,
        res.rank.as_ref().map_or("-".into(), |r| format!("{:.4}", r.r)),
        m.n_solutions,
        m.wall_time
    );
}

fn row(label: &str, seed: u64, d: &Dataset, metrics: EvalMetrics, error: Option<String>) -> RunRow {
    RunRow {
        algorithm: label.to_owned(),
        set: 0,
        replicate: 0,
        seed,
        n_covariates: d.n_covariates(),
        n_shifted: 0,
        metrics,
        error,
    }
}

fn empty_metrics(d: &Dataset) -> EvalMetrics {
    EvalMetrics {
        n_items: d.len(),
        n_excluded: 0,
        pct_excluded_items: 0.0,
        pct_excluded_intruders: None,
        intruder_recall: None,
        balanced_divergence: 0.0,
        post_match_p: None,
        wall_time: 0.0,
        success: false,
        timed_out: false,
        n_solutions: 0,
    }
}

/// Writes `dataset.csv`, `truth.csv` and `manifest.json`.
pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let text = fs::read_to_string(&a.config).map_err(|e| MatchError::io(&a.config, e))?;
    let mut spec: SyntheticSpec = serde_json::from_str(&text)
        .map_err(|e| MatchError::InvalidSpec(format!("{}: {e}", a.config.display())))?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let data = generate_dataset(&spec)?;
    create_dir(&a.output_dir)?;
    let d = &data.dataset;
    let schema = Schema::new("id", "group", d.covariate_names().to_vec());
    let data_path = a.output_dir.join("dataset.csv");
    write_dataset(d, &data_path, &schema)?;
    write_truth(d, &data.intruders, a.output_dir.join("truth.csv"))?;
    write_manifest(
        &a.output_dir,
        "simulate",
        &spec,
        spec.seed,
        Some(&data_path),
        vec!["dataset.csv", "truth.csv"],
    )?;
    println!(
        "wrote {} items ({} intruders) after {} attempt(s); basic p = {:.3}, all p = {:.3}",
        d.len(),
        data.intruders.iter().filter(|&&f| f).count(),
        data.truth.attempts,
        data.truth.basic_p,
        data.truth.all_p
    );
    Ok(EXIT_OK)
}

/// Prints the configuration count, projected time and verdict.
pub fn cmd_estimate(o: &Overrides, bound: Option<usize>, rate: Option<f64>) -> Result<i32> {
    let mut cfg = RunConfig::load(&o.config)?;
    apply_overrides(&mut cfg, o)?;
    let d = load_dataset(&cfg.dataset.path, &cfg.dataset.schema()?)?;
    let mcfg = cfg.match_config()?;
    let registry = TestRegistry::with_builtins();
    let bound = match bound {
        Some(b) => b,
        None => {
            let alg = &cfg.algorithms[0];
            let res = alg.run(&d, &mcfg, &registry)?;
            println!("{} removed {} subject(s)", alg.label(), res.removed_count());
            res.removed_count()
        }
    };
    let rate = match rate {
        Some(r) => r,
        None => calibrate_rate(&d, &mcfg, &registry, Duration::from_millis(200))?,
    };
    let est = estimate_exhaustive(&d, &mcfg, bound, rate)?;
    println!("{est}");
    println!("rate: {rate:.1} configurations/s, budget: {} evaluations", mcfg.budget);
    Ok(EXIT_OK)
}

/// Writes `runs.csv`, `summary.txt` and `manifest.json` for a grid.
pub fn cmd_evaluate(o: &Overrides) -> Result<i32> {
    let mut cfg = GridConfig::load(&o.config)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.threads {
        cfg.threads = Some(t);
    }
    if let Some(b) = o.budget {
        cfg.budget = b;
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(a) = &o.algorithms {
        cfg.algorithms = parse_algorithms(a)?;
    }
    let specs = cfg.specs()?;
    let opts = GridOptions {
        alpha: cfg.alpha,
        threads: cfg.threads,
        timeout: cfg.timeout()?,
        budget: cfg.budget,
    };
    let report = run_experiment_grid(&specs, &cfg.algorithms, cfg.replications, cfg.seed, &opts)?;
    create_dir(&cfg.output_dir)?;
    let runs = cfg.output_dir.join("runs.csv");
    let file = fs::File::create(&runs).map_err(|e| MatchError::io(&runs, e))?;
    report.write_csv(file)?;
    let how = if cfg.mean { Aggregate::Mean } else { Aggregate::Median };
    let table = report.text_table(how);
    write_file(&cfg.output_dir.join("summary.txt"), table.as_bytes())?;
    write_manifest(
        &cfg.output_dir,
        "evaluate",
        &cfg,
        cfg.seed,
        None,
        vec!["runs.csv", "summary.txt"],
    )?;
    print!("{table}");
    Ok(EXIT_OK)
}

/// Algorithms in the default comparison order of the evaluation tables.
pub fn standard_algorithms() -> Vec<Algorithm> {
    parse_algorithms("random:1,random:10,random:100,random:1000,greedy,h3:1,h4:1")
        .expect("static list parses")
}
