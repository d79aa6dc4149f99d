//! Commands behind the `fifth` binary: solve, train, measure and check.
//!
//! Every command takes a [`RunConfig`] and returns an exit code; JSON goes to
//! `--out` or the given stdout writer, diagnostics to the stderr writer.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage, I/O or parse error |
//! | 2 | search finished without a solution |
//! | 3 | a budget ran out first (or the optimum is unproven) |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::autoenc::{gradient_check, Autoencoder, Hyper};
use crate::hierarchy::{load_bundle, save_bundle, AugmentationTree, BundleError, HierarchyConfig, TraceRecorder, TrainingReport};
use crate::language::{parse, ParseError, Program};
use crate::lattice::{laws, merge};
use crate::network::sample::check_confluence;
use crate::network::TraceSink;
use crate::rng::SeededRng;
use crate::search::{
    optimize_observed, solve_observed, BranchOracle, NoObserver, Query, SearchError, SearchObserver, SearchStats,
    UniformOracle,
};

pub const CORPUS_ENV: &str = "FIFTH_CORPUS";
pub const DEFAULT_CORPUS: &str = "corpus";
pub const PROGRAM_EXTENSION: &str = "5th";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNSAT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Search { path: PathBuf, source: SearchError },
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("training failed: {0}")]
    Training(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    #[default]
    Uniform,
    Learned,
}

impl std::str::FromStr for OracleChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(OracleChoice::Uniform),
            "learned" => Ok(OracleChoice::Learned),
            other => Err(format!("unknown oracle `{other}` (expected uniform or learned)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Train,
    Measure,
    Check { self_test: bool },
}

/// Everything a command needs. Budgets left as `None` fall back to the
/// program's query clauses and then to the search defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub depth: Option<u64>,
    pub steps: Option<u64>,
    pub nodes: Option<u64>,
    pub precision: Option<f64>,
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub trace: bool,
    pub out: Option<PathBuf>,
    pub oracle: OracleChoice,
    pub collect_garbage: bool,
    /// Root for default corpus directories.
    pub corpus: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            inputs: Vec::new(),
            depth: None,
            steps: None,
            nodes: None,
            precision: None,
            seed: 0,
            model: None,
            trace: false,
            out: None,
            oracle: OracleChoice::Uniform,
            collect_garbage: false,
            corpus: corpus_root(),
        }
    }

    /// Checks arity and flag combinations before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        match self.command {
            Command::Solve if self.inputs.len() != 1 => usage("solve takes exactly one program file"),
            Command::Train if self.inputs.len() > 1 => usage("train takes at most one corpus directory"),
            Command::Train if self.model.is_none() => usage("train needs --model DIR"),
            Command::Measure if !matches!(self.inputs.len(), 0 | 2) => usage("measure takes a train and an eval directory, or neither"),
            Command::Measure if self.oracle == OracleChoice::Learned && self.model.is_none() => {
                usage("measure with the learned oracle needs --model DIR")
            }
            Command::Check { self_test: false } => usage("check needs --self-test"),
            Command::Check { .. } if !self.inputs.is_empty() => usage("check takes no inputs"),
            _ if self.precision.is_some_and(|p| !(p >= 0.0) || !p.is_finite()) => usage("--precision must be a finite number ≥ 0"),
            Command::Solve if self.oracle == OracleChoice::Learned && self.model.is_none() => usage("--oracle learned needs --model DIR"),
            _ => Ok(()),
        }
    }
}

/// `$FIFTH_CORPUS`, or `corpus` in the working directory.
pub fn corpus_root() -> PathBuf {
    std::env::var_os(CORPUS_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_CORPUS))
}

/// Output streams of one command.
pub struct Streams<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Runs a command to completion and returns its exit code.
pub fn run(config: &RunConfig, io: &mut Streams) -> i32 {
    let result = config.validate().and_then(|()| match config.command {
        Command::Solve => cmd_solve(config, io),
        Command::Train => cmd_train(config, io).map(|_| EXIT_OK),
        Command::Measure => cmd_measure(config, io).map(|_| EXIT_OK),
        Command::Check { .. } => Ok(cmd_check(config, io, merge)),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn emit(config: &RunConfig, io: &mut Streams, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(io_err(path)),
        None => writeln!(io.stdout, "{text}").map_err(io_err(Path::new("<stdout>"))),
    }
}

/// Reads and parses one program file.
pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

/// The program's own query with command-line budgets applied on top.
pub fn query_for(config: &RunConfig, path: &Path, program: &Program) -> Result<Query, CliError> {
    let mut q = Query::from_program(program).map_err(|source| CliError::Search { path: path.to_path_buf(), source })?;
    if let Some(d) = config.depth {
        q.depth_budget = d;
    }
    if let Some(s) = config.steps {
        q.step_budget = s;
    }
    if let Some(n) = config.nodes {
        q.node_budget = n;
    }
    if let Some(p) = config.precision {
        q.precision = p;
    }
    q.collect_garbage = config.collect_garbage;
    Ok(q)
}

/// Program files directly inside `dir`, sorted by name.
pub fn list_programs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == PROGRAM_EXTENSION))
        .collect();
    files.sort();
    Ok(files)
}

/// Result of running one program file: the JSON document and exit code.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub json: Value,
    pub stats: SearchStats,
    pub code: i32,
}

/// Solves, or minimizes when the query has an objective.
pub fn run_program(
    path: &Path,
    program: Program,
    query: &Query,
    oracle: &dyn BranchOracle,
    observer: &mut dyn SearchObserver,
) -> Result<RunOutcome, CliError> {
    let program = Arc::new(program);
    let search_err = |source| CliError::Search { path: path.to_path_buf(), source };
    if query.objective.is_some() {
        let r = optimize_observed(program, query, oracle, observer).map_err(search_err)?;
        let code = match (&r.solution, r.proven_optimal, r.stats.complete) {
            (Some(_), true, _) => EXIT_OK,
            (None, _, true) => EXIT_UNSAT,
            _ => EXIT_BUDGET,
        };
        let json = serde_json::from_str(&r.to_json()).expect("valid json");
        Ok(RunOutcome { json, stats: r.stats, code })
    } else {
        let r = solve_observed(program, query, oracle, observer).map_err(search_err)?;
        let code = match (r.solutions.is_empty(), r.stats.complete) {
            (_, false) => EXIT_BUDGET,
            (true, true) => EXIT_UNSAT,
            (false, true) => EXIT_OK,
        };
        let json = serde_json::from_str(&r.to_json()).expect("valid json");
        Ok(RunOutcome { json, stats: r.stats, code })
    }
}

fn trace_path(config: &RunConfig) -> Option<PathBuf> {
    let out = config.out.as_ref()?;
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".trace.jsonl");
    Some(out.with_file_name(name))
}

fn open_model(config: &RunConfig) -> Result<Option<AugmentationTree>, CliError> {
    match (config.oracle, &config.model) {
        (OracleChoice::Learned, Some(dir)) => Ok(Some(load_bundle(dir)?)),
        _ => Ok(None),
    }
}

/// `fifth solve FILE`: prints the solution JSON.
pub fn cmd_solve(config: &RunConfig, io: &mut Streams) -> Result<i32, CliError> {
    let path = &config.inputs[0];
    let program = load_program(path)?;
    let mut query = query_for(config, path, &program)?;
    let sink = config.trace.then(TraceSink::default);
    query.trace = sink.clone();
    let model = open_model(config)?;
    let oracle: &dyn BranchOracle = match &model {
        Some(tree) => tree,
        None => &UniformOracle,
    };
    let outcome = run_program(path, program, &query, oracle, &mut NoObserver)?;
    emit(config, io, &serde_json::to_string(&outcome.json).expect("serializes"))?;
    if let Some(sink) = sink {
        let events = sink.lock().expect("trace sink").clone();
        let mut lines = String::new();
        for e in &events {
            lines.push_str(&serde_json::to_string(e).expect("serializes"));
            lines.push('\n');
        }
        match trace_path(config) {
            Some(p) => fs::write(&p, lines).map_err(io_err(&p))?,
            None => io.stderr.write_all(lines.as_bytes()).map_err(io_err(Path::new("<stderr>")))?,
        }
    }
    Ok(outcome.code)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub instances: Vec<String>,
    pub nodes: u64,
    pub states: usize,
    pub links: usize,
    pub outcomes: usize,
    pub training: TrainingReport,
    pub elapsed_ms: u64,
}

fn default_dir(config: &RunConfig, split: &str) -> PathBuf {
    config.corpus.join("csp").join(split)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Solves every program in `dir` with tracing and trains a fresh hierarchy on the traces.
pub fn train_on(config: &RunConfig, dir: &Path) -> Result<(AugmentationTree, TrainSummary), CliError> {
    let started = Instant::now();
    let files = list_programs(dir)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("{}: no instances", dir.display())));
    }
    let mut traces = Vec::new();
    let mut nodes = 0;
    for path in &files {
        let program = load_program(path)?;
        let query = query_for(config, path, &program)?;
        let mut recorder = TraceRecorder::new();
        let outcome = run_program(path, program, &query, &UniformOracle, &mut recorder)?;
        nodes += outcome.stats.nodes;
        traces.push(recorder.finish());
    }
    let mut tree = AugmentationTree::new(HierarchyConfig { seed: config.seed, ..HierarchyConfig::default() });
    let training = tree.train_from_traces(&traces, config.seed).map_err(|e| CliError::Training(e.to_string()))?;
    let summary = TrainSummary {
        seed: config.seed,
        instances: files.iter().map(|p| file_name(p)).collect(),
        nodes,
        states: traces.iter().map(|t| t.states.len()).sum(),
        links: traces.iter().map(|t| t.links.len()).sum(),
        outcomes: traces.iter().map(|t| t.outcomes.len()).sum(),
        training,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    Ok((tree, summary))
}

/// `fifth train [DIR] --model OUT`: writes the model bundle and prints the report.
pub fn cmd_train(config: &RunConfig, io: &mut Streams) -> Result<TrainSummary, CliError> {
    let dir = config.inputs.first().cloned().unwrap_or_else(|| default_dir(config, "train"));
    let model = config.model.as_ref().expect("validated");
    let (tree, summary) = train_on(config, &dir)?;
    fs::create_dir_all(model).map_err(io_err(model))?;
    save_bundle(&tree, model)?;
    emit(config, io, &serde_json::to_string(&summary).expect("serializes"))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceComparison {
    pub name: String,
    pub nodes_uniform: u64,
    pub nodes_learned: u64,
    pub first_solution_uniform: Option<u64>,
    pub first_solution_learned: Option<u64>,
    pub solutions_equal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    pub seed: u64,
    pub oracle: OracleChoice,
    pub instances: Vec<InstanceComparison>,
    pub median_nodes_uniform: f64,
    pub median_nodes_learned: f64,
    /// Over instances with a solution.
    pub median_first_solution_uniform: f64,
    pub median_first_solution_learned: f64,
    pub all_solutions_equal: bool,
    pub elapsed_ms: u64,
}

pub fn median(values: &[u64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// What two runs must agree on: the solution list as a set, or the optimum's
/// objective value and proof status.
fn answer_key(json: &Value) -> Value {
    let mut keys: Vec<String> = json["solutions"]
        .as_array()
        .map(|s| s.iter().map(|sol| sol["cells"].to_string()).collect())
        .unwrap_or_default();
    keys.sort();
    match json.get("optimal") {
        Some(optimal) => {
            let value = json["bound_trace"].as_array().and_then(|b| b.last()).map(|e| e["objective"].clone());
            json!({ "optimal": optimal, "objective": value })
        }
        None => json!(keys),
    }
}

/// `fifth measure [TRAIN EVAL]`: uniform against learned ordering on every eval instance.
pub fn cmd_measure(config: &RunConfig, io: &mut Streams) -> Result<MeasureReport, CliError> {
    let started = Instant::now();
    let (train_dir, eval_dir) = match config.inputs.as_slice() {
        [t, e] => (t.clone(), e.clone()),
        _ => (default_dir(config, "train"), default_dir(config, "eval")),
    };
    let model: Option<AugmentationTree> = match (config.oracle, &config.model) {
        (OracleChoice::Uniform, _) => None,
        (OracleChoice::Learned, Some(dir)) if dir.join(crate::hierarchy::MANIFEST_FILE).is_file() => Some(load_bundle(dir)?),
        (OracleChoice::Learned, Some(dir)) => {
            let (tree, _) = train_on(config, &train_dir)?;
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            save_bundle(&tree, dir)?;
            Some(tree)
        }
        (OracleChoice::Learned, None) => unreachable!("validated"),
    };
    let second: &dyn BranchOracle = match &model {
        Some(tree) => tree,
        None => &UniformOracle,
    };
    let files = list_programs(&eval_dir)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("{}: no instances", eval_dir.display())));
    }
    let mut instances = Vec::new();
    for path in &files {
        let program = load_program(path)?;
        let query = query_for(config, path, &program)?;
        let a = run_program(path, program.clone(), &query, &UniformOracle, &mut NoObserver)?;
        let b = run_program(path, program, &query, second, &mut NoObserver)?;
        instances.push(InstanceComparison {
            name: file_name(path),
            nodes_uniform: a.stats.nodes,
            nodes_learned: b.stats.nodes,
            first_solution_uniform: a.stats.first_solution,
            first_solution_learned: b.stats.first_solution,
            solutions_equal: a.code == b.code && answer_key(&a.json) == answer_key(&b.json),
        });
    }
    let uniform: Vec<u64> = instances.iter().map(|i| i.nodes_uniform).collect();
    let learned: Vec<u64> = instances.iter().map(|i| i.nodes_learned).collect();
    let report = MeasureReport {
        seed: config.seed,
        oracle: config.oracle,
        all_solutions_equal: instances.iter().all(|i| i.solutions_equal),
        median_nodes_uniform: median(&uniform),
        median_nodes_learned: median(&learned),
        median_first_solution_uniform: median(&instances.iter().filter_map(|i| i.first_solution_uniform).collect::<Vec<_>>()),
        median_first_solution_learned: median(&instances.iter().filter_map(|i| i.first_solution_learned).collect::<Vec<_>>()),
        instances,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    emit(config, io, &serde_json::to_string(&report).expect("serializes"))?;
    Ok(report)
}

pub const SELF_TEST_TRIPLES: usize = 10_000;
pub const SELF_TEST_NETWORKS: usize = 50;
pub const SELF_TEST_ORDERS: usize = 5;
pub const SELF_TEST_GRADIENT_CONFIGS: usize = 5;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

/// Worst relative gradient error over `configs` random small autoencoders.
pub fn gradient_sweep(configs: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let f = 2 + rng.below(6);
        let h = 2 + rng.below(6);
        let k = 1 + rng.below(4);
        let hyper = Hyper { sparsity: 0.05 * rng.unit_f64(), decay: 1e-3 * rng.unit_f64(), ..Hyper::default() };
        let ae = Autoencoder::new(f, h, k, hyper, &mut rng);
        let x: Vec<f64> = (0..f).map(|_| 2.0 * rng.unit_f64() - 1.0).collect();
        worst = worst.max(gradient_check(&ae, &x).unwrap_or(f64::INFINITY));
    }
    worst
}

/// `fifth check --self-test`, with the merge under test injectable.
pub fn cmd_check(config: &RunConfig, io: &mut Streams, merge_fn: laws::MergeFn) -> i32 {
    let mut ok = true;
    let mut line = |name: &str, passed: bool, detail: String| {
        ok &= passed;
        let _ = writeln!(io.stdout, "{:<14} {}  {detail}", name, if passed { "pass" } else { "FAIL" });
    };
    let laws = laws::check(merge_fn, SELF_TEST_TRIPLES, config.seed);
    let first = laws.failures.first().cloned().unwrap_or_default();
    line("lattice laws", laws.passed(), format!("{} triples, {} failures {first}", laws.triples, laws.failures.len()));
    let conf = check_confluence(SELF_TEST_NETWORKS, SELF_TEST_ORDERS, config.seed);
    line(
        "confluence",
        conf.passed(),
        format!("{} networks x {} orders, {} failures", conf.networks, conf.orders, conf.failures.len()),
    );
    let worst = gradient_sweep(SELF_TEST_GRADIENT_CONFIGS, config.seed);
    line("gradient check", worst < GRADIENT_TOLERANCE, format!("worst relative error {worst:.2e}"));
    if ok {
        EXIT_OK
    } else {
        EXIT_USAGE
    }
}
