//! The ten acceptance criteria, each at its stated tolerance and time limit.
//!
//! Runs as a plain binary so every criterion prints its own line whether it
//! passes or not; exits non-zero if any fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;

use common::*;
use fifth::autoenc::{effective_dim, PlaneRecipe};
use fifth::cli::{self, gradient_sweep, OracleChoice, RunConfig, Streams};
use fifth::hierarchy::AugmentationTree;
use fifth::language::{demand_loop, instantiate, parse, Program, COUNTDOWN};
use fifth::lattice::{laws, merge, PartialInfo};
use fifth::network::sample::check_confluence;
use fifth::planning::{js_3x3_a, HorizonProblem};
use fifth::search::{optimize, solve, Query, SolutionSet, UniformOracle};

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, started: Instant) -> Result<String, String> {
    let t = started.elapsed();
    ensure(t < limit, format!("took {:.2?}, limit {limit:?}", t))?;
    Ok(format!("{:.2?}", t))
}

fn load(text: &str) -> (Arc<Program>, Query) {
    let p = Arc::new(parse(text).expect("parses"));
    let q = Query::from_program(&p).expect("has a query");
    (p, q)
}

fn solve_text(text: &str, gc: bool) -> SolutionSet {
    let (p, mut q) = load(text);
    q.collect_garbage = gc;
    solve(p, &q, &UniformOracle).expect("solves")
}

fn rows(set: &SolutionSet, names: &[String]) -> Vec<Vec<i64>> {
    let mut r: Vec<Vec<i64>> = set.solutions.iter().map(|s| names.iter().map(|n| s.int(n).expect("integer")).collect()).collect();
    r.sort();
    r
}

fn c1_lattice_laws() -> Verdict {
    let t = Instant::now();
    let r = laws::check(merge, 10_000, 2024);
    ensure(r.triples == 10_000 && r.passed(), format!("{} failures, first: {:?}", r.failures.len(), r.failures.first()))?;
    Ok(format!("10000 triples exact, {}", within(Duration::from_secs(5), t)?))
}

fn c2_confluence() -> Verdict {
    let t = Instant::now();
    let r = check_confluence(200, 20, 2024);
    ensure(r.passed(), format!("{:?}", r.failures))?;
    Ok(format!("200 networks x 20 orders, {} contradictory, {}", r.contradictory, within(Duration::from_secs(60), t)?))
}

fn c3_oracle_equivalence() -> Verdict {
    let t = Instant::now();
    let mut counts = Vec::new();
    for n in QUEENS_SIZES {
        let names: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        let got = rows(&solve_text(&fifth::planning::queens_program(n), false), &names);
        let want = queens(n);
        ensure(got == want, format!("{n}-queens: {} solutions, oracle {}", got.len(), want.len()))?;
        counts.push(got.len());
    }
    ensure(counts == [2, 10, 4, 92], format!("queens counts {counts:?}"))?;
    let names: Vec<String> = CRYPT_LETTERS.iter().map(|s| s.to_string()).collect();
    let set = solve_text(&fifth::planning::send_more_money_program(), false);
    let oracle: Vec<Vec<i64>> = send_more_money().iter().map(|r| r.to_vec()).collect();
    ensure(rows(&set, &names) == oracle && oracle.len() == 1, "SEND+MORE=MONEY differs from digit enumeration")?;
    ensure(set.solutions[0].int("send") == Some(9567), "SEND is not 9567")?;
    for i in 0..CSP_TRAIN + CSP_EVAL {
        let inst = csp_instance(i);
        let got = rows(&solve_text(&inst.text(), false), &inst.var_names());
        ensure(got == csp_solutions(&inst), format!("random csp {i} differs from enumeration"))?;
    }
    Ok(format!("queens {counts:?}, SEND=9567 unique, 50 csps, {}", within(Duration::from_secs(300), t)?))
}

fn c4_unbounded_recursion() -> Verdict {
    for (n, want) in [(0, 1), (6, 720), (10, 3_628_800)] {
        let (p, q) = load(&fact_program(n));
        let s = solve(p, &q, &UniformOracle).map_err(|e| e.to_string())?;
        let r = s.solutions.first().and_then(|s| s.cells.get("r").cloned());
        ensure(
            s.solutions.len() == 1 && r.and_then(|r| r.to_info()) == Some(PartialInfo::int(want)),
            format!("fact({n}) gave {:?}", s.solutions),
        )?;
        ensure(s.stats.expansions == n as u64, format!("fact({n}) used {} expansions", s.stats.expansions))?;
    }
    let (p, mut q) = load(&fact_program(10));
    q.depth_budget = 3;
    let s = solve(p, &q, &UniformOracle).map_err(|e| e.to_string())?;
    ensure(!s.stats.complete && s.solutions.is_empty(), "depth budget 3 did not stop fact(10)")?;
    Ok("fact(0,6,10) = 1, 720, 3628800 with n expansions; depth 3 incomplete".into())
}

fn c5_logarithmic_hops() -> Verdict {
    let t = Instant::now();
    let program = Arc::new(parse(COUNTDOWN).unwrap());
    let mut seen = Vec::new();
    for (d, bound) in [(64usize, 7usize), (256, 9), (1024, 11)] {
        let mut inst = instantiate(program.clone(), "count", &[("k".into(), PartialInfo::int(d as i64 - 1))]).unwrap();
        let r = inst.root_cell("r").unwrap();
        demand_loop(&mut inst, &[r], 0.0, 10_000, 10_000_000);
        let leaf = inst.frames.iter().filter(|f| f.depth == d - 1).map(|f| f.id).next().ok_or("no frame at depth d - 1")?;
        let mut tree = AugmentationTree::default();
        let path = AugmentationTree::path(&inst, leaf);
        ensure(path.len() == d, format!("path length {} for d = {d}", path.len()))?;
        let (_, hops) = tree.compose_path(&inst, leaf);
        ensure(hops <= bound, format!("d = {d}: {hops} hops > {bound}"))?;
        seen.push(hops);
    }
    Ok(format!("hops {seen:?} <= [7, 9, 11], {}", within(Duration::from_secs(10), t)?))
}

fn c6_autoencoder() -> Verdict {
    let worst = gradient_sweep(20, 2024);
    ensure(worst < 1e-4, format!("gradient check worst {worst:e}"))?;
    let recipe = PlaneRecipe::default();
    let data = recipe.data();
    let mut dims = Vec::new();
    for lambda in [0.0, 0.01, 0.1] {
        let (ae, _) = recipe.run(lambda).map_err(|e| e.to_string())?;
        dims.push(effective_dim(&ae, &data).map_err(|e| e.to_string())?);
    }
    let (ae, report) = recipe.run(recipe_sparsity()).map_err(|e| e.to_string())?;
    let dim = effective_dim(&ae, &data).map_err(|e| e.to_string())?;
    ensure(matches!(dim, 2 | 3), format!("effective_dim {dim} on the plane"))?;
    ensure(dims.windows(2).all(|w| w[1] <= w[0]), format!("dims {dims:?} increase with sparsity"))?;
    Ok(format!(
        "gradient {worst:.1e}, plane dim {dim} (loss {:.4} -> {:.4}), dims by sparsity {dims:?}",
        report.initial.total,
        report.final_loss().total
    ))
}

fn recipe_sparsity() -> f64 {
    fifth::autoenc::Hyper::default().sparsity
}

fn run_cli(config: &RunConfig) -> Result<(i32, Value), String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(config, &mut Streams { stdout: &mut out, stderr: &mut err });
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err)));
    }
    serde_json::from_slice(&out).map(|v| (code, v)).map_err(|e| e.to_string())
}

fn c7_guidance_soundness() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = RunConfig::new(cli::Command::Measure);
    config.corpus = corpus_dir();
    config.oracle = OracleChoice::Learned;
    config.model = Some(dir.path().join("model"));
    config.seed = 7;
    let (_, report) = run_cli(&config)?;
    let instances = report["instances"].as_array().ok_or("no instances")?;
    ensure(instances.len() == CSP_EVAL, format!("{} eval instances", instances.len()))?;
    let bad: Vec<&Value> = instances.iter().filter(|i| i["solutions_equal"] != true).map(|i| &i["name"]).collect();
    ensure(bad.is_empty(), format!("solutions differ on {bad:?}"))?;
    Ok(format!(
        "20/20 equal; median nodes uniform {} learned {}, median first solution uniform {} learned {} (reported only)",
        report["median_nodes_uniform"],
        report["median_nodes_learned"],
        report["median_first_solution_uniform"],
        report["median_first_solution_learned"]
    ))
}

fn corpus_answer(e: &CorpusEntry, gc: bool) -> Value {
    let (p, mut q) = load(&e.program);
    q.collect_garbage = gc;
    let json = if q.objective.is_some() {
        optimize(p, &q, &UniformOracle).unwrap().to_json()
    } else {
        solve(p, &q, &UniformOracle).unwrap().to_json()
    };
    answers(&serde_json::from_str(&json).unwrap(), &e.expected)
}

fn c8_gc_preservation() -> Verdict {
    let entries = corpus();
    for e in &entries {
        let with = corpus_answer(e, true);
        let without = corpus_answer(e, false);
        ensure(with == without, format!("{}: answers change with collection", e.stem))?;
        ensure(with == expected_answers(&e.expected), format!("{}: answers differ from the oracle", e.stem))?;
    }
    let (p, mut q) = load(&fact_program(10));
    q.collect_garbage = true;
    let s = solve(p, &q, &UniformOracle).map_err(|e| e.to_string())?;
    ensure(s.stats.summarized_frames > 0, "nothing summarized on fact(10)")?;
    Ok(format!("{} corpus programs identical; fact(10) summarized {} frames", entries.len(), s.stats.summarized_frames))
}

fn c9_scheduling() -> Verdict {
    let js = js_3x3_a();
    let oracle = jobshop_makespan(&js);
    let (p, q) = load(&fifth::planning::emit_jobshop_program(&js).unwrap());
    let r = optimize(p, &q, &UniformOracle).map_err(|e| e.to_string())?;
    let sol = r.solution.ok_or("no schedule")?;
    let mk = sol.int("mk").ok_or("mk not exact")?;
    ensure(r.proven_optimal && mk == oracle, format!("makespan {mk}, oracle {oracle}"))?;
    let starts = sol.cells.iter().filter_map(|(k, v)| Some((k.clone(), v.as_i64()?))).collect();
    ensure(jobshop_feasible(&js, &starts, mk), "schedule violates a constraint")?;
    let line = HorizonProblem::line_world(4);
    let best = horizon_best(&line);
    let (p, q) = load(&fifth::planning::emit_horizon_program(&line).unwrap());
    let r = optimize(p, &q, &UniformOracle).map_err(|e| e.to_string())?;
    let total = r.solution.and_then(|s| s.int("total"));
    ensure(r.proven_optimal && total == Some(best) && best == 6, format!("line world total {total:?}, oracle {best}"))?;
    Ok(format!("js-3x3-a makespan {mk} = enumeration; line world H=4 reward {best}"))
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn fifth_twice(args: &[&str], dir: &Path) -> Result<(), String> {
    let mut outs = Vec::new();
    for _ in 0..2 {
        let o = Command::new(fifth_bin()).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
        let mut v: Value = serde_json::from_slice(&o.stdout).map_err(|e| format!("{args:?}: {e}"))?;
        strip_timing(&mut v);
        outs.push(serde_json::to_vec(&v).unwrap());
    }
    ensure(outs[0] == outs[1], format!("{args:?} differs between runs"))
}

fn bundle(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let corpus = corpus_dir();
    let c = |rel: &str| corpus.join(rel).display().to_string();
    for rel in ["queens/q6.5th", "crypt/send-more-money.5th", "horizon/line-4.5th", "jobshop/js-3x3-a.5th", "fact/fact-10.5th"] {
        fifth_twice(&["solve", &c(rel), "--seed", "5"], d)?;
    }
    let (a, b) = (d.join("a"), d.join("b"));
    for m in [&a, &b] {
        fifth_twice(&["train", &c("csp/train"), "--model", m.to_str().unwrap(), "--seed", "5"], d)?;
    }
    ensure(bundle(&a) == bundle(&b), "model bundles differ")?;
    fifth_twice(&["measure", &c("csp/train"), &c("csp/eval"), "--oracle", "learned", "--model", a.to_str().unwrap(), "--seed", "5"], d)?;
    Ok(format!("solve/train/measure repeat byte-identically; {} bundle files bit-identical", bundle(&a).len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("lattice laws", c1_lattice_laws),
        ("confluence", c2_confluence),
        ("oracle equivalence", c3_oracle_equivalence),
        ("unbounded recursion", c4_unbounded_recursion),
        ("logarithmic communication", c5_logarithmic_hops),
        ("autoencoder correctness", c6_autoencoder),
        ("guidance soundness", c7_guidance_soundness),
        ("gc preservation", c8_gc_preservation),
        ("scheduling", c9_scheduling),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match verdict {
            Ok(detail) => println!("criterion {:>2} {name:<26} PASS  {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name:<26} FAIL  {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
