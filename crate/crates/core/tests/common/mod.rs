//! Brute-force oracles and the corpus they certify.
//!
//! Nothing here calls the solver: every expected answer is computed by
//! plain enumeration.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use fifth::language::FACTORIAL;
use fifth::planning::{
    emit_horizon_program, emit_jobshop_program, generate_random_csp, js_3x3_a, queens_program, send_more_money_program,
    CspInstance, HorizonProblem, JobShopInstance,
};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("repo root")
}

pub fn corpus_dir() -> PathBuf {
    repo_root().join("corpus")
}

pub fn fifth_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_fifth"))
}

// ---------------------------------------------------------------- oracles

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n - 1);
            out.push(q);
        }
    }
    out
}

/// Column of the queen in each row (1-based), over all `n!` placements.
pub fn queens(n: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = permutations(n)
        .into_iter()
        .filter(|p| {
            (0..n).all(|i| (i + 1..n).all(|j| (p[i] as i64 - p[j] as i64).abs() != (j - i) as i64))
        })
        .map(|p| p.into_iter().map(|c| c as i64 + 1).collect())
        .collect();
    out.sort();
    out
}

pub const CRYPT_LETTERS: [&str; 8] = ["s", "e", "n", "d", "m", "o", "r", "y"];

/// Digits for `s e n d m o r y`, every injective assignment tried.
pub fn send_more_money() -> Vec<[i64; 8]> {
    fn go(i: usize, used: &mut [bool; 10], cur: &mut [i64; 8], out: &mut Vec<[i64; 8]>) {
        if i == 8 {
            let [s, e, n, d, m, o, r, y] = *cur;
            let send = 1000 * s + 100 * e + 10 * n + d;
            let more = 1000 * m + 100 * o + 10 * r + e;
            let money = 10000 * m + 1000 * o + 100 * n + 10 * e + y;
            if s != 0 && m != 0 && send + more == money {
                out.push(*cur);
            }
            return;
        }
        for v in 0..10 {
            if !used[v] {
                used[v] = true;
                cur[i] = v as i64;
                go(i + 1, used, cur, out);
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, &mut [false; 10], &mut [0; 8], &mut out);
    out
}

/// Every satisfying assignment of `x1..xn`, in lexicographic order.
pub fn csp_solutions(inst: &CspInstance) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut x = vec![1i64; inst.vars];
    loop {
        if inst.constraints.iter().all(|c| c.relation.holds(x[c.a], x[c.b])) {
            out.push(x.clone());
        }
        let mut i = inst.vars;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if x[i] < inst.domain {
                x[i] += 1;
                break;
            }
            x[i] = 1;
        }
    }
}

/// Earliest-start schedule for fixed machine orders, or `None` if the orders
/// contradict job precedence.
fn schedule(inst: &JobShopInstance, orders: &[Vec<(usize, usize)>]) -> Option<i64> {
    let mut start: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let total: usize = inst.jobs.iter().map(Vec::len).sum();
    let mut next_in_job = vec![0usize; inst.jobs.len()];
    let mut next_on_machine = vec![0usize; inst.machines];
    let mut job_ready = vec![0i64; inst.jobs.len()];
    let mut machine_ready = vec![0i64; inst.machines];
    while start.len() < total {
        let mut progressed = false;
        for m in 0..inst.machines {
            let Some(&(j, k)) = orders[m].get(next_on_machine[m]) else { continue };
            if next_in_job[j] != k {
                continue;
            }
            let s = job_ready[j].max(machine_ready[m]);
            let d = inst.jobs[j][k].duration;
            start.insert((j, k), s);
            job_ready[j] = s + d;
            machine_ready[m] = s + d;
            next_in_job[j] += 1;
            next_on_machine[m] += 1;
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    Some(job_ready.into_iter().max().unwrap_or(0))
}

/// Optimal makespan over every combination of per-machine operation orders.
pub fn jobshop_makespan(inst: &JobShopInstance) -> i64 {
    let mut per_machine: Vec<Vec<(usize, usize)>> = vec![Vec::new(); inst.machines];
    for (j, ops) in inst.jobs.iter().enumerate() {
        for (k, op) in ops.iter().enumerate() {
            per_machine[op.machine].push((j, k));
        }
    }
    let choices: Vec<Vec<Vec<(usize, usize)>>> = per_machine
        .iter()
        .map(|ops| permutations(ops.len()).into_iter().map(|p| p.into_iter().map(|i| ops[i]).collect()).collect())
        .collect();
    let mut best = i64::MAX;
    let mut idx = vec![0usize; inst.machines];
    loop {
        let orders: Vec<Vec<(usize, usize)>> = idx.iter().enumerate().map(|(m, &i)| choices[m][i].clone()).collect();
        if let Some(mk) = schedule(inst, &orders) {
            best = best.min(mk);
        }
        let mut m = 0;
        loop {
            if m == inst.machines {
                return best;
            }
            idx[m] += 1;
            if idx[m] < choices[m].len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

/// Start times respect job order, machine exclusivity and `mk`.
pub fn jobshop_feasible(inst: &JobShopInstance, start: &BTreeMap<String, i64>, mk: i64) -> bool {
    let s = |j: usize, k: usize| start.get(&format!("s_{j}_{k}")).copied();
    let mut spans = Vec::new();
    for (j, ops) in inst.jobs.iter().enumerate() {
        let mut ready = 0;
        for (k, op) in ops.iter().enumerate() {
            let Some(t) = s(j, k) else { return false };
            if t < ready {
                return false;
            }
            ready = t + op.duration;
            spans.push((op.machine, t, t + op.duration));
        }
        if ready > mk {
            return false;
        }
    }
    spans.iter().enumerate().all(|(i, a)| spans[i + 1..].iter().all(|b| a.0 != b.0 || a.2 <= b.1 || b.2 <= a.1))
}

/// Best total reward over all `|actions|^H` action sequences.
pub fn horizon_best(p: &HorizonProblem) -> i64 {
    let mut best = i64::MIN;
    let n = p.actions.len();
    let count = n.pow(p.horizon as u32);
    for mut code in 0..count {
        let (mut s, mut total) = (p.start, 0);
        for _ in 0..p.horizon {
            s += p.actions[code % n];
            code /= n;
            total += p.step_reward + if s == p.goal { p.goal_reward } else { 0 };
        }
        best = best.max(total);
    }
    best
}

pub fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

// ----------------------------------------------------------------- corpus

pub struct CorpusEntry {
    /// Relative to the corpus root, without extension.
    pub stem: String,
    pub program: String,
    pub expected: Value,
}

impl CorpusEntry {
    pub fn program_path(&self) -> PathBuf {
        corpus_dir().join(format!("{}.5th", self.stem))
    }

    pub fn expected_path(&self) -> PathBuf {
        corpus_dir().join(format!("{}.expected.json", self.stem))
    }
}

pub const QUEENS_SIZES: [usize; 4] = [4, 5, 6, 8];
pub const FACT_ARGS: [i64; 3] = [0, 6, 10];
pub const HORIZONS: [i64; 3] = [2, 4, 6];
pub const CSP_TRAIN: usize = 30;
pub const CSP_EVAL: usize = 20;

pub const CSP_SOLUTION_RANGE: std::ops::RangeInclusive<usize> = 1..=300;

/// The first seed, counting up from `1000 + 100 i`, whose instance has a
/// solution count in [`CSP_SOLUTION_RANGE`].
pub fn csp_instance(i: usize) -> CspInstance {
    let vars = 5 + i % 4;
    let domain = 3 + ((i / 4) % 3) as i64;
    let density = 0.3 + 0.05 * (i % 5) as f64;
    (0..)
        .map(|t| generate_random_csp(vars, domain, density, 1000 + 100 * i as u64 + t).expect("within limits"))
        .find(|inst| CSP_SOLUTION_RANGE.contains(&csp_solutions(inst).len()))
        .expect("some seed qualifies")
}

pub fn csp_stem(i: usize) -> String {
    if i < CSP_TRAIN {
        format!("csp/train/csp-{i:02}")
    } else {
        format!("csp/eval/csp-{i:02}")
    }
}

fn row(names: &[String], values: &[i64]) -> Value {
    Value::Object(names.iter().cloned().zip(values.iter().map(|&v| json!(v))).collect::<Map<_, _>>())
}

/// `{"count", "solutions"}` with solutions in canonical order.
pub fn enumeration(names: &[String], rows: &[Vec<i64>]) -> Value {
    let mut sols: Vec<Value> = rows.iter().map(|r| row(names, r)).collect();
    sols.sort_by_key(|v| v.to_string());
    json!({ "count": sols.len(), "solutions": sols })
}

pub fn fact_program(n: i64) -> String {
    format!("{FACTORIAL}(query (fact (n {n})) (show r))\n")
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for n in QUEENS_SIZES {
        let names: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
        out.push(CorpusEntry { stem: format!("queens/q{n}"), program: queens_program(n), expected: enumeration(&names, &queens(n)) });
    }
    let names: Vec<String> = CRYPT_LETTERS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<i64>> = send_more_money().iter().map(|r| r.to_vec()).collect();
    let mut expected = enumeration(&names, &rows);
    if let [r] = rows.as_slice() {
        expected["send"] = json!(1000 * r[0] + 100 * r[1] + 10 * r[2] + r[3]);
    }
    out.push(CorpusEntry { stem: "crypt/send-more-money".into(), program: send_more_money_program(), expected });
    for n in FACT_ARGS {
        let mut expected = enumeration(&["r".to_string()], &[vec![factorial(n)]]);
        expected["expansions"] = json!(n);
        out.push(CorpusEntry { stem: format!("fact/fact-{n}"), program: fact_program(n), expected });
    }
    for h in HORIZONS {
        let p = HorizonProblem::line_world(h);
        out.push(CorpusEntry {
            stem: format!("horizon/line-{h}"),
            program: emit_horizon_program(&p).expect("valid"),
            expected: json!({ "optimum": { "total": horizon_best(&p) } }),
        });
    }
    let js = js_3x3_a();
    out.push(CorpusEntry {
        stem: "jobshop/js-3x3-a".into(),
        program: emit_jobshop_program(&js).expect("valid"),
        expected: json!({ "optimum": { "mk": jobshop_makespan(&js) } }),
    });
    for i in 0..CSP_TRAIN + CSP_EVAL {
        let inst = csp_instance(i);
        out.push(CorpusEntry { stem: csp_stem(i), program: inst.text(), expected: enumeration(&inst.var_names(), &csp_solutions(&inst)) });
    }
    out
}

/// Expected files keep one solution per line.
pub fn render_expected(v: &Value) -> String {
    let mut fields: Vec<String> = Vec::new();
    for (k, val) in v.as_object().expect("object") {
        if k == "solutions" {
            let rows: Vec<String> = val.as_array().unwrap().iter().map(|r| format!("    {r}")).collect();
            fields.push(format!("  \"solutions\": [\n{}\n  ]", rows.join(",\n")));
        } else {
            fields.push(format!("  {}: {}", json!(k), val));
        }
    }
    format!("{{\n{}\n}}\n", fields.join(",\n"))
}

/// Solver output reduced to what the expected files record.
pub fn answers(output: &Value, expected: &Value) -> Value {
    if let Some(optimum) = expected.get("optimum").and_then(Value::as_object) {
        let cells = &output["solutions"][0]["cells"];
        let got: Map<String, Value> = optimum.keys().map(|k| (k.clone(), cells[k].clone())).collect();
        return json!({ "optimum": got, "optimal": output["optimal"] });
    }
    let names: Vec<String> = expected["solutions"]
        .as_array()
        .and_then(|s| s.first())
        .and_then(Value::as_object)
        .map(|o| o.keys().cloned().collect())
        .unwrap_or_default();
    let mut sols: Vec<Value> = output["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let cells = &s["cells"];
            let keys: Vec<&String> = if names.is_empty() { cells.as_object().unwrap().keys().collect() } else { names.iter().collect() };
            Value::Object(keys.into_iter().map(|k| (k.clone(), cells[k].clone())).collect())
        })
        .collect();
    sols.sort_by_key(|v| v.to_string());
    json!({ "count": sols.len(), "solutions": sols })
}

/// What [`answers`] should return for a correct solver.
pub fn expected_answers(expected: &Value) -> Value {
    match expected.get("optimum") {
        Some(o) => json!({ "optimum": o, "optimal": true }),
        None => json!({ "count": expected["count"], "solutions": expected["solutions"] }),
    }
}
