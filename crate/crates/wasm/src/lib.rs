//! Browser bindings: solve a program, merge two pieces of partial
//! information, and show the spine tree over a deep recursion.
//!
//! Each export takes and returns plain strings; results are JSON.

use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use fifth::hierarchy::{frame_tree_dump, AugmentationTree};
use fifth::language::{demand_loop, instantiate, parse, COUNTDOWN};
use fifth::lattice::{merge, refines, PartialInfo};
use fifth::search::{optimize, solve, Query, UniformOracle};

/// Keeps a runaway program from freezing the tab.
pub const MAX_NODES: u64 = 20_000;
pub const MAX_STEPS: u64 = 2_000_000;
pub const MAX_DEPTH: u32 = 4096;

fn error(msg: impl ToString) -> Value {
    json!({ "error": msg.to_string() })
}

pub fn solve_json(text: &str, nodes: u64) -> Value {
    let program = match parse(text) {
        Ok(p) => Arc::new(p),
        Err(e) => return error(e),
    };
    let mut query = match Query::from_program(&program) {
        Ok(q) => q,
        Err(e) => return error(e),
    };
    query.node_budget = query.node_budget.min(nodes.clamp(1, MAX_NODES));
    query.step_budget = query.step_budget.min(MAX_STEPS);
    let text = if query.objective.is_some() {
        optimize(program, &query, &UniformOracle).map(|r| r.to_json())
    } else {
        solve(program, &query, &UniformOracle).map(|r| r.to_json())
    };
    match text {
        Ok(t) => serde_json::from_str(&t).unwrap_or_else(error),
        Err(e) => error(e),
    }
}

pub fn merge_json(a: &str, b: &str) -> Value {
    let (a, b) = match (a.parse::<PartialInfo>(), b.parse::<PartialInfo>()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return error(e),
    };
    let m = merge(&a, &b);
    json!({
        "a": a.to_string(),
        "b": b.to_string(),
        "merged": m.to_string(),
        "a_below_b": refines(&a, &b),
        "b_below_a": refines(&b, &a),
        "contradiction": m.is_contradiction(),
    })
}

pub fn spine_json(depth: u32) -> Value {
    let depth = depth.clamp(1, MAX_DEPTH);
    let program = Arc::new(parse(COUNTDOWN).expect("built-in program parses"));
    let mut inst = match instantiate(program, "count", &[("k".into(), PartialInfo::int(depth as i64 - 1))]) {
        Ok(i) => i,
        Err(e) => return error(e),
    };
    let Some(r) = inst.root_cell("r") else { return error("no result cell") };
    let report = demand_loop(&mut inst, &[r], 0.0, MAX_DEPTH as u64 + 1, MAX_STEPS);
    let mut tree = AugmentationTree::default();
    let mut dump = frame_tree_dump(&inst, &mut tree);
    if let Some(frames) = dump.as_object_mut().and_then(|o| o.remove("frames")) {
        dump["frame_count"] = json!(frames.as_array().map_or(0, Vec::len));
    }
    dump["depth"] = json!(depth);
    dump["bound"] = json!((depth as f64).log2().ceil() as u64 + 1);
    dump["expansions"] = json!(report.expansions);
    dump["result"] = json!(inst.content(r).to_string());
    dump
}

#[wasm_bindgen(js_name = solveProgram)]
pub fn solve_program(text: &str, nodes: u32) -> String {
    solve_json(text, nodes as u64).to_string()
}

#[wasm_bindgen(js_name = mergeInfo)]
pub fn merge_info(a: &str, b: &str) -> String {
    merge_json(a, b).to_string()
}

#[wasm_bindgen(js_name = spineTree)]
pub fn spine_tree(depth: u32) -> String {
    spine_json(depth).to_string()
}
