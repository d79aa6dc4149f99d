//! Queries, depth-first search over `choose` cells, branch-and-bound
//! optimization, and storage management between nodes.

mod gc;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::{demand_loop, instantiate_traced, within_precision, ElabError, FrameId, Instance, Program};
use crate::lattice::{merge, Number, PartialInfo};
use crate::network::{CellId, TraceSink, SATURATION};

pub use gc::{collect_garbage, SummarizationReport};
pub use snapshot::{SnapshotId, SnapshotStore};

pub const DEFAULT_DEPTH_BUDGET: u64 = 10_000;
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("unknown snapshot {0}")]
    UnknownSnapshot(SnapshotId),
    #[error("program has no query")]
    NoQuery,
    #[error("query has no objective to minimize")]
    NoObjective,
    #[error("query names `{0}`, which is not a cell of the entry definition")]
    UnknownTarget(String),
    #[error(transparent)]
    Elab(#[from] ElabError),
}

/// What to compute and how much effort to spend.
#[derive(Debug, Clone)]
pub struct Query {
    pub entry: String,
    pub bindings: Vec<(String, PartialInfo)>,
    pub show: Vec<String>,
    /// Maximum interval width on shown cells; 0 requires exact values.
    pub precision: f64,
    pub depth_budget: u64,
    pub step_budget: u64,
    pub node_budget: u64,
    pub objective: Option<String>,
    /// Summarize settled frames after every node.
    pub collect_garbage: bool,
    /// Receives every network write of every node.
    pub trace: Option<TraceSink>,
}

impl Query {
    pub fn new(entry: impl Into<String>) -> Self {
        Query {
            entry: entry.into(),
            bindings: Vec::new(),
            show: Vec::new(),
            precision: 0.0,
            depth_budget: DEFAULT_DEPTH_BUDGET,
            step_budget: DEFAULT_STEP_BUDGET,
            node_budget: DEFAULT_NODE_BUDGET,
            objective: None,
            collect_garbage: false,
            trace: None,
        }
    }

    /// The query embedded in the program text, with defaults filled in.
    pub fn from_program(program: &Program) -> Result<Query, SearchError> {
        let spec = program.query.as_ref().ok_or(SearchError::NoQuery)?;
        let mut q = Query::new(spec.entry.clone());
        q.bindings = spec.bindings.iter().map(|(n, v)| (n.clone(), PartialInfo::Exact(*v))).collect();
        q.show = spec.show.clone();
        q.precision = spec.precision.unwrap_or(0.0);
        q.depth_budget = spec.depth.unwrap_or(DEFAULT_DEPTH_BUDGET);
        q.step_budget = spec.steps.unwrap_or(DEFAULT_STEP_BUDGET);
        q.node_budget = spec.nodes.unwrap_or(DEFAULT_NODE_BUDGET);
        q.objective = spec.minimize.clone();
        Ok(q)
    }
}

/// A candidate refinement at a branching point.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchDescriptor {
    pub cell: CellId,
    pub refinement: PartialInfo,
    pub frame: FrameId,
}

/// Orders candidate refinements. Scores only reorder siblings; they never
/// change which solutions exist.
pub trait BranchOracle {
    /// One finite score per candidate; higher is tried first.
    fn scores(&self, inst: &Instance, frame: FrameId, candidates: &[BranchDescriptor]) -> Vec<f64>;
}

/// Scores everything equally, leaving ascending value order.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformOracle;

impl BranchOracle for UniformOracle {
    fn scores(&self, _inst: &Instance, _frame: FrameId, candidates: &[BranchDescriptor]) -> Vec<f64> {
        vec![0.0; candidates.len()]
    }
}

/// Hooks for recording what the search did.
pub trait SearchObserver {
    /// A node reached quiescence without contradiction.
    fn on_node(&mut self, _inst: &Instance) {}
    /// A child branch is about to be explored from `inst`. Returns a token
    /// passed back to [`SearchObserver::on_branch_done`].
    fn on_branch(&mut self, _inst: &Instance, _frame: FrameId, _choice: &BranchDescriptor) -> u64 {
        0
    }
    /// The subtree under a branch is finished; `succeeded` if it produced a solution.
    fn on_branch_done(&mut self, _token: u64, _succeeded: bool) {}
    fn on_solution(&mut self, _inst: &Instance) {}
}

pub struct NoObserver;
impl SearchObserver for NoObserver {}

/// Value of a shown cell in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Int(i64),
    Real(f64),
    Partial(String),
}

impl CellValue {
    pub fn of(info: &PartialInfo) -> CellValue {
        match info {
            PartialInfo::Exact(Number::Int(i)) => CellValue::Int(*i),
            PartialInfo::Exact(Number::Real(r)) => CellValue::Real(*r),
            other => CellValue::Partial(other.to_string()),
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            CellValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CellValue::Int(i) => Some(*i as f64),
            CellValue::Real(r) => Some(*r),
            CellValue::Partial(_) => None,
        }
    }

    /// The information this value denotes, when it is a number.
    pub fn to_info(&self) -> Option<PartialInfo> {
        match self {
            CellValue::Int(i) => Some(PartialInfo::int(*i)),
            CellValue::Real(r) => Some(PartialInfo::real(*r)),
            CellValue::Partial(_) => None,
        }
    }
}

/// A decided `choose` cell anywhere in the frame tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceAssignment {
    pub frame: FrameId,
    pub depth: usize,
    pub definition: String,
    pub name: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub cells: BTreeMap<String, CellValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<ChoiceAssignment>,
}

impl Solution {
    /// Canonical text of the shown cells, for set comparisons.
    pub fn key(&self) -> String {
        serde_json::to_string(&self.cells).expect("cell map serializes")
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.cells.get(name).and_then(CellValue::as_i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub steps: u64,
    pub expansions: u64,
    pub complete: bool,
    /// Node at which the first solution was found.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_solution: Option<u64>,
    #[serde(skip)]
    pub summarized_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub solutions: Vec<Solution>,
    pub stats: SearchStats,
}

impl SolutionSet {
    /// Shown-cell keys of every solution, order-independent.
    pub fn key_set(&self) -> BTreeSet<String> {
        self.solutions.iter().map(Solution::key).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution set serializes")
    }
}

/// One incumbent improvement during branch-and-bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvent {
    pub node: u64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub solution: Option<Solution>,
    /// The search finished, so the incumbent is optimal.
    pub proven_optimal: bool,
    pub bound_trace: Vec<BoundEvent>,
    pub stats: SearchStats,
}

impl OptimizeResult {
    /// The same schema as [`SolutionSet`], with the optimum as the only solution.
    pub fn to_json(&self) -> String {
        let set = SolutionSet { solutions: self.solution.iter().cloned().collect(), stats: self.stats };
        let mut v = serde_json::to_value(set).expect("serializes");
        v["optimal"] = serde_json::Value::Bool(self.proven_optimal);
        v["bound_trace"] = serde_json::to_value(&self.bound_trace).expect("serializes");
        serde_json::to_string(&v).expect("serializes")
    }
}

fn resolve(inst: &Instance, name: &str) -> Result<CellId, SearchError> {
    inst.root_cell(name).ok_or_else(|| SearchError::UnknownTarget(name.to_string()))
}

/// Builds the root instance of a query.
pub fn instantiate_query(program: Arc<Program>, query: &Query) -> Result<Instance, SearchError> {
    Ok(instantiate_traced(program, &query.entry, &query.bindings, query.trace.clone())?)
}

struct Pending {
    snapshot: SnapshotId,
    frame: FrameId,
    queue: std::collections::VecDeque<BranchDescriptor>,
    /// Token and solution count when the current child started.
    active: Option<(u64, usize)>,
}

enum Decision {
    Solution,
    Branch(FrameId, Vec<BranchDescriptor>),
    Stuck,
}

fn frame_of(inst: &Instance, cell: CellId) -> FrameId {
    inst.network.cell(cell).origin.frame
}

fn decide(inst: &Instance, targets: &[(CellId, f64)], oracle: &dyn BranchOracle) -> Decision {
    let mut best: Option<(usize, CellId, Vec<i64>)> = None;
    for choice in inst.live_choices() {
        let content = inst.content(choice.cell);
        if content.exact().is_some() {
            continue;
        }
        let values: Vec<i64> = choice.domain.iter().copied().filter(|&v| content.admits(Number::Int(v))).collect();
        let better = match &best {
            None => true,
            Some((size, cell, _)) => values.len() < *size || (values.len() == *size && choice.cell < *cell),
        };
        if better {
            best = Some((values.len(), choice.cell, values));
        }
    }
    if let Some((_, cell, values)) = best {
        let frame = frame_of(inst, cell);
        let candidates: Vec<BranchDescriptor> =
            values.iter().map(|&v| BranchDescriptor { cell, refinement: PartialInfo::int(v), frame }).collect();
        let scores = oracle.scores(inst, frame, &candidates);
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        let score = |i: usize| scores.get(i).copied().filter(|s| s.is_finite()).unwrap_or(0.0);
        order.sort_by(|&a, &b| score(b).total_cmp(&score(a)));
        return Decision::Branch(frame, order.into_iter().map(|i| candidates[i].clone()).collect());
    }
    for &(cell, precision) in targets {
        let content = inst.content(cell);
        if within_precision(content, precision) {
            continue;
        }
        let frame = frame_of(inst, cell);
        if let Some((lo, _)) = content.int_bounds() {
            let rest = content.exclude(lo).unwrap_or_else(PartialInfo::contradiction);
            return Decision::Branch(
                frame,
                vec![
                    BranchDescriptor { cell, refinement: PartialInfo::int(lo), frame },
                    BranchDescriptor { cell, refinement: rest, frame },
                ],
            );
        }
        if let Some((lo, hi)) = content.bounds() {
            let mid = lo + (hi - lo) / 2.0;
            return Decision::Branch(
                frame,
                vec![
                    BranchDescriptor { cell, refinement: PartialInfo::real_interval(lo, mid), frame },
                    BranchDescriptor { cell, refinement: PartialInfo::real_interval(mid, hi), frame },
                ],
            );
        }
        return Decision::Stuck;
    }
    Decision::Solution
}

fn extract(inst: &Instance, query: &Query, show: &[CellId]) -> Solution {
    let cells = query.show.iter().zip(show).map(|(n, &c)| (n.clone(), CellValue::of(inst.content(c)))).collect();
    let mut choices: Vec<ChoiceAssignment> = inst
        .choices
        .iter()
        .filter_map(|c| {
            let v = inst.content(c.cell).exact_int()?;
            let f = &inst.frames[c.frame];
            Some(ChoiceAssignment { frame: f.id, depth: f.depth, definition: f.definition.clone(), name: c.name.clone(), value: v })
        })
        .collect();
    choices.sort_by(|a, b| (a.depth, a.frame, &a.name).cmp(&(b.depth, b.frame, &b.name)));
    Solution { cells, choices }
}

struct Outcome {
    solutions: Vec<Solution>,
    objective_values: Vec<f64>,
    bound_trace: Vec<BoundEvent>,
    stats: SearchStats,
}

fn run_search(
    program: Arc<Program>,
    query: &Query,
    oracle: &dyn BranchOracle,
    observer: &mut dyn SearchObserver,
    minimize: bool,
) -> Result<Outcome, SearchError> {
    let root = instantiate_query(program, query)?;
    let show: Vec<CellId> = query.show.iter().map(|n| resolve(&root, n)).collect::<Result<_, _>>()?;
    let objective = match (&query.objective, minimize) {
        (Some(o), true) => Some(resolve(&root, o)?),
        (None, true) => return Err(SearchError::NoObjective),
        _ => None,
    };
    let mut targets: Vec<(CellId, f64)> = show.iter().map(|&c| (c, query.precision)).collect();
    if let Some(o) = objective {
        targets.push((o, 0.0));
    }
    let target_cells: Vec<CellId> = targets.iter().map(|t| t.0).collect();

    let mut out = Outcome { solutions: Vec::new(), objective_values: Vec::new(), bound_trace: Vec::new(), stats: SearchStats::default() };
    let mut complete = true;
    let mut incumbent: Option<f64> = None;
    let mut store = SnapshotStore::new();
    let mut stack: Vec<Pending> = Vec::new();
    let mut current = Some(root);

    'search: loop {
        if let Some(mut inst) = current.take() {
            if out.stats.nodes >= query.node_budget {
                complete = false;
                break 'search;
            }
            out.stats.nodes += 1;
            if let (Some(o), Some(best)) = (objective, incumbent) {
                if inst.content(o).is_integral() || inst.content(o).is_nothing() {
                    let cap = (best as i64).saturating_sub(1);
                    let _ = inst.network.write(o, PartialInfo::int_interval(-SATURATION, cap));
                }
            }
            let remaining = query.step_budget.saturating_sub(out.stats.steps);
            let rep = demand_loop(&mut inst, &target_cells, query.precision, query.depth_budget, remaining);
            out.stats.steps += rep.steps_used;
            out.stats.expansions += rep.expansions;
            let mut dead = rep.contradiction.is_some();
            if !dead && !rep.quiescent {
                complete = false;
                break 'search;
            }
            if !dead {
                if let (Some(o), Some(best)) = (objective, incumbent) {
                    if inst.content(o).bounds().is_some_and(|(lo, _)| lo >= best) {
                        dead = true;
                    }
                }
            }
            if !dead {
                if query.collect_garbage {
                    let mut roots = target_cells.clone();
                    roots.extend(inst.live_choices().map(|c| c.cell));
                    let report = collect_garbage(&mut inst, &roots);
                    out.stats.summarized_frames += report.summarized.len() as u64;
                }
                observer.on_node(&inst);
                match decide(&inst, &targets, oracle) {
                    Decision::Solution => {
                        observer.on_solution(&inst);
                        let sol = extract(&inst, query, &show);
                        out.stats.first_solution.get_or_insert(out.stats.nodes);
                        if let Some(o) = objective {
                            let value = inst.content(o).exact().map(Number::as_f64).unwrap_or(f64::NAN);
                            incumbent = Some(value);
                            out.bound_trace.push(BoundEvent { node: out.stats.nodes, objective: value });
                            out.objective_values.push(value);
                        }
                        out.solutions.push(sol);
                    }
                    Decision::Branch(frame, candidates) => {
                        let snapshot = store.snapshot(&inst);
                        stack.push(Pending { snapshot, frame, queue: candidates.into(), active: None });
                    }
                    Decision::Stuck => {
                        if rep.depth_exhausted || !rep.targets_met {
                            complete = false;
                        }
                    }
                }
            }
        }

        // Move to the next unexplored child.
        loop {
            let Some(top) = stack.last_mut() else {
                break 'search;
            };
            if let Some((token, before)) = top.active.take() {
                observer.on_branch_done(token, out.solutions.len() > before);
            }
            match top.queue.pop_front() {
                Some(choice) => {
                    let parent = store.restore(top.snapshot)?;
                    let token = observer.on_branch(&parent, top.frame, &choice);
                    top.active = Some((token, out.solutions.len()));
                    let mut child = parent;
                    let refined = merge(child.content(choice.cell), &choice.refinement);
                    let _ = child.network.write(choice.cell, refined);
                    current = Some(child);
                    break;
                }
                None => {
                    store.release(top.snapshot);
                    stack.pop();
                }
            }
        }
    }
    out.stats.complete = complete;
    Ok(out)
}

/// Enumerates every solution of the query (within budgets).
pub fn solve(program: Arc<Program>, query: &Query, oracle: &dyn BranchOracle) -> Result<SolutionSet, SearchError> {
    solve_observed(program, query, oracle, &mut NoObserver)
}

pub fn solve_observed(
    program: Arc<Program>,
    query: &Query,
    oracle: &dyn BranchOracle,
    observer: &mut dyn SearchObserver,
) -> Result<SolutionSet, SearchError> {
    let out = run_search(program, query, oracle, observer, false)?;
    Ok(SolutionSet { solutions: out.solutions, stats: out.stats })
}

/// Branch-and-bound minimization of the query's objective.
pub fn optimize(program: Arc<Program>, query: &Query, oracle: &dyn BranchOracle) -> Result<OptimizeResult, SearchError> {
    optimize_observed(program, query, oracle, &mut NoObserver)
}

pub fn optimize_observed(
    program: Arc<Program>,
    query: &Query,
    oracle: &dyn BranchOracle,
    observer: &mut dyn SearchObserver,
) -> Result<OptimizeResult, SearchError> {
    let out = run_search(program, query, oracle, observer, true)?;
    Ok(OptimizeResult {
        solution: out.solutions.last().cloned(),
        proven_optimal: out.stats.complete && !out.solutions.is_empty(),
        bound_trace: out.bound_trace,
        stats: out.stats,
    })
}

/// Replays a solution as plain writes into a fresh instance and checks that
/// it propagates without contradiction and pins every shown cell.
pub fn verify_solution(program: Arc<Program>, query: &Query, solution: &Solution) -> Result<bool, SearchError> {
    let mut inst = instantiate_query(program, query)?;
    let mut targets = Vec::new();
    for name in &query.show {
        let cell = resolve(&inst, name)?;
        targets.push(cell);
        if let Some(info) = solution.cells.get(name).and_then(CellValue::to_info) {
            let _ = inst.network.write(cell, info);
        }
    }
    let rep = demand_loop(&mut inst, &targets, query.precision, query.depth_budget, query.step_budget);
    Ok(rep.contradiction.is_none() && targets.iter().all(|&t| within_precision(inst.content(t), query.precision)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::parse;

    fn program(text: &str) -> Arc<Program> {
        Arc::new(parse(text).unwrap())
    }

    #[test]
    fn tiny_minimization() {
        let p = program(
            "(def (m a b c) (choose a 2 5) (choose b 1 4) (sum a b c))\n(query (m) (show a b c) (minimize c))",
        );
        let q = Query::from_program(&p).unwrap();
        let r = optimize(p, &q, &UniformOracle).unwrap();
        let s = r.solution.unwrap();
        assert_eq!((s.int("c"), s.int("a"), s.int("b")), (Some(3), Some(2), Some(1)));
        assert!(r.proven_optimal);
    }

    #[test]
    fn decided_objective_takes_one_node() {
        let p = program("(def (m c) (const k 4) (equal c k))\n(query (m) (show c) (minimize c))");
        let q = Query::from_program(&p).unwrap();
        let r = optimize(p, &q, &UniformOracle).unwrap();
        assert_eq!(r.stats.nodes, 1);
        assert_eq!(r.solution.unwrap().int("c"), Some(4));
    }

    #[test]
    fn enumerates_all_assignments() {
        let p = program("(def (m a b) (choose a 1 2 3) (choose b 1 2 3) (alldiff a b))\n(query (m) (show a b))");
        let q = Query::from_program(&p).unwrap();
        let s = solve(p.clone(), &q, &UniformOracle).unwrap();
        assert_eq!(s.solutions.len(), 6);
        assert!(s.stats.complete);
        for sol in &s.solutions {
            assert!(verify_solution(p.clone(), &q, sol).unwrap());
        }
    }

    #[test]
    fn unsatisfiable_is_complete_and_empty() {
        let p = program("(def (m a b) (choose a 1 2) (choose b 1 2) (sum a b c) (cell c) (const k 9) (equal c k))\n(query (m) (show a b))");
        let q = Query::from_program(&p).unwrap();
        let s = solve(p, &q, &UniformOracle).unwrap();
        assert!(s.solutions.is_empty());
        assert!(s.stats.complete);
    }

    #[test]
    fn node_budget_marks_incomplete() {
        let p = program("(def (m a b) (choose a 1 2 3) (choose b 1 2 3))\n(query (m) (show a b) (nodes 3))");
        let q = Query::from_program(&p).unwrap();
        let s = solve(p, &q, &UniformOracle).unwrap();
        assert!(!s.stats.complete);
        assert_eq!(s.stats.nodes, 3);
    }

    #[test]
    fn labels_interval_targets() {
        let p = program("(def (m a b) (int a 0 2) (int b 0 2) (lesseq b a))\n(query (m) (show a b))");
        let q = Query::from_program(&p).unwrap();
        let s = solve(p, &q, &UniformOracle).unwrap();
        assert_eq!(s.solutions.len(), 6);
    }

    #[test]
    fn reversed_oracle_changes_order_not_set() {
        struct Reverse;
        impl BranchOracle for Reverse {
            fn scores(&self, _: &Instance, _: FrameId, c: &[BranchDescriptor]) -> Vec<f64> {
                c.iter().map(|d| d.refinement.exact_int().unwrap_or(0) as f64).collect()
            }
        }
        let p = program("(def (m a b) (choose a 1 2 3) (choose b 1 2 3) (alldiff a b))\n(query (m) (show a b))");
        let q = Query::from_program(&p).unwrap();
        let u = solve(p.clone(), &q, &UniformOracle).unwrap();
        let r = solve(p, &q, &Reverse).unwrap();
        assert_ne!(u.solutions[0], r.solutions[0]);
        assert_eq!(u.key_set(), r.key_set());
    }

    #[test]
    fn solution_json_shape() {
        let p = program("(def (m a) (choose a 1 2))\n(query (m) (show a))");
        let q = Query::from_program(&p).unwrap();
        let s = solve(p, &q, &UniformOracle).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["solutions"][0]["cells"]["a"], 1);
        assert_eq!(v["stats"]["complete"], true);
        assert!(v["stats"]["nodes"].is_u64());
    }
}
