//! Turning definitions into network fragments, one frame at a time.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{info_bits, Number, PartialInfo, WriteId};
use crate::network::{CellId, Literal, Network, NetworkError, Origin, PropId, PropKind, Propagator, TraceSink};

use super::parse::{Definition, Program, Stmt, StmtKind};

pub type FrameId = usize;

/// Reference width used when weighing boundary information.
pub const FRONTIER_REFERENCE_WIDTH: f64 = 1024.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElabError {
    #[error("no definition named `{0}`")]
    UnknownDefinition(String),
    #[error("`{name}` takes {expected} arguments, {found} given")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("no cell named `{0}` in the root frame")]
    UnknownBinding(String),
    #[error("frame {0} does not exist")]
    UnknownFrame(FrameId),
    #[error("frame {frame} is {state:?}; only unexpanded frames can be expanded")]
    NotExpandable { frame: FrameId, state: ExpansionState },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpansionState {
    Unexpanded,
    Expanded,
    Summarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateStatus {
    Open,
    Undecided,
    Refuted,
}

/// One instance of a definition.
#[derive(Debug, Clone)]
pub struct Frame {
    pub id: FrameId,
    pub definition: String,
    pub parent: Option<FrameId>,
    pub depth: usize,
    /// Index of the call statement within the parent's body (pre-order).
    pub call_site: usize,
    /// Local name → cell. Only parameters while unexpanded.
    pub cells: BTreeMap<String, CellId>,
    pub boundary: Vec<CellId>,
    pub state: ExpansionState,
    /// Literal that must hold for this frame's body to be active.
    pub gate: Option<Literal>,
    pub children: Vec<FrameId>,
    pub interior_cells: Vec<CellId>,
    pub interior_props: Vec<PropId>,
}

impl Frame {
    pub fn cell(&self, name: &str) -> Option<CellId> {
        self.cells.get(name).copied()
    }
}

/// A `choose` statement instantiated in some frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceCell {
    pub cell: CellId,
    pub domain: Vec<i64>,
    pub guard: Vec<Literal>,
    pub frame: FrameId,
    pub name: String,
}

/// A network together with the frame tree that produced it.
#[derive(Debug, Clone)]
pub struct Instance {
    program: Arc<Program>,
    pub network: Network,
    pub frames: Vec<Frame>,
    pub choices: Vec<ChoiceCell>,
    pub expansions: u64,
    /// Human-readable origin of direct writes (declarations and bindings).
    pub write_sources: BTreeMap<WriteId, String>,
}

/// Outcome of [`demand_loop`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DemandReport {
    pub steps_used: u64,
    pub quiescent: bool,
    pub contradiction: Option<CellId>,
    pub expansions: u64,
    pub targets_met: bool,
    /// Some expandable frame lay beyond the depth budget.
    pub depth_exhausted: bool,
}

impl DemandReport {
    /// Stopped for lack of budget rather than because the work was done.
    pub fn budget_exhausted(&self) -> bool {
        self.contradiction.is_none() && (!self.quiescent || self.depth_exhausted)
    }
}

/// Whether `info` pins a target down to `precision` (0 means exact).
pub fn within_precision(info: &PartialInfo, precision: f64) -> bool {
    if info.is_contradiction() {
        return false;
    }
    if precision <= 0.0 {
        return info.exact().is_some();
    }
    match info.bounds() {
        Some((lo, hi)) => hi - lo <= precision,
        None => false,
    }
}

impl Instance {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn shared_program(&self) -> Arc<Program> {
        self.program.clone()
    }

    pub fn root(&self) -> &Frame {
        &self.frames[0]
    }

    pub fn frame(&self, id: FrameId) -> Result<&Frame, ElabError> {
        self.frames.get(id).ok_or(ElabError::UnknownFrame(id))
    }

    /// Cell of a root-frame name.
    pub fn root_cell(&self, name: &str) -> Option<CellId> {
        self.root().cell(name)
    }

    pub fn content(&self, cell: CellId) -> &PartialInfo {
        self.network.content(cell)
    }

    pub fn gate_status(&self, frame: FrameId) -> GateStatus {
        match self.frames[frame].gate {
            None => GateStatus::Open,
            Some(l) => {
                let c = self.network.content(l.cell);
                if l.holds(c) {
                    GateStatus::Open
                } else if l.refuted(c) {
                    GateStatus::Refuted
                } else {
                    GateStatus::Undecided
                }
            }
        }
    }

    /// Total boundary information of a frame, in bits.
    pub fn boundary_bits(&self, frame: FrameId) -> f64 {
        self.frames[frame]
            .boundary
            .iter()
            .map(|&c| info_bits(self.network.content(c), FRONTIER_REFERENCE_WIDTH))
            .sum()
    }

    /// Describes a write id, for contradiction reports.
    pub fn describe_write(&self, id: WriteId) -> String {
        self.write_sources.get(&id).cloned().unwrap_or_else(|| format!("propagation write {id}"))
    }

    /// Writes `info` into a cell and records where the write came from.
    pub fn write_labeled(&mut self, cell: CellId, info: PartialInfo, label: String) -> Result<(), ElabError> {
        let id = self.network.write_counter() + 1;
        self.network.write_with_id(cell, info, id)?;
        self.write_sources.insert(id, label);
        Ok(())
    }

    /// Choose cells whose guard is not refuted.
    pub fn live_choices(&self) -> impl Iterator<Item = &ChoiceCell> {
        self.choices
            .iter()
            .filter(|c| self.frames[c.frame].state != ExpansionState::Summarized && !self.network.guard_refuted(&c.guard))
    }

    fn new_frame(&mut self, definition: &Definition, parent: Option<FrameId>, call_site: usize, gate: Option<Literal>) -> FrameId {
        let id = self.frames.len();
        let depth = parent.map_or(0, |p| self.frames[p].depth + 1);
        let mut cells = BTreeMap::new();
        let mut boundary = Vec::with_capacity(definition.params.len());
        for p in &definition.params {
            let c = self.network.add_cell(Origin::new(id, p.clone()));
            cells.insert(p.clone(), c);
            boundary.push(c);
        }
        self.frames.push(Frame {
            id,
            definition: definition.name.clone(),
            parent,
            depth,
            call_site,
            cells,
            boundary,
            state: ExpansionState::Unexpanded,
            gate,
            children: Vec::new(),
            interior_cells: Vec::new(),
            interior_props: Vec::new(),
        });
        if let Some(p) = parent {
            self.frames[p].children.push(id);
        }
        id
    }

    fn attach(&mut self, frame: FrameId, kind: PropKind, guard: &[Literal]) -> Result<PropId, ElabError> {
        let id = self.network.attach(Propagator::guarded(kind, guard.to_vec()))?;
        self.frames[frame].interior_props.push(id);
        Ok(id)
    }

    fn local_cell(&mut self, frame: FrameId, name: &str) -> CellId {
        if let Some(c) = self.frames[frame].cells.get(name) {
            return *c;
        }
        let c = self.network.add_cell(Origin::new(frame, name));
        self.frames[frame].cells.insert(name.to_string(), c);
        self.frames[frame].interior_cells.push(c);
        c
    }

    /// Restriction that is either a direct write (unguarded) or a propagator.
    fn restrict(&mut self, frame: FrameId, cell: CellId, info: PartialInfo, guard: &[Literal], label: String) -> Result<(), ElabError> {
        if guard.is_empty() {
            self.write_labeled(cell, info, label)
        } else {
            self.attach(frame, PropKind::Within { cell, info }, guard).map(|_| ())
        }
    }

    fn elaborate(&mut self, frame: FrameId, stmts: &[Stmt], guard: &[Literal], call_counter: &mut usize) -> Result<(), ElabError> {
        let program = self.program.clone();
        for s in stmts {
            let cell = |this: &Self, n: &str| this.frames[frame].cells[n];
            let label = |what: &str| format!("{what} @{} in {}", s.pos, self.frames[frame].definition);
            match &s.kind {
                StmtKind::Cell(_) => {}
                StmtKind::Int(n, lo, hi) => {
                    let c = cell(self, n);
                    let l = label(&format!("(int {n} {lo} {hi})"));
                    self.restrict(frame, c, PartialInfo::int_interval(*lo, *hi), guard, l)?;
                }
                StmtKind::Const(n, v) => {
                    let c = cell(self, n);
                    if guard.is_empty() {
                        let l = label(&format!("(const {n} {v})"));
                        self.write_labeled(c, PartialInfo::Exact(*v), l)?;
                    } else {
                        self.attach(frame, PropKind::Constant { cell: c, value: *v }, guard)?;
                    }
                }
                StmtKind::Choose(n, values) => {
                    let c = cell(self, n);
                    let domain: std::collections::BTreeSet<i64> = values.iter().copied().collect();
                    if guard.is_empty() {
                        let l = label(&format!("(choose {n} ...)"));
                        self.write_labeled(c, PartialInfo::domain(domain.iter().copied()), l)?;
                    } else {
                        self.attach(frame, PropKind::ElementOf { cell: c, domain: domain.clone() }, guard)?;
                    }
                    self.choices.push(ChoiceCell {
                        cell: c,
                        domain: domain.into_iter().collect(),
                        guard: guard.to_vec(),
                        frame,
                        name: n.clone(),
                    });
                }
                StmtKind::Sum(a, b, c) => {
                    let k = PropKind::Sum { a: cell(self, a), b: cell(self, b), c: cell(self, c) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::Product(a, b, c) => {
                    let k = PropKind::Product { a: cell(self, a), b: cell(self, b), c: cell(self, c) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::Equal(a, b) => {
                    let k = PropKind::Equal { a: cell(self, a), b: cell(self, b) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::LessEq(a, b) => {
                    let k = PropKind::LessEq { a: cell(self, a), b: cell(self, b) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::AllDiff(xs) => {
                    let cells = xs.iter().map(|x| cell(self, x)).collect();
                    self.attach(frame, PropKind::AllDiff { cells }, guard)?;
                }
                StmtKind::IsEq(o, a, b) => {
                    let k = PropKind::IsEq { out: cell(self, o), a: cell(self, a), b: cell(self, b) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::IsLe(o, a, b) => {
                    let k = PropKind::IsLe { out: cell(self, o), a: cell(self, a), b: cell(self, b) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::Switch(c, t, e, o) => {
                    let k = PropKind::Switch { cond: cell(self, c), then: cell(self, t), els: cell(self, e), out: cell(self, o) };
                    self.attach(frame, k, guard)?;
                }
                StmtKind::If { cond, then, els } => {
                    let c = cell(self, cond);
                    let mut g = guard.to_vec();
                    g.push(Literal::new(c, true));
                    self.elaborate(frame, then, &g, call_counter)?;
                    g.pop();
                    g.push(Literal::new(c, false));
                    self.elaborate(frame, els, &g, call_counter)?;
                }
                StmtKind::Call { target, args } => {
                    let callee = program.definitions.get(target).ok_or_else(|| ElabError::UnknownDefinition(target.clone()))?;
                    let site = *call_counter;
                    *call_counter += 1;
                    let gate = match guard.len() {
                        0 => None,
                        1 => Some(guard[0]),
                        _ => {
                            let g = self.local_cell(frame, &format!("gate#{site}"));
                            self.attach(frame, PropKind::And { out: g, inputs: guard.to_vec() }, &[])?;
                            Some(Literal::new(g, true))
                        }
                    };
                    let child = self.new_frame(callee, Some(frame), site, gate);
                    let boundary = self.frames[child].boundary.clone();
                    for (arg, b) in args.iter().zip(boundary) {
                        let a = cell(self, arg);
                        self.attach(frame, PropKind::Equal { a, b }, guard)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn expand_unchecked(&mut self, frame: FrameId) -> Result<(), ElabError> {
        let program = self.program.clone();
        let def = program
            .definitions
            .get(&self.frames[frame].definition)
            .ok_or_else(|| ElabError::UnknownDefinition(self.frames[frame].definition.clone()))?;
        for local in &def.locals {
            self.local_cell(frame, local);
        }
        let guard: Vec<Literal> = self.frames[frame].gate.into_iter().collect();
        let mut calls = 0;
        self.elaborate(frame, &def.body, &guard, &mut calls)?;
        self.frames[frame].state = ExpansionState::Expanded;
        Ok(())
    }
}

/// Builds the root frame of `name`, expands it, and applies named initial writes.
pub fn instantiate(program: Arc<Program>, name: &str, bindings: &[(String, PartialInfo)]) -> Result<Instance, ElabError> {
    instantiate_traced(program, name, bindings, None)
}

/// [`instantiate`] with every write, from the first, copied to `sink`.
pub fn instantiate_traced(
    program: Arc<Program>,
    name: &str,
    bindings: &[(String, PartialInfo)],
    sink: Option<TraceSink>,
) -> Result<Instance, ElabError> {
    let def = program.definitions.get(name).ok_or_else(|| ElabError::UnknownDefinition(name.to_string()))?.clone();
    let mut network = Network::new();
    network.set_trace(sink);
    let mut inst = Instance {
        program,
        network,
        frames: Vec::new(),
        choices: Vec::new(),
        expansions: 0,
        write_sources: BTreeMap::new(),
    };
    inst.new_frame(&def, None, 0, None);
    inst.expand_unchecked(0)?;
    for (n, info) in bindings {
        let c = inst.root_cell(n).ok_or_else(|| ElabError::UnknownBinding(n.clone()))?;
        inst.write_labeled(c, info.clone(), format!("binding {n}"))?;
    }
    Ok(inst)
}

/// Positional variant of [`instantiate`]: one initial write per parameter.
pub fn instantiate_positional(program: Arc<Program>, name: &str, args: &[PartialInfo]) -> Result<Instance, ElabError> {
    let def = program.definitions.get(name).ok_or_else(|| ElabError::UnknownDefinition(name.to_string()))?;
    if def.params.len() != args.len() {
        return Err(ElabError::ArityMismatch { name: name.to_string(), expected: def.params.len(), found: args.len() });
    }
    let bindings: Vec<_> = def.params.iter().cloned().zip(args.iter().cloned()).collect();
    instantiate(program, name, &bindings)
}

/// Expands an unexpanded frame. Returns `false` (and does nothing) when the
/// frame's gate is refuted.
pub fn expand(inst: &mut Instance, frame: FrameId) -> Result<bool, ElabError> {
    let state = inst.frame(frame)?.state;
    if state != ExpansionState::Unexpanded {
        return Err(ElabError::NotExpandable { frame, state });
    }
    if inst.gate_status(frame) == GateStatus::Refuted {
        return Ok(false);
    }
    inst.expand_unchecked(frame)?;
    inst.expansions += 1;
    Ok(true)
}

/// Picks the next frame to expand: the first open frame, else the undecided
/// frame with the most boundary information.
pub fn select_frontier(inst: &Instance, depth_budget: u64) -> (Option<FrameId>, bool) {
    let mut best_undecided: Option<(f64, FrameId)> = None;
    let mut beyond_budget = false;
    for f in &inst.frames {
        if f.state != ExpansionState::Unexpanded {
            continue;
        }
        let status = inst.gate_status(f.id);
        if status == GateStatus::Refuted {
            continue;
        }
        if f.depth as u64 > depth_budget {
            beyond_budget = true;
            continue;
        }
        if status == GateStatus::Open {
            return (Some(f.id), beyond_budget);
        }
        let bits = inst.boundary_bits(f.id);
        if best_undecided.map_or(true, |(b, _)| bits > b) {
            best_undecided = Some((bits, f.id));
        }
    }
    (best_undecided.map(|(_, id)| id), beyond_budget)
}

/// Alternates propagation with frontier expansion until the targets are
/// pinned to `precision`, the budgets run out, or a contradiction appears.
pub fn demand_loop(inst: &mut Instance, targets: &[CellId], precision: f64, depth_budget: u64, step_budget: u64) -> DemandReport {
    let mut report = DemandReport::default();
    loop {
        let q = inst.network.run_to_quiescence(step_budget - report.steps_used);
        report.steps_used += q.steps_used;
        report.quiescent = q.quiescent;
        report.contradiction = q.contradiction;
        if q.contradiction.is_some() || !q.quiescent {
            report.targets_met = false;
            return report;
        }
        report.targets_met = targets.iter().all(|&t| within_precision(inst.network.content(t), precision));
        if report.targets_met {
            report.depth_exhausted = false;
            return report;
        }
        let (next, beyond) = select_frontier(inst, depth_budget);
        report.depth_exhausted = beyond;
        let Some(frame) = next else {
            return report;
        };
        match expand(inst, frame) {
            Ok(true) => report.expansions += 1,
            Ok(false) => return report,
            Err(_) => return report,
        }
    }
}

/// Convenience for numbers given as plain integers.
pub fn exact_int(v: i64) -> PartialInfo {
    PartialInfo::Exact(Number::Int(v))
}
