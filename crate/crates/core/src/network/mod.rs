//! Cells, propagators and the run-to-quiescence scheduler.

mod propagators;
pub mod sample;

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{merge, Number, PartialInfo, WriteId};

pub use propagators::{Literal, PropKind};

pub type CellId = usize;
pub type PropId = usize;

/// Bound magnitude at which integer arithmetic saturates.
pub const SATURATION: i64 = 1 << 62;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("unknown cell id {0}")]
    UnknownCell(CellId),
    #[error("unknown propagator id {0}")]
    UnknownPropagator(PropId),
}

/// Where a cell came from: the frame that allocated it and its source name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Origin {
    pub frame: usize,
    pub name: String,
}

impl Origin {
    pub fn new(frame: usize, name: impl Into<String>) -> Self {
        Origin { frame, name: name.into() }
    }
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.frame, self.name)
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub content: PartialInfo,
    pub watchers: Vec<PropId>,
    pub origin: Origin,
    /// Writes that refined this cell, oldest first.
    pub refining_writes: Vec<WriteId>,
    pub saturated: bool,
    pub dropped: bool,
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub kind: PropKind,
    /// Conjunction of literals that must hold before the transfer function runs.
    pub guard: Vec<Literal>,
    pub retired: bool,
}

impl Propagator {
    pub fn new(kind: PropKind) -> Self {
        Propagator { kind, guard: Vec::new(), retired: false }
    }

    pub fn guarded(kind: PropKind, guard: Vec<Literal>) -> Self {
        Propagator { kind, guard, retired: false }
    }

    fn watched_cells(&self) -> Vec<CellId> {
        let mut cells = self.kind.cells();
        cells.extend(self.guard.iter().map(|l| l.cell));
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteResult {
    Unchanged,
    Refined,
    ContradictionRaised,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct QuiescenceReport {
    pub steps_used: u64,
    pub quiescent: bool,
    pub contradiction: Option<CellId>,
}

/// One traced write.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub step: u64,
    pub cell: CellId,
    pub origin: String,
    pub old: String,
    pub new: String,
    pub propagator: Option<PropId>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub saturated: bool,
}

pub type TraceSink = Arc<Mutex<Vec<TraceEvent>>>;

/// A monotone dataflow graph. Cloning yields an independent copy that shares
/// only the optional trace sink.
#[derive(Debug, Clone, Default)]
pub struct Network {
    cells: Vec<Cell>,
    props: Vec<Propagator>,
    queue: VecDeque<PropId>,
    queued: Vec<bool>,
    write_counter: WriteId,
    contradiction: Option<CellId>,
    steps_total: u64,
    running: Option<PropId>,
    trace: Option<TraceSink>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_trace(&mut self, sink: Option<TraceSink>) {
        self.trace = sink;
    }

    pub fn add_cell(&mut self, origin: Origin) -> CellId {
        self.cells.push(Cell {
            content: PartialInfo::Nothing,
            watchers: Vec::new(),
            origin,
            refining_writes: Vec::new(),
            saturated: false,
            dropped: false,
        });
        self.cells.len() - 1
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Number of propagators that have not been retired.
    pub fn live_propagator_count(&self) -> usize {
        self.props.iter().filter(|p| !p.retired).count()
    }

    pub fn propagator_count(&self) -> usize {
        self.props.len()
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn propagator(&self, id: PropId) -> &Propagator {
        &self.props[id]
    }

    pub fn content(&self, id: CellId) -> &PartialInfo {
        &self.cells[id].content
    }

    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn contradiction(&self) -> Option<CellId> {
        self.contradiction
    }

    pub fn steps_total(&self) -> u64 {
        self.steps_total
    }

    pub fn write_counter(&self) -> WriteId {
        self.write_counter
    }

    /// Writes with a freshly allocated write id.
    pub fn write(&mut self, cell: CellId, info: PartialInfo) -> Result<WriteResult, NetworkError> {
        self.write_counter += 1;
        let id = self.write_counter;
        self.write_with_id(cell, info, id)
    }

    /// Merges `info` into the cell. Watchers are alerted on change.
    pub fn write_with_id(
        &mut self,
        cell: CellId,
        info: PartialInfo,
        write_id: WriteId,
    ) -> Result<WriteResult, NetworkError> {
        if cell >= self.cells.len() {
            return Err(NetworkError::UnknownCell(cell));
        }
        self.write_counter = self.write_counter.max(write_id);
        Ok(self.apply_write(cell, info, write_id, false))
    }

    fn apply_write(&mut self, cell: CellId, info: PartialInfo, write_id: WriteId, saturated: bool) -> WriteResult {
        let old = &self.cells[cell].content;
        if old.is_contradiction() {
            return WriteResult::Unchanged;
        }
        let mut new = merge(old, &info);
        if new == *old {
            return WriteResult::Unchanged;
        }
        let result = if let PartialInfo::Contradiction(prov) = &mut new {
            prov.extend(self.cells[cell].refining_writes.iter().copied());
            prov.insert(write_id);
            WriteResult::ContradictionRaised
        } else {
            WriteResult::Refined
        };
        if let Some(sink) = &self.trace {
            let c = &self.cells[cell];
            sink.lock().expect("trace sink poisoned").push(TraceEvent {
                step: self.steps_total,
                cell,
                origin: c.origin.to_string(),
                old: c.content.to_string(),
                new: new.to_string(),
                propagator: self.running,
                saturated,
            });
        }
        let c = &mut self.cells[cell];
        c.content = new;
        c.refining_writes.push(write_id);
        c.saturated |= saturated;
        if result == WriteResult::ContradictionRaised {
            self.contradiction.get_or_insert(cell);
        }
        for i in 0..self.cells[cell].watchers.len() {
            let p = self.cells[cell].watchers[i];
            self.enqueue(p);
        }
        result
    }

    fn enqueue(&mut self, p: PropId) {
        if !self.queued[p] && !self.props[p].retired {
            self.queued[p] = true;
            self.queue.push_back(p);
        }
    }

    /// Registers a propagator as watcher of every cell it reads and schedules it.
    pub fn attach(&mut self, prop: Propagator) -> Result<PropId, NetworkError> {
        let watched = prop.watched_cells();
        if let Some(&bad) = watched.iter().find(|&&c| c >= self.cells.len()) {
            return Err(NetworkError::UnknownCell(bad));
        }
        let id = self.props.len();
        self.props.push(prop);
        self.queued.push(false);
        for c in watched {
            self.cells[c].watchers.push(id);
        }
        self.enqueue(id);
        Ok(id)
    }

    /// Removes a propagator from the schedule for good.
    pub fn retire(&mut self, id: PropId) -> Result<(), NetworkError> {
        if id >= self.props.len() {
            return Err(NetworkError::UnknownPropagator(id));
        }
        for c in self.props[id].watched_cells() {
            self.cells[c].watchers.retain(|&w| w != id);
        }
        self.props[id].retired = true;
        if self.queued[id] {
            self.queued[id] = false;
            self.queue.retain(|&q| q != id);
        }
        Ok(())
    }

    /// Forgets a cell's content. Only used for cells no live propagator reads.
    pub fn drop_cell(&mut self, id: CellId) {
        let c = &mut self.cells[id];
        c.content = PartialInfo::Nothing;
        c.watchers.clear();
        c.refining_writes.clear();
        c.dropped = true;
    }

    /// Runs propagators in FIFO order until the queue drains, the budget is
    /// spent, or a contradiction appears.
    pub fn run_to_quiescence(&mut self, step_budget: u64) -> QuiescenceReport {
        self.run_with_order(step_budget, &mut |_| 0)
    }

    /// Like [`Network::run_to_quiescence`] but `pick` chooses which queue
    /// position to dequeue next (given the queue length).
    pub fn run_with_order(&mut self, step_budget: u64, pick: &mut dyn FnMut(usize) -> usize) -> QuiescenceReport {
        let mut steps = 0;
        while self.contradiction.is_none() && !self.queue.is_empty() && steps < step_budget {
            let idx = pick(self.queue.len()).min(self.queue.len() - 1);
            let p = self.queue.remove(idx).expect("index in range");
            self.queued[p] = false;
            steps += 1;
            self.steps_total += 1;
            self.fire(p);
        }
        if self.contradiction.is_some() {
            self.queue.clear();
            self.queued.iter_mut().for_each(|q| *q = false);
        }
        QuiescenceReport {
            steps_used: steps,
            quiescent: self.queue.is_empty(),
            contradiction: self.contradiction,
        }
    }

    /// Whether every literal holds.
    pub fn guard_holds(&self, guard: &[Literal]) -> bool {
        guard.iter().all(|l| l.holds(&self.cells[l.cell].content))
    }

    /// Whether some literal can no longer hold.
    pub fn guard_refuted(&self, guard: &[Literal]) -> bool {
        guard.iter().any(|l| l.refuted(&self.cells[l.cell].content))
    }

    fn fire(&mut self, p: PropId) {
        let prop = &self.props[p];
        if prop.retired || !self.guard_holds(&prop.guard) {
            return;
        }
        let writes = prop.kind.transfer(|c| &self.cells[c].content);
        self.running = Some(p);
        for w in writes {
            self.write_counter += 1;
            let id = self.write_counter;
            self.apply_write(w.cell, w.info, id, w.saturated);
            if self.contradiction.is_some() {
                break;
            }
        }
        self.running = None;
    }
}

/// Helper for building exact numeric writes.
pub fn exact(n: Number) -> PartialInfo {
    PartialInfo::Exact(n)
}
