//! Storage management rooted at the query's cells.
//!
//! A frame whose boundary is fully decided, whose subtree has nothing left to
//! expand or choose, and which holds no query root can lose its interior: the
//! boundary is exact, so nothing outside can learn anything more from inside.

use serde::Serialize;

use crate::language::{ExpansionState, FrameId, GateStatus, Instance};
use crate::network::CellId;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SummarizationReport {
    pub summarized: Vec<FrameId>,
    pub cells_dropped: usize,
    pub propagators_retired: usize,
}

fn settled(inst: &Instance, id: FrameId, roots: &[CellId], ok: &[bool]) -> bool {
    let f = &inst.frames[id];
    if f.parent.is_none() || f.state == ExpansionState::Unexpanded {
        return false;
    }
    if f.state == ExpansionState::Summarized {
        return true;
    }
    if inst.gate_status(id) == GateStatus::Undecided {
        return false;
    }
    if !f.boundary.iter().all(|&c| inst.content(c).exact().is_some()) {
        return false;
    }
    if f.cells.values().any(|c| roots.contains(c)) {
        return false;
    }
    let undecided_choice = inst
        .choices
        .iter()
        .any(|c| c.frame == id && inst.content(c.cell).exact().is_none() && !inst.network.guard_refuted(&c.guard));
    if undecided_choice {
        return false;
    }
    f.children.iter().all(|&child| {
        let cf = &inst.frames[child];
        match cf.state {
            ExpansionState::Unexpanded => inst.gate_status(child) == GateStatus::Refuted,
            _ => ok[child],
        }
    })
}

fn mark_subtree(inst: &mut Instance, id: FrameId, report: &mut SummarizationReport) {
    let children = inst.frames[id].children.clone();
    for c in children {
        if inst.frames[c].state != ExpansionState::Summarized {
            mark_subtree(inst, c, report);
        }
    }
    if inst.frames[id].state == ExpansionState::Summarized {
        return;
    }
    let was_expanded = inst.frames[id].state == ExpansionState::Expanded;
    let props = std::mem::take(&mut inst.frames[id].interior_props);
    let cells = std::mem::take(&mut inst.frames[id].interior_cells);
    for p in props {
        if inst.network.retire(p).is_ok() {
            report.propagators_retired += 1;
        }
    }
    for &c in &cells {
        inst.network.drop_cell(c);
    }
    report.cells_dropped += cells.len();
    let f = &mut inst.frames[id];
    let boundary: Vec<_> = f.boundary.clone();
    f.cells.retain(|_, c| boundary.contains(c));
    f.state = ExpansionState::Summarized;
    if was_expanded {
        report.summarized.push(id);
    }
}

/// Summarizes every settled frame. Does nothing unless the network is
/// quiescent and contradiction-free.
pub fn collect_garbage(inst: &mut Instance, roots: &[CellId]) -> SummarizationReport {
    let mut report = SummarizationReport::default();
    if !inst.network.is_quiescent() || inst.network.contradiction().is_some() {
        return report;
    }
    // Children always have larger ids than their parents.
    let mut ok = vec![false; inst.frames.len()];
    for id in (0..inst.frames.len()).rev() {
        ok[id] = settled(inst, id, roots, &ok);
    }
    // Summarize maximal settled subtrees from the top down.
    for id in 0..inst.frames.len() {
        let parent_ok = inst.frames[id].parent.is_some_and(|p| ok[p]);
        if ok[id] && !parent_ok && inst.frames[id].state != ExpansionState::Summarized {
            mark_subtree(inst, id, &mut report);
        }
    }
    report.summarized.sort_unstable();
    report
}
