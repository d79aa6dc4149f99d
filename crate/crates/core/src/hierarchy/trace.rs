//! Recording what a search saw, for training, and dumping frame structure.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::language::{ExpansionState, FrameId, GateStatus, Instance};
use crate::search::{BranchDescriptor, SearchObserver};

use super::{featurize, featurize_with, AugmentationTree, FrameFeatures, Label, FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLink {
    pub parent: String,
    pub child: String,
    pub parent_features: FrameFeatures,
    pub child_features: FrameFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub definition: String,
    pub features: FrameFeatures,
    pub label: Label,
}

/// Distinct frame states, parent/child pairs and labelled outcomes seen
/// during one search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverTrace {
    pub states: Vec<(String, FrameFeatures)>,
    pub links: Vec<FrameLink>,
    pub outcomes: Vec<BranchOutcome>,
}

impl SolverTrace {
    pub fn is_empty(&self) -> bool {
        self.states.is_empty() && self.links.is_empty() && self.outcomes.is_empty()
    }
}

type Key = [u64; FEATURES];

/// A [`SearchObserver`] that fills a [`SolverTrace`].
///
/// A branch's hypothetical frame state is labelled success when its subtree
/// produced a solution and deadend otherwise; every live frame of a
/// solution is labelled success as well.
#[derive(Debug, Default)]
pub struct TraceRecorder {
    pub trace: SolverTrace,
    seen_states: BTreeSet<(String, Key)>,
    seen_links: BTreeSet<(String, String, Key, Key)>,
    seen_outcomes: BTreeSet<(String, Key, Label)>,
    pending: Vec<(String, FrameFeatures)>,
}

impl TraceRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(self) -> SolverTrace {
        self.trace
    }

    fn outcome(&mut self, definition: String, features: FrameFeatures, label: Label) {
        if self.seen_outcomes.insert((definition.clone(), features.key(), label)) {
            self.trace.outcomes.push(BranchOutcome { definition, features, label });
        }
    }
}

impl SearchObserver for TraceRecorder {
    fn on_node(&mut self, inst: &Instance) {
        let features: Vec<FrameFeatures> = (0..inst.frames.len()).map(|f| featurize(inst, f)).collect();
        for (f, frame) in inst.frames.iter().enumerate() {
            if self.seen_states.insert((frame.definition.clone(), features[f].key())) {
                self.trace.states.push((frame.definition.clone(), features[f]));
            }
            if let Some(p) = frame.parent {
                let parent = &inst.frames[p].definition;
                let key = (parent.clone(), frame.definition.clone(), features[p].key(), features[f].key());
                if self.seen_links.insert(key) {
                    self.trace.links.push(FrameLink {
                        parent: parent.clone(),
                        child: frame.definition.clone(),
                        parent_features: features[p],
                        child_features: features[f],
                    });
                }
            }
        }
    }

    fn on_branch(&mut self, inst: &Instance, frame: FrameId, choice: &BranchDescriptor) -> u64 {
        let features = featurize_with(inst, frame, Some((choice.cell, &choice.refinement)));
        self.pending.push((inst.frames[frame].definition.clone(), features));
        (self.pending.len() - 1) as u64
    }

    fn on_branch_done(&mut self, token: u64, succeeded: bool) {
        let (def, features) = self.pending[token as usize].clone();
        self.outcome(def, features, if succeeded { Label::Success } else { Label::Deadend });
    }

    fn on_solution(&mut self, inst: &Instance) {
        for f in 0..inst.frames.len() {
            if inst.gate_status(f) == GateStatus::Open && inst.frames[f].state != ExpansionState::Unexpanded {
                self.outcome(inst.frames[f].definition.clone(), featurize(inst, f), Label::Success);
            }
        }
    }
}

/// Both tree structures of an instance: the frame tree, and the spine tree
/// over the deepest root-to-leaf path of expanded frames.
pub fn frame_tree_dump(inst: &Instance, tree: &mut AugmentationTree) -> Value {
    let frames: Vec<Value> = inst
        .frames
        .iter()
        .map(|f| {
            json!({
                "id": f.id,
                "parent": f.parent,
                "definition": f.definition,
                "depth": f.depth,
                "state": f.state,
            })
        })
        .collect();
    let leaf = inst
        .frames
        .iter()
        .filter(|f| f.state != ExpansionState::Unexpanded)
        .max_by_key(|f| (f.depth, std::cmp::Reverse(f.id)))
        .map(|f| f.id)
        .unwrap_or(0);
    let spine = tree.spine(inst, leaf);
    json!({
        "frames": frames,
        "spine": {
            "leaf": leaf,
            "length": spine.len(),
            "height": spine.height(),
            "hops": spine.hops_from(spine.len() - 1),
            "shape": spine.shape(),
        },
    })
}
