//! Autoencoders attached along the frame tree.
//!
//! Every frame is summarized by a fixed-length feature vector and encoded by
//! the autoencoder of its definition, shared by all frames of that
//! definition. Codes along a root-to-leaf path are folded through a
//! [`SpineTree`], adjacent frames can be combined by a pairwise bridge, and a
//! per-definition memory of codes labelled success or deadend turns the
//! whole thing into a [`BranchOracle`]. Codes are advisory only: nothing here
//! writes into the network.

mod bundle;
mod spine;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::autoenc::{self, AutoencError, Autoencoder, Code, Hyper, Loss};
use crate::language::{ExpansionState, FrameId, GateStatus, Instance, FRONTIER_REFERENCE_WIDTH};
use crate::lattice::{info_bits, merge, PartialInfo, MAX_INFO_BITS};
use crate::network::CellId;
use crate::rng::SeededRng;
use crate::search::{BranchDescriptor, BranchOracle};

pub use bundle::{load_bundle, save_bundle, BundleError, Manifest, MANIFEST_FILE};
pub use spine::{Combine, SpineNode, SpineTree};
pub use trace::{frame_tree_dump, BranchOutcome, SolverTrace, TraceRecorder};

pub const FEATURES: usize = 16;
pub const FEATURE_SCHEMA_VERSION: u32 = 1;
const SLOTS: usize = 3;
const PER_CELL: usize = 5;

/// Fixed-size description of a frame's boundary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures(pub [f64; FEATURES]);

impl FrameFeatures {
    fn key(&self) -> [u64; FEATURES] {
        self.0.map(f64::to_bits)
    }
}

fn squash(v: f64) -> f64 {
    v.signum() * (1.0 + v.abs()).log2() / 64.0
}

fn cell_features(info: &PartialInfo) -> [f64; PER_CELL] {
    if info.is_contradiction() {
        return [0.0, 1.0, 0.0, 0.0, 1.0];
    }
    let decided = info.exact().is_some() as u8 as f64;
    let bits = info_bits(info, FRONTIER_REFERENCE_WIDTH) / MAX_INFO_BITS;
    let (lo, hi) = info.bounds().map(|(l, h)| (squash(l).max(-1.0), squash(h).min(1.0))).unwrap_or((-1.0, 1.0));
    [decided, bits.clamp(0.0, 1.0), lo, hi, 0.0]
}

/// Features of `frame`, optionally pretending one cell holds extra information.
pub fn featurize_with(inst: &Instance, frame: FrameId, refine: Option<(CellId, &PartialInfo)>) -> FrameFeatures {
    let f = &inst.frames[frame];
    let content = |c: CellId| -> PartialInfo {
        match refine {
            Some((cell, extra)) if cell == c => merge(inst.content(c), extra),
            _ => inst.content(c).clone(),
        }
    };
    let mut out = [0.0; FEATURES];
    let cells: Vec<[f64; PER_CELL]> = f.boundary.iter().map(|&c| cell_features(&content(c))).collect();
    for (slot, chunk) in out.chunks_mut(PER_CELL).take(SLOTS).enumerate() {
        let group: &[[f64; PER_CELL]] = if slot + 1 < SLOTS {
            cells.get(slot..slot + 1).unwrap_or(&[])
        } else {
            cells.get(slot..).unwrap_or(&[])
        };
        if group.is_empty() {
            continue;
        }
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = group.iter().map(|c| c[k]).sum::<f64>() / group.len() as f64;
        }
    }
    out[FEATURES - 1] = (f.depth as f64 / 1024.0).min(1.0);
    FrameFeatures(out)
}

pub fn featurize(inst: &Instance, frame: FrameId) -> FrameFeatures {
    featurize_with(inst, frame, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Success,
    Deadend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub label: Label,
    pub features: FrameFeatures,
    pub code: Code,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub hidden: usize,
    pub code: usize,
    pub hyper: Hyper,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig { hidden: 24, code: 8, hyper: Hyper::default(), epochs: 60, seed: 0 }
    }
}

/// Stable 64-bit FNV-1a, for deriving per-name seeds.
fn name_salt(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Debug, Clone, Default)]
pub struct AugmentationTree {
    pub config: HierarchyConfig,
    /// One frame encoder per definition, shared by all its frames.
    pub encoders: BTreeMap<String, Autoencoder>,
    /// Keyed by (parent definition, child definition); `2K → K`.
    pub bridges: BTreeMap<(String, String), Autoencoder>,
    /// Internal nodes of spine trees; `2K → K`.
    pub spine_bridges: BTreeMap<String, Autoencoder>,
    pub codes: BTreeMap<FrameId, Code>,
    pub memory: BTreeMap<String, Vec<MemoryEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLoss {
    pub samples: usize,
    pub initial: f64,
    #[serde(rename = "final")]
    pub last: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingReport {
    pub batches: usize,
    pub encoders: BTreeMap<String, ModelLoss>,
    pub bridges: BTreeMap<String, ModelLoss>,
    pub spine_bridges: BTreeMap<String, ModelLoss>,
    pub memory: BTreeMap<String, BTreeMap<Label, usize>>,
}

fn concat(a: &Code, b: &Code) -> Vec<f64> {
    a.0.iter().chain(&b.0).copied().collect()
}

fn masked_distance(a: &Code, b: &Code, mask: &[bool]) -> f64 {
    a.0.iter().zip(&b.0).zip(mask).filter(|(_, &m)| m).map(|((x, y), _)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl AugmentationTree {
    pub fn new(config: HierarchyConfig) -> Self {
        AugmentationTree { config, ..Default::default() }
    }

    fn fresh(&self, features: usize, salt: &str) -> Autoencoder {
        let mut rng = SeededRng::new(self.config.seed ^ name_salt(salt));
        Autoencoder::new(features, self.config.hidden, self.config.code, self.config.hyper, &mut rng)
    }

    /// Creates the shared encoder for a definition if it has none yet.
    pub fn ensure_encoder(&mut self, definition: &str) -> &Autoencoder {
        if !self.encoders.contains_key(definition) {
            let ae = self.fresh(FEATURES, definition);
            self.encoders.insert(definition.to_string(), ae);
        }
        &self.encoders[definition]
    }

    /// Creates encoders for every definition that has an expanded frame.
    pub fn attach(&mut self, inst: &Instance) {
        let defs: BTreeSet<String> = inst
            .frames
            .iter()
            .filter(|f| f.state != ExpansionState::Unexpanded)
            .map(|f| f.definition.clone())
            .collect();
        for d in defs {
            self.ensure_encoder(&d);
        }
    }

    pub fn encoder_for(&self, inst: &Instance, frame: FrameId) -> Option<&Autoencoder> {
        self.encoders.get(&inst.frames[frame].definition)
    }

    fn code_of(&self, inst: &Instance, frame: FrameId) -> Code {
        match self.encoder_for(inst, frame) {
            Some(ae) => ae.encode(&featurize(inst, frame).0).expect("feature width matches"),
            None => Code(vec![0.0; self.config.code]),
        }
    }

    /// Encodes a frame with its definition's shared encoder and stores the code.
    pub fn encode_frame(&mut self, inst: &Instance, frame: FrameId) -> Code {
        let def = inst.frames[frame].definition.clone();
        self.ensure_encoder(&def);
        let code = self.code_of(inst, frame);
        self.codes.insert(frame, code.clone());
        code
    }

    /// Code of a parent/child pair through their bridge.
    pub fn bridge_code(&self, inst: &Instance, parent: FrameId, child: FrameId) -> Option<Code> {
        let key = (inst.frames[parent].definition.clone(), inst.frames[child].definition.clone());
        let bridge = self.bridges.get(&key)?;
        let input = concat(&self.code_of(inst, parent), &self.code_of(inst, child));
        bridge.encode(&input).ok()
    }

    fn spine_combine<'a>(&'a self, definition: &str) -> impl Fn(&Code, &Code) -> Code + 'a {
        let bridge = self.spine_bridges.get(definition);
        let k = self.config.code;
        move |a: &Code, b: &Code| match bridge {
            Some(ae) => ae.encode(&concat(a, b)).expect("bridge width matches"),
            None => Code(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) / 2.0).chain(std::iter::repeat(0.0)).take(k).collect()),
        }
    }

    /// Frames from the root down to `leaf`.
    pub fn path(inst: &Instance, leaf: FrameId) -> Vec<FrameId> {
        let mut path = vec![leaf];
        while let Some(p) = inst.frames[*path.last().unwrap()].parent {
            path.push(p);
        }
        path.reverse();
        path
    }

    /// Spine tree over the root-to-`leaf` path, built by pushing frames in depth order.
    pub fn spine(&mut self, inst: &Instance, leaf: FrameId) -> SpineTree {
        let path = Self::path(inst, leaf);
        let codes: Vec<Code> = path.iter().map(|&f| self.encode_frame(inst, f)).collect();
        let def = inst.frames[leaf].definition.clone();
        let combine = self.spine_combine(&def);
        let mut tree = SpineTree::new();
        for c in codes {
            tree.push(c, &combine);
        }
        tree
    }

    /// Root code of the spine over the path ending at `leaf`, and the number
    /// of bridge applications between `leaf` and that root.
    pub fn compose_path(&mut self, inst: &Instance, leaf: FrameId) -> (Code, usize) {
        let tree = self.spine(inst, leaf);
        let hops = tree.hops_from(tree.len() - 1);
        (tree.root().cloned().expect("path is never empty"), hops)
    }

    fn mask(&self, definition: &str) -> Vec<bool> {
        self.encoders.get(definition).map(|ae| ae.active_mask.clone()).unwrap_or_else(|| vec![true; self.config.code])
    }

    /// Distance between two frames' codes over the code units active for both.
    pub fn similarity(&mut self, inst: &Instance, a: FrameId, b: FrameId) -> f64 {
        let (ca, cb) = (self.encode_frame(inst, a), self.encode_frame(inst, b));
        let ma = self.mask(&inst.frames[a].definition);
        let mb = self.mask(&inst.frames[b].definition);
        let both: Vec<bool> = ma.iter().zip(&mb).map(|(x, y)| *x && *y).collect();
        masked_distance(&ca, &cb, &both)
    }

    /// Stores the current state of `frame` in its definition's memory.
    pub fn record_outcome(&mut self, inst: &Instance, frame: FrameId, label: Label) {
        let def = inst.frames[frame].definition.clone();
        let features = featurize(inst, frame);
        let code = self.encode_frame(inst, frame);
        self.remember(&def, MemoryEntry { label, features, code });
    }

    fn remember(&mut self, definition: &str, entry: MemoryEntry) {
        let list = self.memory.entry(definition.to_string()).or_default();
        if !list.iter().any(|e| e.label == entry.label && e.features.key() == entry.features.key()) {
            list.push(entry);
        }
    }

    pub fn memory_len(&self) -> usize {
        self.memory.values().map(Vec::len).sum()
    }

    /// Trains encoders, bridges and spine bridges on recorded traces and
    /// rebuilds the memory with the trained encoders.
    pub fn train_from_traces(&mut self, traces: &[SolverTrace], seed: u64) -> Result<TrainingReport, AutoencError> {
        let mut report = TrainingReport::default();
        if traces.iter().all(SolverTrace::is_empty) {
            return Ok(report);
        }
        self.config.seed = seed;
        let epochs = self.config.epochs;
        let batch = self.config.hyper.batch_size.max(1);
        let mut batches = 0;
        let mut fit = |ae: &mut Autoencoder, data: &[Vec<f64>], salt: &str| -> Result<ModelLoss, AutoencError> {
            let r = autoenc::train(ae, data, epochs, seed ^ name_salt(salt))?;
            batches += epochs * data.len().div_ceil(batch);
            Ok(ModelLoss { samples: data.len(), initial: r.initial.total, last: r.final_loss().total })
        };

        let mut states: BTreeMap<String, (BTreeSet<[u64; FEATURES]>, Vec<Vec<f64>>)> = BTreeMap::new();
        for t in traces {
            for (def, f) in t.states.iter().map(|(d, f)| (d, f)).chain(t.outcomes.iter().map(|o| (&o.definition, &o.features))) {
                let (seen, data) = states.entry(def.clone()).or_default();
                if seen.insert(f.key()) {
                    data.push(f.0.to_vec());
                }
            }
        }
        for (def, (_, data)) in &states {
            self.ensure_encoder(def);
            let mut ae = self.encoders[def].clone();
            let loss = fit(&mut ae, data, def)?;
            self.encoders.insert(def.clone(), ae);
            report.encoders.insert(def.clone(), loss);
        }

        let encode = |tree: &Self, def: &str, f: &FrameFeatures| -> Code {
            tree.encoders[def].encode(&f.0).expect("feature width matches")
        };
        let mut pair_data: BTreeMap<(String, String), Vec<Vec<f64>>> = BTreeMap::new();
        let mut spine_data: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for t in traces {
            for p in &t.links {
                let joined = concat(&encode(self, &p.parent, &p.parent_features), &encode(self, &p.child, &p.child_features));
                pair_data.entry((p.parent.clone(), p.child.clone())).or_default().push(joined.clone());
                spine_data.entry(p.child.clone()).or_default().push(joined);
            }
        }
        for (key, data) in &pair_data {
            let name = format!("{}>{}", key.0, key.1);
            let mut ae = self.bridges.get(key).cloned().unwrap_or_else(|| self.fresh(2 * self.config.code, &name));
            report.bridges.insert(name.clone(), fit(&mut ae, data, &name)?);
            self.bridges.insert(key.clone(), ae);
        }
        for (def, data) in &spine_data {
            let name = format!("spine:{def}");
            let mut ae = self.spine_bridges.get(def).cloned().unwrap_or_else(|| self.fresh(2 * self.config.code, &name));
            report.spine_bridges.insert(def.clone(), fit(&mut ae, data, &name)?);
            self.spine_bridges.insert(def.clone(), ae);
        }
        drop(fit);
        report.batches = batches;

        let old = std::mem::take(&mut self.memory);
        let previous = old.into_iter().flat_map(|(d, v)| v.into_iter().map(move |e| (d.clone(), e.label, e.features)));
        let fresh = traces.iter().flat_map(|t| t.outcomes.iter().map(|o| (o.definition.clone(), o.label, o.features)));
        for (def, label, features) in previous.chain(fresh).collect::<Vec<_>>() {
            self.ensure_encoder(&def);
            let code = encode(self, &def, &features);
            self.remember(&def, MemoryEntry { label, features, code });
        }
        for (def, list) in &self.memory {
            let counts = report.memory.entry(def.clone()).or_default();
            for e in list {
                *counts.entry(e.label).or_default() += 1;
            }
        }
        self.codes.clear();
        Ok(report)
    }

    /// Loss of every frame encoder on its definition's memory features.
    pub fn memory_loss(&self) -> BTreeMap<String, Loss> {
        self.memory
            .iter()
            .filter_map(|(d, list)| {
                let ae = self.encoders.get(d)?;
                let data: Vec<Vec<f64>> = list.iter().map(|e| e.features.0.to_vec()).collect();
                Some((d.clone(), ae.loss(&data).ok()?))
            })
            .collect()
    }
}

impl BranchOracle for AugmentationTree {
    /// Distance to the nearest deadend minus distance to the nearest success,
    /// for the frame's features with each candidate applied.
    fn scores(&self, inst: &Instance, frame: FrameId, candidates: &[BranchDescriptor]) -> Vec<f64> {
        let def = &inst.frames[frame].definition;
        let (Some(ae), Some(memory)) = (self.encoders.get(def), self.memory.get(def)) else {
            return vec![0.0; candidates.len()];
        };
        if memory.is_empty() || inst.gate_status(frame) == GateStatus::Refuted {
            return vec![0.0; candidates.len()];
        }
        let mask = &ae.active_mask;
        let nearest = |code: &Code, label: Label| -> Option<f64> {
            memory.iter().filter(|e| e.label == label).map(|e| masked_distance(code, &e.code, mask)).min_by(f64::total_cmp)
        };
        candidates
            .iter()
            .map(|c| {
                let features = featurize_with(inst, frame, Some((c.cell, &c.refinement)));
                let code = ae.encode(&features.0).expect("feature width matches");
                let s = nearest(&code, Label::Deadend).unwrap_or(0.0) - nearest(&code, Label::Success).unwrap_or(0.0);
                if s.is_finite() {
                    s
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::language::{demand_loop, exact_int, instantiate, parse, FACTORIAL};

    fn fact(n: Option<i64>, depth: u64) -> Instance {
        let p = Arc::new(parse(FACTORIAL).unwrap());
        let b: Vec<(String, PartialInfo)> = n.map(|n| ("n".to_string(), exact_int(n))).into_iter().collect();
        let mut inst = instantiate(p, "fact", &b).unwrap();
        let r = inst.root_cell("r").unwrap();
        demand_loop(&mut inst, &[r], 0.0, depth, 1_000_000);
        inst
    }

    #[test]
    fn fresh_frame_only_has_depth_feature() {
        let p = Arc::new(parse(FACTORIAL).unwrap());
        let inst = instantiate(p, "fact", &[]).unwrap();
        let f = featurize(&inst, 0).0;
        for slot in 0..2 {
            assert_eq!(f[slot * 5], 0.0);
            assert_eq!(f[slot * 5 + 1], 0.0);
        }
        assert_eq!(f[FEATURES - 1], 0.0);
        assert!(f.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn decided_frame_flags() {
        let inst = fact(Some(3), 100);
        let f = featurize(&inst, 2).0;
        assert_eq!((f[0], f[5]), (1.0, 1.0));
        assert_eq!(featurize(&inst, 2), featurize(&inst, 2));
        assert!((f[FEATURES - 1] - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn shared_encoder_gives_equal_codes_for_equal_states() {
        let inst = fact(None, 4);
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        tree.attach(&inst);
        assert_eq!(tree.encoders.len(), 1);
        let a = tree.encode_frame(&inst, 1);
        assert_eq!(a.len(), 8);
        // frames 1 and 2 differ only in depth
        let mut twin = inst.clone();
        twin.frames[2].depth = twin.frames[1].depth;
        assert_eq!(featurize(&inst, 1), featurize(&twin, 2));
        assert_eq!(tree.encode_frame(&twin, 2), a);
    }

    #[test]
    fn zero_encoder_gives_zero_code() {
        let inst = fact(Some(2), 100);
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        tree.encoders.insert("fact".into(), Autoencoder::zeros(FEATURES, 24, 8, Hyper::default()));
        assert_eq!(tree.encode_frame(&inst, 1), Code(vec![0.0; 8]));
    }

    #[test]
    fn compose_single_frame_path() {
        let p = Arc::new(parse(FACTORIAL).unwrap());
        let inst = instantiate(p, "fact", &[]).unwrap();
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        let (code, hops) = tree.compose_path(&inst, 0);
        assert_eq!(hops, 0);
        assert_eq!(code, tree.encode_frame(&inst, 0));
    }

    #[test]
    fn compose_path_hops_are_logarithmic() {
        let inst = fact(Some(20), 100);
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        let leaf = inst.frames.iter().filter(|f| f.state == ExpansionState::Expanded).map(|f| f.id).max().unwrap();
        let d = AugmentationTree::path(&inst, leaf).len();
        assert_eq!(d, 21);
        let (_, hops) = tree.compose_path(&inst, leaf);
        assert!(hops <= 6);
    }

    #[test]
    fn similarity_is_a_symmetric_distance() {
        let inst = fact(Some(5), 100);
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        assert_eq!(tree.similarity(&inst, 2, 2), 0.0);
        assert_eq!(tree.similarity(&inst, 1, 3), tree.similarity(&inst, 3, 1));
    }

    #[test]
    fn empty_memory_scores_zero() {
        let inst = fact(Some(2), 100);
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        tree.attach(&inst);
        let n = inst.frames[0].cell("n").unwrap();
        let c = vec![BranchDescriptor { cell: n, refinement: exact_int(2), frame: 0 }; 3];
        assert_eq!(tree.scores(&inst, 0, &c), vec![0.0; 3]);
    }

    #[test]
    fn empty_traces_train_nothing() {
        let mut tree = AugmentationTree::new(HierarchyConfig::default());
        let report = tree.train_from_traces(&[SolverTrace::default()], 3).unwrap();
        assert_eq!(report.batches, 0);
        assert!(tree.encoders.is_empty());
    }
}
