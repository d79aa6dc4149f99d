//! Copying snapshots of whole instances.

use std::collections::HashMap;

use crate::language::Instance;

use super::SearchError;

pub type SnapshotId = u64;

/// Stores full copies of instances. Restoring hands out a fresh clone, so a
/// snapshot can be restored any number of times.
#[derive(Debug, Default)]
pub struct SnapshotStore {
    next: SnapshotId,
    snaps: HashMap<SnapshotId, Instance>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&mut self, inst: &Instance) -> SnapshotId {
        let id = self.next;
        self.next += 1;
        self.snaps.insert(id, inst.clone());
        id
    }

    pub fn restore(&self, id: SnapshotId) -> Result<Instance, SearchError> {
        self.snaps.get(&id).cloned().ok_or(SearchError::UnknownSnapshot(id))
    }

    pub fn release(&mut self, id: SnapshotId) {
        self.snaps.remove(&id);
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::language::{exact_int, instantiate, parse};

    fn instance() -> Instance {
        let p = Arc::new(parse("(def (m a b c) (sum a b c))").unwrap());
        let mut inst = instantiate(p, "m", &[("a".into(), exact_int(1))]).unwrap();
        inst.network.run_to_quiescence(100);
        inst
    }

    #[test]
    fn restore_undoes_writes() {
        let mut store = SnapshotStore::new();
        let mut inst = instance();
        let b = inst.root_cell("b").unwrap();
        let id = store.snapshot(&inst);
        inst.network.write(b, exact_int(5)).unwrap();
        let back = store.restore(id).unwrap();
        assert!(back.content(b).is_nothing());
        assert_eq!(back.network.cell_count(), inst.network.cell_count());
    }

    #[test]
    fn interleaved_snapshots_are_independent() {
        let mut store = SnapshotStore::new();
        let mut inst = instance();
        let b = inst.root_cell("b").unwrap();
        let first = store.snapshot(&inst);
        inst.network.write(b, exact_int(2)).unwrap();
        let second = store.snapshot(&inst);
        inst.network.write(b, exact_int(3)).unwrap();
        assert!(store.restore(first).unwrap().content(b).is_nothing());
        assert_eq!(store.restore(second).unwrap().content(b), &exact_int(2));
        assert!(store.restore(first).unwrap().content(b).is_nothing());
    }

    #[test]
    fn restored_quiescent_instance_stays_quiescent() {
        let mut store = SnapshotStore::new();
        let inst = instance();
        let id = store.snapshot(&inst);
        let mut back = store.restore(id).unwrap();
        assert_eq!(back.network.run_to_quiescence(100).steps_used, 0);
    }

    #[test]
    fn unknown_snapshot() {
        let mut store = SnapshotStore::new();
        let id = store.snapshot(&instance());
        store.release(id);
        assert!(matches!(store.restore(id), Err(SearchError::UnknownSnapshot(_))));
    }
}
