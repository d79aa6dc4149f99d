//! Balanced binary tree over the frames of one recursion path.
//!
//! Leaves sit in a power-of-two sized segment tree. When a push fills the
//! capacity, the whole tree becomes the left child of a new root, so the
//! height is always `ceil(log2 d)` for `d` leaves and a push touches one
//! leaf-to-root path.

use serde::Serialize;

use crate::autoenc::Code;

/// Combines a left and right code into one.
pub trait Combine {
    fn combine(&self, left: &Code, right: &Code) -> Code;
}

impl<F: Fn(&Code, &Code) -> Code> Combine for F {
    fn combine(&self, left: &Code, right: &Code) -> Code {
        self(left, right)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SpineTree {
    len: usize,
    capacity: usize,
    /// 1-indexed heap layout; leaves at `capacity..2*capacity`.
    nodes: Vec<Option<Code>>,
    /// Number of combine applications below each node on the path to its deepest leaf.
    hops: Vec<usize>,
}

/// Shape of a node, for trace dumps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpineNode {
    pub first: usize,
    pub last: usize,
    pub children: Vec<SpineNode>,
}

impl SpineTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Edges from the root to a leaf.
    pub fn height(&self) -> usize {
        if self.capacity <= 1 {
            0
        } else {
            self.capacity.trailing_zeros() as usize
        }
    }

    fn grow(&mut self) {
        let new_cap = (self.capacity * 2).max(1);
        let mut nodes = vec![None; 2 * new_cap];
        let mut hops = vec![0; 2 * new_cap];
        // Old node at heap index i (level l) moves to the left subtree of the new root.
        let mut level_start = 1;
        while level_start < 2 * self.capacity {
            for i in level_start..2 * level_start {
                nodes[i + level_start] = self.nodes[i].take();
                hops[i + level_start] = self.hops[i];
            }
            level_start *= 2;
        }
        self.capacity = new_cap;
        self.nodes = nodes;
        self.hops = hops;
    }

    /// Appends the next-deeper frame's code and refreshes its ancestors.
    pub fn push(&mut self, code: Code, combine: &dyn Combine) {
        if self.len == self.capacity {
            self.grow();
        }
        let mut i = self.capacity + self.len;
        self.nodes[i] = Some(code);
        self.hops[i] = 0;
        self.len += 1;
        while i > 1 {
            i /= 2;
            let (l, r) = (2 * i, 2 * i + 1);
            let (node, hop) = match (&self.nodes[l], &self.nodes[r]) {
                (Some(a), Some(b)) => (Some(combine.combine(a, b)), 1 + self.hops[l].max(self.hops[r])),
                (Some(a), None) => (Some(a.clone()), self.hops[l]),
                (None, _) => (None, 0),
            };
            self.nodes[i] = node;
            self.hops[i] = hop;
        }
    }

    pub fn root(&self) -> Option<&Code> {
        self.nodes.get(1).and_then(Option::as_ref)
    }

    /// Combine applications on the path from leaf `index` up to the root.
    pub fn hops_from(&self, index: usize) -> usize {
        assert!(index < self.len);
        let mut i = self.capacity + index;
        let mut hops = 0;
        while i > 1 {
            let sibling = i ^ 1;
            if self.nodes[sibling].is_some() {
                hops += 1;
            }
            i /= 2;
        }
        hops
    }

    /// Longest combine chain below the root.
    pub fn max_hops(&self) -> usize {
        if self.capacity <= 1 {
            0
        } else {
            self.hops[1]
        }
    }

    pub fn shape(&self) -> Option<SpineNode> {
        fn build(t: &SpineTree, i: usize, first: usize, width: usize) -> Option<SpineNode> {
            t.nodes[i].as_ref()?;
            if width == 1 {
                return Some(SpineNode { first, last: first, children: Vec::new() });
            }
            let half = width / 2;
            let children: Vec<SpineNode> =
                [build(t, 2 * i, first, half), build(t, 2 * i + 1, first + half, half)].into_iter().flatten().collect();
            if children.len() == 1 {
                return children.into_iter().next();
            }
            let last = children.last().map(|c| c.last).unwrap_or(first);
            Some(SpineNode { first, last, children })
        }
        if self.capacity == 0 {
            return None;
        }
        build(self, 1, 0, self.capacity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(a: &Code, b: &Code) -> Code {
        Code(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    fn leaf(v: f64) -> Code {
        Code(vec![v])
    }

    #[test]
    fn single_leaf_is_root() {
        let mut t = SpineTree::new();
        t.push(leaf(3.0), &sum);
        assert_eq!(t.root(), Some(&leaf(3.0)));
        assert_eq!(t.hops_from(0), 0);
        assert_eq!(t.height(), 0);
    }

    #[test]
    fn root_combines_every_leaf() {
        let mut t = SpineTree::new();
        for i in 1..=13 {
            t.push(leaf(i as f64), &sum);
            assert_eq!(t.root(), Some(&leaf((i * (i + 1) / 2) as f64)));
        }
    }

    #[test]
    fn height_bound_under_incremental_growth() {
        let mut t = SpineTree::new();
        for d in 1..=4096usize {
            t.push(leaf(1.0), &sum);
            let bound = (d as f64).log2().ceil() as usize + 1;
            assert!(t.height() <= bound, "d = {d}");
            assert!(t.hops_from(d - 1) <= bound && t.max_hops() <= bound, "d = {d}");
        }
    }

    #[test]
    fn shape_covers_all_leaves() {
        let mut t = SpineTree::new();
        for _ in 0..5 {
            t.push(leaf(0.0), &sum);
        }
        let s = t.shape().unwrap();
        assert_eq!((s.first, s.last), (0, 4));
        assert_eq!(s.children.len(), 2);
    }
}
