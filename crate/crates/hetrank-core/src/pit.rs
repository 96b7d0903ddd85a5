//! Gap tree over a sorted list.
//!
//! For a list of `n` items kept worst-to-best, the tree's `n + 1` leaves are
//! the insertion gaps — including the open gaps below the worst and above the
//! best item. An interior node spans a contiguous run of gaps and stores the
//! list position (`mid`) whose comparison decides which half an incoming item
//! falls into. The tree is rebuilt from scratch for each list it serves; it
//! never mutates in place.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Boundary of a gap span: a list position, or one of the two open ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    /// Below position 0 (worse than every listed item).
    BelowAll,
    /// At the item holding this list position.
    At(usize),
    /// Above the last position (better than every listed item).
    AboveAll,
}

/// Index of a node in a [`Pit`]'s arena. The root is always node 0 and nodes
/// are numbered in breadth-first order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
pub struct PitNode {
    pub left: Bound,
    pub right: Bound,
    /// Decision position; present on every node that has children.
    pub mid: Option<usize>,
    pub parent: Option<NodeId>,
    pub lchild: Option<NodeId>,
    pub rchild: Option<NodeId>,
}

impl PitNode {
    pub fn is_leaf(&self) -> bool {
        self.lchild.is_none()
    }
}

/// Gap tree over a sorted list of `len` items. See the module docs.
#[derive(Debug, Clone)]
pub struct Pit {
    nodes: Vec<PitNode>,
    len: usize,
}

/// Smallest depth bound for the tree over `len` items: `⌈1 + log2(1 + len)⌉`,
/// counting the root as depth 1.
pub fn height_bound(len: usize) -> u32 {
    assert!(len > 0, "the tree needs at least one item");
    let gaps = len + 1;
    let levels_below_root = usize::BITS - (gaps - 1).leading_zeros();
    levels_below_root + 1
}

/// Build the gap tree for a sorted list of `len` items.
pub fn build_pit(len: usize) -> Result<Pit> {
    if len == 0 {
        return Err(Error::EmptyItemList);
    }
    // Work in signed coordinates where -1 and `len` stand for the open ends,
    // then translate to `Bound`s once the shape is fixed.
    struct Raw {
        left: i64,
        right: i64,
        parent: Option<NodeId>,
        lchild: Option<NodeId>,
        rchild: Option<NodeId>,
    }
    let mut raw = vec![Raw {
        left: -1,
        right: len as i64,
        parent: None,
        lchild: None,
        rchild: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        let (l, r) = (raw[idx].left, raw[idx].right);
        if r - l > 1 {
            let m = (l + r).div_euclid(2);
            let lchild = raw.len();
            raw.push(Raw {
                left: l,
                right: m,
                parent: Some(NodeId(idx)),
                lchild: None,
                rchild: None,
            });
            let rchild = raw.len();
            raw.push(Raw {
                left: m,
                right: r,
                parent: Some(NodeId(idx)),
                lchild: None,
                rchild: None,
            });
            raw[idx].lchild = Some(NodeId(lchild));
            raw[idx].rchild = Some(NodeId(rchild));
            queue.push_back(lchild);
            queue.push_back(rchild);
        }
    }
    let bound = |v: i64| -> Bound {
        if v < 0 {
            Bound::BelowAll
        } else if v == len as i64 {
            Bound::AboveAll
        } else {
            Bound::At(v as usize)
        }
    };
    let nodes = raw
        .iter()
        .map(|n| PitNode {
            left: bound(n.left),
            right: bound(n.right),
            mid: n
                .lchild
                .map(|_| ((n.left + n.right).div_euclid(2)) as usize),
            parent: n.parent,
            lchild: n.lchild,
            rchild: n.rchild,
        })
        .collect();
    Ok(Pit { nodes, len })
}

impl Pit {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &PitNode {
        &self.nodes[id.0]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of items the tree was built over.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len())
            .map(NodeId)
            .filter(|&id| self.node(id).is_leaf())
    }

    /// List index at which an item certified into `leaf` gets inserted: the
    /// new item then sits strictly between the leaf's two boundaries.
    pub fn leaf_interval_to_position(&self, leaf: NodeId) -> Result<usize> {
        let node = self.node(leaf);
        if !node.is_leaf() {
            return Err(Error::NotALeaf(leaf.0));
        }
        Ok(match node.left {
            Bound::BelowAll => 0,
            Bound::At(k) => k + 1,
            Bound::AboveAll => unreachable!("a leaf's left bound cannot be the upper end"),
        })
    }

    /// Depth of the deepest node, counting the root as 1.
    pub fn depth(&self) -> u32 {
        let mut depth = vec![1u32; self.nodes.len()];
        let mut max = 1;
        for idx in 1..self.nodes.len() {
            let parent = self.nodes[idx].parent.expect("non-root nodes have parents");
            depth[idx] = depth[parent.0] + 1;
            max = max.max(depth[idx]);
        }
        max
    }
}
