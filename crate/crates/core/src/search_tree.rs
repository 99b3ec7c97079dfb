//! Per-index search trees over the leaf slabs, built from empirical leaf
//! probabilities, supporting single-step advancement and restricted searches.
//!
//! A learned (partial) node splits its interval at a weighted-median leaf so
//! that each side carries at most 2/3 of the parent's empirical mass. Below
//! the count threshold or the depth cap the tree continues as an implicit
//! balanced binary tree, which costs nothing to store.

use crate::distributions::ProductDistribution;
use crate::error::{Error, Result};
use crate::metrics::tally_comparison;
use crate::slabs::{Slab, SlabStructure};
use serde::{Deserialize, Serialize};

/// Per-leaf hit counts for every index over t training samples, with prefix
/// sums for O(1) interval mass queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalFrequencies {
    t: u64,
    /// prefix[i][l] = number of training hits of index i in leaves [0, l).
    prefix: Vec<Vec<u32>>,
}

impl EmpiricalFrequencies {
    pub fn sample_count(&self) -> u64 {
        self.t
    }

    pub fn index_count(&self) -> usize {
        self.prefix.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.prefix.first().map_or(0, |p| p.len() - 1)
    }

    /// Hits of index i in leaves lo..=hi.
    pub fn count(&self, i: usize, lo: usize, hi: usize) -> u64 {
        (self.prefix[i][hi + 1] - self.prefix[i][lo]) as u64
    }

    /// Empirical probability of leaves lo..=hi for index i.
    pub fn q_hat(&self, i: usize, lo: usize, hi: usize) -> f64 {
        self.count(i, lo, hi) as f64 / self.t as f64
    }

    pub fn from_counts(counts: Vec<Vec<u32>>, t: u64) -> Result<Self> {
        for row in &counts {
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != t {
                return Err(Error::InvalidInput(format!(
                    "row sums to {total}, expected {t}"
                )));
            }
        }
        let prefix = counts
            .into_iter()
            .map(|row| {
                let mut p = Vec::with_capacity(row.len() + 1);
                let mut acc = 0u32;
                p.push(0);
                for c in row {
                    acc += c;
                    p.push(acc);
                }
                p
            })
            .collect();
        Ok(EmpiricalFrequencies { t, prefix })
    }
}

/// Record the containing leaf of every index over t fresh training samples
/// starting at `counter0`.
pub fn collect_frequencies(
    dist: &ProductDistribution,
    slabs: &SlabStructure,
    t: u64,
    counter0: u64,
) -> EmpiricalFrequencies {
    let n = dist.len();
    let m = slabs.leaf_count();
    let mut counts = vec![vec![0u32; m]; n];
    for c in 0..t {
        let inst = dist.sample(counter0 + c);
        for (i, p) in inst.points.iter().enumerate() {
            counts[i][slabs.locate_leaf(p.x)] += 1;
        }
    }
    EmpiricalFrequencies::from_counts(counts, t).expect("counts sum to t by construction")
}

// ---------------------------------------------------------------------------
// Construction parameters
// ---------------------------------------------------------------------------

/// Learning-phase constants. The guarantees are asymptotic; these defaults
/// keep the formulas meaningful at desk scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreeParams {
    pub epsilon: f64,
    pub c: f64,
    pub delta: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            epsilon: 0.5,
            c: 8.0,
            delta: 0.5,
        }
    }
}

impl TreeParams {
    /// Training samples for frequency estimation: ceil(c * delta^-2 * n^eps * log2 n).
    pub fn default_sample_count(&self, n: usize) -> u64 {
        let n = n as f64;
        (self.c * self.delta.powi(-2) * n.powf(self.epsilon) * n.log2().max(1.0)).ceil() as u64
    }

    /// Count threshold below which a node becomes balanced-binary:
    /// ceil((c / (10 e delta^2)) * log2 n).
    pub fn min_count(&self, n: usize) -> u64 {
        let v = self.c / (10.0 * std::f64::consts::E * self.delta * self.delta)
            * (n as f64).log2().max(1.0);
        (v.ceil() as u64).max(1)
    }

    /// Partial-tree depth cap: ceil(eps * log2 n).
    pub fn depth_cap(&self, n: usize) -> u32 {
        ((self.epsilon * (n as f64).log2()).ceil() as u32).max(1)
    }
}

// ---------------------------------------------------------------------------
// Tree structure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Child {
    /// Empty side interval.
    None,
    /// Continue as an implicit balanced binary tree over the side interval.
    Balanced,
    /// Stored learned node.
    Node(u32),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Node {
    pub lo: u32,
    pub hi: u32,
    pub split: u32,
    pub left: Child,
    pub right: Child,
}

/// Search tree over the leaf slabs of one index. Only learned nodes are
/// stored; balanced continuations are derived from interval midpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchTree {
    leaf_count: usize,
    root: Child,
    nodes: Vec<Node>,
}

impl SearchTree {
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Stored (partial-tree) node count, for space accounting.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> Child {
        self.root
    }

    pub fn cursor(&self) -> SearchCursor<'_> {
        SearchCursor {
            tree: self,
            state: self.root,
            lo: 0,
            hi: self.leaf_count - 1,
            steps: 0,
        }
    }
}

/// The weighted-median split: smallest leaf whose cumulative mass strictly
/// exceeds a third of the interval mass. Both side intervals then carry at
/// most 2/3 of the parent's mass.
pub fn split_leaf_choice(freq: &EmpiricalFrequencies, i: usize, lo: usize, hi: usize) -> usize {
    let total = freq.count(i, lo, hi);
    let base = freq.prefix[i][lo] as u64;
    // first lambda in [lo, hi] with 3 * F(lambda) > total
    let mut a = lo;
    let mut b = hi;
    while a < b {
        let mid = (a + b) / 2;
        let f = freq.prefix[i][mid + 1] as u64 - base;
        if 3 * f > total {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    a
}

/// Build the search tree for index i.
pub fn build_tree(
    freq: &EmpiricalFrequencies,
    i: usize,
    min_count: u64,
    depth_cap: u32,
) -> SearchTree {
    let m = freq.leaf_count();
    let mut nodes: Vec<Node> = Vec::new();
    let root = build_rec(freq, i, 0, m - 1, 0, min_count, depth_cap, &mut nodes);
    SearchTree {
        leaf_count: m,
        root,
        nodes,
    }
}

#[allow(clippy::too_many_arguments)]
fn build_rec(
    freq: &EmpiricalFrequencies,
    i: usize,
    lo: usize,
    hi: usize,
    depth: u32,
    min_count: u64,
    depth_cap: u32,
    nodes: &mut Vec<Node>,
) -> Child {
    if lo > hi {
        return Child::None;
    }
    if lo == hi {
        return Child::Balanced; // single leaf; nothing to store
    }
    if depth >= depth_cap || freq.count(i, lo, hi) < min_count {
        return Child::Balanced;
    }
    let split = split_leaf_choice(freq, i, lo, hi);
    let left = if split > lo {
        build_rec(freq, i, lo, split - 1, depth + 1, min_count, depth_cap, nodes)
    } else {
        Child::None
    };
    let right = if split < hi {
        build_rec(freq, i, split + 1, hi, depth + 1, min_count, depth_cap, nodes)
    } else {
        Child::None
    };
    nodes.push(Node {
        lo: lo as u32,
        hi: hi as u32,
        split: split as u32,
        left,
        right,
    });
    Child::Node((nodes.len() - 1) as u32)
}

// ---------------------------------------------------------------------------
// Cursors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    /// Moved to an internal child; the interval shrank.
    Moved,
    /// The point's leaf slab is determined.
    ReachedLeaf(usize),
}

/// Stepwise search state for one point. The current interval always contains
/// the query's leaf slab.
#[derive(Debug, Clone)]
pub struct SearchCursor<'a> {
    tree: &'a SearchTree,
    state: Child,
    lo: usize,
    hi: usize,
    steps: u32,
}

impl<'a> SearchCursor<'a> {
    pub fn slab(&self) -> Slab {
        Slab {
            lo: self.lo,
            hi: self.hi,
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn at_leaf(&self) -> Option<usize> {
        if self.lo == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }

    fn enter(&mut self, child: Child, lo: usize, hi: usize) -> Advance {
        self.lo = lo;
        self.hi = hi;
        self.state = child;
        if lo == hi {
            Advance::ReachedLeaf(lo)
        } else {
            Advance::Moved
        }
    }

    /// Advance the search one node: one comparison of x against the split
    /// leaf's boundaries (or the balanced midpoint boundary).
    pub fn advance(&mut self, x: f64, slabs: &SlabStructure) -> Advance {
        if self.lo == self.hi {
            return Advance::ReachedLeaf(self.lo);
        }
        self.steps += 1;
        tally_comparison();
        match self.state {
            Child::None => unreachable!("cursor cannot sit on an empty child"),
            Child::Node(id) => {
                let node = self.tree.nodes[id as usize];
                let split = node.split as usize;
                if split > self.lo && x < slabs.boundary_value(split - 1).unwrap() {
                    self.enter(node.left, self.lo, split - 1)
                } else if split < self.hi && x >= slabs.boundary_value(split).unwrap() {
                    self.enter(node.right, split + 1, self.hi)
                } else {
                    self.enter(Child::Balanced, split, split)
                }
            }
            Child::Balanced => {
                let mid = (self.lo + self.hi) / 2;
                if x < slabs.boundary_value(mid).unwrap() {
                    self.enter(Child::Balanced, self.lo, mid)
                } else {
                    self.enter(Child::Balanced, mid + 1, self.hi)
                }
            }
        }
    }
}

/// Full search: descend until the leaf slab of x is reached.
pub fn full_search(tree: &SearchTree, slabs: &SlabStructure, x: f64) -> (usize, u32) {
    let mut cur = tree.cursor();
    loop {
        if let Advance::ReachedLeaf(l) = cur.advance(x, slabs) {
            return (l, cur.steps());
        }
    }
}

/// S-restricted search: advance until the current interval is contained in
/// `s`, returning the number of steps. The leaf of x must lie inside `s`.
pub fn restricted_search(
    tree: &SearchTree,
    slabs: &SlabStructure,
    x: f64,
    s: Slab,
) -> Result<u32> {
    let leaf = slabs.locate_leaf(x);
    if leaf < s.lo || leaf > s.hi {
        return Err(Error::ContractViolation(format!(
            "leaf {leaf} of query outside restriction [{}, {}]",
            s.lo, s.hi
        )));
    }
    let mut cur = tree.cursor();
    while !(s.lo <= cur.lo && cur.hi <= s.hi) {
        cur.advance(x, slabs);
    }
    Ok(cur.steps())
}

// ---------------------------------------------------------------------------
// Invariant checks (used by tests and the acceptance suite)
// ---------------------------------------------------------------------------

/// Partition and 2/3-reduction invariants of every learned node, against the
/// empirical masses the tree was built from.
pub fn check_tree_invariants(
    tree: &SearchTree,
    freq: &EmpiricalFrequencies,
    i: usize,
) -> Result<()> {
    for node in tree.nodes() {
        let (lo, hi, split) = (node.lo as usize, node.hi as usize, node.split as usize);
        if !(lo <= split && split <= hi) {
            return Err(Error::ContractViolation("split outside interval".into()));
        }
        if (split > lo) != matches!(node.left, Child::Node(_) | Child::Balanced) {
            return Err(Error::ContractViolation("left child presence mismatch".into()));
        }
        if (split < hi) != matches!(node.right, Child::Node(_) | Child::Balanced) {
            return Err(Error::ContractViolation("right child presence mismatch".into()));
        }
        let total = freq.count(i, lo, hi);
        if split > lo && 3 * freq.count(i, lo, split - 1) > 2 * total {
            return Err(Error::ContractViolation("left mass exceeds 2/3".into()));
        }
        if split < hi && 3 * freq.count(i, split + 1, hi) > 2 * total {
            return Err(Error::ContractViolation("right mass exceeds 2/3".into()));
        }
        // child intervals partition the parent
        if let Child::Node(l) = node.left {
            let c = tree.nodes[l as usize];
            if c.lo as usize != lo || c.hi as usize != split - 1 {
                return Err(Error::ContractViolation("left interval mismatch".into()));
            }
        }
        if let Child::Node(r) = node.right {
            let c = tree.nodes[r as usize];
            if c.lo as usize != split + 1 || c.hi as usize != hi {
                return Err(Error::ContractViolation("right interval mismatch".into()));
            }
        }
    }
    Ok(())
}
