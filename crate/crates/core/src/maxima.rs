//! The limiting-phase maxima engine: per-point searches in their learned
//! trees, interleaved right to left through the bucket heap, with early
//! termination by dominance against the leftmost confirmed maximal point.

use crate::bucket_heap::{BucketHeap, Handle};
use crate::certificates::{MaximaCertificate, SLabel};
use crate::distributions::ProductDistribution;
use crate::error::{Error, Result};
use crate::geometry::{beats, Instance};
use crate::metrics::{comparisons_recorded, RunMetrics};
use crate::search_tree::{
    build_tree, collect_frequencies, Advance, SearchCursor, SearchTree, TreeParams,
};
use crate::slabs::{build_slab_structure, default_training_count, SlabStructure};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Learned structures for the maxima problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximaStructures {
    pub slabs: SlabStructure,
    pub trees: Vec<SearchTree>,
    pub counters_used: u64,
}

/// Learning phase: slab structure from `t_slabs` instances (default log2 n),
/// then per-index trees from `t_freq` more (default the c/delta^2 formula).
pub fn learn_maxima(
    dist: &ProductDistribution,
    tree_params: &TreeParams,
    t_slabs: Option<u64>,
    t_freq: Option<u64>,
    counter0: u64,
) -> Result<MaximaStructures> {
    let n = dist.len();
    let t_slabs = t_slabs.unwrap_or(default_training_count(n) as u64).max(1);
    let training: Vec<Instance> = (0..t_slabs).map(|c| dist.sample(counter0 + c)).collect();
    let slabs = build_slab_structure(&training)?;
    let t_freq = t_freq
        .unwrap_or_else(|| tree_params.default_sample_count(n))
        .max(1);
    let freq = collect_frequencies(dist, &slabs, t_freq, counter0 + t_slabs);
    let min_count = tree_params.min_count(n);
    let depth_cap = tree_params.depth_cap(n);
    let trees = (0..n)
        .map(|i| build_tree(&freq, i, min_count, depth_cap))
        .collect();
    Ok(MaximaStructures {
        slabs,
        trees,
        counters_used: t_slabs + t_freq,
    })
}

#[derive(Debug, Clone)]
pub struct MaximaOutput {
    pub certificate: MaximaCertificate,
    pub s_labels: Vec<SLabel>,
    pub metrics: RunMetrics,
}

/// Interleaved-search state of one run. Every input point is in exactly one
/// of: active in the heap, pending in the current leaf-slab batch, proven
/// non-maximal, or confirmed maximal. At all times the maxima strictly right
/// of the current leaf slab have been found, in right-to-left order.
pub struct MaximaRunState<'a> {
    instance: &'a Instance,
    slabs: &'a SlabStructure,
    heap: BucketHeap,
    cursors: Vec<SearchCursor<'a>>,
    handles: Vec<Option<Handle>>,
    /// Right-boundary key of the current leaf slab lambda-hat.
    m_hat: usize,
    /// Points located in lambda-hat, awaiting the next update.
    batch: Vec<usize>,
    /// Maxima found so far, right to left.
    maxima_rl: Vec<usize>,
    /// Leftmost confirmed maximal point.
    front: Option<usize>,
    witnesses: Vec<Option<usize>>,
    labels: Vec<Option<SLabel>>,
    update_cost: u64,
    last_served_key: usize,
    pub metrics: RunMetrics,
}

impl<'a> MaximaRunState<'a> {
    pub fn new(instance: &'a Instance, structures: &'a MaximaStructures) -> Result<Self> {
        let n = instance.len();
        if structures.trees.len() != n {
            return Err(Error::InvalidInput(format!(
                "instance size {n} does not match {} learned trees",
                structures.trees.len()
            )));
        }
        let leaf_count = structures.slabs.leaf_count();
        let mut heap = BucketHeap::new(leaf_count, n)?.strict();
        let mut handles = Vec::with_capacity(n);
        for i in 0..n {
            handles.push(Some(heap.insert(leaf_count, i)?));
        }
        Ok(MaximaRunState {
            instance,
            slabs: &structures.slabs,
            heap,
            cursors: structures.trees.iter().map(|t| t.cursor()).collect(),
            handles,
            m_hat: leaf_count,
            batch: Vec::new(),
            maxima_rl: Vec::new(),
            front: None,
            witnesses: vec![None; n],
            labels: vec![None; n],
            update_cost: 0,
            last_served_key: leaf_count,
            metrics: RunMetrics::default(),
        })
    }

    pub fn active(&self) -> usize {
        self.heap.len()
    }

    fn deactivate(&mut self, i: usize) -> Result<()> {
        self.heap
            .delete(self.handles[i].take().expect("active point has a handle"))?;
        Ok(())
    }

    /// One round of procedure Search: serve the active point with the
    /// furthest right slab, fold the batch in when the frontier moved past
    /// the current leaf slab, try the dominance shortcut, otherwise advance
    /// the point's search one node.
    pub fn search_step(&mut self) -> Result<()> {
        let Some((m, i)) = self.heap.find_max() else {
            return Err(Error::ContractViolation("search step on an empty heap".into()));
        };
        self.metrics.rounds += 1;
        debug_assert!(m <= self.last_served_key, "served maxima must not increase");
        self.last_served_key = m;
        if m < self.m_hat {
            self.update_step(m);
        }
        let points = &self.instance.points;

        // dominance against the leftmost confirmed maximal point
        if let Some(f) = self.front {
            if beats(points[f], f, points[i], i) {
                self.deactivate(i)?;
                self.witnesses[i] = Some(f);
                self.labels[i] = Some(match self.cursors[i].at_leaf() {
                    Some(l) => SLabel::InLeaf(l),
                    None => SLabel::SeparatedAt(self.cursors[i].slab().hi),
                });
                self.debug_round_invariant();
                return Ok(());
            }
        }

        if let Some(leaf) = self.cursors[i].at_leaf() {
            // already located; the frontier has reached its leaf slab by now
            debug_assert_eq!(leaf + 1, self.m_hat);
            self.deactivate(i)?;
            self.batch.push(i);
            self.labels[i] = Some(SLabel::InLeaf(leaf));
        } else {
            let before_hi = self.cursors[i].slab().hi;
            match self.cursors[i].advance(points[i].x, self.slabs) {
                Advance::ReachedLeaf(l) => {
                    if l + 1 == self.m_hat {
                        self.deactivate(i)?;
                        self.batch.push(i);
                        self.labels[i] = Some(SLabel::InLeaf(l));
                    } else if l < before_hi {
                        let h = self.handles[i].expect("active point has a handle");
                        self.handles[i] = Some(self.heap.decrease_key(h, l + 1)?);
                    }
                }
                Advance::Moved => {
                    let hi = self.cursors[i].slab().hi;
                    if hi < before_hi {
                        let h = self.handles[i].expect("active point has a handle");
                        self.handles[i] = Some(self.heap.decrease_key(h, hi + 1)?);
                    }
                }
            }
        }
        self.debug_round_invariant();
        Ok(())
    }

    /// Procedure Update: sort the batch (insertion sort, descending) and
    /// extend the maxima list right to left, then move lambda-hat to the
    /// leaf slab whose right boundary is `new_m`.
    pub fn update_step(&mut self, new_m: usize) {
        let points = &self.instance.points;
        for k in 1..self.batch.len() {
            let mut j = k;
            while j > 0 {
                self.update_cost += 1;
                let (a, b) = (self.batch[j - 1], self.batch[j]);
                if (points[a].x, points[a].y, a) < (points[b].x, points[b].y, b) {
                    self.batch.swap(j - 1, j);
                    j -= 1;
                } else {
                    break;
                }
            }
        }
        for &i in &self.batch {
            self.update_cost += 1;
            match self.front {
                Some(f) if beats(points[f], f, points[i], i) => self.witnesses[i] = Some(f),
                _ => {
                    self.maxima_rl.push(i);
                    self.front = Some(i);
                }
            }
        }
        self.batch.clear();
        self.m_hat = new_m;
    }

    /// Flush the final batch and assemble the output.
    pub fn finish(mut self, cmp0: u64, started: Instant) -> MaximaOutput {
        self.update_step(0);
        self.maxima_rl.reverse();
        for c in &self.cursors {
            self.metrics.record_steps(c.steps() as usize);
        }
        self.metrics.heap_ops = self.heap.counters.total_ops();
        self.metrics.comparisons = comparisons_recorded() - cmp0;
        self.metrics.update_cost = self.update_cost;
        self.metrics.wall_time = started.elapsed().as_secs_f64();
        MaximaOutput {
            certificate: MaximaCertificate {
                maximal_indices: self.maxima_rl,
                witnesses: self.witnesses,
            },
            s_labels: self
                .labels
                .into_iter()
                .map(|l| l.expect("every point was labeled"))
                .collect(),
            metrics: self.metrics,
        }
    }

    /// Round invariant, checked in debug builds at small n: the maxima
    /// strictly right of lambda-hat are exactly the ones found, right to left.
    #[cfg(debug_assertions)]
    fn debug_round_invariant(&self) {
        let n = self.instance.len();
        if n > 128 {
            return;
        }
        let points = &self.instance.points;
        let right: Vec<usize> = (0..n)
            .filter(|&i| self.slabs.locate_leaf(points[i].x) >= self.m_hat)
            .collect();
        let mut expect: Vec<usize> = right
            .iter()
            .copied()
            .filter(|&i| right.iter().all(|&j| !beats(points[j], j, points[i], i)))
            .collect();
        expect.sort_by(|&a, &b| {
            crate::geometry::lex_cmp(&points[b], &points[a]).then(b.cmp(&a))
        });
        assert_eq!(
            self.maxima_rl, expect,
            "round invariant: maxima right of lambda-hat (key {})",
            self.m_hat
        );
    }

    #[cfg(not(debug_assertions))]
    fn debug_round_invariant(&self) {}
}

/// One limiting-phase run: repeat Search until no point is active, then a
/// final Update flushes the leftmost batch. Scheduling order is load-bearing.
pub fn run_maxima(instance: &Instance, structures: &MaximaStructures) -> Result<MaximaOutput> {
    let started = Instant::now();
    let cmp0 = comparisons_recorded();
    let mut state = MaximaRunState::new(instance, structures)?;
    let leaf_count = structures.slabs.leaf_count().max(2);
    let depth_budget = 2 * (usize::BITS - leaf_count.leading_zeros()) as u64 + 4;
    let round_limit = (instance.len() as u64 + 2) * depth_budget;
    while state.active() > 0 {
        state.search_step()?;
        if state.metrics.rounds > round_limit {
            return Err(Error::ContractViolation(
                "maxima engine exceeded its round budget".into(),
            ));
        }
    }
    Ok(state.finish(cmp0, started))
}
