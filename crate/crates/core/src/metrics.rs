//! Comparison tallies and per-run metric records.
//!
//! The primary cost model is the number of primitive geometric comparisons
//! (orientation, line-side, dominance and coordinate comparisons), which is
//! machine-independent. Tallies are thread-local so independent trials can
//! run on a worker pool without sharing counters.

use serde::{Deserialize, Serialize};
use std::cell::Cell;

thread_local! {
    static COMPARISONS: Cell<u64> = const { Cell::new(0) };
}

/// Record one primitive comparison on the current thread.
#[inline]
pub fn tally_comparison() {
    COMPARISONS.with(|c| c.set(c.get() + 1));
}

/// Total comparisons recorded on the current thread so far.
pub fn comparisons_recorded() -> u64 {
    COMPARISONS.with(|c| c.get())
}

/// Run `f` and return its result together with the number of comparisons it made.
pub fn with_comparison_tally<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = comparisons_recorded();
    let out = f();
    (out, comparisons_recorded() - before)
}

/// Instrumentation emitted by one engine run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// One round = one `find-max` served by the scheduler.
    pub rounds: u64,
    /// Primitive geometric comparisons during the run.
    pub comparisons: u64,
    /// Total bucket-heap operations (insert/find-max/delete/decrease-key).
    pub heap_ops: u64,
    /// Histogram of per-point search steps: `per_point_steps[s]` = number of
    /// points whose search advanced exactly `s` nodes.
    pub per_point_steps: Vec<u64>,
    /// Wall time in seconds (secondary cost; excluded from CSV summaries).
    pub wall_time: f64,
    /// Batch-sorting work done by the maxima Update procedure.
    #[serde(default)]
    pub update_cost: u64,
    /// Points located strictly outside the canonical hull (hull runs only).
    #[serde(default)]
    pub outside_count: u64,
    /// Whether the hull run fell back to the worst-case algorithm.
    #[serde(default)]
    pub fallback_used: bool,
    /// Location-case counts `[case1, case2, case3_pencil, case3_stay]` (hull runs).
    #[serde(default)]
    pub case_histogram: [u64; 4],
    /// Measured Step-7 cost: sum over adjacent extremal pairs of X_i * log2(Y_i + 1).
    #[serde(default)]
    pub step7_cost: f64,
}

impl RunMetrics {
    pub fn record_steps(&mut self, steps: usize) {
        if self.per_point_steps.len() <= steps {
            self.per_point_steps.resize(steps + 1, 0);
        }
        self.per_point_steps[steps] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_is_cumulative_and_scoped() {
        let base = comparisons_recorded();
        tally_comparison();
        tally_comparison();
        assert_eq!(comparisons_recorded(), base + 2);
        let ((), n) = with_comparison_tally(|| {
            tally_comparison();
            tally_comparison();
            tally_comparison();
        });
        assert_eq!(n, 3);
    }

    #[test]
    fn histogram_grows_on_demand() {
        let mut m = RunMetrics::default();
        m.record_steps(3);
        m.record_steps(0);
        m.record_steps(3);
        assert_eq!(m.per_point_steps, vec![1, 0, 0, 2]);
    }
}
