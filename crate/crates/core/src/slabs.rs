//! The V-list vertical slab structure built from training instances.
//!
//! Sorting the x-coordinates of t training instances and keeping every t-th
//! value as a boundary yields about n leaf slabs in which the number of
//! points of a fresh instance has bounded second moment.

use crate::distributions::ProductDistribution;
use crate::error::{Error, Result};
use crate::geometry::Instance;
use crate::metrics::tally_comparison;
use serde::{Deserialize, Serialize};

/// Sorted boundaries b_1 < ... < b_m defining m + 1 open leaf slabs, the
/// outermost two unbounded. A query on a boundary resolves to the right slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabStructure {
    boundaries: Vec<f64>,
}

/// Contiguous interval of leaf slabs (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slab {
    pub lo: usize,
    pub hi: usize,
}

impl Slab {
    pub fn size(&self) -> usize {
        self.hi - self.lo + 1
    }
}

impl SlabStructure {
    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("non-finite boundary".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("boundaries not strictly increasing".into()));
        }
        Ok(SlabStructure { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn leaf_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn boundary_value(&self, i: usize) -> Option<f64> {
        self.boundaries.get(i).copied()
    }

    /// Index of the open leaf slab containing x; boundary hits go right.
    pub fn locate_leaf(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| {
            tally_comparison();
            b <= x
        })
    }

    /// Right-boundary key of a leaf, as an element of [1, leaf_count]. The
    /// rightmost (unbounded) leaf maps to leaf_count.
    pub fn right_boundary_key(&self, leaf: usize) -> usize {
        leaf + 1
    }

    pub fn whole(&self) -> Slab {
        Slab {
            lo: 0,
            hi: self.leaf_count() - 1,
        }
    }
}

/// Build the slab structure from t training instances of common size n:
/// sort the nt x-coordinates and keep every t-th one (positions t, 2t, ...,
/// (n-1)t) as boundaries. Duplicate candidates collapse, which only happens
/// for inputs with repeated coordinates.
pub fn build_slab_structure(training: &[Instance]) -> Result<SlabStructure> {
    if training.is_empty() {
        return Err(Error::InvalidInput("need at least one training instance".into()));
    }
    let n = training[0].len();
    if training.iter().any(|inst| inst.len() != n) {
        return Err(Error::InvalidInput("training instances differ in size".into()));
    }
    let t = training.len();
    let mut xs: Vec<f64> = Vec::with_capacity(n * t);
    for inst in training {
        xs.extend(inst.points.iter().map(|p| p.x));
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut boundaries = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        boundaries.push(xs[j * t - 1]);
    }
    boundaries.dedup_by(|a, b| a == b);
    SlabStructure::from_boundaries(boundaries)
}

/// Default number of training instances for the slab build: log2 n.
pub fn default_training_count(n: usize) -> usize {
    ((n as f64).log2().ceil() as usize).max(1)
}

/// Monte-Carlo estimate of E[X_lambda^2] per leaf over fresh samples
/// starting at `counter0`.
pub fn mean_squared_occupancy(
    dist: &ProductDistribution,
    slabs: &SlabStructure,
    samples: u64,
    counter0: u64,
) -> Vec<f64> {
    let mut acc = vec![0.0f64; slabs.leaf_count()];
    let mut occ = vec![0u32; slabs.leaf_count()];
    for c in 0..samples {
        occ.iter_mut().for_each(|o| *o = 0);
        for p in &dist.sample(counter0 + c).points {
            occ[slabs.locate_leaf(p.x)] += 1;
        }
        for (a, &o) in acc.iter_mut().zip(occ.iter()) {
            *a += (o as f64) * (o as f64);
        }
    }
    acc.iter_mut().for_each(|a| *a /= samples as f64);
    acc
}

/// Distribution-sensitivity comparator: the summed Shannon entropy (bits) of
/// the empirical per-index leaf-slab distributions over `samples` fresh
/// draws. A lower-bound flavored estimate of the per-instance location work.
pub fn entropy_proxy(
    dist: &ProductDistribution,
    slabs: &SlabStructure,
    samples: u64,
    counter0: u64,
) -> f64 {
    let n = dist.len();
    let m = slabs.leaf_count();
    let mut counts = vec![vec![0u32; m]; n];
    for c in 0..samples {
        for (i, p) in dist.sample(counter0 + c).points.iter().enumerate() {
            counts[i][slabs.locate_leaf(p.x)] += 1;
        }
    }
    let total = samples as f64;
    counts
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / total;
                    -p * p.log2()
                })
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn inst(coords: &[(f64, f64)]) -> Instance {
        Instance::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn every_tth_rule_by_hand() {
        // n = 3, t = 2, coords {1..6} -> boundaries {2, 4}
        let training = vec![inst(&[(1., 0.), (3., 0.), (5., 0.)]), inst(&[(2., 0.), (4., 0.), (6., 0.)])];
        let s = build_slab_structure(&training).unwrap();
        assert_eq!(s.boundaries(), &[2.0, 4.0]);
        assert_eq!(s.leaf_count(), 3);
    }

    #[test]
    fn single_point_instances() {
        let s = build_slab_structure(&[inst(&[(7., 0.)]), inst(&[(9., 0.)])]).unwrap();
        assert_eq!(s.leaf_count(), 1);
        assert!(s.boundaries().is_empty());
    }

    #[test]
    fn mismatched_sizes_rejected() {
        assert!(build_slab_structure(&[inst(&[(0., 0.)]), inst(&[(0., 0.), (1., 0.)])]).is_err());
    }

    #[test]
    fn locate_examples() {
        let s = SlabStructure::from_boundaries(vec![2.0, 4.0]).unwrap();
        assert_eq!(s.locate_leaf(3.0), 1);
        assert_eq!(s.locate_leaf(-10.0), 0);
        assert_eq!(s.locate_leaf(2.0), 1, "boundary goes right");
        assert_eq!(s.locate_leaf(100.0), 2);
    }

    #[test]
    fn locate_matches_linear_scan() {
        let mut rng = crate::distributions::SplitMix::new(42);
        let mut bs: Vec<f64> = (0..50).map(|_| rng.next_f64() * 100.0).collect();
        bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bs.dedup();
        let s = SlabStructure::from_boundaries(bs.clone()).unwrap();
        for _ in 0..1000 {
            let x = rng.next_f64() * 120.0 - 10.0;
            let linear = bs.iter().filter(|&&b| b <= x).count();
            assert_eq!(s.locate_leaf(x), linear);
        }
    }

    #[test]
    fn entropy_proxy_examples() {
        // all fixed points: zero entropy
        let d = crate::distributions::fixed_random(16, 4).unwrap().with_jitter(0.0);
        let t = default_training_count(16);
        let training: Vec<Instance> = (0..t as u64).map(|c| d.sample(c)).collect();
        let s = build_slab_structure(&training).unwrap();
        assert_eq!(entropy_proxy(&d, &s, 200, t as u64), 0.0);

        // each point uniform over two leaf slabs: one bit per point
        use crate::distributions::{ComponentDistribution, ProductDistribution};
        let n = 8;
        let comps = (0..n)
            .map(|_| ComponentDistribution::UniformAtoms {
                atoms: vec![Point::new(1.0, 0.0), Point::new(3.0, 0.0)],
            })
            .collect();
        let d = ProductDistribution::new(comps, 5).unwrap().with_jitter(0.0);
        let s = SlabStructure::from_boundaries(vec![2.0]).unwrap();
        let h = entropy_proxy(&d, &s, 4000, 0);
        assert!((h - n as f64).abs() < 0.05 * n as f64, "h = {h}");
    }

    #[test]
    fn occupancy_second_moment_bounded_for_fixed_points() {
        let n = 128;
        let d = crate::distributions::fixed_random(n, 21).unwrap();
        let t = default_training_count(n);
        let training: Vec<Instance> = (0..t as u64).map(|c| d.sample(c)).collect();
        let s = build_slab_structure(&training).unwrap();
        let m2 = mean_squared_occupancy(&d, &s, 1000, t as u64);
        let max = m2.iter().cloned().fold(0.0, f64::max);
        assert!(max <= 10.0, "max E[X^2] = {max}");
    }
}
