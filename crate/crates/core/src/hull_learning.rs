//! Learning-phase constructions for convex hulls: dual line-arrangement
//! levels, canonical directions and lines, the canonical hull (intersection
//! of halfplanes below the canonical lines), its leaf slabs, and pencils.

use crate::distributions::ProductDistribution;
use crate::error::{Error, Result};
use crate::geometry::{
    dual_point_to_line, orientation_unchecked, side_of, upper_hull_vertices, DirectedLine,
    Instance, Point, Side,
};
use crate::search_tree::{build_tree, collect_frequencies, SearchTree, TreeParams};
use crate::slabs::{Slab, SlabStructure};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Arrangement levels
// ---------------------------------------------------------------------------

/// Maximal piece of the z-level supported by one line, over [x_from, x_to).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelSegment {
    pub line: usize,
    pub x_from: f64,
    pub x_to: f64,
}

/// The z-level of a line arrangement: an x-monotone polygonal curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelPolyline {
    pub z: usize,
    pub segments: Vec<LevelSegment>,
}

impl LevelPolyline {
    /// Interior breakpoints, x-sorted.
    pub fn vertices(&self, lines: &[DirectedLine]) -> Vec<Point> {
        self.segments
            .iter()
            .skip(1)
            .map(|s| Point::new(s.x_from, lines[s.line].y_at(s.x_from)))
            .collect()
    }

    /// y-coordinate of the level at x.
    pub fn y_at(&self, lines: &[DirectedLine], x: f64) -> f64 {
        let k = self
            .segments
            .partition_point(|s| s.x_from <= x)
            .saturating_sub(1);
        lines[self.segments[k].line].y_at(x)
    }
}

/// Number of lines strictly below p, skipping `skip` (the supporting line of
/// a sampled level point, which the sample lies on by construction). Used as
/// the level recount oracle.
pub fn lines_strictly_below(lines: &[DirectedLine], p: Point, skip: Option<usize>) -> usize {
    lines
        .iter()
        .enumerate()
        .filter(|&(j, l)| {
            Some(j) != skip && side_of(p, l).map(|s| s == Side::LeftOpen).unwrap_or(false)
        })
        .count()
}

/// Compute the z-level by walking each line through its intersections with
/// all others and emitting the sub-segments where exactly z lines lie
/// strictly below. O(n^2 log n); assumes non-vertical lines and no three
/// concurrent (the sampling jitter provides general position).
pub fn compute_level(lines: &[DirectedLine], z: usize) -> Result<LevelPolyline> {
    Ok(compute_levels(lines, &[z])?.pop().expect("one level requested"))
}

/// Several levels of the same arrangement in one pass: the per-line crossing
/// events are computed and sorted once and walked once per requested level.
/// Per-line work spreads across the available cores.
pub fn compute_levels(lines: &[DirectedLine], zs: &[usize]) -> Result<Vec<LevelPolyline>> {
    let n = lines.len();
    for &z in zs {
        if z >= n {
            return Err(Error::InvalidInput(format!("level {z} out of range for {n} lines")));
        }
    }
    if lines.iter().any(|l| l.is_vertical()) {
        return Err(Error::InvalidInput("vertical line in arrangement".into()));
    }
    let params: Vec<(f64, f64)> = lines.iter().map(|l| (l.slope(), l.y_at(0.0))).collect();

    let workers = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .clamp(1, 8);
    let chunk = n.div_ceil(workers);
    let piece_sets: Vec<Vec<Vec<LevelSegment>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let params = &params;
                scope.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(n);
                    let mut out: Vec<Vec<LevelSegment>> = vec![Vec::new(); zs.len()];
                    let mut events: Vec<(f64, i8)> = Vec::with_capacity(n);
                    for i in lo..hi {
                        sweep_line(i, params, zs, &mut events, &mut out);
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut levels = Vec::with_capacity(zs.len());
    for (k, &z) in zs.iter().enumerate() {
        let mut pieces: Vec<LevelSegment> = piece_sets
            .iter()
            .flat_map(|set| set[k].iter().copied())
            .collect();
        pieces.sort_by(|a, b| a.x_from.partial_cmp(&b.x_from).unwrap());
        pieces.retain(|s| s.x_from < s.x_to);
        if pieces.is_empty() {
            return Err(Error::DegenerateInput("empty level".into()));
        }
        levels.push(LevelPolyline { z, segments: pieces });
    }
    Ok(levels)
}

/// Emit the pieces of every requested level supported by line i. At a
/// crossing with a steeper line the below-count drops by one, with a
/// shallower line it rises by one.
fn sweep_line(
    i: usize,
    params: &[(f64, f64)],
    zs: &[usize],
    events: &mut Vec<(f64, i8)>,
    out: &mut [Vec<LevelSegment>],
) {
    let n = params.len();
    let (mi, qi) = params[i];
    let _ = n;
    let mut below = 0usize;
    events.clear();
    for (j, &(mj, qj)) in params.iter().enumerate() {
        if j == i {
            continue;
        }
        if mj == mi {
            if qj < qi {
                below += 1;
            }
            continue;
        }
        if mj > mi {
            below += 1;
            events.push(((qj - qi) / (mi - mj), -1));
        } else {
            events.push(((qj - qi) / (mi - mj), 1));
        }
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    for (k, &z) in zs.iter().enumerate() {
        let mut from = f64::NEG_INFINITY;
        let mut count = below;
        for &(ev, delta) in events.iter() {
            if count == z && from < ev {
                out[k].push(LevelSegment {
                    line: i,
                    x_from: from,
                    x_to: ev,
                });
            }
            from = ev;
            count = (count as isize + delta as isize) as usize;
        }
        if count == z {
            out[k].push(LevelSegment {
                line: i,
                x_from: from,
                x_to: f64::INFINITY,
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical directions and lines
// ---------------------------------------------------------------------------

/// Ordered directions v_1..v_k (clockwise, all upward) with their defining
/// dual-space points r_0..r_k (right to left on the level hull).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalDirections {
    pub r_points: Vec<Point>,
    pub directions: Vec<(f64, f64)>,
}

/// Desk-scale parameterization of the learning constructions. The asymptotic
/// polylog powers exceed n at practical sizes; these defaults preserve the
/// intended roles (level >> tail >> 1, about n/spacing directions) and stay
/// configurable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HullLearnParams {
    pub level_param: Option<usize>,
    pub spacing: Option<usize>,
    pub tail: Option<usize>,
    pub c: f64,
    pub gamma: f64,
}

impl Default for HullLearnParams {
    fn default() -> Self {
        HullLearnParams {
            level_param: None,
            spacing: None,
            tail: None,
            c: 8.0,
            gamma: 0.25,
        }
    }
}

impl HullLearnParams {
    pub fn level(&self, n: usize) -> usize {
        self.level_param.unwrap_or_else(|| {
            let lg = (n as f64).log2();
            ((lg.powi(4)).ceil() as usize).min(n / 4).clamp(1, n - 1)
        })
    }

    pub fn spacing(&self, n: usize) -> usize {
        self.spacing.unwrap_or_else(|| {
            let lg = (n as f64).log2();
            (lg.powi(2).ceil() as usize).max(1)
        })
    }

    pub fn tail(&self, n: usize) -> usize {
        self.tail
            .unwrap_or_else(|| (self.gamma * self.c * (n as f64).log2()).ceil() as usize)
            .min(n - 1)
    }
}

/// Meet points of `line` with the concave chain (vertex list of an upper
/// hull): at most two crossings, or the supporting edge's endpoints.
fn chain_meets(chain: &[Point], line: &DirectedLine) -> Vec<Point> {
    let m = chain.len();
    let d = |k: usize| line.y_at(chain[k].x) - chain[k].y;
    if m == 1 {
        return if d(0) == 0.0 { vec![chain[0]] } else { vec![] };
    }
    // unimodal minimum of the convex difference sequence
    let (mut lo, mut hi) = (0usize, m - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if d(mid + 1) < d(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let kmin = lo;
    if d(kmin) > 0.0 {
        return vec![];
    }
    let mut meets = Vec::with_capacity(2);
    // left crossing: first k in [0, kmin] with d(k) <= 0
    {
        let (mut a, mut b) = (0usize, kmin);
        while a < b {
            let mid = (a + b) / 2;
            if d(mid) > 0.0 {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        let k = a;
        if d(k) == 0.0 {
            meets.push(chain[k]);
        } else if k > 0 {
            let (dk1, dk) = (d(k - 1), d(k));
            let t = dk1 / (dk1 - dk);
            let x = chain[k - 1].x + (chain[k].x - chain[k - 1].x) * t;
            meets.push(Point::new(x, line.y_at(x)));
        }
    }
    // right crossing: last k in [kmin, m-1] with d(k) <= 0
    {
        let (mut a, mut b) = (kmin, m - 1);
        while a < b {
            let mid = (a + b).div_ceil(2);
            if d(mid) > 0.0 {
                b = mid - 1;
            } else {
                a = mid;
            }
        }
        let k = a;
        if d(k) == 0.0 {
            if meets.last() != Some(&chain[k]) {
                meets.push(chain[k]);
            }
        } else if k < m - 1 {
            let (dk, dk1) = (d(k), d(k + 1));
            let t = dk / (dk - dk1);
            let x = chain[k].x + (chain[k + 1].x - chain[k].x) * t;
            let p = Point::new(x, line.y_at(x));
            if meets.last() != Some(&p) {
                meets.push(p);
            }
        }
    }
    meets
}

/// Compute the canonical directions from one sample: dualize, take the
/// `level`-level, hull its vertices, collect the points where dual lines meet
/// that hull, and keep every `spacing`-th one from right to left. Directions
/// are the upward unit normals of the dual lines of those points.
pub fn canonical_directions(
    q: &Instance,
    level: usize,
    spacing: usize,
) -> Result<CanonicalDirections> {
    let lines: Vec<DirectedLine> = q
        .points
        .iter()
        .map(|&p| dual_point_to_line(p))
        .collect::<Result<_>>()?;
    let lev = compute_level(&lines, level)?;
    directions_from_level(&lines, &lev, spacing)
}

/// Directions from a precomputed level of the dual arrangement.
pub fn directions_from_level(
    lines: &[DirectedLine],
    lev: &LevelPolyline,
    spacing: usize,
) -> Result<CanonicalDirections> {
    if spacing < 1 {
        return Err(Error::InvalidInput("spacing must be >= 1".into()));
    }
    let verts = lev.vertices(lines);
    if verts.len() < 2 {
        return Err(Error::DegenerateInput("level has fewer than 2 vertices".into()));
    }
    let chain_idx = upper_hull_vertices(&verts)?;
    let chain: Vec<Point> = chain_idx.into_iter().map(|i| verts[i]).collect();

    let mut meets: Vec<Point> = Vec::new();
    for line in lines {
        meets.extend(chain_meets(&chain, line));
    }
    meets.sort_by(|a, b| b.x.partial_cmp(&a.x).unwrap()); // right to left
    meets.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if meets.len() < 2 {
        return Err(Error::DegenerateInput("fewer than 2 hull meet points".into()));
    }

    let r_points: Vec<Point> = meets.iter().copied().step_by(spacing).collect();
    if r_points.len() < 2 {
        return Err(Error::DegenerateInput("spacing leaves fewer than 2 directions".into()));
    }
    let directions = r_points
        .iter()
        .map(|r| {
            let m = 2.0 * r.x;
            let norm = (m * m + 1.0).sqrt();
            (-m / norm, 1.0 / norm)
        })
        .collect();
    Ok(CanonicalDirections { r_points, directions })
}

/// For each r_j, the canonical line is the dual of the point on the
/// `tail`-level with the same x-coordinate; it is normal to v_j exactly.
pub fn canonical_lines(
    q: &Instance,
    dirs: &CanonicalDirections,
    tail: usize,
) -> Result<Vec<DirectedLine>> {
    let lines: Vec<DirectedLine> = q
        .points
        .iter()
        .map(|&p| dual_point_to_line(p))
        .collect::<Result<_>>()?;
    let lev = compute_level(&lines, tail)?;
    lines_from_tail_level(&lines, &lev, dirs)
}

/// Canonical lines from a precomputed tail level.
pub fn lines_from_tail_level(
    lines: &[DirectedLine],
    lev: &LevelPolyline,
    dirs: &CanonicalDirections,
) -> Result<Vec<DirectedLine>> {
    dirs.r_points
        .iter()
        .map(|r| {
            let s = Point::new(r.x, lev.y_at(lines, r.x));
            dual_point_to_line(s)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Canonical hull
// ---------------------------------------------------------------------------

/// The canonical hull C: intersection of the halfplanes below the canonical
/// lines. Its upper boundary is the lower envelope of the lines; vertical
/// lines through the envelope vertices cut the plane into C-leaf slabs, one
/// supporting edge per slab.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalHull {
    /// All constructed canonical lines (before redundancy pruning).
    all_lines: Vec<DirectedLine>,
    /// Directions aligned with `all_lines`.
    all_directions: Vec<(f64, f64)>,
    /// Envelope edge -> index into all_lines; edges are x-sorted, one per leaf slab.
    edge_lines: Vec<usize>,
    /// Envelope vertices, x-sorted.
    vertices: Vec<Point>,
    /// Vertical slab structure through the vertices.
    slabs: SlabStructure,
}

impl CanonicalHull {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn slabs(&self) -> &SlabStructure {
        &self.slabs
    }

    pub fn leaf_count(&self) -> usize {
        self.vertices.len() + 1
    }

    /// All constructed lines (for the tail-property checks).
    pub fn all_lines(&self) -> &[DirectedLine] {
        &self.all_lines
    }

    /// Effective directions, one per envelope edge (redundant lines dropped).
    pub fn directions(&self) -> Vec<(f64, f64)> {
        self.edge_lines
            .iter()
            .map(|&i| self.all_directions[i])
            .collect()
    }

    pub fn edge_line(&self, edge: usize) -> &DirectedLine {
        &self.all_lines[self.edge_lines[edge]]
    }

    pub fn edge_count(&self) -> usize {
        self.edge_lines.len()
    }

    /// Strictly above the upper boundary of C at its own x-coordinate.
    pub fn strictly_outside(&self, p: Point) -> bool {
        let e = self.slabs.locate_leaf(p.x);
        side_of(p, self.edge_line(e)).map(|s| s == Side::LeftOpen).unwrap_or(false)
    }

    /// Strictly below the chord of C spanning leaf slabs lo..=hi, which
    /// certifies containment in C. On an unbounded side the chord continues
    /// along the outermost edge's ray past the outermost vertex; the region
    /// below that piecewise curve still lies inside C by concavity.
    pub fn strictly_below_seg(&self, p: Point, lo: usize, hi: usize) -> bool {
        let v = self.vertices.len();
        if v == 0 {
            return side_of(p, self.edge_line(0)) == Ok(Side::RightOpen);
        }
        let first = self.vertices[0];
        let last = self.vertices[v - 1];
        let left = if lo == 0 {
            if p.x < first.x {
                return side_of(p, self.edge_line(0)) == Ok(Side::RightOpen);
            }
            first
        } else {
            self.vertices[lo - 1]
        };
        let right = if hi >= v {
            if p.x > last.x {
                return side_of(p, self.edge_line(self.edge_count() - 1)) == Ok(Side::RightOpen);
            }
            last
        } else {
            self.vertices[hi]
        };
        if left == right {
            // single-vertex span: p sits exactly on the vertex x; below the
            // vertex means below both incident edge lines
            return p.y < left.y;
        }
        orientation_unchecked(left, right, p) == -1
    }

    /// Contiguous interval of edges whose supporting line has p strictly
    /// above it. Requires p outside C. O(log k) binary searches around the
    /// slab of p.
    pub fn visible_edges(&self, p: Point) -> Result<Slab> {
        if !self.strictly_outside(p) {
            return Err(Error::ContractViolation("point not outside the canonical hull".into()));
        }
        let e0 = self.slabs.locate_leaf(p.x);
        let above = |e: usize| side_of(p, self.edge_line(e)) == Ok(Side::LeftOpen);
        // leftmost visible edge in [0, e0]: visibility is monotone on this side
        let (mut a, mut b) = (0usize, e0);
        while a < b {
            let mid = (a + b) / 2;
            if above(mid) {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        let lo = a;
        let (mut a, mut b) = (e0, self.edge_count() - 1);
        while a < b {
            let mid = (a + b).div_ceil(2);
            if above(mid) {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        Ok(Slab { lo, hi: a })
    }

    /// Tangent geometry for a point outside C.
    pub fn pencil_of(&self, p: Point) -> Result<Pencil> {
        let visible = self.visible_edges(p)?;
        let v = self.vertices.len();
        let left_touch = if visible.lo == 0 { None } else { Some(self.vertices[visible.lo - 1]) };
        let right_touch = if visible.hi >= v { None } else { Some(self.vertices[visible.hi]) };
        let left_slope = self.edge_line(visible.lo).slope();
        let right_slope = self.edge_line(visible.hi).slope();
        Ok(Pencil {
            apex: p,
            slab: visible,
            left_touch,
            right_touch,
            left_slope,
            right_slope,
        })
    }
}

fn below_line_through(p: Point, anchor: Point, slope: f64) -> bool {
    let q = anchor.y - slope * anchor.x;
    DirectedLine::slope_intercept(slope, q)
        .map(|l| side_of(p, &l) == Ok(Side::RightOpen))
        .unwrap_or(false)
}

/// Pencil of an apex outside C: the C-slab between the tangent touch
/// vertices, and the region inside it below the two tangent segments. A
/// tangent on an unbounded side degenerates to the line through the apex
/// parallel to the outermost visible edge.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Pencil {
    pub apex: Point,
    pub slab: Slab,
    pub left_touch: Option<Point>,
    pub right_touch: Option<Point>,
    left_slope: f64,
    right_slope: f64,
}

impl Pencil {
    /// Inside the pencil slab's x-range (consistent with leaf location)?
    pub fn comparable(&self, q: Point, ch: &CanonicalHull) -> bool {
        let leaf = ch.slabs().locate_leaf(q.x);
        self.slab.lo <= leaf && leaf <= self.slab.hi
    }

    /// Strictly below the tent of the two tangent segments.
    fn below_tent(&self, q: Point) -> bool {
        if q.x <= self.apex.x {
            match self.left_touch {
                Some(a) => orientation_unchecked(a, self.apex, q) == -1,
                None => below_line_through(q, self.apex, self.left_slope),
            }
        } else {
            match self.right_touch {
                Some(b) => orientation_unchecked(self.apex, b, q) == -1,
                None => below_line_through(q, self.apex, self.right_slope),
            }
        }
    }

    /// Strictly inside the pencil.
    pub fn contains_in(&self, q: Point, ch: &CanonicalHull) -> bool {
        self.comparable(q, ch) && self.below_tent(q)
    }

    /// Comparable but not inside.
    pub fn above_in(&self, q: Point, ch: &CanonicalHull) -> bool {
        self.comparable(q, ch) && !self.below_tent(q)
    }
}

/// Build the canonical hull from the constructed lines: lower envelope with
/// redundant lines dropped, vertices sorted, slab structure and edge map.
pub fn build_canonical_hull(
    lines: Vec<DirectedLine>,
    directions: Vec<(f64, f64)>,
) -> Result<CanonicalHull> {
    if lines.is_empty() || lines.len() != directions.len() {
        return Err(Error::InvalidInput("need one direction per line".into()));
    }
    // sort by slope descending; among parallels keep the lowest
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&i, &j| {
        lines[j]
            .slope()
            .partial_cmp(&lines[i].slope())
            .unwrap()
            .then(lines[i].y_at(0.0).partial_cmp(&lines[j].y_at(0.0)).unwrap())
    });
    order.dedup_by(|&mut b, &mut a| lines[a].slope() == lines[b].slope());

    let inter_x = |i: usize, j: usize| -> f64 {
        let (mi, qi) = (lines[i].slope(), lines[i].y_at(0.0));
        let (mj, qj) = (lines[j].slope(), lines[j].y_at(0.0));
        (qj - qi) / (mi - mj)
    };

    let mut env: Vec<usize> = Vec::new();
    for &c in &order {
        // pop while the new consecutive intersection would not advance past
        // the previous one; this keeps the vertex x-coordinates strictly
        // increasing even for nearly parallel lines
        while env.len() >= 2 {
            let b = env[env.len() - 1];
            let a = env[env.len() - 2];
            if inter_x(b, c) <= inter_x(a, b) {
                env.pop();
            } else {
                break;
            }
        }
        env.push(c);
    }

    let vertices: Vec<Point> = env
        .windows(2)
        .map(|w| {
            let x = inter_x(w[0], w[1]);
            Point::new(x, lines[w[0]].y_at(x))
        })
        .collect();
    let slabs = SlabStructure::from_boundaries(vertices.iter().map(|v| v.x).collect())?;
    Ok(CanonicalHull {
        all_lines: lines,
        all_directions: directions,
        edge_lines: env,
        vertices,
        slabs,
    })
}

// ---------------------------------------------------------------------------
// Learning pipeline
// ---------------------------------------------------------------------------

/// Everything the hull limiting phase needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullStructures {
    pub hull: CanonicalHull,
    pub trees: Vec<SearchTree>,
    /// Training instance counters consumed by the learning phase.
    pub counters_used: u64,
}

/// Run the hull learning phase: one sample for the directions and lines,
/// then `t_freq` samples for the per-index trees over the C-leaf slabs.
pub fn learn_hull(
    dist: &ProductDistribution,
    params: &HullLearnParams,
    tree_params: &TreeParams,
    t_freq: u64,
    counter0: u64,
) -> Result<HullStructures> {
    let n = dist.len();
    if n < 4 {
        return Err(Error::DegenerateInput("need at least 4 points".into()));
    }
    let q = dist.sample(counter0);
    let duals: Vec<DirectedLine> = q
        .points
        .iter()
        .map(|&p| dual_point_to_line(p))
        .collect::<Result<_>>()?;
    let levels = compute_levels(&duals, &[params.level(n), params.tail(n)])?;
    let dirs = directions_from_level(&duals, &levels[0], params.spacing(n))?;
    let lines = lines_from_tail_level(&duals, &levels[1], &dirs)?;
    let hull = build_canonical_hull(lines, dirs.directions.clone())?;
    let freq = collect_frequencies(dist, hull.slabs(), t_freq, counter0 + 1);
    let min_count = tree_params.min_count(n);
    let depth_cap = tree_params.depth_cap(n);
    let trees = (0..n)
        .map(|i| build_tree(&freq, i, min_count, depth_cap))
        .collect();
    Ok(HullStructures {
        hull,
        trees,
        counters_used: 1 + t_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SplitMix;

    fn line(m: f64, q: f64) -> DirectedLine {
        DirectedLine::slope_intercept(m, q).unwrap()
    }

    #[test]
    fn parallel_stack_levels() {
        let lines = vec![line(0.0, 0.0), line(0.0, 1.0)];
        let lev0 = compute_level(&lines, 0).unwrap();
        assert_eq!(lev0.segments.len(), 1);
        assert_eq!(lev0.segments[0].line, 0);
        let lev1 = compute_level(&lines, 1).unwrap();
        assert_eq!(lev1.segments[0].line, 1);
        assert!(compute_level(&lines, 2).is_err());
    }

    #[test]
    fn triangle_lower_envelope() {
        // three lines pairwise crossing: lev_0 has exactly 2 breakpoints
        let lines = vec![line(1.0, 0.0), line(0.0, -1.0), line(-1.0, 0.0)];
        let lev = compute_level(&lines, 0).unwrap();
        let verts = lev.vertices(&lines);
        assert_eq!(verts.len(), 2, "{verts:?}");
    }

    #[test]
    fn level_recount_oracle_random_lines() {
        let mut rng = SplitMix::new(0xabc);
        let n = 20;
        let lines: Vec<DirectedLine> = (0..n)
            .map(|_| line(rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 10.0 - 5.0))
            .collect();
        for z in [0, 3, 10, n - 1] {
            let lev = compute_level(&lines, z).unwrap();
            // sample interior points of segments
            let mut checked = 0;
            for s in &lev.segments {
                let a = if s.x_from.is_finite() { s.x_from } else { s.x_to - 10.0 };
                let b = if s.x_to.is_finite() { s.x_to } else { s.x_from + 10.0 };
                let x = (a + b) / 2.0;
                let p = Point::new(x, lines[s.line].y_at(x));
                assert_eq!(
                    lines_strictly_below(&lines, p, Some(s.line)),
                    z,
                    "level {z} at x={x}"
                );
                checked += 1;
                if checked >= 100 {
                    break;
                }
            }
        }
    }

    #[test]
    fn envelope_small_cases() {
        // one line: halfplane, no vertices, one slab
        let ch = build_canonical_hull(vec![line(1.0, 0.0)], vec![(-0.7, 0.7)]).unwrap();
        assert_eq!(ch.vertices().len(), 0);
        assert_eq!(ch.leaf_count(), 1);
        // two crossing lines: one vertex, two slabs
        let ch = build_canonical_hull(
            vec![line(1.0, 0.0), line(-1.0, 0.0)],
            vec![(-0.7, 0.7), (0.7, 0.7)],
        )
        .unwrap();
        assert_eq!(ch.vertices().len(), 1);
        assert_eq!(ch.leaf_count(), 2);
        assert!(ch.strictly_outside(Point::new(0.0, 1.0)));
        assert!(!ch.strictly_outside(Point::new(0.0, -1.0)));
    }

    #[test]
    fn tangent_lines_to_parabola_give_convex_chain() {
        // lines tangent to y = -x^2 at t: y = -2t x + t^2
        let mut lines = Vec::new();
        let mut dirs = Vec::new();
        let mut rng = SplitMix::new(9);
        for _ in 0..30 {
            let t = rng.next_f64() * 8.0 - 4.0;
            lines.push(line(-2.0 * t, t * t));
            let norm = (4.0 * t * t + 1.0).sqrt();
            dirs.push((2.0 * t / norm, 1.0 / norm));
        }
        let ch = build_canonical_hull(lines, dirs).unwrap();
        let vs = ch.vertices();
        assert!(vs.len() >= 3);
        for w in vs.windows(2) {
            assert!(w[0].x < w[1].x, "vertices x-sorted");
        }
        for w in vs.windows(3) {
            assert_eq!(
                orientation_unchecked(w[0], w[1], w[2]),
                -1,
                "upper boundary is concave"
            );
        }
    }

    fn parabola_hull(k: usize) -> CanonicalHull {
        let mut lines = Vec::new();
        let mut dirs = Vec::new();
        for j in 0..k {
            let t = j as f64 - (k as f64 - 1.0) / 2.0;
            lines.push(line(-2.0 * t, t * t));
            let norm = (4.0 * t * t + 1.0).sqrt();
            dirs.push((2.0 * t / norm, 1.0 / norm));
        }
        build_canonical_hull(lines, dirs).unwrap()
    }

    #[test]
    fn pencil_visibility_matches_linear_scan() {
        let ch = parabola_hull(12);
        let mut rng = SplitMix::new(31337);
        let mut tested = 0;
        while tested < 1000 {
            let p = Point::new(rng.next_f64() * 14.0 - 7.0, rng.next_f64() * 40.0 - 5.0);
            if !ch.strictly_outside(p) {
                continue;
            }
            tested += 1;
            let vis = ch.visible_edges(p).unwrap();
            let scan: Vec<usize> = (0..ch.edge_count())
                .filter(|&e| side_of(p, ch.edge_line(e)) == Ok(Side::LeftOpen))
                .collect();
            assert!(!scan.is_empty());
            assert_eq!(scan.first(), Some(&vis.lo));
            assert_eq!(scan.last(), Some(&vis.hi));
            assert_eq!(scan.len(), vis.hi - vis.lo + 1, "visibility contiguous");
        }
    }

    #[test]
    fn pencil_extremes() {
        let ch = parabola_hull(6);
        // far above everything: all edges visible
        let p = Point::new(0.0, 1e6);
        let pen = ch.pencil_of(p).unwrap();
        assert_eq!(pen.slab, Slab { lo: 0, hi: ch.edge_count() - 1 });
        assert!(pen.left_touch.is_none());
        assert!(pen.right_touch.is_none());
        // just above one edge: single-edge pencil
        let e = 2;
        let l = ch.edge_line(e);
        let mid_x = (ch.vertices()[e - 1].x + ch.vertices()[e].x) / 2.0;
        let p = Point::new(mid_x, l.y_at(mid_x) + 1e-6);
        let pen = ch.pencil_of(p).unwrap();
        assert_eq!(pen.slab, Slab { lo: e, hi: e });
        // a point inside C is a contract violation
        assert!(ch.pencil_of(Point::new(0.0, -100.0)).is_err());
    }

    #[test]
    fn below_seg_cases() {
        let ch = parabola_hull(6);
        let vs = ch.vertices();
        // interior chord
        let (lo, hi) = (1usize, 3usize);
        let (a, b) = (vs[lo - 1], vs[hi]);
        let mid = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0 - 1.0);
        assert!(ch.strictly_below_seg(mid, lo, hi));
        let above = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0 + 1.0);
        assert!(!ch.strictly_below_seg(above, lo, hi));
        // unbounded spans use the piecewise chord; below it still means inside C
        let p = Point::new(vs[0].x - 3.0, ch.edge_line(0).y_at(vs[0].x - 3.0) - 50.0);
        assert!(ch.strictly_below_seg(p, 0, 2));
        assert!(!ch.strictly_outside(p), "below-seg implies inside C");
        let deep = Point::new(0.0, -1e9);
        assert!(ch.strictly_below_seg(deep, 0, ch.leaf_count() - 1));
        assert!(!ch.strictly_outside(deep));
        let high = Point::new(0.0, 1e9);
        assert!(!ch.strictly_below_seg(high, 0, ch.leaf_count() - 1));
    }

    #[test]
    fn directions_are_clockwise_and_normal() {
        let n = 128;
        let d = crate::distributions::mixed_continuous(n, 7).unwrap();
        let q = d.sample(0);
        let params = HullLearnParams::default();
        let dirs = canonical_directions(&q, params.level(n), params.spacing(n)).unwrap();
        assert!(dirs.directions.len() >= 2);
        for v in &dirs.directions {
            assert!(v.1 > 0.0, "upward");
        }
        for w in dirs.directions.windows(2) {
            // clockwise for upward vectors: x-component increases
            assert!(w[0].0 < w[1].0, "clockwise order: {w:?}");
        }
        let lines = canonical_lines(&q, &dirs, params.tail(n)).unwrap();
        for ((l, v), r) in lines.iter().zip(&dirs.directions).zip(&dirs.r_points) {
            // the line's slope equals the defining dual slope bit-exactly,
            // which is what normality reduces to
            assert_eq!(l.slope(), 2.0 * r.x, "line parallel to its dual");
            let dot = v.0 + l.slope() * v.1;
            assert!(dot.abs() <= 1e-12 * (1.0 + l.slope().abs()), "dot = {dot}");
        }
    }

    #[test]
    fn tail_zero_passes_through_extremal_points() {
        let n = 64;
        let d = crate::distributions::fixed_random(n, 3).unwrap();
        let q = d.sample(0);
        let params = HullLearnParams::default();
        let dirs = canonical_directions(&q, params.level(n), params.spacing(n)).unwrap();
        let lines = canonical_lines(&q, &dirs, 0).unwrap();
        for (l, v) in lines.iter().zip(&dirs.directions) {
            // the line should support the hull: the extremal point for v lies on it
            let best = crate::certificates::directional_argmax(&q.points, *v);
            let p = q.points[best];
            let dy = (l.y_at(p.x) - p.y).abs();
            assert!(dy <= 1e-6 * (1.0 + p.y.abs()), "dy = {dy}");
        }
    }

    #[test]
    fn directions_partition_the_hull_into_small_groups() {
        // on a frozen instance, consecutive directional extrema bound groups
        // of at most about `spacing` hull vertices
        let n = 256;
        let d = crate::distributions::fixed_random(n, 6).unwrap();
        let q = d.sample(0);
        let params = HullLearnParams::default();
        let spacing = params.spacing(n);
        let dirs = canonical_directions(&q, params.level(n), spacing).unwrap();
        let hull = crate::geometry::upper_hull_monotone(&q.points).unwrap();
        let mut extremes: Vec<usize> = dirs
            .directions
            .iter()
            .map(|&v| crate::certificates::directional_argmax(&q.points, v))
            .collect();
        extremes.dedup();
        let pos: Vec<usize> = extremes
            .iter()
            .filter_map(|e| hull.iter().position(|h| h == e))
            .collect();
        for w in pos.windows(2) {
            let gap = w[1].abs_diff(w[0]);
            assert!(gap <= 2 * spacing, "group of {gap} hull vertices exceeds 2x spacing");
        }
    }

    #[test]
    fn direction_count_formula() {
        // k = n / log^2 n at n = 65536: spacing 256
        let params = HullLearnParams::default();
        assert_eq!(params.spacing(65536), 256);
        assert_eq!(65536 / params.spacing(65536), 256);
    }

    #[test]
    fn claim_h_properties() {
        // H' lies below the 2L-level and has at most 2n vertices
        let n = 96;
        let d = crate::distributions::mixed_continuous(n, 13).unwrap();
        let q = d.sample(0);
        let level = 8;
        let lines: Vec<DirectedLine> = q.points.iter().map(|&p| dual_point_to_line(p).unwrap()).collect();
        let lev = compute_level(&lines, level).unwrap();
        let verts = lev.vertices(&lines);
        let chain_idx = upper_hull_vertices(&verts).unwrap();
        assert!(chain_idx.len() <= 2 * n);
        let chain: Vec<Point> = chain_idx.iter().map(|&i| verts[i]).collect();
        for w in chain.windows(2) {
            let mid = Point::new((w[0].x + w[1].x) / 2.0, (w[0].y + w[1].y) / 2.0);
            assert!(lines_strictly_below(&lines, mid, None) <= 2 * level);
        }
        // each line meets the chain at most twice
        for l in &lines {
            assert!(chain_meets(&chain, l).len() <= 2);
        }
    }
}
