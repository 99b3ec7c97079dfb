//! Planar primitives, exact predicates, point/line duality, and the baseline
//! hull and maxima algorithms used as oracles and subroutines.
//!
//! Coordinates are `f64`. Orientation and line-side predicates evaluate a fast
//! floating-point filter and fall back to exact arithmetic when the forward
//! error bound cannot certify the sign, so predicate results are never wrong.
//!
//! General position: the hull algorithms assume distinct x-coordinates except
//! for exact duplicate points (the sampling jitter in `distributions` makes
//! this hold with probability one). Points collinear on a hull edge count as
//! extremal, which keeps witness pairs well-defined as open regions.

use crate::error::{Error, Result};
use crate::metrics::tally_comparison;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Global tie-break order: (x, y) lexicographic. Callers that need a total
/// order over instance points extend this with the point index.
pub fn lex_cmp(p: &Point, q: &Point) -> Ordering {
    tally_comparison();
    p.x.partial_cmp(&q.x)
        .unwrap()
        .then(p.y.partial_cmp(&q.y).unwrap())
}

/// One index-aligned draw from a product distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub points: Vec<Point>,
}

impl Instance {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("instance must be non-empty".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate ({}, {})",
                p.x, p.y
            )));
        }
        Ok(Instance { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    LeftOpen,
    On,
    RightOpen,
}

/// Sign of the cross product (q-p) x (r-p): +1 left turn, 0 collinear,
/// -1 right turn. Exact for all finite inputs.
pub fn orientation(p: Point, q: Point, r: Point) -> Result<i32> {
    if !p.is_finite() || !q.is_finite() || !r.is_finite() {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    Ok(orientation_unchecked(p, q, r))
}

#[inline]
pub(crate) fn orientation_unchecked(p: Point, q: Point, r: Point) -> i32 {
    tally_comparison();
    let det = robust::orient2d(
        robust::Coord { x: p.x, y: p.y },
        robust::Coord { x: q.x, y: q.y },
        robust::Coord { x: r.x, y: r.y },
    );
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

/// True iff both coordinates of `p` are at least those of `q` (reflexive).
pub fn dominates(p: Point, q: Point) -> bool {
    tally_comparison();
    p.x >= q.x && p.y >= q.y
}

/// Strict form of dominance used to break ties between coincident points:
/// `q` beats `p` iff `q` dominates `p` and `q` follows `p` in the global
/// (x, y, index) order. Maximality means "beaten by nobody", which stays
/// consistent when inputs repeat points.
pub fn beats(q: Point, qi: usize, p: Point, pi: usize) -> bool {
    if !dominates(q, p) {
        return false;
    }
    lex_cmp(&q, &p).then(qi.cmp(&pi)) == Ordering::Greater
}

// ---------------------------------------------------------------------------
// Exact sign of a*x + b*y + c
// ---------------------------------------------------------------------------

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    (s, (a - av) + (b - bv))
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Exact sign of the sum of `terms` via repeated error-free transformations.
/// Each pass replaces the terms by a running sum plus its rounding residuals,
/// preserving the exact sum. The pass result decides the sign once it either
/// has no residuals (the sum is exactly representable) or strictly dominates
/// their total magnitude; every pass sharpens the accumulated precision by a
/// full mantissa width, so this happens within the f64 exponent range.
fn exact_sum_sign(terms: &mut Vec<f64>) -> i32 {
    for _ in 0..64 {
        let mut q = 0.0f64;
        let mut residuals: Vec<f64> = Vec::new();
        for &t in terms.iter() {
            let (s, e) = two_sum(q, t);
            q = s;
            if e != 0.0 {
                residuals.push(e);
            }
        }
        if residuals.is_empty() {
            return if q > 0.0 {
                1
            } else if q < 0.0 {
                -1
            } else {
                0
            };
        }
        let spread: f64 = residuals.iter().map(|r| r.abs()).sum();
        if q.abs() > 2.0 * spread * (1.0 + residuals.len() as f64 * f64::EPSILON) {
            return if q > 0.0 { 1 } else { -1 };
        }
        residuals.push(q);
        *terms = residuals;
    }
    unreachable!("exact summation did not converge");
}

/// Exact sign of a*x + b*y + c for finite f64 inputs.
fn line_eval_sign(a: f64, b: f64, c: f64, x: f64, y: f64) -> i32 {
    let (p1, e1) = two_product(a, x);
    let (p2, e2) = two_product(b, y);
    let det = p1 + p2 + c;
    let bound = 4.0 * f64::EPSILON * (p1.abs() + p2.abs() + c.abs());
    if det > bound {
        return 1;
    }
    if det < -bound {
        return -1;
    }
    exact_sum_sign(&mut vec![p1, e1, p2, e2, c])
}

// ---------------------------------------------------------------------------
// Directed lines and duality
// ---------------------------------------------------------------------------

/// A directed line with open halfplanes l+ (left) and l- (right).
///
/// Two representations are kept so that the side predicate is exact for both
/// construction routes: a line through two input points evaluates via the
/// orientation predicate, while a coefficient line {a*x + b*y + c = 0} with
/// left = positive sign evaluates via exact expansion arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DirectedLine {
    Through { u: Point, w: Point },
    Coeffs { a: f64, b: f64, c: f64 },
}

impl DirectedLine {
    /// Line directed from `u` towards `w`; l+ is the open halfplane to the left.
    pub fn through(u: Point, w: Point) -> Result<Self> {
        if !u.is_finite() || !w.is_finite() {
            return Err(Error::InvalidInput("non-finite point".into()));
        }
        if u == w {
            return Err(Error::InvalidInput("coincident defining points".into()));
        }
        Ok(DirectedLine::Through { u, w })
    }

    /// Line {a*x + b*y + c = 0}, with l+ = {a*x + b*y + c > 0}. Requires
    /// b != 0: coefficient lines arise from the point duality and slope form,
    /// neither of which produces vertical lines.
    pub fn from_coeffs(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        if b == 0.0 {
            return Err(Error::InvalidInput(
                "vertical coefficient line (b = 0) rejected".into(),
            ));
        }
        Ok(DirectedLine::Coeffs { a, b, c })
    }

    /// Non-vertical line y = m*x + q oriented so that l+ is the region above.
    pub fn slope_intercept(m: f64, q: f64) -> Result<Self> {
        DirectedLine::from_coeffs(-m, 1.0, -q)
    }

    /// Coefficients (a, b, c) of {a*x + b*y + c = 0} with l+ = positive side.
    /// Derived (inexact) for two-point lines; exact for coefficient lines.
    pub fn coeffs(&self) -> (f64, f64, f64) {
        match *self {
            DirectedLine::Through { u, w } => {
                (u.y - w.y, w.x - u.x, u.x * w.y - w.x * u.y)
            }
            DirectedLine::Coeffs { a, b, c } => (a, b, c),
        }
    }

    pub fn is_vertical(&self) -> bool {
        match *self {
            DirectedLine::Through { u, w } => u.x == w.x,
            DirectedLine::Coeffs { .. } => false,
        }
    }

    /// Slope of a non-vertical line.
    pub fn slope(&self) -> f64 {
        match *self {
            DirectedLine::Through { u, w } => (w.y - u.y) / (w.x - u.x),
            DirectedLine::Coeffs { a, b, .. } => -a / b,
        }
    }

    /// y-value at `x` for a non-vertical line.
    pub fn y_at(&self, x: f64) -> f64 {
        match *self {
            DirectedLine::Through { u, w } => u.y + (w.y - u.y) * (x - u.x) / (w.x - u.x),
            DirectedLine::Coeffs { a, b, c } => -(a * x + c) / b,
        }
    }
}

/// Classify `p` against `l`: LeftOpen, On, or RightOpen. Exact.
pub fn side_of(p: Point, l: &DirectedLine) -> Result<Side> {
    if !p.is_finite() {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    let sign = match *l {
        DirectedLine::Through { u, w } => orientation_unchecked(u, w, p),
        DirectedLine::Coeffs { a, b, c } => {
            tally_comparison();
            line_eval_sign(a, b, c, p.x, p.y)
        }
    };
    Ok(match sign {
        1 => Side::LeftOpen,
        -1 => Side::RightOpen,
        _ => Side::On,
    })
}

/// Standard duality along the unit paraboloid: point p maps to the line
/// y = 2*x(p)*x - y(p), oriented with l+ above.
pub fn dual_point_to_line(p: Point) -> Result<DirectedLine> {
    if !p.is_finite() {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    // y = 2 x(p) x - y(p)  =>  -2x(p)*x + y + y(p) = 0, exact coefficients.
    DirectedLine::from_coeffs(-2.0 * p.x, 1.0, p.y)
}

/// Inverse of `dual_point_to_line`; rejects vertical lines.
pub fn dual_line_to_point(l: &DirectedLine) -> Result<Point> {
    if l.is_vertical() {
        return Err(Error::InvalidInput("vertical line has no dual point".into()));
    }
    let (a, b, c) = l.coeffs();
    let m = -a / b;
    let q = -c / b;
    Ok(Point::new(m / 2.0, -q))
}

// ---------------------------------------------------------------------------
// Upper hulls
// ---------------------------------------------------------------------------

/// Plain top-down mergesort. The classical baselines sort with this instead
/// of the standard library's adaptive sort so that their measured comparison
/// counts stay Theta(n log n) on presorted adversarial inputs.
pub(crate) fn merge_sort_by<T: Copy>(v: &mut [T], cmp: &mut impl FnMut(&T, &T) -> Ordering) {
    let n = v.len();
    if n <= 1 {
        return;
    }
    let mid = n / 2;
    let (a, b) = v.split_at_mut(mid);
    merge_sort_by(a, cmp);
    merge_sort_by(b, cmp);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if cmp(&a[i], &b[j]) != Ordering::Greater {
            merged.push(a[i]);
            i += 1;
        } else {
            merged.push(b[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&a[i..]);
    merged.extend_from_slice(&b[j..]);
    v.copy_from_slice(&merged);
}

fn validate_points(points: &[Point]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    Ok(())
}

/// Processing order for the upper chain: x ascending, y descending (the top
/// of a tied column first), index last for determinism.
fn upper_order(points: &[Point], i: usize, j: usize) -> Ordering {
    tally_comparison();
    points[i]
        .x
        .partial_cmp(&points[j].x)
        .unwrap()
        .then(points[j].y.partial_cmp(&points[i].y).unwrap())
        .then(i.cmp(&j))
}

/// Strict vertex chain of the upper hull of `points` (distinct points,
/// left-to-right, no collinear interior vertices), as indices. `order` must
/// follow `upper_order`.
fn monotone_vertex_chain(points: &[Point], order: &[usize]) -> Vec<usize> {
    let mut chain: Vec<usize> = Vec::new();
    for &i in order {
        if let Some(&last) = chain.last() {
            if points[last] == points[i] {
                continue;
            }
        }
        while chain.len() >= 2 {
            let a = points[chain[chain.len() - 2]];
            let b = points[chain[chain.len() - 1]];
            // pop b unless the chain makes a strict right turn at b
            if orientation_unchecked(a, b, points[i]) < 0 {
                break;
            }
            chain.pop();
        }
        chain.push(i);
    }
    // a trailing tied column leaves a vertical edge; only its top is on the hull
    while chain.len() >= 2 && points[chain[chain.len() - 1]].x == points[chain[chain.len() - 2]].x
    {
        chain.pop();
    }
    chain
}

/// All indices whose point lies on the boundary chain (vertices, exact
/// duplicates of vertices, and points collinear in the interior of an edge),
/// sorted by the global (x, y, index) order.
fn boundary_indices(points: &[Point], chain: &[usize]) -> Vec<usize> {
    let verts: Vec<Point> = chain.iter().map(|&i| points[i]).collect();
    let mut out: Vec<usize> = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        // edge whose x-interval contains p
        let k = verts.partition_point(|v| {
            tally_comparison();
            v.x < p.x
        });
        let mut on = false;
        if k < verts.len() && verts[k] == p {
            on = true;
        }
        if !on && k > 0 && k < verts.len() {
            let (u, w) = (verts[k - 1], verts[k]);
            on = p == u
                || p == w
                || (u.x < p.x && p.x < w.x && orientation_unchecked(u, w, p) == 0);
        }
        if !on && k > 0 && verts[k - 1] == p {
            on = true;
        }
        if on {
            out.push(i);
        }
    }
    out.sort_by(|&i, &j| lex_cmp(&points[i], &points[j]).then(i.cmp(&j)));
    out
}

/// Andrew's monotone chain upper hull. Returns the indices of all points on
/// the upper hull boundary, sorted left to right (ties by y then index).
pub fn upper_hull_monotone(points: &[Point]) -> Result<Vec<usize>> {
    validate_points(points)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    merge_sort_by(&mut order, &mut |&i, &j| upper_order(points, i, j));
    let chain = monotone_vertex_chain(points, &order);
    Ok(boundary_indices(points, &chain))
}

/// Strict vertex chain of the upper hull (indices, left to right).
pub(crate) fn upper_hull_vertices(points: &[Point]) -> Result<Vec<usize>> {
    validate_points(points)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| upper_order(points, i, j));
    Ok(monotone_vertex_chain(points, &order))
}

/// Output-sensitive upper hull (Chan's wrapping over group hulls, O(n log h)).
/// Same output contract as `upper_hull_monotone`.
pub fn upper_hull_output_sensitive(points: &[Point]) -> Result<Vec<usize>> {
    validate_points(points)?;
    let n = points.len();
    let mut m = 8usize.min(n.max(1));
    loop {
        if let Some(chain) = chan_round(points, m) {
            return Ok(boundary_indices(points, &chain));
        }
        if m >= n {
            // cannot happen: a budget of n wrap steps always suffices
            return Err(Error::InvalidInput("hull wrap did not terminate".into()));
        }
        m = m.saturating_mul(m).min(n);
    }
}

/// One round of Chan's algorithm with group size / step budget `m`.
/// Returns the strict vertex chain, or None if more than `m` wrap steps are
/// needed.
fn chan_round(points: &[Point], m: usize) -> Option<Vec<usize>> {
    let n = points.len();
    // group indices and their strict upper chains
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + m).min(n);
        let mut idx: Vec<usize> = (start..end).collect();
        idx.sort_by(|&i, &j| upper_order(points, i, j));
        groups.push(monotone_vertex_chain(points, &idx));
        start = end;
    }

    let leftmost = (0..n)
        .min_by(|&i, &j| lex_cmp(&points[i], &points[j]).then(i.cmp(&j)))
        .unwrap();
    // start at the top of the leftmost column
    let start_vertex = (0..n)
        .filter(|&i| points[i].x == points[leftmost].x)
        .max_by(|&i, &j| {
            points[i]
                .y
                .partial_cmp(&points[j].y)
                .unwrap()
                .then(j.cmp(&i))
        })
        .unwrap();
    let rightmost_x = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);

    let mut chain = vec![start_vertex];
    for _ in 0..m {
        let u = *chain.last().unwrap();
        if points[u].x == rightmost_x {
            return Some(chain);
        }
        let mut best: Option<usize> = None;
        for g in &groups {
            if let Some(cand) = group_tangent(points, g, u) {
                best = Some(match best {
                    None => cand,
                    Some(b) => pick_steeper(points, u, b, cand),
                });
            }
        }
        match best {
            Some(next) => chain.push(next),
            None => return Some(chain),
        }
    }
    None
}

/// Between candidates `b` and `c` (both right of `u`), pick the one of larger
/// slope from `u`; on collinear ties pick the farther. Exact via orientation.
fn pick_steeper(points: &[Point], u: usize, b: usize, c: usize) -> usize {
    match orientation_unchecked(points[u], points[b], points[c]) {
        1 => c,
        -1 => b,
        _ => {
            if points[c].x > points[b].x {
                c
            } else {
                b
            }
        }
    }
}

/// Tangent point from `u` to the part of the concave chain `g` strictly right
/// of `u`: the vertex maximizing the slope from `u`. Binary search on the
/// unimodal slope sequence.
fn group_tangent(points: &[Point], g: &[usize], u: usize) -> Option<usize> {
    let from = g.partition_point(|&i| {
        tally_comparison();
        points[i].x <= points[u].x
    });
    let seg = &g[from..];
    if seg.is_empty() {
        return None;
    }
    let (mut lo, mut hi) = (0usize, seg.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        // slope increasing at mid => peak is right of mid
        match orientation_unchecked(points[u], points[seg[mid]], points[seg[mid + 1]]) {
            1 => lo = mid + 1,
            -1 => hi = mid,
            _ => lo = mid + 1, // collinear: prefer the farther point
        }
    }
    Some(seg[lo])
}

// ---------------------------------------------------------------------------
// Maxima sweep
// ---------------------------------------------------------------------------

use crate::certificates::MaximaCertificate;

/// Right-to-left sweep producing a valid maxima certificate. Baseline and
/// oracle for the self-improving engine.
pub fn maxima_sweep(points: &[Point]) -> Result<MaximaCertificate> {
    validate_points(points)?;
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    merge_sort_by(&mut order, &mut |&i, &j| {
        lex_cmp(&points[j], &points[i]).then(j.cmp(&i)) // descending (x, y, index)
    });
    let mut maximal_rl: Vec<usize> = Vec::new();
    let mut witnesses: Vec<Option<usize>> = vec![None; n];
    let mut front: Option<usize> = None;
    for &i in &order {
        match front {
            Some(f) if beats(points[f], f, points[i], i) => witnesses[i] = Some(f),
            _ => {
                maximal_rl.push(i);
                front = Some(i);
            }
        }
    }
    maximal_rl.reverse();
    Ok(MaximaCertificate {
        maximal_indices: maximal_rl,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn orientation_basic() {
        assert_eq!(orientation(p(0., 0.), p(1., 0.), p(0., 1.)).unwrap(), 1);
        assert_eq!(orientation(p(0., 0.), p(1., 1.), p(2., 2.)).unwrap(), 0);
        assert_eq!(orientation(p(0., 0.), p(0., 1.), p(1., 0.)).unwrap(), -1);
        assert!(orientation(p(f64::NAN, 0.), p(0., 1.), p(1., 0.)).is_err());
    }

    #[test]
    fn side_of_basic() {
        let l = DirectedLine::through(p(0., 0.), p(1., 0.)).unwrap();
        assert_eq!(side_of(p(0., 1.), &l).unwrap(), Side::LeftOpen);
        assert_eq!(side_of(p(5., 0.), &l).unwrap(), Side::On);
        assert_eq!(side_of(p(0., -1.), &l).unwrap(), Side::RightOpen);
    }

    #[test]
    fn side_of_coeff_line_matches_two_point_line() {
        // y = 2x - 1 through (0,-1) and (1,1)
        let lc = DirectedLine::slope_intercept(2.0, -1.0).unwrap();
        let lp = DirectedLine::through(p(0., -1.), p(1., 1.)).unwrap();
        for q in [p(0., 0.), p(0.5, 0.0), p(0.25, -0.5), p(3., 5.), p(3., 4.999)] {
            assert_eq!(side_of(q, &lc).unwrap(), side_of(q, &lp).unwrap());
        }
    }

    #[test]
    fn dominates_basic() {
        assert!(dominates(p(2., 3.), p(1., 1.)));
        assert!(!dominates(p(2., 0.), p(1., 1.)));
        assert!(dominates(p(1., 1.), p(1., 1.)));
    }

    #[test]
    fn duality_examples() {
        // origin dualizes to the x-axis
        let l = dual_point_to_line(p(0., 0.)).unwrap();
        assert_eq!(l.slope(), 0.0);
        assert_eq!(l.y_at(3.0), 0.0);
        // (1,1) -> y = 2x - 1
        let l = dual_point_to_line(p(1., 1.)).unwrap();
        assert_eq!(l.slope(), 2.0);
        assert_eq!(l.y_at(0.0), -1.0);
        // (-1,2) -> y = -2x - 2
        let l = dual_point_to_line(p(-1., 2.)).unwrap();
        assert_eq!(l.slope(), -2.0);
        assert_eq!(l.y_at(0.0), -2.0);
    }

    #[test]
    fn vertical_dual_rejected() {
        let v = DirectedLine::through(p(1., 0.), p(1., 5.)).unwrap();
        assert!(dual_line_to_point(&v).is_err());
        assert!(DirectedLine::from_coeffs(1.0, 0.0, -3.0).is_err());
    }

    #[test]
    fn hull_triangle_and_dip() {
        let pts = vec![p(0., 0.), p(1., 1.), p(2., 0.)];
        assert_eq!(upper_hull_monotone(&pts).unwrap(), vec![0, 1, 2]);
        let pts = vec![p(0., 0.), p(1., -1.), p(2., 0.)];
        assert_eq!(upper_hull_monotone(&pts).unwrap(), vec![0, 2]);
        assert!(upper_hull_monotone(&[]).is_err());
    }

    #[test]
    fn hull_tent_by_hand() {
        let mut pts: Vec<Point> = (0..10).map(|i| p(i as f64, 0.)).collect();
        pts.push(p(5., 5.));
        let hull = upper_hull_output_sensitive(&pts).unwrap();
        let got: Vec<Point> = hull.iter().map(|&i| pts[i]).collect();
        assert_eq!(got, vec![p(0., 0.), p(5., 5.), p(9., 0.)]);
    }

    /// O(n^3) oracle: a point is extremal iff no pair of other points forms a
    /// strict witness for it (open lower semislab containment).
    pub(crate) fn brute_force_hull(points: &[Point]) -> Vec<usize> {
        let n = points.len();
        let mut out = Vec::new();
        'outer: for i in 0..n {
            for q in 0..n {
                for r in 0..n {
                    if q == i || r == i {
                        continue;
                    }
                    let (a, b) = (points[q], points[r]);
                    if a.x < points[i].x
                        && points[i].x < b.x
                        && orientation_unchecked(a, b, points[i]) == -1
                    {
                        continue 'outer; // strictly below segment a-b
                    }
                }
            }
            out.push(i);
        }
        out.sort_by(|&i, &j| lex_cmp(&points[i], &points[j]).then(i.cmp(&j)));
        out
    }

    /// O(n^2) dominance oracle for the maximal set.
    pub(crate) fn brute_force_maxima(points: &[Point]) -> Vec<usize> {
        let n = points.len();
        (0..n)
            .filter(|&i| (0..n).all(|j| !beats(points[j], j, points[i], i)))
            .collect()
    }

    #[test]
    fn hull_matches_brute_force_random() {
        let mut rng = crate::distributions::SplitMix::new(0x5eed);
        for trial in 0..200 {
            let n = 3 + (trial % 8);
            let pts: Vec<Point> = (0..n)
                .map(|_| {
                    p(
                        (rng.next_u64() % 32) as f64,
                        (rng.next_u64() % 32) as f64,
                    )
                })
                .collect();
            // keep x-coordinates distinct or exactly duplicated points
            let mut seen = std::collections::HashMap::new();
            let mut ok = true;
            for q in &pts {
                if let Some(y) = seen.insert(q.x.to_bits(), q.y) {
                    if y != q.y {
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            let expect = brute_force_hull(&pts);
            assert_eq!(upper_hull_monotone(&pts).unwrap(), expect, "{pts:?}");
            assert_eq!(upper_hull_output_sensitive(&pts).unwrap(), expect);
        }
    }

    #[test]
    fn maxima_sweep_matches_brute_force() {
        let mut rng = crate::distributions::SplitMix::new(0xfeed);
        for trial in 0..400 {
            let n = 1 + (trial % 64);
            let pts: Vec<Point> = (0..n)
                .map(|_| {
                    p(
                        (rng.next_u64() % 24) as f64,
                        (rng.next_u64() % 24) as f64,
                    )
                })
                .collect();
            let cert = maxima_sweep(&pts).unwrap();
            let mut got = cert.maximal_indices.clone();
            got.sort_unstable();
            assert_eq!(got, brute_force_maxima(&pts), "{pts:?}");
        }
    }

    #[test]
    fn maxima_sweep_chain_and_staircase() {
        let cert = maxima_sweep(&[p(0., 0.), p(1., 1.), p(2., 2.)]).unwrap();
        assert_eq!(cert.maximal_indices, vec![2]);
        assert_eq!(cert.witnesses[0], Some(2));
        assert_eq!(cert.witnesses[1], Some(2));
        let cert = maxima_sweep(&[p(0., 2.), p(1., 1.), p(2., 0.)]).unwrap();
        assert_eq!(cert.maximal_indices, vec![0, 1, 2]);
    }

    #[test]
    fn output_sensitive_comparison_scaling() {
        // h = 3 tent over n collinear-ish points: comparisons grow ~n, not ~n log n
        let mut counts = Vec::new();
        for &n in &[1000usize, 10000] {
            let mut pts: Vec<Point> = (0..n).map(|i| p(i as f64, 0.)).collect();
            pts.push(p(n as f64 / 2.0, n as f64));
            let (_, c) = crate::metrics::with_comparison_tally(|| {
                upper_hull_output_sensitive(&pts).unwrap()
            });
            counts.push(c as f64 / n as f64);
        }
        // per-point cost roughly flat across a 10x size increase
        assert!(
            counts[1] < counts[0] * 2.0,
            "per-point comparisons grew: {counts:?}"
        );
    }

    proptest! {
        #[test]
        fn orientation_antisymmetric_translation_invariant(
            xs in proptest::collection::vec(-1000i64..1000, 9),
            dx in -500i64..500, dy in -500i64..500,
        ) {
            let pts: Vec<Point> = xs.chunks(2).take(3).map(|c| p(c[0] as f64, c[1] as f64)).collect();
            prop_assume!(pts.len() == 3);
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            let o = orientation(a, b, c).unwrap();
            prop_assert_eq!(o, -orientation(a, c, b).unwrap());
            let t = |q: Point| p(q.x + dx as f64, q.y + dy as f64);
            prop_assert_eq!(o, orientation(t(a), t(b), t(c)).unwrap());
        }

        #[test]
        fn duality_involution(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let q = p(x, y);
            let back = dual_line_to_point(&dual_point_to_line(q).unwrap()).unwrap();
            prop_assert_eq!(back, q);
        }

        #[test]
        fn hull_routes_agree(
            coords in proptest::collection::vec((-50i64..50, -50i64..50), 1..40)
        ) {
            let mut seen = std::collections::HashMap::new();
            let mut pts = Vec::new();
            for (x, y) in coords {
                // distinct x unless exact duplicate
                match seen.get(&x) {
                    Some(&oy) => pts.push(p(x as f64, oy as f64)),
                    None => { seen.insert(x, y); pts.push(p(x as f64, y as f64)); }
                }
            }
            let a = upper_hull_monotone(&pts).unwrap();
            let b = upper_hull_output_sensitive(&pts).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn side_of_exactness_integer_grid(
            a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000,
            x in -1000i64..1000, y in -1000i64..1000,
        ) {
            // integer inputs: exact sign equals i128 arithmetic
            let l = DirectedLine::from_coeffs(a as f64, b as f64, c as f64).unwrap();
            let s = side_of(p(x as f64, y as f64), &l).unwrap();
            let v = (a as i128) * (x as i128) + (b as i128) * (y as i128) + c as i128;
            let expect = if v > 0 { Side::LeftOpen } else if v < 0 { Side::RightOpen } else { Side::On };
            prop_assert_eq!(s, expect);
        }
    }
}
