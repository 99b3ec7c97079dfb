//! Limiting-phase hull computation: the location algorithm (one search step
//! per round, three deactivation cases) and the construction algorithm that
//! assembles the upper hull from the located information, with a worst-case
//! fallback when the learned success conditions fail.

use crate::bucket_heap::BucketHeap;
use crate::certificates::{
    certificate_from_hull, directional_argmax, CCertificate, CSlabKind, HullCertificate,
};
use crate::error::{Error, Result};
use crate::geometry::{
    lex_cmp, orientation_unchecked, side_of, upper_hull_monotone, upper_hull_output_sensitive,
    Instance, Point, Side,
};
use crate::hull_learning::{HullStructures, Pencil};
use crate::metrics::{comparisons_recorded, tally_comparison, RunMetrics};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Where the location algorithm left each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocationOutcome {
    /// Strictly above the canonical hull.
    OutsideC,
    /// Strictly below the chord of this C-slab (hence inside C).
    BelowSeg { lo: usize, hi: usize },
    /// Inside the pencil of another located point.
    InPencil { owner: usize },
    /// Located to a leaf slab without a stronger conclusion (degenerate
    /// on-boundary points only).
    LeafSlab(usize),
}

/// Everything the construction algorithm consumes.
#[derive(Debug, Clone)]
pub struct LocationInfo {
    pub outcomes: Vec<LocationOutcome>,
    /// Extremal candidate per envelope edge (per canonical direction).
    pub candidates: Vec<Option<usize>>,
    /// Pencils of the points located outside C.
    pub pencils: Vec<Option<Pencil>>,
    pub outside_count: u64,
}

/// Optional per-round assertions for the structural claims, used by tests.
#[derive(Debug, Default)]
pub struct HullTranscript {
    pub enabled: bool,
    pub preconditions_hold: bool,
    /// True directional argmax point per edge.
    pub true_extremal: Vec<usize>,
    /// Pencil slab size for each true V-extremal point (outside C only).
    pencil_size: Vec<Option<usize>>,
    /// For points inside some true V-extremal pencil: the largest such
    /// pencil-slab size.
    pencil_membership: Vec<Option<usize>>,
    armed: Vec<bool>,
    pub violations: Vec<String>,
}

impl HullTranscript {
    pub fn new(instance: &Instance, structures: &HullStructures) -> Self {
        let ch = &structures.hull;
        let points = &instance.points;
        let n = points.len();
        let true_extremal: Vec<usize> = ch
            .directions()
            .iter()
            .map(|&v| directional_argmax(points, v))
            .collect();
        let mut distinct: Vec<usize> = true_extremal.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let preconditions_hold = distinct.iter().all(|&i| ch.strictly_outside(points[i]));
        let mut pencil_size = vec![None; n];
        let mut pencil_membership = vec![None; n];
        if preconditions_hold {
            for &ev in &distinct {
                let pen = ch.pencil_of(points[ev]).expect("outside point has a pencil");
                pencil_size[ev] = Some(pen.slab.size());
                for (i, entry) in pencil_membership.iter_mut().enumerate() {
                    if i != ev && pen.contains_in(points[i], ch) {
                        *entry = Some(entry.unwrap_or(0).max(pen.slab.size()));
                    }
                }
            }
        }
        HullTranscript {
            enabled: true,
            preconditions_hold,
            true_extremal,
            pencil_size,
            pencil_membership,
            armed: vec![false; n],
            violations: Vec::new(),
        }
    }
}

/// The location algorithm. Each round serves the active point with the
/// largest current slab, advances its search one node, and tries the three
/// deactivation cases.
pub fn locate_points(
    instance: &Instance,
    structures: &HullStructures,
    mut transcript: Option<&mut HullTranscript>,
) -> Result<(LocationInfo, RunMetrics)> {
    let n = instance.len();
    if structures.trees.len() != n {
        return Err(Error::InvalidInput(format!(
            "instance size {n} does not match {} learned trees",
            structures.trees.len()
        )));
    }
    let ch = &structures.hull;
    let points = &instance.points;
    let leaf_count = ch.leaf_count();
    let edge_count = ch.edge_count();
    let directions = ch.directions();
    let cmp0 = comparisons_recorded();
    let started = Instant::now();

    let mut heap = BucketHeap::new(leaf_count, n)?.strict();
    let mut cursors: Vec<_> = structures.trees.iter().map(|t| t.cursor()).collect();
    let mut handles = Vec::with_capacity(n);
    for i in 0..n {
        handles.push(Some(heap.insert(leaf_count, i)?));
    }

    let mut outcomes: Vec<Option<LocationOutcome>> = vec![None; n];
    let mut candidates: Vec<Option<usize>> = vec![None; edge_count];
    let mut pencils: Vec<Option<Pencil>> = vec![None; n];
    // per-edge holders of the left- and rightmost pencils seen so far
    let mut leftmost_pencil: Vec<Option<usize>> = vec![None; edge_count];
    let mut rightmost_pencil: Vec<Option<usize>> = vec![None; edge_count];
    let mut metrics = RunMetrics::default();
    let depth_budget = 2 * (usize::BITS - leaf_count.max(2).leading_zeros()) as u64 + 6;
    let round_limit = (n as u64 + 2) * depth_budget;

    // Case-2 processing: record the pencil, update extremal candidates for
    // every visible direction, and maintain the extreme pencil holders.
    macro_rules! process_outside {
        ($i:expr) => {{
            let i = $i;
            metrics.outside_count += 1;
            match ch.pencil_of(points[i]) {
                Ok(pen) => {
                    for e in pen.slab.lo..=pen.slab.hi {
                        let v = directions[e];
                        tally_comparison();
                        let replace = match candidates[e] {
                            None => true,
                            Some(c) => {
                                let dc = points[c].x * v.0 + points[c].y * v.1;
                                let di = points[i].x * v.0 + points[i].y * v.1;
                                di > dc
                                    || (di == dc
                                        && lex_cmp(&points[i], &points[c]).then(i.cmp(&c))
                                            == std::cmp::Ordering::Less)
                            }
                        };
                        if replace {
                            candidates[e] = Some(i);
                        }
                        let better_left = match leftmost_pencil[e] {
                            None => true,
                            Some(o) => {
                                let po = pencils[o].as_ref().unwrap();
                                pen.slab.lo < po.slab.lo
                                    || (pen.slab.lo == po.slab.lo
                                        && lex_cmp(&points[i], &points[o]) == std::cmp::Ordering::Less)
                            }
                        };
                        if better_left {
                            leftmost_pencil[e] = Some(i);
                        }
                        let better_right = match rightmost_pencil[e] {
                            None => true,
                            Some(o) => {
                                let po = pencils[o].as_ref().unwrap();
                                pen.slab.hi > po.slab.hi
                                    || (pen.slab.hi == po.slab.hi
                                        && lex_cmp(&points[i], &points[o]) == std::cmp::Ordering::Less)
                            }
                        };
                        if better_right {
                            rightmost_pencil[e] = Some(i);
                        }
                    }
                    pencils[i] = Some(pen);
                    outcomes[i] = Some(LocationOutcome::OutsideC);
                }
                Err(_) => {
                    // floating-point edge assignment near a vertex; fall back
                    // to a plain leaf location for this point
                    outcomes[i] = Some(LocationOutcome::LeafSlab(
                        ch.slabs().locate_leaf(points[i].x),
                    ));
                }
            }
        }};
    }

    while let Some((_m, i)) = heap.find_max() {
        metrics.rounds += 1;
        if metrics.rounds > round_limit {
            return Err(Error::ContractViolation(
                "hull location exceeded its round budget".into(),
            ));
        }
        let at_leaf_already = cursors[i].at_leaf().is_some();
        if !at_leaf_already {
            cursors[i].advance(points[i].x, ch.slabs());
        }
        let slab = cursors[i].slab();
        let p = points[i];

        // Case 1: below the chord of the current slab
        let mut deactivated = true;
        if ch.strictly_below_seg(p, slab.lo, slab.hi) {
            metrics.case_histogram[0] += 1;
            outcomes[i] = Some(LocationOutcome::BelowSeg {
                lo: slab.lo,
                hi: slab.hi,
            });
            heap.delete(handles[i].take().expect("active handle"))?;
        } else {
            let above_a = side_of(p, ch.edge_line(slab.lo))? == Side::LeftOpen;
            let above_b = side_of(p, ch.edge_line(slab.hi))? == Side::LeftOpen;
            if above_a || above_b {
                // Case 2: outside C
                metrics.case_histogram[1] += 1;
                heap.delete(handles[i].take().expect("active handle"))?;
                process_outside!(i);
            } else {
                // Case 3: compare against the rightmost pencil of the left
                // boundary edge and the leftmost pencil of the right one
                let mut resolved = false;
                for owner in [rightmost_pencil[slab.lo], leftmost_pencil[slab.hi]]
                    .into_iter()
                    .flatten()
                {
                    let pen = pencils[owner].as_ref().unwrap();
                    if pen.contains_in(p, ch) {
                        metrics.case_histogram[2] += 1;
                        outcomes[i] = Some(LocationOutcome::InPencil { owner });
                        heap.delete(handles[i].take().expect("active handle"))?;
                        resolved = true;
                        break;
                    } else if pen.above_in(p, ch) {
                        metrics.case_histogram[1] += 1;
                        heap.delete(handles[i].take().expect("active handle"))?;
                        process_outside!(i);
                        resolved = true;
                        break;
                    }
                }
                if !resolved {
                    if at_leaf_already {
                        // on-boundary pathology: settle for the leaf location
                        outcomes[i] = Some(LocationOutcome::LeafSlab(slab.lo));
                        heap.delete(handles[i].take().expect("active handle"))?;
                    } else {
                        metrics.case_histogram[3] += 1;
                        let h = handles[i].expect("active handle");
                        handles[i] = Some(heap.decrease_key(h, slab.size())?);
                        deactivated = false;
                    }
                }
            }
        }

        if let Some(t) = transcript.as_deref_mut() {
            if t.preconditions_hold {
                let size = slab.size();
                // identified-extremal claim: a V-extremal point whose slab is
                // no larger than its pencil slab deactivates as outside now
                if let Some(ps) = t.pencil_size[i] {
                    if size <= ps
                        && outcomes[i] != Some(LocationOutcome::OutsideC)
                    {
                        t.violations.push(format!(
                            "extremal point {i} at slab size {size} <= pencil {ps} not identified"
                        ));
                    }
                }
                // pencil-member claim: armed on reaching the threshold, must
                // deactivate the next time it is processed
                if t.armed[i] && !deactivated {
                    t.violations
                        .push(format!("pencil member {i} stayed active after arming"));
                }
                if let Some(thr) = t.pencil_membership[i] {
                    if size <= thr && !deactivated {
                        t.armed[i] = true;
                    }
                }
            }
        }
    }

    metrics.heap_ops = heap.counters.total_ops();
    metrics.comparisons = comparisons_recorded() - cmp0;
    metrics.wall_time = started.elapsed().as_secs_f64();
    for c in &cursors {
        metrics.record_steps(c.steps() as usize);
    }

    let info = LocationInfo {
        outcomes: outcomes
            .into_iter()
            .map(|o| o.expect("every point located"))
            .collect(),
        candidates,
        pencils,
        outside_count: metrics.outside_count,
    };

    if let Some(t) = transcript {
        post_location_checks(instance, structures, &info, t);
    }
    Ok((info, metrics))
}

/// No-pencil-overlap and adjacent-pencil assertions, checked after location
/// under their preconditions.
fn post_location_checks(
    instance: &Instance,
    structures: &HullStructures,
    info: &LocationInfo,
    t: &mut HullTranscript,
) {
    if !t.preconditions_hold {
        return;
    }
    let ch = &structures.hull;
    let points = &instance.points;
    let mut distinct: Vec<usize> = t.true_extremal.clone();
    distinct.sort_unstable();
    distinct.dedup();
    // a V-extremal point never lies inside the pencil of another outside point
    for (i, pen) in info.pencils.iter().enumerate() {
        if let Some(pen) = pen {
            for &ev in &distinct {
                if ev != i && pen.contains_in(points[ev], ch) {
                    t.violations
                        .push(format!("extremal point {ev} inside pencil of {i}"));
                }
            }
        }
    }
    // adjacent pencils overlap or share a boundary when every edge's upper
    // halfplane holds a V-extremal point
    let every_edge_covered = (0..ch.edge_count()).all(|e| {
        distinct
            .iter()
            .any(|&ev| side_of(points[ev], ch.edge_line(e)) == Ok(Side::LeftOpen))
    });
    if every_edge_covered {
        let mut sorted = distinct.clone();
        sorted.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
        for w in sorted.windows(2) {
            let (pa, pb) = (
                ch.pencil_of(points[w[0]]).unwrap(),
                ch.pencil_of(points[w[1]]).unwrap(),
            );
            if pa.slab.hi + 1 < pb.slab.lo {
                t.violations.push(format!(
                    "pencils of adjacent extremal points {} and {} are disjoint",
                    w[0], w[1]
                ));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Construction algorithm
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HullOutput {
    pub certificate: HullCertificate,
    pub c_certificate: CCertificate,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, Copy)]
enum Route {
    /// Proven non-extremal with a verified witness pair.
    Witness(usize, usize),
    /// Lies between adjacent confirmed extremal points (pair index).
    Group(usize),
    BoundLeft,
    BoundRight,
}

/// Assemble the upper hull and its certificate from the location output.
/// Falls back to the worst-case path when a success condition fails.
pub fn construct_hull(
    instance: &Instance,
    info: &LocationInfo,
    structures: &HullStructures,
) -> Result<HullOutput> {
    let ch = &structures.hull;
    let points = &instance.points;
    let n = points.len();
    let cmp0 = comparisons_recorded();
    let started = Instant::now();
    let mut metrics = RunMetrics::default();

    // success conditions: every direction has a candidate strictly above its
    // line, and not too many points ended up outside
    let directions = ch.directions();
    let candidates_ok = info
        .candidates
        .iter()
        .enumerate()
        .all(|(e, c)| match c {
            Some(i) => side_of(points[*i], ch.edge_line(e)) == Ok(Side::LeftOpen),
            None => false,
        });
    let outside_budget = 8 * n as u64 / (n.max(2) as f64).log2() as u64 + 64;
    if !candidates_ok || info.outside_count > outside_budget {
        return fallback_output(instance, ch, &directions, started, cmp0);
    }

    // Step 1: the confirmed extremal points, left to right
    let mut extremal: Vec<usize> = info.candidates.iter().map(|c| c.unwrap()).collect();
    extremal.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));
    extremal.dedup();
    if extremal.len() < 2 {
        return fallback_output(instance, ch, &directions, started, cmp0);
    }
    {
        // they must be in convex position; anything else means a candidate
        // is wrong and the run cannot be trusted
        let pts: Vec<Point> = extremal.iter().map(|&i| points[i]).collect();
        let chain = crate::geometry::upper_hull_vertices(&pts)?;
        if chain.len() != extremal.len() {
            return fallback_output(instance, ch, &directions, started, cmp0);
        }
    }
    let ve_set: Vec<bool> = {
        let mut v = vec![false; n];
        for &i in &extremal {
            v[i] = true;
        }
        v
    };
    let ve_x = |j: usize| points[extremal[j]].x;

    // V-pair of an x-coordinate: adjacent extremal pair framing it
    let pair_of_x = |x: f64| -> Option<usize> {
        if x < ve_x(0) || x > ve_x(extremal.len() - 1) {
            return None;
        }
        let j = extremal.partition_point(|&e| {
            tally_comparison();
            points[e].x <= x
        });
        Some(j.saturating_sub(1).min(extremal.len() - 2))
    };

    // Step 2: V-pairs for the hull vertices by a simultaneous traversal
    let vertex_pair: Vec<Option<usize>> = {
        let mut out = Vec::with_capacity(ch.vertices().len());
        let mut j = 0usize;
        for v in ch.vertices() {
            while j + 1 < extremal.len() && ve_x(j + 1) < v.x {
                j += 1;
            }
            if v.x < ve_x(0) || v.x > ve_x(extremal.len() - 1) {
                out.push(None);
            } else {
                out.push(Some(j.min(extremal.len() - 2)));
            }
        }
        out
    };

    let strict_witness = |p: usize, q: usize, r: usize| -> bool {
        points[q].x < points[p].x
            && points[p].x < points[r].x
            && orientation_unchecked(points[q], points[r], points[p]) == -1
    };

    // generic routing by x, used by every fallthrough path
    let route_by_x = |i: usize| -> Route {
        match pair_of_x(points[i].x) {
            None if points[i].x < ve_x(0) => Route::BoundLeft,
            None => Route::BoundRight,
            Some(j) => Route::Group(j),
        }
    };

    let mut routes: Vec<Option<Route>> = vec![None; n];
    let mut relocated_pencil: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if ve_set[i] {
            continue;
        }
        let route = match info.outcomes[i] {
            LocationOutcome::OutsideC | LocationOutcome::LeafSlab(_) => route_by_x(i),
            LocationOutcome::BelowSeg { lo, hi } => {
                // Step 4: O(1) resolution through the hull Z of the anchor
                // vertices' V-pairs
                step4_route(points, ch, &extremal, &vertex_pair, lo, hi, i)
                    .unwrap_or_else(|| route_by_x(i))
            }
            LocationOutcome::InPencil { owner } => {
                let owner = if ve_set[owner] {
                    Some(owner)
                } else {
                    // Step 5: relocate into a V-extremal pencil through the
                    // owner's V-pair, or detect that the point is outside C
                    let mut found = None;
                    if let Some(j) = pair_of_x(points[owner].x) {
                        for cand in [extremal[j], extremal[j + 1]] {
                            if let Some(pen) = info.pencils[cand].as_ref() {
                                if pen.contains_in(points[i], ch) {
                                    found = Some(cand);
                                    break;
                                }
                            }
                        }
                    }
                    found
                };
                relocated_pencil[i] = owner;
                match owner {
                    None => route_by_x(i),
                    Some(q) => {
                        // Step 6: O(1) resolution inside a V-extremal pencil
                        step6_route(points, ch, &extremal, &vertex_pair, info, q, i, &strict_witness)
                            .unwrap_or_else(|| route_by_x(i))
                    }
                }
            }
        };
        routes[i] = Some(route);
    }

    // Step 7: per adjacent pair, split the group by the connecting segment
    // and run the output-sensitive hull on the points above it
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); extremal.len() - 1];
    let mut bound_left: Vec<usize> = Vec::new();
    let mut bound_right: Vec<usize> = Vec::new();
    let mut witnesses: Vec<Option<(usize, usize)>> = vec![None; n];
    for i in 0..n {
        match routes[i] {
            None => {}
            Some(Route::Witness(q, r)) => witnesses[i] = Some((q, r)),
            Some(Route::Group(j)) => groups[j].push(i),
            Some(Route::BoundLeft) => bound_left.push(i),
            Some(Route::BoundRight) => bound_right.push(i),
        }
    }

    let mut final_extremal: Vec<usize> = extremal.clone();
    let mut step7_cost = 0.0f64;
    for (j, group) in groups.iter().enumerate() {
        let (e1, e2) = (extremal[j], extremal[j + 1]);
        let mut piece: Vec<usize> = vec![e1, e2];
        for &i in group {
            if strict_witness(i, e1, e2) {
                witnesses[i] = Some((e1, e2));
            } else {
                piece.push(i);
            }
        }
        if piece.len() > 2 {
            let above = piece.len() - 2;
            let (hull_size, _) = hull_piece(points, &piece, &mut final_extremal, &mut witnesses)?;
            step7_cost += above as f64 * ((hull_size.saturating_sub(2) + 1) as f64).log2().max(0.0)
                + above as f64;
        }
    }
    for (pts, anchor) in [(&bound_left, extremal[0]), (&bound_right, *extremal.last().unwrap())] {
        if pts.is_empty() {
            continue;
        }
        let mut piece = vec![anchor];
        piece.extend(pts.iter().copied());
        let above = piece.len() - 1;
        let (hull_size, _) = hull_piece(points, &piece, &mut final_extremal, &mut witnesses)?;
        step7_cost += above as f64 * ((hull_size.saturating_sub(1) + 1) as f64).log2().max(0.0)
            + above as f64;
    }

    final_extremal.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));
    final_extremal.dedup();
    for &i in &final_extremal {
        witnesses[i] = None;
    }
    let certificate = HullCertificate {
        extremal_indices: final_extremal,
        witness_pairs: witnesses,
    };

    // canonical-hull certificate from the location outcomes
    let mut v_extremal = extremal.clone();
    v_extremal.sort_unstable();
    let slabs = (0..n)
        .map(|i| {
            if ve_set[i] {
                return None;
            }
            Some(match info.outcomes[i] {
                LocationOutcome::BelowSeg { lo, hi } => CSlabKind::BelowSeg { lo, hi },
                LocationOutcome::LeafSlab(l) => CSlabKind::LeafSlab(l),
                LocationOutcome::OutsideC => {
                    CSlabKind::LeafSlab(ch.slabs().locate_leaf(points[i].x))
                }
                LocationOutcome::InPencil { .. } => match relocated_pencil[i] {
                    Some(owner) => CSlabKind::PencilSlab { owner },
                    None => CSlabKind::LeafSlab(ch.slabs().locate_leaf(points[i].x)),
                },
            })
        })
        .collect();
    let c_certificate = CCertificate {
        v_extremal_indices: v_extremal,
        slabs,
    };

    metrics.step7_cost = step7_cost;
    metrics.comparisons = comparisons_recorded() - cmp0;
    metrics.wall_time = started.elapsed().as_secs_f64();
    Ok(HullOutput {
        certificate,
        c_certificate,
        metrics,
    })
}

/// A point below a chord resolves in O(1) against the hull Z of the anchor
/// vertices' V-pair points: Z has at most three edges, the middle one is a
/// witness segment, the outer ones identify the V-pair.
#[allow(clippy::too_many_arguments)]
fn step4_route(
    points: &[Point],
    ch: &crate::hull_learning::CanonicalHull,
    extremal: &[usize],
    vertex_pair: &[Option<usize>],
    lo: usize,
    hi: usize,
    i: usize,
) -> Option<Route> {
    let v = ch.vertices().len();
    if lo == 0 || hi >= v {
        return None; // unbounded anchor: generic routing
    }
    let ja = vertex_pair[lo - 1]?;
    let jb = vertex_pair[hi]?;
    // positions into the sorted extremal list; adjacency is positional
    let mut z: Vec<usize> = vec![ja, ja + 1, jb, jb + 1];
    z.sort_unstable();
    z.dedup();
    let x = points[i].x;
    for w in z.windows(2) {
        let (q, r) = (extremal[w[0]], extremal[w[1]]);
        if points[q].x < x && x < points[r].x {
            if orientation_unchecked(points[q], points[r], points[i]) == -1 {
                // adjacent extremal pairs route to their group; longer
                // segments of the Z-hull are witness segments
                return Some(if w[1] == w[0] + 1 {
                    Route::Group(w[0])
                } else {
                    Route::Witness(q, r)
                });
            }
            return None;
        }
    }
    None
}

/// Resolution for a point inside the pencil of a confirmed extremal point:
/// either between one of the touch vertices' V-pairs, or below one of the
/// two segments from the apex to the outer V-pair points.
#[allow(clippy::too_many_arguments)]
fn step6_route(
    points: &[Point],
    ch: &crate::hull_learning::CanonicalHull,
    extremal: &[usize],
    vertex_pair: &[Option<usize>],
    info: &LocationInfo,
    q: usize,
    i: usize,
    strict_witness: &dyn Fn(usize, usize, usize) -> bool,
) -> Option<Route> {
    let pen = info.pencils[q].as_ref()?;
    let v = ch.vertices().len();
    let x = points[i].x;
    let pair_a = if pen.slab.lo == 0 { None } else { vertex_pair[pen.slab.lo - 1] };
    let pair_b = if pen.slab.hi >= v { None } else { vertex_pair[pen.slab.hi] };
    if let Some(ja) = pair_a {
        if points[extremal[ja]].x <= x && x <= points[extremal[ja + 1]].x {
            return Some(Route::Group(ja));
        }
        // below the segment from the pair's right point up to the apex
        let r1p = extremal[ja + 1];
        if strict_witness(i, r1p, q) {
            return Some(Route::Witness(r1p, q));
        }
    }
    if let Some(jb) = pair_b {
        if points[extremal[jb]].x <= x && x <= points[extremal[jb + 1]].x {
            return Some(Route::Group(jb));
        }
        let r2 = extremal[jb];
        if strict_witness(i, q, r2) {
            return Some(Route::Witness(q, r2));
        }
    }
    None
}

/// Output-sensitive hull of one piece; extends the extremal set and assigns
/// witnesses from the piece edge above each non-extremal member. Returns the
/// piece hull size.
fn hull_piece(
    points: &[Point],
    piece: &[usize],
    final_extremal: &mut Vec<usize>,
    witnesses: &mut [Option<(usize, usize)>],
) -> Result<(usize, ())> {
    let coords: Vec<Point> = piece.iter().map(|&i| points[i]).collect();
    let hull_local = upper_hull_output_sensitive(&coords)?;
    let hull_global: Vec<usize> = hull_local.iter().map(|&k| piece[k]).collect();
    let mut on_hull = vec![false; piece.len()];
    for &k in &hull_local {
        on_hull[k] = true;
    }
    // strict vertex chain for the witness edges
    let vert_pts: Vec<Point> = hull_local.iter().map(|&k| coords[k]).collect();
    let chain = crate::geometry::upper_hull_vertices(&vert_pts)?;
    let verts: Vec<usize> = chain.into_iter().map(|k| hull_global[k]).collect();
    for (k, &i) in piece.iter().enumerate() {
        if on_hull[k] {
            final_extremal.push(i);
            continue;
        }
        let e = verts.partition_point(|&u| {
            tally_comparison();
            points[u].x <= points[i].x
        });
        if e == 0 || e == verts.len() {
            return Err(Error::DegenerateInput(format!(
                "piece point {i} has no hull edge strictly above it"
            )));
        }
        let (q, r) = (verts[e - 1], verts[e]);
        if !(points[q].x < points[i].x
            && points[i].x < points[r].x
            && orientation_unchecked(points[q], points[r], points[i]) == -1)
        {
            return Err(Error::DegenerateInput(format!(
                "piece point {i} lacks a strict witness edge (tied x-coordinates?)"
            )));
        }
        witnesses[i] = Some((q, r));
    }
    Ok((hull_global.len(), ()))
}

/// Worst-case path: monotone-chain hull with binary-search witnesses, plus a
/// leaf-slab canonical certificate.
pub fn fallback_hull(instance: &Instance) -> Result<HullCertificate> {
    let hull = upper_hull_monotone(&instance.points)?;
    certificate_from_hull(&instance.points, &hull)
}

fn fallback_output(
    instance: &Instance,
    ch: &crate::hull_learning::CanonicalHull,
    directions: &[(f64, f64)],
    started: Instant,
    cmp0: u64,
) -> Result<HullOutput> {
    let certificate = fallback_hull(instance)?;
    let points = &instance.points;
    let mut v_extremal: Vec<usize> = directions
        .iter()
        .map(|&v| directional_argmax(points, v))
        .collect();
    v_extremal.sort_unstable();
    v_extremal.dedup();
    let in_ve = |i: usize| v_extremal.binary_search(&i).is_ok();
    let slabs = (0..points.len())
        .map(|i| {
            if in_ve(i) {
                None
            } else {
                Some(CSlabKind::LeafSlab(ch.slabs().locate_leaf(points[i].x)))
            }
        })
        .collect();
    let metrics = RunMetrics {
        fallback_used: true,
        comparisons: comparisons_recorded() - cmp0,
        wall_time: started.elapsed().as_secs_f64(),
        ..RunMetrics::default()
    };
    Ok(HullOutput {
        certificate,
        c_certificate: CCertificate {
            v_extremal_indices: v_extremal,
            slabs,
        },
        metrics,
    })
}

/// One full limiting-phase hull run: locate, then construct.
pub fn run_hull(instance: &Instance, structures: &HullStructures) -> Result<HullOutput> {
    let (info, loc_metrics) = locate_points(instance, structures, None)?;
    let mut out = construct_hull(instance, &info, structures)?;
    out.metrics.rounds = loc_metrics.rounds;
    out.metrics.heap_ops = loc_metrics.heap_ops;
    out.metrics.outside_count = loc_metrics.outside_count;
    out.metrics.case_histogram = loc_metrics.case_histogram;
    out.metrics.per_point_steps = loc_metrics.per_point_steps;
    out.metrics.comparisons += loc_metrics.comparisons;
    out.metrics.wall_time += loc_metrics.wall_time;
    Ok(out)
}
