//! Certificate types and their independent verifiers.
//!
//! Verification relies only on the exact geometric predicates and the
//! baseline oracles, never on engine internals, so an engine bug cannot
//! certify its own output.

use crate::error::{Error, Result};
use crate::geometry::{
    beats, lex_cmp, orientation_unchecked, upper_hull_monotone, Instance, Point,
};
use crate::hull_learning::CanonicalHull;
use crate::slabs::SlabStructure;
use serde::{Deserialize, Serialize};
use std::fmt;

/// First failed check of a verifier, with the indices involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub indices: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}: {}", self.rule, self.indices, self.detail)
    }
}

fn violation(rule: &'static str, indices: Vec<usize>, detail: impl Into<String>) -> Violation {
    Violation {
        rule,
        indices,
        detail: detail.into(),
    }
}

pub type Verified = std::result::Result<(), Violation>;

/// Maxima certificate: the maximal indices sorted left to right, plus a
/// dominating witness for every non-maximal index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximaCertificate {
    pub maximal_indices: Vec<usize>,
    /// `witnesses[i]` is `Some(w)` iff point `i` is non-maximal and `w` beats it.
    pub witnesses: Vec<Option<usize>>,
}

/// Upper hull certificate: extremal indices sorted left to right, plus a
/// witness pair (q, r) with p strictly inside lss(q, r) for every other index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullCertificate {
    pub extremal_indices: Vec<usize>,
    pub witness_pairs: Vec<Option<(usize, usize)>>,
}

/// Per-point slab annotation emitted by the maxima engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SLabel {
    /// The search completed: the point lies in this leaf slab.
    InLeaf(usize),
    /// The search stopped early: the point lies strictly left of this slab
    /// boundary, its dominating witness at or right of it.
    SeparatedAt(usize),
}

/// Per-point slab kinds of a canonical-hull certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CSlabKind {
    LeafSlab(usize),
    BelowSeg { lo: usize, hi: usize },
    PencilSlab { owner: usize },
}

/// Canonical-hull certificate: the directionally extremal points plus a
/// located slab of one of three kinds for every other point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCertificate {
    pub v_extremal_indices: Vec<usize>,
    pub slabs: Vec<Option<CSlabKind>>,
}

// ---------------------------------------------------------------------------
// Maxima verification
// ---------------------------------------------------------------------------

pub fn verify_maxima_certificate(instance: &Instance, cert: &MaximaCertificate) -> Verified {
    let points = &instance.points;
    let n = points.len();
    if cert.witnesses.len() != n {
        return Err(violation(
            "size",
            vec![],
            format!("witness list has {} entries for {} points", cert.witnesses.len(), n),
        ));
    }
    if cert.maximal_indices.iter().any(|&i| i >= n) {
        return Err(violation("range", cert.maximal_indices.clone(), "index out of range"));
    }

    // (a) sorted left to right and pairwise non-dominating
    for w in cert.maximal_indices.windows(2) {
        let (i, j) = (w[0], w[1]);
        if !(points[i].x < points[j].x && points[i].y > points[j].y) {
            return Err(violation(
                "maxima-order",
                vec![i, j],
                "claimed maxima not a strictly descending staircase",
            ));
        }
    }

    // (d) partition
    let mut is_maximal = vec![false; n];
    for &i in &cert.maximal_indices {
        if is_maximal[i] {
            return Err(violation("partition", vec![i], "duplicate maximal index"));
        }
        is_maximal[i] = true;
    }
    for (i, (&maximal, &witness)) in is_maximal.iter().zip(&cert.witnesses).enumerate() {
        match (maximal, witness) {
            (true, Some(_)) => {
                return Err(violation("partition", vec![i], "maximal point has a witness"))
            }
            (false, None) => {
                return Err(violation("partition", vec![i], "non-maximal point lacks a witness"))
            }
            _ => {}
        }
    }

    // (b) every witness beats its point
    for i in 0..n {
        if let Some(w) = cert.witnesses[i] {
            if w >= n || w == i || !beats(points[w], w, points[i], i) {
                return Err(violation("witness", vec![i, w.min(n)], "witness does not dominate"));
            }
        }
    }

    // (c) no claimed-maximal point is beaten by any input point (sweep oracle)
    let truth = crate::geometry::maxima_sweep(points).map_err(|e| {
        violation("oracle", vec![], e.to_string())
    })?;
    let mut truly_maximal = vec![false; n];
    for &i in &truth.maximal_indices {
        truly_maximal[i] = true;
    }
    for &i in &cert.maximal_indices {
        if !truly_maximal[i] {
            return Err(violation("maximality", vec![i], "claimed maximal point is dominated"));
        }
    }
    Ok(())
}

/// Consistency of engine S-labels against the slab structure: maximal points
/// carry their exact leaf; non-maximal points carry their leaf or a boundary
/// separating them from their witness.
pub fn s_labels_consistent(
    instance: &Instance,
    slabs: &SlabStructure,
    cert: &MaximaCertificate,
    labels: &[SLabel],
) -> Verified {
    let points = &instance.points;
    if labels.len() != points.len() {
        return Err(violation("size", vec![], "label count mismatch"));
    }
    for (i, label) in labels.iter().enumerate() {
        let leaf = slabs.locate_leaf(points[i].x);
        match *label {
            SLabel::InLeaf(l) => {
                if l != leaf {
                    return Err(violation("s-label", vec![i], "wrong leaf slab"));
                }
            }
            SLabel::SeparatedAt(b) => {
                let w = cert.witnesses[i].ok_or_else(|| {
                    violation("s-label", vec![i], "separated label on a maximal point")
                })?;
                let bx = slabs.boundary_value(b).ok_or_else(|| {
                    violation("s-label", vec![i, b], "boundary index out of range")
                })?;
                if !(points[i].x < bx && points[w].x >= bx) {
                    return Err(violation(
                        "s-label",
                        vec![i, w],
                        "boundary does not separate point from witness",
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Hull verification
// ---------------------------------------------------------------------------

pub fn verify_hull_certificate(instance: &Instance, cert: &HullCertificate) -> Verified {
    let points = &instance.points;
    let n = points.len();
    if cert.witness_pairs.len() != n {
        return Err(violation("size", vec![], "witness list length mismatch"));
    }
    if cert.extremal_indices.iter().any(|&i| i >= n) {
        return Err(violation("range", cert.extremal_indices.clone(), "index out of range"));
    }

    // extremal list equals the monotone-chain oracle
    let oracle = upper_hull_monotone(points)
        .map_err(|e| violation("oracle", vec![], e.to_string()))?;
    if cert.extremal_indices != oracle {
        return Err(violation(
            "extremal-set",
            cert.extremal_indices.clone(),
            "claimed extremal set differs from hull oracle",
        ));
    }

    let mut extremal = vec![false; n];
    for &i in &cert.extremal_indices {
        extremal[i] = true;
    }
    for i in 0..n {
        match (extremal[i], cert.witness_pairs[i]) {
            (true, Some(_)) => {
                return Err(violation("partition", vec![i], "extremal point has a witness pair"))
            }
            (false, None) => {
                return Err(violation("partition", vec![i], "non-extremal point lacks a witness"))
            }
            (false, Some((q, r))) => {
                if q >= n || r >= n || q == i || r == i {
                    return Err(violation("witness-pair", vec![i], "bad witness indices"));
                }
                let (a, b) = (points[q], points[r]);
                if !(a.x < points[i].x && points[i].x < b.x) {
                    return Err(violation(
                        "witness-pair",
                        vec![i, q, r],
                        "point not strictly inside the witness x-interval",
                    ));
                }
                if orientation_unchecked(a, b, points[i]) != -1 {
                    return Err(violation(
                        "witness-pair",
                        vec![i, q, r],
                        "point not strictly below the witness segment",
                    ));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// C-certificate verification
// ---------------------------------------------------------------------------

/// Lexicographically smallest argmax of the scalar product with `v`.
pub fn directional_argmax(points: &[Point], v: (f64, f64)) -> usize {
    let mut best = 0usize;
    for i in 1..points.len() {
        let di = points[i].x * v.0 + points[i].y * v.1;
        let db = points[best].x * v.0 + points[best].y * v.1;
        crate::metrics::tally_comparison();
        if di > db
            || (di == db && lex_cmp(&points[i], &points[best]).then(i.cmp(&best)) == std::cmp::Ordering::Less)
        {
            best = i;
        }
    }
    best
}

pub fn verify_c_certificate(
    instance: &Instance,
    cert: &CCertificate,
    ch: &CanonicalHull,
) -> Verified {
    let points = &instance.points;
    let n = points.len();
    if cert.slabs.len() != n {
        return Err(violation("size", vec![], "slab list length mismatch"));
    }

    // the claimed V-extremal indices are exactly the per-direction argmaxes
    let mut expect: Vec<usize> = ch
        .directions()
        .iter()
        .map(|&v| directional_argmax(points, v))
        .collect();
    expect.sort_unstable();
    expect.dedup();
    let mut claimed = cert.v_extremal_indices.clone();
    claimed.sort_unstable();
    if claimed != expect {
        return Err(violation(
            "v-extremal",
            cert.v_extremal_indices.clone(),
            "claimed directional extrema differ from argmax oracle",
        ));
    }

    let mut is_vext = vec![false; n];
    for &i in &claimed {
        if i >= n {
            return Err(violation("range", vec![i], "index out of range"));
        }
        is_vext[i] = true;
    }

    for i in 0..n {
        match (is_vext[i], cert.slabs[i]) {
            (true, Some(_)) => {
                return Err(violation("partition", vec![i], "V-extremal point has a slab entry"))
            }
            (false, None) => {
                return Err(violation("partition", vec![i], "point lacks a slab entry"))
            }
            (false, Some(kind)) => {
                let leaf = ch.slabs().locate_leaf(points[i].x);
                match kind {
                    CSlabKind::LeafSlab(l) => {
                        if l != leaf {
                            return Err(violation("c-leaf", vec![i, l], "point not in claimed leaf"));
                        }
                    }
                    CSlabKind::BelowSeg { lo, hi } => {
                        if !(lo <= leaf && leaf <= hi && hi < ch.leaf_count()) {
                            return Err(violation("c-below", vec![i], "point outside claimed slab"));
                        }
                        if !ch.strictly_below_seg(points[i], lo, hi) {
                            return Err(violation(
                                "c-below",
                                vec![i],
                                "point not strictly below the slab segment",
                            ));
                        }
                    }
                    CSlabKind::PencilSlab { owner } => {
                        if owner >= n || owner == i {
                            return Err(violation("c-pencil", vec![i, owner], "bad pencil owner"));
                        }
                        if !is_vext[owner] {
                            return Err(violation(
                                "c-pencil",
                                vec![i, owner],
                                "pencil owner is not V-extremal",
                            ));
                        }
                        if !ch.strictly_outside(points[owner]) {
                            return Err(violation(
                                "c-pencil",
                                vec![i, owner],
                                "pencil owner lies inside the canonical hull",
                            ));
                        }
                        let pencil = ch.pencil_of(points[owner]).map_err(|e| {
                            violation("c-pencil", vec![i, owner], e.to_string())
                        })?;
                        if !pencil.contains_in(points[i], ch) {
                            return Err(violation(
                                "c-pencil",
                                vec![i, owner],
                                "point not inside the owner's pencil",
                            ));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Build a hull certificate from the oracle hull: each non-extremal point is
/// witnessed by the hull edge above it (found by binary search). Requires the
/// documented general position (distinct x except exact duplicates).
pub fn certificate_from_hull(points: &[Point], hull: &[usize]) -> Result<HullCertificate> {
    let n = points.len();
    let verts: Vec<usize> = {
        // strict vertex chain of the hull indices, for edge search
        let chain_pts: Vec<Point> = hull.iter().map(|&i| points[i]).collect();
        let chain = crate::geometry::upper_hull_vertices(&chain_pts)?;
        chain.into_iter().map(|k| hull[k]).collect()
    };
    let mut extremal = vec![false; n];
    for &i in hull {
        extremal[i] = true;
    }
    let mut pairs: Vec<Option<(usize, usize)>> = vec![None; n];
    for i in 0..n {
        if extremal[i] {
            continue;
        }
        let k = verts.partition_point(|&v| points[v].x <= points[i].x);
        if k == 0 || k == verts.len() {
            return Err(Error::DegenerateInput(format!(
                "point {i} has no hull edge strictly above it"
            )));
        }
        pairs[i] = Some((verts[k - 1], verts[k]));
    }
    Ok(HullCertificate {
        extremal_indices: hull.to_vec(),
        witness_pairs: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::maxima_sweep;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn random_instance(seed: u64, n: usize) -> Instance {
        let mut rng = crate::distributions::SplitMix::new(seed);
        Instance::new(
            (0..n)
                .map(|_| p(rng.next_f64() * 100.0, rng.next_f64() * 100.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn sweep_certificate_is_valid() {
        for seed in 0..50 {
            let inst = random_instance(seed, 20);
            let cert = maxima_sweep(&inst.points).unwrap();
            assert_eq!(verify_maxima_certificate(&inst, &cert), Ok(()));
        }
    }

    #[test]
    fn maxima_mutations_detected() {
        let inst = random_instance(7, 24);
        let cert = maxima_sweep(&inst.points).unwrap();

        // swap one witness to a non-dominating index
        let mut bad = cert.clone();
        let victim = bad.witnesses.iter().position(|w| w.is_some()).unwrap();
        let lowest = bad.maximal_indices[0]; // leftmost maximal: dominates nothing to its right
        bad.witnesses[victim] = Some(if lowest == victim { bad.maximal_indices[1] } else { lowest });
        // the chosen replacement may accidentally dominate; force an invalid one
        bad.witnesses[victim] = Some(victim.wrapping_add(0)); // self-witness
        assert!(verify_maxima_certificate(&inst, &bad).is_err());

        // drop one maximal index
        let mut bad = cert.clone();
        bad.maximal_indices.pop().unwrap();
        assert!(verify_maxima_certificate(&inst, &bad).is_err());

        // promote a dominated point
        let mut bad = cert.clone();
        let dominated = bad.witnesses.iter().position(|w| w.is_some()).unwrap();
        bad.witnesses[dominated] = None;
        bad.maximal_indices.push(dominated);
        bad.maximal_indices.sort_by(|&i, &j| {
            crate::geometry::lex_cmp(&inst.points[i], &inst.points[j])
        });
        assert!(verify_maxima_certificate(&inst, &bad).is_err());
    }

    #[test]
    fn c_certificate_kinds_and_mutations() {
        use crate::geometry::DirectedLine;
        use crate::hull_learning::build_canonical_hull;
        // C below y = x and y = -x: one vertex at the origin, two leaf slabs
        let ch = build_canonical_hull(
            vec![
                DirectedLine::slope_intercept(1.0, 0.0).unwrap(),
                DirectedLine::slope_intercept(-1.0, 0.0).unwrap(),
            ],
            vec![(-0.7, 0.7), (0.7, 0.7)],
        )
        .unwrap();
        let inst = Instance::new(vec![
            p(0.25, 50.0), // outside, argmax of both directions
            p(-2.0, -8.0), // below the left edge chord
            p(1.0, -6.0),  // below the right edge chord
            p(0.5, 10.0),  // outside, but not an argmax
        ])
        .unwrap();
        let pencil = ch.pencil_of(inst.points[0]).unwrap();
        assert!(pencil.contains_in(p(0.5, -20.0), &ch));
        let valid = CCertificate {
            v_extremal_indices: vec![0],
            slabs: vec![
                None,
                Some(CSlabKind::BelowSeg { lo: 0, hi: 0 }),
                Some(CSlabKind::BelowSeg { lo: 1, hi: 1 }),
                Some(CSlabKind::LeafSlab(1)),
            ],
        };
        assert_eq!(verify_c_certificate(&inst, &valid, &ch), Ok(()));

        // a below-seg label on a point above the segment is rejected
        let mut bad = valid.clone();
        bad.slabs[3] = Some(CSlabKind::BelowSeg { lo: 1, hi: 1 });
        assert!(verify_c_certificate(&inst, &bad, &ch).is_err());

        // wrong leaf slab
        let mut bad = valid.clone();
        bad.slabs[3] = Some(CSlabKind::LeafSlab(0));
        assert!(verify_c_certificate(&inst, &bad, &ch).is_err());

        // wrong directional extrema
        let mut bad = valid.clone();
        bad.v_extremal_indices = vec![3];
        assert!(verify_c_certificate(&inst, &bad, &ch).is_err());

        // a pencil whose claimed owner sits inside C is rejected: raise the
        // lines so every point is inside and the argmax is not outside
        let ch_high = build_canonical_hull(
            vec![
                DirectedLine::slope_intercept(1.0, 100.0).unwrap(),
                DirectedLine::slope_intercept(-1.0, 100.0).unwrap(),
            ],
            vec![(-0.7, 0.7), (0.7, 0.7)],
        )
        .unwrap();
        let argmaxes: Vec<usize> = {
            let mut v: Vec<usize> = ch_high
                .directions()
                .iter()
                .map(|&d| directional_argmax(&inst.points, d))
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let slabs = (0..inst.len())
            .map(|i| {
                (!argmaxes.contains(&i)).then_some(CSlabKind::PencilSlab { owner: argmaxes[0] })
            })
            .collect();
        let inside_owner = CCertificate {
            v_extremal_indices: argmaxes,
            slabs,
        };
        let err = verify_c_certificate(&inst, &inside_owner, &ch_high).unwrap_err();
        assert!(err.detail.contains("inside"), "{err}");
    }

    #[test]
    fn hull_certificate_from_oracle_is_valid() {
        for seed in 100..140 {
            let inst = random_instance(seed, 16);
            let hull = upper_hull_monotone(&inst.points).unwrap();
            let cert = certificate_from_hull(&inst.points, &hull).unwrap();
            assert_eq!(verify_hull_certificate(&inst, &cert), Ok(()));
        }
    }

    #[test]
    fn hull_mutations_detected() {
        let inst = random_instance(3, 16);
        let hull = upper_hull_monotone(&inst.points).unwrap();
        let cert = certificate_from_hull(&inst.points, &hull).unwrap();

        // witness pair with p outside the x-interval
        let mut bad = cert.clone();
        let victim = bad.witness_pairs.iter().position(|w| w.is_some()).unwrap();
        let (q, _) = bad.witness_pairs[victim].unwrap();
        bad.witness_pairs[victim] = Some((q, q));
        assert!(verify_hull_certificate(&inst, &bad).is_err());

        // collinear point on its witness segment is rejected (open region)
        let pts = vec![p(0., 0.), p(1., 1.), p(2., 2.), p(1., 0.)];
        let inst2 = Instance::new(pts).unwrap();
        let cert2 = HullCertificate {
            extremal_indices: vec![0, 1, 2],
            witness_pairs: vec![None, None, None, Some((0, 2))],
        };
        // (1,0) is strictly below (0,0)-(2,2): valid
        assert_eq!(verify_hull_certificate(&inst2, &cert2), Ok(()));
        let cert3 = HullCertificate {
            extremal_indices: vec![0, 1, 2],
            witness_pairs: vec![None, Some((0, 2)), None, Some((0, 2))],
        };
        // (1,1) lies on the segment (0,0)-(2,2): partition broken and region open
        assert!(verify_hull_certificate(&inst2, &cert3).is_err());
    }
}
