//! Product distributions D = D_1 x ... x D_n with seeded, counter-based
//! sampling, plus the adversarial generator families used by the benchmarks.
//!
//! Draw i of instance `counter` depends only on (seed, counter, i), so the
//! learning and limiting phases can replay disjoint instance streams and two
//! processes with the same seed produce byte-identical instances.

use crate::error::{Error, Result};
use crate::geometry::{Instance, Point};
use serde::{Deserialize, Serialize};

/// SplitMix64: tiny counter-based generator. Stable across platforms and
/// process runs, which the replay contract requires.
#[derive(Debug, Clone)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u = (self.next_f64()).max(f64::MIN_POSITIVE);
        let v = self.next_f64();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }
}

fn mix3(seed: u64, counter: u64, index: u64) -> u64 {
    let mut s = SplitMix::new(seed ^ 0x6a09e667f3bcc909);
    let a = s.next_u64() ^ counter.wrapping_mul(0x9e3779b97f4a7c15);
    let mut s2 = SplitMix::new(a);
    s2.next_u64() ^ index.wrapping_mul(0xd6e8feb86659fd93)
}

/// One per-index component distribution. UniformAtoms is the equal-weight
/// special case of DiscreteMixture with O(1) draws; the adversarial families
/// sample from supports of size n/2, where the general weighted scan would
/// dominate the learning phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentDistribution {
    FixedPoint { point: Point },
    UniformRect { min: Point, max: Point },
    GaussianBlob { mean: Point, sigma_x: f64, sigma_y: f64 },
    DiscreteMixture { atoms: Vec<(f64, Point)> },
    UniformAtoms { atoms: Vec<Point> },
    SegmentUniform { a: Point, b: Point, jitter: f64 },
}

impl ComponentDistribution {
    fn validate(&self) -> Result<()> {
        match self {
            ComponentDistribution::DiscreteMixture { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("empty mixture".into()));
                }
                if atoms.iter().any(|&(w, _)| !(w.is_finite() && w > 0.0)) {
                    return Err(Error::InvalidInput("non-positive mixture weight".into()));
                }
                let total: f64 = atoms.iter().map(|&(w, _)| w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            ComponentDistribution::UniformAtoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("empty atom set".into()));
                }
                Ok(())
            }
            ComponentDistribution::UniformRect { min, max } => {
                if !(min.x <= max.x && min.y <= max.y) {
                    return Err(Error::InvalidInput("inverted rectangle".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut SplitMix) -> Point {
        match self {
            ComponentDistribution::FixedPoint { point } => *point,
            ComponentDistribution::UniformRect { min, max } => Point::new(
                min.x + (max.x - min.x) * rng.next_f64(),
                min.y + (max.y - min.y) * rng.next_f64(),
            ),
            ComponentDistribution::GaussianBlob { mean, sigma_x, sigma_y } => Point::new(
                mean.x + sigma_x * rng.next_gaussian(),
                mean.y + sigma_y * rng.next_gaussian(),
            ),
            ComponentDistribution::DiscreteMixture { atoms } => {
                let u = rng.next_f64();
                let mut acc = 0.0;
                for &(w, p) in atoms {
                    acc += w;
                    if u < acc {
                        return p;
                    }
                }
                atoms.last().unwrap().1
            }
            ComponentDistribution::UniformAtoms { atoms } => {
                atoms[(rng.next_u64() % atoms.len() as u64) as usize]
            }
            ComponentDistribution::SegmentUniform { a, b, jitter } => {
                let t = rng.next_f64();
                let j = |r: &mut SplitMix| (r.next_f64() * 2.0 - 1.0) * jitter;
                Point::new(
                    a.x + (b.x - a.x) * t + j(rng),
                    a.y + (b.y - a.y) * t + j(rng),
                )
            }
        }
    }
}

/// n independent per-index samplers plus a seed and an optional symmetric
/// jitter. The jitter (default 1e-9) nudges discrete kinds off exact
/// coincidences; the algorithms still terminate with it disabled, but the
/// hull constructions assume general position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    pub components: Vec<ComponentDistribution>,
    pub seed: u64,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

pub fn default_jitter() -> f64 {
    1e-9
}

impl ProductDistribution {
    pub fn new(components: Vec<ComponentDistribution>, seed: u64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("need at least one component".into()));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(ProductDistribution {
            components,
            seed,
            jitter: default_jitter(),
        })
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Draw instance `counter`. Point i depends only on (seed, counter, i).
    pub fn sample(&self, counter: u64) -> Instance {
        let points = (0..self.components.len())
            .map(|i| {
                let mut rng = SplitMix::new(mix3(self.seed, counter, i as u64));
                let mut p = self.components[i].draw(&mut rng);
                if self.jitter > 0.0 {
                    p.x += (rng.next_f64() * 2.0 - 1.0) * self.jitter;
                    p.y += (rng.next_f64() * 2.0 - 1.0) * self.jitter;
                }
                p
            })
            .collect();
        Instance { points }
    }
}

// ---------------------------------------------------------------------------
// Generator families
// ---------------------------------------------------------------------------

fn uniform_atoms(points: Vec<Point>) -> ComponentDistribution {
    ComponentDistribution::UniformAtoms { atoms: points }
}

/// Dome of m fixed extremal points: u_j = (j, A - (j - (m-1)/2)^2 / m).
fn dome(m: usize) -> Vec<Point> {
    let mid = (m as f64 - 1.0) / 2.0;
    let a = m as f64;
    (0..m)
        .map(|j| {
            let x = j as f64;
            Point::new(x, a - (x - mid) * (x - mid) / m as f64)
        })
        .collect()
}

/// Fixed upper group U on a dome (all extremal), lower group L drawn from
/// fixed positions well below the chord of U: every lower point shares the
/// single witness pair (leftmost, rightmost of U).
pub fn bad_hull_distribution_easy(n: usize, seed: u64) -> Result<ProductDistribution> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput("n must be even and >= 4".into()));
    }
    let m = n / 2;
    let upper = dome(m);
    let chord_y = upper[0].y;
    // the irrational-looking offset keeps these x-coordinates off the
    // small-denominator grid of the hard variant's positions, so mixing the
    // supports stays tie-free even with the jitter disabled
    let low: Vec<Point> = (0..m)
        .map(|t| {
            let x = 0.318309886183791 + (m as f64 - 1.7) * t as f64 / m as f64;
            Point::new(x, chord_y - 2.0 * m as f64 - (t as f64) / m as f64)
        })
        .collect();
    let mut comps: Vec<ComponentDistribution> = upper
        .into_iter()
        .map(|point| ComponentDistribution::FixedPoint { point })
        .collect();
    comps.extend((0..m).map(|_| uniform_atoms(low.clone())));
    ProductDistribution::new(comps, seed)
}

/// As the easy variant, but the lower positions sit just below distinct hull
/// edges of U, so each lower point needs a witness search. `eps` is the
/// vertical drop below the edge (default 1e-3 of the dome height unit).
pub fn bad_hull_distribution_hard(n: usize, seed: u64, eps: Option<f64>) -> Result<ProductDistribution> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput("n must be even and >= 4".into()));
    }
    let m = n / 2;
    let upper = dome(m);
    let edges = m - 1;
    let eps = eps.unwrap_or(1e-3);
    // spread the m lower positions across the edges, cycling, distinct params
    let mut per_edge: Vec<usize> = vec![0; edges];
    for t in 0..m {
        per_edge[t % edges] += 1;
    }
    let mut low = Vec::with_capacity(m);
    let mut slot: Vec<usize> = vec![0; edges];
    for t in 0..m {
        let e = t % edges;
        slot[e] += 1;
        let frac = slot[e] as f64 / (per_edge[e] as f64 + 1.0);
        let (u, w) = (upper[e], upper[e + 1]);
        low.push(Point::new(
            u.x + (w.x - u.x) * frac,
            u.y + (w.y - u.y) * frac - eps,
        ));
    }
    let mut comps: Vec<ComponentDistribution> = upper
        .into_iter()
        .map(|point| ComponentDistribution::FixedPoint { point })
        .collect();
    comps.extend((0..m).map(|_| uniform_atoms(low.clone())));
    ProductDistribution::new(comps, seed)
}

/// Lower positions doubled up at both the easy location (well below the
/// chord) and the hard one (just below an edge), so the needed search depth
/// varies per draw.
pub fn bad_hull_distribution_mixed(n: usize, seed: u64) -> Result<ProductDistribution> {
    let easy = bad_hull_distribution_easy(n, seed)?;
    let hard = bad_hull_distribution_hard(n, seed, None)?;
    let m = n / 2;
    let mut comps = easy.components[..m].to_vec();
    for i in m..n {
        let (a, b) = (&easy.components[i], &hard.components[i]);
        match (a, b) {
            (
                ComponentDistribution::UniformAtoms { atoms: ea },
                ComponentDistribution::UniformAtoms { atoms: ha },
            ) => {
                let mut atoms = ea.clone();
                atoms.extend(ha.iter().copied());
                comps.push(ComponentDistribution::UniformAtoms { atoms });
            }
            _ => unreachable!("lower components are uniform atom sets"),
        }
    }
    ProductDistribution::new(comps, seed)
}

/// Index 0 flips between a point dominating the whole staircase and one
/// dominated by all of it; indices 1..n are a fixed staircase.
pub fn bad_maxima_dependency(n: usize, seed: u64) -> Result<ProductDistribution> {
    if n < 3 {
        return Err(Error::InvalidInput("n must be >= 3".into()));
    }
    let m = n - 1;
    let p_high = Point::new(m as f64 + 2.0, m as f64 + 2.0);
    let p_low = Point::new(0.0, 0.0);
    let mut comps = vec![ComponentDistribution::DiscreteMixture {
        atoms: vec![(0.5, p_high), (0.5, p_low)],
    }];
    comps.extend((1..=m).map(|j| ComponentDistribution::FixedPoint {
        point: Point::new(j as f64, (m + 1 - j) as f64),
    }));
    ProductDistribution::new(comps, seed)
}

/// Maxima analog of the easy hull family: a fixed staircase of n/2 maximal
/// points plus n/2 indices drawn from fixed positions that are all dominated
/// by the bottom-right staircase point, so one certificate region covers
/// every draw.
pub fn bad_maxima_distribution_easy(n: usize, seed: u64) -> Result<ProductDistribution> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput("n must be even and >= 4".into()));
    }
    let m = n / 2;
    let stair: Vec<Point> = (1..=m)
        .map(|j| Point::new(j as f64, (m - j) as f64 + 1.0))
        .collect();
    let low: Vec<Point> = (0..m)
        .map(|t| Point::new(t as f64 + 0.5, -1.0 - t as f64 / m as f64))
        .collect();
    let mut comps: Vec<ComponentDistribution> = stair
        .into_iter()
        .map(|point| ComponentDistribution::FixedPoint { point })
        .collect();
    comps.extend((0..m).map(|_| uniform_atoms(low.clone())));
    ProductDistribution::new(comps, seed)
}

/// Independent uniform points in the unit square.
pub fn uniform_square(n: usize, seed: u64) -> Result<ProductDistribution> {
    ProductDistribution::new(
        (0..n)
            .map(|_| ComponentDistribution::UniformRect {
                min: Point::new(0.0, 0.0),
                max: Point::new(1.0, 1.0),
            })
            .collect(),
        seed,
    )
}

/// A fixed random point per index (a "frozen" instance plus jitter).
pub fn fixed_random(n: usize, seed: u64) -> Result<ProductDistribution> {
    let mut rng = SplitMix::new(seed ^ 0xabcdef);
    ProductDistribution::new(
        (0..n)
            .map(|_| ComponentDistribution::FixedPoint {
                point: Point::new(rng.next_f64() * 100.0, rng.next_f64() * 100.0),
            })
            .collect(),
        seed,
    )
}

/// Mixed continuous kinds: alternating Gaussian blobs and segments.
pub fn mixed_continuous(n: usize, seed: u64) -> Result<ProductDistribution> {
    let mut rng = SplitMix::new(seed ^ 0x123456);
    ProductDistribution::new(
        (0..n)
            .map(|i| {
                let cx = rng.next_f64() * 50.0;
                let cy = rng.next_f64() * 50.0;
                if i % 2 == 0 {
                    ComponentDistribution::GaussianBlob {
                        mean: Point::new(cx, cy),
                        sigma_x: 1.0 + rng.next_f64(),
                        sigma_y: 1.0 + rng.next_f64(),
                    }
                } else {
                    ComponentDistribution::SegmentUniform {
                        a: Point::new(cx, cy),
                        b: Point::new(cx + 3.0, cy + rng.next_f64() * 4.0 - 2.0),
                        jitter: 0.1,
                    }
                }
            })
            .collect(),
        seed,
    )
}

/// Named families shared by the CLI and the test suites.
pub const FAMILY_NAMES: &[&str] = &[
    "uniform",
    "fixed-random",
    "mixed-continuous",
    "bad-hull-easy",
    "bad-hull-hard",
    "bad-hull-mixed",
    "bad-maxima-dependency",
    "bad-maxima-easy",
];

pub fn family(name: &str, n: usize, seed: u64) -> Result<ProductDistribution> {
    match name {
        "uniform" => uniform_square(n, seed),
        "fixed-random" => fixed_random(n, seed),
        "mixed-continuous" => mixed_continuous(n, seed),
        "bad-hull-easy" => bad_hull_distribution_easy(n, seed),
        "bad-hull-hard" => bad_hull_distribution_hard(n, seed, None),
        "bad-hull-mixed" => bad_hull_distribution_mixed(n, seed),
        "bad-maxima-dependency" => bad_maxima_dependency(n, seed),
        "bad-maxima-easy" => bad_maxima_distribution_easy(n, seed),
        other => Err(Error::InvalidInput(format!("unknown family '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// Instance file formats
// ---------------------------------------------------------------------------

/// Newline-delimited "x y" text.
pub fn instance_to_text(inst: &Instance) -> String {
    let mut s = String::new();
    for p in &inst.points {
        s.push_str(&format!("{} {}\n", p.x, p.y));
    }
    s
}

pub fn instance_from_text(s: &str) -> Result<Instance> {
    let mut points = Vec::new();
    for (lineno, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidInput(format!("bad x on line {}", lineno + 1)))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidInput(format!("bad y on line {}", lineno + 1)))?;
        points.push(Point::new(x, y));
    }
    Instance::new(points)
}

/// Packed little-endian binary: 8-byte point count, then 2n f64 coordinates.
pub fn instance_to_binary(inst: &Instance) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + inst.points.len() * 16);
    out.extend_from_slice(&(inst.points.len() as u64).to_le_bytes());
    for p in &inst.points {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
    }
    out
}

pub fn instance_from_binary(bytes: &[u8]) -> Result<Instance> {
    if bytes.len() < 8 {
        return Err(Error::InvalidInput("truncated header".into()));
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 16 * n {
        return Err(Error::InvalidInput(format!(
            "expected {} bytes for {} points, got {}",
            8 + 16 * n,
            n,
            bytes.len()
        )));
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let off = 8 + 16 * i;
        let x = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let y = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        points.push(Point::new(x, y));
    }
    Instance::new(points)
}
