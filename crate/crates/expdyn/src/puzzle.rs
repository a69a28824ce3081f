//! Forward-invariant ray graphs, their pullback levels, puzzle pieces, and
//! combinatorial non-recurrence certificates.
//!
//! A graph is a finite σ-closed set of periodic addresses whose rays land on
//! repelling points; rays landing at a common point form co-landing classes.
//! Level `n` adds every σ-preimage (entries within a window `|k| ≤ K`) of the
//! previous level, the classes of the preimage rays being grouped by landing
//! proximity and cross-checked against the combinatorial pairing rule.
//!
//! Pieces are handled combinatorially: each co-landing class of `q ≥ 2` rays
//! cuts the plane into `q` sectors, realized as closed polygons (two adjacent
//! rays, their common landing point, and a far-right chord). A point's piece
//! is its crossing signature against all sector polygons; pieces themselves
//! are enumerated by sampling, carry an interior witness and their bounding
//! addresses, and the piece containing a left half plane is labelled `*`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::{lex_compare, Address};
use crate::geom::{GeomError, Polygon};
use crate::orbit::orbit_sample;
use crate::ray::{land_ray, land_with, LandingStatus, RayError, RayEvaluator};
use crate::rng::SplitMix64;

const TAU: f64 = std::f64::consts::TAU;

/// Landing points closer than this are grouped into one class.
pub const GROUP_TOL: f64 = 1e-7;
/// Side-test tolerance for crossing probes.
pub const SIDE_TOL: f64 = 1e-9;
/// Far-right junction potential closing sector polygons.
pub const T_JOIN: f64 = 50.0;
/// Smallest potential sampled along boundary curves.
const T_CURVE_MIN: f64 = 1e-9;
/// Samples per ray polyline.
const CURVE_SAMPLES: usize = 72;
/// Depth cap for boundary-curve tracing: weakly repelling landing points
/// contract the pullback slowly, so curves get more depth than the default.
const CURVE_DEPTH: u32 = 400;
/// Default entry cutoff for the preimage fan.
pub const DEFAULT_K_MAX: i64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PuzzleError {
    #[error("address {0} did not land: {1}")]
    LandingFailure(String, String),
    #[error("landing point of {0} has multiplier modulus {1} ≤ 1 (parabolic or attracting vertex)")]
    ParabolicVertex(String, f64),
    #[error("address set is not closed under the shift: σ({0}) missing")]
    NotForwardInvariant(String),
    #[error("graph addresses must be exact and periodic: {0}")]
    NotPeriodic(String),
    #[error("graph address set must be nonempty")]
    EmptyGraph,
    #[error("degenerate pair: addresses must be distinct")]
    DegeneratePair,
    #[error("pair must co-land (landing points {0:e} apart)")]
    NotCoLanding(f64),
    #[error("point is outside the resolved window (|Im| ≤ 2π(K−1), Re < t_join)")]
    UnresolvedRegion,
    #[error("no piece of this level matches the crossing signature")]
    NoMatchingPiece,
    #[error("orbit escaped the overflow guard before the horizon")]
    OrbitEscape,
    #[error("degenerate certificate request: orbit horizon must be ≥ 1")]
    DegenerateHorizon,
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error(transparent)]
    Address(#[from] crate::address::AddressError),
}

/// A traced, landed, forward-invariant graph of periodic rays.
#[derive(Debug, Clone)]
pub struct RayGraph {
    pub c: Complex64,
    /// Canonical σ-closed address set, lex-sorted.
    pub addresses: Vec<Address>,
    /// Landing point and multiplier per address (same order).
    pub landings: Vec<(Complex64, Complex64)>,
    /// Co-landing classes as index sets into `addresses`, each lex-sorted.
    pub classes: Vec<Vec<usize>>,
    /// Traced boundary polylines per address (potential T_JOIN → 0⁺, landing
    /// point appended).
    pub curves: Vec<Vec<Complex64>>,
}

/// One sector polygon of one co-landing class.
#[derive(Debug, Clone)]
pub struct SectorCurve {
    /// Bounding addresses (lex-adjacent members of the class).
    pub pair: (Address, Address),
    pub polygon: Polygon,
}

/// Piece label: ordinary pieces are numbered, the piece containing a left
/// half plane is `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PieceLabel {
    Branching,
    Num(usize),
}

impl std::fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PieceLabel::Branching => write!(f, "*"),
            PieceLabel::Num(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for PieceLabel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            PieceLabel::Branching => ser.serialize_str("*"),
            PieceLabel::Num(n) => ser.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for PieceLabel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(de)?;
        match v {
            serde_json::Value::String(s) if s == "*" => Ok(PieceLabel::Branching),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|n| PieceLabel::Num(n as usize))
                .ok_or_else(|| D::Error::custom("label must be a nonnegative integer or \"*\"")),
            _ => Err(D::Error::custom("label must be a nonnegative integer or \"*\"")),
        }
    }
}

/// A puzzle piece, identified combinatorially.
#[derive(Debug, Clone)]
pub struct PuzzlePiece {
    pub level: usize,
    pub label: PieceLabel,
    /// Signature: for each sector curve of the level, is the piece inside?
    pub signature: Vec<bool>,
    /// Addresses of the curves bounding this piece (adjacent to it).
    pub bounding: Vec<Address>,
    /// A point in the open piece.
    pub witness: Complex64,
    /// Interior samples collected during enumeration.
    pub samples: Vec<Complex64>,
}

/// One puzzle level: the address set `A_n`, its classes, sector polygons and
/// enumerated pieces.
#[derive(Debug, Clone)]
pub struct PuzzleLevel {
    pub level: usize,
    pub c: Complex64,
    pub k_max: i64,
    pub addresses: Vec<Address>,
    pub landings: Vec<Complex64>,
    pub classes: Vec<Vec<usize>>,
    pub curves: Vec<SectorCurve>,
    pub pieces: Vec<PuzzlePiece>,
    /// Raw preimage-address count before deduplication (growth bookkeeping).
    pub raw_generated: usize,
}

/// Combinatorial non-recurrence certificate: at some level the piece holding
/// the singular value contains no sampled postsingular point.
#[derive(Debug, Clone)]
pub struct NonRecurrenceCertificate {
    pub level: usize,
    pub singular_label: PieceLabel,
    pub horizon: usize,
    /// Min distance from the sampled orbit to the singular piece's boundary
    /// polylines.
    pub margin: f64,
}

/// Result of a certificate search.
#[derive(Debug, Clone)]
pub enum CertificateOutcome {
    Certified(NonRecurrenceCertificate),
    Undecided {
        /// Levels examined.
        levels: usize,
        reason: String,
    },
}

/// Result of the cross-parameter combinatorial comparison.
#[derive(Debug, Clone)]
pub enum Equivalence {
    Equivalent {
        levels: usize,
    },
    Distinguished {
        level: usize,
        /// A separating co-landing pair: these addresses co-land for one
        /// parameter but not the other.
        witness: (Address, Address),
    },
    Undecided {
        reason: String,
    },
}

fn sort_lex(addresses: &mut [Address]) {
    addresses.sort_by(|a, b| lex_compare(a, b).expect("exact addresses compare"));
}

/// Build the forward-invariant graph: verify σ-closure, land every ray,
/// reject non-repelling vertices, and group co-landing classes.
pub fn build_graph(c: Complex64, generators: &[Address]) -> Result<RayGraph, PuzzleError> {
    if generators.is_empty() {
        return Err(PuzzleError::EmptyGraph);
    }
    let mut addresses: Vec<Address> = Vec::new();
    for a in generators {
        if !a.is_periodic() {
            return Err(PuzzleError::NotPeriodic(a.to_string()));
        }
        if !addresses.contains(a) {
            addresses.push(a.clone());
        }
    }
    // σ-closure check.
    for a in &addresses.clone() {
        let mut s = a.clone();
        for _ in 0..a.period_len() {
            s = s.shift(1)?;
            if !addresses.contains(&s) {
                return Err(PuzzleError::NotForwardInvariant(a.to_string()));
            }
        }
    }
    sort_lex(&mut addresses);

    let landed: Vec<Result<(Complex64, Complex64, Vec<Complex64>), PuzzleError>> = addresses
        .par_iter()
        .map(|a| {
            let (point, mult, curve) = land_and_trace(c, a)?;
            if mult.norm() <= 1.0 {
                return Err(PuzzleError::ParabolicVertex(a.to_string(), mult.norm()));
            }
            Ok((point, mult, curve))
        })
        .collect();
    let mut landings = Vec::with_capacity(addresses.len());
    let mut curves = Vec::with_capacity(addresses.len());
    for r in landed {
        let (point, mult, curve) = r?;
        landings.push((point, mult));
        curves.push(curve);
    }
    let classes = group_classes(&addresses, &landings.iter().map(|(p, _)| *p).collect::<Vec<_>>());
    Ok(RayGraph {
        c,
        addresses,
        landings,
        classes,
        curves,
    })
}

/// Land a ray and trace its boundary polyline (far-right junction down to
/// the landing point) on one shared evaluator.
fn land_and_trace(
    c: Complex64,
    address: &Address,
) -> Result<(Complex64, Complex64, Vec<Complex64>), PuzzleError> {
    let mut ev = RayEvaluator::new(c, address, CURVE_DEPTH);
    let landing = land_with(&mut ev, 1e-9).map_err(PuzzleError::Ray)?;
    if landing.status != LandingStatus::Landed {
        return Err(PuzzleError::LandingFailure(
            address.to_string(),
            format!("{:?}", landing.status),
        ));
    }
    let point = landing.point.unwrap();
    let mult = landing.multiplier.unwrap();
    let ratio = (T_CURVE_MIN / T_JOIN).powf(1.0 / (CURVE_SAMPLES as f64 - 1.0));
    let mut pts = Vec::with_capacity(CURVE_SAMPLES + 1);
    for i in 0..CURVE_SAMPLES {
        let t = T_JOIN * ratio.powi(i as i32);
        let z = ev.ray_at(t)?;
        // Certify the curve where it matters: near the landing end the
        // pullback converges slowest.
        if i % 8 == 0 || i + 1 == CURVE_SAMPLES {
            let err = ev.error_estimate(t)?;
            if err > 1e-5 {
                return Err(PuzzleError::Ray(RayError::NoConvergence { t, err }));
            }
        }
        pts.push(z);
    }
    pts.push(point);
    Ok((point, mult, pts))
}

/// Group addresses whose landing points coincide within the group tolerance;
/// classes and their members come out lex-sorted.
fn group_classes(addresses: &[Address], points: &[Complex64]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..addresses.len() {
        let mut placed = false;
        for class in classes.iter_mut() {
            if (points[class[0]] - points[i]).norm() < GROUP_TOL {
                class.push(i);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![i]);
        }
    }
    // Members are already lex-ordered because `addresses` is; order classes
    // by their first member.
    classes.sort_by_key(|c| c[0]);
    classes
}

/// The combinatorial pairing of σ-preimages of a co-landing pair
/// (`s1 < s2`): prepending `k` to `s1` pairs with `k` on `s2` when the pair
/// curve does not separate the singular value from `−∞`, and with `k − 1`
/// when it does (the winding shifts the partner one strip down).
pub fn preimage_addresses(
    s1: &Address,
    s2: &Address,
    separates: bool,
    window: std::ops::RangeInclusive<i64>,
) -> Result<Vec<(Address, Address)>, PuzzleError> {
    if s1 == s2 {
        return Err(PuzzleError::DegeneratePair);
    }
    let mut out = Vec::new();
    for k in window {
        let a = s1.prepend(k)?;
        let b = s2.prepend(if separates { k - 1 } else { k })?;
        out.push((a, b));
    }
    Ok(out)
}

/// Does the closed curve of a co-landing pair separate the singular value
/// from `−∞`? Decided by crossing parity of horizontal probes.
pub fn separates_c(c: Complex64, s1: &Address, s2: &Address) -> Result<bool, PuzzleError> {
    if s1 == s2 {
        return Err(PuzzleError::DegeneratePair);
    }
    let la = land_ray(c, s1, 1e-10)?;
    let lb = land_ray(c, s2, 1e-10)?;
    let (Some(za), Some(zb)) = (la.landed(), lb.landed()) else {
        return Err(PuzzleError::LandingFailure(
            format!("{s1} / {s2}"),
            "landing failed".into(),
        ));
    };
    let gap = (za - zb).norm();
    if gap > GROUP_TOL {
        return Err(PuzzleError::NotCoLanding(gap));
    }
    let (_, _, curve_a) = land_and_trace(c, s1)?;
    let (_, _, curve_b) = land_and_trace(c, s2)?;
    let polygon = sector_polygon(&curve_a, &curve_b);
    let inside_c = polygon.contains(c, SIDE_TOL)?;
    let far_left = Complex64::new(-1e3 + 1.0, za.im);
    let inside_far = polygon.contains(far_left, SIDE_TOL)?;
    Ok(inside_c != inside_far)
}

/// Closed sector polygon from two ray polylines sharing a landing point:
/// ray `a` walked inward, ray `b` walked outward, chord closing at the right.
fn sector_polygon(curve_a: &[Complex64], curve_b: &[Complex64]) -> Polygon {
    let mut pts: Vec<Complex64> = curve_a.to_vec();
    pts.extend(curve_b.iter().rev());
    Polygon::new(pts).expect("two traced rays give ≥ 3 points")
}

/// Parameters controlling puzzle construction.
#[derive(Debug, Clone)]
pub struct PuzzleParams {
    /// Entry cutoff: preimage entries range over `[-k_max, k_max]`.
    pub k_max: i64,
    /// Seed for witness sampling.
    pub seed: u64,
    /// Interior samples kept per piece.
    pub samples_per_piece: usize,
}

impl Default for PuzzleParams {
    fn default() -> Self {
        PuzzleParams {
            k_max: DEFAULT_K_MAX,
            seed: 1,
            samples_per_piece: 20,
        }
    }
}

/// Build puzzle levels `0..=n_max` over a graph.
///
/// Level `n` addresses are all σ-preimages (within the entry window) of
/// level `n−1`; their co-landing classes are grouped by landing proximity
/// and the result must agree with the combinatorial pairing rule, which is
/// checked pairwise via [`separates_c`] on the parents.
pub fn build_levels(
    graph: &RayGraph,
    n_max: usize,
    params: &PuzzleParams,
) -> Result<Vec<PuzzleLevel>, PuzzleError> {
    let mut levels = Vec::with_capacity(n_max + 1);
    let mut addresses = graph.addresses.clone();
    let mut landings: Vec<Complex64> = graph.landings.iter().map(|(p, _)| *p).collect();
    let mut curves_by_addr: BTreeMap<String, Vec<Complex64>> = BTreeMap::new();
    for (a, curve) in graph.addresses.iter().zip(&graph.curves) {
        curves_by_addr.insert(a.to_string(), curve.clone());
    }
    let mut raw_generated = addresses.len();

    for level in 0..=n_max {
        if level > 0 {
            // Preimages of every current address, within the entry window.
            let mut next: Vec<Address> = addresses.clone();
            let mut raw = 0;
            for a in &addresses {
                for k in -params.k_max..=params.k_max {
                    raw += 1;
                    let pre = a.prepend(k)?;
                    if !next.contains(&pre) {
                        next.push(pre);
                    }
                }
            }
            raw_generated = addresses.len() + raw;
            sort_lex(&mut next);
            // Land and trace the new rays.
            let new_addrs: Vec<Address> = next
                .iter()
                .filter(|a| !addresses.contains(a))
                .cloned()
                .collect();
            let landed: Vec<(Address, Result<(Complex64, Vec<Complex64>), PuzzleError>)> =
                new_addrs
                    .par_iter()
                    .map(|a| {
                        let r = land_and_trace(graph.c, a).map(|(p, _m, curve)| (p, curve));
                        (a.clone(), r)
                    })
                    .collect();
            let mut by_addr: BTreeMap<String, (Complex64, Vec<Complex64>)> = BTreeMap::new();
            for (a, r) in landed {
                let (p, curve) = r?;
                by_addr.insert(a.to_string(), (p, curve));
            }
            let mut new_landings = Vec::with_capacity(next.len());
            for a in &next {
                if let Some(i) = addresses.iter().position(|b| b == a) {
                    new_landings.push(landings[i]);
                } else {
                    let (p, curve) = by_addr.remove(&a.to_string()).unwrap();
                    curves_by_addr.insert(a.to_string(), curve);
                    new_landings.push(p);
                }
            }
            addresses = next;
            landings = new_landings;
        }

        let classes = group_classes(&addresses, &landings);
        let curves = sector_curves(&addresses, &classes, &curves_by_addr);
        let mut lvl = PuzzleLevel {
            level,
            c: graph.c,
            k_max: params.k_max,
            addresses: addresses.clone(),
            landings: landings.clone(),
            classes,
            curves,
            pieces: Vec::new(),
            raw_generated,
        };
        enumerate_pieces(&mut lvl, params);
        levels.push(lvl);
    }
    Ok(levels)
}

/// Sector polygons for every co-landing class with at least two members.
fn sector_curves(
    addresses: &[Address],
    classes: &[Vec<usize>],
    curves_by_addr: &BTreeMap<String, Vec<Complex64>>,
) -> Vec<SectorCurve> {
    let mut out = Vec::new();
    for class in classes {
        for pair in class.windows(2) {
            let a = &addresses[pair[0]];
            let b = &addresses[pair[1]];
            let ca = &curves_by_addr[&a.to_string()];
            let cb = &curves_by_addr[&b.to_string()];
            out.push(SectorCurve {
                pair: (a.clone(), b.clone()),
                polygon: sector_polygon(ca, cb),
            });
        }
    }
    out
}

/// Does `z` match `sig`? Early-exits on the first differing curve, which
/// makes sample top-up and membership checks much cheaper than a full
/// signature.
fn matches_signature(level: &PuzzleLevel, z: Complex64, sig: &[bool]) -> bool {
    if z.im.abs() > resolved_band(level.k_max) || z.re >= T_JOIN - 2.0
        || z.re <= crate::geom::FAR_LEFT
    {
        return false;
    }
    for (curve, &expect) in level.curves.iter().zip(sig) {
        match curve.polygon.contains(z, SIDE_TOL) {
            Ok(inside) if inside == expect => continue,
            _ => return false,
        }
    }
    true
}

/// The entry cutoff K resolves boundary structure only for
/// |Im z| ≤ 2π(K − 1): preimage fans beyond the window intrude above that.
fn resolved_band(k_max: i64) -> f64 {
    if k_max <= 1 {
        std::f64::consts::PI
    } else {
        TAU * (k_max - 1) as f64
    }
}

/// Crossing signature of a point against every sector curve of a level.
fn signature_of(level: &PuzzleLevel, z: Complex64) -> Result<Vec<bool>, PuzzleError> {
    // Points outside the resolved window see unresolved boundary structure.
    if z.im.abs() > resolved_band(level.k_max) || z.re >= T_JOIN - 2.0
        || z.re <= crate::geom::FAR_LEFT
    {
        return Err(PuzzleError::UnresolvedRegion);
    }
    level
        .curves
        .iter()
        .map(|c| Ok(c.polygon.contains(z, SIDE_TOL)?))
        .collect()
}

/// Locate a point in a puzzle level.
pub fn locate(level: &PuzzleLevel, z: Complex64) -> Result<&PuzzlePiece, PuzzleError> {
    let sig = signature_of(level, z)?;
    level
        .pieces
        .iter()
        .find(|p| p.signature == sig)
        .ok_or(PuzzleError::NoMatchingPiece)
}

/// Enumerate the pieces of a level by classifying probe points in a single
/// tagged pass: flank samples on both sides of every curve (which also
/// reveal which curves bound which piece), a far-left probe for the
/// branching piece, and a deterministic cloud.
fn enumerate_pieces(level: &mut PuzzleLevel, params: &PuzzleParams) {
    let mut rng = SplitMix64::new(params.seed ^ ((level.level as u64) << 32));
    // (probe, curve it flanks)
    let mut probes: Vec<(Complex64, Option<usize>)> = Vec::new();
    // The branching piece contains a left half plane; probe far left of all
    // landing points but inside the resolved window.
    let branching_probe = Complex64::new(-900.0, 0.1);
    probes.push((branching_probe, None));
    probes.push((level.c, None));
    for (ci, curve) in level.curves.iter().enumerate() {
        let pts = &curve.polygon.points;
        let step = (pts.len() / 12).max(1);
        for i in (1..pts.len() - 1).step_by(step) {
            let tangent = pts[i + 1] - pts[i - 1];
            let n = tangent.norm();
            if n < 1e-12 {
                continue;
            }
            let normal = Complex64::new(-tangent.im, tangent.re) / n;
            for mag in [1e-3, 1e-2, 0.1] {
                probes.push((pts[i] + normal * mag, Some(ci)));
                probes.push((pts[i] - normal * mag, Some(ci)));
            }
        }
    }
    // Cloud over the resolved window.
    let im_span = resolved_band(level.k_max) * 0.98;
    for _ in 0..600 {
        probes.push((
            Complex64::new(rng.uniform(-15.0, 30.0), rng.uniform(-im_span, im_span)),
            None,
        ));
    }

    // Signatures in parallel, then group sequentially (deterministic).
    let sigs: Vec<Option<Vec<bool>>> = probes
        .par_iter()
        .map(|(z, _)| signature_of(level, *z).ok())
        .collect();
    let mut pieces: Vec<PuzzlePiece> = Vec::new();
    let mut adjacency: Vec<Vec<usize>> = Vec::new();
    for ((z, flank), sig) in probes.iter().zip(sigs) {
        let Some(sig) = sig else { continue };
        // Far probes only enumerate pieces and collect adjacency; interior
        // samples are generated witness-locally below, because beyond the
        // entry window one crossing signature can cover several components.
        let idx = match pieces.iter().position(|p| p.signature == sig) {
            Some(i) => i,
            None => {
                pieces.push(PuzzlePiece {
                    level: level.level,
                    label: PieceLabel::Num(0),
                    signature: sig,
                    bounding: Vec::new(),
                    witness: *z,
                    samples: vec![*z],
                });
                adjacency.push(Vec::new());
                pieces.len() - 1
            }
        };
        if let Some(ci) = flank {
            if !adjacency[idx].contains(ci) {
                adjacency[idx].push(*ci);
            }
        }
    }
    // The branching piece is the one whose signature matches the far-left
    // probe.
    if let Ok(branch_sig) = signature_of(level, branching_probe) {
        let mut num = 0;
        for piece in pieces.iter_mut() {
            if piece.signature == branch_sig {
                piece.label = PieceLabel::Branching;
            } else {
                piece.label = PieceLabel::Num(num);
                num += 1;
            }
        }
    }
    // Bounding addresses from the flank adjacency.
    for (piece, adj) in pieces.iter_mut().zip(&adjacency) {
        let mut bounding: Vec<Address> = Vec::new();
        for &ci in adj {
            for a in [&level.curves[ci].pair.0, &level.curves[ci].pair.1] {
                if !bounding.contains(a) {
                    bounding.push(a.clone());
                }
            }
        }
        sort_lex(&mut bounding);
        piece.bounding = bounding;
    }
    // Top up interior samples by perturbing each witness; matching uses the
    // early-exit comparison, and candidates hugging an adjacent boundary
    // polyline are rejected (side tests are unreliable within the polyline's
    // own resolution there).
    for (piece, adj) in pieces.iter_mut().zip(&adjacency) {
        let mut scale = 0.05;
        let mut tries = 0;
        while piece.samples.len() < params.samples_per_piece && tries < 300 {
            tries += 1;
            let z = piece.witness
                + Complex64::new(rng.uniform(-scale, scale), rng.uniform(-scale, scale));
            let clear = adj
                .iter()
                .all(|&ci| level.curves[ci].polygon.distance_to(z) > 1e-4);
            if clear && matches_signature(level, z, &piece.signature) {
                piece.samples.push(z);
            } else {
                scale *= 0.6;
                if scale < 1e-10 {
                    scale = 0.05;
                }
            }
        }
    }
    pieces.sort_by(|a, b| a.label.cmp(&b.label));
    level.pieces = pieces;
}

/// Search levels `1..=n_max` for a combinatorial non-recurrence certificate:
/// the singular piece must contain no sampled postsingular orbit point, all
/// of them located with margin.
pub fn nonrecurrence_certificate(
    c: Complex64,
    graph: &RayGraph,
    n_max: usize,
    horizon: usize,
    params: &PuzzleParams,
) -> Result<CertificateOutcome, PuzzleError> {
    if horizon == 0 {
        return Err(PuzzleError::DegenerateHorizon);
    }
    let sample = orbit_sample(c, horizon).map_err(|_| PuzzleError::DegenerateHorizon)?;
    if sample.escaped {
        return Err(PuzzleError::OrbitEscape);
    }
    let levels = build_levels(graph, n_max, params)?;
    for level in levels.iter().skip(1) {
        let singular = match locate(level, c) {
            Ok(p) => p,
            Err(_) => {
                continue;
            }
        };
        let mut all_located = true;
        let mut any_in_singular = false;
        let mut margin = f64::INFINITY;
        for &p in &sample.points {
            match locate(level, p) {
                Ok(piece) => {
                    if piece.signature == singular.signature {
                        any_in_singular = true;
                        break;
                    }
                }
                Err(_) => {
                    all_located = false;
                    break;
                }
            }
            for curve in &level.curves {
                margin = margin.min(curve.polygon.distance_to(p));
            }
        }
        if all_located && !any_in_singular && margin > SIDE_TOL {
            return Ok(CertificateOutcome::Certified(NonRecurrenceCertificate {
                level: level.level,
                singular_label: singular.label,
                horizon,
                margin,
            }));
        }
    }
    Ok(CertificateOutcome::Undecided {
        levels: n_max,
        reason: "singular piece meets the sampled orbit at every level".into(),
    })
}

/// Compare the combinatorics of two parameters over the same generating
/// address set, up to level `n_max`: the co-landing partitions must match at
/// every level and the singular values must fall in matching pieces.
pub fn combinatorial_equivalence_level(
    c1: Complex64,
    c2: Complex64,
    generators: &[Address],
    n_max: usize,
    params: &PuzzleParams,
) -> Result<Equivalence, PuzzleError> {
    let g1 = match build_graph(c1, generators) {
        Ok(g) => g,
        Err(e) => {
            return Ok(Equivalence::Undecided {
                reason: format!("graph at first parameter: {e}"),
            })
        }
    };
    let g2 = match build_graph(c2, generators) {
        Ok(g) => g,
        Err(e) => {
            return Ok(Equivalence::Undecided {
                reason: format!("graph at second parameter: {e}"),
            })
        }
    };
    let l1 = build_levels(&g1, n_max, params)?;
    let l2 = build_levels(&g2, n_max, params)?;
    for (a, b) in l1.iter().zip(&l2) {
        debug_assert_eq!(a.addresses, b.addresses);
        // Partition comparison: find a pair co-landing on one side only.
        if a.classes != b.classes {
            if let Some(witness) = partition_witness(a, b) {
                return Ok(Equivalence::Distinguished {
                    level: a.level,
                    witness,
                });
            }
            return Ok(Equivalence::Undecided {
                reason: "class partitions differ but no witnessing pair found".into(),
            });
        }
        // Piece comparison: the singular values must sit in pieces bounded
        // by the same addresses.
        match (locate(a, c1), locate(b, c2)) {
            (Ok(p1), Ok(p2)) => {
                if p1.bounding != p2.bounding {
                    let w = separating_pair(p1, p2)
                        .or_else(|| separating_pair(p2, p1));
                    if let Some(witness) = w {
                        return Ok(Equivalence::Distinguished {
                            level: a.level,
                            witness,
                        });
                    }
                }
            }
            _ => {
                return Ok(Equivalence::Undecided {
                    reason: format!("singular value not locatable at level {}", a.level),
                })
            }
        }
    }
    Ok(Equivalence::Equivalent { levels: n_max })
}

/// A pair of addresses co-landing in `a` but not in `b`.
fn partition_witness(a: &PuzzleLevel, b: &PuzzleLevel) -> Option<(Address, Address)> {
    for class in &a.classes {
        for w in class.windows(2) {
            let (i, j) = (w[0], w[1]);
            let together_in_b = b
                .classes
                .iter()
                .any(|cl| cl.contains(&i) && cl.contains(&j));
            if !together_in_b {
                return Some((a.addresses[i].clone(), a.addresses[j].clone()));
            }
        }
    }
    // Symmetric direction.
    for class in &b.classes {
        for w in class.windows(2) {
            let (i, j) = (w[0], w[1]);
            let together_in_a = a
                .classes
                .iter()
                .any(|cl| cl.contains(&i) && cl.contains(&j));
            if !together_in_a {
                return Some((b.addresses[i].clone(), b.addresses[j].clone()));
            }
        }
    }
    None
}

/// Two addresses bounding `p1` that do not both bound `p2`.
fn separating_pair(p1: &PuzzlePiece, p2: &PuzzlePiece) -> Option<(Address, Address)> {
    let odd: Vec<&Address> = p1
        .bounding
        .iter()
        .filter(|a| !p2.bounding.contains(a))
        .collect();
    match odd.len() {
        0 => None,
        1 => Some((odd[0].clone(), p1.bounding.first()?.clone())),
        _ => Some((odd[0].clone(), odd[1].clone())),
    }
}
