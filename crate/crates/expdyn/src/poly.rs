//! The unicritical-polynomial bridge: D-adic angles as signed-alphabet
//! addresses, dynamic rays of `z^D + c` via backward Böttcher iteration, and
//! the combinatorial renormalizability indicator.
//!
//! Angles of external rays for `z^D + c` are base-D expansions; multiplying
//! by D is the shift. Digits are remapped into the signed alphabet
//! `(−D/2 + 1/2, D/2 + 1/2) ∩ Z` for even D and `(−D/2, D/2) ∩ Z` for odd D
//! by subtracting D from digits above D/2, which makes polynomial angle
//! sequences directly comparable with exponential addresses.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::address::{metric_distance, Address, AddressError, MetricValue};
use crate::ray::{land_ray, LandingStatus, RayError};

const TAU: f64 = std::f64::consts::TAU;

/// Böttcher seeds are placed at modulus ≥ this.
const SEED_MODULUS: f64 = 1e8;
/// Roots this close to the critical value have no meaningful branch.
const CRITICAL_RADIUS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("angle must be an exact rational in [0, 1)")]
    AngleOutOfRange,
    #[error("degree must be at least 2")]
    DegreeTooSmall,
    #[error("pullback passed within {0:e} of the critical value; branch ambiguous")]
    BranchAmbiguity(f64),
    #[error("backward iteration failed to stabilize within tolerance at t = {t} (err = {err:e})")]
    NoConvergence { t: f64, err: f64 },
    #[error("potential grid must be positive and strictly decreasing")]
    BadPotentials,
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("exponential-side failure: {0}")]
    Ray(String),
}

impl From<RayError> for PolyError {
    fn from(e: RayError) -> Self {
        PolyError::Ray(e.to_string())
    }
}

/// A rational angle together with its base-D symbolic data.
#[derive(Debug, Clone)]
pub struct DAdicAngle {
    pub degree: u32,
    pub theta: BigRational,
    /// Digit sequence remapped to the signed alphabet.
    pub address: Address,
    /// Indices (within preperiod then period) carrying the boundary digit
    /// `D/2` for even D; flagged rather than silently resolved.
    pub boundary_digits: Vec<usize>,
}

fn check_angle(theta: &BigRational) -> Result<(), PolyError> {
    if theta.is_negative() || *theta >= BigRational::one() {
        return Err(PolyError::AngleOutOfRange);
    }
    Ok(())
}

/// Base-D digit expansion of an exact rational in `[0, 1)`, as
/// (preperiod digits, period digits). D-adic rationals (terminating
/// expansions) are canonicalized to the repeating-tail form, so
/// multiplication by D stays conjugate to the shift exactly.
fn base_d_digits(theta: &BigRational, d: u32) -> (Vec<u32>, Vec<u32>) {
    let q = theta.denom().clone();
    let big_d = BigInt::from(d);
    // State is the numerator of the current fractional part over fixed q.
    let mut seen: Vec<BigInt> = Vec::new();
    let mut digits: Vec<u32> = Vec::new();
    let mut n = theta.numer().clone();
    loop {
        if let Some(pos) = seen.iter().position(|m| *m == n) {
            // D-adic rationals keep their terminating expansion (trailing
            // zeros): that is the convention under which multiplication by D
            // is exactly the shift, including at the D-adics themselves.
            let pre = digits[..pos].to_vec();
            let per = digits[pos..].to_vec();
            return (pre, per);
        }
        seen.push(n.clone());
        let prod = &n * &big_d;
        let digit = (&prod / &q).to_u32().expect("digit < D");
        digits.push(digit);
        n = prod % &q;
    }
}

/// Remap a base-D digit into the signed alphabet.
fn remap_digit(digit: u32, d: u32) -> i64 {
    // Subtract D when the digit exceeds D/2; for even D the boundary digit
    // D/2 itself stays positive (the window is half-open above).
    if 2 * digit > d {
        digit as i64 - d as i64
    } else {
        digit as i64
    }
}

/// Full angle data: expansion, signed remap, boundary flags.
pub fn dadic_angle(theta: &BigRational, d: u32) -> Result<DAdicAngle, PolyError> {
    if d < 2 {
        return Err(PolyError::DegreeTooSmall);
    }
    check_angle(theta)?;
    let (pre_digits, per_digits) = base_d_digits(theta, d);
    let mut boundary = Vec::new();
    let mut map = |digits: &[u32], offset: usize| -> Vec<i64> {
        digits
            .iter()
            .enumerate()
            .map(|(i, &dig)| {
                if d % 2 == 0 && 2 * dig == d {
                    boundary.push(offset + i);
                }
                remap_digit(dig, d)
            })
            .collect()
    };
    let pre: Vec<i64> = map(&pre_digits, 0);
    let per: Vec<i64> = map(&per_digits, pre_digits.len());
    let address = Address::new(&pre, &per)?;
    Ok(DAdicAngle {
        degree: d,
        theta: theta.clone(),
        address,
        boundary_digits: boundary,
    })
}

/// Signed-alphabet address of a rational angle.
pub fn angle_to_address(theta: &BigRational, d: u32) -> Result<Address, PolyError> {
    Ok(dadic_angle(theta, d)?.address)
}

/// Inverse of [`angle_to_address`]: the exact rational whose base-D
/// expansion matches the address entries (entries taken mod D).
pub fn address_to_angle(s: &Address, d: u32) -> Result<BigRational, PolyError> {
    if d < 2 {
        return Err(PolyError::DegreeTooSmall);
    }
    let big_d = BigInt::from(d);
    let to_digit = |e: i64| -> BigInt {
        let m = e.rem_euclid(d as i64);
        BigInt::from(m)
    };
    // Head: Σ pre_i D^{-i-1}; tail: periodic block over D^p − 1, scaled.
    let l = s.preperiod_len();
    let p = s.period_len();
    let mut head = BigRational::zero();
    let mut pow = BigRational::one();
    for i in 0..l {
        pow /= BigRational::from(big_d.clone());
        head += BigRational::from(to_digit(s.entry(i))) * &pow;
    }
    let mut block = BigInt::zero();
    for j in 0..p {
        block = block * &big_d + to_digit(s.entry(l + j));
    }
    let dp = num_traits::pow::pow(big_d.clone(), p) - BigInt::one();
    let tail = BigRational::new(block, dp) * pow;
    let mut theta = head + tail;
    if theta >= BigRational::one() {
        theta -= BigRational::one();
    }
    Ok(theta)
}

/// `D·theta mod 1` exactly.
pub fn angle_shift(theta: &BigRational, d: u32) -> BigRational {
    let mut t = theta * BigRational::from(BigInt::from(d));
    let floor = t.floor();
    t -= floor;
    t
}

/// One sample of a polynomial dynamic ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolySample {
    pub t: f64,
    pub z: Complex64,
    pub err: f64,
}

/// A traced dynamic ray of `z^D + c`.
#[derive(Debug, Clone)]
pub struct PolyRayTrace {
    pub degree: u32,
    pub c: Complex64,
    pub theta: BigRational,
    pub samples: Vec<PolySample>,
}

fn poly_apply(d: u32, c: Complex64, z: Complex64) -> Complex64 {
    z.powu(d) + c
}

/// Fractional part of `theta` as f64 (exact rational reduced first).
fn angle_f64(theta: &BigRational) -> f64 {
    theta.to_f64().unwrap_or(0.0)
}

/// Ray point of angle `theta` at potential `t` by backward Böttcher
/// iteration at depth `n`: seed `e^{t·D^n}·e^{2πi·D^n θ}`, then divide the
/// angle by D choosing the root in the sector of the current digit.
fn poly_pull(
    d: u32,
    c: Complex64,
    theta: &BigRational,
    t: f64,
    n: u32,
) -> Result<Complex64, PolyError> {
    // Angles along the backward orbit, exact.
    let mut angles = Vec::with_capacity(n as usize + 1);
    let mut a = theta.clone();
    for _ in 0..=n {
        angles.push(a.clone());
        a = angle_shift(&a, d);
    }
    let top = angles[n as usize].clone();
    let potential_top = t * (d as f64).powi(n as i32);
    let mut z = Complex64::from_polar(potential_top.exp(), TAU * angle_f64(&top));
    for k in (0..n as usize).rev() {
        let w = z - c;
        if w.norm() < CRITICAL_RADIUS {
            return Err(PolyError::BranchAmbiguity(CRITICAL_RADIUS));
        }
        // Principal D-th root, then rotate into the sector of the exact
        // target angle.
        let target = TAU * angle_f64(&angles[k]);
        let root = w.powf(1.0 / d as f64);
        let mut best = root;
        let mut best_dist = f64::INFINITY;
        for j in 0..d {
            let cand = root * Complex64::from_polar(1.0, TAU * j as f64 / d as f64);
            let mut diff = (cand.arg() - target) % TAU;
            if diff > std::f64::consts::PI {
                diff -= TAU;
            }
            if diff < -std::f64::consts::PI {
                diff += TAU;
            }
            if diff.abs() < best_dist {
                best_dist = diff.abs();
                best = cand;
            }
        }
        z = best;
    }
    Ok(z)
}

fn poly_depth(d: u32, t: f64) -> u32 {
    // Smallest n with t·D^n ≥ log(SEED_MODULUS).
    let target = SEED_MODULUS.ln();
    let mut n = 0;
    let mut pot = t;
    while pot < target && n < 80 {
        pot *= d as f64;
        n += 1;
    }
    n
}

/// Trace the dynamic ray of angle `theta` for `z^D + c` at the given
/// potentials (strictly decreasing), with depth-refinement error estimates.
pub fn trace_poly_ray(
    d: u32,
    c: Complex64,
    theta: &BigRational,
    potentials: &[f64],
    tol: f64,
) -> Result<PolyRayTrace, PolyError> {
    if d < 2 {
        return Err(PolyError::DegreeTooSmall);
    }
    check_angle(theta)?;
    if potentials.is_empty()
        || potentials.iter().any(|t| !t.is_finite() || *t <= 0.0)
        || potentials.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(PolyError::BadPotentials);
    }
    let mut samples = Vec::with_capacity(potentials.len());
    for &t in potentials {
        let n = poly_depth(d, t);
        let z = poly_pull(d, c, theta, t, n)?;
        let refined = poly_pull(d, c, theta, t, n + 2)?;
        let err = (refined - z).norm().max(z.norm() * 1e-15);
        if err > tol {
            return Err(PolyError::NoConvergence { t, err });
        }
        samples.push(PolySample { t, z, err });
    }
    Ok(PolyRayTrace {
        degree: d,
        c,
        theta: theta.clone(),
        samples,
    })
}

/// Land a (pre)periodic polynomial ray by walking the potential toward 0
/// with Cauchy detection, then Newton-polishing the periodic part.
pub fn land_poly_ray(
    d: u32,
    c: Complex64,
    theta: &BigRational,
    tol: f64,
) -> Result<Option<Complex64>, PolyError> {
    check_angle(theta)?;
    let angle = dadic_angle(theta, d)?;
    let ell = angle.address.preperiod_len();
    let p = angle.address.period_len();
    let mut t = 1.0f64;
    let mut tail: Vec<Complex64> = Vec::new();
    let mut accum = None;
    // Coarse Cauchy detection: weakly repelling landings shrink slowly along
    // the halving schedule, so the tail only needs to settle near the point.
    let cauchy_tol = tol.max(1e-3);
    while t > 1e-12 {
        let n = poly_depth(d, t);
        let z = poly_pull(d, c, theta, t, n)?;
        tail.push(z);
        if tail.len() >= 5 {
            let w = &tail[tail.len() - 5..];
            let spread = w
                .windows(2)
                .map(|q| (q[1] - q[0]).norm())
                .fold(0.0f64, f64::max);
            if spread < cauchy_tol {
                accum = Some(*w.last().unwrap());
                break;
            }
        }
        t *= 0.5;
    }
    let Some(accum) = accum else {
        return Ok(None);
    };
    // Newton on P^{ell+p}(z) − P^{ell}(z) sharpens the landing point; the
    // Cauchy tail only has to get close enough to seed it.
    let orbit_gap = |z: Complex64| -> (Complex64, Complex64) {
        let (mut w, mut dw) = (z, Complex64::new(1.0, 0.0));
        for _ in 0..ell {
            dw *= d as f64 * w.powu(d - 1);
            w = poly_apply(d, c, w);
        }
        let (mut v, mut dv) = (w, dw);
        for _ in 0..p {
            dv *= d as f64 * v.powu(d - 1);
            v = poly_apply(d, c, v);
        }
        (v - w, dv - dw)
    };
    let mut z = accum;
    for _ in 0..80 {
        let (g, dg) = orbit_gap(z);
        if g.norm() < 1e-13 {
            break;
        }
        if dg.norm() < 1e-300 {
            break;
        }
        let mut step = g / dg;
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        z -= step;
    }
    // The polished point must still be the accumulation target and must
    // satisfy the landing relation to the requested tolerance.
    if (z - accum).norm() > 1e-2 || orbit_gap(z).0.norm() > tol.max(1e-12) {
        return Ok(None);
    }
    Ok(Some(z))
}

/// Witness list for combinatorial renormalizability: for each `q ≤ q_max`,
/// the shifts `k ≤ k_max` with `|s − σ^k s| < 2/D^q` (exact rational
/// comparison on both sides).
pub fn renormalizability_indicator(
    s: &Address,
    d: u32,
    q_max: u32,
    k_max: usize,
) -> Result<Vec<(u32, Vec<usize>)>, PolyError> {
    if d < 2 {
        return Err(PolyError::DegreeTooSmall);
    }
    if !s.is_exact() {
        return Err(PolyError::Address(AddressError::InexactAddress));
    }
    let mut distances = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let shifted = s.shift(k)?;
        match metric_distance(s, &shifted) {
            MetricValue::Exact(v) => distances.push(v),
            MetricValue::Interval { .. } => unreachable!("both exact"),
        }
    }
    let two = BigRational::from(BigInt::from(2));
    let big_d = BigRational::from(BigInt::from(d));
    let mut out = Vec::with_capacity(q_max as usize);
    for q in 1..=q_max {
        let threshold = &two / num_traits::pow::pow(big_d.clone(), q as usize);
        let witnesses: Vec<usize> = distances
            .iter()
            .enumerate()
            .filter(|(_, dist)| **dist < threshold)
            .map(|(i, _)| i + 1)
            .collect();
        out.push((q, witnesses));
    }
    Ok(out)
}

/// Co-landing verdict for one address pair in one plane.
#[derive(Debug, Clone)]
pub struct PairLanding {
    pub co_lands_poly: Option<bool>,
    pub co_lands_exp: Option<bool>,
    /// Both sides decided and equal.
    pub agree: Option<bool>,
    pub note: Option<String>,
}

/// Landing-pattern comparison report across the two families.
#[derive(Debug, Clone)]
pub struct LandingPatternReport {
    pub degree: u32,
    pub c_poly: Complex64,
    pub c_exp: Complex64,
    pub pairs: Vec<(Address, Address, PairLanding)>,
}

/// For each address pair, does it co-land for `z^D + c_poly`, and does it
/// co-land for `e^z + c_exp`? Disagreements are reported, never repaired.
pub fn landing_pattern_compare(
    d: u32,
    c_poly: Complex64,
    c_exp: Complex64,
    pairs: &[(Address, Address)],
    group_tol: f64,
) -> Result<LandingPatternReport, PolyError> {
    if d < 2 {
        return Err(PolyError::DegreeTooSmall);
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (s1, s2) in pairs {
        let mut note = None;
        // Polynomial side: angles from the addresses.
        let poly = (|| -> Result<Option<bool>, PolyError> {
            let th1 = address_to_angle(s1, d)?;
            let th2 = address_to_angle(s2, d)?;
            let z1 = land_poly_ray(d, c_poly, &th1, 1e-9)?;
            let z2 = land_poly_ray(d, c_poly, &th2, 1e-9)?;
            Ok(match (z1, z2) {
                (Some(a), Some(b)) => Some((a - b).norm() < group_tol),
                _ => None,
            })
        })();
        let co_lands_poly = match poly {
            Ok(v) => v,
            Err(e) => {
                note = Some(format!("polynomial side: {e}"));
                None
            }
        };
        // Exponential side.
        let exp = (|| -> Result<Option<bool>, PolyError> {
            let r1 = land_ray(c_exp, s1, 1e-9)?;
            let r2 = land_ray(c_exp, s2, 1e-9)?;
            Ok(
                match (r1.status == LandingStatus::Landed, r2.status == LandingStatus::Landed) {
                    (true, true) => {
                        Some((r1.point.unwrap() - r2.point.unwrap()).norm() < group_tol)
                    }
                    _ => None,
                },
            )
        })();
        let co_lands_exp = match exp {
            Ok(v) => v,
            Err(e) => {
                if note.is_none() {
                    note = Some(format!("exponential side: {e}"));
                }
                None
            }
        };
        let agree = match (co_lands_poly, co_lands_exp) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        };
        out.push((
            s1.clone(),
            s2.clone(),
            PairLanding {
                co_lands_poly,
                co_lands_exp,
                agree,
                note,
            },
        ));
    }
    Ok(LandingPatternReport {
        degree: d,
        c_poly,
        c_exp,
        pairs: out,
    })
}
