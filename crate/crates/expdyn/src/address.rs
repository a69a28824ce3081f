//! Exact symbolic algebra on integer-sequence addresses.
//!
//! An address is an eventually periodic sequence `s_0 s_1 s_2 …` of integers,
//! stored canonically as a preperiod plus a minimal repeating period. The
//! shift `σ` drops the first entry, addresses are ordered lexicographically,
//! and the distance between two addresses is
//!
//! ```text
//! |s − s'| = Σ_{s_i ≠ s'_i} 2^{-i}
//! ```
//!
//! computed in exact rational arithmetic: the differing-index set of two
//! eventually periodic sequences is itself eventually periodic, so the series
//! collapses to a finite sum plus a geometric block.
//!
//! Addresses may also be *windowed*: a finite truncation of an unknown tail,
//! carrying the number of trusted entries. Operations on windowed addresses
//! propagate that uncertainty (the metric returns an interval, comparisons
//! may be undecidable) instead of inventing a tail.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("windowed address needs at least one trusted entry")]
    EmptyWindow,
    #[error("operation requires an exact address")]
    InexactAddress,
    #[error("order undecidable: addresses agree over the trusted window")]
    Undecidable,
    #[error("invalid address syntax: {0}")]
    Parse(String),
}

/// An eventually periodic (or window-truncated) integer sequence.
///
/// Exact addresses are kept in canonical form: the period is the minimal
/// repeating block and the preperiod is minimal (it never ends with an entry
/// equal to the last period entry, which is the reduction move). This makes
/// equality and hashing structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Address {
    preperiod: Vec<i64>,
    period: Vec<i64>,
    exact: bool,
    /// Number of trusted entries when `exact` is false; 0 when exact.
    window_len: usize,
}

impl Address {
    /// Exact address from preperiod and period; canonicalizes.
    pub fn new(preperiod: &[i64], period: &[i64]) -> Result<Self, AddressError> {
        if period.is_empty() {
            return Err(AddressError::EmptyPeriod);
        }
        let mut a = Address {
            preperiod: preperiod.to_vec(),
            period: period.to_vec(),
            exact: true,
            window_len: 0,
        };
        a.canonicalize();
        Ok(a)
    }

    /// Purely periodic exact address.
    pub fn periodic(period: &[i64]) -> Result<Self, AddressError> {
        Address::new(&[], period)
    }

    /// Windowed (inexact) address: `entries` are the trusted prefix of an
    /// unknown sequence. Beyond the window the entries repeat as filler.
    pub fn window(entries: &[i64]) -> Result<Self, AddressError> {
        if entries.is_empty() {
            return Err(AddressError::EmptyWindow);
        }
        Ok(Address {
            preperiod: Vec::new(),
            period: entries.to_vec(),
            exact: false,
            window_len: entries.len(),
        })
    }

    fn canonicalize(&mut self) {
        debug_assert!(self.exact);
        // Minimal repeating block of the period.
        let p = self.period.len();
        for d in 1..p {
            if p % d != 0 {
                continue;
            }
            if (d..p).all(|i| self.period[i] == self.period[i % d]) {
                self.period.truncate(d);
                break;
            }
        }
        // Minimal preperiod: while the last preperiod entry equals the last
        // period entry the boundary can be rotated into the cycle.
        while let Some(&last) = self.preperiod.last() {
            if last == *self.period.last().unwrap() {
                self.preperiod.pop();
                self.period.rotate_right(1);
            } else {
                break;
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Trusted length: `usize::MAX` for exact addresses.
    pub fn trusted_len(&self) -> usize {
        if self.exact {
            usize::MAX
        } else {
            self.window_len
        }
    }

    pub fn preperiod(&self) -> &[i64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    pub fn preperiod_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Entry `s_i`, defined for all `i ≥ 0` by reading the preperiod and then
    /// cycling the period (for windowed addresses the cycle is filler).
    pub fn entry(&self, i: usize) -> i64 {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// Exact and purely periodic.
    pub fn is_periodic(&self) -> bool {
        self.exact && self.preperiod.is_empty()
    }

    /// Exact and strictly preperiodic.
    pub fn is_preperiodic(&self) -> bool {
        self.exact && !self.preperiod.is_empty()
    }

    /// `sup_i |s_i|` over preperiod and period (finite for exact addresses;
    /// for windowed ones this is the sup over the trusted window and filler).
    pub fn sup_norm(&self) -> u64 {
        self.preperiod
            .iter()
            .chain(self.period.iter())
            .map(|e| e.unsigned_abs())
            .max()
            .unwrap()
    }

    /// Left shift `σ^k`, re-canonicalized. Shifting a periodic address by its
    /// period is the identity. For windowed addresses the trusted window
    /// shrinks by `k`.
    pub fn shift(&self, k: usize) -> Result<Address, AddressError> {
        if !self.exact {
            if k >= self.window_len {
                return Err(AddressError::EmptyWindow);
            }
            let n = self.period.len();
            let mut entries: Vec<i64> = (k..k + (self.window_len - k).max(1))
                .map(|i| self.period[i % n])
                .collect();
            entries.truncate(self.window_len - k);
            return Address::window(&entries);
        }
        let mut a = self.clone();
        if k < a.preperiod.len() {
            a.preperiod.drain(..k);
        } else {
            let rot = (k - a.preperiod.len()) % a.period.len();
            a.preperiod.clear();
            a.period.rotate_left(rot);
        }
        a.canonicalize();
        Ok(a)
    }

    /// New address with `k` prepended (one σ-preimage per integer `k`).
    pub fn prepend(&self, k: i64) -> Result<Address, AddressError> {
        if !self.exact {
            let mut entries = vec![k];
            entries.extend(self.period.iter().take(self.window_len));
            return Address::window(&entries);
        }
        let mut pre = vec![k];
        pre.extend_from_slice(&self.preperiod);
        Address::new(&pre, &self.period)
    }

    /// Same tail, first entry incremented by `d` (the 2πi-translation
    /// symmetry on addresses).
    pub fn bump_first(&self, d: i64) -> Result<Address, AddressError> {
        let first = self.entry(0);
        self.shift(1)?.prepend(first + d)
    }

    /// Checks `|s_i| ≤ F^i(x)` for all `i`, with `F(t) = e^t − 1`.
    ///
    /// Since `F^{i+1}(x) ≥ F^i(x)` for every real `x`, it suffices to verify
    /// one full period beyond the preperiod: later blocks repeat the entries
    /// against larger bounds.
    pub fn is_exponentially_bounded(&self, x: f64) -> Result<bool, AddressError> {
        if !self.exact {
            return Err(AddressError::InexactAddress);
        }
        let mut bound = Magnitude::Val(x);
        for i in 0..self.preperiod.len() + self.period.len() {
            if !bound.at_least(self.entry(i).unsigned_abs() as f64) {
                return Ok(false);
            }
            bound = bound.grow();
        }
        Ok(true)
    }
}

impl fmt::Display for Address {
    /// Text syntax `p1 p2 … | q1 q2 …`. Windowed addresses print the trusted
    /// entries with a `~` suffix recording the window.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exact {
            let parts: Vec<String> = self.period[..self.window_len]
                .iter()
                .map(|e| e.to_string())
                .collect();
            return write!(f, "{} ~", parts.join(" "));
        }
        for e in &self.preperiod {
            write!(f, "{} ", e)?;
        }
        write!(f, "|")?;
        for e in &self.period {
            write!(f, " {}", e)?;
        }
        Ok(())
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_entries = |part: &str| -> Result<Vec<i64>, AddressError> {
            part.split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>()
                        .map_err(|_| AddressError::Parse(format!("bad entry {:?}", tok)))
                })
                .collect()
        };
        if let Some(body) = s.trim().strip_suffix('~') {
            return Address::window(&parse_entries(body)?);
        }
        let mut halves = s.splitn(2, '|');
        let pre = halves.next().unwrap_or("");
        let per = halves
            .next()
            .ok_or_else(|| AddressError::Parse(format!("missing '|' in {:?}", s)))?;
        let pre = parse_entries(pre)?;
        let per = parse_entries(per)?;
        if per.is_empty() {
            return Err(AddressError::EmptyPeriod);
        }
        Address::new(&pre, &per)
    }
}

/// Serialized as the display string.
impl serde::Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Growth witness for exponential boundedness.
#[derive(Debug, Clone)]
pub struct BoundWitness {
    /// Real `x` with `|s_i| ≤ F^i(x)` for all `i`.
    pub x: f64,
    /// `‖s‖ = sup |s_i|`; `None` encodes unbounded over the window (cannot
    /// happen for exact addresses, whose entries are finitely many).
    pub sup_norm: Option<u64>,
}

impl BoundWitness {
    pub fn for_address(s: &Address, x: f64) -> Self {
        BoundWitness {
            x,
            sup_norm: Some(s.sup_norm()),
        }
    }
}

// ---------------------------------------------------------------------------
// The growth model F(t) = e^t − 1 and its iterates.
// ---------------------------------------------------------------------------

/// `F(t) = e^t − 1`, the model of real exponential growth shared by the ray
/// and parameter engines.
pub fn growth_model(t: f64) -> f64 {
    t.exp_m1()
}

/// A nonnegative quantity that may exceed the `f64` range; large values are
/// carried as their natural logarithm.
#[derive(Debug, Clone, Copy)]
pub enum Magnitude {
    Val(f64),
    /// `Log(x)` represents `e^x`.
    Log(f64),
}

const LOG_SWITCH: f64 = 300.0;

impl Magnitude {
    /// One application of `F`.
    pub fn grow(self) -> Magnitude {
        match self {
            Magnitude::Val(v) => {
                if v > LOG_SWITCH {
                    // e^v − 1 indistinguishable from e^v at this size.
                    Magnitude::Log(v)
                } else {
                    Magnitude::Val(growth_model(v))
                }
            }
            Magnitude::Log(l) => {
                if l > LOG_SWITCH {
                    Magnitude::Log(f64::INFINITY)
                } else {
                    Magnitude::Log(l.exp())
                }
            }
        }
    }

    pub fn at_least(&self, x: f64) -> bool {
        match *self {
            Magnitude::Val(v) => v >= x,
            Magnitude::Log(l) => {
                if x <= 0.0 {
                    true
                } else {
                    l >= x.ln()
                }
            }
        }
    }

    /// Collapse to `f64`, saturating to infinity when out of range.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Magnitude::Val(v) => v,
            Magnitude::Log(l) => {
                if l > 709.0 {
                    f64::INFINITY
                } else {
                    l.exp()
                }
            }
        }
    }
}

/// `F^n(t)` computed by iteration, switching to log scale instead of
/// overflowing.
pub fn growth_model_iter(t: f64, n: u32) -> Magnitude {
    let mut m = Magnitude::Val(t);
    for _ in 0..n {
        m = m.grow();
    }
    m
}

// ---------------------------------------------------------------------------
// Lexicographic order.
// ---------------------------------------------------------------------------

/// Lexicographic comparison. Exact addresses always compare (equality is
/// decided on canonical forms). Windowed addresses compare if the first
/// differing index lies inside both trusted windows; otherwise the order is
/// undecidable.
pub fn lex_compare(a: &Address, b: &Address) -> Result<Ordering, AddressError> {
    if a.exact && b.exact {
        if a == b {
            return Ok(Ordering::Equal);
        }
        // Two distinct eventually periodic sequences must differ within the
        // joint preperiod plus one joint period.
        let l = a.preperiod.len().max(b.preperiod.len());
        let p = lcm(a.period.len(), b.period.len());
        for i in 0..l + p {
            match a.entry(i).cmp(&b.entry(i)) {
                Ordering::Equal => continue,
                ord => return Ok(ord),
            }
        }
        unreachable!("distinct canonical addresses must differ within l + lcm(p)");
    }
    let window = a.trusted_len().min(b.trusted_len());
    for i in 0..window {
        match a.entry(i).cmp(&b.entry(i)) {
            Ordering::Equal => continue,
            ord => return Ok(ord),
        }
    }
    Err(AddressError::Undecidable)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// The metric Σ_{s_i ≠ s'_i} 2^{-i}.
// ---------------------------------------------------------------------------

/// Result of a metric evaluation: exact when both addresses are exact,
/// otherwise an interval accounting for the unknown tails.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Exact(BigRational),
    Interval {
        lower: BigRational,
        upper: BigRational,
    },
}

impl MetricValue {
    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            MetricValue::Exact(v) => Some(v),
            MetricValue::Interval { .. } => None,
        }
    }

    pub fn lower(&self) -> &BigRational {
        match self {
            MetricValue::Exact(v) => v,
            MetricValue::Interval { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> &BigRational {
        match self {
            MetricValue::Exact(v) => v,
            MetricValue::Interval { upper, .. } => upper,
        }
    }
}

fn pow2(i: usize) -> BigInt {
    BigInt::one() << i
}

/// `2^{-i}` as an exact rational.
fn term(i: usize) -> BigRational {
    BigRational::new(BigInt::one(), pow2(i))
}

/// Exact distance `Σ_{s_i ≠ s'_i} 2^{-i}` between two addresses.
///
/// For exact inputs the value is an exact rational: the differing-index set
/// is eventually periodic, so the series is a finite sum plus a geometric
/// block sum. If either address is windowed the result is the interval
/// `[lower, lower + 2^{-W+1}]`, where `W` is the shared trusted window and
/// `lower` sums the differing indices inside it.
pub fn metric_distance(a: &Address, b: &Address) -> MetricValue {
    if a.exact && b.exact {
        let l = a.preperiod.len().max(b.preperiod.len());
        let p = lcm(a.period.len(), b.period.len());
        let mut head = BigRational::zero();
        for i in 0..l {
            if a.entry(i) != b.entry(i) {
                head += term(i);
            }
        }
        let mut block = BigRational::zero();
        for i in l..l + p {
            if a.entry(i) != b.entry(i) {
                block += term(i);
            }
        }
        // Σ_{k≥0} block·2^{-kP} = block · 2^P / (2^P − 1)
        let two_p = pow2(p);
        let factor = BigRational::new(two_p.clone(), two_p - BigInt::one());
        MetricValue::Exact(head + block * factor)
    } else {
        let window = a.trusted_len().min(b.trusted_len());
        let mut lower = BigRational::zero();
        for i in 0..window {
            if a.entry(i) != b.entry(i) {
                lower += term(i);
            }
        }
        // The unknown tail contributes at most Σ_{i≥W} 2^{-i} = 2^{-W+1}.
        let upper = lower.clone() + term(window - 1);
        MetricValue::Interval { lower, upper }
    }
}

/// One step of the recurrence diagnostic: the exact distances
/// `|s − σ^k s|` for `1 ≤ k ≤ k_max` and their minimum.
///
/// A strictly positive minimum certifies non-recurrence only in the exact
/// eventually-periodic case, where the σ-orbit is finite and the scan is
/// complete once `k_max` covers preperiod + period.
#[derive(Debug, Clone)]
pub struct RecurrenceGap {
    pub distances: Vec<(usize, BigRational)>,
    pub min: BigRational,
    /// True when `k_max` exhausted the finite σ-orbit of the address.
    pub complete: bool,
}

pub fn orbit_recurrence_gap(s: &Address, k_max: usize) -> Result<RecurrenceGap, AddressError> {
    if !s.exact {
        return Err(AddressError::InexactAddress);
    }
    if k_max == 0 {
        return Err(AddressError::Parse("k_max must be at least 1".into()));
    }
    let mut distances = Vec::with_capacity(k_max);
    let mut min: Option<BigRational> = None;
    for k in 1..=k_max {
        let shifted = s.shift(k)?;
        let d = match metric_distance(s, &shifted) {
            MetricValue::Exact(d) => d,
            MetricValue::Interval { .. } => unreachable!("both exact"),
        };
        if min.as_ref().is_none_or(|m| d < *m) {
            min = Some(d.clone());
        }
        distances.push((k, d));
    }
    Ok(RecurrenceGap {
        distances,
        min: min.unwrap(),
        complete: k_max >= s.preperiod.len() + s.period.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use num_traits::Signed;

    fn addr(s: &str) -> Address {
        s.parse().unwrap()
    }

    /// Brute-force partial sum of Σ_{s_i≠s'_i} 2^{-i} over i < n. The test
    /// oracle for the closed-form metric.
    fn brute_force_metric(a: &Address, b: &Address, n: usize) -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..n {
            if a.entry(i) != b.entry(i) {
                acc += term(i);
            }
        }
        acc
    }

    fn random_address(rng: &mut SplitMix64) -> Address {
        let pre_len = rng.int_range(0, 3) as usize;
        let per_len = rng.int_range(1, 5) as usize;
        let pre: Vec<i64> = (0..pre_len).map(|_| rng.int_range(-3, 3)).collect();
        let per: Vec<i64> = (0..per_len).map(|_| rng.int_range(-3, 3)).collect();
        Address::new(&pre, &per).unwrap()
    }

    #[test]
    fn parse_print_round_trip() {
        for s in ["1 | 0", "| 0 1", "| 0", "5 2 | 7", "-1 | 3 -4"] {
            let a = addr(s);
            assert_eq!(a.to_string(), s);
            assert_eq!(addr(&a.to_string()), a);
        }
    }

    #[test]
    fn canonical_form_minimal() {
        // Non-primitive period collapses.
        assert_eq!(Address::new(&[], &[0, 1, 0, 1]).unwrap(), addr("| 0 1"));
        // Preperiod ending in a period copy rotates away.
        assert_eq!(Address::new(&[1, 0], &[0]).unwrap(), addr("1 | 0"));
        assert_eq!(Address::new(&[2, 7], &[5, 7]).unwrap(), addr("2 | 7 5"));
        // σ-preimage of 001001… by 1 is the rotation 100100….
        assert_eq!(addr("| 0 0 1").prepend(1).unwrap(), addr("| 1 0 0"));
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let a = random_address(&mut rng);
            let again = Address::new(a.preperiod(), a.period()).unwrap();
            assert_eq!(a, again);
        }
    }

    #[test]
    fn shift_examples() {
        assert_eq!(addr("3 | 0").shift(1).unwrap(), addr("| 0"));
        assert_eq!(addr("| 0 1").shift(2).unwrap(), addr("| 0 1"));
        assert_eq!(addr("5 2 | 7").shift(1).unwrap(), addr("2 | 7"));
    }

    #[test]
    fn shift_agreement_contraction() {
        // If s, s' agree on indices < m, the shifts agree on indices < m−1.
        let mut rng = SplitMix64::new(23);
        for _ in 0..100 {
            let a = random_address(&mut rng);
            let b = random_address(&mut rng);
            let m = (0..32).find(|&i| a.entry(i) != b.entry(i));
            if let Some(m) = m {
                if m == 0 {
                    continue;
                }
                let sa = a.shift(1).unwrap();
                let sb = b.shift(1).unwrap();
                for i in 0..m - 1 {
                    assert_eq!(sa.entry(i), sb.entry(i));
                }
            }
        }
    }

    #[test]
    fn metric_distance_examples() {
        let zero = addr("| 0");
        assert_eq!(
            metric_distance(&zero, &zero).exact().unwrap(),
            &BigRational::zero()
        );
        // Differ only at i = 0: the 2^0 term.
        let d = metric_distance(&addr("1 | 0"), &zero);
        assert_eq!(d.exact().unwrap(), &BigRational::from(BigInt::from(1)));
        // 01 repeating vs 0 repeating: Σ_{i odd} 2^{-i} = 2/3.
        let d = metric_distance(&addr("| 0 1"), &zero);
        assert_eq!(
            d.exact().unwrap(),
            &BigRational::new(BigInt::from(2), BigInt::from(3))
        );
    }

    #[test]
    fn metric_matches_brute_force_partial_sums() {
        // Acceptance-style check: closed form within 2^{-58} of the 60-term
        // partial sum on random eventually periodic pairs.
        let mut rng = SplitMix64::new(3);
        let tol = term(58);
        for _ in 0..100 {
            let a = random_address(&mut rng);
            let b = random_address(&mut rng);
            let exact = match metric_distance(&a, &b) {
                MetricValue::Exact(v) => v,
                _ => unreachable!(),
            };
            let partial = brute_force_metric(&a, &b, 60);
            let diff = (&exact - &partial).abs();
            assert!(diff <= tol, "diff {} exceeds 2^-58 for {} vs {}", diff, a, b);
        }
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..100 {
            let a = random_address(&mut rng);
            let b = random_address(&mut rng);
            let c = random_address(&mut rng);
            let dab = metric_distance(&a, &b).exact().unwrap().clone();
            let dba = metric_distance(&b, &a).exact().unwrap().clone();
            let dac = metric_distance(&a, &c).exact().unwrap().clone();
            let dbc = metric_distance(&b, &c).exact().unwrap().clone();
            assert_eq!(dab, dba);
            assert_eq!(dab.is_zero(), a == b);
            assert!(dac <= &dab + &dbc, "triangle inequality failed");
        }
    }

    #[test]
    fn metric_tail_bound() {
        // d(s, s') ≤ 2·2^{-m} when entries agree for all i < m.
        let mut rng = SplitMix64::new(29);
        for _ in 0..100 {
            let tail = random_address(&mut rng);
            let m = rng.int_range(1, 6) as usize;
            let mut pre: Vec<i64> = (0..m).map(|_| rng.int_range(-3, 3)).collect();
            let a = Address::new(&pre, tail.period()).unwrap();
            // Perturb beyond index m only.
            pre.push(tail.period()[0] + 1);
            let b = Address::new(&pre, tail.period()).unwrap();
            let d = metric_distance(&a, &b).exact().unwrap().clone();
            let bound = term(m) * BigRational::from(BigInt::from(2));
            assert!(d <= bound);
        }
    }

    #[test]
    fn metric_interval_for_windowed() {
        let w = Address::window(&[0, 1, 0, 1]).unwrap();
        let exact = addr("| 0 1");
        match metric_distance(&w, &exact) {
            MetricValue::Interval { lower, upper } => {
                assert_eq!(lower, BigRational::zero());
                assert_eq!(upper, term(3));
            }
            MetricValue::Exact(_) => panic!("windowed metric must be an interval"),
        }
    }

    #[test]
    fn lex_compare_examples() {
        assert_eq!(
            lex_compare(&addr("| 0"), &addr("| 1")).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            lex_compare(&addr("0 | 2"), &addr("0 | 1")).unwrap(),
            Ordering::Greater
        );
        assert_eq!(
            lex_compare(&addr("| 0 1"), &addr("| 0 1")).unwrap(),
            Ordering::Equal
        );
        // Windowed agreement is undecidable.
        let w1 = Address::window(&[0, 0, 0]).unwrap();
        let w2 = Address::window(&[0, 0, 0, 0]).unwrap();
        assert_eq!(lex_compare(&w1, &w2), Err(AddressError::Undecidable));
    }

    #[test]
    fn exponential_boundedness() {
        // The i = 0 check uses F^0(x) = x, so the witness must already cover
        // the first entry.
        assert!(!addr("| 5").is_exponentially_bounded(3.0).unwrap());
        assert!(addr("| 5").is_exponentially_bounded(5.0).unwrap());
        assert!(addr("| 0").is_exponentially_bounded(0.1).unwrap());
        // F^0(0.5) = 0.5 < 10 fails at i = 0.
        assert!(!addr("10 | 0").is_exponentially_bounded(0.5).unwrap());
        // Negative witness fails immediately for any nonzero entry.
        assert!(!addr("| 1").is_exponentially_bounded(-1.0).unwrap());
        // Entries staying under the growing bound pass.
        assert!(addr("1 2 | 3").is_exponentially_bounded(1.5).unwrap());
    }

    #[test]
    fn growth_model_iterates() {
        assert!((growth_model(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        // F^3(1) ≈ 96.02, F^5(1) overflows into the log representation.
        let f3 = growth_model_iter(1.0, 3).to_f64();
        assert!((f3 - 96.02236556502682).abs() < 1e-10);
        let f5 = growth_model_iter(1.0, 5);
        assert!(f5.at_least(1e300));
    }

    #[test]
    fn recurrence_gap_examples() {
        // Fixed by σ: all distances zero.
        let gap = orbit_recurrence_gap(&addr("| 0"), 5).unwrap();
        assert!(gap.min.is_zero());
        assert!(gap.distances.iter().all(|(_, d)| d.is_zero()));

        // Strictly preperiodic: min distance 1 > 0 certifies non-recurrence.
        let gap = orbit_recurrence_gap(&addr("1 | 0"), 5).unwrap();
        assert_eq!(gap.min, BigRational::from(BigInt::from(1)));
        assert!(gap.complete);

        // Period two: recurrent (distance 0 at even k), distance 2 at odd k
        // because every index differs.
        let gap = orbit_recurrence_gap(&addr("| 0 1"), 4).unwrap();
        assert!(gap.min.is_zero());
        let by_k: Vec<&BigRational> = gap.distances.iter().map(|(_, d)| d).collect();
        assert_eq!(by_k[0], &BigRational::from(BigInt::from(2)));
        assert!(by_k[1].is_zero());
        assert_eq!(by_k[2], &BigRational::from(BigInt::from(2)));
        assert!(by_k[3].is_zero());
    }

    #[test]
    fn preperiodic_gap_is_positive() {
        // An exact strictly preperiodic address has a finite σ-orbit avoiding
        // itself, so the complete scan has positive minimum.
        let mut rng = SplitMix64::new(41);
        let mut checked = 0;
        while checked < 50 {
            let a = random_address(&mut rng);
            if !a.is_preperiodic() {
                continue;
            }
            let k_max = a.preperiod_len() + a.period_len();
            let gap = orbit_recurrence_gap(&a, k_max).unwrap();
            assert!(gap.complete);
            assert!(gap.min > BigRational::zero(), "address {}", a);
            checked += 1;
        }
    }

    #[test]
    fn windowed_shift_and_prepend() {
        let w = Address::window(&[3, 1, 4, 1]).unwrap();
        let s = w.shift(1).unwrap();
        assert!(!s.is_exact());
        assert_eq!(s.trusted_len(), 3);
        assert_eq!(s.entry(0), 1);
        assert_eq!(w.prepend(9).unwrap().entry(0), 9);
        assert!(w.shift(4).is_err());
    }
}
