//! Postsingular orbit sampling and hyperbolicity growth estimates.
//!
//! The postsingular set is approximated by the finite orbit
//! `{f_c^j(c) : 1 ≤ j ≤ M}` — by convention it does not include the singular
//! value `c` itself. Non-recurrence at horizon `M` is measured through the
//! disk criterion: the orbit avoids `D_{e^{-M*}}(c)` with `M* = −log d`,
//! where `d` is the minimal orbit distance to `c`.
//!
//! Hyperbolicity estimates exploit that `|f_c'(w)| = e^{Re w}`, so
//! `log |(f_c^k)'(z)| = Σ_{i<k} Re f_c^i(z)` exactly. A growth report over a
//! sampled forward-invariant set yields the threshold `k̄` and expansion
//! constant `η` (a positive report needs `η > 1`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ray::apply;

/// Orbit points beyond this modulus are treated as escaped.
pub const OVERFLOW_GUARD: f64 = 1e100;
/// `e^Re` exceeds the overflow guard past this, so stop before exponentiating.
const RE_GUARD: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("orbit escaped before the horizon; non-recurrence distance undefined")]
    EscapingSample,
    #[error("start list must be nonempty")]
    NoStarts,
}

/// Forward orbit of the singular value: `points[j]` is `f^{j+1}(c)`.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    pub c: Complex64,
    pub points: Vec<Complex64>,
    /// Set when the orbit left the overflow guard before the horizon; the
    /// recorded points stop there.
    pub escaped: bool,
    pub min_re: f64,
    /// `min_j |f^j(c) − c|` over the recorded points.
    pub min_distance_to_c: f64,
}

/// Sample the forward orbit of the singular value to horizon `M`.
///
/// Escape is recorded, never thrown: the sample keeps the points computed so
/// far with the flag set.
pub fn orbit_sample(c: Complex64, horizon: usize) -> Result<OrbitSample, OrbitError> {
    if horizon == 0 {
        return Err(OrbitError::EmptyHorizon);
    }
    let mut points = Vec::with_capacity(horizon);
    let mut z = c;
    let mut escaped = false;
    for _ in 0..horizon {
        if z.re > RE_GUARD {
            escaped = true;
            break;
        }
        z = apply(c, z);
        if !z.is_finite() || z.norm() > OVERFLOW_GUARD {
            escaped = true;
            break;
        }
        points.push(z);
    }
    let min_re = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let min_distance_to_c = points
        .iter()
        .map(|p| (p - c).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(OrbitSample {
        c,
        points,
        escaped,
        min_re,
        min_distance_to_c,
    })
}

/// Non-recurrence evidence from an orbit sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonRecurrenceDistance {
    /// `d = min_j |f^j(c) − c|`.
    pub d: f64,
    /// `M* = −log d`, the exponent of the excluded disk `D_{e^{-M*}}(c)`.
    pub m_star: f64,
    /// `min_j Re f^j(c)`, the half-plane form of the same criterion.
    pub min_re: f64,
    /// Set when some orbit point returns exactly to `c` (periodic singular
    /// orbit): recurrent, `d = 0`.
    pub recurrent: bool,
}

/// Disk-criterion distances from a non-escaping orbit sample.
pub fn nonrecurrence_distance(sample: &OrbitSample) -> Result<NonRecurrenceDistance, OrbitError> {
    if sample.escaped {
        return Err(OrbitError::EscapingSample);
    }
    let d = sample.min_distance_to_c;
    let recurrent = d == 0.0;
    Ok(NonRecurrenceDistance {
        d,
        m_star: if recurrent { f64::INFINITY } else { -d.ln() },
        min_re: sample.min_re,
        recurrent,
    })
}

/// Growth data for one start point: `sums[k-1] = S_k = Σ_{i<k} Re f^i(z)`,
/// truncated where the orbit leaves the overflow guard.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartGrowth {
    pub z: Complex64,
    pub sums: Vec<f64>,
    pub overflowed_at: Option<usize>,
}

/// A `(z, k)` pair with `S_k ≤ 0`, i.e. `|(f^k)'(z)| ≤ 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthViolation {
    pub z: Complex64,
    pub k: usize,
    pub s_k: f64,
}

/// Per-start derivative growth over a sampled forward-invariant set.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    pub c: Complex64,
    pub k_max: usize,
    pub per_start: Vec<StartGrowth>,
    /// Smallest k̄ with `min_starts S_k > 0` for every `k̄ < k ≤ k_max`,
    /// when one exists.
    pub k_bar: Option<usize>,
    /// `exp(min S_k)` over `k̄ < k ≤ k_max` and all starts; infinite when the
    /// minimum exponent leaves the `f64` range (the log is always kept).
    pub eta: f64,
    pub eta_log: f64,
    pub violations: Vec<GrowthViolation>,
}

impl GrowthReport {
    /// Positive report: a threshold exists and the expansion constant
    /// exceeds 1.
    pub fn is_positive(&self) -> bool {
        self.k_bar.is_some() && self.eta_log > 0.0
    }
}

/// Compute `S_k(z) = Σ_{i<k} Re f^i(z)` for each start and `k ≤ k_max`, and
/// estimate the hyperbolicity constants.
pub fn growth_report(
    c: Complex64,
    starts: &[Complex64],
    k_max: usize,
) -> Result<GrowthReport, OrbitError> {
    if starts.is_empty() {
        return Err(OrbitError::NoStarts);
    }
    if k_max == 0 {
        return Err(OrbitError::EmptyHorizon);
    }
    let mut per_start = Vec::with_capacity(starts.len());
    for &z0 in starts {
        let mut sums = Vec::with_capacity(k_max);
        let mut acc = 0.0f64;
        let mut z = z0;
        let mut overflowed_at = None;
        for k in 1..=k_max {
            if z.re > RE_GUARD || !z.is_finite() || z.norm() > OVERFLOW_GUARD {
                overflowed_at = Some(k);
                break;
            }
            acc += z.re;
            sums.push(acc);
            z = apply(c, z);
        }
        per_start.push(StartGrowth {
            z: z0,
            sums,
            overflowed_at,
        });
    }

    // min over starts of S_k, for each k that every start reached.
    let reached = per_start.iter().map(|s| s.sums.len()).min().unwrap_or(0);
    let min_at = |k: usize| -> f64 {
        per_start
            .iter()
            .map(|s| s.sums[k - 1])
            .fold(f64::INFINITY, f64::min)
    };
    let mut violations = Vec::new();
    for s in &per_start {
        for (i, &v) in s.sums.iter().enumerate() {
            if v <= 0.0 {
                violations.push(GrowthViolation {
                    z: s.z,
                    k: i + 1,
                    s_k: v,
                });
            }
        }
    }
    // Smallest k̄ such that S_k > 0 for all k̄ < k ≤ reached.
    let mut k_bar = None;
    if reached > 0 {
        let mut cut = reached;
        while cut > 0 && min_at(cut) > 0.0 {
            cut -= 1;
        }
        if cut < reached {
            k_bar = Some(cut);
        }
    }
    let eta_log = match k_bar {
        Some(kb) => ((kb + 1)..=reached)
            .map(min_at)
            .fold(f64::INFINITY, f64::min),
        None => f64::NEG_INFINITY,
    };
    Ok(GrowthReport {
        c,
        k_max,
        per_start,
        k_bar,
        eta: eta_log.exp(),
        eta_log,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_converges_to_attracting_fixed_point() {
        // c = −2: the singular orbit falls into the attracting fixed point
        // q ≈ −1.84141. The closest approach to c happens at the first step,
        // |f(c) − c| = e^{-2}, so M* = 2 exactly.
        let c = Complex64::new(-2.0, 0.0);
        let sample = orbit_sample(c, 50).unwrap();
        assert!(!sample.escaped);
        assert_eq!(sample.points.len(), 50);
        let q = Complex64::new(-1.8414056604369606, 0.0);
        assert!((sample.points[49] - q).norm() < 1e-12);
        let d = nonrecurrence_distance(&sample).unwrap();
        assert!((d.d - (-2.0f64).exp()).abs() < 1e-15);
        assert!((d.m_star - 2.0).abs() < 1e-12);
        assert!(!d.recurrent);
    }

    #[test]
    fn escaping_orbit_is_flagged() {
        // c = 1: e^1 + 1 ≈ 3.72, e^{3.72} + 1 ≈ 42.3, then e^{42} and gone.
        let c = Complex64::new(1.0, 0.0);
        let sample = orbit_sample(c, 10).unwrap();
        assert!(sample.escaped);
        assert!(sample.points.len() < 10);
        assert!(matches!(
            nonrecurrence_distance(&sample),
            Err(OrbitError::EscapingSample)
        ));
    }

    #[test]
    fn finite_singular_orbit() {
        // c with f²(c) = f(c): the orbit is one step then constant.
        // e^c = 2πi gives c = ln(2π) + iπ/2.
        let c = Complex64::new((std::f64::consts::TAU).ln(), std::f64::consts::FRAC_PI_2);
        let sample = orbit_sample(c, 20).unwrap();
        assert!(!sample.escaped);
        // f(c) is a repelling fixed point (multiplier 2πi), so rounding noise
        // grows by |2π| per step; check the first few iterates tightly.
        let first = sample.points[0];
        for (k, p) in sample.points[1..6].iter().enumerate() {
            let drift = 1e-14 * (std::f64::consts::TAU).powi(k as i32 + 1);
            assert!((p - first).norm() < drift.max(1e-13));
        }
        assert!(sample.min_re.is_finite());
    }

    #[test]
    fn half_plane_consistency() {
        // |e^z| = e^{Re z}: the image of the leftmost orbit point lies within
        // e^{min Re} of c.
        let c = Complex64::new(-2.0, 0.0);
        let sample = orbit_sample(c, 30).unwrap();
        let d = nonrecurrence_distance(&sample).unwrap();
        // Some forward image sits at distance exactly e^{Re} from c, so the
        // min distance is at most e^{min Re}.
        assert!(d.d <= d.min_re.exp() + 1e-12);
    }

    #[test]
    fn growth_at_repelling_fixed_point() {
        // Orbit constant at the repelling fixed point p: S_k = k·Re p,
        // all positive; k̄ = 0 and η = e^{Re p}.
        let c = Complex64::new(-2.0, 0.0);
        let p = Complex64::new(1.1461932206205825, 0.0);
        let report = growth_report(c, &[p], 10).unwrap();
        assert!(report.is_positive());
        assert_eq!(report.k_bar, Some(0));
        for (i, s) in report.per_start[0].sums.iter().enumerate() {
            assert!((s - (i + 1) as f64 * p.re).abs() < 1e-9);
        }
        assert!((report.eta - p.re.exp()).abs() < 1e-9);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn growth_fails_at_attracting_fixed_point() {
        let c = Complex64::new(-2.0, 0.0);
        let q = Complex64::new(-1.8414056604369606, 0.0);
        let report = growth_report(c, &[q], 8).unwrap();
        assert!(!report.is_positive());
        assert_eq!(report.k_bar, None);
        assert_eq!(report.violations.len(), 8);
    }

    #[test]
    fn strip_escape_factor() {
        // Any start with Re z ≥ log 2 contributes a per-step factor ≥ 2.
        let c = Complex64::new(-2.0, 0.0);
        let z = Complex64::new(2.0f64.ln(), 0.3);
        let report = growth_report(c, &[z], 1).unwrap();
        assert!(report.per_start[0].sums[0] >= 2.0f64.ln() - 1e-15);
    }

    #[test]
    fn derivative_product_matches_chain_rule() {
        // exp(S_k) equals |(f^k)'(z)| computed by direct chain rule.
        let c = Complex64::new(-2.0, 0.0);
        let z = Complex64::new(-0.7, 0.9);
        let report = growth_report(c, &[z], 15).unwrap();
        for k in 1..=15 {
            let (_, deriv) = crate::ray::iterate_with_derivative(c, z, k).unwrap();
            let product = report.per_start[0].sums[k - 1].exp();
            assert!(
                (deriv.norm() - product).abs() <= 1e-10 * product.max(1.0),
                "k = {k}"
            );
        }
    }
}
