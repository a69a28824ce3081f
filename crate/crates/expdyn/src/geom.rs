//! Polyline side tests used by the puzzle and wake machinery.
//!
//! Boundary curves are closed polygons built from two traced rays joined at
//! their common landing point and closed by a far-right chord. Which side of
//! a curve a point lies on is decided by even–odd crossing counting along a
//! horizontal probe running from the point toward `Re = −∞`. Crossings that
//! pass too close to a polyline vertex are refused rather than guessed.

use num_complex::Complex64;
use thiserror::Error;

/// Probe endpoint standing in for `Re → −∞`.
pub const FAR_LEFT: f64 = -1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("probe crossing within {tol:e} of a polyline vertex at index {index}")]
    AmbiguousCrossing { index: usize, tol: f64 },
    #[error("point lies within {tol:e} of the boundary polyline")]
    OnBoundary { tol: f64 },
    #[error("degenerate polygon: fewer than 3 vertices")]
    Degenerate,
}

/// A closed polygon (last vertex connects back to the first).
#[derive(Debug, Clone)]
pub struct Polygon {
    pub points: Vec<Complex64>,
}

impl Polygon {
    pub fn new(points: Vec<Complex64>) -> Result<Self, GeomError> {
        if points.len() < 3 {
            return Err(GeomError::Degenerate);
        }
        Ok(Polygon { points })
    }

    /// Distance from `z` to the nearest polygon edge.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            let a = self.points[i];
            let b = self.points[(i + 1) % self.points.len()];
            best = best.min(segment_distance(z, a, b));
        }
        best
    }

    /// Count crossings of the horizontal probe from `z` to
    /// `(FAR_LEFT, Im z)` with the polygon boundary.
    pub fn crossings_left(&self, z: Complex64, tol: f64) -> Result<usize, GeomError> {
        let y = z.im;
        let mut count = 0;
        let n = self.points.len();
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            // Vertex proximity guard: a vertex on (or nearly on) the probe
            // line within the probe span makes the parity unreliable.
            for (j, v) in [(i, a), ((i + 1) % n, b)] {
                if (v.im - y).abs() < tol && v.re < z.re + tol && v.re > FAR_LEFT {
                    return Err(GeomError::AmbiguousCrossing { index: j, tol });
                }
            }
            let (ya, yb) = (a.im - y, b.im - y);
            if (ya > 0.0) == (yb > 0.0) {
                continue;
            }
            // Strict sign change: the crossing abscissa.
            let x = a.re + (b.re - a.re) * (ya / (a.im - b.im));
            if (x - z.re).abs() < tol {
                return Err(GeomError::OnBoundary { tol });
            }
            if x < z.re && x > FAR_LEFT {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Even–odd inside test via the left probe.
    pub fn contains(&self, z: Complex64, tol: f64) -> Result<bool, GeomError> {
        Ok(self.crossings_left(z, tol)? % 2 == 1)
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}
