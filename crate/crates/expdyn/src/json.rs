//! Machine-readable artifact formats.
//!
//! Every float in an artifact is printed with 17 significant digits
//! (`{:.16e}`), which round-trips `f64` exactly; a custom serde_json
//! formatter enforces this uniformly. Schemas:
//!
//! - dynamic ray trace: JSON array of `{t, re, im, err}`
//! - parameter ray trace: same sample schema, re/im describing `c`
//! - landing result: `{status, re, im, residual, mult_re, mult_im}`
//! - growth report: `{k_bar, eta, per_start: [{z, S: [..]}], violations}`
//! - puzzle level: `{level, pieces: [{label, bounding_addresses, witness}],
//!   colanding_classes}`
//! - ray graph: `{c, addresses, landings, classes}`

use std::io;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use thiserror::Error;

use crate::address::Address;
use crate::orbit::GrowthReport;
use crate::param::{ParamRayTrace, ParamSample};
use crate::puzzle::{PieceLabel, PuzzleLevel, RayGraph};
use crate::ray::{LandingResult, LandingStatus, RaySample, RayTrace};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("artifact contains a non-finite number; refusing to serialize")]
    NonFinite,
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
    #[error("bad artifact: {0}")]
    Bad(String),
}

/// serde_json formatter printing every float with 17 significant digits.
/// serde_json replaces non-finite floats by `null` before the formatter sees
/// them, so finiteness is enforced by the artifact builders.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize any artifact with the 17-significant-digit float convention.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, JsonError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

fn ensure_finite<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> Result<(), JsonError> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(JsonError::NonFinite);
    }
    Ok(())
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, JsonError> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

// --- ray traces -----------------------------------------------------------

/// A ray trace serializes as the bare sample array.
pub fn ray_trace_to_json(trace: &RayTrace) -> Result<String, JsonError> {
    ensure_finite(
        trace
            .samples
            .iter()
            .flat_map(|s| [&s.t, &s.re, &s.im, &s.err]),
    )?;
    to_json(&trace.samples)
}

pub fn ray_samples_from_json(text: &str) -> Result<Vec<RaySample>, JsonError> {
    from_json(text)
}

pub fn param_trace_to_json(trace: &ParamRayTrace) -> Result<String, JsonError> {
    ensure_finite(
        trace
            .samples
            .iter()
            .flat_map(|s| [&s.t, &s.re, &s.im, &s.err]),
    )?;
    to_json(&trace.samples)
}

pub fn param_samples_from_json(text: &str) -> Result<Vec<ParamSample>, JsonError> {
    from_json(text)
}

// --- landing results ------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LandingJson {
    pub status: LandingStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult_im: Option<f64>,
}

pub fn landing_to_json(result: &LandingResult) -> Result<String, JsonError> {
    let l = LandingJson {
        status: result.status,
        re: result.point.map(|p| p.re),
        im: result.point.map(|p| p.im),
        residual: result.residual.is_finite().then_some(result.residual),
        mult_re: result.multiplier.map(|m| m.re),
        mult_im: result.multiplier.map(|m| m.im),
    };
    to_json(&l)
}

// --- growth reports -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthStartJson {
    pub z: ComplexJson,
    #[serde(rename = "S")]
    pub sums: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthViolationJson {
    pub z: ComplexJson,
    pub k: usize,
    pub s_k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReportJson {
    pub k_bar: Option<usize>,
    pub eta: Option<f64>,
    pub eta_log: f64,
    pub per_start: Vec<GrowthStartJson>,
    pub violations: Vec<GrowthViolationJson>,
}

pub fn growth_report_to_json(report: &GrowthReport) -> Result<String, JsonError> {
    let j = GrowthReportJson {
        k_bar: report.k_bar,
        eta: report.eta.is_finite().then_some(report.eta),
        eta_log: if report.eta_log.is_finite() {
            report.eta_log
        } else {
            return Err(JsonError::NonFinite);
        },
        per_start: report
            .per_start
            .iter()
            .map(|s| GrowthStartJson {
                z: s.z.into(),
                sums: s.sums.clone(),
            })
            .collect(),
        violations: report
            .violations
            .iter()
            .map(|v| GrowthViolationJson {
                z: v.z.into(),
                k: v.k,
                s_k: v.s_k,
            })
            .collect(),
    };
    to_json(&j)
}

// --- puzzles and graphs ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceJson {
    pub label: PieceLabel,
    pub bounding_addresses: Vec<Address>,
    pub witness: ComplexJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PuzzleLevelJson {
    pub level: usize,
    pub pieces: Vec<PieceJson>,
    pub colanding_classes: Vec<Vec<Address>>,
}

pub fn puzzle_level_to_json(level: &PuzzleLevel) -> Result<String, JsonError> {
    to_json(&puzzle_level_json(level))
}

pub fn puzzle_level_json(level: &PuzzleLevel) -> PuzzleLevelJson {
    PuzzleLevelJson {
        level: level.level,
        pieces: level
            .pieces
            .iter()
            .map(|p| PieceJson {
                label: p.label,
                bounding_addresses: p.bounding.clone(),
                witness: p.witness.into(),
            })
            .collect(),
        colanding_classes: level
            .classes
            .iter()
            .map(|cl| cl.iter().map(|&i| level.addresses[i].clone()).collect())
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphLandingJson {
    pub address: Address,
    pub point: ComplexJson,
    pub multiplier: ComplexJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayGraphJson {
    pub c: ComplexJson,
    pub landings: Vec<GraphLandingJson>,
    pub classes: Vec<Vec<Address>>,
}

pub fn ray_graph_to_json(graph: &RayGraph) -> Result<String, JsonError> {
    let j = RayGraphJson {
        c: graph.c.into(),
        landings: graph
            .addresses
            .iter()
            .zip(&graph.landings)
            .map(|(a, (p, m))| GraphLandingJson {
                address: a.clone(),
                point: (*p).into(),
                multiplier: (*m).into(),
            })
            .collect(),
        classes: graph
            .classes
            .iter()
            .map(|cl| cl.iter().map(|&i| graph.addresses[i].clone()).collect())
            .collect(),
    };
    to_json(&j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_17_significant_digits() {
        let s = to_json(&vec![1.1461932206205825f64, 0.1]).unwrap();
        assert!(s.contains("1.1461932206205825e0"), "{s}");
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
    }

    #[test]
    fn float_round_trip_is_exact() {
        let values = [
            std::f64::consts::PI,
            -2.0,
            1e-300,
            6.02e23,
            -0.0,
            1.1461932206205825,
        ];
        let text = to_json(&values.to_vec()).unwrap();
        let back: Vec<f64> = from_json(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn non_finite_is_refused_by_builders() {
        let trace = RayTrace {
            c: Complex64::new(0.0, 0.0),
            address: "| 0".parse().unwrap(),
            samples: vec![RaySample {
                t: 1.0,
                re: f64::NAN,
                im: 0.0,
                err: 0.0,
            }],
            depth: 1,
        };
        assert!(matches!(
            ray_trace_to_json(&trace),
            Err(JsonError::NonFinite)
        ));
    }

    #[test]
    fn ray_samples_round_trip() {
        let samples = vec![
            RaySample {
                t: 2.0,
                re: 1.5,
                im: -0.25,
                err: 1e-12,
            },
            RaySample {
                t: 1.0,
                re: 1.1,
                im: -0.125,
                err: 2e-12,
            },
        ];
        let text = to_json(&samples).unwrap();
        let back: Vec<RaySample> = from_json(&text).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn piece_labels_serialize_as_star_or_number() {
        let s = to_json(&vec![PieceLabel::Branching, PieceLabel::Num(3)]).unwrap();
        assert_eq!(s, r#"["*",3]"#);
        let back: Vec<PieceLabel> = from_json(&s).unwrap();
        assert_eq!(back, vec![PieceLabel::Branching, PieceLabel::Num(3)]);
    }
}
