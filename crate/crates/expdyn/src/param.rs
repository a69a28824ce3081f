//! Parameter rays `G_s(t)`, their landing, and wake membership tests.
//!
//! A parameter `c` lies on the parameter ray of address `s` at potential `t`
//! exactly when `c = g_s^c(t)`, i.e. the parameter sits on its own dynamic
//! ray. Tracing is Newton continuation on `h(c) = g_s^c(t) − c` along a
//! decreasing potential schedule, seeded by the asymptote `t + 2πi·s_0` and
//! then by the previous sample.
//!
//! Periodic-address rays land at parabolic parameters (an indifferent cycle
//! appears), preperiodic ones at Misiurewicz parameters (the singular orbit
//! becomes finite). After Cauchy accumulation the landing is sharpened by
//! Newton on the defining degenerate system, mirroring the dynamic-plane
//! landing refinement.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Address;
use crate::geom::{GeomError, Polygon};
use crate::orbit::orbit_sample;
use crate::ray::{self, land_ray, LandingStatus, RayError};

const TAU: f64 = std::f64::consts::TAU;

/// Newton acceptance for the defining identity `|g_s^c(t) − c|`.
const SOLVE_TOL: f64 = 1e-9;
/// Central-difference step scale for `h'(c)`.
const DIFF_STEP: f64 = 1e-6;
/// Landing schedule mirrors the dynamic-plane one.
const LAND_T0: f64 = 2.0;
const LAND_RHO: f64 = 0.5;
const LAND_T_MIN: f64 = 1e-10;
const CAUCHY_WINDOW: usize = 5;
/// Step-halving budget before declaring a continuation break.
const MAX_HALVINGS: u32 = 8;
/// Indifferent classification band for landed parabolics.
const INDIFFERENT_BAND: f64 = 0.05;
/// Co-landing tolerance shared with the puzzle engine.
pub const GROUP_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("Newton continuation broke at t = {0} after step halving")]
    ContinuationBreak(f64),
    #[error("landing accumulation did not converge")]
    NoConvergence,
    #[error("address must be exact")]
    InexactAddress,
    #[error("address must be periodic or preperiodic")]
    NotEventuallyPeriodic,
    #[error("bad potential range")]
    BadPotentials,
    #[error(transparent)]
    Ray(#[from] RayError),
}

/// One accepted continuation sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ParamSample {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    /// `|g_s^c(t) − c|` at acceptance.
    pub err: f64,
}

impl ParamSample {
    pub fn c(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// A traced parameter ray with per-step solver statistics.
#[derive(Debug, Clone)]
pub struct ParamRayTrace {
    pub address: Address,
    pub samples: Vec<ParamSample>,
    /// Newton iterations spent per accepted sample.
    pub newton_iters: Vec<usize>,
}

/// Wake membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    Outside,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WakeMethod {
    Dynamical,
    Parametric,
}

/// Verdict of a wake membership test together with its evidence.
#[derive(Debug, Clone)]
pub struct WakeVerdict {
    pub inside: Membership,
    pub method: WakeMethod,
    /// Distance between the two landing points (dynamical method).
    pub landing_distance: Option<f64>,
    /// Crossing parity evidence (parametric method).
    pub crossings: Option<usize>,
    /// The orbit of `c` escaped the overflow guard; wake tests need a
    /// non-escaping-looking parameter.
    pub escaping_input: bool,
    pub note: Option<String>,
}

/// Evaluate `g_s^c(t)` for the Newton solve, by the single-potential strip
/// pullback (well defined for parameters near their own ray).
fn eval_ray(c: Complex64, s: &Address, t: f64) -> Result<Complex64, RayError> {
    ray::strip_point(c, s, t).map(|(z, _)| z)
}

/// One Newton solve of `g_s^c(t) = c` from `seed`; returns the parameter,
/// its residual and the iteration count.
///
/// A continuation seed taken from the previous sample sits exactly on its
/// own dynamic ray, so the very first evaluation at a smaller potential can
/// pull back straight through the singular value. The target parameter is
/// off that break, so an obstructed solve restarts from a sideways-nudged
/// seed.
fn solve_at(s: &Address, t: f64, seed: Complex64) -> Result<(Complex64, f64, usize), ParamError> {
    let mut nudge = 0;
    loop {
        let offset = match nudge {
            0 => Complex64::new(0.0, 0.0),
            n => {
                let scale = 1e-5 * (1.0 + seed.norm()) * (10.0f64).powi((n as i32 - 1) / 2);
                if n % 2 == 1 {
                    Complex64::new(0.0, scale)
                } else {
                    Complex64::new(0.0, -scale)
                }
            }
        };
        match solve_once(s, t, seed + offset) {
            Err(ParamError::Ray(RayError::SingularObstruction { .. })) if nudge < 6 => {
                nudge += 1;
            }
            other => return other,
        }
    }
}

fn solve_once(s: &Address, t: f64, seed: Complex64) -> Result<(Complex64, f64, usize), ParamError> {
    let mut c = seed;
    for iter in 0..30 {
        let h = eval_ray(c, s, t)? - c;
        if h.norm() < SOLVE_TOL {
            return Ok((c, h.norm(), iter));
        }
        let delta = DIFF_STEP * (1.0 + c.norm());
        let hp = eval_ray(c + Complex64::new(delta, 0.0), s, t)? - (c + Complex64::new(delta, 0.0));
        let hm = eval_ray(c - Complex64::new(delta, 0.0), s, t)? - (c - Complex64::new(delta, 0.0));
        let dh = (hp - hm) / (2.0 * delta);
        if dh.norm() < 1e-14 {
            break;
        }
        let mut step = h / dh;
        if step.norm() > 1.0 {
            step /= step.norm();
        }
        c -= step;
    }
    // Accept a near-miss only if it still verifies the defining identity.
    let h = eval_ray(c, s, t)? - c;
    if h.norm() < SOLVE_TOL * 10.0 {
        return Ok((c, h.norm(), 30));
    }
    Err(ParamError::ContinuationBreak(t))
}

/// Continuation from `from_t` to `to_t` (decreasing), appending accepted
/// samples. Steps halve on solver failure, up to the halving budget.
fn continue_ray(
    s: &Address,
    from_t: f64,
    to_t: f64,
    step_ratio: f64,
    seed: Complex64,
    samples: &mut Vec<ParamSample>,
    iters: &mut Vec<usize>,
) -> Result<Complex64, ParamError> {
    let mut t_cur = from_t;
    let mut c_cur = seed;
    while t_cur > to_t {
        let mut t_next = (t_cur * step_ratio).max(to_t);
        let mut halvings = 0;
        loop {
            match solve_at(s, t_next, c_cur) {
                Ok((c, err, n)) => {
                    samples.push(ParamSample {
                        t: t_next,
                        re: c.re,
                        im: c.im,
                        err,
                    });
                    iters.push(n);
                    c_cur = c;
                    t_cur = t_next;
                    break;
                }
                Err(ParamError::Ray(e)) => return Err(ParamError::Ray(e)),
                Err(_) => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(ParamError::ContinuationBreak(t_next));
                    }
                    // Halve the step in log scale.
                    t_next = (t_cur.ln() + t_next.ln()).exp2().powf(0.5);
                    t_next = ((t_cur.ln() + t_next.ln()) / 2.0).exp();
                }
            }
        }
    }
    Ok(c_cur)
}

/// Trace the parameter ray of address `s` over `n_samples` geometric steps
/// from `t_hi` down to `t_lo`.
pub fn trace_param_ray(
    s: &Address,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
    tol: f64,
) -> Result<ParamRayTrace, ParamError> {
    if !s.is_exact() {
        return Err(ParamError::InexactAddress);
    }
    if !(t_lo > 0.0 && t_lo < t_hi) || n_samples < 2 || tol <= 0.0 {
        return Err(ParamError::BadPotentials);
    }
    let mut samples = Vec::new();
    let mut iters = Vec::new();
    // Asymptotic seed at the top of the schedule.
    let seed = Complex64::new(t_hi, TAU * s.entry(0) as f64);
    let (c0, err0, n0) = solve_at(s, t_hi, seed)?;
    samples.push(ParamSample {
        t: t_hi,
        re: c0.re,
        im: c0.im,
        err: err0,
    });
    iters.push(n0);
    let ratio = (t_lo / t_hi).powf(1.0 / (n_samples as f64 - 1.0));
    continue_ray(s, t_hi, t_lo, ratio, c0, &mut samples, &mut iters)?;
    // Keep exactly the geometric grid points closest to the request: the
    // continuation may have inserted halved steps; report all accepted
    // samples (strictly decreasing t).
    if samples.iter().any(|s| s.err > tol) {
        return Err(ParamError::NoConvergence);
    }
    Ok(ParamRayTrace {
        address: s.clone(),
        samples,
        newton_iters: iters,
    })
}

/// Parameter-plane landing result.
#[derive(Debug, Clone)]
pub struct ParamLanding {
    pub status: LandingStatus,
    /// Landed parameter.
    pub parameter: Option<Complex64>,
    /// For periodic addresses: the located indifferent cycle multiplier at
    /// the landed parameter, when one was found.
    pub multiplier: Option<Complex64>,
    /// Residual of the defining degenerate system at the landed parameter:
    /// `|f^p(z) − z| + |(f^p)'(z) − 1|` (parabolic) or
    /// `|f^{ℓ+p}(c) − f^ℓ(c)|` (Misiurewicz).
    pub residual: f64,
    /// Classification warnings (numerics near parabolics are delicate).
    pub warning: Option<String>,
}

/// `f_c^n(c)` and its derivative with respect to `c`.
fn orbit_and_c_derivative(c: Complex64, n: usize) -> Option<(Complex64, Complex64)> {
    let mut w = c;
    let mut dw = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        if w.re > 300.0 {
            return None;
        }
        let e = w.exp();
        dw = e * dw + Complex64::new(1.0, 0.0);
        w = e + c;
    }
    Some((w, dw))
}

/// Newton on `f^{ℓ+p}(c) − f^ℓ(c) = 0` in the parameter (Misiurewicz
/// relation), seeded near the accumulated landing.
fn polish_misiurewicz(seed: Complex64, ell: usize, p: usize) -> Option<Complex64> {
    let mut c = seed;
    for _ in 0..60 {
        let (a, da) = orbit_and_c_derivative(c, ell + p)?;
        let (b, db) = orbit_and_c_derivative(c, ell)?;
        let g = a - b;
        if g.norm() < 1e-12 {
            return Some(c);
        }
        let dg = da - db;
        if dg.norm() < 1e-14 {
            return None;
        }
        let mut step = g / dg;
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        c -= step;
    }
    None
}

/// Newton on the parabolic system `f^p(z) = z`, `(f^p)'(z) = 1` in the two
/// complex unknowns `(z, c)`.
fn polish_parabolic(seed_c: Complex64, seed_z: Complex64, p: usize) -> Option<(Complex64, Complex64)> {
    let mut z = seed_z;
    let mut c = seed_c;
    for _ in 0..80 {
        // Forward orbit with partials: w_i = f^i(z); track ∂w/∂z and ∂w/∂c.
        let mut w = z;
        let mut wz = Complex64::new(1.0, 0.0);
        let mut wc = Complex64::new(0.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0); // Σ w_i over the cycle
        let mut sum_z = Complex64::new(0.0, 0.0);
        let mut sum_c = Complex64::new(0.0, 0.0);
        for _ in 0..p {
            if w.re > 300.0 {
                return None;
            }
            sum += w;
            sum_z += wz;
            sum_c += wc;
            let e = w.exp();
            wz = e * wz;
            wc = e * wc + Complex64::new(1.0, 0.0);
            w = e + c;
        }
        let mult = sum.exp(); // (f^p)'(z) = exp(Σ w_i)
        let f1 = w - z;
        let f2 = mult - Complex64::new(1.0, 0.0);
        if f1.norm() + f2.norm() < 1e-12 {
            return Some((z, c));
        }
        // Jacobian.
        let a11 = wz - Complex64::new(1.0, 0.0); // ∂f1/∂z
        let a12 = wc; // ∂f1/∂c
        let a21 = mult * sum_z; // ∂f2/∂z
        let a22 = mult * sum_c; // ∂f2/∂c
        let det = a11 * a22 - a12 * a21;
        if det.norm() < 1e-18 {
            return None;
        }
        let dz = (f1 * a22 - f2 * a12) / det;
        let dc = (a11 * f2 - a21 * f1) / det;
        let scale = (dz.norm().max(dc.norm())).max(1.0);
        let damp = if scale > 0.5 { 0.5 / scale } else { 1.0 };
        z -= dz * damp;
        c -= dc * damp;
    }
    None
}

/// Land the parameter ray of a periodic or preperiodic address.
///
/// Continuation runs toward `t → 0` with Cauchy detection; the accumulated
/// parameter is then sharpened by Newton on the defining system of the
/// landing class (parabolic for periodic addresses, finite singular orbit
/// for preperiodic ones). Classification mismatches produce warnings, not
/// failures.
pub fn land_param_ray(s: &Address, tol: f64) -> Result<ParamLanding, ParamError> {
    if !s.is_exact() {
        return Err(ParamError::InexactAddress);
    }
    if !(s.is_periodic() || s.is_preperiodic()) {
        return Err(ParamError::NotEventuallyPeriodic);
    }
    if tol <= 0.0 {
        return Err(ParamError::BadPotentials);
    }
    let ell = s.preperiod_len();
    let p = s.period_len();

    // Walk in from the asymptotic regime, then follow the halving schedule.
    let mut samples = Vec::new();
    let mut iters = Vec::new();
    let seed = Complex64::new(20.0, TAU * s.entry(0) as f64);
    let (c_top, err0, n0) = solve_at(s, 20.0, seed)?;
    samples.push(ParamSample {
        t: 20.0,
        re: c_top.re,
        im: c_top.im,
        err: err0,
    });
    iters.push(n0);
    let c_mid = continue_ray(s, 20.0, LAND_T0, 0.7, c_top, &mut samples, &mut iters)?;

    // Descend toward the (unknown, possibly positive) minimal potential with
    // an adaptive step: the ratio relaxes toward 1 whenever Newton loses the
    // continuation, so the walk hugs the landing from above instead of
    // overshooting it.
    let mut t_cur = LAND_T0;
    let mut c_cur = c_mid;
    let mut tail: Vec<(f64, Complex64)> = Vec::new();
    let mut accum: Option<Complex64> = None;
    let cauchy_tol = tol.max(1e-4);
    'descend: while t_cur > LAND_T_MIN {
        let mut ratio = LAND_RHO;
        let mut attempts = 0;
        loop {
            let t_next = t_cur * ratio;
            match solve_at(s, t_next, c_cur) {
                Ok((c, _err, _n)) => {
                    c_cur = c;
                    t_cur = t_next;
                    tail.push((t_cur, c));
                    break;
                }
                Err(ParamError::Ray(RayError::SingularObstruction { .. })) => {
                    return Ok(ParamLanding {
                        status: LandingStatus::SingularObstruction,
                        parameter: None,
                        multiplier: None,
                        residual: f64::NAN,
                        warning: None,
                    });
                }
                Err(ParamError::Ray(_)) | Err(ParamError::ContinuationBreak(_)) => {
                    attempts += 1;
                    ratio = ratio.sqrt();
                    if attempts > 16 {
                        // Step collapsed: the walk is pinned at the minimal
                        // potential; use whatever tail accumulated.
                        break 'descend;
                    }
                }
                Err(e) => return Err(e),
            }
        }
        if tail.len() >= CAUCHY_WINDOW {
            let w = &tail[tail.len() - CAUCHY_WINDOW..];
            let spread = w
                .windows(2)
                .map(|q| (q[1].1 - q[0].1).norm())
                .fold(0.0f64, f64::max);
            if spread < cauchy_tol {
                accum = Some(w.last().unwrap().1);
                break;
            }
        }
    }
    let accum = accum.or_else(|| {
        let w = tail.last()?;
        let v = tail.get(tail.len().wrapping_sub(2))?;
        ((w.1 - v.1).norm() < 10.0 * cauchy_tol).then_some(w.1)
    });
    let Some(accum) = accum else {
        return Ok(ParamLanding {
            status: LandingStatus::NoConvergence,
            parameter: None,
            multiplier: None,
            residual: f64::NAN,
            warning: None,
        });
    };
    let t_last = tail.last().map(|(t, _)| *t).unwrap_or(LAND_T_MIN);

    if ell == 0 {
        // Parabolic landing: sharpen the degenerate system, seeding the
        // periodic point from the ray's own near-landing value (the ray of a
        // periodic address accumulates on the parabolic point).
        let seed_z = ray::strip_point(accum, s, t_last)
            .map(|(z, _)| z)
            .unwrap_or(accum);
        if let Some((z_par, c_par)) = polish_parabolic(accum, seed_z, p) {
            if (c_par - accum).norm() < 1e-2 {
                let cycle = ray::orbit_points(c_par, z_par, p);
                let mult = ray::cycle_multiplier(&cycle);
                let (fp, _) = ray::iterate_with_derivative(c_par, z_par, p)
                    .unwrap_or((z_par, Complex64::new(1.0, 0.0)));
                let residual = (fp - z_par).norm() + (mult - Complex64::new(1.0, 0.0)).norm();
                let warning = ((mult.norm() - 1.0).abs() > INDIFFERENT_BAND).then(|| {
                    format!(
                        "polished multiplier modulus {:.6} outside the indifferent band",
                        mult.norm()
                    )
                });
                return Ok(ParamLanding {
                    status: LandingStatus::Landed,
                    parameter: Some(c_par),
                    multiplier: Some(mult),
                    residual,
                    warning,
                });
            }
        }
        // Polish failed: report the accumulation with a classification
        // warning.
        Ok(ParamLanding {
            status: LandingStatus::Landed,
            parameter: Some(accum),
            multiplier: None,
            residual: f64::NAN,
            warning: Some("parabolic refinement did not converge; reporting raw accumulation".into()),
        })
    } else {
        // Misiurewicz landing: the singular orbit becomes finite.
        if let Some(c_mis) = polish_misiurewicz(accum, ell, p) {
            if (c_mis - accum).norm() < 1e-2 {
                let (a, _) = orbit_and_c_derivative(c_mis, ell + p).unwrap();
                let (b, _) = orbit_and_c_derivative(c_mis, ell).unwrap();
                // Multiplier of the post-singular cycle.
                let cycle = ray::orbit_points(c_mis, b, p);
                let mult = ray::cycle_multiplier(&cycle);
                return Ok(ParamLanding {
                    status: LandingStatus::Landed,
                    parameter: Some(c_mis),
                    multiplier: Some(mult),
                    residual: (a - b).norm(),
                    warning: None,
                });
            }
        }
        let residual = orbit_and_c_derivative(accum, ell + p)
            .zip(orbit_and_c_derivative(accum, ell))
            .map(|((a, _), (b, _))| (a - b).norm())
            .unwrap_or(f64::NAN);
        Ok(ParamLanding {
            status: LandingStatus::Landed,
            parameter: Some(accum),
            multiplier: None,
            residual,
            warning: Some("Misiurewicz refinement did not converge; reporting raw accumulation".into()),
        })
    }
}

/// Dynamical wake membership: land both characteristic rays at `c` and
/// compare landing points. `Inside` needs co-landing within the group
/// tolerance, `Outside` requires clear separation.
pub fn wake_test_dynamical(
    c: Complex64,
    s_plus: &Address,
    s_minus: &Address,
) -> Result<WakeVerdict, ParamError> {
    if !(s_plus.is_exact() && s_minus.is_exact()) {
        return Err(ParamError::InexactAddress);
    }
    let escaping = orbit_sample(c, 50).map(|s| s.escaped).unwrap_or(true);
    if escaping {
        return Ok(WakeVerdict {
            inside: Membership::Undecided,
            method: WakeMethod::Dynamical,
            landing_distance: None,
            crossings: None,
            escaping_input: true,
            note: Some("singular orbit escapes; wake tests need a non-escaping parameter".into()),
        });
    }
    let la = land_ray(c, s_plus, 1e-9)?;
    let lb = land_ray(c, s_minus, 1e-9)?;
    let (Some(za), Some(zb)) = (la.landed(), lb.landed()) else {
        return Ok(WakeVerdict {
            inside: Membership::Undecided,
            method: WakeMethod::Dynamical,
            landing_distance: None,
            crossings: None,
            escaping_input: false,
            note: Some(format!(
                "landing failed: {:?} / {:?}",
                la.status, lb.status
            )),
        });
    };
    let d = (za - zb).norm();
    let inside = if d < GROUP_TOL {
        Membership::Inside
    } else if d > 10.0 * GROUP_TOL {
        Membership::Outside
    } else {
        Membership::Undecided
    };
    Ok(WakeVerdict {
        inside,
        method: WakeMethod::Dynamical,
        landing_distance: Some(d),
        crossings: None,
        escaping_input: false,
        note: None,
    })
}

/// Parametric wake membership: trace both characteristic parameter rays,
/// close them through their common landed parameter and a far-right chord,
/// and test which side `c` falls on by crossing parity.
pub fn wake_test_parametric(
    c: Complex64,
    s_plus: &Address,
    s_minus: &Address,
    tol: f64,
) -> Result<WakeVerdict, ParamError> {
    let t_join = 30.0;
    let t_inner = 1e-3;
    let a = trace_param_ray(s_plus, t_inner, t_join, 60, 1e-6)?;
    let b = trace_param_ray(s_minus, t_inner, t_join, 60, 1e-6)?;
    let la = land_param_ray(s_plus, 1e-8)?;
    let lb = land_param_ray(s_minus, 1e-8)?;
    let (Some(ca), Some(cb)) = (la.parameter, lb.parameter) else {
        return Ok(WakeVerdict {
            inside: Membership::Undecided,
            method: WakeMethod::Parametric,
            landing_distance: None,
            crossings: None,
            escaping_input: false,
            note: Some("parameter rays did not land".into()),
        });
    };
    if (ca - cb).norm() > GROUP_TOL.max(1e-5) {
        return Ok(WakeVerdict {
            inside: Membership::Undecided,
            method: WakeMethod::Parametric,
            landing_distance: Some((ca - cb).norm()),
            crossings: None,
            escaping_input: false,
            note: Some("characteristic parameter rays do not co-land".into()),
        });
    }
    // Closed polygon: ray a from far right in, the common landing point,
    // ray b back out; the far-right chord closes implicitly.
    let mut pts: Vec<Complex64> = a.samples.iter().map(|s| s.c()).collect();
    pts.push((ca + cb) / 2.0);
    pts.extend(b.samples.iter().rev().map(|s| s.c()));
    let poly = Polygon::new(pts).map_err(|_| ParamError::NoConvergence)?;
    match poly.contains(c, tol) {
        Ok(inside) => Ok(WakeVerdict {
            inside: if inside {
                Membership::Inside
            } else {
                Membership::Outside
            },
            method: WakeMethod::Parametric,
            landing_distance: Some((ca - cb).norm()),
            crossings: Some(poly.crossings_left(c, tol).unwrap_or(0)),
            escaping_input: false,
            note: None,
        }),
        Err(GeomError::AmbiguousCrossing { .. }) | Err(GeomError::OnBoundary { .. }) => {
            Ok(WakeVerdict {
                inside: Membership::Undecided,
                method: WakeMethod::Parametric,
                landing_distance: Some((ca - cb).norm()),
                crossings: None,
                escaping_input: false,
                note: Some("probe ambiguous near the wake boundary".into()),
            })
        }
        Err(e) => Ok(WakeVerdict {
            inside: Membership::Undecided,
            method: WakeMethod::Parametric,
            landing_distance: None,
            crossings: None,
            escaping_input: false,
            note: Some(e.to_string()),
        }),
    }
}
