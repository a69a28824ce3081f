//! Dynamic ray tracing, landing detection and periodic orbit location for
//! `f_c(z) = e^z + c`.
//!
//! A ray point at potential `t` is computed by logarithmic pullback: pick a
//! depth `N`, seed `z_N = F^N(t) + 2πi·s_N` in the asymptotic regime, then
//! walk back through `z_k = Log_{m_k}(z_{k+1} − c)`, where `Log_m` is the
//! logarithm branch with imaginary part in `(2πm − π, 2πm + π]`.
//!
//! The branch indices `m_k` start at the address entries — that is the strip
//! correspondence of the asymptotics — but must follow the curve
//! continuously toward small potentials: where a pullback level winds around
//! the singular value, its imaginary part climbs by 2π and the literal entry
//! branch would jump onto a vertical translate. Each level `k` is the curve
//! `g_{σ^k s}` in its own potential coordinate `u = F^k(t)`, so the
//! evaluator keeps a per-level memo of `(u, z, branch)` samples, anchors
//! every level at its own asymptotic end, and refines adaptively wherever
//! the imaginary part moves too fast to certify the branch. Tracking along
//! `t` at a fixed level would not work: `F^k(t)` is so steep that one step
//! of `t` sweeps a deep level across its entire curve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::{growth_model, Address, AddressError};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Depth search target: the seed potential must clear `50 + ‖s‖` for the
/// asymptotic seed error `o(e^{-u})` to be negligible.
const SEED_POTENTIAL_MARGIN: f64 = 50.0;
/// Threshold cap keeping `F(u)` representable for huge-entry addresses.
const THRESHOLD_CAP: f64 = 280.0;
/// Default pullback depth cap.
const MAX_DEPTH: u32 = 60;
/// Depth cap used by the landing walk: weakly repelling landing points
/// contract the pullback slowly and need more depth at tiny potentials.
const LANDING_DEPTH: u32 = 400;
/// Branch choice is numerically meaningless this close to the singular value.
pub const SINGULAR_RADIUS: f64 = 1e-8;
/// Largest imaginary move between adjacent samples of one level that still
/// certifies the nearest-branch choice. Must stay well under π: a translate
/// differs by 2π, so a candidate within this window cannot be confused with
/// one whose true move was 2π minus the window.
const BRANCH_IM_STEP: f64 = 1.2;
/// Largest gap in log-potential across which branch continuity is trusted at
/// all; wider gaps are subdivided unconditionally (a curve can slide a full
/// turn across a long stretch while aliasing as a small move).
const MAX_LOG_GAP: f64 = 0.35;
/// Landing schedule: t_j = T0 · RHO^j down to T_MIN.
const LAND_T0: f64 = 2.0;
const LAND_RHO: f64 = 0.5;
const LAND_T_MIN: f64 = 1e-12;
/// Consecutive samples that must form a Cauchy tail to declare landing.
const CAUCHY_WINDOW: usize = 5;
/// Newton refinement budget.
const NEWTON_MAX_ITER: usize = 50;
/// Potentials above which the trace is the asymptote to machine precision.
const ASYMPTOTIC_DIRECT: f64 = 290.0;
/// Total memo insertions allowed per evaluator (runaway-refinement guard).
const EVAL_BUDGET: usize = 4_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error("pullback passed within {radius:e} of the singular value at level {level} (u = {u})")]
    SingularObstruction { u: f64, level: u32, radius: f64 },
    #[error("refinement failed to certify the ray within tolerance at t = {t} (err = {err:e})")]
    NoConvergence { t: f64, err: f64 },
    #[error("branch tracking lost continuity at level {level}, u = {u}")]
    BranchTrackingFailure { level: u32, u: f64 },
    #[error("address window too short: need {needed} trusted entries, have {have}")]
    WindowTooShort { needed: usize, have: usize },
    #[error("potential grid must be positive and strictly decreasing")]
    BadPotentials,
    #[error("landing requires a periodic or preperiodic exact address")]
    NotEventuallyPeriodic,
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error("{0}")]
    BadInput(String),
}

/// One traced sample: potential, ray point, and the contraction-based error
/// estimate, floored at representation noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RaySample {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub err: f64,
}

impl RaySample {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// A traced dynamic ray: samples run from large potential toward 0.
#[derive(Debug, Clone)]
pub struct RayTrace {
    pub c: Complex64,
    pub address: Address,
    pub samples: Vec<RaySample>,
    /// Largest pullback depth used for an asymptotic seed.
    pub depth: u32,
}

/// Landing status per the ray engine contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LandingStatus {
    Landed,
    NoConvergence,
    SingularObstruction,
}

/// Outcome of a landing run. `point` is present when `status == Landed`; for
/// (pre)periodic addresses `residual` is `|f^p(z*) − z*|` on the periodic
/// part and `multiplier` is `(f^p)'` there, which classifies the landing
/// point as repelling, attracting or indifferent.
#[derive(Debug, Clone)]
pub struct LandingResult {
    pub status: LandingStatus,
    pub point: Option<Complex64>,
    pub residual: f64,
    pub multiplier: Option<Complex64>,
}

impl LandingResult {
    pub fn landed(&self) -> Option<Complex64> {
        if self.status == LandingStatus::Landed {
            self.point
        } else {
            None
        }
    }
}

/// Stability class of a periodic orbit by multiplier modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    Attracting,
    Repelling,
    Indifferent,
}

/// A located periodic orbit of `f_c`.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Period requested of the solver; the orbit satisfies `f^p(z) = z`.
    pub period: usize,
    /// Minimal period (divides `period`; a fixed point found at `p = 2`
    /// reports `minimal_period = 1`).
    pub minimal_period: usize,
    /// The `period` points of the cycle in dynamical order.
    pub points: Vec<Complex64>,
    /// `(f^p)'(z) = exp(Σ z_i)` over the cycle.
    pub multiplier: Complex64,
    pub classification: OrbitClass,
}

/// `f_c(z) = e^z + c`.
pub fn apply(c: Complex64, z: Complex64) -> Complex64 {
    z.exp() + c
}

/// Logarithm branch with imaginary part in `(2πm − π, 2πm + π]`.
pub fn log_branch(w: Complex64, m: i64) -> Complex64 {
    let mut l = w.ln();
    // Principal arg returns −π on the lower side of the cut; the branch
    // convention is half-open at +π.
    if l.im == -PI {
        l.im = PI;
    }
    l + Complex64::new(0.0, TAU * m as f64)
}

// ---------------------------------------------------------------------------
// Per-level branch-tracked evaluator.
// ---------------------------------------------------------------------------

/// Memoized samples of one pullback level, sorted by potential.
#[derive(Debug, Default, Clone)]
struct LevelMemo {
    /// `(u, z, m)`: the level's curve point at potential `u` on branch `m`.
    pts: Vec<(f64, Complex64, i64)>,
}

impl LevelMemo {
    fn lookup(&self, u: f64) -> Option<Complex64> {
        self.pts
            .binary_search_by(|p| p.0.total_cmp(&u))
            .ok()
            .map(|i| self.pts[i].1)
    }

    fn insert(&mut self, u: f64, z: Complex64, m: i64) {
        if let Err(i) = self.pts.binary_search_by(|p| p.0.total_cmp(&u)) {
            self.pts.insert(i, (u, z, m));
        }
    }

    /// Sample nearest to `u` in log scale.
    fn nearest(&self, u: f64) -> Option<(f64, Complex64, i64)> {
        if self.pts.is_empty() {
            return None;
        }
        let i = self
            .pts
            .binary_search_by(|p| p.0.total_cmp(&u))
            .unwrap_or_else(|i| i);
        let mut best: Option<(f64, Complex64, i64)> = None;
        for j in [i.wrapping_sub(1), i] {
            if let Some(&(up, z, m)) = self.pts.get(j) {
                let d = (up.ln() - u.ln()).abs();
                if best.is_none_or(|(ub, _, _)| d < (ub.ln() - u.ln()).abs()) {
                    best = Some((up, z, m));
                }
            }
        }
        best
    }

    /// Branch at the smallest evaluated potential (the landing end).
    fn innermost_branch(&self) -> Option<i64> {
        self.pts.first().map(|&(_, _, m)| m)
    }
}

/// Branch-tracked pullback evaluator for one ray at one parameter.
///
/// `ray_at(t)` returns `g_s(t)`; level memos persist across calls, so a
/// whole trace shares the branch bookkeeping.
pub struct RayEvaluator<'a> {
    c: Complex64,
    address: &'a Address,
    max_depth: u32,
    threshold: f64,
    levels: Vec<LevelMemo>,
    inserted: usize,
    deepest: u32,
}

impl<'a> RayEvaluator<'a> {
    pub fn new(c: Complex64, address: &'a Address, max_depth: u32) -> Self {
        let threshold = (SEED_POTENTIAL_MARGIN + address.sup_norm() as f64).min(THRESHOLD_CAP);
        RayEvaluator {
            c,
            address,
            max_depth,
            threshold,
            levels: vec![LevelMemo::default(); max_depth as usize + 1],
            inserted: 0,
            deepest: 0,
        }
    }

    /// Largest depth whose seed actually mattered so far.
    pub fn depth_used(&self) -> u32 {
        self.deepest
    }

    pub fn parameter(&self) -> Complex64 {
        self.c
    }

    pub fn address(&self) -> &Address {
        self.address
    }

    fn entry(&self, k: u32) -> Result<i64, RayError> {
        if !self.address.is_exact() && (k as usize) >= self.address.trusted_len() {
            return Err(RayError::WindowTooShort {
                needed: k as usize + 1,
                have: self.address.trusted_len(),
            });
        }
        Ok(self.address.entry(k as usize))
    }

    /// The ray point `g_{σ^k s}(u)`.
    fn eval(&mut self, k: u32, u: f64) -> Result<Complex64, RayError> {
        let entry = self.entry(k)?;
        if u >= self.threshold || k >= self.max_depth {
            // Asymptotic regime (accurate to o(e^{-u})), or the crude seed
            // at the depth cap whose error contracts on the way down.
            self.deepest = self.deepest.max(k);
            return Ok(Complex64::new(u, TAU * entry as f64));
        }
        if let Some(z) = self.levels[k as usize].lookup(u) {
            return Ok(z);
        }
        // Anchor the level at its own asymptotic end before walking inward.
        if self.levels[k as usize].pts.is_empty() {
            let ua = self.threshold;
            let za = Complex64::new(ua, TAU * entry as f64);
            self.levels[k as usize].insert(ua, za, entry);
        }
        loop {
            let (un, zn, _mn) = self.levels[k as usize].nearest(u).unwrap();
            let loggap = (u.ln() - un.ln()).abs();
            if loggap > MAX_LOG_GAP {
                // Ladder toward the nearest sample: never trust continuity
                // across a wide potential gap.
                let mid = ((u.ln() + un.ln()) / 2.0).exp();
                if (mid.ln() - u.ln()).abs() < 1e-13 || (mid.ln() - un.ln()).abs() < 1e-13 {
                    return Err(RayError::BranchTrackingFailure { level: k, u });
                }
                self.eval(k, mid)?;
                continue;
            }
            let w = self.eval(k + 1, growth_model(u))? - self.c;
            if w.norm() < SINGULAR_RADIUS {
                return Err(RayError::SingularObstruction {
                    u,
                    level: k,
                    radius: SINGULAR_RADIUS,
                });
            }
            let base = log_branch(w, 0);
            let m = ((zn.im - base.im) / TAU).round() as i64;
            let z = base + Complex64::new(0.0, TAU * m as f64);
            if (z.im - zn.im).abs() <= BRANCH_IM_STEP {
                self.levels[k as usize].insert(u, z, m);
                self.inserted += 1;
                if self.inserted > EVAL_BUDGET {
                    return Err(RayError::BranchTrackingFailure { level: k, u });
                }
                return Ok(z);
            }
            // The level moved too fast between u and its nearest sample:
            // refine between them (log midpoint) and retry.
            let mid = ((u.ln() + un.ln()) / 2.0).exp();
            if (mid.ln() - u.ln()).abs() < 1e-13 || (mid.ln() - un.ln()).abs() < 1e-13 {
                return Err(RayError::BranchTrackingFailure { level: k, u });
            }
            self.eval(k, mid)?;
        }
    }

    /// Ray point at potential `t`.
    pub fn ray_at(&mut self, t: f64) -> Result<Complex64, RayError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(RayError::BadPotentials);
        }
        self.eval(0, t)
    }

    /// Branch index of level `k` at the sample nearest `u`.
    fn branch_near(&self, k: u32, u: f64) -> i64 {
        self.levels
            .get(k as usize)
            .and_then(|l| l.nearest(u))
            .map(|(_, _, m)| m)
            .unwrap_or_else(|| self.address.entry(k as usize))
    }

    /// Branch index of level `k` at its landing end.
    pub fn innermost_branch(&self, k: u32) -> i64 {
        self.levels
            .get(k as usize)
            .and_then(|l| l.innermost_branch())
            .unwrap_or_else(|| self.address.entry(k as usize))
    }

    /// Contraction-based error estimate at potential `t`: push a small seed
    /// perturbation through the branch sequence the evaluation used and
    /// scale by the seed's worst-case uncertainty (which decays like `e^-u`
    /// at seed potential `u`).
    pub fn error_estimate(&mut self, t: f64) -> Result<f64, RayError> {
        let z0 = self.eval(0, t)?;
        let floor = z0.norm() * 1e-15;
        // Level potentials actually used for this t.
        let mut us = Vec::new();
        let mut u = t;
        let mut k = 0u32;
        while u < self.threshold && k < self.max_depth {
            us.push(u);
            u = growth_model(u);
            k += 1;
        }
        let seed_u = u;
        let probe = 1e-3;
        let mut perturbed =
            Complex64::new(seed_u, TAU * self.entry(k)? as f64) + Complex64::new(0.0, probe);
        for (kk, &uu) in us.iter().enumerate().rev() {
            let w = perturbed - self.c;
            if w.norm() < SINGULAR_RADIUS {
                return Err(RayError::SingularObstruction {
                    u: uu,
                    level: kk as u32,
                    radius: SINGULAR_RADIUS,
                });
            }
            perturbed = log_branch(w, self.branch_near(kk as u32, uu));
        }
        let rate = (perturbed - z0).norm() / probe;
        let seed_uncertainty =
            TAU * (self.address.sup_norm() as f64 + 2.0) * (-seed_u).exp().min(1.0);
        Ok((rate * seed_uncertainty).max(floor))
    }
}

/// Literal strip pullback at one potential, without branch tracking.
///
/// This is the evaluation the parameter-ray Newton needs: a parameter on its
/// own ray breaks the ray below its potential, so a tracked walk through
/// higher potentials necessarily crosses the singular value, while the
/// single-column scheme stays well defined and analytic in `c` away from the
/// branch cuts.
pub fn strip_point(c: Complex64, address: &Address, t: f64) -> Result<(Complex64, f64), RayError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(RayError::BadPotentials);
    }
    let threshold = (SEED_POTENTIAL_MARGIN + address.sup_norm() as f64).min(THRESHOLD_CAP);
    let mut us = Vec::new();
    let mut u = t;
    while u < threshold && (us.len() as u32) < MAX_DEPTH {
        us.push(u);
        u = growth_model(u);
    }
    let n = us.len();
    if !address.is_exact() && address.trusted_len() < n + 1 {
        return Err(RayError::WindowTooShort {
            needed: n + 1,
            have: address.trusted_len(),
        });
    }
    let seed_u = u;
    let mut z = Complex64::new(seed_u, TAU * address.entry(n) as f64);
    let mut perturbed = z + Complex64::new(0.0, 1e-3);
    for (k, &uu) in us.iter().enumerate().rev() {
        let w = z - c;
        if w.norm() < SINGULAR_RADIUS {
            return Err(RayError::SingularObstruction {
                u: uu,
                level: k as u32,
                radius: SINGULAR_RADIUS,
            });
        }
        z = log_branch(w, address.entry(k));
        let wp = perturbed - c;
        if wp.norm() < SINGULAR_RADIUS {
            perturbed = z;
        } else {
            perturbed = log_branch(wp, address.entry(k));
        }
    }
    let rate = (perturbed - z).norm() / 1e-3;
    let err = (rate * TAU * (address.sup_norm() as f64 + 2.0) * (-seed_u).exp().min(1.0))
        .max(z.norm() * 1e-15);
    Ok((z, err))
}

fn validate_grid(potentials: &[f64]) -> Result<(), RayError> {
    if potentials.is_empty()
        || potentials.iter().any(|t| !t.is_finite() || *t <= 0.0)
        || potentials.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(RayError::BadPotentials);
    }
    Ok(())
}

/// Trace a dynamic ray at an explicit strictly decreasing potential grid.
pub fn trace_ray_at(
    c: Complex64,
    address: &Address,
    potentials: &[f64],
    tol: f64,
) -> Result<RayTrace, RayError> {
    trace_ray_at_depth(c, address, potentials, tol, MAX_DEPTH)
}

/// [`trace_ray_at`] with an explicit pullback depth cap. The default cap
/// suits strongly repelling landings; weakly repelling ones contract like
/// `exp(-N·Re z)` per level and need more depth at tiny potentials.
pub fn trace_ray_at_depth(
    c: Complex64,
    address: &Address,
    potentials: &[f64],
    tol: f64,
    max_depth: u32,
) -> Result<RayTrace, RayError> {
    validate_grid(potentials)?;
    if tol <= 0.0 {
        return Err(RayError::BadInput("tolerance must be positive".into()));
    }
    if potentials[0] > ASYMPTOTIC_DIRECT {
        return Err(RayError::BadInput(format!(
            "potentials above {ASYMPTOTIC_DIRECT} overflow the seed arithmetic"
        )));
    }
    let mut eval = RayEvaluator::new(c, address, max_depth);
    let mut samples = Vec::with_capacity(potentials.len());
    for &t in potentials {
        let z = eval.ray_at(t)?;
        let err = eval.error_estimate(t)?;
        if err > tol {
            return Err(RayError::NoConvergence { t, err });
        }
        samples.push(RaySample {
            t,
            re: z.re,
            im: z.im,
            err,
        });
    }
    Ok(RayTrace {
        c,
        address: address.clone(),
        samples,
        depth: eval.depth_used(),
    })
}

/// Trace a ray on a geometric grid of `n_samples` potentials from `t_hi`
/// down to `t_lo`.
pub fn trace_ray(
    c: Complex64,
    address: &Address,
    t_lo: f64,
    t_hi: f64,
    n_samples: usize,
    tol: f64,
) -> Result<RayTrace, RayError> {
    if !(t_lo > 0.0 && t_lo < t_hi) || n_samples < 2 {
        return Err(RayError::BadPotentials);
    }
    let ratio = (t_lo / t_hi).powf(1.0 / (n_samples as f64 - 1.0));
    let mut grid: Vec<f64> = (0..n_samples)
        .map(|i| t_hi * ratio.powi(i as i32))
        .collect();
    grid[n_samples - 1] = t_lo;
    trace_ray_at(c, address, &grid, tol)
}

/// Single ray point `g_s(t)` with its error estimate.
pub fn ray_point(
    c: Complex64,
    address: &Address,
    t: f64,
    tol: f64,
) -> Result<(Complex64, f64), RayError> {
    let trace = trace_ray_at(c, address, &[t], tol)?;
    let s = trace.samples[0];
    Ok((s.z(), s.err))
}

/// `f^p(z)` together with `(f^p)'(z)` by the chain rule. `None` when the
/// orbit leaves the representable range.
pub(crate) fn iterate_with_derivative(
    c: Complex64,
    z: Complex64,
    p: usize,
) -> Option<(Complex64, Complex64)> {
    let mut w = z;
    let mut deriv = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        if w.re > 300.0 {
            return None;
        }
        let e = w.exp();
        deriv *= e;
        if !deriv.is_finite() {
            return None;
        }
        w = e + c;
    }
    Some((w, deriv))
}

/// Newton iteration on `f^p(z) − z` with step damping; returns the refined
/// point when the residual drops below `tol`.
pub(crate) fn newton_periodic(
    c: Complex64,
    seed: Complex64,
    p: usize,
    tol: f64,
) -> Option<Complex64> {
    let mut z = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let (fz, dfz) = iterate_with_derivative(c, z, p)?;
        let g = fz - z;
        if g.norm() < tol {
            return Some(z);
        }
        let dg = dfz - Complex64::new(1.0, 0.0);
        if dg.norm() < 1e-300 {
            return None;
        }
        let mut step = g / dg;
        // Repelling points make long steps unreliable; stay local.
        if step.norm() > 1.0 {
            step /= step.norm();
        }
        z -= step;
    }
    None
}

/// Orbit of `z` under `f_c` for `p` steps.
pub(crate) fn orbit_points(c: Complex64, z: Complex64, p: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(p);
    let mut w = z;
    for _ in 0..p {
        pts.push(w);
        w = apply(c, w);
    }
    pts
}

/// Multiplier `(f^p)' = exp(Σ z_i)` over a cycle.
pub(crate) fn cycle_multiplier(points: &[Complex64]) -> Complex64 {
    let sum: Complex64 = points.iter().sum();
    sum.exp()
}

/// Land a periodic or preperiodic dynamic ray.
///
/// Walks the geometric potential schedule toward 0, declares landing when a
/// window of consecutive samples is Cauchy below `tol`, then sharpens: for a
/// periodic address, Newton on `f^p(z) − z`; for a preperiodic address the
/// periodic tail is landed first and the point is pulled back along the
/// branches the evaluation actually used at its landing end.
pub fn land_ray(c: Complex64, address: &Address, tol: f64) -> Result<LandingResult, RayError> {
    let mut eval = RayEvaluator::new(c, address, LANDING_DEPTH);
    land_with(&mut eval, tol)
}

/// [`land_ray`] on an existing evaluator, reusing its branch bookkeeping.
pub fn land_with(eval: &mut RayEvaluator<'_>, tol: f64) -> Result<LandingResult, RayError> {
    let c = eval.parameter();
    let address = eval.address().clone();
    if !(address.is_periodic() || address.is_preperiodic()) {
        return Err(RayError::NotEventuallyPeriodic);
    }
    if tol <= 0.0 {
        return Err(RayError::BadInput("tolerance must be positive".into()));
    }
    let ell = address.preperiod_len();
    let p = address.period_len();

    let mut t = LAND_T0;
    let mut tail: Vec<Complex64> = Vec::new();
    let mut landed_tail: Option<Complex64> = None;
    while t > LAND_T_MIN {
        match eval.ray_at(t) {
            Ok(z) => tail.push(z),
            Err(RayError::SingularObstruction { .. }) => {
                return Ok(LandingResult {
                    status: LandingStatus::SingularObstruction,
                    point: None,
                    residual: f64::NAN,
                    multiplier: None,
                });
            }
            Err(e) => return Err(e),
        }
        if tail.len() >= CAUCHY_WINDOW {
            let w = &tail[tail.len() - CAUCHY_WINDOW..];
            let spread = w
                .windows(2)
                .map(|p| (p[1] - p[0]).norm())
                .fold(0.0f64, f64::max);
            if spread < tol {
                landed_tail = Some(*w.last().unwrap());
                break;
            }
        }
        // The pullback converges to its depth-capped limit; once consecutive
        // samples are frozen at representation noise, smaller potentials add
        // nothing.
        if tail.len() >= 2 {
            let n = tail.len();
            if (tail[n - 1] - tail[n - 2]).norm() < 1e-13 * tail[n - 1].norm().max(1.0) {
                landed_tail = Some(tail[n - 1]);
                break;
            }
        }
        t *= LAND_RHO;
    }
    let Some(accum) = landed_tail else {
        return Ok(LandingResult {
            status: LandingStatus::NoConvergence,
            point: None,
            residual: f64::NAN,
            multiplier: None,
        });
    };

    // Sharpen the periodic part. For preperiodic addresses the accumulated
    // value approximates the preperiodic point; push it forward to seed the
    // cycle, refine there, then pull back.
    let tail_seed = if ell == 0 {
        accum
    } else {
        let mut w = accum;
        for _ in 0..ell {
            w = apply(c, w);
        }
        w
    };
    let refine_tol = (tol * 1e-4).max(1e-13);
    let Some(periodic_pt) = newton_periodic(c, tail_seed, p, refine_tol) else {
        // Newton can fail near parabolic points; report the raw accumulation
        // with its honest residual.
        let residual = iterate_with_derivative(c, tail_seed, p)
            .map(|(fp, _)| (fp - tail_seed).norm())
            .unwrap_or(f64::NAN);
        return Ok(LandingResult {
            status: LandingStatus::NoConvergence,
            point: Some(accum),
            residual,
            multiplier: None,
        });
    };
    let cycle = orbit_points(c, periodic_pt, p);
    let multiplier = cycle_multiplier(&cycle);
    let (fp, _) = iterate_with_derivative(c, periodic_pt, p).unwrap();
    let residual = (fp - periodic_pt).norm();

    let point = if ell == 0 {
        periodic_pt
    } else {
        // Pull the refined periodic point back along the innermost branches
        // the evaluation used (these carry any winding corrections).
        let mut w = periodic_pt;
        for k in (0..ell).rev() {
            let arg = w - c;
            if arg.norm() < SINGULAR_RADIUS {
                return Ok(LandingResult {
                    status: LandingStatus::SingularObstruction,
                    point: None,
                    residual: f64::NAN,
                    multiplier: None,
                });
            }
            w = log_branch(arg, eval.innermost_branch(k as u32));
        }
        // The pullback target must agree with the accumulated tail.
        if (w - accum).norm() > 1e-2 {
            return Err(RayError::BranchTrackingFailure { level: 0, u: t });
        }
        w
    };

    Ok(LandingResult {
        status: LandingStatus::Landed,
        point: Some(point),
        residual,
        multiplier: Some(multiplier),
    })
}

/// Newton search for periodic orbits of period `p` from the given seeds,
/// deduplicated up to cyclic rotation and classified by multiplier modulus
/// (`[1 − tol, 1 + tol]` counts as indifferent).
pub fn find_periodic_orbits(
    c: Complex64,
    p: usize,
    seeds: &[Complex64],
    tol: f64,
) -> Result<Vec<PeriodicOrbit>, RayError> {
    if p == 0 {
        return Err(RayError::BadInput("period must be at least 1".into()));
    }
    if seeds.is_empty() {
        return Err(RayError::BadInput("seed list must be nonempty".into()));
    }
    let dedup_tol = tol.max(1e-9);
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for &seed in seeds {
        let Some(z) = newton_periodic(c, seed, p, (tol * 1e-2).max(1e-13)) else {
            continue;
        };
        let points = orbit_points(c, z, p);
        let duplicate = orbits.iter().any(|o| {
            (0..p).any(|r| {
                points
                    .iter()
                    .enumerate()
                    .all(|(i, q)| (o.points[(i + r) % p] - q).norm() < dedup_tol)
            })
        });
        if duplicate {
            continue;
        }
        let minimal_period = (1..=p)
            .find(|&q| {
                p % q == 0
                    && iterate_with_derivative(c, points[0], q)
                        .map(|(w, _)| (w - points[0]).norm() < dedup_tol)
                        .unwrap_or(false)
            })
            .unwrap_or(p);
        let multiplier = cycle_multiplier(&points);
        let modulus = multiplier.norm();
        let classification = if (modulus - 1.0).abs() <= tol {
            OrbitClass::Indifferent
        } else if modulus > 1.0 {
            OrbitClass::Repelling
        } else {
            OrbitClass::Attracting
        };
        orbits.push(PeriodicOrbit {
            period: p,
            minimal_period,
            points,
            multiplier,
            classification,
        });
    }
    Ok(orbits)
}

/// Max deviation `|g_{s_n}(t) − g_s(t)|` over `t ∈ [t_star, T]` for the last
/// element of a sequence of addresses converging to `s_limit`. `T` is fixed
/// at 30, where the asymptotics pin both traces.
pub fn transversal_continuity_check(
    c: Complex64,
    seq: &[Address],
    limit: &Address,
    t_star: f64,
) -> Result<f64, RayError> {
    let Some(last) = seq.last() else {
        return Err(RayError::BadInput(
            "address sequence must be nonempty".into(),
        ));
    };
    if t_star <= 0.0 {
        return Err(RayError::BadPotentials);
    }
    // Soft convergence sanity: the last element must not be farther from the
    // limit than the first.
    if seq.len() > 1 {
        let d_first = crate::address::metric_distance(&seq[0], limit);
        let d_last = crate::address::metric_distance(last, limit);
        if d_last.lower() > d_first.upper() {
            return Err(RayError::BadInput(
                "address sequence does not approach the limit".into(),
            ));
        }
    }
    if last == limit {
        return Ok(0.0);
    }
    let t_top = 30.0f64.max(t_star * 2.0);
    let n = 40;
    let ratio = (t_star / t_top).powf(1.0 / (n as f64 - 1.0));
    let mut grid: Vec<f64> = (0..n).map(|i| t_top * ratio.powi(i as i32)).collect();
    grid[n - 1] = t_star;
    let a = trace_ray_at(c, last, &grid, 1e-6)?;
    let b = trace_ray_at(c, limit, &grid, 1e-6)?;
    Ok(a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.z() - y.z()).norm())
        .fold(0.0, f64::max))
}
