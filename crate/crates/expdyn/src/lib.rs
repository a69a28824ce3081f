//! Combinatorial and numerical machinery for the exponential family
//! `f_c(z) = e^z + c`.
//!
//! The crate makes the standard toolbox of exponential dynamics executable:
//!
//! - [`address`] — exact symbolic algebra on integer-sequence addresses:
//!   shift, lexicographic order, the `Σ 2^{-i}` metric in exact rational
//!   arithmetic, exponential boundedness and recurrence diagnostics.
//! - [`ray`] — numerical tracing of dynamic rays `g_s(t)` by branch-tracked
//!   logarithmic pullback, landing detection with Newton refinement, and
//!   periodic orbit location/classification.
//! - [`puzzle`] — forward-invariant ray graphs, their pullback levels,
//!   puzzle-piece location by crossing signatures, combinatorial
//!   non-recurrence certificates and cross-parameter piece equivalence.
//! - [`param`] — parameter rays `G_s(t)` by Newton continuation on
//!   `g_s^c(t) = c`, their landing at parabolic/Misiurewicz parameters, and
//!   dynamical wake membership tests.
//! - [`orbit`] — postsingular orbit sampling, non-recurrence distances and
//!   hyperbolicity growth reports built on `|(f^k)'(z)| = exp(Σ Re f^i(z))`.
//! - [`poly`] — the bridge to unicritical polynomials `z^D + c`: D-adic
//!   angles as signed-alphabet addresses, Böttcher ray tracing, and
//!   renormalizability indicators.
//! - [`json`] — machine-readable artifact formats (17-significant-digit
//!   JSON) shared with the command-line frontend.
//!
//! All values are immutable after construction and all operations are pure,
//! so everything here can be shared freely across threads.

pub mod address;
pub mod geom;
pub mod json;
pub mod orbit;
pub mod param;
pub mod poly;
pub mod puzzle;
pub mod ray;
pub mod rng;

pub use address::{Address, AddressError, BoundWitness, Magnitude, MetricValue};
pub use orbit::{GrowthReport, OrbitSample};
pub use param::{ParamRayTrace, WakeVerdict};
pub use poly::{DAdicAngle, PolyRayTrace};
pub use puzzle::{NonRecurrenceCertificate, PuzzleLevel, PuzzlePiece, RayGraph};
pub use ray::{LandingResult, PeriodicOrbit, RayTrace};

/// Complex double shorthand used throughout the crate.
pub type Cplx = num_complex::Complex64;
