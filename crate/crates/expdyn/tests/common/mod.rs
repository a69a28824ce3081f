//! Shared oracles for the integration suites.
//!
//! Wake parameters are derived, not hardcoded: the root of a satellite
//! component on the period-1 boundary is `iθ − e^{iθ}` (fixed point of
//! multiplier `e^{iθ}`), and a parameter inside the attached wake is found
//! by probing around the root for an attracting cycle of the right period.

use expdyn::ray::apply;
use expdyn::Cplx;
use std::sync::OnceLock;

const TAU: f64 = std::f64::consts::TAU;

/// Root of the wake with rotation number `p/q` on the period-1 component
/// boundary: the parameter whose fixed point has multiplier `e^{2πip/q}`.
pub fn satellite_root(p: u32, q: u32) -> Cplx {
    let theta = TAU * p as f64 / q as f64;
    let z = Cplx::new(0.0, theta);
    z - z.exp()
}

/// Probe around a root for a parameter with an attracting cycle of period
/// `q` (singular orbit converges to it, multiplier inside the unit circle).
pub fn attracting_parameter_near(root: Cplx, q: usize) -> Option<Cplx> {
    for r in [0.15, 0.25, 0.4, 0.6] {
        for i in 0..24 {
            let phi = TAU * i as f64 / 24.0;
            let c = root + Cplx::from_polar(r, phi);
            let mut z = c;
            let mut diverged = false;
            for _ in 0..500 {
                z = apply(c, z);
                if !z.is_finite() || z.norm() > 1e50 {
                    diverged = true;
                    break;
                }
            }
            if diverged {
                continue;
            }
            let mut w = z;
            let mut sum = Cplx::new(0.0, 0.0);
            for _ in 0..q {
                sum += w;
                w = apply(c, w);
            }
            let genuine_cycle = (w - z).norm() < 1e-6 && (apply(c, z) - z).norm() > 1e-6;
            if genuine_cycle && sum.exp().norm() < 0.9 {
                return Some(c);
            }
        }
    }
    None
}

/// A parameter inside the 1/3-wake attached to the period-1 component.
pub fn period3_wake_parameter() -> Cplx {
    static CACHE: OnceLock<Cplx> = OnceLock::new();
    *CACHE.get_or_init(|| {
        attracting_parameter_near(satellite_root(1, 3), 3)
            .expect("attracting 3-cycle near the 1/3 root")
    })
}

/// A parameter inside the 1/2-wake attached to the period-1 component.
pub fn period2_wake_parameter() -> Cplx {
    static CACHE: OnceLock<Cplx> = OnceLock::new();
    *CACHE.get_or_init(|| {
        attracting_parameter_near(satellite_root(1, 2), 2)
            .expect("attracting 2-cycle near the 1/2 root")
    })
}

/// The Misiurewicz parameter with `f²(c) = f(c)` on the `1 | 0` parameter
/// ray: Newton on `h(c) = f²(c) − f(c)` from a nearby seed. The exact value
/// is `ln(2π) + 3πi/2` (solve `e^c = −2πi`), which the Newton run must
/// reproduce.
pub fn misiurewicz_parameter() -> Cplx {
    let mut c = Cplx::new(1.8, 4.6);
    for _ in 0..50 {
        // h(c) = e^{e^c + c} − e^c, h'(c) = e^{e^c+c}(e^c + 1) − e^c
        let ec = c.exp();
        let f1 = ec + c;
        let e2 = f1.exp();
        let h = e2 - ec;
        if h.norm() < 1e-13 {
            break;
        }
        let dh = e2 * (ec + Cplx::new(1.0, 0.0)) - ec;
        c -= h / dh;
    }
    let exact = Cplx::new(TAU.ln(), 3.0 * std::f64::consts::PI / 2.0);
    assert!(
        (c - exact).norm() < 1e-10,
        "Newton drifted from the closed-form Misiurewicz parameter"
    );
    c
}
