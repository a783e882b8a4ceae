//! Closed-form dynamics of a single eigenmode under injection with a
//! constant per-step phase mismatch `Delta`.
//!
//! With `b_t = e^{i omega} (b_{t-1} + beta e^{i phi t})` the amplitude after
//! `t` steps is a geometric sum in `P = e^{i Delta}`, so
//! `|b_t|^2 = |beta|^2 sin^2(t Delta / 2) / sin^2(Delta / 2)`, and
//! `t^2 |beta|^2` when phase-matched.

use crate::lattice::C64;
use crate::spectrum::wrap_phase;

/// Below this `|Delta|` a mode is treated as exactly phase-matched.
pub const MATCHED_THRESHOLD: f64 = 1e-9;

pub fn analytic_mode_intensity(beta: C64, delta: f64, t: u64) -> f64 {
    let delta = wrap_phase(delta);
    let t = t as f64;
    if delta.abs() < MATCHED_THRESHOLD {
        return t * t * beta.norm_sqr();
    }
    let num = (t * delta / 2.0).sin();
    let den = (delta / 2.0).sin();
    beta.norm_sqr() * (num * num) / (den * den)
}

/// Net displacement after composing `D(alpha P^k)` for `k = 0..t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub amplitude: C64,
    /// Global phase picked up while merging the displacements. Unobservable
    /// in any intensity.
    pub global_phase: f64,
}

pub fn analytic_displacement_amplitude(alpha: C64, delta: f64, t: u64) -> Displacement {
    let delta = wrap_phase(delta);
    let amplitude = if delta.abs() < MATCHED_THRESHOLD {
        alpha * t as f64
    } else {
        // (1 - P^t) / (1 - P) = e^{i (t-1) Delta / 2} sin(t Delta / 2) / sin(Delta / 2),
        // which avoids cancellation in 1 - P for small Delta.
        let tf = t as f64;
        let ratio = (tf * delta / 2.0).sin() / (delta / 2.0).sin();
        alpha * C64::from_polar(ratio, (tf - 1.0) * delta / 2.0)
    };
    // |alpha|^2 sum_{n=1}^{t-1} sum_{k=1}^{n} sin(k Delta)
    let mut inner = 0.0;
    let mut outer = 0.0;
    for n in 1..t {
        inner += (n as f64 * delta).sin();
        outer += inner;
    }
    Displacement {
        amplitude,
        global_phase: alpha.norm_sqr() * outer,
    }
}
