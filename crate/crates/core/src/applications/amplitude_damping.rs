//! Closed forms for a qubit coupled to a thermal bath, initial state
//! `α|0⟩ + √(1−α²)|1⟩`, rates `γ(n+1)` down and `γn` up.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedForms {
    #[serde(skip)]
    pub rho_t: CMat,
    pub theta_0t: f64,
    pub theta_ss_t: f64,
    pub speed: f64,
    pub opnorm: f64,
}

const SINGULAR: f64 = 1e-12;

/// `‖𝓛‖_op = √max{2(1+2n(1+n))γ², (1+2n)²γ²/4}`.
pub fn opnorm(gamma: f64, n: f64) -> f64 {
    let a = 2.0 * (1.0 + 2.0 * n * (1.0 + n)) * gamma * gamma;
    let b = 0.25 * (1.0 + 2.0 * n).powi(2) * gamma * gamma;
    a.max(b).sqrt()
}

pub fn steady_state(n: f64) -> CMat {
    let m = 2.0 * n + 1.0;
    CMat::from_row_slice(2, 2, &[c((n + 1.0) / m, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(n / m, 0.0)])
}

pub fn rho_t(a: f64, gamma: f64, n: f64, t: f64) -> CMat {
    let m = 2.0 * n + 1.0;
    let e = (gamma * m * t).exp();
    let a2 = a * a;
    let r00 = (n + (-m * t * gamma).exp() * (a2 + n * (2.0 * a2 - 1.0) - 1.0) + 1.0) / m;
    let r01 = (-0.5 * m * t * gamma).exp() * a * (1.0 - a2).sqrt();
    let r11 = (-m * t * gamma).exp() * (-a2 + n * (-2.0 * a2 + e + 1.0) + 1.0) / m;
    CMat::from_row_slice(2, 2, &[c(r00, 0.0), c(r01, 0.0), c(r01, 0.0), c(r11, 0.0)])
}

/// `(value, denominator)` pairs so callers can detect the removable points.
fn theta_0(a: f64, gamma: f64, n: f64, t: f64) -> (f64, f64) {
    let m = 2.0 * n + 1.0;
    let e = (gamma * m * t).exp();
    let a2 = a * a;
    let a4 = a2 * a2;
    let f = 2.0 * (a2 + (2.0 * a2 - 1.0) * n - 1.0).powi(2)
        - 2.0 * (a4 * m * m - 2.0 * a2 * (n + 1.0) * m + n + 1.0) * e;
    let num = m * e * ((-2.0 * gamma * m * t).exp() * f / (m * m) + 0.5 * (1.0 / (m * m) + 1.0)).sqrt();
    let den = 2.0 * a4 * m - a2 * (4.0 * n + 3.0) - 2.0 * (a2 - 1.0) * a2 * m * (0.5 * gamma * m * t).exp()
        + (a2 + n) * e
        + n
        + 1.0;
    let sec = num / den;
    ((1.0 / sec).clamp(-1.0, 1.0).acos(), den)
}

fn theta_ss(a: f64, gamma: f64, n: f64, t: f64) -> (f64, f64) {
    let m = 2.0 * n + 1.0;
    let e = (gamma * m * t).exp();
    let a2 = a * a;
    let a4 = a2 * a2;
    let q = 2.0 * n * (n + 1.0) + 1.0;
    let g = -2.0 * (a4 * m * m - 2.0 * a2 * (n + 1.0) * m + n + 1.0) * e + q * e * e;
    let den = (q * (2.0 * (a2 + (2.0 * a2 - 1.0) * n - 1.0).powi(2) + g)).sqrt();
    let num = a2 + (2.0 * a2 - 1.0) * n + q * e - 1.0;
    ((num / den).clamp(-1.0, 1.0).acos(), den)
}

fn speed(a: f64, gamma: f64, n: f64, t: f64) -> (f64, f64) {
    let m = 2.0 * n + 1.0;
    let e = (gamma * m * t).exp();
    let a2 = a * a;
    let a4 = a2 * a2;
    let q = 2.0 * n * (n + 1.0) + 1.0;
    let h1 = 2.0 * (a2 + (2.0 * a2 - 1.0) * n - 1.0) * (a4 + (2.0 * a2 - 1.0) * n - 1.0) * e
        - 2.0 * a2 * (a2 - 1.0) * (a2 * (-m) + n + 1.0).powi(2);
    let h2 = 2.0 * (a2 + (2.0 * a2 - 1.0) * n - 1.0).powi(2)
        - 2.0 * (a4 * m * m - 2.0 * a2 * (n + 1.0) * m + n + 1.0) * e;
    let den = std::f64::consts::SQRT_2 * (h2 + q * e * e);
    let num = gamma * m * m * (0.5 * gamma * m * t).exp() * (h1 - a2 * (a2 - 1.0) * q * e * e).max(0.0).sqrt();
    (num / den, den)
}

/// Evaluates `f` at `t`, or by second-order extrapolation from nearby times
/// when its denominator vanishes there.
fn regular(f: impl Fn(f64) -> (f64, f64), t: f64, scale: f64) -> f64 {
    let (v, den) = f(t);
    if den.abs() >= SINGULAR && v.is_finite() {
        return v;
    }
    let tau = 1e-4 / scale;
    if t > 2.0 * tau {
        0.5 * (f(t - tau).0 + f(t + tau).0)
    } else {
        2.0 * f(t + tau).0 - f(t + 2.0 * tau).0
    }
}

pub fn amplitude_damping_closed_forms(alpha: f64, gamma: f64, n: f64, t: f64) -> Result<ClosedForms> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("bath occupation must be >= 0, got {n}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    let scale = gamma * (2.0 * n + 1.0);
    Ok(ClosedForms {
        rho_t: rho_t(alpha, gamma, n, t),
        theta_0t: regular(|s| theta_0(alpha, gamma, n, s), t, scale),
        theta_ss_t: regular(|s| theta_ss(alpha, gamma, n, s), t, scale),
        speed: regular(|s| speed(alpha, gamma, n, s), t, scale),
        opnorm: opnorm(gamma, n),
    })
}
