//! Relaxation of a thermally damped qubit from a family of pure initial
//! states: speed efficiency, distance to equilibrium and curve crossings.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{propagate_expm, uniform_grid};
use crate::lindblad::{self, amplitude_damping};
use crate::liouville::{liouville_angle, DensityMatrix};
use crate::linalg::{c, CVec};
use crate::qsl;
use crate::spectral;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub t: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MpembaReport {
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub n_bath: f64,
    #[serde(skip)]
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    /// `Θ(ρ_t, ρ_ss)`, one curve per α.
    #[serde(skip)]
    pub theta_ss: Vec<Vec<f64>>,
    pub t_qsl: Vec<f64>,
    pub delta: Vec<f64>,
    pub crossing_times: Vec<Crossing>,
}

pub fn initial_state(alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let psi = CVec::from_vec(vec![c(alpha, 0.0), c((1.0 - alpha * alpha).sqrt(), 0.0)]);
    DensityMatrix::from_pure(&psi)
}

struct Curve {
    eta: f64,
    t_qsl: f64,
    theta_ss: Vec<f64>,
}

/// Sign changes of `a − b` on the grid, located by linear interpolation.
pub fn crossings(times: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut out = Vec::new();
    for k in 0..d.len().saturating_sub(1) {
        let (d0, d1) = (d[k], d[k + 1]);
        if d0 != 0.0 && (d0 * d1 < 0.0 || d1 == 0.0) {
            out.push(times[k] + (times[k + 1] - times[k]) * d0 / (d0 - d1));
        }
    }
    out
}

pub fn mpemba_report(alphas: &[f64], gamma: f64, n: f64, t_final: f64, points: usize) -> Result<MpembaReport> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("no alpha values".into()));
    }
    let spec = amplitude_damping(gamma, n)?;
    let l = lindblad::liouvillian(&spec, 0.0)?;
    let ss = spectral::steady_state(&spectral::spectral_decompose(&l)?)?;
    let times = uniform_grid(t_final, points)?;
    let curves = alphas
        .par_iter()
        .map(|&alpha| {
            let rho0 = initial_state(alpha)?;
            let trace = propagate_expm(&l, &rho0, &times)?;
            let theta_ss = trace
                .states()
                .iter()
                .map(|s| liouville_angle(s, &ss))
                .collect::<Result<Vec<_>>>()?;
            Ok(Curve {
                eta: qsl::speed_efficiency(&trace, &l)?,
                t_qsl: qsl::mt_bound(&trace, &l)?,
                theta_ss,
            })
        })
        .collect::<Result<Vec<Curve>>>()?;
    let mut crossing_times = Vec::new();
    for i in 0..alphas.len() {
        for j in (i + 1)..alphas.len() {
            for t in crossings(&times, &curves[i].theta_ss, &curves[j].theta_ss) {
                crossing_times.push(Crossing {
                    alpha_a: alphas[i],
                    alpha_b: alphas[j],
                    t,
                });
            }
        }
    }
    let t = *times.last().expect("non-empty grid");
    Ok(MpembaReport {
        alphas: alphas.to_vec(),
        gamma,
        n_bath: n,
        eta: curves.iter().map(|c| c.eta).collect(),
        t_qsl: curves.iter().map(|c| c.t_qsl).collect(),
        delta: curves.iter().map(|c| t - c.t_qsl).collect(),
        theta_ss: curves.into_iter().map(|c| c.theta_ss).collect(),
        times,
        crossing_times,
    })
}

impl MpembaReport {
    /// Rows `alpha,t,eta,theta_ss,delta`, α-major.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "alpha,t,eta,theta_ss,delta")?;
        for (i, &a) in self.alphas.iter().enumerate() {
            for (k, &t) in self.times.iter().enumerate() {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    a, t, self.eta[i], self.theta_ss[i][k], self.delta[i]
                )?;
            }
        }
        Ok(())
    }
}
