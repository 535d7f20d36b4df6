//! Spectral form factor of the coherent Gibbs state and its speed-limit bound.

use crate::error::{Error, Result};
use crate::evolution::EvolutionTrace;
use crate::liouville::{liouville_angle, vectorize, DensityMatrix, Superoperator};
use crate::linalg::{self, c, CMat, CVec};
use crate::qsl::{self, BasisSet, Generator};

/// `|ψ_β⟩⟨ψ_β|` with `|ψ_β⟩ = Z^{−1/2} Σ_n e^{−βE_n/2} |n⟩` in the eigenbasis of `h`.
///
/// Eigenvectors are phase-fixed so their largest component is real positive.
pub fn coherent_gibbs_state(h: &CMat, beta: f64) -> Result<DensityMatrix> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if h.nrows() != h.ncols() || h.nrows() == 0 {
        return Err(Error::dim("Hamiltonian must be square"));
    }
    if linalg::hermiticity_defect(h) > 1e-12 * linalg::max_abs(h).max(1.0) {
        return Err(Error::InvalidSpec("Hamiltonian is not Hermitian".into()));
    }
    let (vals, vecs) = linalg::herm_eig(h);
    let e0 = vals[0];
    let d = h.nrows();
    let mut psi = CVec::zeros(d);
    for (k, &e) in vals.iter().enumerate() {
        let col = vecs.column(k);
        let big = col.iter().fold(c(0.0, 0.0), |m, &z| if z.norm() > m.norm() { z } else { m });
        let phase = big.conj() / big.norm();
        let w = if beta == 0.0 { 1.0 } else { (-0.5 * beta * (e - e0)).exp() };
        psi += col * (phase * w);
    }
    let nrm = psi.norm();
    DensityMatrix::from_pure(&psi.unscale(nrm))
}

/// `SFF(t) = tr(ρ_β ℰ_t(ρ_β))`.
pub fn sff(channel: &dyn Fn(f64) -> Result<Superoperator>, h: &CMat, beta: f64, t: f64) -> Result<f64> {
    let rho = coherent_gibbs_state(h, beta)?;
    let e = channel(t)?;
    let v = vectorize(rho.matrix())?;
    let out = e.apply(&v)?.into_vec();
    let d = rho.dim();
    let m = linalg::hermitize(&CMat::from_column_slice(d, d, out.as_slice()));
    let evolved = DensityMatrix::validated(m, &Default::default(), t)?;
    Ok((rho.matrix() * evolved.matrix()).trace().re)
}

/// `tr(ρ0 ρ_t)` at every trace point.
pub fn sff_series(trace: &EvolutionTrace) -> Vec<f64> {
    let r0 = trace.initial().matrix();
    trace.states().iter().map(|s| (r0 * s.matrix()).trace().re).collect()
}

#[derive(Clone, Debug)]
pub struct SffBoundScan {
    /// `arccos(SFF(t)/√tr ρ_t²)`.
    pub lhs: Vec<f64>,
    /// `∫_0^t Δ𝓛_nc`.
    pub rhs: Vec<f64>,
    /// `∫_0^t Δ𝓛`, the looser variant.
    pub rhs_loose: Vec<f64>,
}

impl SffBoundScan {
    /// Largest `lhs − rhs` over the grid.
    pub fn max_excess(&self) -> f64 {
        self.lhs.iter().zip(&self.rhs).map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_loose_excess(&self) -> f64 {
        self.lhs.iter().zip(&self.rhs_loose).map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn last(&self) -> (f64, f64) {
        (*self.lhs.last().unwrap_or(&0.0), *self.rhs.last().unwrap_or(&0.0))
    }
}

/// The SFF angle against the accumulated non-classical speed along a trace from a pure `ρ_β`.
pub fn sff_bound_check(trace: &EvolutionTrace, gen: &dyn Generator, basis: &BasisSet) -> Result<SffBoundScan> {
    let p0 = trace.initial().purity();
    if (p0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("SFF bound needs a pure initial state, purity {p0}")));
    }
    let h = qsl::require_uniform_odd(trace)?;
    let (full, nc) = qsl::trace_speed_split(trace, gen, basis)?;
    let lhs = trace
        .states()
        .iter()
        .map(|s| liouville_angle(trace.initial(), s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SffBoundScan {
        lhs,
        rhs: linalg::cumulative_simpson(&nc, h),
        rhs_loose: linalg::cumulative_simpson(&full, h),
    })
}
