//! Speed-limit quantities: evolution speed, its splits, Mandelstam–Tamm type
//! bounds, the classical / non-classical decomposition and the exact relation
//! between path length and time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionTrace;
use crate::lindblad::{self, LindbladSpec, LiouvillianParts};
use crate::liouville::{
    liouville_angle, superop_covariance, superop_variance, DensityMatrix, NormalizedState,
    Superoperator,
};
use crate::linalg::{self, c, simpson, CMat, CVec, C64};

/// Basis terms with population below this are dropped from classical sums.
pub const POPULATION_FLOOR: f64 = 1e-14;

/// Time-sampled generator 𝓛_t.
pub trait Generator: Sync {
    fn at(&self, t: f64) -> Result<Superoperator>;

    fn is_static(&self) -> bool {
        false
    }
}

impl Generator for Superoperator {
    fn at(&self, _t: f64) -> Result<Superoperator> {
        Ok(self.clone())
    }

    fn is_static(&self) -> bool {
        true
    }
}

impl Generator for LindbladSpec {
    fn at(&self, t: f64) -> Result<Superoperator> {
        lindblad::liouvillian(self, t)
    }

    fn is_static(&self) -> bool {
        !self.is_time_dependent()
    }
}

/// Adapts a closure `t ↦ 𝓛_t` to [`Generator`].
pub struct FnGenerator<F>(pub F);

impl<F> Generator for FnGenerator<F>
where
    F: Fn(f64) -> Result<Superoperator> + Sync,
{
    fn at(&self, t: f64) -> Result<Superoperator> {
        (self.0)(t)
    }
}

/// `Δ𝓛 = √(tr(𝓛†𝓛𝓟) − tr(𝓛†𝓟) tr(𝓛𝓟))`.
pub fn speed(l: &Superoperator, s: &NormalizedState) -> Result<f64> {
    Ok(superop_variance(l, s)?.sqrt())
}

/// Matrix-form speed from `ρ̇ = −i[H,ρ] + 𝒟(ρ)`:
/// `Δ𝓛² = tr(ρ̇†ρ̇)/tr ρ² − (tr(ρρ̇)/tr ρ²)²`.
pub fn speed_matrix_form(spec: &LindbladSpec, rho: &DensityMatrix, t: f64) -> Result<f64> {
    let r = rho.matrix();
    let dr = lindblad::lindblad_rhs(spec, r, t)?;
    let p = rho.purity();
    let n1: f64 = dr.iter().map(|z| z.norm_sqr()).sum();
    let n2 = (r * &dr).trace().re;
    Ok((n1 / p - (n2 / p).powi(2)).max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedDecomposition {
    pub first_sq: f64,
    pub second_sq: f64,
    pub cross: f64,
}

impl SpeedDecomposition {
    pub fn total_sq(&self) -> f64 {
        self.first_sq + self.second_sq + self.cross
    }

    /// `|cross| − 2 Δ_1 Δ_2`, nonpositive up to round-off.
    pub fn cross_excess(&self) -> f64 {
        self.cross.abs() - 2.0 * (self.first_sq * self.second_sq).sqrt()
    }
}

/// `i (ρ̃| A B − B† A |ρ̃)` for Hermitian `A`.
fn cross_term(a: &CMat, b: &CMat, v: &CVec) -> f64 {
    let av = a * v;
    let bv = b * v;
    (C64::i() * (av.dotc(&bv) - bv.dotc(&av))).re
}

/// `Δ𝓛² = Δ𝓛_H² + Δ𝓛_D² + i tr([[𝓛_H, 𝓛_D]]𝓟)`.
pub fn speed_decomposition(parts: &LiouvillianParts, s: &NormalizedState) -> Result<SpeedDecomposition> {
    let h = superop_variance(&parts.hermitian_generator, s)?;
    let d = superop_variance(&parts.dissipative, s)?;
    let cross = cross_term(parts.hermitian_generator.matrix(), parts.dissipative.matrix(), s.as_vec());
    Ok(SpeedDecomposition {
        first_sq: h,
        second_sq: d,
        cross,
    })
}

/// Same split for the reversible / irreversible parts `𝓛 = −i𝓛₊ + 𝓛₋`.
pub fn speed_decomposition_reversible(parts: &LiouvillianParts, s: &NormalizedState) -> Result<SpeedDecomposition> {
    let p = superop_variance(&parts.reversible, s)?;
    let m = superop_variance(&parts.irreversible, s)?;
    let lp = parts.reversible.matrix();
    let lm = parts.irreversible.matrix();
    let v = s.as_vec();
    let pv = lp * v;
    let mv = lm * v;
    let cross = (C64::i() * (pv.dotc(&mv) - mv.dotc(&pv))).re;
    Ok(SpeedDecomposition {
        first_sq: p,
        second_sq: m,
        cross,
    })
}

pub(crate) fn require_uniform_odd(trace: &EvolutionTrace) -> Result<f64> {
    let h = trace
        .uniform_step()
        .ok_or_else(|| Error::Quadrature("time grid is not uniform".into()))?;
    if trace.len() < 3 || trace.len().is_multiple_of(2) {
        return Err(Error::Quadrature(format!(
            "Simpson averages need an odd number of at least 3 points, got {}",
            trace.len()
        )));
    }
    Ok(h)
}

/// `⟨⟨X⟩⟩_T = (1/T) ∫ X dt` by composite Simpson over the trace grid.
pub fn time_average(trace: &EvolutionTrace, values: &[f64]) -> Result<f64> {
    let h = require_uniform_odd(trace)?;
    if values.len() != trace.len() {
        return Err(Error::InvalidArgument("sample count does not match grid".into()));
    }
    Ok(simpson(values, h)? / trace.duration())
}

/// `∫ X dt` over the trace grid.
pub fn time_integral(trace: &EvolutionTrace, values: &[f64]) -> Result<f64> {
    let h = require_uniform_odd(trace)?;
    simpson(values, h)
}

/// Δ𝓛 at every grid point.
pub fn trace_speeds(trace: &EvolutionTrace, gen: &dyn Generator) -> Result<Vec<f64>> {
    let fixed = if gen.is_static() { Some(gen.at(0.0)?) } else { None };
    trace
        .times()
        .iter()
        .zip(trace.normalized())
        .map(|(&t, s)| match &fixed {
            Some(l) => speed(l, s),
            None => speed(&gen.at(t)?, s),
        })
        .collect()
}

pub fn average_speed(trace: &EvolutionTrace, gen: &dyn Generator) -> Result<f64> {
    time_average(trace, &trace_speeds(trace, gen)?)
}

fn ratio_bound(theta: f64, rate: f64, what: &str) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) {
        return Err(Error::Inconsistent(format!("{what} is zero but the angle is {theta:e}")));
    }
    Ok(theta / rate)
}

/// `Θ(ρ0, ρT) / ⟨⟨Δ𝓛⟩⟩_T`.
pub fn mt_bound(trace: &EvolutionTrace, gen: &dyn Generator) -> Result<f64> {
    let theta = liouville_angle(trace.initial(), trace.last())?;
    ratio_bound(theta, average_speed(trace, gen)?, "average speed")
}

/// `θ / ‖𝓛‖_op`.
pub fn opnorm_bound(l: &Superoperator, theta: f64) -> Result<f64> {
    ratio_bound(theta, l.op_norm(), "operator norm")
}

/// `θ / ‖𝓛‖_HS`.
pub fn hsnorm_bound(l: &Superoperator, theta: f64) -> Result<f64> {
    ratio_bound(theta, l.hs_norm(), "Hilbert-Schmidt norm")
}

/// Time averages of `‖𝓛_t‖_op` and `‖𝓛_t‖_HS`.
pub fn average_norms(trace: &EvolutionTrace, gen: &dyn Generator) -> Result<(f64, f64)> {
    if gen.is_static() {
        let l = gen.at(0.0)?;
        return Ok((l.op_norm(), l.hs_norm()));
    }
    let mut op = Vec::with_capacity(trace.len());
    let mut hs = Vec::with_capacity(trace.len());
    for &t in trace.times() {
        let l = gen.at(t)?;
        op.push(l.op_norm());
        hs.push(l.hs_norm());
    }
    Ok((time_average(trace, &op)?, time_average(trace, &hs)?))
}

/// Orthonormal basis of Liouville space whose first element is `|ρ̃_0))`.
#[derive(Clone, Debug)]
pub struct BasisSet {
    vectors: CMat,
}

impl BasisSet {
    /// Basis vectors as the columns of a unitary matrix.
    pub fn matrix(&self) -> &CMat {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.vectors.column(i).into_owned()
    }

    /// `max |G − I|` of the Gram matrix.
    pub fn gram_defect(&self) -> f64 {
        let n = self.len();
        linalg::max_abs(&(self.vectors.adjoint() * &self.vectors - linalg::identity(n)))
    }

    /// Amplitudes `c_i = (a_i|v))`.
    pub fn amplitudes(&self, v: &CVec) -> CVec {
        self.vectors.adjoint() * v
    }
}

fn orthonormalize(seed: &[CVec], n: usize) -> Result<CMat> {
    let mut kept: Vec<CVec> = Vec::with_capacity(n);
    let candidates = seed.iter().cloned().chain((0..n).map(|k| {
        let mut e = CVec::zeros(n);
        e[k] = c(1.0, 0.0);
        e
    }));
    for cand in candidates {
        if kept.len() == n {
            break;
        }
        let mut r = cand;
        // Two modified Gram–Schmidt sweeps keep the Gram defect at round-off.
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dotc(&r);
                r -= q * proj;
            }
        }
        let nrm = r.norm();
        if nrm >= 1e-8 {
            kept.push(r.unscale(nrm));
        }
    }
    if kept.len() != n {
        return Err(Error::NumericalConsistency {
            quantity: "basis size".into(),
            value: kept.len() as f64,
        });
    }
    Ok(CMat::from_columns(&kept))
}

/// Modified Gram–Schmidt over `|ρ̃_0))` followed by the canonical unit vectors.
pub fn complete_basis(s0: &NormalizedState) -> Result<BasisSet> {
    let n = s0.vector().dim_sq();
    Ok(BasisSet {
        vectors: orthonormalize(&[s0.as_vec().clone()], n)?,
    })
}

/// Re-runs Gram–Schmidt on the columns of an existing basis.
pub fn reorthonormalize(basis: &BasisSet) -> Result<BasisSet> {
    let cols: Vec<CVec> = (0..basis.len()).map(|i| basis.vector(i)).collect();
    Ok(BasisSet {
        vectors: orthonormalize(&cols, basis.len())?,
    })
}

/// Diagonal (in the basis) coefficients κ_i of the classical part, plus the amplitudes c_i.
///
/// `κ_i = (a_i|½(𝓑𝓟 − 𝓟𝓑†)|a_i)/(a_i|𝓟|a_i) = i Im((a_i|𝓑ρ̃) c̄_i)/|c_i|²`.
fn classical_coefficients(b: &CMat, basis: &BasisSet, s: &NormalizedState) -> (Vec<C64>, CVec) {
    let v = s.as_vec();
    let amps = basis.amplitudes(v);
    let w = basis.amplitudes(&(b * v));
    let kappa = amps
        .iter()
        .zip(w.iter())
        .map(|(ci, wi)| {
            let p = ci.norm_sqr();
            if p < POPULATION_FLOOR {
                c(0.0, 0.0)
            } else {
                let m = ci.norm();
                // Divide in two steps so tiny populations do not lose precision.
                c(0.0, (wi * (ci.conj() / m)).im / m)
            }
        })
        .collect();
    (kappa, amps)
}

fn check_basis(l: &Superoperator, basis: &BasisSet, s: &NormalizedState) -> Result<()> {
    let n = l.matrix().nrows();
    if basis.vectors.nrows() != n || basis.len() != n || s.vector().dim_sq() != n {
        return Err(Error::dim(format!(
            "generator side {n}, basis {}x{}, state length {}",
            basis.vectors.nrows(),
            basis.len(),
            s.vector().dim_sq()
        )));
    }
    Ok(())
}

/// `𝓛_cl = Σ |a_i))((a_i| (a_i|½(𝓛𝓟 − 𝓟𝓛†)|a_i)/(a_i|𝓟|a_i)`.
pub fn classical_part(l: &Superoperator, basis: &BasisSet, s: &NormalizedState) -> Result<Superoperator> {
    check_basis(l, basis, s)?;
    let (kappa, _) = classical_coefficients(l.matrix(), basis, s);
    let a = &basis.vectors;
    let diag = CMat::from_diagonal(&CVec::from_vec(kappa));
    Superoperator::new(a * diag * a.adjoint())
}

/// `Δ𝓛_cl²` evaluated directly from the diagonal coefficients.
fn classical_variance(kappa: &[C64], amps: &CVec) -> f64 {
    let mut second = 0.0;
    let mut mean = c(0.0, 0.0);
    for (k, ci) in kappa.iter().zip(amps.iter()) {
        let p = ci.norm_sqr();
        second += k.norm_sqr() * p;
        mean += k * p;
    }
    (second - mean.norm_sqr()).max(0.0)
}

/// `(Δ𝓛², Δ𝓛_cl²)` at one state.
pub fn speed_split(l: &Superoperator, basis: &BasisSet, s: &NormalizedState) -> Result<(f64, f64)> {
    check_basis(l, basis, s)?;
    let total = superop_variance(l, s)?;
    let (kappa, amps) = classical_coefficients(l.matrix(), basis, s);
    Ok((total, classical_variance(&kappa, &amps)))
}

/// `Δ𝓛_nc = √max(Δ𝓛² − Δ𝓛_cl², 0)`.
pub fn nonclassical_speed(l: &Superoperator, basis: &BasisSet, s: &NormalizedState) -> Result<f64> {
    let (total, cl) = speed_split(l, basis, s)?;
    Ok((total - cl).max(0.0).sqrt())
}

/// `δ_𝓑𝓐 Δ𝓑_nc` for 𝓐 diagonal in `basis`; equals ½ whenever every population is nonzero.
pub fn exact_uncertainty_product(b: &Superoperator, basis: &BasisSet, s: &NormalizedState) -> Result<f64> {
    check_basis(b, basis, s)?;
    let v = s.as_vec();
    let bm = b.matrix();
    let bv = bm * v;
    let mean_re = v.dotc(&bv).re;
    let amps = basis.amplitudes(v);
    let w = basis.amplitudes(&bv);
    // (a_i|G|a_i) with G = 𝓑𝓟 + 𝓟𝓑† − 𝓟 tr[𝓟(𝓑+𝓑†)].
    let mut inv_delta_sq = 0.0;
    for (ci, wi) in amps.iter().zip(w.iter()) {
        let p = ci.norm_sqr();
        if p < POPULATION_FLOOR {
            continue;
        }
        let g = 2.0 * (wi * ci.conj()).re - 2.0 * mean_re * p;
        inv_delta_sq += g * g / p;
    }
    let (kappa, amps) = classical_coefficients(bm, basis, s);
    let nc_sq = (superop_covariance(b, b, s)?.re - classical_variance(&kappa, &amps)).max(0.0);
    if inv_delta_sq == 0.0 {
        return Ok(0.0);
    }
    Ok((nc_sq / inv_delta_sq).sqrt())
}

/// Δ𝓛 and Δ𝓛_nc along a trace, with the basis anchored at the initial state.
pub fn trace_speed_split(trace: &EvolutionTrace, gen: &dyn Generator, basis: &BasisSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let fixed = if gen.is_static() { Some(gen.at(0.0)?) } else { None };
    let mut full = Vec::with_capacity(trace.len());
    let mut nc = Vec::with_capacity(trace.len());
    for (&t, s) in trace.times().iter().zip(trace.normalized()) {
        let owned;
        let l = match &fixed {
            Some(l) => l,
            None => {
                owned = gen.at(t)?;
                &owned
            }
        };
        let (total, cl) = speed_split(l, basis, s)?;
        full.push(total.sqrt());
        nc.push((total - cl).max(0.0).sqrt());
    }
    Ok((full, nc))
}

/// Length of the path `t ↦ Σ |c_i(t)| |a_i))` traced by the amplitude moduli.
///
/// The complex amplitudes are differentiated (central differences inside,
/// second-order one-sided at the ends) and `d|c|/dt = Re(c̄ ċ)/|c|`, which
/// stays smooth where some `c_i` passes through zero.
pub fn wootters_length(trace: &EvolutionTrace, basis: &BasisSet) -> Result<f64> {
    let h = require_uniform_odd(trace)?;
    let n = trace.len();
    let amps: Vec<CVec> = trace.normalized().iter().map(|s| basis.amplitudes(s.as_vec())).collect();
    let m = basis.len();
    let mut coarse = 0usize;
    for k in 1..n {
        for i in 0..m {
            if (amps[k][i].norm() - amps[k - 1][i].norm()).abs() > 0.1 {
                coarse += 1;
            }
        }
    }
    if coarse > 0 {
        log::warn!("wootters_length: {coarse} amplitude jumps exceed 0.1; grid may be too coarse");
    }
    let deriv = |k: usize, i: usize| -> C64 {
        if k == 0 {
            (amps[2][i] * (-1.0) + amps[1][i] * 4.0 - amps[0][i] * 3.0) / (2.0 * h)
        } else if k == n - 1 {
            (amps[n - 1][i] * 3.0 - amps[n - 2][i] * 4.0 + amps[n - 3][i]) / (2.0 * h)
        } else {
            (amps[k + 1][i] - amps[k - 1][i]) / (2.0 * h)
        }
    };
    let integrand: Vec<f64> = (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..m {
                let ci = amps[k][i];
                let dc = deriv(k, i);
                let rate = if ci.norm_sqr() < POPULATION_FLOOR {
                    dc.norm()
                } else {
                    (ci.conj() * dc).re / ci.norm()
                };
                acc += rate * rate;
            }
            acc.sqrt()
        })
        .collect();
    simpson(&integrand, h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QslReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub theta: f64,
    pub wootters_length: f64,
    pub avg_speed: f64,
    pub avg_nc_speed: f64,
    pub bound_mt: f64,
    pub bound_nc: f64,
    pub exact_time: f64,
    pub bound_opnorm: f64,
    pub bound_hsnorm: f64,
    pub efficiency: f64,
}

impl QslReport {
    /// Checks `bound_hs ≤ bound_op ≤ bound_mt ≤ bound_nc ≤ T` with additive `slack`.
    pub fn chain_violations(&self, slack: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        let steps = [
            (self.bound_hsnorm, self.bound_opnorm, "hs <= op"),
            (self.bound_opnorm, self.bound_mt, "op <= mt"),
            (self.bound_mt, self.bound_nc, "mt <= nc"),
            (self.bound_nc, self.t, "nc <= T"),
        ];
        for (lo, hi, name) in steps {
            if lo > hi + slack {
                out.push(name);
            }
        }
        out
    }

    pub fn exactness_error(&self) -> f64 {
        (self.exact_time - self.t).abs() / self.t
    }
}

/// All Theorem-level quantities for one trajectory.
pub fn exact_qsl(trace: &EvolutionTrace, gen: &dyn Generator, basis: &BasisSet) -> Result<QslReport> {
    let (full, nc) = trace_speed_split(trace, gen, basis)?;
    let avg = time_average(trace, &full)?;
    let avg_nc = time_average(trace, &nc)?;
    let theta = liouville_angle(trace.initial(), trace.last())?;
    let length = wootters_length(trace, basis)?;
    let (op, hs) = average_norms(trace, gen)?;
    let t = trace.duration();
    let exact_time = if length == 0.0 { 0.0 } else { ratio_bound(length, avg_nc, "average nc speed")? };
    Ok(QslReport {
        t,
        theta,
        wootters_length: length,
        avg_speed: avg,
        avg_nc_speed: avg_nc,
        bound_mt: ratio_bound(theta, avg, "average speed")?,
        bound_nc: ratio_bound(theta, avg_nc, "average nc speed")?,
        exact_time,
        bound_opnorm: ratio_bound(theta, op, "operator norm")?,
        bound_hsnorm: ratio_bound(theta, hs, "Hilbert-Schmidt norm")?,
        efficiency: if op > 0.0 { avg / op } else { 0.0 },
    })
}

/// `η = ⟨⟨Δ𝓛⟩⟩_T / ‖𝓛‖_op`.
pub fn speed_efficiency(trace: &EvolutionTrace, l: &Superoperator) -> Result<f64> {
    let op = l.op_norm();
    if !(op > 0.0) {
        return Err(Error::Inconsistent("speed efficiency of a zero generator".into()));
    }
    Ok(average_speed(trace, l)? / op)
}

/// Both sides of `(Δ𝓐)²(Δ𝓑)² ≥ |tr(𝓐†𝓑𝓟) − tr(𝓐†𝓟)tr(𝓑𝓟)|²`.
pub fn uncertainty_product(a: &Superoperator, b: &Superoperator, s: &NormalizedState) -> Result<(f64, f64)> {
    let va = superop_variance(a, s)?;
    let vb = superop_variance(b, s)?;
    let cov = superop_covariance(a, b, s)?;
    Ok((va * vb, cov.norm_sqr()))
}
