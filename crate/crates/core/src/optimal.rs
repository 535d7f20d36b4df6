//! Time-optimal dynamics along the Liouville-space geodesic between a state
//! and an orthogonal partner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{propagate_expm, EvolutionTrace};
use crate::liouville::{liouville_angle, DensityMatrix, Superoperator};
use crate::linalg::{self, kron, CMat, CVec};
use crate::qsl::{self, complete_basis};

const ORTHO_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GeodesicSpec {
    rho0: DensityMatrix,
    rho0_perp: DensityMatrix,
    gamma: f64,
    unitary: CMat,
}

fn overlap(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix() * b.matrix()).trace().re
}

impl GeodesicSpec {
    pub fn new(rho0: DensityMatrix, rho0_perp: DensityMatrix, gamma: f64, unitary: CMat) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        let d = rho0.dim();
        if rho0_perp.dim() != d || unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::dim("geodesic endpoints and unitary must share a dimension"));
        }
        let ov = overlap(&rho0, &rho0_perp);
        if ov.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("tr(ρ0 ρ0⊥) = {ov:e} is not zero")));
        }
        let unit = linalg::max_abs(&(unitary.adjoint() * &unitary - linalg::identity(d)));
        if unit > 1e-10 {
            return Err(Error::InvalidArgument(format!("U is not unitary (defect {unit:e})")));
        }
        let mapped = &unitary * rho0.matrix() * unitary.adjoint();
        let miss = linalg::max_abs(&(mapped - rho0_perp.matrix()));
        if miss > 1e-10 {
            return Err(Error::InvalidArgument(format!("U ρ0 U† misses ρ0⊥ by {miss:e}")));
        }
        Ok(GeodesicSpec {
            rho0,
            rho0_perp,
            gamma,
            unitary,
        })
    }

    /// Builds the spec with the unitary from [`connecting_unitary`].
    pub fn connecting(rho0: DensityMatrix, rho0_perp: DensityMatrix, gamma: f64) -> Result<Self> {
        let u = connecting_unitary(&rho0, &rho0_perp)?;
        Self::new(rho0, rho0_perp, gamma, u)
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn rho0_perp(&self) -> &DensityMatrix {
        &self.rho0_perp
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn unitary(&self) -> &CMat {
        &self.unitary
    }
}

/// `P ρ0 + (1 − P) ρ0⊥`.
pub fn geodesic_state(gs: &GeodesicSpec, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("P = {p} outside [0, 1]")));
    }
    let m = gs.rho0.matrix().scale(p) + gs.rho0_perp.matrix().scale(1.0 - p);
    DensityMatrix::new(m)
}

/// `𝓛 = γ (U* ⊗ U − I ⊗ I)`.
pub fn optimal_liouvillian(gs: &GeodesicSpec) -> Superoperator {
    swap_generator(&gs.unitary, gs.gamma)
}

fn swap_generator(u: &CMat, gamma: f64) -> Superoperator {
    let d = u.nrows();
    let m = (kron(&u.conjugate(), u) - linalg::identity(d * d)).scale(gamma);
    Superoperator::new(m).expect("square by construction")
}

/// Relative purity reached by the swap generator at time `t`.
///
/// With `U ρ0⊥ U† = ρ0` as well, `Ṗ = γ(1 − 2P)` and so `P_t = (1 + e^{−2γt})/2`.
pub fn optimal_relative_purity(gamma: f64, t: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * gamma * t).exp())
}

/// Hermitian involution exchanging the eigenvectors of `ρ0` and `ρ0⊥` (paired by
/// descending eigenvalue) and acting as the identity elsewhere.
pub fn connecting_unitary(rho0: &DensityMatrix, rho0_perp: &DensityMatrix) -> Result<CMat> {
    let d = rho0.dim();
    if rho0_perp.dim() != d {
        return Err(Error::dim("endpoints of different dimension"));
    }
    let ov = overlap(rho0, rho0_perp);
    if ov.abs() > ORTHO_TOL {
        return Err(Error::NoConnectingUnitary(format!("tr(ρ0 ρ0⊥) = {ov} is not zero")));
    }
    let (va, ea) = linalg::herm_eig(rho0.matrix());
    let (vb, eb) = linalg::herm_eig(rho0_perp.matrix());
    for (k, (x, y)) in va.iter().zip(vb.iter()).enumerate() {
        if (x - y).abs() > ORTHO_TOL {
            return Err(Error::NoConnectingUnitary(format!(
                "spectra differ at sorted index {k}: {x} vs {y}"
            )));
        }
    }
    // Descending order; the support is where eigenvalues are nonzero.
    let rank = va.iter().filter(|&&x| x > ORTHO_TOL).count();
    let mut cols: Vec<CVec> = Vec::with_capacity(2 * rank);
    for k in 0..rank {
        cols.push(ea.column(d - 1 - k).into_owned());
    }
    for k in 0..rank {
        cols.push(eb.column(d - 1 - k).into_owned());
    }
    // Orthonormalize [V, W] and complete it; U swaps the two blocks.
    let mut q: Vec<CVec> = Vec::with_capacity(d);
    let units = (0..d).map(|k| {
        let mut e = CVec::zeros(d);
        e[k] = linalg::c(1.0, 0.0);
        e
    });
    for cand in cols.into_iter().chain(units) {
        if q.len() == d {
            break;
        }
        let mut r = cand;
        for _ in 0..2 {
            for b in &q {
                let p = b.dotc(&r);
                r -= b * p;
            }
        }
        let n = r.norm();
        if q.len() < 2 * rank && n < 0.5 {
            return Err(Error::NoConnectingUnitary("supports are not orthogonal".into()));
        }
        if n > 1e-8 {
            q.push(r.unscale(n));
        }
    }
    let qm = CMat::from_columns(&q);
    let mut perm = linalg::zeros(d);
    for k in 0..d {
        let target = if k < rank {
            k + rank
        } else if k < 2 * rank {
            k - rank
        } else {
            k
        };
        perm[(target, k)] = linalg::c(1.0, 0.0);
    }
    let u = &qm * perm * qm.adjoint();
    let miss = linalg::max_abs(&(&u * rho0.matrix() * u.adjoint() - rho0_perp.matrix()));
    if miss > ORTHO_TOL {
        return Err(Error::NoConnectingUnitary(format!("U ρ0 U† misses ρ0⊥ by {miss:e}")));
    }
    Ok(u)
}

/// Swap generator for orthogonal pure states.
pub fn pure_optimal_liouvillian(psi: &CVec, psi_perp: &CVec, gamma: f64) -> Result<Superoperator> {
    if psi.len() != psi_perp.len() {
        return Err(Error::dim("state vectors of different length"));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be nonnegative, got {gamma}")));
    }
    let a = psi.unscale(psi.norm());
    let b = psi_perp.unscale(psi_perp.norm());
    let ov = a.dotc(&b).norm();
    if ov > 1e-10 {
        return Err(Error::InvalidArgument(format!("⟨ψ|ψ⊥⟩ = {ov:e} is not zero")));
    }
    if gamma == 0.0 {
        return Ok(Superoperator::zero(psi.len()));
    }
    let s = &a * b.adjoint() + &b * a.adjoint();
    Ok(swap_generator(&s, gamma))
}

/// `tr(ρ0 ρ_t) / tr(ρ0²)`.
pub fn relative_purity(rho0: &DensityMatrix, rho_t: &DensityMatrix) -> f64 {
    overlap(rho0, rho_t) / rho0.purity()
}

/// Whether `ρ_t − P_t ρ0` is positive semidefinite at each grid point.
pub fn physicality_check(rho0: &DensityMatrix, trace: &EvolutionTrace) -> Vec<bool> {
    trace
        .states()
        .iter()
        .map(|s| {
            let p = relative_purity(rho0, s);
            let rest = s.matrix() - rho0.matrix().scale(p);
            linalg::min_eigenvalue(&rest) >= -1e-10
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationCertificate {
    #[serde(rename = "T")]
    pub t: f64,
    pub theta: f64,
    pub wootters_length: f64,
    /// `(Θ/⟨⟨Δ𝓛⟩⟩)/T`.
    pub mt_ratio: f64,
    /// `(Θ/⟨⟨Δ𝓛_nc⟩⟩)/T`.
    pub nc_ratio: f64,
    /// `(l/⟨⟨Δ𝓛_nc⟩⟩)/T`.
    pub exact_ratio: f64,
    pub length_excess: f64,
    pub relative_purity_monotone: bool,
    pub physical: bool,
    pub max_geodesic_deviation: f64,
}

/// Propagates `ρ0` under the swap generator and measures how tightly the bounds are met.
pub fn certify(gs: &GeodesicSpec, times: &[f64]) -> Result<(EvolutionTrace, SaturationCertificate)> {
    let l = optimal_liouvillian(gs);
    let trace = propagate_expm(&l, &gs.rho0, times)?;
    let basis = complete_basis(&trace.normalized()[0])?;
    let report = qsl::exact_qsl(&trace, &l, &basis)?;
    let purities: Vec<f64> = trace.states().iter().map(|s| relative_purity(&gs.rho0, s)).collect();
    let monotone = purities.windows(2).all(|w| w[1] < w[0]);
    let physical = physicality_check(&gs.rho0, &trace).into_iter().all(|b| b);
    let mut deviation = 0.0f64;
    for (s, &t) in trace.states().iter().zip(trace.times()) {
        let g = geodesic_state(gs, optimal_relative_purity(gs.gamma, t))?;
        deviation = deviation.max(linalg::max_abs(&(s.matrix() - g.matrix())));
    }
    let t = trace.duration();
    let theta = liouville_angle(trace.initial(), trace.last())?;
    let cert = SaturationCertificate {
        t,
        theta,
        wootters_length: report.wootters_length,
        mt_ratio: report.bound_mt / t,
        nc_ratio: report.bound_nc / t,
        exact_ratio: report.exact_time / t,
        length_excess: report.wootters_length - theta,
        relative_purity_monotone: monotone,
        physical,
        max_geodesic_deviation: deviation,
    };
    Ok((trace, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::uniform_grid;
    use crate::lindblad::sigma_x;
    use crate::linalg::c;

    fn ket(d: usize, k: usize) -> CVec {
        let mut v = CVec::zeros(d);
        v[k] = c(1.0, 0.0);
        v
    }

    fn qubit_spec(gamma: f64) -> GeodesicSpec {
        let r0 = DensityMatrix::from_pure(&ket(2, 0)).unwrap();
        let r1 = DensityMatrix::from_pure(&ket(2, 1)).unwrap();
        GeodesicSpec::new(r0, r1, gamma, sigma_x()).unwrap()
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let gs = qubit_spec(0.01);
        assert_eq!(geodesic_state(&gs, 1.0).unwrap(), gs.rho0().clone());
        assert_eq!(geodesic_state(&gs, 0.0).unwrap(), gs.rho0_perp().clone());
        let mid = geodesic_state(&gs, 0.5).unwrap();
        assert_eq!(mid, DensityMatrix::maximally_mixed(2));
        let th = liouville_angle(gs.rho0(), &mid).unwrap();
        assert!((th - std::f64::consts::FRAC_1_SQRT_2.acos()).abs() < 1e-15);
        assert!((relative_purity(gs.rho0(), &mid) - 0.5).abs() < 1e-15);
        assert!(geodesic_state(&gs, 1.5).is_err());
    }

    #[test]
    fn swap_generator_trajectory() {
        // At e^{−γt} = ½ the state is diag(5/8, 3/8), not the maximally mixed point.
        let gs = qubit_spec(0.01);
        let l = optimal_liouvillian(&gs);
        let t = 2f64.ln() / 0.01;
        let tr = propagate_expm(&l, gs.rho0(), &[0.0, t]).unwrap();
        let m = tr.last().matrix();
        assert!((m[(0, 0)].re - 0.625).abs() < 1e-12);
        assert!((m[(1, 1)].re - 0.375).abs() < 1e-12);
        let expect = geodesic_state(&gs, optimal_relative_purity(0.01, t)).unwrap();
        assert!(linalg::max_abs(&(m - expect.matrix())) < 1e-12);
    }

    #[test]
    fn pure_swap_matches_sigma_x_generator() {
        let l = pure_optimal_liouvillian(&ket(2, 0), &ket(2, 1), 0.3).unwrap();
        let expect = (kron(&sigma_x(), &sigma_x()) - linalg::identity(4)).scale(0.3);
        assert!(linalg::max_abs(&(l.matrix() - expect)) < 1e-15);
        let zero = pure_optimal_liouvillian(&ket(2, 0), &ket(2, 1), 0.0).unwrap();
        assert_eq!(linalg::max_abs(zero.matrix()), 0.0);
        assert!(pure_optimal_liouvillian(&ket(2, 0), &(ket(2, 0) + ket(2, 1)), 0.3).is_err());
    }

    #[test]
    fn plus_relaxes_toward_minus_overlap_increasing() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let minus = CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]);
        let l = pure_optimal_liouvillian(&plus, &minus, 0.1).unwrap();
        let target = DensityMatrix::from_pure(&minus).unwrap();
        let tr = propagate_expm(&l, &DensityMatrix::from_pure(&plus).unwrap(), &uniform_grid(20.0, 101).unwrap()).unwrap();
        let ov: Vec<f64> = tr.states().iter().map(|r| overlap(r, &target)).collect();
        assert!(ov.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn connecting_unitary_cases() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = CVec::from_vec(vec![c(s, 0.0), c(0.0, s)]);
        let perp = CVec::from_vec(vec![c(s, 0.0), c(0.0, -s)]);
        let r0 = DensityMatrix::from_pure(&psi).unwrap();
        let r1 = DensityMatrix::from_pure(&perp).unwrap();
        let u = connecting_unitary(&r0, &r1).unwrap();
        let swap = &psi * perp.adjoint() + &perp * psi.adjoint();
        assert!(linalg::max_abs(&(&u - swap)) < 1e-12);
        let a = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![c(0.7, 0.0), c(0.3, 0.0)]))).unwrap();
        let b = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![c(0.3, 0.0), c(0.7, 0.0)]))).unwrap();
        assert!(matches!(connecting_unitary(&a, &b), Err(Error::NoConnectingUnitary(_))));
        assert!(connecting_unitary(&r0, &r0).is_err());
        let mixed = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            c(0.6, 0.0),
            c(0.4, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ])))
        .unwrap();
        let mixed_perp = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.4, 0.0),
            c(0.6, 0.0),
        ])))
        .unwrap();
        let u = connecting_unitary(&mixed, &mixed_perp).unwrap();
        // Involutive on the pair, so the trajectory stays on the geodesic.
        assert!(linalg::max_abs(&(&u * mixed_perp.matrix() * u.adjoint() - mixed.matrix())) < 1e-12);
        let gs = GeodesicSpec::new(mixed, mixed_perp, 0.05, u).unwrap();
        let (_, cert) = certify(&gs, &uniform_grid(20.0, 401).unwrap()).unwrap();
        assert!(cert.max_geodesic_deviation < 1e-9);
    }

    #[test]
    fn physicality_flags() {
        let gs = qubit_spec(0.05);
        let (tr, cert) = certify(&gs, &uniform_grid(10.0, 201).unwrap()).unwrap();
        assert!(cert.physical && cert.relative_purity_monotone);
        assert!(physicality_check(gs.rho0(), &tr).iter().all(|&b| b));
        // Unitary rotation of a pure state leaves the geodesic.
        let spec = crate::lindblad::LindbladSpec::new(sigma_x(), vec![]).unwrap();
        let l = crate::lindblad::liouvillian(&spec, 0.0).unwrap();
        let tr = propagate_expm(&l, gs.rho0(), &uniform_grid(1.0, 11).unwrap()).unwrap();
        let flags = physicality_check(gs.rho0(), &tr);
        assert!(flags[0]);
        assert!(flags[1..].iter().any(|&b| !b));
    }

    #[test]
    fn saturation_for_qubit_swap() {
        let gs = qubit_spec(0.01);
        let t = 2f64.ln() / 0.01;
        let (_, cert) = certify(&gs, &uniform_grid(t, 4001).unwrap()).unwrap();
        assert!(cert.mt_ratio >= 0.999 && cert.mt_ratio <= 1.001, "{cert:?}");
        assert!(cert.length_excess.abs() < 1e-6, "{cert:?}");
        assert!(cert.max_geodesic_deviation < 1e-9);
    }
}
