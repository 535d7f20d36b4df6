//! Krylov basis of the vectorized state under unitary dynamics and the
//! complexity bounds built on it.

use crate::error::{Error, Result};
use crate::evolution::EvolutionTrace;
use crate::lindblad;
use crate::liouville::{vectorize, DensityMatrix, Superoperator};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::qsl::{self, BasisSet};

/// Lanczos stops once `b_n` drops below this.
pub const EXHAUSTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct KrylovData {
    basis: CMat,
    lanczos_a: Vec<f64>,
    lanczos_b: Vec<f64>,
    times: Vec<f64>,
    amplitudes: Vec<CVec>,
    complexity: Vec<f64>,
    exhausted: bool,
    generator: Superoperator,
    initial_purity: f64,
}

impl KrylovData {
    /// Orthonormal `|K_n))` as columns.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn lanczos_a(&self) -> &[f64] {
        &self.lanczos_a
    }

    /// `b_1, b_2, …`; a trailing entry below [`EXHAUSTION_TOL`] marks the stop.
    pub fn lanczos_b(&self) -> &[f64] {
        &self.lanczos_b
    }

    /// True when the recursion closed before reaching the full Liouville dimension.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `φ_n(t)` per grid time.
    pub fn amplitudes(&self) -> &[CVec] {
        &self.amplitudes
    }

    pub fn complexity(&self) -> &[f64] {
        &self.complexity
    }

    /// `−i𝓛_H`.
    pub fn generator(&self) -> &Superoperator {
        &self.generator
    }

    /// `‖𝓢‖_op`, the largest Krylov index.
    pub fn s_norm(&self) -> f64 {
        (self.len().max(1) - 1) as f64
    }

    /// Largest `|Σ_n |φ_n|² − 1|` over the grid.
    pub fn normalization_defect(&self) -> f64 {
        self.amplitudes.iter().map(|a| (a.norm_squared() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn minus_i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, -1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, 1.0),
    }
}

fn lanczos(a: &CMat, k0: CVec) -> (CMat, Vec<f64>, Vec<f64>, bool) {
    let n = a.nrows();
    let mut basis: Vec<CVec> = vec![k0];
    let mut av = Vec::new();
    let mut bv = Vec::new();
    let mut exhausted = false;
    while basis.len() < n {
        let k = basis.len() - 1;
        let mut w = a * &basis[k];
        let ak = basis[k].dotc(&w).re;
        av.push(ak);
        w -= &basis[k] * c(ak, 0.0);
        if k > 0 {
            w -= &basis[k - 1] * c(bv[k - 1], 0.0);
        }
        for _ in 0..2 {
            for q in &basis {
                let p = q.dotc(&w);
                w -= q * p;
            }
        }
        let b = w.norm();
        bv.push(b);
        if b < EXHAUSTION_TOL {
            exhausted = true;
            break;
        }
        basis.push(w.unscale(b));
    }
    if av.len() < basis.len() {
        let k = basis.len() - 1;
        av.push(basis[k].dotc(&(a * &basis[k])).re);
    }
    (CMat::from_columns(&basis), av, bv, exhausted)
}

/// Lanczos on `𝓛_H = I⊗H − Hᵀ⊗I` from `|K_0)) = vec(ρ0)/√tr ρ0²` and the
/// amplitudes `φ_n(t) = (−i)^n (K_n|ρ̃_t))` of the exactly propagated state.
pub fn krylov_build(h: &CMat, rho0: &DensityMatrix, times: &[f64]) -> Result<KrylovData> {
    let d = rho0.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::dim(format!("Hamiltonian {}x{} vs state d={d}", h.nrows(), h.ncols())));
    }
    if linalg::hermiticity_defect(h) > 1e-12 * linalg::max_abs(h).max(1.0) {
        return Err(Error::InvalidSpec("Hamiltonian is not Hermitian".into()));
    }
    let parts = lindblad::build_parts(h, &[]);
    let lh = parts.hermitian_generator.matrix().clone();
    let purity = rho0.purity();
    let k0 = vectorize(rho0.matrix())?.into_vec().unscale(purity.sqrt());
    let (basis, lanczos_a, lanczos_b, exhausted) = lanczos(&lh, k0);
    let (energies, vecs) = linalg::herm_eig(h);
    let mut amplitudes = Vec::with_capacity(times.len());
    let mut complexity = Vec::with_capacity(times.len());
    for &t in times {
        let phases = CVec::from_iterator(d, energies.iter().map(|&e| c(0.0, -e * t).exp()));
        let u = &vecs * CMat::from_diagonal(&phases) * vecs.adjoint();
        let rt = &u * rho0.matrix() * u.adjoint();
        let v = CVec::from_column_slice(rt.as_slice()).unscale(purity.sqrt());
        let phi = if t == 0.0 {
            // ρ̃_0 is |K_0)) by construction.
            CVec::from_fn(basis.ncols(), |n, _| if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) })
        } else {
            let raw = basis.adjoint() * v;
            CVec::from_iterator(raw.len(), raw.iter().enumerate().map(|(n, z)| minus_i_pow(n) * z))
        };
        complexity.push(phi.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum());
        amplitudes.push(phi);
    }
    Ok(KrylovData {
        basis,
        lanczos_a,
        lanczos_b,
        times: times.to_vec(),
        amplitudes,
        complexity,
        exhausted,
        generator: parts.full,
        initial_purity: purity,
    })
}

/// `C_K(t) = Σ_n n |φ_n(t)|²` at a grid time.
pub fn krylov_complexity(kd: &KrylovData, t: f64) -> Result<f64> {
    let tol = 1e-12 * kd.times.last().copied().unwrap_or(1.0).abs().max(1.0);
    kd.times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .map(|k| kd.complexity[k])
        .ok_or_else(|| Error::InvalidArgument(format!("t = {t} is not on the Krylov grid")))
}

#[derive(Clone, Debug)]
pub struct KrylovBoundScan {
    /// `arcsin(C_K/(2‖𝓢‖))`.
    pub lhs: Vec<f64>,
    /// `∫_0^t Δ𝓛_nc`.
    pub rhs: Vec<f64>,
    /// `C_K²/(4‖𝓢‖²)`.
    pub precursor_lhs: Vec<f64>,
    /// `1 − ((ρ0|ρ_t))/tr ρ0²)²`.
    pub precursor_rhs: Vec<f64>,
}

impl KrylovBoundScan {
    pub fn max_excess(&self) -> f64 {
        excess(&self.lhs, &self.rhs)
    }

    pub fn max_precursor_excess(&self) -> f64 {
        excess(&self.precursor_lhs, &self.precursor_rhs)
    }

    pub fn last(&self) -> (f64, f64) {
        (*self.lhs.last().unwrap_or(&0.0), *self.rhs.last().unwrap_or(&0.0))
    }
}

fn excess(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max)
}

fn same_grid(kd: &KrylovData, trace: &EvolutionTrace) -> Result<()> {
    let ok = kd.times.len() == trace.len()
        && kd.times.iter().zip(trace.times()).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("Krylov data and trace use different time grids".into()))
    }
}

pub fn krylov_bound_check(kd: &KrylovData, trace: &EvolutionTrace, basis: &BasisSet) -> Result<KrylovBoundScan> {
    same_grid(kd, trace)?;
    let h = qsl::require_uniform_odd(trace)?;
    let (_, nc) = qsl::trace_speed_split(trace, &kd.generator, basis)?;
    let s = kd.s_norm();
    let ratio: Vec<f64> = kd.complexity.iter().map(|&ck| if s > 0.0 { ck / (2.0 * s) } else { 0.0 }).collect();
    let p0 = trace.initial().purity();
    let overlap = crate::applications::sff::sff_series(trace);
    Ok(KrylovBoundScan {
        lhs: ratio.iter().map(|r| r.clamp(0.0, 1.0).asin()).collect(),
        rhs: linalg::cumulative_simpson(&nc, h),
        precursor_lhs: ratio.iter().map(|r| r * r).collect(),
        precursor_rhs: overlap.iter().map(|o| 1.0 - (o / p0).powi(2)).collect(),
    })
}

/// `max_t C_K²/(4‖𝓢‖²) + SFF²`, for `ρ0 = ρ_β` under unitary dynamics.
pub fn tradeoff_check(kd: &KrylovData, sff_values: &[f64]) -> Result<f64> {
    if (kd.initial_purity - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "trade-off relation needs a pure initial state, purity {}",
            kd.initial_purity
        )));
    }
    if sff_values.len() != kd.complexity.len() {
        return Err(Error::InvalidArgument(format!(
            "{} SFF values for {} Krylov times",
            sff_values.len(),
            kd.complexity.len()
        )));
    }
    let s = kd.s_norm();
    Ok(kd
        .complexity
        .iter()
        .zip(sff_values)
        .map(|(&ck, &f)| {
            let r = if s > 0.0 { ck / (2.0 * s) } else { 0.0 };
            r * r + f * f
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::sff::{coherent_gibbs_state, sff_series};
    use crate::evolution::{propagate_expm, uniform_grid};
    use crate::lindblad::{sigma_x, sigma_z};
    use crate::liouville::normalize_state;
    use crate::random;

    fn plus() -> DensityMatrix {
        DensityMatrix::from_pure(&CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]).unscale(2f64.sqrt())).unwrap()
    }

    #[test]
    fn commuting_state_has_trivial_krylov_space() {
        let times = uniform_grid(3.0, 31).unwrap();
        let rho = DensityMatrix::new(CMat::from_diagonal(&CVec::from_vec(vec![c(0.7, 0.0), c(0.3, 0.0)]))).unwrap();
        let kd = krylov_build(&sigma_z(), &rho, &times).unwrap();
        assert_eq!(kd.len(), 1);
        assert!(kd.exhausted());
        assert!(kd.complexity().iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn sigma_z_plus_state() {
        let times = uniform_grid(std::f64::consts::PI, 201).unwrap();
        let kd = krylov_build(&sigma_z(), &plus(), &times).unwrap();
        assert_eq!(kd.len(), 3);
        assert!((kd.amplitudes()[0][0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(kd.amplitudes()[0].iter().skip(1).all(|z| z.norm() < 1e-15));
        assert_eq!(krylov_complexity(&kd, 0.0).unwrap(), 0.0);
        assert!(kd.normalization_defect() < 1e-12);
        // Independent route: expand the expm-propagated state directly.
        let l = kd.generator().clone();
        let tr = propagate_expm(&l, &plus(), &times).unwrap();
        for (k, s) in tr.normalized().iter().enumerate().step_by(20) {
            let raw = kd.basis().adjoint() * s.as_vec();
            let ck: f64 = raw.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum();
            assert!((ck - kd.complexity()[k]).abs() < 1e-10);
        }
        let basis = qsl::complete_basis(&normalize_state(&plus())).unwrap();
        let scan = krylov_bound_check(&kd, &tr, &basis).unwrap();
        assert!(scan.max_excess() < 1e-8);
        assert!(scan.max_precursor_excess() < 1e-8);
        assert!(krylov_complexity(&kd, 0.123).is_err());
    }

    #[test]
    fn random_hamiltonians_keep_normalization() {
        let mut r = random::rng(17);
        for d in [3, 4] {
            let h = random::hermitian(&mut r, d);
            let rho = random::density(&mut r, d);
            let times = uniform_grid(2.0, 41).unwrap();
            let kd = krylov_build(&h, &rho, &times).unwrap();
            assert!(kd.normalization_defect() < 1e-10);
            let g = kd.basis().adjoint() * kd.basis();
            assert!(linalg::max_abs(&(g - linalg::identity(kd.len()))) < 1e-10);
        }
    }

    #[test]
    fn tradeoff_saturates_at_zero() {
        let rho = coherent_gibbs_state(&sigma_z(), 1.0).unwrap();
        let times = uniform_grid(2.0 * std::f64::consts::PI, 401).unwrap();
        let kd = krylov_build(&sigma_z(), &rho, &times).unwrap();
        let tr = propagate_expm(kd.generator(), &rho, &times).unwrap();
        let f = sff_series(&tr);
        let m = tradeoff_check(&kd, &f).unwrap();
        assert!((m - 1.0).abs() < 1e-8 || m < 1.0);
        assert!((f[0] - 1.0).abs() < 1e-14);
        assert!(tradeoff_check(&kd, &f[1..]).is_err());
        let mixed = krylov_build(&sigma_x(), &DensityMatrix::maximally_mixed(2), &times).unwrap();
        assert!(tradeoff_check(&mixed, &f).is_err());
    }
}
