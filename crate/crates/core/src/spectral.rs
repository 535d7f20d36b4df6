//! Biorthonormal eigensystem of a time-independent Liouvillian and the
//! eigenmode expansion of speed, angle and speed-limit time.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouville::{devectorize, vectorize, DensityMatrix, LiouvilleVector, Superoperator, Tolerances};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::random;

/// Eigenvalues closer than this are treated as one (ordering ties, zero modes).
pub const DEGENERACY_TOL: f64 = 1e-10;
const DEFECT_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<C64>,
    right: CMat,
    left: CMat,
    condition: f64,
    reconstruction_error: f64,
    zero_modes: usize,
}

impl SpectralData {
    /// Sorted ascending by |Re λ|, ties by Im λ.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Right eigenvectors `|r_i))` as columns.
    pub fn right(&self) -> &CMat {
        &self.right
    }

    /// Left eigenvectors `|l_i))` as columns, `(l_i|r_j) = δ_ij`.
    pub fn left(&self) -> &CMat {
        &self.left
    }

    pub fn right_vector(&self, i: usize) -> LiouvilleVector {
        LiouvilleVector::new(self.right.column(i).into_owned()).expect("side is d^2")
    }

    pub fn left_vector(&self, i: usize) -> LiouvilleVector {
        LiouvilleVector::new(self.left.column(i).into_owned()).expect("side is d^2")
    }

    /// Largest of the biorthogonality defect and the relative reconstruction error.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `max |Σ λ_i |r_i))((l_i| − 𝓛|`.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction_error
    }

    /// Number of eigenvalues with `|λ| < 1e-10`.
    pub fn zero_modes(&self) -> usize {
        self.zero_modes
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        linalg::exact_sqrt(self.len()).expect("side is d^2")
    }

    /// `Σ λ_i |r_i))((l_i|`.
    pub fn reconstruct(&self) -> CMat {
        let lam = CMat::from_diagonal(&CVec::from_vec(self.eigenvalues.clone()));
        &self.right * lam * self.left.adjoint()
    }

    /// `Σ e^{λ_i t} c_i |r_i))`.
    pub fn propagate(&self, overlaps: &[C64], t: f64) -> CVec {
        let coeff = CVec::from_iterator(
            self.len(),
            self.eigenvalues.iter().zip(overlaps).map(|(l, ci)| (l * t).exp() * ci),
        );
        &self.right * coeff
    }
}

/// Orders by |Re λ|, clustering near-equal values so ties sort by Im λ.
fn mode_order(lambdas: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambdas.len()).collect();
    idx.sort_by(|&a, &b| lambdas[a].re.abs().total_cmp(&lambdas[b].re.abs()));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len()
            && lambdas[idx[end]].re.abs() - lambdas[idx[end - 1]].re.abs() < DEGENERACY_TOL
        {
            end += 1;
        }
        let mut cluster = idx[start..end].to_vec();
        cluster.sort_by(|&a, &b| lambdas[a].im.total_cmp(&lambdas[b].im));
        out.extend(cluster);
        start = end;
    }
    out
}

pub fn spectral_decompose(l: &Superoperator) -> Result<SpectralData> {
    let m = l.matrix();
    let n = m.nrows();
    let (raw, vecs) = linalg::eig_general(m)?;
    let order = mode_order(&raw);
    let eigenvalues: Vec<C64> = order.iter().map(|&k| raw[k]).collect();
    let mut right = CMat::from_fn(n, n, |i, k| vecs[(i, order[k])]);
    // Scale the slowest mode to unit trace so that c_0 is the trace of the state.
    let d = l.dim();
    let tr0: C64 = (0..d).map(|i| right[(d * i + i, 0)]).sum();
    if tr0.norm() > 1e-12 {
        let col = right.column(0) / tr0;
        right.set_column(0, &col);
    }
    let inv = right.clone().try_inverse().ok_or(Error::DefectiveGenerator { defect: f64::INFINITY })?;
    let left = inv.adjoint();
    let biorth = linalg::max_abs(&(left.adjoint() * &right - linalg::identity(n)));
    let lam = CMat::from_diagonal(&CVec::from_vec(eigenvalues.clone()));
    let reconstruction_error = linalg::max_abs(&(&right * lam * left.adjoint() - m));
    let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE);
    let cond_r = linalg::op_norm(&right) * linalg::op_norm(&inv);
    let condition = biorth.max(reconstruction_error / scale);
    if condition > DEFECT_LIMIT || !condition.is_finite() || cond_r > 1e12 {
        return Err(Error::DefectiveGenerator {
            defect: if cond_r > 1e12 { cond_r } else { condition },
        });
    }
    let zero_modes = eigenvalues.iter().filter(|z| z.norm() < DEGENERACY_TOL).count();
    Ok(SpectralData {
        eigenvalues,
        right,
        left,
        condition,
        reconstruction_error,
        zero_modes,
    })
}

/// Unit-trace state spanning the kernel of 𝓛.
pub fn steady_state(sd: &SpectralData) -> Result<DensityMatrix> {
    if sd.zero_modes != 1 {
        return Err(Error::NonUniqueSteadyState {
            zero_modes: sd.zero_modes,
        });
    }
    let m = devectorize(&sd.right_vector(0));
    let m = linalg::hermitize(&m);
    let tr = m.trace().re;
    if tr.abs() < 1e-12 {
        return Err(Error::NumericalConsistency {
            quantity: "steady-state trace".into(),
            value: tr,
        });
    }
    let tol = Tolerances {
        hermitian: 1e-10,
        trace: 1e-10,
        ..Tolerances::default()
    };
    DensityMatrix::validated(m.unscale(tr), &tol, f64::INFINITY)
}

/// `c_i = (l_i|ρ0))`.
pub fn mode_overlaps(sd: &SpectralData, rho0: &DensityMatrix) -> Result<Vec<C64>> {
    if rho0.dim() * rho0.dim() != sd.len() {
        return Err(Error::dim(format!("state d={} vs generator side {}", rho0.dim(), sd.len())));
    }
    let v = vectorize(rho0.matrix())?.into_vec();
    Ok((sd.left.adjoint() * v).iter().copied().collect())
}

fn gram(sd: &SpectralData) -> CMat {
    sd.right.adjoint() * &sd.right
}

/// Speed from the mode sums
/// `Δ𝓛² = N₁/D − |N₂|²/D²` with
/// `D = Σ_ij x̄_i x_j (r_i|r_j)`, `N₁ = Σ_ij λ̄_i λ_j x̄_i x_j (r_i|r_j)`,
/// `N₂ = Σ_ij λ_j x̄_i x_j (r_i|r_j)`, `x_i = c_i e^{λ_i t}`.
pub fn speed_from_modes(sd: &SpectralData, overlaps: &[C64], t: f64) -> f64 {
    let g = gram(sd);
    let x: Vec<C64> = sd.eigenvalues.iter().zip(overlaps).map(|(l, ci)| (l * t).exp() * ci).collect();
    let n = sd.len();
    let mut den = c(0.0, 0.0);
    let mut n1 = c(0.0, 0.0);
    let mut n2 = c(0.0, 0.0);
    for i in 0..n {
        let xi = x[i].conj();
        let li = sd.eigenvalues[i].conj();
        for j in 0..n {
            let w = xi * x[j] * g[(i, j)];
            den += w;
            n1 += li * sd.eigenvalues[j] * w;
            n2 += sd.eigenvalues[j] * w;
        }
    }
    let dd = den.re;
    if dd <= 0.0 {
        return 0.0;
    }
    (n1.re / dd - n2.norm_sqr() / (dd * dd)).max(0.0).sqrt()
}

/// Angle `Θ(ρ0, ρ_t)` from
/// `cos Θ = Σ_j x_j (ρ0|r_j) / √(tr ρ0² Σ_ij x̄_i x_j (r_i|r_j))`.
///
/// Near-parallel cases switch to the chord of the mode-reconstructed vector.
pub fn angle_from_modes(sd: &SpectralData, overlaps: &[C64], rho0: &DensityMatrix, t: f64) -> f64 {
    let v0 = vectorize(rho0.matrix()).expect("square").into_vec();
    let proj = sd.right.adjoint() * &v0;
    let g = gram(sd);
    let x: Vec<C64> = sd.eigenvalues.iter().zip(overlaps).map(|(l, ci)| (l * t).exp() * ci).collect();
    let n = sd.len();
    let mut num = c(0.0, 0.0);
    let mut den = c(0.0, 0.0);
    for j in 0..n {
        num += x[j] * proj[j].conj();
        for i in 0..n {
            den += x[i].conj() * x[j] * g[(i, j)];
        }
    }
    let cos = num.re / (rho0.purity() * den.re).sqrt();
    if cos > 0.9 {
        let vt = sd.propagate(overlaps, t);
        crate::liouville::vector_angle(&v0, &vt)
    } else {
        cos.clamp(-1.0, 1.0).acos()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeQsl {
    pub t_qsl: f64,
    pub angle: f64,
    pub avg_speed: f64,
    pub stationary: bool,
}

/// Theorem 1 bound evaluated entirely through the mode expansion on a uniform `points` grid.
pub fn tqsl_from_modes(sd: &SpectralData, rho0: &DensityMatrix, t_final: f64, points: usize) -> Result<ModeQsl> {
    let cs = mode_overlaps(sd, rho0)?;
    if !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be positive, got {t_final}")));
    }
    let h = t_final / (points.max(3) - 1) as f64;
    let speeds: Vec<f64> = (0..points).map(|k| speed_from_modes(sd, &cs, k as f64 * h)).collect();
    let avg = linalg::simpson(&speeds, h)? / t_final;
    let angle = angle_from_modes(sd, &cs, rho0, t_final);
    if avg == 0.0 {
        return Ok(ModeQsl {
            t_qsl: 0.0,
            angle,
            avg_speed: 0.0,
            stationary: true,
        });
    }
    Ok(ModeQsl {
        t_qsl: angle / avg,
        angle,
        avg_speed: avg,
        stationary: false,
    })
}

#[derive(Clone, Debug)]
pub struct EliminationResult {
    pub unitary: CMat,
    pub residual: f64,
    pub success: bool,
}

/// `U = exp(iH)` with `H` Hermitian built from d² real parameters.
pub fn hermitian_from_params(p: &[f64], d: usize) -> CMat {
    let mut h = linalg::zeros(d);
    let mut k = 0;
    for i in 0..d {
        h[(i, i)] = c(p[k], 0.0);
        k += 1;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c(p[k], p[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

fn unitary_from_params(p: &[f64], d: usize) -> CMat {
    let h = hermitian_from_params(p, d) * linalg::I;
    linalg::expm(&h).expect("finite generator")
}

struct Elimination<'a> {
    rho0: &'a CMat,
    kill: Vec<CVec>,
    d: usize,
}

impl Elimination<'_> {
    fn objective(&self, p: &[f64]) -> f64 {
        let u = unitary_from_params(p, self.d);
        let rotated = &u * self.rho0 * u.adjoint();
        let v = CVec::from_column_slice(rotated.as_slice());
        self.kill.iter().map(|l| l.dotc(&v).norm_sqr()).sum()
    }
}

impl CostFunction for Elimination<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.objective(p))
    }
}

impl Gradient for Elimination<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let h = 1e-6;
        let mut x = p.clone();
        let mut g = vec![0.0; p.len()];
        for k in 0..p.len() {
            let orig = x[k];
            x[k] = orig + h;
            let fp = self.objective(&x);
            x[k] = orig - h;
            let fm = self.objective(&x);
            x[k] = orig;
            g[k] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    }
}

fn local_search(problem: &Elimination, start: Vec<f64>) -> (Vec<f64>, f64) {
    let f0 = problem.objective(&start);
    let n = start.len();
    let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let solver = match BFGS::new(MoreThuenteLineSearch::new()).with_tolerance_cost(1e-20) {
        Ok(s) => s,
        Err(_) => return (start, f0),
    };
    let run = Executor::new(
        Elimination {
            rho0: problem.rho0,
            kill: problem.kill.clone(),
            d: problem.d,
        },
        solver,
    )
    .configure(|state| state.param(start.clone()).inv_hessian(eye).max_iters(300).target_cost(1e-20))
    .run();
    match run {
        Ok(res) => {
            let state = res.state();
            match state.get_best_param() {
                Some(p) if state.get_best_cost() <= f0 => (p.clone(), state.get_best_cost()),
                _ => (start, f0),
            }
        }
        Err(_) => (start, f0),
    }
}

/// Local search for `U` with `(l_i|Uρ0U†)) = 0` on `kill_set`, from `restarts` seeded starts.
pub fn mode_elimination_search(
    sd: &SpectralData,
    rho0: &DensityMatrix,
    kill_set: &[usize],
    seed: u64,
    restarts: usize,
) -> Result<EliminationResult> {
    let d = rho0.dim();
    if d * d != sd.len() {
        return Err(Error::dim("state does not match generator"));
    }
    if kill_set.iter().any(|&i| i == 0 || i >= sd.len()) {
        return Err(Error::InvalidArgument("kill set must exclude mode 0 and stay in range".into()));
    }
    if kill_set.is_empty() {
        return Ok(EliminationResult {
            unitary: linalg::identity(d),
            residual: 0.0,
            success: true,
        });
    }
    let problem = Elimination {
        rho0: rho0.matrix(),
        kill: kill_set.iter().map(|&i| sd.left.column(i).into_owned()).collect(),
        d,
    };
    let n = d * d;
    let mut runs: Vec<(usize, Vec<f64>, f64)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = random::stream(seed, r as u64);
            let start: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
            let (p, f) = local_search(&problem, start);
            (r, p, f)
        })
        .collect();
    runs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
    let (_, p, residual) = runs.swap_remove(0);
    Ok(EliminationResult {
        unitary: unitary_from_params(&p, d),
        residual,
        success: residual < 1e-8,
    })
}
