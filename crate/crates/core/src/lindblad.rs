//! Lindblad generators, their supermatrices and Kraus forms.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{DensityMatrix, MatrixJson, Superoperator};
use crate::linalg::{self, c, kron, CMat, I};

#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub rate: f64,
    pub operator: CMat,
}

impl Jump {
    pub fn new(rate: f64, operator: CMat) -> Self {
        Jump { rate, operator }
    }
}

/// Samples `(H_t, jumps_t)`; must be callable from several threads at once.
pub type TimeProvider = Arc<dyn Fn(f64) -> (CMat, Vec<Jump>) + Send + Sync>;

#[derive(Clone)]
pub struct LindbladSpec {
    dim: usize,
    hamiltonian: CMat,
    jumps: Vec<Jump>,
    provider: Option<TimeProvider>,
}

impl fmt::Debug for LindbladSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LindbladSpec")
            .field("dim", &self.dim)
            .field("jumps", &self.jumps.len())
            .field("time_dependent", &self.provider.is_some())
            .finish()
    }
}

fn validate_coefficients(d: usize, h: &CMat, jumps: &[Jump]) -> Result<()> {
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::dim(format!("hamiltonian is {}x{}, expected {d}x{d}", h.nrows(), h.ncols())));
    }
    let herm = linalg::hermiticity_defect(h);
    if herm > 1e-12 {
        return Err(Error::InvalidSpec(format!("hamiltonian not Hermitian (defect {herm:e})")));
    }
    if jumps.len() > d * d - 1 && d > 1 {
        return Err(Error::InvalidSpec(format!(
            "{} jump operators exceed d²-1 = {}",
            jumps.len(),
            d * d - 1
        )));
    }
    for (k, j) in jumps.iter().enumerate() {
        if !(j.rate >= 0.0) || !j.rate.is_finite() {
            return Err(Error::InvalidSpec(format!("jump {k} has rate {}", j.rate)));
        }
        if j.operator.nrows() != d || j.operator.ncols() != d {
            return Err(Error::dim(format!("jump {k} operator is not {d}x{d}")));
        }
    }
    Ok(())
}

impl LindbladSpec {
    pub fn new(hamiltonian: CMat, jumps: Vec<Jump>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if dim == 0 {
            return Err(Error::InvalidSpec("empty hamiltonian".into()));
        }
        validate_coefficients(dim, &hamiltonian, &jumps)?;
        Ok(LindbladSpec {
            dim,
            hamiltonian,
            jumps,
            provider: None,
        })
    }

    /// Attaches a time-dependent provider; the static coefficients remain the `t`-independent fallback.
    pub fn with_time_dependence(mut self, provider: TimeProvider) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn is_time_dependent(&self) -> bool {
        self.provider.is_some()
    }

    /// Coefficients at time `t`, validated.
    pub fn at(&self, t: f64) -> Result<(CMat, Vec<Jump>)> {
        match &self.provider {
            None => Ok((self.hamiltonian.clone(), self.jumps.clone())),
            Some(p) => {
                let (h, j) = p(t);
                validate_coefficients(self.dim, &h, &j)
                    .map_err(|e| Error::InvalidSpec(format!("provider at t={t}: {e}")))?;
                Ok((h, j))
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: SpecJson = serde_json::from_str(s)?;
        doc.into_spec()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn to_json(&self) -> SpecJson {
        SpecJson {
            dim: self.dim,
            hamiltonian: MatrixJson::from_matrix(&self.hamiltonian),
            jumps: self
                .jumps
                .iter()
                .map(|j| JumpJson {
                    rate: j.rate,
                    operator: MatrixJson::from_matrix(&j.operator),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpJson {
    pub rate: f64,
    pub operator: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecJson {
    pub dim: usize,
    pub hamiltonian: MatrixJson,
    #[serde(default)]
    pub jumps: Vec<JumpJson>,
}

impl SpecJson {
    pub fn into_spec(self) -> Result<LindbladSpec> {
        let h = self.hamiltonian.to_matrix()?;
        if h.nrows() != self.dim {
            return Err(Error::dim(format!("hamiltonian dim {} vs declared {}", h.nrows(), self.dim)));
        }
        let jumps = self
            .jumps
            .iter()
            .map(|j| Ok(Jump::new(j.rate, j.operator.to_matrix()?)))
            .collect::<Result<Vec<_>>>()?;
        LindbladSpec::new(h, jumps)
    }
}

/// 𝓛 with its Hamiltonian/dissipative and reversible/irreversible splits.
#[derive(Clone, Debug)]
pub struct LiouvillianParts {
    pub full: Superoperator,
    pub hermitian_generator: Superoperator,
    pub dissipative: Superoperator,
    pub reversible: Superoperator,
    pub irreversible: Superoperator,
}

fn hamiltonian_superop(h: &CMat) -> CMat {
    let id = linalg::identity(h.nrows());
    kron(&id, h) - kron(&h.transpose(), &id)
}

fn dissipator_superop(d: usize, jumps: &[Jump]) -> CMat {
    let id = linalg::identity(d);
    let mut out = linalg::zeros(d * d);
    for j in jumps {
        if j.rate == 0.0 {
            continue;
        }
        let l = &j.operator;
        let ll = l.adjoint() * l;
        let term = kron(&l.conjugate(), l) - (kron(&id, &ll) + kron(&ll.transpose(), &id)).scale(0.5);
        out += term.scale(j.rate);
    }
    out
}

pub fn build_parts(h: &CMat, jumps: &[Jump]) -> LiouvillianParts {
    let d = h.nrows();
    let lh = hamiltonian_superop(h);
    let ld = dissipator_superop(d, jumps);
    let ld_adj = ld.adjoint();
    let full = &ld - &lh * I;
    let reversible = &lh + (&ld - &ld_adj) * c(0.0, 0.5);
    let irreversible = (&ld + &ld_adj).scale(0.5);
    LiouvillianParts {
        full: Superoperator::from_raw(full),
        hermitian_generator: Superoperator::from_raw(lh),
        dissipative: Superoperator::from_raw(ld),
        reversible: Superoperator::from_raw(reversible),
        irreversible: Superoperator::from_raw(irreversible),
    }
}

pub fn build_liouvillian(spec: &LindbladSpec, t: f64) -> Result<LiouvillianParts> {
    let (h, jumps) = spec.at(t)?;
    Ok(build_parts(&h, &jumps))
}

/// Just the full generator 𝓛 at time `t`.
pub fn liouvillian(spec: &LindbladSpec, t: f64) -> Result<Superoperator> {
    let (h, jumps) = spec.at(t)?;
    let d = h.nrows();
    let full = dissipator_superop(d, &jumps) - hamiltonian_superop(&h) * I;
    Ok(Superoperator::from_raw(full))
}

fn dissipator_matrix(jumps: &[Jump], rho: &CMat) -> CMat {
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for j in jumps {
        let l = &j.operator;
        let ll = l.adjoint() * l;
        out += (l * rho * l.adjoint() - (&ll * rho + rho * &ll).scale(0.5)).scale(j.rate);
    }
    out
}

/// `𝒟(ρ) = Σ γ (LρL† − ½{L†L, ρ})` using the static coefficients.
pub fn apply_dissipator(spec: &LindbladSpec, rho: &DensityMatrix) -> Result<CMat> {
    if rho.dim() != spec.dim {
        return Err(Error::dim(format!("state d={} vs spec d={}", rho.dim(), spec.dim)));
    }
    Ok(dissipator_matrix(&spec.jumps, rho.matrix()))
}

/// Matrix-form right-hand side `−i[H_t, ρ] + 𝒟_t(ρ)`; `rho` need not be a state.
pub fn lindblad_rhs(spec: &LindbladSpec, rho: &CMat, t: f64) -> Result<CMat> {
    if rho.nrows() != spec.dim || rho.ncols() != spec.dim {
        return Err(Error::dim("rhs operand does not match spec dimension"));
    }
    let (h, jumps) = spec.at(t)?;
    let comm = &h * rho - rho * &h;
    Ok(dissipator_matrix(&jumps, rho) - comm * I)
}

#[derive(Clone, Debug)]
pub struct KrausSet {
    dim: usize,
    operators: Vec<CMat>,
    completeness_defect: f64,
}

impl KrausSet {
    pub fn new(operators: Vec<CMat>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let d = first.nrows();
        if operators.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::dim("Kraus operators of unequal shape"));
        }
        let mut sum = linalg::zeros(d);
        for k in &operators {
            sum += k.adjoint() * k;
        }
        let completeness_defect = linalg::max_abs(&(sum - linalg::identity(d)));
        Ok(KrausSet {
            dim: d,
            operators,
            completeness_defect,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    /// `max |Σ K†K − I|`.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.operators {
            out += k * rho * k.adjoint();
        }
        out
    }
}

/// `Σ K* ⊗ K`.
pub fn kraus_to_superop(ks: &KrausSet) -> Superoperator {
    let d = ks.dim;
    let mut out = linalg::zeros(d * d);
    for k in &ks.operators {
        out += kron(&k.conjugate(), k);
    }
    Superoperator::from_raw(out)
}

/// First-order Kraus operators of `exp(𝓛 dt)` from the static coefficients.
pub fn kraus_from_lindblad_step(spec: &LindbladSpec, dt: f64) -> Result<KrausSet> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let d = spec.dim;
    let mut eff = spec.hamiltonian.clone() * (-I);
    for j in &spec.jumps {
        eff -= (j.operator.adjoint() * &j.operator).scale(0.5 * j.rate);
    }
    let mut ops = vec![linalg::identity(d) + eff.scale(dt)];
    for j in &spec.jumps {
        if j.rate > 0.0 {
            ops.push(j.operator.scale((j.rate * dt).sqrt()));
        }
    }
    KrausSet::new(ops)
}

/// `σ₋ = |0⟩⟨1|`.
pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Qubit coupled to a thermal bath with mean occupation `n`, in the rotating frame (H = 0).
pub fn amplitude_damping(gamma: f64, n: f64) -> Result<LindbladSpec> {
    if !(gamma >= 0.0) || !(n >= 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma, n >= 0 (got {gamma}, {n})")));
    }
    let sm = sigma_minus();
    let sp = sm.adjoint();
    LindbladSpec::new(
        linalg::zeros(2),
        vec![Jump::new(gamma * (n + 1.0), sm), Jump::new(gamma * n, sp)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{devectorize, vectorize};
    use crate::linalg::max_abs;

    fn proj(k: usize) -> CMat {
        let mut m = linalg::zeros(2);
        m[(k, k)] = c(1.0, 0.0);
        m
    }

    #[test]
    fn empty_generator_is_zero() {
        let spec = LindbladSpec::new(linalg::zeros(2), vec![]).unwrap();
        let p = build_liouvillian(&spec, 0.0).unwrap();
        assert_eq!(max_abs(p.full.matrix()), 0.0);
    }

    #[test]
    fn decay_of_excited_state() {
        let g = 0.3;
        let spec = LindbladSpec::new(linalg::zeros(2), vec![Jump::new(g, sigma_minus())]).unwrap();
        let l = liouvillian(&spec, 0.0).unwrap();
        let out = devectorize(&l.apply(&vectorize(&proj(1)).unwrap()).unwrap());
        let expect = (proj(0) - proj(1)).scale(g);
        assert!(max_abs(&(out - expect)) < 1e-15);
        let rho = DensityMatrix::new(proj(1)).unwrap();
        let d = apply_dissipator(&spec, &rho).unwrap();
        assert!(max_abs(&(d - (proj(0) - proj(1)).scale(g))) < 1e-15);
    }

    #[test]
    fn unitary_matches_commutator() {
        let h = sigma_z().scale(0.5);
        let spec = LindbladSpec::new(h.clone(), vec![]).unwrap();
        let l = liouvillian(&spec, 0.0).unwrap();
        let x = sigma_x();
        let out = devectorize(&l.apply(&vectorize(&x).unwrap()).unwrap());
        let oracle = (&h * &x - &x * &h) * (-I);
        assert!(max_abs(&(out - oracle)) < 1e-15);
    }

    #[test]
    fn superop_matches_matrix_rhs() {
        let h = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(-0.4, 0.0)]);
        let l1 = CMat::from_row_slice(2, 2, &[c(0.1, 0.3), c(0.5, 0.0), c(-0.2, 0.1), c(0.0, 0.4)]);
        let spec = LindbladSpec::new(h, vec![Jump::new(0.7, l1), Jump::new(0.2, sigma_z())]).unwrap();
        let rho = CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let superop = devectorize(&liouvillian(&spec, 0.0).unwrap().apply(&vectorize(&rho).unwrap()).unwrap());
        let direct = lindblad_rhs(&spec, &rho, 0.0).unwrap();
        assert!(max_abs(&(superop - direct)) < 1e-15);
    }

    #[test]
    fn parts_reconstruct() {
        let spec = amplitude_damping(0.2, 0.5).unwrap();
        let h = sigma_x().scale(0.4);
        let p = build_parts(&h, spec.jumps());
        let a = p.dissipative.matrix() - p.hermitian_generator.matrix() * I;
        let b = p.irreversible.matrix() - p.reversible.matrix() * I;
        assert!(max_abs(&(a - p.full.matrix())) < 1e-15);
        assert!(max_abs(&(b - p.full.matrix())) < 1e-15);
        assert!(linalg::hermiticity_defect(p.hermitian_generator.matrix()) < 1e-15);
        assert!(linalg::hermiticity_defect(p.irreversible.matrix()) < 1e-15);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(LindbladSpec::new(linalg::zeros(2), vec![Jump::new(-0.1, sigma_z())]).is_err());
        let nh = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(LindbladSpec::new(nh, vec![]).is_err());
        let many = (0..4).map(|_| Jump::new(1.0, sigma_z())).collect();
        assert!(LindbladSpec::new(linalg::zeros(2), many).is_err());
    }

    #[test]
    fn kraus_amplitude_damping_channel() {
        let p = 0.3;
        let k0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0f64 - p).sqrt(), 0.0)]);
        let k1 = sigma_minus().scale(p.sqrt());
        let ks = KrausSet::new(vec![k0, k1]).unwrap();
        assert!(ks.completeness_defect() < 1e-15);
        let sup = kraus_to_superop(&ks);
        let out = devectorize(&sup.apply(&vectorize(&proj(1)).unwrap()).unwrap());
        let expect = CMat::from_row_slice(2, 2, &[c(p, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 - p, 0.0)]);
        assert!(max_abs(&(&out - &expect)) < 1e-15);
        assert!(max_abs(&(ks.apply(&proj(1)) - expect)) < 1e-15);
        let id = kraus_to_superop(&KrausSet::new(vec![linalg::identity(2)]).unwrap());
        assert_eq!(id.matrix(), &linalg::identity(4));
    }

    #[test]
    fn first_order_kraus_step() {
        let spec = amplitude_damping(0.01, 0.0).unwrap();
        let dt = 1e-4;
        let ks = kraus_from_lindblad_step(&spec, dt).unwrap();
        assert!(ks.completeness_defect() < 1e-8);
        let l = liouvillian(&spec, 0.0).unwrap();
        let first = linalg::identity(4) + l.matrix().scale(dt);
        let diff = max_abs(&(kraus_to_superop(&ks).matrix() - first));
        assert!(diff < 10.0 * (0.01 * dt).powi(2));
        let trivial = LindbladSpec::new(linalg::zeros(2), vec![]).unwrap();
        let ks = kraus_from_lindblad_step(&trivial, 0.1).unwrap();
        assert_eq!(ks.operators().len(), 1);
        assert_eq!(ks.operators()[0], linalg::identity(2));
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = amplitude_damping(0.01, 0.5).unwrap();
        let text = serde_json::to_string(&spec.to_json()).unwrap();
        let back = LindbladSpec::from_json_str(&text).unwrap();
        assert_eq!(back.jumps().len(), 2);
        assert_eq!(back.jumps()[0].rate, 0.015);
        assert!(LindbladSpec::from_json_str(r#"{"dim":3,"hamiltonian":{"dim":2,"re":[[0,0],[0,0]]}}"#).is_err());
    }

    #[test]
    fn time_dependent_provider_is_sampled() {
        let spec = amplitude_damping(0.1, 0.0).unwrap().with_time_dependence(Arc::new(|t: f64| {
            (sigma_z().scale(t), vec![Jump::new(0.1, sigma_minus())])
        }));
        let (h, _) = spec.at(2.0).unwrap();
        assert_eq!(h[(0, 0)], c(2.0, 0.0));
        let bad = amplitude_damping(0.1, 0.0)
            .unwrap()
            .with_time_dependence(Arc::new(|_t: f64| (sigma_z(), vec![Jump::new(-1.0, sigma_minus())])));
        assert!(bad.at(0.0).is_err());
    }
}
