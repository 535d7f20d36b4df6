//! State propagation and per-trajectory trace data.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lindblad::{self, KrausSet, LindbladSpec};
use crate::liouville::{
    devectorize, normalize_state, vectorize, DensityMatrix, LiouvilleVector, NormalizedState,
    Superoperator, Tolerances,
};
use crate::linalg::{self, c, CMat, CVec};

pub const DEFAULT_POINTS: usize = 2001;

#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    purities: Vec<f64>,
    normalized: Vec<NormalizedState>,
    speeds: Vec<f64>,
    overlap_with_initial: Vec<f64>,
}

impl EvolutionTrace {
    /// Builds a trace from already validated states on a strictly increasing grid.
    pub fn from_states(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} times vs {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
        }
        let normalized: Vec<NormalizedState> = states.iter().map(normalize_state).collect();
        let purities = normalized.iter().map(|s| s.purity()).collect();
        let v0 = normalized[0].as_vec().clone();
        let overlap_with_initial = normalized.iter().map(|s| v0.dotc(s.as_vec()).re).collect();
        let n = times.len();
        Ok(EvolutionTrace {
            times,
            states,
            purities,
            normalized,
            speeds: vec![f64::NAN; n],
            overlap_with_initial,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn purities(&self) -> &[f64] {
        &self.purities
    }

    pub fn normalized(&self) -> &[NormalizedState] {
        &self.normalized
    }

    /// Per-point Δ𝓛; NaN until filled by [`EvolutionTrace::set_speeds`].
    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn overlap_with_initial(&self) -> &[f64] {
        &self.overlap_with_initial
    }

    pub fn set_speeds(&mut self, speeds: Vec<f64>) -> Result<()> {
        if speeds.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} speeds for {} grid points",
                speeds.len(),
                self.len()
            )));
        }
        self.speeds = speeds;
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn last(&self) -> &DensityMatrix {
        &self.states[self.len() - 1]
    }

    /// Uniform spacing of the grid, if it has one.
    pub fn uniform_step(&self) -> Option<f64> {
        uniform_step(&self.times)
    }

    /// CSV with columns `t,purity,overlap,speed`, optionally followed by
    /// row-major `re_ij,im_ij` state entries.
    pub fn write_csv<W: Write>(&self, w: &mut W, dump_states: bool) -> Result<()> {
        let d = self.states[0].dim();
        let mut header = String::from("t,purity,overlap,speed");
        if dump_states {
            for i in 0..d {
                for j in 0..d {
                    header.push_str(&format!(",re_{i}{j},im_{i}{j}"));
                }
            }
        }
        writeln!(w, "{header}")?;
        for k in 0..self.len() {
            let mut line = format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k], self.purities[k], self.overlap_with_initial[k], self.speeds[k]
            );
            if dump_states {
                let m = self.states[k].matrix();
                for i in 0..d {
                    for j in 0..d {
                        line.push_str(&format!(",{:.16e},{:.16e}", m[(i, j)].re, m[(i, j)].im));
                    }
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    MatrixExponential,
    Rk4,
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expm" => Ok(Method::MatrixExponential),
            "rk4" => Ok(Method::Rk4),
            "rk45" => Ok(Method::Rk45),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Maximum step for fixed-step RK4; `None` uses the grid spacing.
    pub step: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub grid_points: usize,
    pub tolerances: Tolerances,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45,
            step: None,
            rtol: 1e-10,
            atol: 1e-12,
            grid_points: DEFAULT_POINTS,
            tolerances: Tolerances::default(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Rk45 && !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("rtol and atol must be positive".into()));
        }
        if let Some(h) = self.step {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
            }
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidArgument("need at least 2 grid points".into()));
        }
        Ok(())
    }
}

pub fn uniform_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {points}")));
    }
    let h = t_max / (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { t_max } else { k as f64 * h }).collect())
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let ok = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(f64::MIN_POSITIVE));
    ok.then_some(h)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::InvalidArgument("time grid must start at t = 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Re-Hermitizes a propagated vector and validates it as a state at time `t`.
fn to_state(v: &CVec, d: usize, t: f64, tol: &Tolerances) -> Result<DensityMatrix> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integration {
            t,
            reason: "state diverged".into(),
        });
    }
    let m = CMat::from_column_slice(d, d, v.as_slice());
    DensityMatrix::validated(linalg::hermitize(&m), tol, t)
}

pub fn propagate_expm(l: &Superoperator, rho0: &DensityMatrix, times: &[f64]) -> Result<EvolutionTrace> {
    propagate_expm_with(l, rho0, times, &Tolerances::default())
}

pub fn propagate_expm_with(
    l: &Superoperator,
    rho0: &DensityMatrix,
    times: &[f64],
    tol: &Tolerances,
) -> Result<EvolutionTrace> {
    check_grid(times)?;
    let d = rho0.dim();
    if l.dim() != d {
        return Err(Error::dim(format!("generator d={} vs state d={d}", l.dim())));
    }
    let v0 = vectorize(rho0.matrix())?.into_vec();
    let mut states = Vec::with_capacity(times.len());
    states.push(rho0.clone());
    if let Some(h) = uniform_step(times) {
        let step = linalg::expm(&l.matrix().scale(h)).map_err(|e| at_time(e, h))?;
        let mut v = v0;
        for &t in &times[1..] {
            v = &step * &v;
            states.push(to_state(&v, d, t, tol)?);
        }
    } else {
        for &t in &times[1..] {
            let e = linalg::expm(&l.matrix().scale(t)).map_err(|e| at_time(e, t))?;
            states.push(to_state(&(&e * &v0), d, t, tol)?);
        }
    }
    EvolutionTrace::from_states(times.to_vec(), states)
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::Integration { reason, .. } => Error::Integration { t, reason },
        other => other,
    }
}

/// Right-hand side of the vectorized master equation.
enum Rhs<'a> {
    Static(CMat),
    Sampled(&'a LindbladSpec),
}

impl Rhs<'_> {
    fn eval(&self, t: f64, v: &CVec, d: usize) -> Result<CVec> {
        match self {
            Rhs::Static(l) => Ok(l * v),
            Rhs::Sampled(spec) => {
                let rho = CMat::from_column_slice(d, d, v.as_slice());
                let out = lindblad::lindblad_rhs(spec, &rho, t)?;
                Ok(CVec::from_column_slice(out.as_slice()))
            }
        }
    }
}

fn rk4_step(f: &Rhs, t: f64, v: &CVec, h: f64, d: usize) -> Result<CVec> {
    let k1 = f.eval(t, v, d)?;
    let k2 = f.eval(t + 0.5 * h, &(v + &k1 * c(0.5 * h, 0.0)), d)?;
    let k3 = f.eval(t + 0.5 * h, &(v + &k2 * c(0.5 * h, 0.0)), d)?;
    let k4 = f.eval(t + h, &(v + &k3 * c(h, 0.0)), d)?;
    Ok(v + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0))
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(f: &Rhs, t: f64, v: &CVec, h: f64, d: usize) -> Result<(CVec, CVec)> {
    let mut ks: Vec<CVec> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut arg = v.clone();
        for (j, k) in ks.iter().enumerate() {
            let a = DP_A[s][j];
            if a != 0.0 {
                arg += k * c(a * h, 0.0);
            }
        }
        ks.push(f.eval(t + DP_C[s] * h, &arg, d)?);
    }
    let mut y5 = v.clone();
    let mut err = CVec::zeros(v.len());
    for s in 0..7 {
        y5 += &ks[s] * c(DP_B5[s] * h, 0.0);
        err += &ks[s] * c((DP_B5[s] - DP_B4[s]) * h, 0.0);
    }
    Ok((y5, err))
}

fn advance_rk45(f: &Rhs, t0: f64, t1: f64, v: &CVec, h: &mut f64, cfg: &IntegratorConfig, d: usize) -> Result<CVec> {
    let mut t = t0;
    let mut v = v.clone();
    while t < t1 {
        let last = *h >= t1 - t;
        let step = if last { t1 - t } else { *h };
        if step < 1e-14 * t1.abs().max(1.0) && !last {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {step:e})"),
            });
        }
        let (y, err) = dp_step(f, t, &v, step, d)?;
        let mut e = 0.0f64;
        for i in 0..v.len() {
            let sc = cfg.atol + cfg.rtol * v[i].norm().max(y[i].norm());
            e = e.max(err[i].norm() / sc);
        }
        if !e.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "non-finite error estimate".into(),
            });
        }
        if e <= 1.0 {
            t = if last { t1 } else { t + step };
            v = y;
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        if !(last && e <= 1.0) {
            *h = step * factor;
        }
    }
    Ok(v)
}

/// Runge–Kutta propagation of `|ρ_t))`, sampling a time-dependent spec at each stage.
pub fn propagate_ode(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<EvolutionTrace> {
    cfg.validate()?;
    check_grid(times)?;
    let d = rho0.dim();
    if spec.dim() != d {
        return Err(Error::dim(format!("spec d={} vs state d={d}", spec.dim())));
    }
    if cfg.method == Method::MatrixExponential {
        if spec.is_time_dependent() {
            return Err(Error::InvalidArgument(
                "matrix exponential needs a time-independent spec".into(),
            ));
        }
        let l = lindblad::liouvillian(spec, 0.0)?;
        return propagate_expm_with(&l, rho0, times, &cfg.tolerances);
    }
    let f = if spec.is_time_dependent() {
        Rhs::Sampled(spec)
    } else {
        Rhs::Static(lindblad::liouvillian(spec, 0.0)?.into_matrix())
    };
    let mut v = vectorize(rho0.matrix())?.into_vec();
    let mut states = Vec::with_capacity(times.len());
    states.push(rho0.clone());
    let mut h_adapt = times.get(1).map(|t| t * 0.1).unwrap_or(1.0);
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        v = match cfg.method {
            Method::Rk4 => {
                let span = t1 - t0;
                let hmax = cfg.step.unwrap_or(span);
                let n = (span / hmax).ceil().max(1.0) as usize;
                let h = span / n as f64;
                let mut x = v;
                for k in 0..n {
                    x = rk4_step(&f, t0 + k as f64 * h, &x, h, d)?;
                }
                x
            }
            Method::Rk45 => advance_rk45(&f, t0, t1, &v, &mut h_adapt, cfg, d)?,
            Method::MatrixExponential => unreachable!(),
        };
        states.push(to_state(&v, d, t1, &cfg.tolerances)?);
    }
    EvolutionTrace::from_states(times.to_vec(), states)
}

fn check_dims(l: &Superoperator, s: &NormalizedState) -> Result<()> {
    if l.dim() != s.dim() {
        return Err(Error::dim(format!("generator d={} vs state d={}", l.dim(), s.dim())));
    }
    Ok(())
}

/// `(𝓛 − ½[(ρ̃|𝓛|ρ̃) + (ρ̃|𝓛†|ρ̃)]) |ρ̃))`.
pub fn normalized_rhs(l: &Superoperator, s: &NormalizedState) -> Result<LiouvilleVector> {
    check_dims(l, s)?;
    let v = s.as_vec();
    let lv = l.matrix() * v;
    let mean = v.dotc(&lv);
    let bracket = 0.5 * (mean + mean.conj());
    LiouvilleVector::new(lv - v * bracket)
}

/// `d𝓟/dt = 𝓛𝓟 + 𝓟𝓛† − 𝓟 tr[(𝓛+𝓛†)𝓟]`.
pub fn projector_rhs(l: &Superoperator, s: &NormalizedState) -> Result<Superoperator> {
    check_dims(l, s)?;
    let p = s.projector().into_matrix();
    let lm = l.matrix();
    let v = s.as_vec();
    let lv = lm * v;
    let tr = v.dotc(&lv) + lv.dotc(v);
    let out = lm * &p + &p * lm.adjoint() - &p * tr;
    Superoperator::new(out)
}

fn fubini_study_speed(v: &CVec, dv: &CVec) -> f64 {
    (dv.norm_squared() - v.dotc(dv).norm_sqr()).max(0.0).sqrt()
}

/// Speed of an arbitrary trajectory from central differences of the normalized states.
pub fn generic_speed(trace: &EvolutionTrace, k: usize) -> Result<f64> {
    if k == 0 || k + 1 >= trace.len() {
        return Err(Error::InvalidArgument(format!(
            "generic_speed needs an interior index, got {k} of {}",
            trace.len()
        )));
    }
    let t = trace.times();
    let n = trace.normalized();
    let dv = (n[k + 1].as_vec() - n[k - 1].as_vec()).unscale(t[k + 1] - t[k - 1]);
    Ok(fubini_study_speed(n[k].as_vec(), &dv))
}

/// Speed from a family of Kraus channels `t ↦ 𝓚_t` acting on `ρ0`, central differences of step `h`.
pub fn kraus_trajectory_speed(
    provider: &dyn Fn(f64) -> Result<KrausSet>,
    rho0: &DensityMatrix,
    t: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    let s0 = normalize_state(rho0);
    // 𝓚̃_t maps |ρ̃0)) to |ρ̃_t)): 𝓚_t divided by |𝓚_t ρ̃0|.
    let tilde = |tt: f64| -> Result<CMat> {
        let ks = provider(tt)?;
        if ks.dim() != rho0.dim() {
            return Err(Error::dim(format!("Kraus d={} vs state d={}", ks.dim(), rho0.dim())));
        }
        let k = lindblad::kraus_to_superop(&ks).into_matrix();
        let n = (&k * s0.as_vec()).norm();
        Ok(k.unscale(n))
    };
    let kp = tilde(t + h)?;
    let km = tilde(t - h)?;
    let kt = tilde(t)?;
    let dk = (kp - km).unscale(2.0 * h);
    let v0 = s0.as_vec();
    let vt = &kt * v0;
    let dv = &dk * v0;
    // tr(𝓚̃'†𝓚̃'𝓟0) − tr(𝓚̃'†𝓟_t𝓚̃'𝓟0)
    Ok((dv.norm_squared() - vt.dotc(&dv).norm_sqr()).max(0.0).sqrt())
}

/// Unnormalized Liouville vector of a state, exposed for routes that differentiate raw vectors.
pub fn raw_vector(rho: &DensityMatrix) -> CVec {
    vectorize(rho.matrix()).map(|v| v.into_vec()).expect("square")
}

/// Devectorized state at an arbitrary time for a static generator.
pub fn state_at(l: &Superoperator, rho0: &DensityMatrix, t: f64) -> Result<CMat> {
    let e = linalg::expm(&l.matrix().scale(t)).map_err(|e| at_time(e, t))?;
    let v = LiouvilleVector::new(&e * raw_vector(rho0))?;
    Ok(devectorize(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{amplitude_damping, sigma_minus, sigma_x, sigma_z, Jump};
    use crate::linalg::{max_abs, I};
    use crate::liouville::superop_expectation;

    fn psi(alpha: f64) -> DensityMatrix {
        let v = CVec::from_vec(vec![c(alpha, 0.0), c((1.0 - alpha * alpha).sqrt(), 0.0)]);
        DensityMatrix::from_pure(&v).unwrap()
    }

    fn plus() -> DensityMatrix {
        psi(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Closed-form ρ_t for zero-temperature decay from (α, √(1−α²)).
    fn ad_state(alpha: f64, g: f64, t: f64) -> CMat {
        let e = (-g * t).exp();
        let b2 = 1.0 - alpha * alpha;
        let coh = alpha * b2.sqrt() * (-0.5 * g * t).exp();
        CMat::from_row_slice(2, 2, &[c(1.0 - b2 * e, 0.0), c(coh, 0.0), c(coh, 0.0), c(b2 * e, 0.0)])
    }

    #[test]
    fn zero_generator_keeps_state() {
        let tr = propagate_expm(&Superoperator::zero(2), &plus(), &uniform_grid(1.0, 5).unwrap()).unwrap();
        for s in tr.states() {
            assert_eq!(s, &plus());
        }
        assert!((tr.overlap_with_initial()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expm_matches_decay_closed_form() {
        let g = 0.01;
        let spec = amplitude_damping(g, 0.0).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let times = vec![0.0, 10.0, 100.0, 300.0];
        let tr = propagate_expm(&l, &psi(0.5), &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((tr.states()[k].matrix() - ad_state(0.5, g, t)).norm() < 1e-8);
        }
        // Coherences decay at γ/2, so only an incoherent start is within 1e-6 of |0⟩⟨0| by t = 2000.
        let far = propagate_expm(&l, &psi(0.0), &[0.0, 2000.0]).unwrap();
        let ground = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(max_abs(&(far.last().matrix() - ground)) < 1e-6);
    }

    #[test]
    fn ode_methods_agree_with_expm() {
        let h = sigma_x().scale(0.3);
        let spec = LindbladSpec::new(h, vec![Jump::new(0.2, sigma_minus()), Jump::new(0.05, sigma_z())]).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let times = uniform_grid(20.0, 201).unwrap();
        let a = propagate_expm(&l, &plus(), &times).unwrap();
        let b = propagate_ode(&spec, &plus(), &times, &IntegratorConfig::default()).unwrap();
        let rk4 = IntegratorConfig {
            method: Method::Rk4,
            step: Some(0.01),
            ..Default::default()
        };
        let cc = propagate_ode(&spec, &plus(), &times, &rk4).unwrap();
        for k in 0..times.len() {
            assert!(max_abs(&(a.states()[k].matrix() - b.states()[k].matrix())) < 1e-8, "rk45 at {k}");
            assert!(max_abs(&(a.states()[k].matrix() - cc.states()[k].matrix())) < 1e-8, "rk4 at {k}");
        }
    }

    #[test]
    fn unitary_preserves_purity() {
        let spec = LindbladSpec::new(sigma_x().scale(0.8), vec![]).unwrap();
        let times = uniform_grid(10.0, 101).unwrap();
        let cfg = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        let tr = propagate_ode(&spec, &psi(0.3), &times, &cfg).unwrap();
        for p in tr.purities() {
            assert!((p - 1.0).abs() < 1e-10, "purity {p}");
        }
    }

    #[test]
    fn time_dependent_matches_piecewise_static() {
        // H_t = t σ_z commutes with itself, so the phase is ∫ t dt = t²/2.
        let spec = LindbladSpec::new(linalg::zeros(2), vec![])
            .unwrap()
            .with_time_dependence(std::sync::Arc::new(|t: f64| (sigma_z().scale(t), vec![])));
        let times = uniform_grid(2.0, 21).unwrap();
        let tr = propagate_ode(&spec, &plus(), &times, &IntegratorConfig::default()).unwrap();
        let last = tr.last().matrix();
        // ρ01(t) = ½ e^{-2i t²/2}
        let expect = c(0.5, 0.0) * (-(I * 2.0 * 2.0)).exp();
        assert!((last[(0, 1)] - expect).norm() < 1e-8);
    }

    #[test]
    fn normalized_rhs_properties() {
        let spec = amplitude_damping(0.3, 0.5).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let s = normalize_state(&plus());
        let rhs = normalized_rhs(&l, &s).unwrap();
        assert!(s.as_vec().dotc(rhs.as_vec()).re.abs() < 1e-12);
        let mean = superop_expectation(&l, &s).unwrap();
        assert!(mean.im.abs() < 1e-12);
        let ss = CMat::from_row_slice(2, 2, &[c(0.75, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.25, 0.0)]);
        let stat = normalize_state(&DensityMatrix::new(ss).unwrap());
        assert!(normalized_rhs(&l, &stat).unwrap().as_vec().norm() < 1e-15);
        let dp = projector_rhs(&l, &stat).unwrap();
        assert!(max_abs(dp.matrix()) < 1e-15);
    }

    #[test]
    fn projector_rhs_matches_finite_difference() {
        let g = 0.05;
        let spec = amplitude_damping(g, 0.0).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let h = 1e-3;
        let tr = propagate_expm(&l, &psi(0.6), &[0.0, 5.0 - h, 5.0, 5.0 + h]).unwrap();
        let n = tr.normalized();
        let fd = (n[3].projector().into_matrix() - n[1].projector().into_matrix()).unscale(2.0 * h);
        let an = projector_rhs(&l, &n[2]).unwrap();
        assert!(max_abs(&(fd - an.matrix())) < 1e-7);
        assert!(an.matrix().trace().norm() < 1e-12);
        assert!(linalg::hermiticity_defect(an.matrix()) < 1e-12);
    }

    #[test]
    fn generic_speed_of_unitary_qubit_is_constant() {
        let spec = LindbladSpec::new(sigma_z().scale(0.5), vec![]).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let tr = propagate_expm(&l, &plus(), &uniform_grid(10.0, 2001).unwrap()).unwrap();
        let v0 = generic_speed(&tr, 1).unwrap();
        for k in 2..tr.len() - 1 {
            assert!((generic_speed(&tr, k).unwrap() - v0).abs() < 1e-8);
        }
        assert!(generic_speed(&tr, 0).is_err());
        let still = propagate_expm(&Superoperator::zero(2), &plus(), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(generic_speed(&still, 1).unwrap(), 0.0);
    }

    #[test]
    fn kraus_speed_matches_unitary_generator() {
        // Δ𝓛_H for H = σ_z/2 on |+⟩ is the constant 1/√2 (ρ̃ has a unit-norm coherence part).
        let provider = |t: f64| {
            let u = CMat::from_row_slice(
                2,
                2,
                &[(-I * 0.5 * t).exp(), c(0.0, 0.0), c(0.0, 0.0), (I * 0.5 * t).exp()],
            );
            KrausSet::new(vec![u])
        };
        let spec = LindbladSpec::new(sigma_z().scale(0.5), vec![]).unwrap();
        let l = lindblad::liouvillian(&spec, 0.0).unwrap();
        let s = normalize_state(&plus());
        let direct = crate::liouville::superop_variance(&l, &s).unwrap().sqrt();
        let v = kraus_trajectory_speed(&provider, &plus(), 1.3, 1e-3).unwrap();
        assert!((v - direct).abs() < 2e-4);
        let still = |_t: f64| KrausSet::new(vec![linalg::identity(2)]);
        assert_eq!(kraus_trajectory_speed(&still, &plus(), 0.5, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut tr = propagate_expm(&Superoperator::zero(2), &plus(), &[0.0, 1.0, 2.0]).unwrap();
        tr.set_speeds(vec![0.0; 3]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("t,purity,overlap,speed,re_00,im_00"));
        assert_eq!(lines[1].split(',').count(), 4 + 8);
    }

    #[test]
    fn grid_validation() {
        assert!(uniform_grid(0.0, 10).is_err());
        assert!(propagate_expm(&Superoperator::zero(2), &plus(), &[1.0, 2.0]).is_err());
        assert!(propagate_expm(&Superoperator::zero(2), &plus(), &[0.0, 2.0, 1.0]).is_err());
    }
}
