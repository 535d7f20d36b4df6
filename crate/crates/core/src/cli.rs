//! Command-line scenarios. Each command writes its files under `--out` and
//! returns a JSON summary for stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::applications::{self, krylov, sff};
use crate::error::{Error, Result};
use crate::evolution::{self, EvolutionTrace, IntegratorConfig, Method};
use crate::lindblad::{self, LindbladSpec};
use crate::liouville::{normalize_state, DensityMatrix, MatrixJson};
use crate::linalg::{self, c, CMat, CVec};
use crate::optimal::{self, GeodesicSpec};
use crate::qsl;
use crate::random;
use crate::spectral;

#[derive(Debug, Parser)]
#[command(name = "liouqsl", version, about = "Liouville-space speed limits for Lindblad dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate a state and write the trace as CSV.
    Evolve(EvolveArgs),
    /// Speed-limit bounds for one trajectory.
    QslReport(TrajectoryArgs),
    /// Eigenvalues, steady state and mode timescales of a static generator.
    Spectral(SpecArgs),
    /// Time-optimal dynamics between two orthogonal states.
    Optimal(OptimalArgs),
    /// Thermal-qubit relaxation sweep over initial states.
    Mpemba(MpembaArgs),
    /// Krylov complexity, SFF and their bounds under unitary dynamics.
    Krylov(KrylovArgs),
    /// Check a spec and run seeded invariant trials on it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Initial state `α|0⟩ + √(1−α²)|1⟩`.
    #[arg(long, conflicts_with = "rho0")]
    pub alpha: Option<f64>,
    /// Initial density matrix as JSON.
    #[arg(long)]
    pub rho0: Option<PathBuf>,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = evolution::DEFAULT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub traj: TrajectoryArgs,
    #[arg(long, default_value = "expm")]
    pub method: String,
    #[arg(long)]
    pub dump_states: bool,
}

#[derive(Debug, Args)]
pub struct OptimalArgs {
    #[arg(long)]
    pub rho0: PathBuf,
    #[arg(long)]
    pub rho_perp: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = evolution::DEFAULT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct MpembaArgs {
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub n: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 0.75, 0.9])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 300.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = evolution::DEFAULT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct KrylovArgs {
    /// Hamiltonian as matrix JSON.
    #[arg(long)]
    pub h: PathBuf,
    /// Initial state; defaults to the coherent Gibbs state at `--beta`.
    #[arg(long)]
    pub rho0: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = evolution::DEFAULT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Number of random initial states.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve(_) => "evolve",
            Command::QslReport(_) => "qsl-report",
            Command::Spectral(_) => "spectral",
            Command::Optimal(_) => "optimal",
            Command::Mpemba(_) => "mpemba",
            Command::Krylov(_) => "krylov",
            Command::Validate(_) => "validate",
        }
    }
}

/// One-line JSON error record for stderr.
pub fn error_record(command: &str, err: &Error) -> Value {
    let (kind, t, quantity) = match err {
        Error::Dimension(_) => ("dimension", None, None),
        Error::InvalidState { t, .. } => ("invalid_state", Some(*t), None),
        Error::InvalidSpec(_) => ("invalid_spec", None, None),
        Error::InvalidArgument(_) => ("invalid_argument", None, None),
        Error::NumericalConsistency { quantity, .. } => ("numerical_consistency", None, Some(quantity.clone())),
        Error::Integration { t, .. } => ("integration", Some(*t), None),
        Error::Quadrature(_) => ("quadrature", None, None),
        Error::DefectiveGenerator { .. } => ("defective_generator", None, None),
        Error::NonUniqueSteadyState { .. } => ("non_unique_steady_state", None, None),
        Error::NoConnectingUnitary(_) => ("no_connecting_unitary", None, None),
        Error::Inconsistent(_) => ("inconsistent", None, None),
        Error::Io(_) => ("io", None, None),
        Error::Json(_) => ("json", None, None),
    };
    json!({
        "command": command,
        "kind": kind,
        "exit_code": err.exit_code(),
        "t": t,
        "quantity": quantity,
        "message": err.to_string(),
    })
}

fn check_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 3 || points.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("--points must be odd and >= 3, got {points}")));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("--t-max must be positive, got {t_max}")));
    }
    evolution::uniform_grid(t_max, points)
}

fn read_matrix(path: &Path) -> Result<CMat> {
    let text = fs::read_to_string(path)?;
    let m: MatrixJson = serde_json::from_str(&text)?;
    m.to_matrix()
}

fn read_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::new(read_matrix(path)?)
}

/// `α|0⟩ + √(1−α²)|1⟩` in dimension `d`.
pub fn alpha_state(alpha: f64, d: usize) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("--alpha must lie in [0, 1], got {alpha}")));
    }
    if d < 2 {
        return Err(Error::dim("alpha states need d >= 2"));
    }
    let mut psi = CVec::zeros(d);
    psi[0] = c(alpha, 0.0);
    psi[1] = c((1.0 - alpha * alpha).sqrt(), 0.0);
    DensityMatrix::from_pure(&psi)
}

fn initial_state(args: &TrajectoryArgs, d: usize) -> Result<DensityMatrix> {
    let rho = match (&args.rho0, args.alpha) {
        (Some(p), _) => read_state(p)?,
        (None, Some(a)) => alpha_state(a, d)?,
        (None, None) => return Err(Error::InvalidArgument("need --alpha or --rho0".into())),
    };
    if rho.dim() != d {
        return Err(Error::dim(format!("initial state d={} vs spec d={d}", rho.dim())));
    }
    Ok(rho)
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn with_speeds(mut trace: EvolutionTrace, gen: &dyn qsl::Generator) -> Result<EvolutionTrace> {
    let v = qsl::trace_speeds(&trace, gen)?;
    trace.set_speeds(v)?;
    Ok(trace)
}

fn write_trace(out: &Path, name: &str, trace: &EvolutionTrace, dump_states: bool) -> Result<()> {
    let mut w = create(out, name)?;
    trace.write_csv(&mut w, dump_states)?;
    w.flush()?;
    Ok(())
}

fn propagate(spec: &LindbladSpec, rho0: &DensityMatrix, times: &[f64], method: Method) -> Result<EvolutionTrace> {
    match method {
        Method::MatrixExponential if !spec.is_time_dependent() => {
            evolution::propagate_expm(&lindblad::liouvillian(spec, 0.0)?, rho0, times)
        }
        _ => {
            let cfg = IntegratorConfig {
                method: if method == Method::MatrixExponential { Method::Rk45 } else { method },
                grid_points: times.len(),
                ..IntegratorConfig::default()
            };
            evolution::propagate_ode(spec, rho0, times, &cfg)
        }
    }
}

fn evolve(out: &Path, a: &EvolveArgs) -> Result<Value> {
    let spec = LindbladSpec::from_json_file(&a.traj.spec)?;
    let rho0 = initial_state(&a.traj, spec.dim())?;
    let times = check_grid(a.traj.t_max, a.traj.points)?;
    let method: Method = a.method.parse()?;
    let trace = with_speeds(propagate(&spec, &rho0, &times, method)?, &spec)?;
    write_trace(out, "evolve.csv", &trace, a.dump_states)?;
    Ok(json!({
        "rows": trace.len(),
        "final_purity": trace.purities().last(),
        "file": out.join("evolve.csv"),
    }))
}

fn qsl_report(out: &Path, a: &TrajectoryArgs) -> Result<Value> {
    let spec = LindbladSpec::from_json_file(&a.spec)?;
    let rho0 = initial_state(a, spec.dim())?;
    let times = check_grid(a.t_max, a.points)?;
    let trace = propagate(&spec, &rho0, &times, Method::MatrixExponential)?;
    let basis = qsl::complete_basis(&normalize_state(&rho0))?;
    let report = qsl::exact_qsl(&trace, &spec, &basis)?;
    write_json(out, "qsl_report.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

#[derive(Serialize)]
struct Eigen {
    re: f64,
    im: f64,
    /// `1/|Re λ|`; null for non-decaying modes.
    timescale: Option<f64>,
}

fn spectral_cmd(out: &Path, a: &SpecArgs) -> Result<Value> {
    let spec = LindbladSpec::from_json_file(&a.spec)?;
    let l = lindblad::liouvillian(&spec, 0.0)?;
    let sd = spectral::spectral_decompose(&l)?;
    let steady = match spectral::steady_state(&sd) {
        Ok(s) => Some(MatrixJson::from_matrix(s.matrix())),
        Err(Error::NonUniqueSteadyState { .. }) => None,
        Err(e) => return Err(e),
    };
    let eig: Vec<Eigen> = sd
        .eigenvalues()
        .iter()
        .map(|z| Eigen {
            re: z.re,
            im: z.im,
            timescale: (z.re.abs() > spectral::DEGENERACY_TOL).then(|| 1.0 / z.re.abs()),
        })
        .collect();
    let value = json!({
        "eigenvalues": eig,
        "condition": sd.condition(),
        "reconstruction_error": sd.reconstruction_error(),
        "zero_modes": sd.zero_modes(),
        "steady_state": steady,
    });
    write_json(out, "spectral.json", &value)?;
    Ok(value)
}

fn optimal_cmd(out: &Path, a: &OptimalArgs) -> Result<Value> {
    let rho0 = read_state(&a.rho0)?;
    let perp = read_state(&a.rho_perp)?;
    let times = check_grid(a.t_max, a.points)?;
    let gs = GeodesicSpec::connecting(rho0, perp, a.gamma)?;
    let (trace, cert) = optimal::certify(&gs, &times)?;
    let trace = with_speeds(trace, &optimal::optimal_liouvillian(&gs))?;
    write_trace(out, "optimal.csv", &trace, false)?;
    write_json(out, "optimal.json", &cert)?;
    Ok(serde_json::to_value(&cert)?)
}

fn mpemba_cmd(out: &Path, a: &MpembaArgs) -> Result<Value> {
    check_grid(a.t_max, a.points)?;
    let rep = applications::mpemba_report(&a.alphas, a.gamma, a.n, a.t_max, a.points)?;
    let mut w = create(out, "mpemba.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    write_json(out, "mpemba.json", &rep)?;
    Ok(serde_json::to_value(&rep)?)
}

fn krylov_cmd(out: &Path, a: &KrylovArgs) -> Result<Value> {
    let h = read_matrix(&a.h)?;
    let rho0 = match &a.rho0 {
        Some(p) => read_state(p)?,
        None => sff::coherent_gibbs_state(&h, a.beta)?,
    };
    let times = check_grid(a.t_max, a.points)?;
    let kd = krylov::krylov_build(&h, &rho0, &times)?;
    let trace = evolution::propagate_expm(kd.generator(), &rho0, &times)?;
    let basis = qsl::complete_basis(&normalize_state(&rho0))?;
    let scan = krylov::krylov_bound_check(&kd, &trace, &basis)?;
    let series = sff::sff_series(&trace);
    let mut w = create(out, "krylov.csv")?;
    writeln!(w, "t,C_K,SFF,bound_lhs,bound_rhs")?;
    for k in 0..times.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            times[k],
            kd.complexity()[k],
            series[k],
            scan.lhs[k],
            scan.rhs[k]
        )?;
    }
    w.flush()?;
    let tradeoff = krylov::tradeoff_check(&kd, &series).ok();
    let value = json!({
        "krylov_dim": kd.len(),
        "exhausted": kd.exhausted(),
        "lanczos_b": kd.lanczos_b(),
        "normalization_defect": kd.normalization_defect(),
        "bound_max_excess": scan.max_excess(),
        "precursor_max_excess": scan.max_precursor_excess(),
        "tradeoff_max": tradeoff,
    });
    write_json(out, "krylov.json", &value)?;
    Ok(value)
}

#[derive(Debug, Serialize)]
struct Trial {
    index: usize,
    max_trace_deviation: f64,
    min_eigenvalue: f64,
    max_imag_expectation: f64,
    max_sum_rule_defect: f64,
}

fn run_trial(spec: &LindbladSpec, seed: u64, index: usize, times: &[f64]) -> Result<Trial> {
    let mut r = random::stream(seed, index as u64);
    let rho0 = random::density(&mut r, spec.dim());
    let parts = lindblad::build_liouvillian(spec, 0.0)?;
    let trace = evolution::propagate_expm(&parts.full, &rho0, times)?;
    let mut t = Trial {
        index,
        max_trace_deviation: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_imag_expectation: 0.0,
        max_sum_rule_defect: 0.0,
    };
    for (s, n) in trace.states().iter().zip(trace.normalized()) {
        t.max_trace_deviation = t.max_trace_deviation.max((s.matrix().trace().re - 1.0).abs());
        t.min_eigenvalue = t.min_eigenvalue.min(linalg::min_eigenvalue(s.matrix()));
        let lv = parts.full.apply(n.vector())?;
        t.max_imag_expectation = t.max_imag_expectation.max(n.as_vec().dotc(lv.as_vec()).im.abs());
        let dec = qsl::speed_decomposition(&parts, n)?;
        let total = crate::liouville::superop_variance(&parts.full, n)?;
        t.max_sum_rule_defect = t.max_sum_rule_defect.max((dec.total_sq() - total).abs());
    }
    Ok(t)
}

fn validate(out: &Path, seed: u64, a: &ValidateArgs) -> Result<Value> {
    let spec = LindbladSpec::from_json_file(&a.spec)?;
    let times = check_grid(a.t_max, a.points)?;
    let l = lindblad::liouvillian(&spec, 0.0)?;
    // Trace preservation: (1|𝓛 = 0.
    let one = crate::liouville::vectorize(&linalg::identity(spec.dim()))?.into_vec();
    let tp_defect = (l.matrix().adjoint() * &one).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let trials = (0..a.trials)
        .into_par_iter()
        .map(|k| run_trial(&spec, seed, k, &times))
        .collect::<Result<Vec<_>>>()?;
    let ok = tp_defect < 1e-12
        && trials.iter().all(|t| {
            t.max_trace_deviation < 1e-12
                && t.min_eigenvalue >= -1e-10
                && t.max_imag_expectation < 1e-12
                && t.max_sum_rule_defect < 1e-10
        });
    let value = json!({
        "dim": spec.dim(),
        "jumps": spec.jumps().len(),
        "trace_preservation_defect": tp_defect,
        "seed": seed,
        "trials": trials,
        "ok": ok,
    });
    write_json(out, "validate.json", &value)?;
    if !ok {
        return Err(Error::NumericalConsistency {
            quantity: "invariant trials".into(),
            value: trials.iter().map(|t| t.max_sum_rule_defect).fold(tp_defect, f64::max),
        });
    }
    Ok(value)
}

/// Runs one command inside a pool of `--jobs` threads.
pub fn run(cli: &Cli) -> Result<Value> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let out = cli.out.as_path();
    pool.install(|| match &cli.command {
        Command::Evolve(a) => evolve(out, a),
        Command::QslReport(a) => qsl_report(out, a),
        Command::Spectral(a) => spectral_cmd(out, a),
        Command::Optimal(a) => optimal_cmd(out, a),
        Command::Mpemba(a) => mpemba_cmd(out, a),
        Command::Krylov(a) => krylov_cmd(out, a),
        Command::Validate(a) => validate(out, cli.seed, a),
    })
}
