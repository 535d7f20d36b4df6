//! C ABI over `liouqsl`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns an [`LqStatus`]; the message of the most recent
//! failure on the calling thread is available from [`lq_last_error`].
//! Matrices cross the boundary as separate row-major real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use liouqsl::evolution::{propagate_expm, uniform_grid};
use liouqsl::lindblad::{self, LindbladSpec};
use liouqsl::linalg::{c, CMat, CVec};
use liouqsl::liouville::{liouville_angle, normalize_state, DensityMatrix};
use liouqsl::{qsl, spectral, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LqStatus {
    Ok = 0,
    /// Bad input: dimensions, non-physical states, malformed JSON.
    Invalid = 1,
    /// The numerics failed (integration, defective generator, ...).
    Numerical = 2,
    NullPointer = 3,
    /// Output buffer too small; the required length is still reported.
    BufferTooSmall = 4,
    Panic = 5,
}

pub struct LqSpec(LindbladSpec);

pub struct LqDensity(DensityMatrix);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct LqQslReport {
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

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let s = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(e: Error) -> LqStatus {
    set_error(&e.to_string());
    if e.is_numerical() {
        LqStatus::Numerical
    } else {
        LqStatus::Invalid
    }
}

fn guard(f: impl FnOnce() -> Result<(), LqStatus>) -> LqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside liouqsl");
            LqStatus::Panic
        }
    }
}

fn null(what: &str) -> LqStatus {
    set_error(&format!("null pointer: {what}"));
    LqStatus::NullPointer
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, LqStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), LqStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failed call on this thread; empty when none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a spec from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lq_spec_from_json(json: *const c_char, out: *mut *mut LqSpec) -> LqStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(Error::InvalidArgument("spec JSON is not UTF-8".into())))?;
        let spec = LindbladSpec::from_json_str(text).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqSpec(spec))), "out")
    })
}

/// Thermal amplitude damping with rates `γ(n+1)` and `γn`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lq_spec_amplitude_damping(gamma: f64, n: f64, out: *mut *mut LqSpec) -> LqStatus {
    guard(|| {
        let spec = lindblad::amplitude_damping(gamma, n).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqSpec(spec))), "out")
    })
}

/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lq_spec_dim(spec: *const LqSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `spec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lq_spec_free(spec: *mut LqSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

unsafe fn read_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<CMat, LqStatus> {
    if re.is_null() {
        return Err(null("re"));
    }
    let n = dim * dim;
    let re = std::slice::from_raw_parts(re, n);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, n)) };
    Ok(CMat::from_fn(dim, dim, |i, j| c(re[dim * i + j], im.map_or(0.0, |v| v[dim * i + j]))))
}

/// Validated density matrix from row-major parts; `im` may be null.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim*dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn lq_density_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut LqDensity,
) -> LqStatus {
    guard(|| {
        if dim == 0 {
            return Err(fail(Error::InvalidArgument("dim must be positive".into())));
        }
        let m = read_matrix(dim, re, im)?;
        let rho = DensityMatrix::new(m).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqDensity(rho))), "out")
    })
}

/// `α|0⟩ + √(1−α²)|1⟩` as a density matrix in dimension `dim`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lq_density_alpha(alpha: f64, dim: usize, out: *mut *mut LqDensity) -> LqStatus {
    guard(|| {
        let rho = liouqsl::cli::alpha_state(alpha, dim).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqDensity(rho))), "out")
    })
}

/// # Safety
/// `rho` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lq_density_dim(rho: *const LqDensity) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// Copies the matrix out row-major; both buffers need `capacity >= dim*dim`.
///
/// # Safety
/// Buffers must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn lq_density_get(
    rho: *const LqDensity,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
) -> LqStatus {
    guard(|| {
        let m = borrow(rho, "rho")?.0.matrix();
        let d = m.nrows();
        if capacity < d * d {
            set_error(&format!("need {} entries, capacity {capacity}", d * d));
            return Err(LqStatus::BufferTooSmall);
        }
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for i in 0..d {
            for j in 0..d {
                *re.add(d * i + j) = m[(i, j)].re;
                *im.add(d * i + j) = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `rho` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lq_density_free(rho: *mut LqDensity) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// Liouville angle between two states.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_liouville_angle(a: *const LqDensity, b: *const LqDensity, out: *mut f64) -> LqStatus {
    guard(|| {
        let th = liouville_angle(&borrow(a, "a")?.0, &borrow(b, "b")?.0).map_err(fail)?;
        write(out, th, "out")
    })
}

/// Evolution speed `Δ𝓛` of `rho` under the generator at time `t`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_speed(spec: *const LqSpec, rho: *const LqDensity, t: f64, out: *mut f64) -> LqStatus {
    guard(|| {
        let spec = &borrow(spec, "spec")?.0;
        let rho = &borrow(rho, "rho")?.0;
        if rho.dim() != spec.dim() {
            return Err(fail(Error::Dimension(format!("state d={} vs spec d={}", rho.dim(), spec.dim()))));
        }
        let l = lindblad::liouvillian(spec, t).map_err(fail)?;
        let v = qsl::speed(&l, &normalize_state(rho)).map_err(fail)?;
        write(out, v, "out")
    })
}

/// Speed-limit report for `rho` propagated to `t_max` on `points` (odd) grid points.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_qsl_report(
    spec: *const LqSpec,
    rho: *const LqDensity,
    t_max: f64,
    points: usize,
    out: *mut LqQslReport,
) -> LqStatus {
    guard(|| {
        let spec = &borrow(spec, "spec")?.0;
        let rho = &borrow(rho, "rho")?.0;
        let times = uniform_grid(t_max, points).map_err(fail)?;
        let l = lindblad::liouvillian(spec, 0.0).map_err(fail)?;
        let trace = propagate_expm(&l, rho, &times).map_err(fail)?;
        let basis = qsl::complete_basis(&normalize_state(rho)).map_err(fail)?;
        let r = qsl::exact_qsl(&trace, &l, &basis).map_err(fail)?;
        let report = LqQslReport {
            t: r.t,
            theta: r.theta,
            wootters_length: r.wootters_length,
            avg_speed: r.avg_speed,
            avg_nc_speed: r.avg_nc_speed,
            bound_mt: r.bound_mt,
            bound_nc: r.bound_nc,
            exact_time: r.exact_time,
            bound_opnorm: r.bound_opnorm,
            bound_hsnorm: r.bound_hsnorm,
            efficiency: r.efficiency,
        };
        write(out, report, "out")
    })
}

/// Liouvillian eigenvalues, slowest first. `count` receives d² even when
/// the buffers are too small.
///
/// # Safety
/// Buffers must hold `capacity` doubles; `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lq_eigenvalues(
    spec: *const LqSpec,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> LqStatus {
    guard(|| {
        let spec = &borrow(spec, "spec")?.0;
        let l = lindblad::liouvillian(spec, 0.0).map_err(fail)?;
        let sd = spectral::spectral_decompose(&l).map_err(fail)?;
        let lam = sd.eigenvalues();
        write(count, lam.len(), "count")?;
        if capacity < lam.len() {
            set_error(&format!("need {} entries, capacity {capacity}", lam.len()));
            return Err(LqStatus::BufferTooSmall);
        }
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for (k, z) in lam.iter().enumerate() {
            *re.add(k) = z.re;
            *im.add(k) = z.im;
        }
        Ok(())
    })
}

/// Unique steady state of a static spec.
///
/// # Safety
/// `spec` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_steady_state(spec: *const LqSpec, out: *mut *mut LqDensity) -> LqStatus {
    guard(|| {
        let spec = &borrow(spec, "spec")?.0;
        let l = lindblad::liouvillian(spec, 0.0).map_err(fail)?;
        let sd = spectral::spectral_decompose(&l).map_err(fail)?;
        let ss = spectral::steady_state(&sd).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqDensity(ss))), "out")
    })
}

/// Pure-state density matrix from amplitude parts of length `dim`; `im` may be null.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn lq_density_pure(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut LqDensity,
) -> LqStatus {
    guard(|| {
        if re.is_null() {
            return Err(null("re"));
        }
        let r = std::slice::from_raw_parts(re, dim);
        let i = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, dim)) };
        let psi = CVec::from_fn(dim, |k, _| c(r[k], i.map_or(0.0, |v| v[k])));
        let rho = DensityMatrix::from_pure(&psi).map_err(fail)?;
        write(out, Box::into_raw(Box::new(LqDensity(rho))), "out")
    })
}
