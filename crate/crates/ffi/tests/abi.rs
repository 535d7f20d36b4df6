use std::ffi::{CStr, CString};
use std::ptr;

use liouqsl_ffi::*;

const SPEC: &str = r#"{"dim": 2,
  "hamiltonian": {"dim": 2, "re": [[0.0, 0.0], [0.0, 0.0]]},
  "jumps": [{"rate": 0.01, "operator": {"dim": 2, "re": [[0.0, 1.0], [0.0, 0.0]]}}]}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lq_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn spec_roundtrip_and_spectrum() {
    let json = CString::new(SPEC).unwrap();
    let mut spec = ptr::null_mut();
    unsafe {
        assert_eq!(lq_spec_from_json(json.as_ptr(), &mut spec), LqStatus::Ok);
        assert_eq!(lq_spec_dim(spec), 2);
        let mut count = 0usize;
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(
            lq_eigenvalues(spec, re.as_mut_ptr(), im.as_mut_ptr(), 1, &mut count),
            LqStatus::BufferTooSmall
        );
        assert_eq!(count, 4);
        assert_eq!(lq_eigenvalues(spec, re.as_mut_ptr(), im.as_mut_ptr(), 4, &mut count), LqStatus::Ok);
        let expect = [0.0, -0.005, -0.005, -0.01];
        for k in 0..4 {
            assert!((re[k] - expect[k]).abs() < 1e-14 && im[k].abs() < 1e-14);
        }
        let mut ss = ptr::null_mut();
        assert_eq!(lq_steady_state(spec, &mut ss), LqStatus::Ok);
        assert_eq!(lq_density_get(ss, re.as_mut_ptr(), im.as_mut_ptr(), 4), LqStatus::Ok);
        assert!((re[0] - 1.0).abs() < 1e-10 && re[3].abs() < 1e-10);
        lq_density_free(ss);
        lq_spec_free(spec);
    }
}

#[test]
fn speed_and_report() {
    let mut spec = ptr::null_mut();
    let mut rho = ptr::null_mut();
    unsafe {
        assert_eq!(lq_spec_amplitude_damping(0.01, 0.0, &mut spec), LqStatus::Ok);
        assert_eq!(lq_density_alpha(0.0, 2, &mut rho), LqStatus::Ok);
        let mut v = 0.0;
        assert_eq!(lq_speed(spec, rho, 0.0, &mut v), LqStatus::Ok);
        assert!((v - 0.01).abs() < 1e-14);
        let mut rep = LqQslReport::default();
        assert_eq!(lq_qsl_report(spec, rho, 300.0, 2001, &mut rep), LqStatus::Ok);
        assert!((rep.t - 300.0).abs() < 1e-12);
        assert!(rep.bound_mt <= rep.t + 1e-8 && rep.bound_hsnorm <= rep.bound_opnorm + 1e-8);
        assert!(((rep.exact_time - rep.t) / rep.t).abs() < 1e-4);
        assert_eq!(lq_qsl_report(spec, rho, 300.0, 2000, &mut rep), LqStatus::Numerical);
        lq_density_free(rho);
        lq_spec_free(spec);
    }
}

#[test]
fn angles_between_states() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        let up = [1.0, 0.0];
        let down = [0.0, 1.0];
        assert_eq!(lq_density_pure(2, up.as_ptr(), ptr::null(), &mut a), LqStatus::Ok);
        assert_eq!(lq_density_pure(2, down.as_ptr(), ptr::null(), &mut b), LqStatus::Ok);
        let mut th = 0.0;
        assert_eq!(lq_liouville_angle(a, b, &mut th), LqStatus::Ok);
        assert!((th - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        lq_density_free(a);
        lq_density_free(b);
    }
}

#[test]
fn errors_are_reported() {
    let mut spec = ptr::null_mut();
    let mut rho = ptr::null_mut();
    unsafe {
        let bad = CString::new("{\"dim\": 2}").unwrap();
        assert_eq!(lq_spec_from_json(bad.as_ptr(), &mut spec), LqStatus::Invalid);
        assert!(!last_error().is_empty());
        assert_eq!(lq_spec_from_json(ptr::null(), &mut spec), LqStatus::NullPointer);
        assert!(last_error().contains("null"));
        let not_state = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(lq_density_new(2, not_state.as_ptr(), ptr::null(), &mut rho), LqStatus::Invalid);
        assert_eq!(lq_spec_amplitude_damping(-1.0, 0.0, &mut spec), LqStatus::Invalid);
        assert_eq!(lq_spec_dim(ptr::null()), 0);
        lq_spec_free(ptr::null_mut());
        lq_density_free(ptr::null_mut());
        let mut out = 0.0;
        assert_eq!(lq_speed(ptr::null(), ptr::null(), 0.0, &mut out), LqStatus::NullPointer);
    }
}
