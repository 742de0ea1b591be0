use std::ffi::{CStr, CString};
use std::ptr;

use omegascale_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(os_last_error()) }.to_string_lossy().into_owned()
}

fn bm() -> *mut OsModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { os_model_brownian(1.0, std::f64::consts::SQRT_2, &mut m) }, OsStatus::Ok);
    m
}

#[test]
fn constant_omega_table_matches_classical() {
    unsafe {
        let m = bm();
        let mut o = ptr::null_mut();
        assert_eq!(os_omega_constant(0.5, &mut o), OsStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(os_scale_table_build(m, o, 2.0, 0.01, &mut t), OsStatus::Ok);
        assert_eq!(os_scale_table_len(t), 201);
        for x in [0.0, 0.3, 1.0, 1.99] {
            let (mut w, mut z, mut wq, mut zq) = (0.0, 0.0, 0.0, 0.0);
            assert_eq!(os_scale_table_eval(t, x, &mut w, &mut z), OsStatus::Ok);
            assert_eq!(os_classical_scale(m, 0.5, x, &mut wq, &mut zq), OsStatus::Ok);
            assert!((w - wq).abs() < 1e-8 && (z - zq).abs() < 1e-8, "{x}: {w} {wq} {z} {zq}");
        }
        let mut xs = vec![0.0; 300];
        let mut ws = vec![0.0; 300];
        let mut n = 0;
        assert_eq!(os_scale_table_copy(t, xs.as_mut_ptr(), ws.as_mut_ptr(), ptr::null_mut(), 300, &mut n), OsStatus::Ok);
        assert_eq!(n, 201);
        assert_eq!(xs[200], 2.0);
        let mut w = 0.0;
        assert_eq!(os_scale_table_eval(t, 5.0, &mut w, ptr::null_mut()), OsStatus::Domain);
        assert!(!last_error().is_empty());
        os_scale_table_free(t);
        os_omega_free(o);
        os_model_free(m);
    }
}

#[test]
fn exit_transforms_through_solver() {
    unsafe {
        let m = bm();
        let mut o = ptr::null_mut();
        assert_eq!(os_omega_band(0.3, 1.0, 0.5, 1.2, &mut o), OsStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(os_solver_new(m, o, 2.0, 0.002, &mut s), OsStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(os_solver_exit(s, OsExitKind::TwoSidedUp, 1.5, 1.5, 0.0, &mut a, ptr::null_mut()), OsStatus::Ok);
        assert_eq!(a, 1.0);
        assert_eq!(os_solver_exit(s, OsExitKind::TwoSidedUp, 0.7, 1.5, 0.0, &mut a, ptr::null_mut()), OsStatus::Ok);
        assert_eq!(os_solver_exit(s, OsExitKind::TwoSidedDown, 0.7, 1.5, 0.0, &mut b, ptr::null_mut()), OsStatus::Ok);
        assert!(a > 0.0 && b > 0.0 && a + b < 1.0);
        let mut surv = 0.0;
        assert_eq!(os_solver_exit(s, OsExitKind::TwoSidedUp, 0.7, 1.5, 0.0, &mut a, &mut surv), OsStatus::Ok);
        assert!(surv.is_nan());
        assert_eq!(os_solver_exit(s, OsExitKind::TwoSidedUp, 1.8, 1.5, 0.0, &mut a, ptr::null_mut()), OsStatus::Domain);
        assert!(last_error().contains("x <= c"));
        os_solver_free(s);
        os_omega_free(o);
        os_model_free(m);
    }
}

#[test]
fn json_constructors() {
    unsafe {
        let js = CString::new(r#"{"type": "cl", "mu": 2.0, "vartheta": 1.0, "rho": 1.5}"#).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(os_model_from_json(js.as_ptr(), &mut m), OsStatus::Ok);
        let mut psi = 0.0;
        assert_eq!(os_model_psi(m, 1.0, &mut psi), OsStatus::Ok);
        assert!((psi - (2.0 - 1.0 / 2.5)).abs() < 1e-14);
        let js = CString::new(r#"{"type": "band", "p": 0.1, "q": 0.4, "a": 0.2, "b": 0.6}"#).unwrap();
        let mut o = ptr::null_mut();
        assert_eq!(os_omega_from_json(js.as_ptr(), &mut o), OsStatus::Ok);
        os_omega_free(o);
        os_model_free(m);

        let bad = CString::new("{\"type\": ").unwrap();
        let mut m2 = ptr::null_mut();
        assert_eq!(os_model_from_json(bad.as_ptr(), &mut m2), OsStatus::InvalidInput);
        assert!(m2.is_null());
        assert_eq!(os_model_from_json(ptr::null(), &mut m2), OsStatus::NullPointer);
    }
}

#[test]
fn invalid_input_and_null_handles() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(os_model_brownian(1.0, -1.0, &mut m), OsStatus::InvalidInput);
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        let mut o = ptr::null_mut();
        assert_eq!(os_omega_constant(-0.1, &mut o), OsStatus::InvalidInput);
        let mut w = 0.0;
        assert_eq!(os_scale_table_eval(ptr::null(), 0.5, &mut w, ptr::null_mut()), OsStatus::NullPointer);
        assert_eq!(os_scale_table_len(ptr::null()), 0);
        assert_eq!(os_model_brownian(1.0, 1.0, ptr::null_mut()), OsStatus::NullPointer);
        os_model_free(ptr::null_mut());
        os_solver_free(ptr::null_mut());

        let ok = bm();
        assert_eq!(os_model_psi(ok, 0.0, &mut w), OsStatus::Ok);
        assert_eq!(last_error(), "");
        os_model_free(ok);
    }
}
