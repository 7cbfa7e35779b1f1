use std::ffi::{c_char, CStr, CString};
use std::ptr;

use orbitkit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(orbitkit_last_error()) }.to_str().unwrap().to_string()
}

fn take_json(p: *mut c_char) -> serde_json::Value {
    assert!(!p.is_null());
    let v = serde_json::from_str(unsafe { CStr::from_ptr(p) }.to_str().unwrap()).unwrap();
    unsafe { orbitkit_string_free(p) };
    v
}

fn rigid() -> *mut OrbitkitBundle {
    let mut b = ptr::null_mut();
    let s = unsafe { orbitkit_rigid_body_new(1.0, -1.0, 2.0, 1.0, &mut b) };
    assert_eq!(s, OrbitkitStatus::Ok);
    b
}

#[test]
fn rigid_body_check_through_the_abi() {
    let b = rigid();
    assert_eq!(unsafe { orbitkit_bundle_dimension(b) }, 3);
    let fam = CString::new("e1").unwrap();
    let mut out = ptr::null_mut();
    let s = unsafe { orbitkit_check(b, fam.as_ptr(), 1.0, &mut out) };
    assert_eq!(s, OrbitkitStatus::Ok);
    let report = take_json(out);
    assert_eq!(report["verdict"], true);
    assert!((report["omegas"][0].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(last_error(), "");
    unsafe { orbitkit_bundle_free(b) };
}

#[test]
fn equilibrium_buffer_is_filled() {
    let b = rigid();
    let fam = CString::new("e3").unwrap();
    let mut x = [9.0; 3];
    let s = unsafe { orbitkit_equilibrium(b, fam.as_ptr(), 2.0, x.as_mut_ptr(), 3) };
    assert_eq!(s, OrbitkitStatus::Ok);
    assert_eq!(x, [0.0, 0.0, 2.0]);
    let s = unsafe { orbitkit_equilibrium(b, fam.as_ptr(), 2.0, x.as_mut_ptr(), 2) };
    assert_eq!(s, OrbitkitStatus::InvalidArgument);
    let s = unsafe { orbitkit_equilibrium(b, fam.as_ptr(), 0.0, x.as_mut_ptr(), 3) };
    assert_eq!(s, OrbitkitStatus::InvalidInput);
    assert!(last_error().contains("M must be nonzero"));
    unsafe { orbitkit_bundle_free(b) };
}

#[test]
fn clebsch_orbit_through_the_abi() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_clebsch_new(1.0, 2.0, 3.0, &mut b) }, OrbitkitStatus::Ok);
    let fam = CString::new("e1").unwrap();
    let mut out = ptr::null_mut();
    let s = unsafe { orbitkit_find_orbit(b, fam.as_ptr(), 1.0, 0, 0.05, &mut out) };
    assert_eq!(s, OrbitkitStatus::Ok, "{}", last_error());
    let orbit = take_json(out);
    let t = orbit["period"].as_f64().unwrap();
    assert!((t - 2.0 * std::f64::consts::PI / 2f64.sqrt()).abs() < 0.01, "{t}");
    assert_eq!(orbit["floquet_multipliers"][0].as_array().unwrap().len(), 2);

    let s = unsafe { orbitkit_find_orbit(b, fam.as_ptr(), 1.0, 5, 0.05, &mut out) };
    assert_eq!(s, OrbitkitStatus::InvalidInput);
    assert!(last_error().contains("omega_index"));
    unsafe { orbitkit_bundle_free(b) };
}

#[test]
fn failed_hypothesis_still_returns_report() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_clebsch_new(2.0, 1.0, 3.0, &mut b) }, OrbitkitStatus::Ok);
    let fam = CString::new("e1").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_check(b, fam.as_ptr(), 1.0, &mut out) }, OrbitkitStatus::Ok);
    let report = take_json(out);
    assert_eq!(report["condition_iii"], false);
    assert_eq!(report["verdict"], false);
    unsafe { orbitkit_bundle_free(b) };
}

#[test]
fn constructor_errors_map_to_status() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_rigid_body_new(1.0, -1.0, 0.0, 1.0, &mut b) }, OrbitkitStatus::InvalidInput);
    assert!(last_error().contains("alpha undefined"));
    assert!(b.is_null());
    assert_eq!(unsafe { orbitkit_clebsch_new(1.0, 1.0, 3.0, &mut b) }, OrbitkitStatus::InvalidInput);
    assert_eq!(unsafe { orbitkit_rigid_body_new(1.0, -1.0, 2.0, 1.0, ptr::null_mut()) }, OrbitkitStatus::InvalidArgument);
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    let fam = CString::new("e1").unwrap();
    assert_eq!(unsafe { orbitkit_check(ptr::null(), fam.as_ptr(), 1.0, &mut out) }, OrbitkitStatus::InvalidArgument);
    let b = rigid();
    assert_eq!(unsafe { orbitkit_check(b, ptr::null(), 1.0, &mut out) }, OrbitkitStatus::InvalidArgument);
    assert_eq!(unsafe { orbitkit_check(b, fam.as_ptr(), 1.0, ptr::null_mut()) }, OrbitkitStatus::InvalidArgument);
    assert_eq!(unsafe { orbitkit_bundle_dimension(ptr::null()) }, 0);
    unsafe {
        orbitkit_bundle_free(b);
        orbitkit_bundle_free(ptr::null_mut());
        orbitkit_string_free(ptr::null_mut());
    }
}

#[test]
fn bundle_from_json_config() {
    let json = CString::new(r#"{"system": "clebsch", "params": {"a1": 1, "a2": 2, "a3": 3}}"#).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_bundle_from_json(json.as_ptr(), &mut b) }, OrbitkitStatus::Ok);
    assert_eq!(unsafe { orbitkit_bundle_dimension(b) }, 6);
    unsafe { orbitkit_bundle_free(b) };

    let bad = CString::new(r#"{"system": "clebsch", "oops": 1}"#).unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { orbitkit_bundle_from_json(bad.as_ptr(), &mut b) }, OrbitkitStatus::InvalidInput);
    assert!(last_error().contains("oops"));
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(orbitkit_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/orbitkit.h");
    for name in [
        "orbitkit_rigid_body_new",
        "orbitkit_clebsch_new",
        "orbitkit_bundle_from_json",
        "orbitkit_bundle_free",
        "orbitkit_bundle_dimension",
        "orbitkit_equilibrium",
        "orbitkit_check",
        "orbitkit_find_orbit",
        "orbitkit_string_free",
        "orbitkit_last_error",
        "orbitkit_version",
        "typedef struct OrbitkitBundle OrbitkitBundle",
        "ORBITKIT_STATUS_NEGATIVE = 3",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
