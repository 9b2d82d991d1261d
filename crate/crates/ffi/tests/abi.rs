use std::ffi::{CStr, CString};
use std::ptr;

use dirac_lap_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dlap_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn matrices_round_trip_through_the_abi() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dlap_matrices_new(3, &mut h) }, DlapStatus::Ok);
    let s = unsafe { dlap_matrices_spinor_dim(h) };
    assert_eq!(s, 4);
    let mut buf = vec![0.0; 2 * s * s];
    assert_eq!(unsafe { dlap_matrices_get(h, 3, buf.as_mut_ptr(), buf.len()) }, DlapStatus::Ok);
    // beta = diag(1, 1, -1, -1)
    let diag: Vec<f64> = (0..s).map(|i| buf[2 * (i * s + i)]).collect();
    assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    assert_eq!(unsafe { dlap_matrices_get(h, 4, buf.as_mut_ptr(), buf.len()) }, DlapStatus::Invalid);
    assert!(last_error().contains("out of range"));
    assert_eq!(unsafe { dlap_matrices_get(h, 0, buf.as_mut_ptr(), 3) }, DlapStatus::Invalid);
    unsafe { dlap_matrices_free(h) };
    unsafe { dlap_matrices_free(ptr::null_mut()) };
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { dlap_matrices_new(2, ptr::null_mut()) }, DlapStatus::NullPointer);
    assert!(last_error().contains("out"));
    assert_eq!(unsafe { dlap_run(ptr::null(), ptr::null()) }, DlapStatus::NullPointer);
    assert_eq!(unsafe { dlap_matrices_spinor_dim(ptr::null()) }, 0);
}

#[test]
fn bad_arguments_are_invalid() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dlap_matrices_new(1, &mut h) }, DlapStatus::Invalid);
    assert!(h.is_null());
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { dlap_schrodinger_kernel(2, 1.0, 1.0, 0, &mut re, &mut im) }, DlapStatus::Invalid);
    assert_eq!(unsafe { dlap_schrodinger_kernel(3, 1.0, 1.0, 1, &mut re, &mut im) }, DlapStatus::Ok);
    let want = 1.0_f64.cos() / (4.0 * std::f64::consts::PI);
    assert!((re - want).abs() < 1e-14);
    assert!(last_error().is_empty());
}

#[test]
fn config_errors_are_listed() {
    let bad = CString::new(r#"{"n":2,"subcommand":"lap-sweep","sigma":0.4,"grid":{"L":8,"points":32},"lambda_grid":[]}"#).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { dlap_config_parse(bad.as_ptr(), &mut c) }, DlapStatus::Invalid);
    let msg = last_error();
    assert!(msg.contains("sigma") && msg.contains("lambda_grid"), "{msg}");
}

#[test]
fn run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(r#"{"n":2,"subcommand":"kernel-dump","z":1.5,"r_grid":[0.2,1.0]}"#).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { dlap_config_parse(cfg.as_ptr(), &mut c) }, DlapStatus::Ok);
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { dlap_run(c, out.as_ptr()) }, DlapStatus::Ok);
    unsafe { dlap_config_free(c) };
    assert!(dir.path().join("kernel.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn hamiltonian_spectrum() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dlap_hamiltonian_new(2, 1.0, 4.0, 6, ptr::null(), &mut h) }, DlapStatus::Ok);
    let d = unsafe { dlap_hamiltonian_dim(h) };
    assert_eq!(d, 72);
    let mut ev = vec![0.0; d];
    assert_eq!(unsafe { dlap_hamiltonian_eigenvalues(h, ev.as_mut_ptr(), d) }, DlapStatus::Ok);
    assert!(ev.iter().all(|e| e.abs() >= 1.0 - 1e-10));
    assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(unsafe { dlap_hamiltonian_bound_states(h) }, 0);
    unsafe { dlap_hamiltonian_free(h) };

    let well = CString::new(r#"{"kind":"gaussian_bump","coupling":-3.0,"width":1.0}"#).unwrap();
    assert_eq!(unsafe { dlap_hamiltonian_new(2, 1.0, 4.0, 8, well.as_ptr(), &mut h) }, DlapStatus::Ok);
    assert!(unsafe { dlap_hamiltonian_bound_states(h) } >= 1);
    unsafe { dlap_hamiltonian_free(h) };

    let not_periodic_ok = CString::new(r#"{"kind":"nonsense"}"#).unwrap();
    assert_eq!(
        unsafe { dlap_hamiltonian_new(2, 1.0, 4.0, 8, not_periodic_ok.as_ptr(), &mut h) },
        DlapStatus::Invalid
    );
}

#[test]
fn memory_cap_is_numerical() {
    // 2 * 200^2 spinor entries would need far more than the default cap.
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { dlap_hamiltonian_new(2, 0.0, 4.0, 200, ptr::null(), &mut h) }, DlapStatus::Numerical);
    assert!(last_error().contains("memory cap"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dirac_lap.h")).unwrap();
    for name in [
        "dlap_last_error",
        "dlap_matrices_new",
        "dlap_config_parse",
        "dlap_run",
        "dlap_hamiltonian_new",
        "DLAP_STATUS_NUMERICAL",
        "typedef struct DlapConfig DlapConfig",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let version = unsafe { CStr::from_ptr(dlap_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}
