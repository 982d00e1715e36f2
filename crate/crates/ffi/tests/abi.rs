use std::ffi::{CStr, CString};
use std::ptr;

use randgp_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(randgp_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn matrix_round_trip_and_evolution() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(randgp_matrix_new(1, 1, 2, &mut m), RandgpStatus::Ok);
        let key = [2, -1];
        assert_eq!(randgp_matrix_set(m, key.as_ptr(), 2, 3.0, 4.0), RandgpStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(randgp_matrix_get(m, key.as_ptr(), 2, &mut re, &mut im), RandgpStatus::Ok);
        assert_eq!((re, im), (3.0, 4.0));
        let mut norm = 0.0;
        assert_eq!(randgp_matrix_norm(m, 0.0, &mut norm), RandgpStatus::Ok);
        assert!((norm - 5.0).abs() < 1e-15);

        let mut u = ptr::null_mut();
        assert_eq!(randgp_free_evolve(m, 0.7, &mut u), RandgpStatus::Ok);
        randgp_matrix_get(u, key.as_ptr(), 2, &mut re, &mut im);
        // energy |2|² − |−1|² = 3
        let want = randgp::C64::new(3.0, 4.0) * randgp::C64::from_polar(1.0, -0.7 * 3.0);
        assert!((re - want.re).abs() < 1e-14 && (im - want.im).abs() < 1e-14);
        randgp_matrix_free(u);
        randgp_matrix_free(m);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(randgp_matrix_new(1, 9, 2, &mut m), RandgpStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(randgp_matrix_new(1, 1, 2, ptr::null_mut()), RandgpStatus::NullPointer);

        randgp_matrix_new(1, 1, 2, &mut m);
        let far = [5, 0];
        assert_eq!(randgp_matrix_set(m, far.as_ptr(), 2, 1.0, 0.0), RandgpStatus::OutOfBox);
        assert_eq!(randgp_matrix_set(m, far.as_ptr(), 3, 1.0, 0.0), RandgpStatus::InvalidArgument);
        let mut out = ptr::null_mut();
        assert_eq!(randgp_collide(m, 1, 2, true, &mut out), RandgpStatus::OrderMismatch);
        assert!(last_error().contains("order"), "{}", last_error());
        randgp_matrix_free(m);
        randgp_matrix_free(ptr::null_mut());
    }
}

#[test]
fn collisions_and_averages() {
    unsafe {
        let mut m = ptr::null_mut();
        randgp_matrix_new(2, 1, 2, &mut m);
        for (i, k) in [[1, 0, 1, 0], [1, -1, 0, 2], [0, 1, -1, 1]].iter().enumerate() {
            randgp_matrix_set(m, k.as_ptr(), 4, 1.0 + i as f64, 0.5);
        }
        let (mut plain, mut signed) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(randgp_collide(m, 1, 2, true, &mut plain), RandgpStatus::Ok);
        assert_eq!(randgp_randomized_collide(m, 1, 2, true, 3, &mut signed), RandgpStatus::Ok);
        let (mut a, mut b) = (0usize, 0usize);
        randgp_matrix_len(plain, &mut a);
        randgp_matrix_len(signed, &mut b);
        assert!(a > 0);
        assert_eq!(a, b);
        let (mut exact, mut brute) = (0.0, 0.0);
        assert_eq!(randgp_pair_sq_norm(m, 1, 0.5, false, &mut exact), RandgpStatus::Ok);
        assert_eq!(randgp_pair_sq_norm(m, 1, 0.5, true, &mut brute), RandgpStatus::Ok);
        assert!(exact > 0.0 && ((exact - brute) / brute).abs() < 1e-12);
        for p in [plain, signed, m] {
            randgp_matrix_free(p);
        }
    }
}

#[test]
fn config_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let name = CString::new("pairing-oracle").unwrap();
    let text = CString::new("samples = 3\nseed = 0x5\n").unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(randgp_config_new(name.as_ptr(), text.as_ptr(), &mut cfg), RandgpStatus::Ok);
        let (k, v) = (CString::new("samples").unwrap(), CString::new("x").unwrap());
        assert_eq!(randgp_config_set(cfg, k.as_ptr(), v.as_ptr()), RandgpStatus::InvalidArgument);
        let mut passed = false;
        assert_eq!(randgp_run(cfg, out_dir.as_ptr(), &mut passed), RandgpStatus::Ok);
        assert!(passed);
        assert!(dir.path().join("pairing-oracle.csv").exists());
        randgp_config_free(cfg);

        let bad = CString::new("nope = 1").unwrap();
        assert_eq!(randgp_config_new(name.as_ptr(), bad.as_ptr(), &mut cfg), RandgpStatus::Parse);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/randgp.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["randgp_matrix_new", "randgp_run", "randgp_last_error", "RANDGP_STATUS_OUT_OF_BOX"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ return randgp_version() == 0; }}\n")).unwrap();
    match std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(st) => assert!(st.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler; syntax check skipped"),
    }
}
