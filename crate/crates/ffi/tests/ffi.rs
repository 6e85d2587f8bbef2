use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use charp_qkz_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cq_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    cq_string_free(s);
    out
}

fn params(p: u64, n: usize, kappa: &str) -> Result<*mut CqParams, CqStatus> {
    let k = CString::new(kappa).unwrap();
    let mut out = ptr::null_mut();
    match unsafe { cq_params_new(p, n, k.as_ptr(), &mut out) } {
        CqStatus::Ok => Ok(out),
        s => Err(s),
    }
}

#[test]
fn solve_through_the_c_interface() {
    let prm = params(5, 2, "3").unwrap();
    unsafe {
        let (mut k, mut d) = (0u64, 0usize);
        assert_eq!(cq_params_k(prm, &mut k), CqStatus::Ok);
        assert_eq!(cq_params_d(prm, &mut d), CqStatus::Ok);
        assert_eq!((k, d), (3, 1));

        let mut sols = ptr::null_mut();
        assert_eq!(cq_solve(prm, &mut sols), CqStatus::Ok);
        let mut len = 0;
        assert_eq!(cq_solutions_len(sols, &mut len), CqStatus::Ok);
        assert_eq!(len, 1);

        let mut s = ptr::null_mut();
        assert_eq!(cq_solution_coordinate(sols, 0, 0, &mut s), CqStatus::Ok);
        assert_eq!(take(s), "-2*z1 + 2*z2 + 2");
        assert_eq!(cq_solution_coordinate(sols, 0, 2, &mut s), CqStatus::OutOfRange);
        assert!(last_error().contains("no coordinate"));

        // Q^4 at z = (1, 0): (-2 + 2, 2 - 2) = (0, 0); at z = (g, 0): (-2g + 2, 2g - 2)
        let z = [0u64, 1, 0, 0];
        let mut out = [9u64; 4];
        assert_eq!(cq_solution_eval(sols, 0, z.as_ptr(), 4, out.as_mut_ptr(), 4), CqStatus::Ok);
        assert_eq!(out, [2, 3, 3, 2]);
        assert_eq!(cq_solution_eval(sols, 0, z.as_ptr(), 3, out.as_mut_ptr(), 4), CqStatus::InvalidArgument);

        assert_eq!(cq_solutions_json(sols, &mut s), CqStatus::Ok);
        let json = take(s);
        assert!(json.contains("\"schema\":\"charp-qkz/1\""));
        assert!(json.contains("-2*z1 + 2*z2 + 2"));

        cq_solutions_free(sols);
        cq_params_free(prm);
    }
}

#[test]
fn errors_are_reported() {
    assert_eq!(params(4, 2, "1").unwrap_err(), CqStatus::NotPrime);
    assert!(last_error().contains("not prime"));
    assert_eq!(params(5, 2, "x").unwrap_err(), CqStatus::InvalidArgument);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cq_params_new(5, 2, ptr::null(), &mut out) }, CqStatus::NullPointer);
    // success clears the message
    let prm = params(5, 2, "1+1*g").unwrap();
    assert_eq!(last_error(), "");
    let mut k = 0;
    assert_eq!(unsafe { cq_params_k(prm, &mut k) }, CqStatus::Domain);
    unsafe {
        cq_params_free(prm);
        cq_params_free(ptr::null_mut());
        cq_string_free(ptr::null_mut());
    }
}

#[test]
fn verify_sweep() {
    let primes = [5u64];
    let ns = [2usize, 3];
    let suites = CString::new("rmatrix,solutions").unwrap();
    let mut passed = false;
    let mut report = ptr::null_mut();
    let status = unsafe {
        cq_verify(
            primes.as_ptr(),
            1,
            ns.as_ptr(),
            2,
            ptr::null(),
            suites.as_ptr(),
            1,
            5,
            &mut passed,
            &mut report,
        )
    };
    assert_eq!(status, CqStatus::Ok);
    assert!(passed);
    let json = unsafe { take(report) };
    assert!(json.contains("\"p=5,n=3,kappa=2\""));

    let bad = CString::new("nope").unwrap();
    let status = unsafe {
        cq_verify(primes.as_ptr(), 1, ns.as_ptr(), 2, ptr::null(), bad.as_ptr(), 1, 5, &mut passed, &mut report)
    };
    assert_eq!(status, CqStatus::InvalidArgument);
}

#[test]
fn header_is_valid_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/charp_qkz.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["cq_params_new", "cq_solve", "cq_verify", "cq_last_error", "CQ_STATUS_NOT_PRIME", "typedef struct CqParams"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // compile a small translation unit against the header when a C compiler exists
    let Ok(cc) = Command::new("cc").arg("--version").output() else { return };
    if !cc.status.success() {
        return;
    }
    let dir = std::env::temp_dir().join(format!("charp-qkz-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("use.c");
    std::fs::write(
        &src,
        "#include \"charp_qkz.h\"\nint main(void) { CqParams *p = 0; CqStatus s = cq_params_new(5, 2, \"3\", &p); return s == CQ_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
