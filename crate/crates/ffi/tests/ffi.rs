use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use srgof_ffi::*;

fn draw(spec: &str, n: usize, seed: u64) -> *mut SrgofSample {
    let spec = CString::new(spec).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { srgof_sample_draw(spec.as_ptr(), n, seed, &mut out) };
    assert_eq!(st, SrgofStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(srgof_last_error()) }.to_string_lossy().into_owned()
}

fn defaults() -> SrgofTestParams {
    let mut p = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { srgof_params_default(p.as_mut_ptr()) }, SrgofStatus::Ok);
    unsafe { p.assume_init() }
}

#[test]
fn sample_roundtrip() {
    let data = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { srgof_sample_new(data.as_ptr(), 3, 2, &mut s) }, SrgofStatus::Ok);
    unsafe {
        assert_eq!(srgof_sample_len(s), 3);
        assert_eq!(srgof_sample_dim(s), 2);
        srgof_sample_free(s);
        srgof_sample_free(ptr::null_mut());
        assert_eq!(srgof_sample_len(ptr::null()), 0);
    }
}

#[test]
fn rejects_bad_input() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { srgof_sample_new(ptr::null(), 3, 2, &mut s) }, SrgofStatus::NullPointer);
    assert!(s.is_null());
    assert!(last_error().contains("data"));

    let bad = [1.0, f64::NAN];
    assert_eq!(unsafe { srgof_sample_new(bad.as_ptr(), 2, 1, &mut s) }, SrgofStatus::DataError);

    let spec = CString::new("nosuch:d=1").unwrap();
    let st = unsafe { srgof_sample_draw(spec.as_ptr(), 10, 0, &mut s) };
    assert_ne!(st, SrgofStatus::Ok);
    assert!(!last_error().is_empty());

    let x = draw("gaussian:d=1", 50, 1);
    let mut p = defaults();
    let method = CString::new("bogus").unwrap();
    p.method = method.as_ptr();
    let mut d = SrgofDecision::default();
    let st = unsafe { srgof_test(&p, x, x, x, &mut d) };
    assert_eq!(st, SrgofStatus::InvalidArgument);

    let mmd = CString::new("mmd").unwrap();
    p.method = mmd.as_ptr();
    let st = unsafe { srgof_test(&p, x, ptr::null(), ptr::null(), &mut d) };
    assert_eq!(st, SrgofStatus::NullPointer);
    assert!(last_error().contains("null_spec"));
    unsafe { srgof_sample_free(x) };
}

#[test]
fn srpt_detects_shift_and_is_deterministic() {
    let x = draw("gaussian:d=1,shift=1.5", 100, 11);
    let x0 = draw("gaussian:d=1", 100, 12);
    let y0 = draw("gaussian:d=1", 100, 13);
    let mut p = defaults();
    let lambdas = CString::new("1e-3").unwrap();
    p.lambdas = lambdas.as_ptr();
    p.seed = 5;
    let mut a = SrgofDecision::default();
    let mut b = SrgofDecision::default();
    unsafe {
        assert_eq!(srgof_test(&p, x, x0, y0, &mut a), SrgofStatus::Ok, "{}", last_error());
        assert_eq!(srgof_test(&p, x, x0, y0, &mut b), SrgofStatus::Ok);
        srgof_sample_free(x);
        srgof_sample_free(x0);
        srgof_sample_free(y0);
    }
    assert!(a.reject);
    assert_eq!(a, b);
    assert_eq!(a.alpha, 0.05);
}

#[test]
fn mmd_accepts_null_data() {
    let x = draw("gaussian:d=1", 200, 21);
    let mut p = defaults();
    let mmd = CString::new("mmd").unwrap();
    let null = CString::new("gaussian:d=1").unwrap();
    p.method = mmd.as_ptr();
    p.null_spec = null.as_ptr();
    let mut d = SrgofDecision::default();
    assert_eq!(unsafe { srgof_test(&p, x, ptr::null(), ptr::null(), &mut d) }, SrgofStatus::Ok, "{}", last_error());
    assert!(!d.reject);
    assert!(d.critical_value > 0.0);
    unsafe { srgof_sample_free(x) };
}

#[test]
fn power_csv_from_toml() {
    let toml = CString::new(
        r#"
panel = "ffi"
null = "gaussian:d=1"
alternative = "gaussian:d=1,shift=0"
n = 40
reps = 4
seed = 3
sweep = { parameter = "shift", values = [0.0, 2.0] }
[[methods]]
method = "mmd"
lambdas = [1e-3]
"#,
    )
    .unwrap();
    let mut csv = ptr::null_mut();
    let st = unsafe { srgof_power_csv(toml.as_ptr(), 1, &mut csv) };
    assert_eq!(st, SrgofStatus::Ok, "{}", last_error());
    let text = unsafe { CStr::from_ptr(csv) }.to_string_lossy().into_owned();
    unsafe { srgof_string_free(csv) };
    assert!(text.starts_with("panel,"));
    assert_eq!(text.lines().count(), 3);

    let bad = CString::new("panel = 1").unwrap();
    assert_eq!(unsafe { srgof_power_csv(bad.as_ptr(), 1, &mut csv) }, SrgofStatus::ConfigError);
    assert!(csv.is_null());
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/srgof.h")).unwrap();
    for name in [
        "typedef struct SrgofSample SrgofSample",
        "SRGOF_STATUS_OK = 0",
        "SrgofStatus srgof_test(",
        "SrgofStatus srgof_sample_new(",
        "void srgof_sample_free(",
        "const char *srgof_last_error(void)",
        "SrgofStatus srgof_power_csv(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn example_c_compiles_against_header() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Ok(out) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("c/example.c"))
        .output()
    else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
