use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use malab_ffi::*;

fn last_error() -> String {
    let p = malab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn regime_and_scalars() {
    let mut r = MalabRegime::default();
    assert_eq!(unsafe { malab_regime(2.0, &mut r) }, MalabStatus::Ok);
    assert_eq!(r.beta, 3.0);
    assert!((r.c_alpha - 1.0 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
    assert!((r.j0 - 3.0 * 2f64.powf(-2.0 / 3.0)).abs() < 1e-12);

    let mut rho = 0.0;
    assert_eq!(unsafe { malab_rho_exponent(2.0, &mut rho) }, MalabStatus::Ok);
    assert!((rho - (33f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);

    let mut i = 0.0;
    assert_eq!(unsafe { malab_period_integral(0.0, 7.0, &mut i) }, MalabStatus::Ok);
    assert!((i - PI / 2.0).abs() < 1e-8);

    let v = unsafe { CStr::from_ptr(malab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_map_to_status_codes() {
    let mut r = MalabRegime::default();
    assert_eq!(unsafe { malab_regime(-3.0, &mut r) }, MalabStatus::Domain);
    assert!(last_error().contains("alpha"));
    assert_eq!(unsafe { malab_regime(1.0, ptr::null_mut()) }, MalabStatus::NullPointer);
    let mut rho = 0.0;
    assert_eq!(unsafe { malab_rho_exponent(-1.0, &mut rho) }, MalabStatus::Domain);
    let mut f = ptr::null_mut();
    let missing = CString::new("/nonexistent/field.txt").unwrap();
    assert_eq!(unsafe { malab_field_load(missing.as_ptr(), &mut f) }, MalabStatus::Io);
    assert!(f.is_null());
    let mut x = 0.0;
    assert_eq!(unsafe { malab_field_sample(ptr::null(), 0.0, 0.0, &mut x) }, MalabStatus::NullPointer);
    assert_eq!(unsafe { malab_field_len(ptr::null()) }, 0);
    unsafe { malab_field_free(ptr::null_mut()) };
}

#[test]
fn radial_field_round_trip() {
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { malab_field_radial(2.0, 64, &mut f) }, MalabStatus::Ok);
    let n = unsafe { malab_field_len(f) };
    assert_eq!(n, 65 * 65);
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { malab_field_copy_values(f, buf.as_mut_ptr(), n) }, MalabStatus::Ok);
    assert!(buf.iter().any(|v| v.is_finite()));
    assert_eq!(unsafe { malab_field_copy_values(f, buf.as_mut_ptr(), n - 1) }, MalabStatus::InvalidArgument);

    let mut u = 0.0;
    assert_eq!(unsafe { malab_field_sample(f, 0.5, 0.0, &mut u) }, MalabStatus::Ok);
    let c = 1.0 / (3.0 * 2f64.sqrt());
    assert!((u - c * 0.125).abs() < 1e-3);
    let mut j = 0.0;
    assert_eq!(unsafe { malab_j_value(f, 2.0, 0.3, 0.3, &mut j) }, MalabStatus::Ok);
    assert!((j - 3.0 * 2f64.powf(-2.0 / 3.0)).abs() < 2e-2);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("u0.field").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { malab_field_save(f, path.as_ptr()) }, MalabStatus::Ok);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { malab_field_load(path.as_ptr(), &mut g) }, MalabStatus::Ok);
    let mut w = 0.0;
    assert_eq!(unsafe { malab_field_sample(g, 0.5, 0.0, &mut w) }, MalabStatus::Ok);
    assert_eq!(u, w);
    unsafe {
        malab_field_free(f);
        malab_field_free(g);
    }
}

#[test]
fn solve_and_classify() {
    let mut f = ptr::null_mut();
    let mut s = MalabSolveSummary::default();
    let st = unsafe { malab_solve(2.0, 1.0, 128, ptr::null(), 0, 0.0, &mut f, &mut s) };
    assert_eq!(st, MalabStatus::Ok, "{}", last_error());
    assert!(s.converged);
    let mut u = 0.0;
    unsafe { malab_field_sample(f, 0.5, 0.0, &mut u) };
    assert!((u - 0.125 / (3.0 * 2f64.sqrt())).abs() < 2e-3);

    let mut v = MalabVerdict {
        kind: MalabVerdictKind::Inconclusive,
        c_fit: 0.0,
        big_c_fit: 0.0,
        a: 0.0,
        slope: 0.0,
        max_eccentricity: 0.0,
        sections: 0,
    };
    let st = unsafe { malab_classify(f, 2.0, 0.2, 2e-3, 9, &mut v) };
    assert_eq!(st, MalabStatus::Ok, "{}", last_error());
    assert_eq!(v.kind, MalabVerdictKind::Radial);
    assert!(v.max_eccentricity < 1.1);
    assert!(v.c_fit > 0.0 && v.c_fit <= v.big_c_fit);
    assert_eq!(unsafe { malab_classify(f, 2.0, 1e-3, 1e-2, 5, &mut v) }, MalabStatus::InvalidArgument);
    unsafe { malab_field_free(f) };

    // sampled boundary data: the same radial values at 64 angles
    let c = 1.0 / (3.0 * 2f64.sqrt());
    let samples = vec![c; 64];
    let mut g = ptr::null_mut();
    let st = unsafe { malab_solve(2.0, 1.0, 64, samples.as_ptr(), samples.len(), 1e-8, &mut g, ptr::null_mut()) };
    assert_eq!(st, MalabStatus::Ok, "{}", last_error());
    unsafe { malab_field_free(g) };
    let st = unsafe { malab_solve(2.0, -1.0, 64, ptr::null(), 0, 0.0, &mut g, ptr::null_mut()) };
    assert_eq!(st, MalabStatus::InvalidArgument);
}

fn target_dir() -> PathBuf {
    // tests/capi-<hash> lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libmalab_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "malab.h"

int main(void) {
    MalabRegime r;
    if (malab_regime(2.0, &r) != MALAB_STATUS_OK) return 1;
    double rho = 0.0;
    if (malab_rho_exponent(2.0, &rho) != MALAB_STATUS_OK) return 2;
    if (fabs(rho - (sqrt(33.0) - 1.0) / 2.0) > 1e-14) return 3;
    if (malab_rho_exponent(-1.0, &rho) != MALAB_STATUS_DOMAIN) return 4;
    if (malab_last_error() == NULL) return 5;
    MalabField *f = NULL;
    if (malab_field_radial(2.0, 32, &f) != MALAB_STATUS_OK) return 6;
    double u = 0.0;
    if (malab_field_sample(f, 0.5, 0.0, &u) != MALAB_STATUS_OK) return 7;
    malab_field_free(f);
    printf("%s %.6f %.6f\n", malab_version(), r.beta, u);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("capi");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
    assert!(text.contains(" 3.000000 "), "{text}");
}
