use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use curate_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    curate_string_free(p);
    s
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/curate.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "curate_normalize_lang",
        "curate_chrf",
        "curate_fix_virama",
        "curate_scorer_new",
        "curate_scorer_free",
        "curate_pipeline_run",
        "CURATE_STATUS_INVALID_UTF8 = 2",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn virama_and_zawgyi() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(curate_fix_virama(c("क ्ष").as_ptr(), c("hi").as_ptr(), &mut out), CurateStatus::Ok);
        assert_eq!(take(out), "क्ष");
        assert_eq!(curate_fix_virama(c("क ्ष").as_ptr(), c("en").as_ptr(), &mut out), CurateStatus::Ok);
        assert_eq!(take(out), "क ्ष");
        let mut p = 1.0;
        assert_eq!(curate_zawgyi_probability(c("hello").as_ptr(), &mut p), CurateStatus::Ok);
        assert_eq!(p, 0.0);
    }
}

#[test]
fn pipeline_through_ffi() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    std::fs::write(&input, "").unwrap();
    let cfg = dir.path().join("cfg.json");
    let body = serde_json::json!({ "input": input, "output": dir.path().join("out") });
    std::fs::write(&cfg, body.to_string()).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(curate_pipeline_run(c(cfg.to_str().unwrap()).as_ptr(), &mut out), CurateStatus::Ok);
        let reports: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(reports.as_array().unwrap().len(), 9);
        assert!(dir.path().join("out/manifest.json").is_file());

        let missing = c("/nonexistent/cfg.json");
        assert_eq!(curate_pipeline_run(missing.as_ptr(), &mut out), CurateStatus::InvalidArgument);
        let msg = CStr::from_ptr(curate_last_error()).to_str().unwrap();
        assert!(msg.contains("nonexistent"));
    }
}
