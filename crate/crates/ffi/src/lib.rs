//! C ABI for curate-core.
//!
//! Every function returns a [`CurateStatus`]; results come back through out
//! pointers. Strings returned to the caller must be released with
//! [`curate_string_free`], handles with their matching `_free` function.
//! After a non-zero status, [`curate_last_error`] describes the failure.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use curate_core::corpus::{split_sentences, Document};
use curate_core::lang::normalize_lang_code;
use curate_core::langid::{predict_document_lang, ScriptStubPredictor};
use curate_core::metrics::{chrf, levenshtein_similarity, ChrfParams};
use curate_core::mono::{clean_gate, pct_questionable, GateParams, QuestionableScorer};
use curate_core::pipeline::{run_pipeline, PipelineConfig};
use curate_core::script::{fix_virama, BigramDetector, ViramaConfig, ZawgyiDetector};
use curate_core::unimax::unimax_weights;
use curate_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurateStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CurateStatus, msg: impl AsRef<str>) -> CurateStatus {
    set_error(msg.as_ref());
    status
}

fn from_core(e: Error) -> CurateStatus {
    let status = match e {
        Error::InvalidCode(_) | Error::InvalidParameter(_) | Error::Config(_) => CurateStatus::InvalidArgument,
        _ => CurateStatus::Internal,
    };
    fail(status, e.to_string())
}

/// Run `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), CurateStatus>) -> CurateStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CurateStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(CurateStatus::Internal, "panic inside curate"),
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, CurateStatus> {
    if p.is_null() {
        return Err(fail(CurateStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CurateStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), CurateStatus> {
    if out.is_null() {
        return Err(fail(CurateStatus::NullPointer, "output pointer is null"));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), CurateStatus> {
    let c = CString::new(s).map_err(|_| fail(CurateStatus::Internal, "result contains a NUL byte"))?;
    if out.is_null() {
        return Err(fail(CurateStatus::NullPointer, "output pointer is null"));
    }
    out.write(c.into_raw());
    Ok(())
}

/// Message for the last failure on this thread. Valid until the next call
/// on the same thread; never null.
#[no_mangle]
pub extern "C" fn curate_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn curate_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalize a language code to the corpus convention.
///
/// # Safety
/// `raw` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curate_normalize_lang(raw: *const c_char, out: *mut *mut c_char) -> CurateStatus {
    guard(|| {
        let raw = read_str(raw, "raw")?;
        let code = normalize_lang_code(raw).map_err(from_core)?;
        write_string(out, code.code)
    })
}

/// chrF (character 6-grams, beta 2) on a 0-100 scale.
///
/// # Safety
/// `hypothesis` and `reference` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn curate_chrf(hypothesis: *const c_char, reference: *const c_char, out: *mut f64) -> CurateStatus {
    guard(|| {
        let h = read_str(hypothesis, "hypothesis")?;
        let r = read_str(reference, "reference")?;
        write_out(out, chrf(h, r, &ChrfParams::default()))
    })
}

/// Normalized Levenshtein similarity between two token sequences.
///
/// # Safety
/// `a` and `b` must point to `a_len` and `b_len` readable values (or be null
/// with length zero); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn curate_levenshtein_similarity(
    a: *const u32,
    a_len: usize,
    b: *const u32,
    b_len: usize,
    out: *mut f64,
) -> CurateStatus {
    guard(|| {
        let slice = |p: *const u32, n: usize| -> Result<&[u32], CurateStatus> {
            match (p.is_null(), n) {
                (_, 0) => Ok(&[]),
                (true, _) => Err(fail(CurateStatus::NullPointer, "token pointer is null")),
                (false, n) => Ok(std::slice::from_raw_parts(p, n)),
            }
        };
        write_out(out, levenshtein_similarity(slice(a, a_len)?, slice(b, b_len)?))
    })
}

/// Remove spaces before virama signs for languages that need it.
///
/// # Safety
/// `text` and `lang` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn curate_fix_virama(text: *const c_char, lang: *const c_char, out: *mut *mut c_char) -> CurateStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let lang = normalize_lang_code(read_str(lang, "lang")?).map_err(from_core)?;
        thread_local! {
            static CFG: ViramaConfig = ViramaConfig::default();
        }
        let fixed = CFG.with(|cfg| fix_virama(text, &lang, cfg));
        write_string(out, fixed)
    })
}

/// Probability that Myanmar text is Zawgyi-encoded.
///
/// # Safety
/// `text` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn curate_zawgyi_probability(text: *const c_char, out: *mut f64) -> CurateStatus {
    guard(|| write_out(out, BigramDetector.probability(read_str(text, "text")?)))
}

/// UniMax weights. `counts_json` maps language to token count; the result is
/// a JSON object.
///
/// # Safety
/// `counts_json` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn curate_unimax_weights(
    counts_json: *const c_char,
    budget: f64,
    max_epochs: f64,
    out: *mut *mut c_char,
) -> CurateStatus {
    guard(|| {
        let counts: BTreeMap<String, f64> = serde_json::from_str(read_str(counts_json, "counts_json")?)
            .map_err(|e| fail(CurateStatus::InvalidArgument, e.to_string()))?;
        let w = unimax_weights(&counts, budget, max_epochs).map_err(from_core)?;
        write_string(out, serde_json::to_string(&w).map_err(|e| fail(CurateStatus::Internal, e.to_string()))?)
    })
}

/// Questionable-content scorer with default parameters and patterns.
pub struct CurateScorer {
    scorer: QuestionableScorer,
    gate: GateParams,
    predictor: ScriptStubPredictor,
}

/// # Safety
/// `out` must be writable. Release the handle with [`curate_scorer_free`].
#[no_mangle]
pub unsafe extern "C" fn curate_scorer_new(out: *mut *mut CurateScorer) -> CurateStatus {
    guard(|| {
        let s = CurateScorer {
            scorer: QuestionableScorer::default(),
            gate: GateParams::default(),
            predictor: ScriptStubPredictor::default(),
        };
        write_out(out, Box::into_raw(Box::new(s)))
    })
}

/// Score a document: fraction of questionable sentences, and whether the
/// clean gate keeps it (1) or drops it (0).
///
/// # Safety
/// `scorer` must come from [`curate_scorer_new`]; strings NUL-terminated;
/// both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn curate_scorer_score(
    scorer: *const CurateScorer,
    text: *const c_char,
    lang: *const c_char,
    questionable_out: *mut f64,
    keep_out: *mut i32,
) -> CurateStatus {
    guard(|| {
        let s = scorer.as_ref().ok_or_else(|| fail(CurateStatus::NullPointer, "scorer is null"))?;
        let doc = Document::from_text("ffi", read_str(lang, "lang")?, read_str(text, "text")?).map_err(from_core)?;
        let mut doc = split_sentences(doc);
        if doc.sentences.is_empty() {
            write_out(questionable_out, 0.0)?;
            return write_out(keep_out, 0);
        }
        predict_document_lang(&mut doc, &s.predictor).map_err(from_core)?;
        s.scorer.annotate(&mut doc);
        write_out(questionable_out, pct_questionable(&doc).map_err(from_core)?)?;
        write_out(keep_out, i32::from(clean_gate(&doc, &s.gate).is_keep()))
    })
}

/// # Safety
/// `scorer` must come from [`curate_scorer_new`] (or be null) and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn curate_scorer_free(scorer: *mut CurateScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Run the cleaning pipeline described by a config file and return the
/// per-stage reports as JSON.
///
/// # Safety
/// `config_path` must be NUL-terminated; `reports_out` writable.
#[no_mangle]
pub unsafe extern "C" fn curate_pipeline_run(config_path: *const c_char, reports_out: *mut *mut c_char) -> CurateStatus {
    guard(|| {
        let cfg = PipelineConfig::load(Path::new(read_str(config_path, "config_path")?)).map_err(from_core)?;
        let run = run_pipeline(&cfg).map_err(from_core)?;
        let json = serde_json::to_string(&run.reports).map_err(|e| fail(CurateStatus::Internal, e.to_string()))?;
        write_string(reports_out, json)
    })
}
