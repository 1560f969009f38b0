//! C ABI over the detection, ledger-audit, and simulation surfaces.
//!
//! Conventions: objects cross the boundary as opaque handles owned by Rust
//! and released through the matching `_free` function; every fallible call
//! returns a [`SecflowStatus`] and leaves a message retrievable with
//! [`secflow_last_error`] (thread-local); strings returned through out
//! parameters are released with [`secflow_string_free`].

use secflow::config::RunConfig;
use secflow::ids::Detector;
use secflow::ledger::{Chain, Directory, VerifyOutcome};
use secflow::netsim::ScenarioConfig;
use secflow::pipeline::{simulate_to_dir, DetectorChoice};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl std::fmt::Display) {
    let msg = CString::new(msg.to_string()).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecflowStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    /// Ledger verification found an inconsistency.
    Tampered = 5,
    Runtime = 6,
}

/// A loaded detection ensemble (opaque).
pub struct SecflowDetector {
    inner: Detector,
}

/// A loaded ledger with its submitter directory (opaque).
pub struct SecflowLedger {
    chain: Chain,
    directory: Directory,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn secflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn secflow_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Release a string returned through an out parameter.
///
/// # Safety
/// `s` must be a pointer previously returned by this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn secflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, SecflowStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(SecflowStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(e) => {
            set_error(format!("path is not UTF-8: {e}"));
            Err(SecflowStatus::InvalidUtf8)
        }
    }
}

/// Load a detector bundle (ensemble model file) from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn secflow_detector_load(
    path: *const c_char,
    out: *mut *mut SecflowDetector,
) -> SecflowStatus {
    if out.is_null() {
        set_error("null out argument");
        return SecflowStatus::NullArgument;
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match secflow::ids::load_detector(path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SecflowDetector { inner }));
            SecflowStatus::Ok
        }
        Err(e) => {
            set_error(e);
            SecflowStatus::Parse
        }
    }
}

/// Number of features the detector expects.
///
/// # Safety
/// `detector` must be a live handle from [`secflow_detector_load`].
#[no_mangle]
pub unsafe extern "C" fn secflow_detector_feature_count(detector: *const SecflowDetector) -> usize {
    if detector.is_null() {
        return 0;
    }
    (*detector).inner.feature_schema().len()
}

/// Score one raw (unnormalized) feature vector. On success writes the fused
/// score to `out_score` and the winning label name to `out_label`
/// (caller frees with [`secflow_string_free`]).
///
/// # Safety
/// `features` must point to `len` doubles; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn secflow_detector_score(
    detector: *const SecflowDetector,
    features: *const f64,
    len: usize,
    out_score: *mut f64,
    out_label: *mut *mut c_char,
) -> SecflowStatus {
    if detector.is_null() || features.is_null() || out_score.is_null() || out_label.is_null() {
        set_error("null argument");
        return SecflowStatus::NullArgument;
    }
    let raw = std::slice::from_raw_parts(features, len);
    match (*detector).inner.score(raw) {
        Ok(fused) => {
            *out_score = fused.score;
            *out_label = CString::new(fused.label.name())
                .expect("label has no NUL")
                .into_raw();
            SecflowStatus::Ok
        }
        Err(e) => {
            set_error(e);
            SecflowStatus::Runtime
        }
    }
}

/// # Safety
/// `detector` must come from [`secflow_detector_load`]; not reused after.
#[no_mangle]
pub unsafe extern "C" fn secflow_detector_free(detector: *mut SecflowDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

/// Open a persisted ledger file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn secflow_ledger_open(
    path: *const c_char,
    out: *mut *mut SecflowLedger,
) -> SecflowStatus {
    if out.is_null() {
        set_error("null out argument");
        return SecflowStatus::NullArgument;
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match Chain::load(path) {
        Ok((chain, directory)) => {
            *out = Box::into_raw(Box::new(SecflowLedger { chain, directory }));
            SecflowStatus::Ok
        }
        Err(e) => {
            set_error(e);
            SecflowStatus::Parse
        }
    }
}

/// Verify digests, signatures, block hashes, and linkage. Returns `Ok` for
/// an intact chain; `Tampered` with the earliest fault position written to
/// `out_block` / `out_txn` (-1 when not applicable) otherwise.
///
/// # Safety
/// `ledger` must be a live handle; out pointers may be NULL if unwanted.
#[no_mangle]
pub unsafe extern "C" fn secflow_ledger_verify(
    ledger: *const SecflowLedger,
    out_block: *mut i64,
    out_txn: *mut i64,
) -> SecflowStatus {
    if ledger.is_null() {
        set_error("null ledger handle");
        return SecflowStatus::NullArgument;
    }
    let l = &*ledger;
    match l.chain.verify(&l.directory) {
        VerifyOutcome::Ok => {
            if !out_block.is_null() {
                *out_block = -1;
            }
            if !out_txn.is_null() {
                *out_txn = -1;
            }
            SecflowStatus::Ok
        }
        VerifyOutcome::TamperedAt { block, txn } => {
            if !out_block.is_null() {
                *out_block = block as i64;
            }
            if !out_txn.is_null() {
                *out_txn = txn.map_or(-1, |t| t as i64);
            }
            set_error(format!("TamperedAt block {block} txn {txn:?}"));
            SecflowStatus::Tampered
        }
    }
}

/// Committed records for one flow id as a JSON array string (caller frees
/// with [`secflow_string_free`]).
///
/// # Safety
/// All pointers must be valid; `flow_id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn secflow_ledger_query(
    ledger: *const SecflowLedger,
    flow_id: *const c_char,
    out_json: *mut *mut c_char,
) -> SecflowStatus {
    if ledger.is_null() || flow_id.is_null() || out_json.is_null() {
        set_error("null argument");
        return SecflowStatus::NullArgument;
    }
    let flow_id = match CStr::from_ptr(flow_id).to_str() {
        Ok(s) => s,
        Err(e) => {
            set_error(format!("flow id is not UTF-8: {e}"));
            return SecflowStatus::InvalidUtf8;
        }
    };
    let records = (*ledger).chain.query(flow_id);
    match serde_json::to_string(&records) {
        Ok(json) => {
            *out_json = CString::new(json).expect("JSON has no NUL").into_raw();
            SecflowStatus::Ok
        }
        Err(e) => {
            set_error(e);
            SecflowStatus::Runtime
        }
    }
}

/// Number of blocks in the chain (including genesis).
///
/// # Safety
/// `ledger` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn secflow_ledger_block_count(ledger: *const SecflowLedger) -> u64 {
    if ledger.is_null() {
        return 0;
    }
    (*ledger).chain.blocks.len() as u64
}

/// # Safety
/// `ledger` must come from [`secflow_ledger_open`]; not reused after.
#[no_mangle]
pub unsafe extern "C" fn secflow_ledger_free(ledger: *mut SecflowLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Run a scenario end to end with the ground-truth oracle detector and write
/// every artifact (events.jsonl, ledger.chain, ledger.jsonl, report.json)
/// under `out_dir`. `seed` overrides the scenario seed when >= 0.
///
/// # Safety
/// `scenario_path` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn secflow_simulate(
    scenario_path: *const c_char,
    seed: i64,
    enforce: bool,
    out_dir: *const c_char,
) -> SecflowStatus {
    let scenario_path = match path_arg(scenario_path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let out_dir = match path_arg(out_dir) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let mut scenario = match ScenarioConfig::from_file(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            set_error(e);
            return SecflowStatus::Parse;
        }
    };
    if seed >= 0 {
        scenario.seed = seed as u64;
    }
    scenario.enforce = enforce;
    let cfg = RunConfig::default();
    match simulate_to_dir(
        &scenario,
        &DetectorChoice::Oracle { confidence: 1.0 },
        &cfg,
        out_dir,
        false,
    ) {
        Ok(_) => SecflowStatus::Ok,
        Err(e) => {
            set_error(e);
            SecflowStatus::Runtime
        }
    }
}
