//! C ABI for the ncca library.
//!
//! Rules travel as JSON strings and live behind opaque handles. Every
//! function returns a status code: `NccaOk` on success, a negative status
//! otherwise; `ncca_last_error` returns a message for the most recent
//! failure on the calling thread. Strings returned through out parameters
//! are owned by the caller and must be released with `ncca_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ncca::conservation::{extract_params, is_number_conserving, materialize, Verdict};
use ncca::enumeration::{classify, enumerate_ncca, EnumerationFilters};
use ncca::error::Error;
use ncca::io::{
    catalog_entry_to_json, catalog_summary_json, oracle_verdict_to_json, rule_from_json,
    rule_to_json, verdict_to_json, Rule,
};
use ncca::lattice::{Direction, LambdaSelection, LatticeShape};
use ncca::rules::{DenseRule, StateSet};
use ncca::simulate::{exhaustive_oracle, finite_support_oracle, sampled_oracle};

/// Status and error codes.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NccaStatus {
    /// Success.
    NccaOk = 0,
    /// A required pointer argument was null.
    NccaErrNullArgument = -1,
    /// A string argument was not valid UTF-8.
    NccaErrUtf8 = -2,
    /// Malformed input (JSON or argument syntax).
    NccaErrParse = -3,
    /// Structurally valid but unusable input.
    NccaErrInvalid = -4,
    /// The requested sweep exceeds its budget or size bound.
    NccaErrTooLarge = -5,
    /// The operation needs a number-conserving rule.
    NccaErrNotConserving = -6,
    /// A parametric rule reconstructs values outside its state set.
    NccaErrNotClosed = -7,
    /// Internal panic; the message carries details.
    NccaErrInternal = -8,
}

/// Opaque rule handle.
pub struct NccaRule {
    rule: Rule,
}

/// Conservation verdict written to `verdict_out` parameters.
pub const NCCA_VERDICT_CONSERVING: i32 = 0;
/// See `NCCA_VERDICT_CONSERVING`.
pub const NCCA_VERDICT_VIOLATED: i32 = 1;

/// Enumeration flag: restrict to rotation-symmetric rules (dimension 2).
pub const NCCA_ENUM_ROTATION_SYMMETRIC: u32 = 1;
/// Enumeration flag: restrict to passive rules.
pub const NCCA_ENUM_PASSIVE: u32 = 2;
/// Enumeration flag: keep only one-dimensional extensions.
pub const NCCA_ENUM_AXIS_EXTENSION_ONLY: u32 = 4;

/// Oracle selector: exhaustive sweep of a torus.
pub const NCCA_ORACLE_EXHAUSTIVE: i32 = 0;
/// Oracle selector: the finite-support configuration sweep.
pub const NCCA_ORACLE_FINITE_SUPPORT: i32 = 1;
/// Oracle selector: seeded random sampling.
pub const NCCA_ORACLE_SAMPLED: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn fail(err: &Error) -> NccaStatus {
    set_error(&err.to_string());
    match err {
        Error::Format(_) => NccaStatus::NccaErrParse,
        Error::BudgetExceeded { .. }
        | Error::SearchTooLarge(_)
        | Error::TableTooLarge(_)
        | Error::LatticeTooLarge => NccaStatus::NccaErrTooLarge,
        Error::NotConservingAt { .. } | Error::ClassifyNonConserving => {
            NccaStatus::NccaErrNotConserving
        }
        Error::NotClosedAt { .. } => NccaStatus::NccaErrNotClosed,
        _ => NccaStatus::NccaErrInvalid,
    }
}

fn guarded(body: impl FnOnce() -> NccaStatus) -> NccaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            NccaStatus::NccaErrInternal
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, NccaStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(NccaStatus::NccaErrNullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        NccaStatus::NccaErrUtf8
    })
}

fn write_string(out: *mut *mut c_char, value: String) -> NccaStatus {
    if out.is_null() {
        set_error("null output pointer");
        return NccaStatus::NccaErrNullArgument;
    }
    let c = CString::new(value.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = c.into_raw() };
    NccaStatus::NccaOk
}

fn dense_of(rule: &Rule) -> Result<DenseRule, Error> {
    match rule {
        Rule::Dense(f) => Ok(f.clone()),
        Rule::Parametric(p) => materialize(p, p.eta(), p.lambda()),
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ncca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread; valid until the next
/// failing call. Do not free.
#[no_mangle]
pub extern "C" fn ncca_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned through an out
/// parameter of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncca_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a rule file (dense or parametric JSON) into a handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ncca_rule_parse(
    json: *const c_char,
    out: *mut *mut NccaRule,
) -> NccaStatus {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return NccaStatus::NccaErrNullArgument;
        }
        match rule_from_json(text) {
            Ok(rule) => {
                *out = Box::into_raw(Box::new(NccaRule { rule }));
                NccaStatus::NccaOk
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a rule handle.
///
/// # Safety
/// `rule` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ncca_rule_free(rule: *mut NccaRule) {
    if !rule.is_null() {
        drop(Box::from_raw(rule));
    }
}

/// Serializes the rule back to its JSON file form.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncca_rule_to_json(
    rule: *const NccaRule,
    out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        let Some(handle) = rule.as_ref() else {
            set_error("null rule handle");
            return NccaStatus::NccaErrNullArgument;
        };
        write_string(out, rule_to_json(&handle.rule))
    })
}

/// Rule dimension, or -1 for a null handle.
///
/// # Safety
/// `rule` must be null or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ncca_rule_dimension(rule: *const NccaRule) -> i32 {
    rule.as_ref().map_or(-1, |h| h.rule.dimension() as i32)
}

/// Decides number conservation. Writes a verdict value to `verdict_out`
/// and, when `report_out` is non-null, the JSON verdict
/// (`{"status", "witness", "equation"}`).
///
/// # Safety
/// Pointers must be valid; `report_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ncca_check(
    rule: *const NccaRule,
    verdict_out: *mut i32,
    report_out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        let Some(handle) = rule.as_ref() else {
            set_error("null rule handle");
            return NccaStatus::NccaErrNullArgument;
        };
        if verdict_out.is_null() {
            set_error("null output pointer");
            return NccaStatus::NccaErrNullArgument;
        }
        let verdict = match dense_of(&handle.rule).and_then(|f| is_number_conserving(&f)) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        *verdict_out = if verdict.is_conserving() {
            NCCA_VERDICT_CONSERVING
        } else {
            NCCA_VERDICT_VIOLATED
        };
        if report_out.is_null() {
            NccaStatus::NccaOk
        } else {
            write_string(report_out, verdict_to_json(&verdict).to_string())
        }
    })
}

/// Classifies a conserving rule; writes a JSON array of label strings.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncca_classify(
    rule: *const NccaRule,
    labels_out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        let Some(handle) = rule.as_ref() else {
            set_error("null rule handle");
            return NccaStatus::NccaErrNullArgument;
        };
        match dense_of(&handle.rule).and_then(|f| classify(&f)) {
            Ok(labels) => {
                let tags: Vec<String> = labels.tags.iter().map(|t| t.to_string()).collect();
                write_string(labels_out, serde_json::to_string(&tags).expect("strings"))
            }
            Err(e) => fail(&e),
        }
    })
}

/// Converts between representations: target 0 is dense, 1 is parametric
/// (center leading direction, canonical pair selection). Writes the
/// converted rule's JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncca_convert(
    rule: *const NccaRule,
    target_kind: i32,
    json_out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        let Some(handle) = rule.as_ref() else {
            set_error("null rule handle");
            return NccaStatus::NccaErrNullArgument;
        };
        let result: Result<Rule, Error> = (|| match (&handle.rule, target_kind) {
            (Rule::Dense(f), 1) => {
                let lambda = LambdaSelection::canonical(f.dimension())?;
                match is_number_conserving(f)? {
                    Verdict::Conserving => {}
                    Verdict::Violated(v) => {
                        return Err(Error::NotConservingAt {
                            config: v.config.states().to_vec(),
                            equation: v.equation.as_str().into(),
                        })
                    }
                }
                Ok(Rule::Parametric(extract_params(
                    f,
                    Direction::CENTER,
                    &lambda,
                )?))
            }
            (Rule::Parametric(p), 0) => Ok(Rule::Dense(materialize(p, p.eta(), p.lambda())?)),
            (same, 0 | 1) => Ok(same.clone()),
            _ => Err(Error::Format(format!(
                "unknown target kind {target_kind} (0 dense, 1 parametric)"
            ))),
        })();
        match result {
            Ok(rule) => write_string(json_out, rule_to_json(&rule)),
            Err(e) => fail(&e),
        }
    })
}

/// Enumerates all conserving rules for a dimension and state set; writes
/// the catalog as JSON lines (one rule per line plus a summary line).
///
/// # Safety
/// `states` must point to `n_states` values; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncca_enumerate(
    dim: u32,
    states: *const i64,
    n_states: usize,
    flags: u32,
    catalog_out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        if states.is_null() {
            set_error("null states pointer");
            return NccaStatus::NccaErrNullArgument;
        }
        let states = match StateSet::new(std::slice::from_raw_parts(states, n_states).to_vec()) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let filters = EnumerationFilters {
            rotation_symmetric: flags & NCCA_ENUM_ROTATION_SYMMETRIC != 0,
            passive: flags & NCCA_ENUM_PASSIVE != 0,
            axis_extension_only: flags & NCCA_ENUM_AXIS_EXTENSION_ONLY != 0,
        };
        match enumerate_ncca(dim as usize, &states, &filters) {
            Ok(catalog) => {
                let mut lines: Vec<String> = catalog.iter().map(catalog_entry_to_json).collect();
                lines.push(catalog_summary_json(&catalog));
                write_string(catalog_out, lines.join("\n"))
            }
            Err(e) => fail(&e),
        }
    })
}

/// Runs a simulation oracle. `shape`/`n_dims` select the torus for the
/// exhaustive and sampled modes (ignored for finite support). Writes a
/// verdict value to `verdict_out` and, when `report_out` is non-null, the
/// JSON verdict with any witness configuration.
///
/// # Safety
/// `shape` must point to `n_dims` values for the modes that read it;
/// pointers must be valid; `report_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ncca_oracle(
    rule: *const NccaRule,
    mode: i32,
    shape: *const u32,
    n_dims: usize,
    samples: u64,
    seed: u64,
    budget: u64,
    verdict_out: *mut i32,
    report_out: *mut *mut c_char,
) -> NccaStatus {
    guarded(|| {
        let Some(handle) = rule.as_ref() else {
            set_error("null rule handle");
            return NccaStatus::NccaErrNullArgument;
        };
        if verdict_out.is_null() {
            set_error("null output pointer");
            return NccaStatus::NccaErrNullArgument;
        }
        let f = match dense_of(&handle.rule) {
            Ok(f) => f,
            Err(e) => return fail(&e),
        };
        let torus = || -> Result<LatticeShape, Error> {
            if shape.is_null() {
                return Err(Error::Format("null shape pointer".into()));
            }
            LatticeShape::new(std::slice::from_raw_parts(shape, n_dims).to_vec())
        };
        let verdict = match mode {
            NCCA_ORACLE_EXHAUSTIVE => torus().and_then(|s| exhaustive_oracle(&f, &s, budget)),
            NCCA_ORACLE_FINITE_SUPPORT => finite_support_oracle(&f),
            NCCA_ORACLE_SAMPLED => torus().and_then(|s| sampled_oracle(&f, &s, samples, seed)),
            _ => Err(Error::Format(format!("unknown oracle mode {mode}"))),
        };
        match verdict {
            Ok(v) => {
                *verdict_out = if v.is_conserving() {
                    NCCA_VERDICT_CONSERVING
                } else {
                    NCCA_VERDICT_VIOLATED
                };
                if report_out.is_null() {
                    NccaStatus::NccaOk
                } else {
                    write_string(report_out, oracle_verdict_to_json(&v).to_string())
                }
            }
            Err(e) => fail(&e),
        }
    })
}
