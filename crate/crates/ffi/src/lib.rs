//! C ABI over the bounds pipeline.
//!
//! Every function returns an [`SbStatus`]; on failure the message is
//! available from [`sb_last_error_message`] on the same thread. Studies are
//! opaque [`SbStudy`] handles released with [`sb_study_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sensbound::harness::study::{bound_at, StudyRow};
use sensbound::harness::{run_case, CaseConfig, CaseId, StudyResult};
use sensbound::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    XiOutOfRange = 3,
    SolverFailure = 4,
    EquilibriumViolation = 5,
    NumericalFailure = 6,
    OutOfBounds = 7,
    Panic = 8,
}

/// One mesh-study row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SbRow {
    pub h: f64,
    pub xi: f64,
    pub j_h: f64,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub re_jh: f64,
    pub re_gap: f64,
    pub solver_res: f64,
    pub equil_res: f64,
}

/// Bounds of one case at one mesh.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SbBounds {
    pub quantity_value: f64,
    pub correction: f64,
    pub e_primal: f64,
    pub e_dual: f64,
    pub lower: f64,
    pub upper: f64,
    pub kappa: f64,
    pub h: f64,
}

/// Opaque result of a mesh study.
pub struct SbStudy {
    result: StudyResult,
    rows: Vec<StudyRow>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SbStatus {
    match err {
        Error::XiOutOfRange { .. } => SbStatus::XiOutOfRange,
        Error::SolverFailure { .. } | Error::NotPositiveDefinite { .. } => SbStatus::SolverFailure,
        Error::EquilibriumViolation { .. } => SbStatus::EquilibriumViolation,
        Error::SingularTransform { .. } | Error::NegativeEstimator { .. } => SbStatus::NumericalFailure,
        _ => SbStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SbStatus, String)>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SbStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SbStatus, String) {
    (SbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn case_from(name: *const c_char) -> Result<CaseId, (SbStatus, String)> {
    if name.is_null() {
        return Err(null("case name"));
    }
    let s = CStr::from_ptr(name)
        .to_str()
        .map_err(|_| (SbStatus::InvalidArgument, "case name is not UTF-8".to_string()))?;
    let case: CaseId = s.parse().map_err(lib_err)?;
    if case == CaseId::Custom {
        return Err((SbStatus::InvalidArgument, "custom cases need a configuration file".into()));
    }
    Ok(case)
}

fn row_of(r: &StudyRow) -> SbRow {
    SbRow {
        h: r.h,
        xi: r.xi,
        j_h: r.j_h,
        lower: r.lower,
        upper: r.upper,
        gap: r.gap,
        re_jh: r.re_jh,
        re_gap: r.re_gap,
        solver_res: r.solver_res,
        equil_res: r.equil_res,
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Bounds of a named case (`"frame-J1"`, `"frame-J2"`, `"membrane-J1"`,
/// `"membrane-J2"`) with `divisions` elements per member or per side.
///
/// # Safety
/// `case_name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_bounds(case_name: *const c_char, divisions: usize, xi: f64, out: *mut SbBounds) -> SbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = CaseConfig::preset(case_from(case_name)?);
        let r = bound_at(&config, divisions, xi).map_err(lib_err)?;
        *out = SbBounds {
            quantity_value: r.quantity_value,
            correction: r.correction,
            e_primal: r.e_primal,
            e_dual: r.e_dual,
            lower: r.lower,
            upper: r.upper,
            kappa: r.kappa,
            h: r.meta.h,
        };
        Ok(())
    })
}

/// Runs a mesh study of a named case. `meshes` lists increasing
/// divisions; `xi` lists coupling weights; `reference` must exceed every
/// entry of `meshes`. On success `*out` owns a new handle.
///
/// # Safety
/// `case_name` must be a NUL-terminated string, `meshes` and `xi` valid for
/// `n_meshes` and `n_xi` reads, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_study_run(
    case_name: *const c_char,
    meshes: *const usize,
    n_meshes: usize,
    xi: *const f64,
    n_xi: usize,
    reference: usize,
    out: *mut *mut SbStudy,
) -> SbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        if meshes.is_null() || xi.is_null() {
            return Err(null("mesh or xi list"));
        }
        let mut config = CaseConfig::preset(case_from(case_name)?);
        config.meshes = std::slice::from_raw_parts(meshes, n_meshes).to_vec();
        config.xi = std::slice::from_raw_parts(xi, n_xi).to_vec();
        config.reference = reference;
        let result = run_case(&config).map_err(lib_err)?;
        let rows = result.rows();
        *out = Box::into_raw(Box::new(SbStudy { result, rows }));
        Ok(())
    })
}

/// Number of successful rows of a study.
///
/// # Safety
/// `study` must come from [`sb_study_run`]; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_study_row_count(study: *const SbStudy, count: *mut usize) -> SbStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let c = count.as_mut().ok_or_else(|| null("count"))?;
        *c = s.rows.len();
        Ok(())
    })
}

/// Row `index` of a study, ordered by mesh size descending.
///
/// # Safety
/// `study` must come from [`sb_study_run`]; `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_study_row(study: *const SbStudy, index: usize, row: *mut SbRow) -> SbStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let out = row.as_mut().ok_or_else(|| null("row"))?;
        let r = s
            .rows
            .get(index)
            .ok_or_else(|| (SbStatus::OutOfBounds, format!("row {index} of {}", s.rows.len())))?;
        *out = row_of(r);
        Ok(())
    })
}

/// Reference value of the study QoI for coupling weight `xi`.
///
/// # Safety
/// `study` must come from [`sb_study_run`]; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_study_reference(study: *const SbStudy, xi: f64, value: *mut f64) -> SbStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let v = value.as_mut().ok_or_else(|| null("value"))?;
        *v = s
            .result
            .reference(xi)
            .ok_or_else(|| (SbStatus::OutOfBounds, format!("no reference for xi = {xi}")))?;
        Ok(())
    })
}

/// Whether every row of the study brackets its reference (1) or not (0).
///
/// # Safety
/// `study` must come from [`sb_study_run`]; `strict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_study_all_strict(study: *const SbStudy, strict: *mut c_int) -> SbStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let out = strict.as_mut().ok_or_else(|| null("strict"))?;
        *out = c_int::from(s.result.all_strict());
        Ok(())
    })
}

/// Releases a study handle; null is ignored.
///
/// # Safety
/// `study` must come from [`sb_study_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sb_study_free(study: *mut SbStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}
