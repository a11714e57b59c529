//! C ABI over the `approxvar` library.
//!
//! Spaces and functions are opaque handles owned by the caller and released
//! with `av_space_free` and `av_function_free`. Every fallible call returns
//! an [`AvStatus`]; on failure the message is kept per thread and read back
//! with `av_last_error`. Strings returned through `char **` are released
//! with `av_string_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use approxvar::approxvar::{eps_variation, prefix_eps_variation};
use approxvar::checks::{run_checks, Suite};
use approxvar::families::builtin_sequence;
use approxvar::gridfn::{jordan_variation, oscillation};
use approxvar::io::load_function;
use approxvar::regulated::step_approximant;
use approxvar::selection::{pointwise_select, SelectionConfig, SelectionOutcome};
use approxvar::{Error, GageSpace, Grid, PseudometricId, SampledFunction};

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Infeasible = 5,
    /// The output buffer is too small; the required length is reported.
    BufferTooSmall = 6,
    Internal = 7,
}

/// Certified enclosure of an ε-variation; `upper` is `INFINITY` when no
/// bounded path exists.
#[repr(C)]
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct AvBracket {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AvOutcome {
    Certified = 0,
    Uncertified = 1,
    Diverging = 2,
}

/// Opaque value space.
pub struct AvSpace(Arc<GageSpace>);

/// Opaque sampled function.
pub struct AvFunction(SampledFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AvStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => AvStatus::Parse,
        Error::Io { .. } => AvStatus::Io,
        Error::Infeasible { .. } => AvStatus::Infeasible,
        _ => AvStatus::InvalidArgument,
    }
}

struct Fail(AvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn null(what: &str) -> Fail {
    Fail(AvStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> FfiResult) -> AvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AvStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AvStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Copies `values` into `out` when `cap` suffices; always reports the
/// length through `len`.
unsafe fn write_buffer(values: &[f64], out: *mut f64, cap: usize, len: *mut usize) -> FfiResult {
    write_out(len, values.len(), "len")?;
    if values.len() > cap {
        return Err(Fail(
            AvStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

fn new_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on this thread.
#[no_mangle]
pub extern "C" fn av_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn av_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn av_space_scalar(out: *mut *mut AvSpace) -> AvStatus {
    guard(|| {
        write_out(
            out,
            Box::into_raw(Box::new(AvSpace(Arc::new(GageSpace::scalar())))),
            "out",
        )
    })
}

/// Space from its JSON description, e.g. `{"kind":"coordinate","dim":2}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn av_space_from_json(json: *const c_char, out: *mut *mut AvSpace) -> AvStatus {
    guard(|| {
        let space = GageSpace::from_json(str_arg(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(AvSpace(Arc::new(space)))), "out")
    })
}

/// # Safety
/// `space` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn av_space_num_pseudometrics(space: *const AvSpace, out: *mut usize) -> AvStatus {
    guard(|| write_out(out, handle(space, "space")?.0.num_pseudometrics(), "out"))
}

/// # Safety
/// `space` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn av_space_free(space: *mut AvSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Scalar function with values `v` at strictly increasing `t`.
///
/// # Safety
/// `t` and `v` must point to `n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn av_function_scalar(
    t: *const f64,
    v: *const f64,
    n: usize,
    out: *mut *mut AvFunction,
) -> AvStatus {
    guard(|| {
        let grid = Grid::new(slice_arg(t, n, "t")?.to_vec())?;
        let f = SampledFunction::scalar(grid, slice_arg(v, n, "v")?.to_vec())?;
        write_out(out, Box::into_raw(Box::new(AvFunction(f))), "out")
    })
}

/// Function read from a CSV file with values in `space`.
///
/// # Safety
/// `path` must be a nul-terminated string; `space` a valid handle.
#[no_mangle]
pub unsafe extern "C" fn av_function_from_csv(
    path: *const c_char,
    space: *const AvSpace,
    out: *mut *mut AvFunction,
) -> AvStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let f = load_function(Path::new(path), Arc::clone(&handle(space, "space")?.0))?;
        write_out(out, Box::into_raw(Box::new(AvFunction(f))), "out")
    })
}

/// # Safety
/// `f` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn av_function_free(f: *mut AvFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn av_function_len(f: *const AvFunction, out: *mut usize) -> AvStatus {
    guard(|| write_out(out, handle(f, "f")?.0.len(), "out"))
}

/// Grid points into `out[..cap]`; `len` receives the grid size.
///
/// # Safety
/// `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn av_function_grid(
    f: *const AvFunction,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AvStatus {
    guard(|| write_buffer(handle(f, "f")?.0.grid().points(), out, cap, len))
}

/// Coordinate `p` of every value; real-valued spaces only.
///
/// # Safety
/// `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn av_function_values(
    f: *const AvFunction,
    p: usize,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AvStatus {
    guard(|| {
        let vals = handle(f, "f")?
            .0
            .component(p)
            .ok_or_else(|| Fail(AvStatus::InvalidArgument, format!("no real coordinate {p}")))?;
        write_buffer(&vals, out, cap, len)
    })
}

/// # Safety
/// `f` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn av_jordan_variation(f: *const AvFunction, p: usize, out: *mut f64) -> AvStatus {
    guard(|| write_out(out, jordan_variation(&handle(f, "f")?.0, PseudometricId(p))?, "out"))
}

/// # Safety
/// `f` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn av_oscillation(f: *const AvFunction, p: usize, out: *mut f64) -> AvStatus {
    guard(|| write_out(out, oscillation(&handle(f, "f")?.0, PseudometricId(p))?, "out"))
}

/// Bracket of the ε-variation; `witness`, when not null, receives a
/// function attaining the upper bound, or null when it is infinite.
///
/// # Safety
/// `f` must be a valid handle; `out` a valid pointer; `witness` valid or null.
#[no_mangle]
pub unsafe extern "C" fn av_eps_variation(
    f: *const AvFunction,
    p: usize,
    eps: f64,
    out: *mut AvBracket,
    witness: *mut *mut AvFunction,
) -> AvStatus {
    guard(|| {
        let b = eps_variation(&handle(f, "f")?.0, PseudometricId(p), eps)?;
        write_out(
            out,
            AvBracket {
                lower: b.lower.to_f64(),
                upper: b.upper.to_f64(),
                exact: b.exact,
            },
            "out",
        )?;
        if !witness.is_null() {
            let w = b
                .witness
                .map_or(ptr::null_mut(), |w| Box::into_raw(Box::new(AvFunction(w))));
            witness.write(w);
        }
        Ok(())
    })
}

/// ε-variation of each prefix of the grid.
///
/// # Safety
/// `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn av_prefix_eps_variation(
    f: *const AvFunction,
    p: usize,
    eps: f64,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AvStatus {
    guard(|| {
        let pre: Vec<f64> = prefix_eps_variation(&handle(f, "f")?.0, PseudometricId(p), eps)?
            .iter()
            .map(|v| v.to_f64())
            .collect();
        write_buffer(&pre, out, cap, len)
    })
}

/// Step function within `eps` of `f`, with its jump count.
///
/// # Safety
/// `f` must be a valid handle; `out` and `jumps` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn av_step_approximant(
    f: *const AvFunction,
    p: usize,
    eps: f64,
    out: *mut *mut AvFunction,
    jumps: *mut usize,
) -> AvStatus {
    guard(|| {
        let s = step_approximant(&handle(f, "f")?.0, PseudometricId(p), eps)?;
        write_out(jumps, s.jumps, "jumps")?;
        write_out(out, Box::into_raw(Box::new(AvFunction(s.function))), "out")
    })
}

/// Selection on a built-in sequence with pseudometric 0. `outcome`
/// receives the result kind and `json` the full report.
///
/// # Safety
/// `name` must be a nul-terminated string; `eps` must point to `n_eps`
/// doubles; `outcome` and `json` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn av_select_builtin(
    name: *const c_char,
    eps: *const f64,
    n_eps: usize,
    probe: usize,
    outcome: *mut AvOutcome,
    json: *mut *mut c_char,
) -> AvStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let seq = builtin_sequence(name)
            .ok_or_else(|| Fail(AvStatus::InvalidArgument, format!("unknown sequence {name:?}")))?;
        let cfg = SelectionConfig::new(slice_arg(eps, n_eps, "eps")?.to_vec(), vec![PseudometricId(0)], probe);
        let out = pointwise_select(&seq, &cfg)?;
        let kind = match &out {
            SelectionOutcome::Certified(_) => AvOutcome::Certified,
            SelectionOutcome::Uncertified(_) => AvOutcome::Uncertified,
            SelectionOutcome::Diagnosis(_) => AvOutcome::Diverging,
        };
        let text = serde_json::to_string(&out).map_err(Error::from)?;
        write_out(outcome, kind, "outcome")?;
        write_out(json, new_string(text), "json")
    })
}

/// Property suite `ess`, `unif`, `selection` or `all`; `passed` reports
/// whether every property held.
///
/// # Safety
/// `suite` must be a nul-terminated string; `passed` and `json` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn av_check_run(
    suite: *const c_char,
    seed: u64,
    passed: *mut bool,
    json: *mut *mut c_char,
) -> AvStatus {
    guard(|| {
        let suite: Suite = str_arg(suite, "suite")?.parse()?;
        let rep = run_checks(suite, seed)?;
        let text = serde_json::to_string(&rep).map_err(Error::from)?;
        write_out(passed, rep.passed, "passed")?;
        write_out(json, new_string(text), "json")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_recorded_per_thread() {
        let mut out = ptr::null_mut();
        let json = CString::new(r#"{"kind":"nope"}"#).unwrap();
        let st = unsafe { av_space_from_json(json.as_ptr(), &mut out) };
        assert_eq!(st, AvStatus::Parse);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(av_last_error()) }.to_str().unwrap();
        assert!(msg.contains("nope"), "{msg}");
        std::thread::spawn(|| assert!(av_last_error().is_null()))
            .join()
            .unwrap();

        assert_eq!(unsafe { av_space_scalar(&mut out) }, AvStatus::Ok);
        assert!(av_last_error().is_null());
        unsafe { av_space_free(out) };
    }

    #[test]
    fn null_handles_are_rejected() {
        let mut n = 0usize;
        assert_eq!(unsafe { av_function_len(ptr::null(), &mut n) }, AvStatus::NullPointer);
        assert_eq!(unsafe { av_space_scalar(ptr::null_mut()) }, AvStatus::NullPointer);
    }
}
