//! C interface to the minimum time library.
//!
//! Every function returns an [`MtStatus`]; results come back through out
//! pointers. On failure a message is available from [`mt_last_error`] until
//! the next call on the same thread. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mintime::adjoint::reconstruct;
use mintime::bench::{example, oracle, ExampleId};
use mintime::config::RunConfig;
use mintime::geom::Vec2;
use mintime::mintime::{MinTime, MinTimeField};
use mintime::reachset::{Method, ReachFlow};
use mintime::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownExample = 3,
    NumericFailure = 4,
    Io = 5,
    Config = 6,
    Unsupported = 7,
    Panic = 8,
}

/// Reachable set rings of one run.
pub struct MtFlow {
    flow: ReachFlow,
}

/// Piecewise-linear minimum time function built from a flow.
pub struct MtField {
    field: MinTimeField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> MtStatus {
    match e {
        Error::InvalidArgument(_) => MtStatus::InvalidArgument,
        Error::UnknownExample(_) => MtStatus::UnknownExample,
        Error::NumericOverflow { .. } | Error::SingularStep { .. } | Error::NoNormalCone(_) => MtStatus::NumericFailure,
        Error::Output { .. } | Error::Input { .. } => MtStatus::Io,
        Error::Config(_) => MtStatus::Config,
        Error::UnsupportedOracle(_) => MtStatus::Unsupported,
    }
}

/// Runs `f`, recording errors and catching panics.
fn guard(f: impl FnOnce() -> Result<(), (MtStatus, String)>) -> MtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MtStatus::Panic
        }
    }
}

fn lib<T>(r: mintime::Result<T>) -> Result<T, (MtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (MtStatus, String) {
    (MtStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (MtStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MtStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (MtStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn flow_arg<'a>(p: *const MtFlow) -> Result<&'a ReachFlow, (MtStatus, String)> {
    p.as_ref().map(|f| &f.flow).ok_or_else(|| null("flow"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Runs a registry example. `method` may be null and counts may be zero to
/// use the example's defaults.
///
/// # Safety
/// `id` and a non-null `method` must be nul-terminated strings; `out` must be
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_from_example(
    id: *const c_char,
    method: *const c_char,
    k: usize,
    n: usize,
    n_r: usize,
    n_u: usize,
    out: *mut *mut MtFlow,
) -> MtStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let id: ExampleId = lib(str_arg(id, "id")?.parse())?;
        let spec = example(id);
        let method = if method.is_null() { spec.method } else { lib(str_arg(method, "method")?.parse::<Method>())? };
        let pick = |v: usize, d: usize| if v == 0 { d } else { v };
        let n_r = pick(n_r, spec.n_r);
        let flow = lib(spec.run(method, pick(k, spec.k), pick(n, spec.n), n_r, pick(n_u, n_r)))?;
        *out = Box::into_raw(Box::new(MtFlow { flow }));
        Ok(())
    })
}

/// Runs a JSON run configuration, as accepted by the command line tool.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_from_config(json: *const c_char, out: *mut *mut MtFlow) -> MtStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg: RunConfig = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| (MtStatus::Config, format!("malformed configuration: {e}")))?;
        let run = lib(cfg.resolve())?;
        let flow = lib(run.spec.run(run.method, run.k, run.n, run.n_r, run.n_u))?;
        *out = Box::into_raw(Box::new(MtFlow { flow }));
        Ok(())
    })
}

/// Releases a flow; null is ignored.
///
/// # Safety
/// `flow` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_free(flow: *mut MtFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Number of rings, including the target ring 0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_ring_count(flow: *const MtFlow, out: *mut usize) -> MtStatus {
    guard(|| {
        *out_arg(out, "out")? = flow_arg(flow)?.rings.len();
        Ok(())
    })
}

/// Time of ring `ring`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_ring_time(flow: *const MtFlow, ring: usize, out: *mut f64) -> MtStatus {
    guard(|| {
        let f = flow_arg(flow)?;
        let r = f.rings.get(ring).ok_or((MtStatus::InvalidArgument, format!("no ring {ring}")))?;
        *out_arg(out, "out")? = r.t;
        Ok(())
    })
}

/// Copies up to `capacity` vertices of ring `ring` as `x1, x2` pairs into
/// `xy` and stores the full vertex count in `len`. Call with `capacity = 0`
/// and `xy = NULL` to query the size.
///
/// # Safety
/// `xy` must hold `2 * capacity` doubles when `capacity > 0`.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_ring_vertices(
    flow: *const MtFlow,
    ring: usize,
    xy: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> MtStatus {
    guard(|| {
        let f = flow_arg(flow)?;
        let r = f.rings.get(ring).ok_or((MtStatus::InvalidArgument, format!("no ring {ring}")))?;
        let vs = r.polytope.vertices();
        *out_arg(len, "len")? = vs.len();
        if capacity > 0 {
            if xy.is_null() {
                return Err(null("xy"));
            }
            let buf = std::slice::from_raw_parts_mut(xy, 2 * capacity);
            for (i, v) in vs.iter().take(capacity).enumerate() {
                buf[2 * i] = v.x;
                buf[2 * i + 1] = v.y;
            }
        }
        Ok(())
    })
}

/// Builds the minimum time function of a flow.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_field_new(flow: *const MtFlow, out: *mut *mut MtField) -> MtStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let field = lib(MinTimeField::new(flow_arg(flow)?))?;
        *out = Box::into_raw(Box::new(MtField { field }));
        Ok(())
    })
}

/// Releases a field; null is ignored.
///
/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mt_field_free(field: *mut MtField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

fn time_value(t: MinTime) -> f64 {
    match t {
        MinTime::Reached(v) => v,
        MinTime::Unreached => f64::INFINITY,
    }
}

/// Minimum time at `(x1, x2)`; `INFINITY` outside the last ring.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_field_evaluate(field: *const MtField, x1: f64, x2: f64, out: *mut f64) -> MtStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        *out_arg(out, "out")? = time_value(f.field.evaluate(&Vec2::new(x1, x2)));
        Ok(())
    })
}

/// Analytic minimum time of a registry example; `INFINITY` when unreachable.
///
/// # Safety
/// `id` must be a nul-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn mt_oracle(id: *const c_char, x1: f64, x2: f64, out: *mut f64) -> MtStatus {
    guard(|| {
        let id: ExampleId = lib(str_arg(id, "id")?.parse())?;
        *out_arg(out, "out")? = time_value(lib(oracle(id, &Vec2::new(x1, x2)))?);
        Ok(())
    })
}

/// Reconstructs the extremal control for direction `dir` on ring `ring` and
/// stores the trajectory endpoint and the number of control switches.
///
/// # Safety
/// `endpoint` must hold two doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_flow_reconstruct(
    flow: *const MtFlow,
    ring: usize,
    dir: usize,
    endpoint: *mut f64,
    switches: *mut usize,
) -> MtStatus {
    guard(|| {
        let f = flow_arg(flow)?;
        if endpoint.is_null() {
            return Err(null("endpoint"));
        }
        let switches = out_arg(switches, "switches")?;
        let r = lib(reconstruct(f, ring, dir))?;
        let end = r.trajectory.endpoint();
        *endpoint = end.x;
        *endpoint.add(1) = end.y;
        *switches = r.switches;
        Ok(())
    })
}
