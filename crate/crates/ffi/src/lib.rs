//! C ABI over `nfl-core`.
//!
//! Every entry point returns an [`NflStatus`]; outputs go through pointer arguments.
//! Handles are opaque, created by `*_new`-style calls and released with the matching
//! `*_free`. After a non-`Ok` status, `nfl_last_error` describes the failure on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nfl_core::evolution::{self, EvolveOptions};
use nfl_core::fronts;
use nfl_core::kernel::{FieldState, Kernel};
use nfl_core::nonlinearity::{Homogeneous, Nonlinearity};
use nfl_core::waves::{self, WaveOptions, WaveProfile};
use nfl_core::NflError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NflStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

pub struct NflKernel(Kernel);
pub struct NflNonlinearity(Nonlinearity);
pub struct NflField(FieldState);
pub struct NflWave(WaveProfile);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &NflError) -> NflStatus {
    match e {
        NflError::InvalidParameter { .. }
        | NflError::GridTooCoarse { .. }
        | NflError::InvalidBand { .. }
        | NflError::LevelNotBracketed { .. }
        | NflError::InputsNotOrdered { .. }
        | NflError::ConfigInvalid { .. } => NflStatus::InvalidArgument,
        _ => NflStatus::NumericalFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), NflStatus>>(f: F) -> NflStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NflStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            NflStatus::Panic
        }
    }
}

fn lift<T>(r: nfl_core::Result<T>) -> Result<T, NflStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> NflStatus {
    set_error(format!("null pointer: {what}"));
    NflStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, NflStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), NflStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failure on this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn nfl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_kernel_gaussian(sigma: f64, out: *mut *mut NflKernel) -> NflStatus {
    guard(|| {
        let k = lift(Kernel::gaussian(sigma))?;
        put(out, boxed(NflKernel(k)), "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_kernel_bump(radius: f64, out: *mut *mut NflKernel) -> NflStatus {
    guard(|| {
        let k = lift(Kernel::bump(radius))?;
        put(out, boxed(NflKernel(k)), "out")
    })
}

/// # Safety
/// `k` must come from a kernel constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nfl_kernel_free(k: *mut NflKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// # Safety
/// `k` must be a live kernel handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_kernel_eval(k: *const NflKernel, x: f64, out: *mut f64) -> NflStatus {
    guard(|| put(out, deref(k, "kernel")?.0.eval(x), "out"))
}

/// `∫J(x)e^{γx}dx`.
///
/// # Safety
/// `k` must be a live kernel handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_kernel_exp_moment(k: *const NflKernel, gamma: f64, out: *mut f64) -> NflStatus {
    guard(|| {
        let v = lift(deref(k, "kernel")?.0.exp_moment(gamma))?;
        put(out, v, "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_nonlinearity_kpp(f0: f64, out: *mut *mut NflNonlinearity) -> NflStatus {
    guard(|| put(out, boxed(NflNonlinearity(lift(Homogeneous::kpp(f0))?.into())), "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_nonlinearity_ignition(theta: f64, a: f64, out: *mut *mut NflNonlinearity) -> NflStatus {
    guard(|| put(out, boxed(NflNonlinearity(lift(Homogeneous::ignition(theta, a))?.into())), "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_nonlinearity_bistable(theta: f64, out: *mut *mut NflNonlinearity) -> NflStatus {
    guard(|| put(out, boxed(NflNonlinearity(lift(Homogeneous::bistable(theta))?.into())), "out"))
}

/// # Safety
/// `f` must come from a nonlinearity constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nfl_nonlinearity_free(f: *mut NflNonlinearity) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `f(t, x, u)` for `u ∈ [0, 1]`.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_nonlinearity_eval(
    f: *const NflNonlinearity,
    t: f64,
    x: f64,
    u: f64,
    out: *mut f64,
) -> NflStatus {
    guard(|| {
        let v = lift(deref(f, "nonlinearity")?.0.eval_f(t, x, u))?;
        put(out, v, "out")
    })
}

/// Copies `n` samples on the grid `x0 + i·dx` with constant tails `u_left`, `u_right`.
///
/// # Safety
/// `values` must point to `n` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_field_new(
    x0: f64,
    dx: f64,
    values: *const f64,
    n: usize,
    u_left: f64,
    u_right: f64,
    out: *mut *mut NflField,
) -> NflStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let v = std::slice::from_raw_parts(values, n).to_vec();
        let s = lift(FieldState::new(x0, dx, v, u_left, u_right, 0.0))?;
        put(out, boxed(NflField(s)), "out")
    })
}

/// # Safety
/// `s` must come from a field constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nfl_field_free(s: *mut NflField) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `len` and `t` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_field_info(s: *const NflField, len: *mut usize, t: *mut f64) -> NflStatus {
    guard(|| {
        let s = &deref(s, "field")?.0;
        put(len, s.len(), "len")?;
        put(t, s.t, "t")
    })
}

/// Copies the samples into `buf`, which must hold at least the field length.
///
/// # Safety
/// `s` must be a live handle and `buf` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn nfl_field_values(s: *const NflField, buf: *mut f64, cap: usize) -> NflStatus {
    guard(|| {
        let s = &deref(s, "field")?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if cap < s.len() {
            set_error(format!("buffer holds {cap}, need {}", s.len()));
            return Err(NflStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(s.values.as_ptr(), buf, s.len());
        Ok(())
    })
}

/// Evolves `u0` to `t_end` on a fixed window and returns the final state as a new field.
///
/// # Safety
/// All handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_evolve(
    u0: *const NflField,
    f: *const NflNonlinearity,
    k: *const NflKernel,
    t_end: f64,
    dt: f64,
    out: *mut *mut NflField,
) -> NflStatus {
    guard(|| {
        let (u0, f, k) = (&deref(u0, "u0")?.0, &deref(f, "nonlinearity")?.0, &deref(k, "kernel")?.0);
        let opts = EvolveOptions { recenter: None, save_every: usize::MAX };
        let traj = lift(evolution::evolve(u0, t_end, dt, f, k, opts))?;
        put(out, boxed(NflField(traj.last().clone())), "out")
    })
}

/// Leftmost and rightmost crossings of `level`.
///
/// # Safety
/// `s` must be a live handle; `minus` and `plus` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_interface_locations(
    s: *const NflField,
    level: f64,
    minus: *mut f64,
    plus: *mut f64,
) -> NflStatus {
    guard(|| {
        let (a, b) = lift(fronts::interface_locations(&deref(s, "field")?.0, level))?;
        put(minus, a, "minus")?;
        put(plus, b, "plus")
    })
}

/// `c_r = (∫J e^{rx} - 1 + f0)/r`.
///
/// # Safety
/// `k` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_kpp_speed(k: *const NflKernel, f0: f64, r: f64, out: *mut f64) -> NflStatus {
    guard(|| {
        let c = lift(waves::kpp_speed(&deref(k, "kernel")?.0, f0, r))?;
        put(out, c, "out")
    })
}

/// Traveling wave for a bistable or ignition nonlinearity with default solver options.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_wave_solve(
    f: *const NflNonlinearity,
    k: *const NflKernel,
    out: *mut *mut NflWave,
) -> NflStatus {
    guard(|| {
        let h = match deref(f, "nonlinearity")?.0 {
            Nonlinearity::Homogeneous(h) => h,
            Nonlinearity::Heterogeneous(_) => {
                set_error("wave solver needs a homogeneous nonlinearity".into());
                return Err(NflStatus::InvalidArgument);
            }
        };
        let k = &deref(k, "kernel")?.0;
        let w = lift(waves::solve_wave(&h, k, &WaveOptions::for_kernel(k)))?;
        put(out, boxed(NflWave(w)), "out")
    })
}

/// # Safety
/// `w` must come from `nfl_wave_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nfl_wave_free(w: *mut NflWave) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Speed, sup-norm residual and profile length.
///
/// # Safety
/// `w` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_wave_info(
    w: *const NflWave,
    speed: *mut f64,
    residual: *mut f64,
    len: *mut usize,
) -> NflStatus {
    guard(|| {
        let w = &deref(w, "wave")?.0;
        put(speed, w.c, "speed")?;
        put(residual, w.residual, "residual")?;
        put(len, w.phi.len(), "len")
    })
}

/// Profile value at `x` (interpolated; tails outside the grid).
///
/// # Safety
/// `w` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nfl_wave_eval(w: *const NflWave, x: f64, out: *mut f64) -> NflStatus {
    guard(|| put(out, deref(w, "wave")?.0.eval(x), "out"))
}
