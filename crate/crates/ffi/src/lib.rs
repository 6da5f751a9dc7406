//! C ABI over the `cosra` solver.
//!
//! Games and solutions are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns a [`CosraStatus`]; on failure a message is available from
//! [`cosra_last_error_message`] until the next failing call on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cosra::metrics::{hilbert_vec, PosVector};
use cosra::{io, rvi_km_solve, Discretization, Error, GameInstance, SolveOptions, SolveResult};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or CSV.
    Parse = 3,
    /// The input is well-formed but describes an invalid game or argument.
    Validation = 4,
    /// The solver failed (resolution too coarse, iteration cap, ...).
    Solver = 5,
    /// Output buffer too small.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque game handle.
pub struct CosraGame(GameInstance);

/// Opaque solution handle.
pub struct CosraSolution {
    result: SolveResult,
    resolution: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> CosraStatus {
    match e {
        Error::Parse(_) => CosraStatus::Parse,
        _ if e.exit_code() == 2 => CosraStatus::Validation,
        _ => CosraStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CosraStatus, String)>) -> CosraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CosraStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside cosra");
            CosraStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CosraStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CosraStatus, String) {
    (CosraStatus::NullPointer, format!("{what} is NULL"))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cosra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a game description (JSON text) into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cosra_game_from_json(json: *const c_char, out: *mut *mut CosraGame) -> CosraStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| (CosraStatus::InvalidUtf8, e.to_string()))?;
        let game = io::parse_game(text).map_err(lib_err)?;
        game.clone().validate().map_err(lib_err)?;
        // SAFETY: `out` checked non-null; caller guarantees it is writable.
        unsafe { *out = Box::into_raw(Box::new(CosraGame(game))) };
        Ok(())
    })
}

/// The built-in Leslie population game.
#[no_mangle]
pub extern "C" fn cosra_game_leslie_benchmark() -> *mut CosraGame {
    Box::into_raw(Box::new(CosraGame(GameInstance::leslie_benchmark())))
}

/// # Safety
/// `game` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cosra_game_free(game: *mut CosraGame) {
    if !game.is_null() {
        // SAFETY: caller guarantees `game` came from `Box::into_raw` here.
        drop(unsafe { Box::from_raw(game) });
    }
}

/// State dimension, or 0 for NULL.
///
/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cosra_game_dim(game: *const CosraGame) -> usize {
    // SAFETY: caller guarantees a live handle or NULL.
    unsafe { game.as_ref() }.map_or(0, |g| g.0.dim())
}

/// Solves `game` on the lattice of resolution `resolution`. A `stop` of
/// zero or less selects the default threshold `1/resolution`.
///
/// # Safety
/// `game` must be a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn cosra_solve(
    game: *const CosraGame,
    resolution: usize,
    stop: f64,
    out: *mut *mut CosraSolution,
) -> CosraStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let g = unsafe { game.as_ref() }.ok_or_else(|| null("game"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let validated = g.0.clone().validate().map_err(lib_err)?;
        let disc = Discretization::new(validated, resolution).map_err(lib_err)?;
        let opts = SolveOptions {
            stop: (stop > 0.0).then_some(stop),
            v0: None,
        };
        let result = rvi_km_solve(&disc, &opts).map_err(lib_err)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = Box::into_raw(Box::new(CosraSolution { result, resolution })) };
        Ok(())
    })
}

/// # Safety
/// `sol` must be NULL or a handle from [`cosra_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cosra_solution_free(sol: *mut CosraSolution) {
    if !sol.is_null() {
        // SAFETY: caller guarantees `sol` came from `Box::into_raw` here.
        drop(unsafe { Box::from_raw(sol) });
    }
}

macro_rules! accessor {
    ($(#[$doc:meta])* $name:ident -> $ty:ty, $default:expr, |$s:ident| $body:expr) => {
        $(#[$doc])*
        ///
        /// # Safety
        /// `sol` must be NULL or a live solution handle.
        #[no_mangle]
        pub unsafe extern "C" fn $name(sol: *const CosraSolution) -> $ty {
            // SAFETY: caller guarantees a live handle or NULL.
            match unsafe { sol.as_ref() } {
                Some($s) => $body,
                None => $default,
            }
        }
    };
}

accessor!(
    /// Additive eigenvalue `λ` (NaN for NULL).
    cosra_solution_lambda -> f64, f64::NAN, |s| s.result.lambda);
accessor!(
    /// Growth rate `exp λ` (NaN for NULL).
    cosra_solution_growth_rate -> f64, f64::NAN, |s| s.result.growth_rate());
accessor!(
    /// Lower end of the certified interval for `log ρ`.
    cosra_solution_lower -> f64, f64::NAN, |s| s.result.interval[0]);
accessor!(
    /// Upper end of the certified interval for `log ρ`.
    cosra_solution_upper -> f64, f64::NAN, |s| s.result.interval[1]);
accessor!(
    /// Error scale `h` used for the interval.
    cosra_solution_h -> f64, f64::NAN, |s| s.result.h_used);
accessor!(cosra_solution_iterations -> usize, 0, |s| s.result.iterations);
accessor!(cosra_solution_grid_points -> usize, 0, |s| s.result.grid_points);
accessor!(cosra_solution_resolution -> usize, 0, |s| s.resolution);
accessor!(cosra_solution_base_index -> usize, 0, |s| s.result.value.base_index);

/// Copies the value function (one entry per grid point) into `buf`.
///
/// # Safety
/// `sol` must be a live handle and `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn cosra_solution_values(sol: *const CosraSolution, buf: *mut f64, len: usize) -> CosraStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL.
        let s = unsafe { sol.as_ref() }.ok_or_else(|| null("solution"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = &s.result.value.values;
        if len < v.len() {
            return Err((CosraStatus::BufferTooSmall, format!("need {} entries, got {len}", v.len())));
        }
        // SAFETY: `buf` has room for `len ≥ v.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len()) };
        Ok(())
    })
}

/// Hilbert projective distance between two length-`n` nonnegative vectors.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles, `out` to one writable.
#[no_mangle]
pub unsafe extern "C" fn cosra_hilbert(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> CosraStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        // SAFETY: caller guarantees `n` readable doubles behind each pointer.
        let (xs, ys) = unsafe { (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n)) };
        let px = PosVector::new(xs.to_vec()).map_err(lib_err)?;
        let py = PosVector::new(ys.to_vec()).map_err(lib_err)?;
        let d = hilbert_vec(&px, &py).map_err(lib_err)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = d };
        Ok(())
    })
}
