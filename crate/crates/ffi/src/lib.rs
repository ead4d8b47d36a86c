//! C ABI over `rabi-vqe`.
//!
//! Problems and runs are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`RabiStatus`]; on failure the
//! message is kept per thread and can be copied out with
//! [`rabi_last_error_message`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rabi_vqe::analysis::{uniform_axis, wigner};
use rabi_vqe::ansatz::AnsatzParams;
use rabi_vqe::hilbert::{partial_trace_spin, HilbertConfig};
use rabi_vqe::model::RabiParams;
use rabi_vqe::vqe::{OptimizerConfig, VqeProblem, VqeRun};
use rabi_vqe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RabiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Hamiltonian, compiled ansatz and exact ground state for one parameter point.
pub struct RabiProblem(VqeProblem);

/// Result of one optimization.
pub struct RabiRun(VqeRun);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> RabiStatus {
    match err.exit_code() {
        1 => RabiStatus::InvalidArgument,
        _ => RabiStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RabiStatus, String)>) -> RabiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RabiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside rabi-vqe");
            RabiStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RabiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RabiStatus, String) {
    (RabiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RabiStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (RabiStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn thetas_from(ptr: *const f64, len: usize) -> Result<AnsatzParams, (RabiStatus, String)> {
    if len == 0 {
        return Ok(AnsatzParams::zeros(0));
    }
    if ptr.is_null() {
        return Err(null("thetas"));
    }
    AnsatzParams::from_flat(std::slice::from_raw_parts(ptr, len)).map_err(lib_err)
}

/// Builds a problem for `H = ω₀ a†a + (Ω/2) σz − λ (a + a†) σx` with Fock
/// states `0..=fock_cutoff`. On success `*out_problem` owns the new handle.
///
/// # Safety
/// `out_problem` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_new(
    omega0: f64,
    omega: f64,
    lambda: f64,
    fock_cutoff: usize,
    out_problem: *mut *mut RabiProblem,
) -> RabiStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = ptr::null_mut();
        let params = RabiParams::new(omega0, omega, lambda).map_err(lib_err)?;
        let cfg = HilbertConfig::new(fock_cutoff).map_err(lib_err)?;
        let problem = VqeProblem::new(&params, &cfg).map_err(lib_err)?;
        *slot = Box::into_raw(Box::new(RabiProblem(problem)));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`rabi_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_free(problem: *mut RabiProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Exact ground energy of the truncated Hamiltonian.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_ground_energy(problem: *const RabiProblem, out_energy: *mut f64) -> RabiStatus {
    guard(|| {
        *out(out_energy, "out_energy")? = deref(problem, "problem")?.0.ground.energy;
        Ok(())
    })
}

/// Energy of the ansatz state for `len = 3p` angles laid out as
/// `α₁ β₁ γ₁ α₂ …`.
///
/// # Safety
/// `thetas` must point to `len` readable doubles (or `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_cost(
    problem: *const RabiProblem,
    thetas: *const f64,
    len: usize,
    out_energy: *mut f64,
) -> RabiStatus {
    guard(|| {
        let problem = deref(problem, "problem")?;
        let params = thetas_from(thetas, len)?;
        *out(out_energy, "out_energy")? = problem.0.cost(&params).map_err(lib_err)?;
        Ok(())
    })
}

/// Fidelity of the ansatz state with the exact ground state.
///
/// # Safety
/// As for [`rabi_problem_cost`].
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_fidelity(
    problem: *const RabiProblem,
    thetas: *const f64,
    len: usize,
    out_fidelity: *mut f64,
) -> RabiStatus {
    guard(|| {
        let problem = deref(problem, "problem")?;
        let params = thetas_from(thetas, len)?;
        *out(out_fidelity, "out_fidelity")? = problem.0.fidelity(&params).map_err(lib_err)?;
        Ok(())
    })
}

/// Optimizes a depth-`depth` circuit with the default optimizer settings
/// apart from `restarts` and `seed`. `warm`, if non-null, holds the
/// `3(depth − 1)` angles of a shallower solution.
///
/// # Safety
/// `warm` must point to `warm_len` readable doubles when non-null; `out_run`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_optimize(
    problem: *const RabiProblem,
    depth: usize,
    restarts: usize,
    seed: u64,
    warm: *const f64,
    warm_len: usize,
    out_run: *mut *mut RabiRun,
) -> RabiStatus {
    guard(|| {
        let slot = out(out_run, "out_run")?;
        *slot = ptr::null_mut();
        let problem = deref(problem, "problem")?;
        let warm = if warm.is_null() { None } else { Some(thetas_from(warm, warm_len)?) };
        let cfg = OptimizerConfig {
            restarts,
            seed,
            ..Default::default()
        };
        let run = problem.0.optimize_depth(depth, &cfg, warm.as_ref()).map_err(lib_err)?;
        *slot = Box::into_raw(Box::new(RabiRun(run)));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from [`rabi_problem_optimize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rabi_run_free(run: *mut RabiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Depth, best energy and infidelity of a run. Any output pointer may be null.
///
/// # Safety
/// `run` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rabi_run_summary(
    run: *const RabiRun,
    out_depth: *mut usize,
    out_energy: *mut f64,
    out_infidelity: *mut f64,
) -> RabiStatus {
    guard(|| {
        let run = &deref(run, "run")?.0;
        if let Some(d) = out_depth.as_mut() {
            *d = run.depth;
        }
        if let Some(e) = out_energy.as_mut() {
            *e = run.best_energy;
        }
        if let Some(f) = out_infidelity.as_mut() {
            *f = run.infidelity;
        }
        Ok(())
    })
}

/// Copies the optimized angles into `buf`, which must hold `3 · depth` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rabi_run_thetas(run: *const RabiRun, buf: *mut f64, len: usize) -> RabiStatus {
    guard(|| {
        let flat = deref(run, "run")?.0.best_thetas.to_flat();
        if len < flat.len() {
            return Err((RabiStatus::BufferTooSmall, format!("need {} doubles, got {len}", flat.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, flat.len()).copy_from_slice(&flat);
        Ok(())
    })
}

/// Wigner function of the ansatz state's boson mode on a square grid with
/// `points` samples on `[min, max]` per axis, written row-major with `q`
/// along rows into `buf` (`points²` doubles).
///
/// # Safety
/// `thetas` as for [`rabi_problem_cost`]; `buf` must point to `buf_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rabi_problem_wigner(
    problem: *const RabiProblem,
    thetas: *const f64,
    len: usize,
    min: f64,
    max: f64,
    points: usize,
    buf: *mut f64,
    buf_len: usize,
) -> RabiStatus {
    guard(|| {
        let problem = deref(problem, "problem")?;
        let params = thetas_from(thetas, len)?;
        let axis = uniform_axis(min, max, points).map_err(lib_err)?;
        let need = points * points;
        if buf_len < need {
            return Err((RabiStatus::BufferTooSmall, format!("need {need} doubles, got {buf_len}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let state = problem.0.state(&params).map_err(lib_err)?;
        let grid = wigner(&partial_trace_spin(&state).map_err(lib_err)?, &axis, &axis).map_err(lib_err)?;
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for i in 0..points {
            for j in 0..points {
                dst[i * points + j] = grid.values[(i, j)];
            }
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to fit, into `buf`. Returns the full message length excluding
/// the terminator, so a caller can size a second attempt.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rabi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn rabi_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}
