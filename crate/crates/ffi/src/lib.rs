//! C ABI over `muhs`.
//!
//! Objects are opaque handles created by `*_new`/`muhs_simulate` and released
//! with the matching `*_free`. Every fallible call returns a [`MuhsStatus`];
//! the message of the last failure on the calling thread is available from
//! [`muhs_last_error_message`]. Field arrays are `n` contiguous doubles,
//! where `n` is the grid size.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use muhs::dynamics::{Params, State};
use muhs::grid::{Field, PeriodicGrid};
use muhs::mollify::{mollify, MollifierSpec};
use muhs::operator::{ainv_formula, ainv_spectral, conv_green};
use muhs::timestepper::{run, TimeStepConfig, TrajectoryRecord};

/// Opaque grid handle.
pub struct MuhsGrid(PeriodicGrid);

/// Opaque recorded-trajectory handle.
pub struct MuhsTrajectory(TrajectoryRecord);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuhsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The run stopped early; the trajectory up to that point is returned.
    BlowUp = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuhsAinvRoute {
    Formula = 0,
    Spectral = 1,
    Convolution = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MuhsDiagnostics {
    pub t: f64,
    pub mu0: f64,
    pub energy: f64,
    pub u_sup: f64,
    pub ux_sup: f64,
    pub rho_sup: f64,
    pub rho_min: f64,
    pub sup_margin: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: MuhsStatus, msg: impl Into<String>) -> MuhsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> MuhsStatus) -> MuhsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(MuhsStatus::Panic, msg)
        }
    }
}

/// Copies the last error message (NUL-terminated, truncated to `len − 1`
/// bytes) into `buf` and returns the full message length. Pass a null `buf`
/// to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn muhs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a grid of `n` nodes (`n` even, at least 4).
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn muhs_grid_new(n: usize, out: *mut *mut MuhsGrid) -> MuhsStatus {
    guard(|| {
        if out.is_null() {
            return fail(MuhsStatus::NullPointer, "out is null");
        }
        match PeriodicGrid::new(n) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(MuhsGrid(g)));
                MuhsStatus::Ok
            }
            Err(e) => fail(MuhsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `grid` must be null or a handle from [`muhs_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn muhs_grid_free(grid: *mut MuhsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn muhs_grid_size(grid: *const MuhsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

unsafe fn read_field(grid: &PeriodicGrid, values: *const f64) -> Field {
    let v = std::slice::from_raw_parts(values, grid.n()).to_vec();
    Field::new(grid, v).expect("length matches grid")
}

unsafe fn write_field(f: &Field, out: *mut f64) {
    ptr::copy_nonoverlapping(f.values().as_ptr(), out, f.len());
}

unsafe fn map_field(
    grid: *const MuhsGrid,
    values: *const f64,
    out: *mut f64,
    op: impl FnOnce(&Field) -> Result<Field, MuhsStatus>,
) -> MuhsStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(MuhsStatus::NullPointer, "grid is null");
        };
        if values.is_null() || out.is_null() {
            return fail(MuhsStatus::NullPointer, "array is null");
        }
        let f = read_field(&g.0, values);
        match op(&f) {
            Ok(r) => {
                write_field(&r, out);
                MuhsStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Spectral derivative of `values` into `out`.
///
/// # Safety
/// `values` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn muhs_deriv(
    grid: *const MuhsGrid,
    values: *const f64,
    out: *mut f64,
) -> MuhsStatus {
    map_field(grid, values, out, |f| Ok(f.deriv()))
}

/// Mean over one period into `*out`.
///
/// # Safety
/// `values` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn muhs_mean(
    grid: *const MuhsGrid,
    values: *const f64,
    out: *mut f64,
) -> MuhsStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(MuhsStatus::NullPointer, "grid is null");
        };
        if values.is_null() || out.is_null() {
            return fail(MuhsStatus::NullPointer, "array is null");
        }
        *out = read_field(&g.0, values).mean();
        MuhsStatus::Ok
    })
}

/// `A⁻¹ values` by `route`, one of the [`MuhsAinvRoute`] values.
///
/// # Safety
/// `values` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn muhs_ainv(
    grid: *const MuhsGrid,
    route: u32,
    values: *const f64,
    out: *mut f64,
) -> MuhsStatus {
    map_field(grid, values, out, |f| match route {
        r if r == MuhsAinvRoute::Formula as u32 => Ok(ainv_formula(f)),
        r if r == MuhsAinvRoute::Spectral as u32 => Ok(ainv_spectral(f)),
        r if r == MuhsAinvRoute::Convolution as u32 => Ok(conv_green(f)),
        r => Err(fail(
            MuhsStatus::InvalidArgument,
            format!("unknown route {r}"),
        )),
    })
}

/// Convolution with the mollifier of index `index` (at least 2).
///
/// # Safety
/// `values` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn muhs_mollify(
    grid: *const MuhsGrid,
    index: usize,
    values: *const f64,
    out: *mut f64,
) -> MuhsStatus {
    map_field(grid, values, out, |f| match MollifierSpec::new(index) {
        Ok(spec) => Ok(mollify(f, &spec)),
        Err(e) => Err(fail(MuhsStatus::InvalidArgument, e.to_string())),
    })
}

/// Integrates from `(u0, rho0)` to `t_end`. On [`MuhsStatus::Ok`] and
/// [`MuhsStatus::BlowUp`] a trajectory handle is stored in `*out`.
///
/// # Safety
/// `u0` and `rho0` must each hold `n` doubles; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn muhs_simulate(
    grid: *const MuhsGrid,
    u0: *const f64,
    rho0: *const f64,
    gamma: f64,
    t_end: f64,
    dt_max: f64,
    cfl_number: f64,
    record_every: usize,
    out: *mut *mut MuhsTrajectory,
) -> MuhsStatus {
    guard(|| {
        let Some(g) = grid.as_ref() else {
            return fail(MuhsStatus::NullPointer, "grid is null");
        };
        if u0.is_null() || rho0.is_null() || out.is_null() {
            return fail(MuhsStatus::NullPointer, "argument is null");
        }
        let state = match State::new(read_field(&g.0, u0), read_field(&g.0, rho0), 0.0) {
            Ok(s) => s,
            Err(e) => return fail(MuhsStatus::InvalidArgument, e.to_string()),
        };
        let cfg = TimeStepConfig {
            cfl_number,
            record_every,
            ..TimeStepConfig::new(t_end, dt_max)
        };
        match run(&state, &Params::new(gamma), &cfg) {
            Ok(traj) => {
                let blew_up = traj.blew_up();
                *out = Box::into_raw(Box::new(MuhsTrajectory(traj)));
                if blew_up {
                    fail(MuhsStatus::BlowUp, "blow-up detected")
                } else {
                    MuhsStatus::Ok
                }
            }
            Err(e) => fail(MuhsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Number of recorded snapshots, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn muhs_trajectory_len(traj: *const MuhsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.snapshots.len())
}

/// Diagnostics of snapshot `index`.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn muhs_trajectory_diagnostics(
    traj: *const MuhsTrajectory,
    index: usize,
    out: *mut MuhsDiagnostics,
) -> MuhsStatus {
    guard(|| {
        let Some(t) = traj.as_ref() else {
            return fail(MuhsStatus::NullPointer, "trajectory is null");
        };
        if out.is_null() {
            return fail(MuhsStatus::NullPointer, "out is null");
        }
        let Some(s) = t.0.snapshots.get(index) else {
            return fail(
                MuhsStatus::InvalidArgument,
                format!("snapshot {index} out of range"),
            );
        };
        let d = s.diagnostics;
        *out = MuhsDiagnostics {
            t: d.t,
            mu0: d.mu0,
            energy: d.energy,
            u_sup: d.u_sup,
            ux_sup: d.ux_sup,
            rho_sup: d.rho_sup,
            rho_min: d.rho_min,
            sup_margin: d.sup_margin,
        };
        MuhsStatus::Ok
    })
}

/// Copies snapshot `index` into `u_out`, `rho_out` (each `n` doubles) and
/// its time into `t_out`.
///
/// # Safety
/// `traj` must be a live handle and the outputs writable.
#[no_mangle]
pub unsafe extern "C" fn muhs_trajectory_state(
    traj: *const MuhsTrajectory,
    index: usize,
    u_out: *mut f64,
    rho_out: *mut f64,
    t_out: *mut f64,
) -> MuhsStatus {
    guard(|| {
        let Some(t) = traj.as_ref() else {
            return fail(MuhsStatus::NullPointer, "trajectory is null");
        };
        if u_out.is_null() || rho_out.is_null() || t_out.is_null() {
            return fail(MuhsStatus::NullPointer, "output is null");
        }
        let Some(s) = t.0.snapshots.get(index) else {
            return fail(
                MuhsStatus::InvalidArgument,
                format!("snapshot {index} out of range"),
            );
        };
        write_field(&s.state.u, u_out);
        write_field(&s.state.rho, rho_out);
        *t_out = s.state.t;
        MuhsStatus::Ok
    })
}

/// # Safety
/// `traj` must be null or a handle from [`muhs_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn muhs_trajectory_free(traj: *mut MuhsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
