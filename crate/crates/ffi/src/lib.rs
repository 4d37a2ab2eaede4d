//! C ABI over `wallgrowth`.
//!
//! Every fallible function returns a [`WgStatus`] and writes results through out-pointers.
//! Simulators are opaque handles owned by the caller and released with [`wg_sim_free`].

use libc::c_char;
use num::BigRational;
use std::panic::{catch_unwind, AssertUnwindSafe};
use wallgrowth::asymptotics::{cov_spacelike, cov_timelike, limit_height, AsymptoticsError};
use wallgrowth::correlation::{kernel_checked, KernelConfig, SpaceTimePoint};
use wallgrowth::growth_sim::{LevelIndex, ParticleSystem, SimError};
use wallgrowth::special_fn::Parity;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Simulation = 3,
    Kernel = 4,
    OutsideRegion = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque simulator handle.
pub struct WgSimulator {
    inner: ParticleSystem,
}

fn guard(f: impl FnOnce() -> WgStatus) -> WgStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(WgStatus::Panic)
}

fn sim_status(e: SimError) -> WgStatus {
    match e {
        SimError::EmptySystem | SimError::TimeReversal { .. } | SimError::MissingLevel(_) => WgStatus::InvalidArgument,
        _ => WgStatus::Simulation,
    }
}

/// Static description of a status code; never null, never freed by the caller.
#[no_mangle]
pub extern "C" fn wg_status_message(status: WgStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        WgStatus::Ok => b"ok\0",
        WgStatus::NullPointer => b"null pointer argument\0",
        WgStatus::InvalidArgument => b"invalid argument\0",
        WgStatus::Simulation => b"simulation error\0",
        WgStatus::Kernel => b"kernel evaluation failed\0",
        WgStatus::OutsideRegion => b"point outside the liquid region\0",
        WgStatus::BufferTooSmall => b"output buffer too small\0",
        WgStatus::Panic => b"internal panic\0",
    };
    s.as_ptr() as *const c_char
}

/// Create a densely packed simulator with `n_max` levels.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_new(n_max: usize, seed: u64, out: *mut *mut WgSimulator) -> WgStatus {
    if out.is_null() {
        return WgStatus::NullPointer;
    }
    guard(|| match ParticleSystem::new_densely_packed(n_max, seed) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(WgSimulator { inner }));
            WgStatus::Ok
        }
        Err(e) => sim_status(e),
    })
}

/// Release a handle from [`wg_sim_new`]. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_free(sim: *mut WgSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Run the dynamics until time `t`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_advance(sim: *mut WgSimulator, t: f64) -> WgStatus {
    let Some(sim) = sim.as_mut() else { return WgStatus::NullPointer };
    guard(|| match sim.inner.advance_to(t) {
        Ok(()) => WgStatus::Ok,
        Err(e) => sim_status(e),
    })
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_clock(sim: *const WgSimulator, out: *mut f64) -> WgStatus {
    let (Some(sim), false) = (sim.as_ref(), out.is_null()) else { return WgStatus::NullPointer };
    *out = sim.inner.clock();
    WgStatus::Ok
}

fn level_slice(sim: &WgSimulator, big_n: usize) -> Option<&[i64]> {
    if big_n == 0 || big_n > sim.inner.n_max() {
        return None;
    }
    let lv = LevelIndex::from_flat(big_n);
    Some(&sim.inner.levels()[lv.flat() - 1])
}

/// Number of particles on flat level `big_n` (1-based).
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_level_len(sim: *const WgSimulator, big_n: usize, out: *mut usize) -> WgStatus {
    let (Some(sim), false) = (sim.as_ref(), out.is_null()) else { return WgStatus::NullPointer };
    match level_slice(sim, big_n) {
        Some(xs) => {
            *out = xs.len();
            WgStatus::Ok
        }
        None => WgStatus::InvalidArgument,
    }
}

/// Copy the positions of level `big_n`, rightmost first, into `buf`.
///
/// `*len` receives the particle count even when `cap` is too small.
///
/// # Safety
/// `sim` must be a live handle, `buf` valid for `cap` writes and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn wg_sim_level_positions(
    sim: *const WgSimulator,
    big_n: usize,
    buf: *mut i64,
    cap: usize,
    len: *mut usize,
) -> WgStatus {
    let (Some(sim), false) = (sim.as_ref(), len.is_null()) else { return WgStatus::NullPointer };
    let Some(xs) = level_slice(sim, big_n) else { return WgStatus::InvalidArgument };
    *len = xs.len();
    if cap < xs.len() {
        return WgStatus::BufferTooSmall;
    }
    if buf.is_null() && !xs.is_empty() {
        return WgStatus::NullPointer;
    }
    std::ptr::copy_nonoverlapping(xs.as_ptr(), buf, xs.len());
    WgStatus::Ok
}

fn parity(twice_a: i32) -> Option<Parity> {
    match twice_a {
        -1 => Some(Parity::Minus),
        1 => Some(Parity::Plus),
        _ => None,
    }
}

/// Correlation kernel `K((n1, a1, t1, s1), (n2, a2, t2, s2))` with `ω = 0`.
///
/// `twice_a` is `-1` for `a = −1/2` and `1` for `a = +1/2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wg_kernel(
    n1: usize,
    twice_a1: i32,
    t1: f64,
    s1: usize,
    n2: usize,
    twice_a2: i32,
    t2: f64,
    s2: usize,
    out: *mut f64,
) -> WgStatus {
    if out.is_null() {
        return WgStatus::NullPointer;
    }
    let (Some(a1), Some(a2)) = (parity(twice_a1), parity(twice_a2)) else { return WgStatus::InvalidArgument };
    if n1 == 0 || n2 == 0 || !(t1 >= 0.0) || !(t2 >= 0.0) {
        return WgStatus::InvalidArgument;
    }
    guard(|| {
        let p = SpaceTimePoint::new(n1, a1, t1, s1);
        let q = SpaceTimePoint::new(n2, a2, t2, s2);
        match kernel_checked(&p, &q, &KernelConfig::default()) {
            Ok(v) => {
                *out = v;
                WgStatus::Ok
            }
            Err(_) => WgStatus::Kernel,
        }
    })
}

/// Limit-shape height at `(ν, η, τ)` inside the liquid region.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_limit_height(nu: f64, eta: f64, tau: f64, out: *mut f64) -> WgStatus {
    if out.is_null() {
        return WgStatus::NullPointer;
    }
    guard(|| match limit_height(nu, eta, tau) {
        Ok(h) => {
            *out = h;
            WgStatus::Ok
        }
        Err(AsymptoticsError::OutsideRegion(..)) => WgStatus::OutsideRegion,
        Err(_) => WgStatus::InvalidArgument,
    })
}

fn exact(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Limiting covariance of `p_{2k_i}` and `p_{2k_j}`, on whichever branch the parameters select.
///
/// Doubles are converted to rationals exactly before the exact computation.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wg_covariance(
    k_i: u32,
    k_j: u32,
    eta_i: f64,
    tau_i: f64,
    eta_j: f64,
    tau_j: f64,
    out: *mut f64,
) -> WgStatus {
    if out.is_null() {
        return WgStatus::NullPointer;
    }
    let (Some(ei), Some(ti), Some(ej), Some(tj)) = (exact(eta_i), exact(tau_i), exact(eta_j), exact(tau_j)) else {
        return WgStatus::InvalidArgument;
    };
    if k_i == 0 || k_j == 0 || k_i > 16 || k_j > 16 {
        return WgStatus::InvalidArgument;
    }
    guard(|| {
        let v = if ei >= ej { cov_spacelike(k_i, k_j, &ei, &ti, &ej, &tj) } else { cov_timelike(k_i, k_j, &ei, &ti, &ej, &tj) };
        match v {
            Ok(v) => {
                *out = wallgrowth::exact::to_f64(&v);
                WgStatus::Ok
            }
            Err(_) => WgStatus::InvalidArgument,
        }
    })
}
