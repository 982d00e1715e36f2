//! C ABI over randgp-core.
//!
//! Every function returns a `RandgpStatus`; results come back through out
//! pointers. Handles are opaque and must be released with the matching
//! `*_free`. The text of the most recent error on the calling thread is
//! available from `randgp_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use randgp::harness::{run, write_reports, ExperimentConfig};
use randgp::omega::{omega_averaged_sq_norm, CollisionBuilder, OmegaAverageMethod};
use randgp::operators::{collide, free_evolve, CollisionIndex};
use randgp::randomization::{randomized_collide, SignField};
use randgp::{DensityMatrix, Error, Freq, Key, LatticeBox, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandgpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBox = 3,
    OrderMismatch = 4,
    Capacity = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque sparse density matrix.
pub struct RandgpMatrix(DensityMatrix);

/// Opaque experiment configuration.
pub struct RandgpConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RandgpStatus {
    match e {
        Error::OutOfBox { .. } => RandgpStatus::OutOfBox,
        Error::OrderMismatch { .. } | Error::MissingOrder { .. } => RandgpStatus::OrderMismatch,
        Error::Capacity { .. } => RandgpStatus::Capacity,
        Error::Parse { .. } => RandgpStatus::Parse,
        Error::Io(_) => RandgpStatus::Io,
        _ => RandgpStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RandgpStatus, String)>) -> RandgpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RandgpStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            RandgpStatus::Panic
        }
    }
}

fn core<T>(r: randgp::Result<T>) -> Result<T, (RandgpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RandgpStatus, String) {
    (RandgpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (RandgpStatus, String) {
    (RandgpStatus::InvalidArgument, msg.into())
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RandgpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn matrix<'a>(m: *const RandgpMatrix) -> Result<&'a DensityMatrix, (RandgpStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("matrix"))
}

unsafe fn emit(out: *mut *mut RandgpMatrix, m: DensityMatrix) -> Result<(), (RandgpStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(RandgpMatrix(m)));
    Ok(())
}

/// `coords` holds 2·order·d integers: unprimed slots, then primed, each slot d coordinates.
unsafe fn key(m: &DensityMatrix, coords: *const i32, len: usize) -> Result<Key, (RandgpStatus, String)> {
    if coords.is_null() {
        return Err(null("coords"));
    }
    let d = m.lattice().dim();
    let n = m.order();
    if len != 2 * n * d {
        return Err(invalid(format!("expected {} coordinates, got {len}", 2 * n * d)));
    }
    let c = std::slice::from_raw_parts(coords, len);
    let freqs: Vec<Freq> = c.chunks(d).map(Freq::new).collect();
    for f in &freqs {
        core(m.lattice().check(f))?;
    }
    Ok(Key::from_vec(freqs))
}

fn collision(j: usize, k: usize, plus: bool) -> CollisionIndex {
    if plus {
        CollisionIndex::plus(j, k)
    } else {
        CollisionIndex::minus(j, k)
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn randgp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread; valid until the next failure.
#[no_mangle]
pub extern "C" fn randgp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_new(order: usize, d: usize, cutoff: u32, out: *mut *mut RandgpMatrix) -> RandgpStatus {
    guard(|| {
        let lat = core(LatticeBox::new(d, cutoff))?;
        emit(out, DensityMatrix::zero(order, lat))
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_free(m: *mut RandgpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` valid; `coords` points to `len` integers.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_set(m: *mut RandgpMatrix, coords: *const i32, len: usize, re: f64, im: f64) -> RandgpStatus {
    guard(|| {
        let g = m.as_mut().map(|m| &mut m.0).ok_or_else(|| null("matrix"))?;
        let k = key(g, coords, len)?;
        core(g.insert(k, C64::new(re, im)))
    })
}

/// # Safety
/// `m` valid; `coords` points to `len` integers; `re`, `im` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_get(
    m: *const RandgpMatrix,
    coords: *const i32,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        let k = key(g, coords, len)?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let v = g.get(&k);
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Number of stored coefficients.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_len(m: *const RandgpMatrix, out: *mut usize) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        *out.as_mut().ok_or_else(|| null("out"))? = g.len();
        Ok(())
    })
}

/// ‖S^(α) γ‖_{L²}.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_matrix_norm(m: *const RandgpMatrix, alpha: f64, out: *mut f64) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        *out.as_mut().ok_or_else(|| null("out"))? = g.weighted_norm(alpha);
        Ok(())
    })
}

/// U(t)γ as a new matrix.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_free_evolve(m: *const RandgpMatrix, t: f64, out: *mut *mut RandgpMatrix) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        emit(out, free_evolve(g, t))
    })
}

/// B^±_{j,k} γ; `plus` selects the sign.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_collide(
    m: *const RandgpMatrix,
    j: usize,
    k: usize,
    plus: bool,
    out: *mut *mut RandgpMatrix,
) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        emit(out, core(collide(g, collision(j, k, plus)))?)
    })
}

/// [B^±_{j,k}]^ω γ with the hashed sign field of `seed`.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_randomized_collide(
    m: *const RandgpMatrix,
    j: usize,
    k: usize,
    plus: bool,
    seed: u64,
    out: *mut *mut RandgpMatrix,
) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        emit(out, core(randomized_collide(g, collision(j, k, plus), &SignField::hashed(seed)))?)
    })
}

/// E_ω ‖S^(α) [B_{j,m}]^ω γ‖² for m the order of γ; `enumerate` selects the
/// 2^M oracle instead of the exact rule.
///
/// # Safety
/// `m` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_pair_sq_norm(
    m: *const RandgpMatrix,
    j: usize,
    alpha: f64,
    enumerate: bool,
    out: *mut f64,
) -> RandgpStatus {
    guard(|| {
        let g = matrix(m)?;
        let method = if enumerate { OmegaAverageMethod::Enumerate } else { OmegaAverageMethod::Exact };
        let b = CollisionBuilder::pair(g.clone(), j);
        let v = core(omega_averaged_sq_norm(&b, alpha, method))?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Parse a `key = value` configuration for the named experiment.
///
/// # Safety
/// `experiment` and `text` are NUL-terminated (text may be null); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_config_new(
    experiment: *const c_char,
    text: *const c_char,
    out: *mut *mut RandgpConfig,
) -> RandgpStatus {
    guard(|| {
        let name = cstr(experiment, "experiment")?;
        let mut cfg = ExperimentConfig::default();
        if !text.is_null() {
            core(cfg.apply_text(cstr(text, "text")?))?;
        }
        core(cfg.set("experiment", name))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(RandgpConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` valid; `key`, `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn randgp_config_set(cfg: *mut RandgpConfig, key: *const c_char, value: *const c_char) -> RandgpStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or_else(|| null("config"))?;
        core(c.0.set(cstr(key, "key")?, cstr(value, "value")?))
    })
}

/// # Safety
/// `cfg` from this library, not freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn randgp_config_free(cfg: *mut RandgpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the experiment, write its CSV/JSON under `out_dir` (null: the
/// configured directory) and report whether its check passed.
///
/// # Safety
/// `cfg` valid; `out_dir` null or NUL-terminated; `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn randgp_run(cfg: *const RandgpConfig, out_dir: *const c_char, passed: *mut bool) -> RandgpStatus {
    guard(|| {
        let c = &cfg.as_ref().ok_or_else(|| null("config"))?.0;
        let out = core(run(c))?;
        let dir = if out_dir.is_null() { c.out.clone() } else { Path::new(cstr(out_dir, "out_dir")?).to_path_buf() };
        core(write_reports(&out, &dir))?;
        *passed.as_mut().ok_or_else(|| null("passed"))? = out.passed;
        Ok(())
    })
}
