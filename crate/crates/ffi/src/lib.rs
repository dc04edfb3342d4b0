//! C ABI over `cellload`.
//!
//! Every fallible function returns a [`CellloadStatus`] and writes its
//! result through an out pointer. On failure a message is kept per thread
//! and can be read with [`cellload_last_error_message`]. Models are opaque
//! handles created with [`cellload_model_new`] and released with
//! [`cellload_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use cellload::analytic::{self, ConstantMode, LoadModel};
use cellload::linkbudget::{NetworkParams, TrafficParams};
use cellload::specfun::{self, ApproxMode};
use cellload::Error;

/// Status codes. `CELLLOAD_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellloadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    ValidityRegion = 4,
    NoConvergence = 5,
    Unstable = 6,
    Unsupported = 7,
    Panic = 8,
}

/// Selects the exact or the asymptotic evaluation path.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellloadApprox {
    Reference = 0,
    PaperApprox = 1,
}

/// Load-constant convention.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellloadConstantMode {
    Rederived = 0,
    PaperLiteral = 1,
}

/// Model inputs in SI units, except powers and gains in dB.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellloadParams {
    /// BS density [m⁻²].
    pub lambda_bs: f64,
    pub pt_dbm: f64,
    pub g0_db: f64,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub k_pathloss_db: f64,
    pub alpha: f64,
    /// Flow arrival intensity [users·s⁻¹·m⁻²].
    pub lambda_u: f64,
    pub sigma_bits: f64,
    pub constant_mode: CellloadConstantMode,
}

/// Opaque model handle.
pub struct CellloadModel {
    inner: LoadModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CellloadStatus {
    match e {
        Error::Domain { .. } => CellloadStatus::Domain,
        Error::InvalidParameter { .. } | Error::Config(_) => CellloadStatus::InvalidParameter,
        Error::HighSnrViolation { .. } | Error::CellLargerThanValidityRegion { .. } => {
            CellloadStatus::ValidityRegion
        }
        Error::NoConvergence { .. } => CellloadStatus::NoConvergence,
        Error::Unstable(_) => CellloadStatus::Unstable,
        Error::RequiresAlphaTwo(_)
        | Error::EmptyRealization
        | Error::InsufficientSamples { .. } => CellloadStatus::Unsupported,
    }
}

/// Runs `f`, stores its value in `out` and maps errors and panics.
fn guarded<F>(out: *mut f64, f: F) -> CellloadStatus
where
    F: FnOnce() -> cellload::Result<f64> + UnwindSafe,
{
    if out.is_null() {
        set_error("output pointer is null".into());
        return CellloadStatus::NullPointer;
    }
    match catch_unwind(f) {
        Ok(Ok(v)) => {
            // SAFETY: checked non-null; the caller provides writable storage.
            unsafe { *out = v };
            CellloadStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CellloadStatus::Panic
        }
    }
}

fn with_model<F>(model: *const CellloadModel, out: *mut f64, f: F) -> CellloadStatus
where
    F: FnOnce(&LoadModel) -> cellload::Result<f64> + UnwindSafe,
{
    if model.is_null() {
        set_error("model handle is null".into());
        return CellloadStatus::NullPointer;
    }
    // SAFETY: non-null handles come from `cellload_model_new` and stay
    // valid until `cellload_model_free`.
    let m = unsafe { (*model).inner };
    guarded(out, move || f(&m))
}

fn approx(mode: CellloadApprox) -> ApproxMode {
    match mode {
        CellloadApprox::Reference => ApproxMode::Reference,
        CellloadApprox::PaperApprox => ApproxMode::PaperApprox,
    }
}

/// Default parameters: 10 BS/km², 100 flows/s/km², 100 Mb files, 28 GHz
/// free-space intercept.
#[no_mangle]
pub extern "C" fn cellload_params_default() -> CellloadParams {
    let net = NetworkParams::default();
    let traffic = TrafficParams::default();
    CellloadParams {
        lambda_bs: net.lambda_bs,
        pt_dbm: net.pt_dbm,
        g0_db: net.g0_db,
        bandwidth_hz: net.bandwidth_hz,
        noise_density_dbm_hz: net.noise_density_dbm_hz,
        k_pathloss_db: net.k_pathloss_db,
        alpha: net.alpha,
        lambda_u: traffic.lambda_u,
        sigma_bits: traffic.sigma_bits,
        constant_mode: CellloadConstantMode::Rederived,
    }
}

/// Validates `params` and writes a new handle to `out`.
///
/// # Safety
/// `params` must point to a valid `CellloadParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_model_new(
    params: *const CellloadParams,
    out: *mut *mut CellloadModel,
) -> CellloadStatus {
    if params.is_null() || out.is_null() {
        set_error("null argument".into());
        return CellloadStatus::NullPointer;
    }
    let p = *params;
    let net = NetworkParams {
        lambda_bs: p.lambda_bs,
        pt_dbm: p.pt_dbm,
        g0_db: p.g0_db,
        bandwidth_hz: p.bandwidth_hz,
        noise_density_dbm_hz: p.noise_density_dbm_hz,
        k_pathloss_db: p.k_pathloss_db,
        alpha: p.alpha,
    };
    let traffic = TrafficParams {
        lambda_u: p.lambda_u,
        sigma_bits: p.sigma_bits,
    };
    let mode = match p.constant_mode {
        CellloadConstantMode::Rederived => ConstantMode::Rederived,
        CellloadConstantMode::PaperLiteral => ConstantMode::PaperLiteral,
    };
    match LoadModel::new(net, traffic) {
        Ok(m) => {
            let handle = Box::new(CellloadModel {
                inner: m.with_constant_mode(mode),
            });
            *out = Box::into_raw(handle);
            CellloadStatus::Ok
        }
        Err(e) => {
            *out = ptr::null_mut();
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from `cellload_model_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cellload_model_free(model: *mut CellloadModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cellload_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_e1(x: f64, out: *mut f64) -> CellloadStatus {
    guarded(out, || specfun::e1(x))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_ei(x: f64, out: *mut f64) -> CellloadStatus {
    guarded(out, || specfun::ei(x))
}

/// Inverse of Ei for `y < 0` on the branch used by the load distribution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_ei_inverse(
    y: f64,
    mode: CellloadApprox,
    out: *mut f64,
) -> CellloadStatus {
    guarded(out, move || specfun::ei_inverse(y, approx(mode)))
}

/// Regularized lower incomplete gamma function `P(a, x)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_gamma_p(a: f64, x: f64, out: *mut f64) -> CellloadStatus {
    guarded(out, move || specfun::gamma_p(a, x))
}

/// CDF of the typical-cell area [m²] at BS density `lambda_bs` [m⁻²].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_area_cdf(
    area_m2: f64,
    lambda_bs: f64,
    out: *mut f64,
) -> CellloadStatus {
    guarded(out, move || {
        if lambda_bs.is_nan() || lambda_bs <= 0.0 || area_m2.is_nan() {
            return Err(Error::Domain {
                function: "area_cdf",
                value: lambda_bs,
                expected: "lambda_bs > 0 and area not NaN",
            });
        }
        Ok(analytic::area_cdf(area_m2, lambda_bs))
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_load_of_area(
    model: *const CellloadModel,
    area_m2: f64,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, move |m| analytic::load_of_area(area_m2, m))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_load_cdf(
    model: *const CellloadModel,
    load: f64,
    mode: CellloadApprox,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, move |m| {
        analytic::load_cdf(load, m, approx(mode))
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_stable_fraction(
    model: *const CellloadModel,
    mode: CellloadApprox,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, move |m| {
        analytic::stable_fraction(m, approx(mode))
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_ei_mean_load(
    model: *const CellloadModel,
    mode: CellloadApprox,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, move |m| analytic::ei_mean_load(m, approx(mode)))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_cf_mean_load(
    model: *const CellloadModel,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, analytic::cf_mean_load)
}

/// Mean load seen by a uniformly placed user.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_mean_cell_load(
    model: *const CellloadModel,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, analytic::mean_load_mc_baseline)
}

/// Flow throughput [bit/s] at mean load `rho_bar`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cellload_dyn_throughput(
    model: *const CellloadModel,
    rho_bar: f64,
    out: *mut f64,
) -> CellloadStatus {
    with_model(model, out, move |m| analytic::dyn_throughput(rho_bar, m))
}
