//! C ABI over the streaming estimators: opaque handles, status codes, and
//! plain-old-data configuration. The header `include/lrv.h` is generated by
//! cbindgen at build time.
//!
//! Every function is null-safe and never unwinds across the boundary;
//! failures are reported through [`LrvStatus`].

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use lrv::auto::AutoLaser;
use lrv::laser::{LaserConfig, LaserState, MeanMode};
use lrv::multivar::{pd_adjust, LrcmState, PdAdjustment};
use lrv::ramp::RampState;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    NonFinite = 3,
    DimensionMismatch = 4,
    DegenerateScale = 5,
    InsufficientData = 6,
    InternalError = 7,
}

fn status_of(e: &lrv::Error) -> LrvStatus {
    use lrv::Error::*;
    match e {
        NonFinite { .. } => LrvStatus::NonFinite,
        DimensionMismatch { .. } => LrvStatus::DimensionMismatch,
        DegenerateScale(_) => LrvStatus::DegenerateScale,
        InsufficientData { .. } => LrvStatus::InsufficientData,
        InvalidConfig(_) | BandwidthOutOfRange { .. } | InvalidSchedule { .. } => {
            LrvStatus::InvalidConfig
        }
        _ => LrvStatus::InternalError,
    }
}

/// Estimator configuration (plain old data).
///
/// With `auto_select != 0` the smoothing parameters are chosen online and
/// the coefficient/exponent fields are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LrvConfig {
    /// Characteristic exponent of the taper (>= 1).
    pub q: u32,
    /// Memory parameter: 1.0, or >= 2.0 for constant-space updates.
    pub phi: f64,
    /// Nonzero to select smoothing parameters automatically.
    pub auto_select: i32,
    /// Subsampling coefficient and exponent.
    pub psi_coeff: f64,
    pub psi_exp: f64,
    /// Tapering coefficient and exponent.
    pub theta_coeff: f64,
    pub theta_exp: f64,
    /// Finite-sample schedule floors.
    pub s_floor: u64,
    pub t_floor: u64,
    /// Nonzero when the process mean is known to be zero.
    pub zero_mean: i32,
    /// Taper order of the nuisance stream in automatic mode.
    pub nuisance_order: u32,
}

impl LrvConfig {
    fn to_laser(self) -> LaserConfig {
        let mut cfg = if self.auto_select != 0 {
            LaserConfig::auto(self.q, self.phi)
        } else {
            LaserConfig::explicit(
                self.q,
                self.phi,
                self.psi_coeff,
                self.psi_exp,
                self.theta_coeff,
                self.theta_exp,
            )
        };
        if self.auto_select == 0 || self.s_floor != 0 {
            cfg.s_floor = self.s_floor;
        }
        if self.auto_select == 0 || self.t_floor != 0 {
            cfg.t_floor = self.t_floor;
        }
        if self.zero_mean != 0 {
            cfg.mean_mode = MeanMode::KnownZero;
        }
        cfg.p = self.nuisance_order.max(1);
        cfg
    }
}

/// Default configuration: automatic selection with the rate-optimal
/// exponents for the given `q` and `phi`, floors of 5, unknown mean.
#[no_mangle]
pub extern "C" fn lrv_config_default(q: u32, phi: f64) -> LrvConfig {
    let exp = 1.0 / (1.0 + 2.0 * q.max(1) as f64);
    LrvConfig {
        q: q.max(1),
        phi,
        auto_select: 1,
        psi_coeff: 1.0,
        psi_exp: exp,
        theta_coeff: 1.0,
        theta_exp: exp,
        s_floor: 5,
        t_floor: 5,
        zero_mean: 0,
        nuisance_order: 1,
    }
}

enum Inner {
    Buffered(LaserState),
    Ramped(RampState),
    Auto(AutoLaser),
}

/// Opaque univariate estimator handle.
pub struct LrvEstimator {
    inner: Inner,
}

impl LrvEstimator {
    fn update(&mut self, x: f64) -> lrv::Result<()> {
        match &mut self.inner {
            Inner::Buffered(st) => st.update(x),
            Inner::Ramped(st) => st.update(x),
            Inner::Auto(st) => st.update(x),
        }
    }

    fn estimate(&self) -> f64 {
        match &self.inner {
            Inner::Buffered(st) => st.estimate(),
            Inner::Ramped(st) => st.estimate(),
            Inner::Auto(st) => st.estimate(),
        }
    }

    fn shape(&self) -> (u64, u64, u64) {
        match &self.inner {
            Inner::Buffered(st) => (st.n(), st.current_s(), st.current_t()),
            Inner::Ramped(st) => (st.n(), st.current_s_prime(), st.current_t()),
            Inner::Auto(st) => (st.n(), st.current_s(), st.current_t()),
        }
    }
}

/// Create an estimator from the first observation. On success writes the
/// handle to `out`; the handle must be released with
/// [`lrv_estimator_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable handle storage.
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_new(
    config: LrvConfig,
    x1: f64,
    out: *mut *mut LrvEstimator,
) -> LrvStatus {
    if out.is_null() {
        return LrvStatus::NullPointer;
    }
    let built = catch_unwind(|| {
        let cfg = config.to_laser();
        let inner = if config.auto_select != 0 {
            Inner::Auto(AutoLaser::init(cfg, x1)?)
        } else if cfg.phi > 1.0 {
            Inner::Ramped(RampState::init(cfg, x1)?)
        } else {
            Inner::Buffered(LaserState::init(cfg, x1)?)
        };
        Ok::<_, lrv::Error>(inner)
    });
    match built {
        Ok(Ok(inner)) => {
            unsafe { *out = Box::into_raw(Box::new(LrvEstimator { inner })) };
            LrvStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Ingest one observation.
///
/// # Safety
/// `handle` must be a live pointer from [`lrv_estimator_new`].
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_update(handle: *mut LrvEstimator, x: f64) -> LrvStatus {
    let Some(est) = (unsafe { handle.as_mut() }) else {
        return LrvStatus::NullPointer;
    };
    match catch_unwind(AssertUnwindSafe(|| est.update(x))) {
        Ok(Ok(())) => LrvStatus::Ok,
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Ingest a contiguous block of observations.
///
/// # Safety
/// `handle` as above; `xs` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_update_block(
    handle: *mut LrvEstimator,
    xs: *const f64,
    len: usize,
) -> LrvStatus {
    if xs.is_null() {
        return LrvStatus::NullPointer;
    }
    let Some(est) = (unsafe { handle.as_mut() }) else {
        return LrvStatus::NullPointer;
    };
    let slice = unsafe { std::slice::from_raw_parts(xs, len) };
    match catch_unwind(AssertUnwindSafe(|| {
        for &x in slice {
            est.update(x)?;
        }
        Ok::<_, lrv::Error>(())
    })) {
        Ok(Ok(())) => LrvStatus::Ok,
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Read the current LRV estimate.
///
/// # Safety
/// `handle` as above; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_estimate(
    handle: *const LrvEstimator,
    out: *mut f64,
) -> LrvStatus {
    let Some(est) = (unsafe { handle.as_ref() }) else {
        return LrvStatus::NullPointer;
    };
    if out.is_null() {
        return LrvStatus::NullPointer;
    }
    unsafe { *out = est.estimate() };
    LrvStatus::Ok
}

/// Read the sample size and current smoothing parameters. Null outputs are
/// skipped.
///
/// # Safety
/// `handle` as above; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_shape(
    handle: *const LrvEstimator,
    n: *mut u64,
    s: *mut u64,
    t: *mut u64,
) -> LrvStatus {
    let Some(est) = (unsafe { handle.as_ref() }) else {
        return LrvStatus::NullPointer;
    };
    let (vn, vs, vt) = est.shape();
    unsafe {
        if !n.is_null() {
            *n = vn;
        }
        if !s.is_null() {
            *s = vs;
        }
        if !t.is_null() {
            *t = vt;
        }
    }
    LrvStatus::Ok
}

/// Release an estimator handle. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer from [`lrv_estimator_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn lrv_estimator_free(handle: *mut LrvEstimator) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Opaque long-run covariance matrix estimator handle.
pub struct LrvLrcm {
    state: LrcmState,
    dim: usize,
}

/// Create a `dim`-dimensional matrix estimator from the first observation
/// vector. Requires `phi = 1`.
///
/// # Safety
/// `x1` must point to `dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrv_lrcm_new(
    config: LrvConfig,
    x1: *const f64,
    dim: usize,
    out: *mut *mut LrvLrcm,
) -> LrvStatus {
    if x1.is_null() || out.is_null() {
        return LrvStatus::NullPointer;
    }
    let first = unsafe { std::slice::from_raw_parts(x1, dim) };
    match catch_unwind(|| LrcmState::init(config.to_laser(), None, first)) {
        Ok(Ok(state)) => {
            unsafe { *out = Box::into_raw(Box::new(LrvLrcm { state, dim })) };
            LrvStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Ingest one observation vector of length `dim`.
///
/// # Safety
/// `handle` must be live; `x` must point to `dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn lrv_lrcm_update(
    handle: *mut LrvLrcm,
    x: *const f64,
    dim: usize,
) -> LrvStatus {
    if x.is_null() {
        return LrvStatus::NullPointer;
    }
    let Some(mv) = (unsafe { handle.as_mut() }) else {
        return LrvStatus::NullPointer;
    };
    if dim != mv.dim {
        return LrvStatus::DimensionMismatch;
    }
    let row = unsafe { std::slice::from_raw_parts(x, dim) };
    match catch_unwind(AssertUnwindSafe(|| mv.state.update(row))) {
        Ok(Ok(())) => LrvStatus::Ok,
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Write the current matrix estimate in row-major order into `out`
/// (`dim * dim` doubles). With `apply_pd_adjust != 0` the
/// positive-definiteness adjustment with default parameters is applied
/// first; this requires strictly positive diagonal estimates.
///
/// # Safety
/// `handle` must be live; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lrv_lrcm_estimate(
    handle: *const LrvLrcm,
    out: *mut f64,
    len: usize,
    apply_pd_adjust: i32,
) -> LrvStatus {
    let Some(mv) = (unsafe { handle.as_ref() }) else {
        return LrvStatus::NullPointer;
    };
    if out.is_null() {
        return LrvStatus::NullPointer;
    }
    let d = mv.dim;
    if len != d * d {
        return LrvStatus::DimensionMismatch;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let mut est = mv.state.estimate();
        if apply_pd_adjust != 0 {
            let adj = PdAdjustment::default_for(mv.state.n(), d);
            est = pd_adjust(&est, mv.state.n(), &adj)?;
        }
        Ok::<_, lrv::Error>(est)
    }));
    match result {
        Ok(Ok(est)) => {
            let slice = unsafe { std::slice::from_raw_parts_mut(out, len) };
            for h in 0..d {
                for k in 0..d {
                    slice[h * d + k] = est[(h, k)];
                }
            }
            LrvStatus::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => LrvStatus::InternalError,
    }
}

/// Release a matrix estimator handle. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer from [`lrv_lrcm_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn lrv_lrcm_free(handle: *mut LrvLrcm) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Half-width stopping rule with the step-penalty
/// `p(n) = eps * 1{n <= pen_horizon}`. Returns 1 to stop, 0 to continue.
#[no_mangle]
pub extern "C" fn lrv_halfwidth_stop(
    n: u64,
    sigma_hat: f64,
    eps: f64,
    alpha: f64,
    pen_horizon: u64,
) -> i32 {
    let pen = move |k: u64| if k <= pen_horizon { eps } else { 0.0 };
    i32::from(lrv::infer::halfwidth_stop(n, sigma_hat, eps, alpha, pen))
}

/// Standard normal quantile.
#[no_mangle]
pub extern "C" fn lrv_normal_quantile(p: f64) -> f64 {
    lrv::normal::normal_quantile(p)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_round_trip() {
        let cfg = LrvConfig {
            auto_select: 0,
            psi_coeff: 1.0,
            psi_exp: 1.0 / 3.0,
            theta_coeff: 2.0,
            theta_exp: 1.0 / 3.0,
            s_floor: 0,
            t_floor: 1,
            ..lrv_config_default(1, 1.0)
        };
        let mut handle: *mut LrvEstimator = std::ptr::null_mut();
        unsafe {
            assert_eq!(lrv_estimator_new(cfg, 1.0, &mut handle), LrvStatus::Ok);
            assert_eq!(lrv_estimator_update(handle, 2.0), LrvStatus::Ok);
            assert_eq!(lrv_estimator_update(handle, 3.0), LrvStatus::Ok);
            let mut est = f64::NAN;
            assert_eq!(lrv_estimator_estimate(handle, &mut est), LrvStatus::Ok);
            // Matches the library value for the same schedule.
            let mut reference = LaserState::init(
                LaserConfig::explicit(1, 1.0, 1.0, 1.0 / 3.0, 2.0, 1.0 / 3.0),
                1.0,
            )
            .unwrap();
            reference.update(2.0).unwrap();
            reference.update(3.0).unwrap();
            assert_eq!(est, reference.estimate());
            let (mut n, mut s, mut t) = (0u64, 0u64, 0u64);
            assert_eq!(lrv_estimator_shape(handle, &mut n, &mut s, &mut t), LrvStatus::Ok);
            assert_eq!((n, s, t), (3, 1, 3));
            assert_eq!(lrv_estimator_update(handle, f64::NAN), LrvStatus::NonFinite);
            lrv_estimator_free(handle);
        }
    }

    #[test]
    fn null_and_config_errors() {
        unsafe {
            assert_eq!(
                lrv_estimator_new(lrv_config_default(1, 1.0), 0.0, std::ptr::null_mut()),
                LrvStatus::NullPointer
            );
            let mut bad = lrv_config_default(1, 1.0);
            bad.phi = 1.5;
            let mut handle: *mut LrvEstimator = std::ptr::null_mut();
            assert_eq!(lrv_estimator_new(bad, 0.0, &mut handle), LrvStatus::InvalidConfig);
            assert_eq!(lrv_estimator_update(std::ptr::null_mut(), 1.0), LrvStatus::NullPointer);
            lrv_estimator_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn lrcm_round_trip_and_dimension_checks() {
        let mut cfg = lrv_config_default(1, 1.0);
        cfg.auto_select = 0;
        cfg.psi_coeff = 1.0;
        cfg.psi_exp = 1.0 / 3.0;
        cfg.theta_coeff = 1.5;
        cfg.theta_exp = 1.0 / 3.0;
        cfg.s_floor = 0;
        cfg.t_floor = 1;
        let x1 = [0.3, -0.7];
        let mut handle: *mut LrvLrcm = std::ptr::null_mut();
        unsafe {
            assert_eq!(lrv_lrcm_new(cfg, x1.as_ptr(), 2, &mut handle), LrvStatus::Ok);
            for i in 0..200 {
                let v = [(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()];
                assert_eq!(lrv_lrcm_update(handle, v.as_ptr(), 2), LrvStatus::Ok);
            }
            assert_eq!(
                lrv_lrcm_update(handle, x1.as_ptr(), 1),
                LrvStatus::DimensionMismatch
            );
            let mut out = [0.0f64; 4];
            assert_eq!(
                lrv_lrcm_estimate(handle, out.as_mut_ptr(), 4, 0),
                LrvStatus::Ok
            );
            assert_eq!(out[1], out[2]);
            let mut adj = [0.0f64; 4];
            assert_eq!(
                lrv_lrcm_estimate(handle, adj.as_mut_ptr(), 4, 1),
                LrvStatus::Ok
            );
            assert_eq!(
                lrv_lrcm_estimate(handle, adj.as_mut_ptr(), 3, 1),
                LrvStatus::DimensionMismatch
            );
            lrv_lrcm_free(handle);
        }
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(lrv_halfwidth_stop(10_000, 0.0, 0.1, 0.05, 500), 1);
        assert_eq!(lrv_halfwidth_stop(100, 0.0, 0.1, 0.05, 500), 0);
        assert!((lrv_normal_quantile(0.975) - 1.959964).abs() < 1e-5);
        let version = unsafe { std::ffi::CStr::from_ptr(lrv_version()) };
        assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
