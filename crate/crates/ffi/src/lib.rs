//! C ABI over the srgof tests.
//!
//! Samples are opaque handles created with `srgof_sample_new` or
//! `srgof_sample_draw` and released with `srgof_sample_free`. Every fallible
//! call returns an `SrgofStatus`; on failure `srgof_last_error` gives a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use srgof::harness::{self, BandwidthSpec, ExperimentConfig, KernelChoice, LambdaSpec, MethodConfig};
use srgof::rng::{derive_key, substream, tag};
use srgof::{DistributionSpec, GofError, Method, Regularizer, Sample};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrgofStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    DataError = 4,
    Panic = 5,
}

/// Opaque sample handle: `rows` points of dimension `dim`.
pub struct SrgofSample {
    inner: Sample,
}

/// Parameters of `srgof_test`. String fields may be NULL to take the default.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SrgofTestParams {
    /// "srct", "srpt", "oracle", "mmd" or "energy-perm"; NULL means "srpt".
    pub method: *const c_char,
    /// Null distribution shorthand, e.g. "gaussian:d=1"; needed by "mmd" and "oracle".
    pub null_spec: *const c_char,
    /// "gaussian" (default) or "spline".
    pub kernel: *const c_char,
    /// "median" (default), "auto", "auto:<lo>:<hi>" or a comma-separated list.
    pub bandwidths: *const c_char,
    /// "<lo>:<hi>" doubling grid or a comma-separated list; default "1e-6:5".
    pub lambdas: *const c_char,
    /// "tikhonov" (default) or "showalter".
    pub regularizer: *const c_char,
    pub alpha: f64,
    /// 0 selects the default.
    pub permutations: usize,
    /// 0 selects the default 65.
    pub c1: f64,
    /// 0 selects the default 1024.
    pub k_max: usize,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SrgofDecision {
    pub reject: bool,
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &GofError) -> SrgofStatus {
    match err {
        GofError::Config(_) | GofError::MissingClosedForm(_) => SrgofStatus::ConfigError,
        GofError::InvalidParameter(_) => SrgofStatus::InvalidArgument,
        _ => SrgofStatus::DataError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SrgofStatus, String)>) -> SrgofStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrgofStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SrgofStatus::Panic
        }
    }
}

fn lib_err(e: GofError) -> (SrgofStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (SrgofStatus, String) {
    (SrgofStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (SrgofStatus, String)> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| (SrgofStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn sample_ref<'a>(p: *const SrgofSample, what: &str) -> Result<&'a Sample, (SrgofStatus, String)> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null_err(what))
}

/// Message describing the most recent failure on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn srgof_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `rows * dim` row-major values into a new sample handle.
///
/// # Safety
/// `data` must point to `rows * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srgof_sample_new(data: *const f64, rows: usize, dim: usize, out: *mut *mut SrgofSample) -> SrgofStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = ptr::null_mut();
        if data.is_null() && rows * dim > 0 {
            return Err(null_err("data"));
        }
        let len = rows.checked_mul(dim).ok_or((SrgofStatus::InvalidArgument, "rows * dim overflows".to_string()))?;
        let values = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(data, len).to_vec() };
        if values.iter().any(|v| !v.is_finite()) {
            return Err((SrgofStatus::DataError, "sample contains non-finite values".into()));
        }
        let inner = Sample::new(dim, values).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SrgofSample { inner }));
        Ok(())
    })
}

/// Draws `count` points from a distribution shorthand such as "vmf:d=3,k=2".
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srgof_sample_draw(spec: *const c_char, count: usize, seed: u64, out: *mut *mut SrgofSample) -> SrgofStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        *out = ptr::null_mut();
        let text = opt_str(spec, "spec")?.ok_or_else(|| null_err("spec"))?;
        let dist: DistributionSpec = text.parse().map_err(lib_err)?;
        let inner = dist.sample(count, &mut substream(seed, &[tag::DATA_X])).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SrgofSample { inner }));
        Ok(())
    })
}

/// # Safety
/// `sample` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn srgof_sample_free(sample: *mut SrgofSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// # Safety
/// `sample` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn srgof_sample_len(sample: *const SrgofSample) -> usize {
    sample.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `sample` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn srgof_sample_dim(sample: *const SrgofSample) -> usize {
    sample.as_ref().map_or(0, |s| s.inner.dim())
}

/// Fills `out` with defaults: srpt, Gaussian median bandwidth, λ grid 1e-6..5, α = 0.05.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srgof_params_default(out: *mut SrgofTestParams) -> SrgofStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        *out = SrgofTestParams {
            method: ptr::null(),
            null_spec: ptr::null(),
            kernel: ptr::null(),
            bandwidths: ptr::null(),
            lambdas: ptr::null(),
            regularizer: ptr::null(),
            alpha: 0.05,
            permutations: 0,
            c1: 0.0,
            k_max: 0,
            seed: 0,
        };
        Ok(())
    })
}

fn parse_or<T: std::str::FromStr<Err = GofError>>(v: Option<&str>, default: T) -> Result<T, (SrgofStatus, String)> {
    v.map_or(Ok(default), |s| s.parse().map_err(lib_err))
}

unsafe fn method_config(p: &SrgofTestParams) -> Result<(MethodConfig, Option<DistributionSpec>), (SrgofStatus, String)> {
    let method: Method = parse_or(opt_str(p.method, "method")?, Method::Srpt)?;
    let mut mc = MethodConfig::new(method);
    mc.kernel = parse_or(opt_str(p.kernel, "kernel")?, KernelChoice::Gaussian)?;
    mc.bandwidths = parse_or(opt_str(p.bandwidths, "bandwidths")?, BandwidthSpec::Median)?;
    mc.lambdas = parse_or(opt_str(p.lambdas, "lambdas")?, LambdaSpec::default())?;
    mc.regularizer = parse_or(opt_str(p.regularizer, "regularizer")?, Regularizer::Tikhonov)?;
    if p.permutations > 0 {
        mc.permutations = Some(p.permutations);
    }
    if p.c1 != 0.0 {
        mc.c1 = p.c1;
    }
    if p.k_max > 0 {
        mc.k_max = p.k_max;
    }
    mc.validate().map_err(lib_err)?;
    let null = opt_str(p.null_spec, "null_spec")?.map(str::parse::<DistributionSpec>).transpose().map_err(lib_err)?;
    Ok((mc, null))
}

/// Runs one test. `x0` and `y0` are the null samples for the mean and the
/// covariance; they may be NULL for "mmd" and "oracle", which only use `x`.
///
/// # Safety
/// Pointers must be live handles (or NULL where allowed); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srgof_test(
    params: *const SrgofTestParams,
    x: *const SrgofSample,
    x0: *const SrgofSample,
    y0: *const SrgofSample,
    out: *mut SrgofDecision,
) -> SrgofStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let p = params.as_ref().ok_or_else(|| null_err("params"))?;
        let (mc, null) = method_config(p)?;
        let x = sample_ref(x, "x")?;
        let needs_null_samples = matches!(mc.method, Method::Srct | Method::Srpt | Method::EnergyPerm);
        let empty = Sample::empty(x.dim());
        let (x0, y0) = if needs_null_samples {
            (sample_ref(x0, "x0")?, sample_ref(y0, "y0")?)
        } else {
            (x0.as_ref().map_or(&empty, |s| &s.inner), y0.as_ref().map_or(&empty, |s| &s.inner))
        };
        let null = match (null, mc.method) {
            (Some(n), _) => n,
            (None, Method::Mmd | Method::Oracle) => return Err(null_err("null_spec")),
            (None, _) => DistributionSpec::UniformCube { dim: x.dim() },
        };
        let seed = derive_key(p.seed, &[tag::METHOD]);
        let o = harness::run_method(&mc, &null, p.alpha, x, x0, y0, seed).map_err(lib_err)?;
        *out = SrgofDecision { reject: o.reject, statistic: o.statistic, critical_value: o.critical_value, alpha: o.alpha };
        Ok(())
    })
}

/// Runs an experiment given as TOML text and returns the power table as CSV.
/// `threads` = 0 uses all cores. Free the string with `srgof_string_free`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `csv_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srgof_power_csv(config_toml: *const c_char, threads: usize, csv_out: *mut *mut c_char) -> SrgofStatus {
    guard(|| {
        if csv_out.is_null() {
            return Err(null_err("csv_out"));
        }
        *csv_out = ptr::null_mut();
        let text = opt_str(config_toml, "config_toml")?.ok_or_else(|| null_err("config_toml"))?;
        let cfg = ExperimentConfig::from_toml(text).map_err(lib_err)?;
        let table = if threads == 0 {
            harness::run_experiment(&cfg)
        } else {
            harness::run_experiment_with_threads(&cfg, threads)
        }
        .map_err(lib_err)?;
        let csv = table.to_csv_string().map_err(lib_err)?;
        *csv_out = CString::new(csv).map_err(|_| (SrgofStatus::DataError, "CSV contains NUL".to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn srgof_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
