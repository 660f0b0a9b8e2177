//! C ABI over `rsma-core`.
//!
//! Every fallible function returns an [`RsmaStatus`]; on failure a message
//! is available from [`rsma_last_error_message`] on the same thread until
//! the next failing call. Handles are created by `*_new`/`*_generate_*`
//! functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use num_complex::Complex64;
use rsma_core::channel::{generate_iid, generate_pair, sinr_disparity, spatial_correlation};
use rsma_core::cli::{parse_config, render_csv, run};
use rsma_core::precoding::{allocate_power, common_precoder, private_precoders};
use rsma_core::rates::{noma_rates, rsma_rates, sdma_rates};
use rsma_core::{
    AllocationPolicy, ChannelSet, CommonPrecoder, ConfigError, Error, PairGeometry, PrecoderSet, PrivatePrecoder,
    RateReport,
};

/// Result of every fallible call. Values 2 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsmaStatus {
    Ok = 0,
    Config = 2,
    Numerical = 3,
    Io = 4,
    NullPointer = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsmaComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsmaPrivatePrecoder {
    Zf,
    Mrt,
    Mmse,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsmaCommonPrecoder {
    SingularVector,
    MaxMin,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsmaAllocationPolicy {
    MaxMin,
    AllToWeakest,
    EqualSplit,
}

/// Rate summary; per-user totals go to a caller-provided buffer.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RsmaRateSummary {
    pub common_rate: f64,
    pub sum_rate: f64,
    pub min_user_rate: f64,
    /// Common-power fraction chosen by the power search (0 for SDMA, the
    /// weak-user share for NOMA).
    pub common_fraction: f64,
}

/// Opaque channel set.
pub struct RsmaChannelSet(ChannelSet);

impl From<RsmaPrivatePrecoder> for PrivatePrecoder {
    fn from(k: RsmaPrivatePrecoder) -> Self {
        match k {
            RsmaPrivatePrecoder::Zf => PrivatePrecoder::Zf,
            RsmaPrivatePrecoder::Mrt => PrivatePrecoder::Mrt,
            RsmaPrivatePrecoder::Mmse => PrivatePrecoder::Mmse,
        }
    }
}

impl From<RsmaCommonPrecoder> for CommonPrecoder {
    fn from(k: RsmaCommonPrecoder) -> Self {
        match k {
            RsmaCommonPrecoder::SingularVector => CommonPrecoder::SingularVector,
            RsmaCommonPrecoder::MaxMin => CommonPrecoder::MaxMin,
        }
    }
}

impl From<RsmaAllocationPolicy> for AllocationPolicy {
    fn from(p: RsmaAllocationPolicy) -> Self {
        match p {
            RsmaAllocationPolicy::MaxMin => AllocationPolicy::MaxMin,
            RsmaAllocationPolicy::AllToWeakest => AllocationPolicy::AllToWeakest,
            RsmaAllocationPolicy::EqualSplit => AllocationPolicy::EqualSplit,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Status(RsmaStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Core(e.into())
    }
}

fn status_of(e: &Error) -> RsmaStatus {
    match e.exit_code() {
        2 => RsmaStatus::Config,
        4 => RsmaStatus::Io,
        _ => RsmaStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RsmaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsmaStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic".into());
            RsmaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(RsmaStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(RsmaStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn set_arg<'a>(set: *const RsmaChannelSet) -> Result<&'a ChannelSet, Failure> {
    set.as_ref().map(|s| &s.0).ok_or_else(|| null("set"))
}

unsafe fn emit_handle(out: *mut *mut RsmaChannelSet, ch: ChannelSet) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(RsmaChannelSet(ch)));
    Ok(())
}

unsafe fn emit_report(
    report: &RateReport,
    common_fraction: f64,
    user_rates: *mut f64,
    len: usize,
    summary: *mut RsmaRateSummary,
) -> Result<(), Failure> {
    let k = report.user_totals.len();
    if !user_rates.is_null() {
        if len < k {
            return Err(Failure::Status(
                RsmaStatus::BufferTooSmall,
                format!("user rate buffer holds {len}, need {k}"),
            ));
        }
        std::slice::from_raw_parts_mut(user_rates, k).copy_from_slice(&report.user_totals);
    }
    if let Some(s) = summary.as_mut() {
        *s = RsmaRateSummary {
            common_rate: report.common_rate,
            sum_rate: report.sum_rate,
            min_user_rate: report.min_user_rate(),
            common_fraction,
        };
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rsma_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a channel set from `n_users × n_tx` row-major coefficients
/// (row k is user k's channel).
///
/// # Safety
/// `coefficients` must point to `n_users * n_tx` values and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_new(
    coefficients: *const RsmaComplex,
    n_users: usize,
    n_tx: usize,
    noise_variance: f64,
    tx_power: f64,
    out: *mut *mut RsmaChannelSet,
) -> RsmaStatus {
    guard(|| {
        if coefficients.is_null() {
            return Err(null("coefficients"));
        }
        let total = n_users
            .checked_mul(n_tx)
            .ok_or_else(|| Failure::Status(RsmaStatus::Config, "n_users * n_tx overflows".into()))?;
        let flat = std::slice::from_raw_parts(coefficients, total);
        let channels = flat
            .chunks(n_tx.max(1))
            .map(|row| row.iter().map(|c| Complex64::new(c.re, c.im)).collect())
            .collect();
        emit_handle(out, ChannelSet::new(channels, noise_variance, tx_power)?)
    })
}

/// Two-user drop with the given correlation parameter and strength gap.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_generate_pair(
    rho: f64,
    alpha_db: f64,
    n_tx: usize,
    snr_db: f64,
    seed: u64,
    out: *mut *mut RsmaChannelSet,
) -> RsmaStatus {
    guard(|| {
        let ch = generate_pair(PairGeometry::new(rho, alpha_db)?, n_tx, snr_db, seed)?;
        emit_handle(out, ch)
    })
}

/// i.i.d. Rayleigh drop.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_generate_iid(
    n_users: usize,
    n_tx: usize,
    snr_db: f64,
    seed: u64,
    out: *mut *mut RsmaChannelSet,
) -> RsmaStatus {
    guard(|| emit_handle(out, generate_iid(n_users, n_tx, snr_db, seed)?))
}

/// Releases a channel set. Null is ignored.
///
/// # Safety
/// `set` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_free(set: *mut RsmaChannelSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_n_users(set: *const RsmaChannelSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.n_users())
}

/// # Safety
/// `set` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn rsma_channel_set_n_tx(set: *const RsmaChannelSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.n_tx())
}

/// Correlation parameter and strength gap (dB) of users 0 and 1.
///
/// # Safety
/// `set` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_pair_geometry(
    set: *const RsmaChannelSet,
    out_rho: *mut f64,
    out_alpha_db: *mut f64,
) -> RsmaStatus {
    guard(|| {
        let ch = set_arg(set)?;
        if ch.n_users() < 2 {
            return Err(Failure::Status(RsmaStatus::Config, "need at least two users".into()));
        }
        if out_rho.is_null() || out_alpha_db.is_null() {
            return Err(null("out"));
        }
        *out_rho = spatial_correlation(ch.channel(0), ch.channel(1))?;
        *out_alpha_db = sinr_disparity(ch.channel(0), ch.channel(1))?;
        Ok(())
    })
}

/// RSMA with the sum-rate-maximizing common-power fraction over
/// `grid_points` values. `user_rates` (length `len`) and `summary` may be
/// null.
///
/// # Safety
/// `set` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_rsma_rates(
    set: *const RsmaChannelSet,
    private_kind: RsmaPrivatePrecoder,
    common_kind: RsmaCommonPrecoder,
    policy: RsmaAllocationPolicy,
    grid_points: usize,
    user_rates: *mut f64,
    len: usize,
    summary: *mut RsmaRateSummary,
) -> RsmaStatus {
    guard(|| {
        let ch = set_arg(set)?;
        let private = private_precoders(ch, private_kind.into())?;
        let common = common_precoder(ch, common_kind.into())?;
        let pre = allocate_power(ch, &private, &common, grid_points)?;
        let report = rsma_rates(ch, &pre, policy.into())?;
        emit_report(&report, pre.common_fraction(ch.tx_power()), user_rates, len, summary)
    })
}

/// SDMA with equal power per user.
///
/// # Safety
/// `set` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_sdma_rates(
    set: *const RsmaChannelSet,
    private_kind: RsmaPrivatePrecoder,
    user_rates: *mut f64,
    len: usize,
    summary: *mut RsmaRateSummary,
) -> RsmaStatus {
    guard(|| {
        let ch = set_arg(set)?;
        let private = private_precoders(ch, private_kind.into())?;
        let report = sdma_rates(ch, &PrecoderSet::sdma(private, ch.tx_power()))?;
        emit_report(&report, 0.0, user_rates, len, summary)
    })
}

/// Two-user NOMA on the chosen common beam with `power_split` of the power
/// on the weaker user's message.
///
/// # Safety
/// `set` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_noma_rates(
    set: *const RsmaChannelSet,
    power_split: f64,
    beam_kind: RsmaCommonPrecoder,
    user_rates: *mut f64,
    len: usize,
    summary: *mut RsmaRateSummary,
) -> RsmaStatus {
    guard(|| {
        let ch = set_arg(set)?;
        let beam = common_precoder(ch, beam_kind.into())?;
        let report = noma_rates(ch, power_split, &beam)?;
        emit_report(&report, power_split, user_rates, len, summary)
    })
}

/// Parses a configuration document, runs it and writes the CSV. A non-null
/// `output_path` overrides the document's.
///
/// # Safety
/// `config_text` must be a nul-terminated string; `output_path` must be
/// one or null.
#[no_mangle]
pub unsafe extern "C" fn rsma_run_config(config_text: *const c_char, output_path: *const c_char) -> RsmaStatus {
    guard(|| {
        let mut config = parse_config(str_arg(config_text, "config_text")?)?;
        if !output_path.is_null() {
            config.output_path = PathBuf::from(str_arg(output_path, "output_path")?);
        }
        run(&config)?;
        Ok(())
    })
}

/// Runs a configuration document and returns the CSV as a new string in
/// `*out`, to be released with [`rsma_string_free`].
///
/// # Safety
/// `config_text` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rsma_render_csv(config_text: *const c_char, out: *mut *mut c_char) -> RsmaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = parse_config(str_arg(config_text, "config_text")?)?;
        let (csv, _) = render_csv(&config)?;
        *out = CString::new(csv).expect("CSV has no nul bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn rsma_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
