//! C ABI over manet-seclab.
//!
//! Every fallible call returns an [`MsStatus`]; on failure a message is kept
//! per thread and can be read with [`ms_last_error`]. Handles are opaque and
//! must be released with their `_free` function. Strings handed out through
//! an `out` pointer are owned by the caller and released with
//! [`ms_string_free`]; strings returned directly are borrowed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manet_seclab::cli::{self, CliError, RunOutcome, RunSpec, Scenario, Scheme};
use manet_seclab::crypto::{self, AuthAlgorithm, CipherAlgorithm, ICV_LEN};
use manet_seclab::ipsec::{self, setkey::REFERENCE_CONF, SecurityDatabases};
use manet_seclab::metrics;
use manet_seclab::simnet::DelayModel;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Invariant = 5,
    Crypto = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsScenario {
    SingleHop = 0,
    MultiHop = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsEsp {
    None = 0,
    Aes = 1,
    Tdes = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsAh {
    None = 0,
    Md5 = 1,
    Sha1 = 2,
}

/// Parsed SAD and SPD.
pub struct MsDatabases(SecurityDatabases);

/// Parameters of one simulation run.
pub struct MsRunConfig(RunSpec);

/// Results of one simulation run.
pub struct MsRunResult {
    outcome: RunOutcome,
    trace_hash: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MsStatus, msg: impl Into<String>) -> MsStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `MsStatus::Panic`.
fn guard(f: impl FnOnce() -> MsStatus) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MsStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MsStatus> {
    if p.is_null() {
        return Err(fail(MsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MsStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn out_string(out: *mut *mut c_char, s: String) -> MsStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            MsStatus::Ok
        }
        Err(_) => fail(MsStatus::Invariant, "output contains a nul byte"),
    }
}

fn cli_status(e: &CliError) -> MsStatus {
    match e.exit_code() {
        1 => MsStatus::Invariant,
        _ => MsStatus::Config,
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The bundled reference setkey configuration, static.
#[no_mangle]
pub extern "C" fn ms_reference_setkey() -> *const c_char {
    static TEXT: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    TEXT.get_or_init(|| CString::new(REFERENCE_CONF).expect("no nul in reference text"))
        .as_ptr()
}

/// # Safety
/// `s` must be NULL or a string previously returned through an `out`
/// pointer of this library.
#[no_mangle]
pub unsafe extern "C" fn ms_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses setkey text into a new database handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_setkey_parse(text: *const c_char, out: *mut *mut MsDatabases) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return fail(MsStatus::NullPointer, "null out pointer");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ipsec::parse_setkey(text) {
            Ok(dbs) => {
                *out = Box::into_raw(Box::new(MsDatabases(dbs)));
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `dbs` must be NULL or a handle from `ms_setkey_parse`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_databases_free(dbs: *mut MsDatabases) {
    if !dbs.is_null() {
        drop(Box::from_raw(dbs));
    }
}

/// Number of security associations; 0 for NULL.
///
/// # Safety
/// `dbs` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_databases_sa_count(dbs: *const MsDatabases) -> usize {
    dbs.as_ref().map_or(0, |d| d.0.sad.len())
}

/// Number of policies; 0 for NULL.
///
/// # Safety
/// `dbs` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_databases_policy_count(dbs: *const MsDatabases) -> usize {
    dbs.as_ref().map_or(0, |d| d.0.spd.len())
}

/// Renders the databases back to setkey text.
///
/// # Safety
/// `dbs` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_setkey_render(dbs: *const MsDatabases, out: *mut *mut c_char) -> MsStatus {
    guard(|| match (dbs.as_ref(), out.is_null()) {
        (Some(d), false) => out_string(out, ipsec::render_setkey(&d.0)),
        _ => fail(MsStatus::NullPointer, "null handle or out pointer"),
    })
}

/// HMAC-96 of `data` into `icv` (12 bytes).
///
/// # Safety
/// `key` and `data` must point to `key_len` and `data_len` readable bytes
/// (either may be NULL when its length is 0); `icv` must have room for 12.
#[no_mangle]
pub unsafe extern "C" fn ms_hmac96(
    ah: MsAh,
    key: *const u8,
    key_len: usize,
    data: *const u8,
    data_len: usize,
    icv: *mut u8,
) -> MsStatus {
    guard(|| {
        let alg = match ah {
            MsAh::Md5 => AuthAlgorithm::HmacMd5,
            MsAh::Sha1 => AuthAlgorithm::HmacSha1,
            MsAh::None => return fail(MsStatus::Config, "no algorithm selected"),
        };
        let slice = |p: *const u8, n: usize| {
            if n == 0 {
                Some(&[][..])
            } else if p.is_null() {
                None
            } else {
                Some(std::slice::from_raw_parts(p, n))
            }
        };
        let (Some(key), Some(data)) = (slice(key, key_len), slice(data, data_len)) else {
            return fail(MsStatus::NullPointer, "null buffer");
        };
        if icv.is_null() {
            return fail(MsStatus::NullPointer, "null icv buffer");
        }
        match crypto::mac(alg, key, data) {
            Ok(m) => {
                ptr::copy_nonoverlapping(m.as_ptr(), icv, ICV_LEN);
                MsStatus::Ok
            }
            Err(e) => fail(MsStatus::Crypto, e.to_string()),
        }
    })
}

/// Defaults: single hop, plain, seed 1, 300 s at 25 packets/s of 1316
/// bytes, parametric delays.
#[no_mangle]
pub extern "C" fn ms_run_config_new() -> *mut MsRunConfig {
    Box::into_raw(Box::new(MsRunConfig(RunSpec::new(Scenario::SingleHop, Scheme::PLAIN, 1))))
}

/// # Safety
/// `cfg` must be NULL or a handle from `ms_run_config_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_run_config_free(cfg: *mut MsRunConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_config_set_scenario(cfg: *mut MsRunConfig, scenario: MsScenario) -> MsStatus {
    let Some(c) = cfg.as_mut() else {
        return fail(MsStatus::NullPointer, "null config");
    };
    c.0.scenario = match scenario {
        MsScenario::SingleHop => Scenario::SingleHop,
        MsScenario::MultiHop => Scenario::MultiHop,
    };
    MsStatus::Ok
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_config_set_scheme(cfg: *mut MsRunConfig, esp: MsEsp, ah: MsAh) -> MsStatus {
    let Some(c) = cfg.as_mut() else {
        return fail(MsStatus::NullPointer, "null config");
    };
    c.0.scheme = Scheme {
        esp: match esp {
            MsEsp::None => None,
            MsEsp::Aes => Some(CipherAlgorithm::AesCbc),
            MsEsp::Tdes => Some(CipherAlgorithm::TdesCbc),
        },
        ah: match ah {
            MsAh::None => None,
            MsAh::Md5 => Some(AuthAlgorithm::HmacMd5),
            MsAh::Sha1 => Some(AuthAlgorithm::HmacSha1),
        },
    };
    MsStatus::Ok
}

/// Sets the seed, stream shape and delay mode in one call. Zero rate or
/// duration is rejected by `ms_run`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_config_set_traffic(
    cfg: *mut MsRunConfig,
    seed: u64,
    duration_us: u64,
    rate_pps: u32,
    payload_bytes: usize,
    measured: bool,
) -> MsStatus {
    let Some(c) = cfg.as_mut() else {
        return fail(MsStatus::NullPointer, "null config");
    };
    c.0.seed = seed;
    c.0.duration_us = duration_us;
    c.0.rate_pps = rate_pps;
    c.0.payload_bytes = payload_bytes;
    c.0.delay = if measured {
        DelayModel::measured()
    } else {
        DelayModel::default()
    };
    MsStatus::Ok
}

/// Runs the simulation. Nothing is written to disk.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_run(cfg: *const MsRunConfig, out: *mut *mut MsRunResult) -> MsStatus {
    guard(|| {
        let (Some(c), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(MsStatus::NullPointer, "null config or out pointer");
        };
        match cli::run(&c.0) {
            Ok(outcome) => {
                let trace_hash = CString::new(outcome.result.trace_hash.clone()).expect("hex has no nul");
                *out = Box::into_raw(Box::new(MsRunResult { outcome, trace_hash }));
                MsStatus::Ok
            }
            Err(e) => fail(cli_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `res` must be NULL or a handle from `ms_run`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_free(res: *mut MsRunResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Stream packets emitted; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_sent(res: *const MsRunResult) -> u64 {
    res.as_ref().map_or(0, |r| r.outcome.result.streams[0].sent)
}

/// Stream packets delivered to the receiver; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_received(res: *const MsRunResult) -> u64 {
    res.as_ref().map_or(0, |r| r.outcome.result.streams[0].received)
}

/// Mean sampled end-to-end delay in microseconds. `Config` when nothing was
/// delivered.
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_avg_delay_us(res: *const MsRunResult, out: *mut f64) -> MsStatus {
    let (Some(r), false) = (res.as_ref(), out.is_null()) else {
        return fail(MsStatus::NullPointer, "null result or out pointer");
    };
    match r.outcome.avg_delay_us {
        Some(d) => {
            *out = d;
            MsStatus::Ok
        }
        None => fail(MsStatus::Config, "no delay samples"),
    }
}

/// Hex SHA-256 of the trace, borrowed from the handle.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_trace_hash(res: *const MsRunResult) -> *const c_char {
    res.as_ref().map_or(ptr::null(), |r| r.trace_hash.as_ptr())
}

/// The per-node report as CSV, header included.
///
/// # Safety
/// `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_run_result_csv(res: *const MsRunResult, out: *mut *mut c_char) -> MsStatus {
    guard(|| match (res.as_ref(), out.is_null()) {
        (Some(r), false) => out_string(out, metrics::render_csv(&r.outcome.rows)),
        _ => fail(MsStatus::NullPointer, "null result or out pointer"),
    })
}
