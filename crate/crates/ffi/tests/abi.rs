use std::ffi::{CStr, CString};
use std::ptr;

use manet_seclab_ffi::*;

fn last_error() -> String {
    let p = ms_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn reference_setkey_round_trip() {
    unsafe {
        let mut dbs = ptr::null_mut();
        assert_eq!(ms_setkey_parse(ms_reference_setkey(), &mut dbs), MsStatus::Ok);
        assert_eq!(ms_databases_sa_count(dbs), 4);
        assert_eq!(ms_databases_policy_count(dbs), 2);
        let mut text = ptr::null_mut();
        assert_eq!(ms_setkey_render(dbs, &mut text), MsStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(ms_setkey_parse(text, &mut again), MsStatus::Ok);
        assert_eq!(ms_databases_sa_count(again), 4);
        ms_string_free(text);
        ms_databases_free(dbs);
        ms_databases_free(again);
    }
}

#[test]
fn parse_error_sets_message() {
    let bad = CString::new("add 1.2.3.4 5.6.7.8 ah 0x1 -A hmac-md5 0x00;").unwrap();
    let mut dbs = ptr::null_mut();
    let s = unsafe { ms_setkey_parse(bad.as_ptr(), &mut dbs) };
    assert_eq!(s, MsStatus::Parse);
    assert!(dbs.is_null());
    assert!(last_error().contains("line 1"), "{}", last_error());
    assert_eq!(unsafe { ms_setkey_parse(ptr::null(), &mut dbs) }, MsStatus::NullPointer);
}

#[test]
fn hmac96_matches_rfc2202() {
    // RFC 2202 test case 2 ("Jefe") is keyed with 4 bytes, which AH rejects.
    let key = [0x0bu8; 16];
    let data = b"Hi There";
    let mut icv = [0u8; 12];
    let s = unsafe { ms_hmac96(MsAh::Md5, key.as_ptr(), 16, data.as_ptr(), data.len(), icv.as_mut_ptr()) };
    assert_eq!(s, MsStatus::Ok);
    assert_eq!(icv, [0x92, 0x94, 0x72, 0x7a, 0x36, 0x38, 0xbb, 0x1c, 0x13, 0xf4, 0x8e, 0xf8]);
    let s = unsafe { ms_hmac96(MsAh::Sha1, key.as_ptr(), 16, data.as_ptr(), data.len(), icv.as_mut_ptr()) };
    assert_eq!(s, MsStatus::Crypto);
    let s = unsafe { ms_hmac96(MsAh::Md5, ptr::null(), 16, data.as_ptr(), data.len(), icv.as_mut_ptr()) };
    assert_eq!(s, MsStatus::NullPointer);
}

#[test]
fn run_through_handles() {
    unsafe {
        let cfg = ms_run_config_new();
        assert_eq!(ms_run_config_set_scenario(cfg, MsScenario::MultiHop), MsStatus::Ok);
        assert_eq!(ms_run_config_set_scheme(cfg, MsEsp::Aes, MsAh::Sha1), MsStatus::Ok);
        assert_eq!(ms_run_config_set_traffic(cfg, 7, 4_000_000, 25, 1316, false), MsStatus::Ok);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(ms_run(cfg, &mut a), MsStatus::Ok);
        assert_eq!(ms_run(cfg, &mut b), MsStatus::Ok);
        assert_eq!(ms_run_result_sent(a), 100);
        assert_eq!(ms_run_result_received(a), 100);
        let mut d = 0.0;
        assert_eq!(ms_run_result_avg_delay_us(a, &mut d), MsStatus::Ok);
        assert!(d > 0.0);
        let (ha, hb) = (CStr::from_ptr(ms_run_result_trace_hash(a)), CStr::from_ptr(ms_run_result_trace_hash(b)));
        assert_eq!(ha, hb);
        assert_eq!(ha.to_bytes().len(), 64);
        let mut csv = ptr::null_mut();
        assert_eq!(ms_run_result_csv(a, &mut csv), MsStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        ms_string_free(csv);
        assert!(text.starts_with("scheme,scenario,node_role,"));
        assert_eq!(text.lines().count(), 4);
        ms_run_result_free(a);
        ms_run_result_free(b);

        assert_eq!(ms_run_config_set_traffic(cfg, 7, 4_000_000, 0, 1316, false), MsStatus::Ok);
        let mut c = ptr::null_mut();
        assert_eq!(ms_run(cfg, &mut c), MsStatus::Config);
        assert!(c.is_null());
        assert!(last_error().contains("rate"));
        ms_run_config_free(cfg);
        ms_run_config_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/manet_seclab.h");
    let src = include_str!("../src/lib.rs");
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else {
            continue;
        };
        let name = rest.split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct MsRunResult MsRunResult;"));
    let version = unsafe { CStr::from_ptr(ms_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
