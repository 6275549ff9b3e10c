//! Round trips through the C ABI, called from Rust.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use qomdp_ffi::*;

const PROJECTORS: &str = r#"{"version":"dproc-1","kind":"qmop","body":{"dim":2,
    "kraus":[[[[1,0],[0,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[1,0]]]]}}"#;

const COIN: &str = r#"{"version":"dproc-1","kind":"goal_pomdp","body":{
    "num_states":2,"num_actions":1,"num_obs":2,
    "transition":[[[0.5,0.5]],[[0.0,1.0]]],
    "observation":[[[1.0,0.0]],[[0.0,1.0]]],
    "b0":[1.0,0.0],"goal":1}}"#;

const SWAP: &str = r#"{"version":"dproc-1","kind":"pomdp","body":{
    "num_states":2,"num_actions":2,"num_obs":2,
    "transition":[[[0.0,1.0],[1.0,0.0]],[[1.0,0.0],[0.0,1.0]]],
    "observation":[[[0.75,0.25],[0.75,0.25]],[[0.25,0.75],[0.25,0.75]]],
    "reward":[[0.0,1.0],[2.0,0.0]],
    "b0":[0.5,0.5],"gamma":0.9}}"#;

fn load(json: &str) -> *mut QomdpModel {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    let status = unsafe { qomdp_model_from_json(text.as_ptr(), &mut m) };
    assert_eq!(status, QomdpStatus::Ok, "{}", last_error());
    m
}

fn last_error() -> String {
    let p = qomdp_last_error_message();
    if p.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { qomdp_string_free(p) };
    s
}

#[test]
fn qmop_search_reduce_and_decide() {
    let s = load(PROJECTORS);
    let mut kind = QomdpKind::Mdp;
    assert_eq!(unsafe { qomdp_model_kind(s, &mut kind) }, QomdpStatus::Ok);
    assert_eq!(kind, QomdpKind::Qmop);

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { qomdp_qmop_search(s, 2, &mut report) }, QomdpStatus::Ok);
    let search = take_string(report);
    assert!(search.contains(r#""witness":{"action_sequence":[1,2]}"#), "{search}");

    let mut p = f64::NAN;
    assert_eq!(unsafe { qomdp_nongoal_probability(s, [1usize, 1].as_ptr(), 2, &mut p) }, QomdpStatus::Ok);
    assert!((p - 1.0 / 3.0).abs() < 1e-12, "{p}");

    let mut q = ptr::null_mut();
    assert_eq!(unsafe { qomdp_qmop_reduce(s, &mut q) }, QomdpStatus::Ok);
    assert_eq!(unsafe { qomdp_decide_reach(q, 2, &mut report) }, QomdpStatus::Ok);
    assert!(take_string(report).starts_with(r#"{"decided":"yes","witness":{"action_sequence":[1,2]}"#));

    let mut hit = f64::NAN;
    let status = unsafe { qomdp_simulate(q, [1usize, 2].as_ptr(), 2, 2, 1000, 3, &mut hit) };
    assert_eq!(status, QomdpStatus::Ok, "{}", last_error());
    assert_eq!(hit, 1.0);

    unsafe {
        qomdp_model_free(q);
        qomdp_model_free(s);
    }
}

#[test]
fn goal_pomdp_verdict_and_json_round_trip() {
    let coin = load(COIN);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { qomdp_decide_reach(coin, 0, &mut report) }, QomdpStatus::Ok);
    assert!(take_string(report).starts_with(r#"{"decided":"no""#));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { qomdp_model_to_json(coin, &mut json) }, QomdpStatus::Ok);
    let again = load(&take_string(json));
    let mut kind = QomdpKind::Mdp;
    assert_eq!(unsafe { qomdp_model_kind(again, &mut kind) }, QomdpStatus::Ok);
    assert_eq!(kind, QomdpKind::GoalPomdp);
    unsafe {
        qomdp_model_free(again);
        qomdp_model_free(coin);
    }
}

#[test]
fn embedding_keeps_the_optimal_value() {
    let p = load(SWAP);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { qomdp_embed(p, &mut q) }, QomdpStatus::Ok);
    let (mut vp, mut vq) = (f64::NAN, f64::NAN);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { qomdp_solve(p, 3, &mut vp, &mut report) }, QomdpStatus::Ok);
    assert!(take_string(report).contains(r#""witness":{"action""#));
    assert_eq!(unsafe { qomdp_solve(q, 3, &mut vq, ptr::null_mut()) }, QomdpStatus::Ok);
    assert!((vp - vq).abs() <= 1e-10, "{vp} vs {vq}");
    unsafe {
        qomdp_model_free(q);
        qomdp_model_free(p);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut m = ptr::null_mut();
    let junk = CString::new("{").unwrap();
    assert_eq!(unsafe { qomdp_model_from_json(junk.as_ptr(), &mut m) }, QomdpStatus::Parse);
    assert!(last_error().starts_with("parse error"), "{}", last_error());
    assert!(m.is_null());

    let incomplete = CString::new(PROJECTORS.replace("[[[0,0],[0,0]],[[0,0],[1,0]]]", "[[[0,0],[0,0]],[[0,0],[0,0]]]")).unwrap();
    assert_eq!(unsafe { qomdp_model_from_json(incomplete.as_ptr(), &mut m) }, QomdpStatus::Validation);
    assert!(last_error().contains("kraus-completeness"), "{}", last_error());

    assert_eq!(unsafe { qomdp_model_from_json(ptr::null(), &mut m) }, QomdpStatus::NullPointer);
    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { qomdp_model_load(missing.as_ptr(), &mut m) }, QomdpStatus::Io);

    let coin = load(COIN);
    let mut v = 0.0;
    assert_eq!(unsafe { qomdp_solve(coin, 2, &mut v, ptr::null_mut()) }, QomdpStatus::Unsupported);
    let mut p = 0.0;
    assert_eq!(unsafe { qomdp_nongoal_probability(coin, ptr::null(), 0, &mut p) }, QomdpStatus::Unsupported);
    assert_eq!(unsafe { qomdp_simulate(coin, [3usize].as_ptr(), 1, 1, 10, 0, &mut p) }, QomdpStatus::InvalidArgument);
    assert_eq!(unsafe { qomdp_model_kind(ptr::null(), ptr::null_mut()) }, QomdpStatus::NullPointer);
    unsafe { qomdp_model_free(coin) };

    let s = load(PROJECTORS);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { qomdp_qmop_reduce(s, &mut q) }, QomdpStatus::Ok);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { qomdp_decide_reach(q, 0, &mut report) }, QomdpStatus::InvalidArgument);
    assert!(report.is_null());
    unsafe {
        qomdp_model_free(q);
        qomdp_model_free(s);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(qomdp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
