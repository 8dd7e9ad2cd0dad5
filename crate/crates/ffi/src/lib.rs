//! C interface to `nobn-core`.
//!
//! Networks, evidence and search results are opaque handles created by a
//! `*_parse` or search call and released with the matching `*_free`. Every
//! fallible call returns a [`NobnStatus`]; on failure
//! [`nobn_last_error_message`] describes the error on the calling thread.
//! Panics never cross the boundary, they come back as
//! [`NobnStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nobn_core::engine::{top_epsilon_with, SearchOptions, SearchResult};
use nobn_core::error::Error;
use nobn_core::exact::exact_inference;
use nobn_core::model::{parse_evidence, parse_network, print_network, Evidence, Network};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NobnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    /// Free-node cap or state budget exceeded.
    ResourceLimit = 5,
    ImpossibleEvidence = 6,
    OutOfRange = 7,
    Panic = 8,
}

pub struct NobnNetwork(Network);

pub struct NobnEvidence(Evidence);

pub struct NobnSearchResult(SearchResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(NobnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let status = match e.kind() {
            Error::FreeNodeCapExceeded { .. } | Error::StateBudgetExceeded { .. } => NobnStatus::ResourceLimit,
            Error::ImpossibleEvidence => NobnStatus::ImpossibleEvidence,
            Error::InvalidEpsilon(_) => NobnStatus::InvalidArgument,
            _ => NobnStatus::ParseError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NobnStatus::NullArgument, format!("`{what}` is null"))
}

/// Runs `f`, converting failures and panics into a status and the
/// thread's last error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NobnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NobnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NobnStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NobnStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Parses NET text. On success `*out` owns a new network.
#[no_mangle]
pub unsafe extern "C" fn nobn_network_parse(text_ptr: *const c_char, out_net: *mut *mut NobnNetwork) -> NobnStatus {
    guard(|| {
        let slot = out(out_net, "out")?;
        *slot = ptr::null_mut();
        let net = parse_network(text(text_ptr, "text")?)?;
        *slot = Box::into_raw(Box::new(NobnNetwork(net)));
        Ok(())
    })
}

/// Releases a network; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nobn_network_free(net: *mut NobnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of nodes, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn nobn_network_node_count(net: *const NobnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn nobn_network_max_level(net: *const NobnNetwork, out_level: *mut usize) -> NobnStatus {
    guard(|| {
        let net = get(net, "net")?;
        *out(out_level, "out")? = net.0.max_level();
        Ok(())
    })
}

/// Id of the node called `name`.
#[no_mangle]
pub unsafe extern "C" fn nobn_network_node_index(
    net: *const NobnNetwork,
    name: *const c_char,
    out_index: *mut usize,
) -> NobnStatus {
    guard(|| {
        let net = get(net, "net")?;
        let name = text(name, "name")?;
        let id = net
            .0
            .id(name)
            .ok_or_else(|| Failure(NobnStatus::OutOfRange, format!("unknown node `{name}`")))?;
        *out(out_index, "out")? = id;
        Ok(())
    })
}

/// Canonical NET text. Release `*out` with [`nobn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn nobn_network_print(net: *const NobnNetwork, out_text: *mut *mut c_char) -> NobnStatus {
    guard(|| {
        let slot = out(out_text, "out")?;
        *slot = ptr::null_mut();
        let net = get(net, "net")?;
        let s = CString::new(print_network(&net.0)).expect("printed network has no nul");
        *slot = s.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nobn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses EVIDENCE text against `net`.
#[no_mangle]
pub unsafe extern "C" fn nobn_evidence_parse(
    net: *const NobnNetwork,
    text_ptr: *const c_char,
    out_ev: *mut *mut NobnEvidence,
) -> NobnStatus {
    guard(|| {
        let slot = out(out_ev, "out")?;
        *slot = ptr::null_mut();
        let net = get(net, "net")?;
        let ev = parse_evidence(&net.0, text(text_ptr, "text")?)?;
        *slot = Box::into_raw(Box::new(NobnEvidence(ev)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nobn_evidence_free(ev: *mut NobnEvidence) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Every instantiation consistent with `ev` (null for no evidence) with
/// joint `>= epsilon`. `max_states` of 0 means unlimited.
#[no_mangle]
pub unsafe extern "C" fn nobn_top_epsilon(
    net: *const NobnNetwork,
    ev: *const NobnEvidence,
    epsilon: f64,
    max_states: u64,
    out_result: *mut *mut NobnSearchResult,
) -> NobnStatus {
    guard(|| {
        let slot = out(out_result, "out")?;
        *slot = ptr::null_mut();
        let net = get(net, "net")?;
        let empty = Evidence::empty();
        let ev = ev.as_ref().map_or(&empty, |e| &e.0);
        let options = SearchOptions {
            max_states: (max_states > 0).then_some(max_states),
            ..SearchOptions::default()
        };
        let r = top_epsilon_with(&net.0, ev, epsilon, options)?;
        *slot = Box::into_raw(Box::new(NobnSearchResult(r)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nobn_result_free(r: *mut NobnSearchResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Accumulated mass, or 0 for null.
#[no_mangle]
pub unsafe extern "C" fn nobn_result_mass(r: *const NobnSearchResult) -> f64 {
    r.as_ref().map_or(0.0, |r| r.0.mass_accumulated)
}

#[no_mangle]
pub unsafe extern "C" fn nobn_result_states_explored(r: *const NobnSearchResult) -> u64 {
    r.as_ref().map_or(0, |r| r.0.states_explored)
}

#[no_mangle]
pub unsafe extern "C" fn nobn_result_accepted_count(r: *const NobnSearchResult) -> u64 {
    r.as_ref().map_or(0, |r| r.0.accepted_count)
}

/// Estimated `P(node present | evidence)`. Fails with
/// `IMPOSSIBLE_EVIDENCE` when nothing was accepted.
#[no_mangle]
pub unsafe extern "C" fn nobn_result_posterior(r: *const NobnSearchResult, node: usize, out_p: *mut f64) -> NobnStatus {
    guard(|| {
        let r = get(r, "result")?;
        if node >= r.0.score.len() {
            return Err(Failure(NobnStatus::OutOfRange, format!("node {node} out of range")));
        }
        let p =
            r.0.posterior_estimate(node)
                .ok_or_else(|| Failure(NobnStatus::ImpossibleEvidence, "no instantiation was accepted".into()))?;
        *out(out_p, "out")? = p;
        Ok(())
    })
}

/// Brute-force inference over at most `cap` free nodes. `posteriors` may be
/// null; otherwise it must hold `posteriors_len` doubles, at least the node
/// count.
#[no_mangle]
pub unsafe extern "C" fn nobn_exact_inference(
    net: *const NobnNetwork,
    ev: *const NobnEvidence,
    cap: usize,
    out_evidence_probability: *mut f64,
    posteriors: *mut f64,
    posteriors_len: usize,
) -> NobnStatus {
    guard(|| {
        let net = get(net, "net")?;
        let empty = Evidence::empty();
        let ev = ev.as_ref().map_or(&empty, |e| &e.0);
        if !posteriors.is_null() && posteriors_len < net.0.len() {
            return Err(Failure(
                NobnStatus::OutOfRange,
                format!("posterior buffer holds {posteriors_len} values, {} needed", net.0.len()),
            ));
        }
        let r = exact_inference(&net.0, ev, cap)?;
        *out(out_evidence_probability, "out")? = r.evidence_probability;
        if !posteriors.is_null() {
            std::slice::from_raw_parts_mut(posteriors, r.posteriors.len()).copy_from_slice(&r.posteriors);
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nobn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn nobn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
