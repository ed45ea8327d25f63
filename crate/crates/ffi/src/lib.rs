//! C interface to cqlin.
//!
//! Queries, TGD sets and databases live behind opaque handles created by the
//! `*_parse` functions and released with the matching `*_free`. Every
//! fallible call returns a [`CqlinStatus`]; on failure the message is
//! available from [`cqlin_last_error`] until the next call on the same
//! thread. Strings handed out by the library are freed with
//! [`cqlin_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cqlin::chase::skolem_chase;
use cqlin::classifier::classify;
use cqlin::engines::{self, Mode};
use cqlin::model::homomorphism::satisfies_tgds;
use cqlin::parse::{parse_database, parse_query, parse_tgds, parse_var_list};
use cqlin::{ConjunctiveQuery, Database, Error, TgdSet, Value, ValueKind};
use serde_json::{json, Value as Json};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqlinStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    TgdViolation = 5,
    BudgetExhausted = 6,
    OutOfBound = 7,
    Panic = 8,
}

/// Parsed conjunctive query.
pub struct CqlinQuery(ConjunctiveQuery);

/// Parsed set of TGDs.
pub struct CqlinTgds(TgdSet);

/// In-memory database.
pub struct CqlinDatabase(Database);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CqlinStatus {
    match e {
        Error::Parse(_) => CqlinStatus::Parse,
        Error::TgdViolation { .. } => CqlinStatus::TgdViolation,
        Error::BudgetExhausted(_) => CqlinStatus::BudgetExhausted,
        Error::OutOfBound { .. } => CqlinStatus::OutOfBound,
        _ => CqlinStatus::Invalid,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CqlinStatus, String)>) -> CqlinStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CqlinStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CqlinStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CqlinStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (CqlinStatus, String) {
    (CqlinStatus::NullArgument, "null argument".into())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, (CqlinStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CqlinStatus::InvalidUtf8, "string is not UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, (CqlinStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), (CqlinStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), (CqlinStatus, String)> {
    put(out, CString::new(s).unwrap().into_raw())
}

fn value_json(v: Value) -> Json {
    match v.kind() {
        ValueKind::Int(i) => json!(i),
        _ => json!(v.render()),
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cqlin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cqlin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a query such as `q(x) :- R(x,y).`
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqlin_query_parse(text_: *const c_char, out: *mut *mut CqlinQuery) -> CqlinStatus {
    guard(|| {
        let q = parse_query(text(text_)?).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(CqlinQuery(q))))
    })
}

/// # Safety
/// `q` must be null or a handle from [`cqlin_query_parse`].
#[no_mangle]
pub unsafe extern "C" fn cqlin_query_free(q: *mut CqlinQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Parses TGDs, one `body -> head.` rule per line. The empty string is the
/// empty set.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqlin_tgds_parse(text_: *const c_char, out: *mut *mut CqlinTgds) -> CqlinStatus {
    guard(|| {
        let t = parse_tgds(text(text_)?).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(CqlinTgds(t))))
    })
}

/// # Safety
/// `t` must be null or a handle from [`cqlin_tgds_parse`].
#[no_mangle]
pub unsafe extern "C" fn cqlin_tgds_free(t: *mut CqlinTgds) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Parses facts such as `R(1,2).`
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqlin_database_parse(text_: *const c_char, out: *mut *mut CqlinDatabase) -> CqlinStatus {
    guard(|| {
        let d = parse_database(text(text_)?).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(CqlinDatabase(d))))
    })
}

/// # Safety
/// `db` must be null or a database handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cqlin_database_free(db: *mut CqlinDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Number of facts, or 0 for a null handle.
///
/// # Safety
/// `db` must be null or a database handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cqlin_database_len(db: *const CqlinDatabase) -> usize {
    db.as_ref().map_or(0, |d| d.0.len())
}

/// Checks that `db` satisfies `tgds`. Returns `TgdViolation` with the
/// violated rule in the error message otherwise.
///
/// # Safety
/// Both handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn cqlin_check(db: *const CqlinDatabase, tgds: *const CqlinTgds) -> CqlinStatus {
    guard(|| {
        let (d, t) = (handle(db)?, handle(tgds)?);
        satisfies_tgds(&d.0, &t.0).map_err(|v| {
            let witness: Vec<String> = v
                .frontier
                .iter()
                .map(|(x, c)| format!("{}={}", x.name(), c.render()))
                .collect();
            (
                CqlinStatus::TgdViolation,
                format!("database violates `{}` at {}", t.0.tgds()[v.tgd], witness.join(", ")),
            )
        })
    })
}

/// Skolem chase of `db` under `tgds` with at most `budget` steps. The result
/// is a new database handle.
///
/// # Safety
/// Both handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqlin_chase(
    db: *const CqlinDatabase,
    tgds: *const CqlinTgds,
    budget: u64,
    out: *mut *mut CqlinDatabase,
) -> CqlinStatus {
    guard(|| {
        let (d, t) = (handle(db)?, handle(tgds)?);
        let r = skolem_chase(&d.0, &t.0, budget);
        if !r.terminated {
            return Err(lib_err(Error::BudgetExhausted(budget)));
        }
        put(out, Box::into_raw(Box::new(CqlinDatabase(r.instance))))
    })
}

/// Tractability verdict as a JSON object. `mode` is one of `SINGLE_TEST`,
/// `ALL_TEST`, `COUNT`, `DIRECT_ACCESS`, `ENUMERATE`; `order` is a
/// comma-separated variable list or null.
///
/// # Safety
/// Handles must be valid, strings NUL-terminated, `out` a valid pointer.
/// The returned string is freed with [`cqlin_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cqlin_classify(
    q: *const CqlinQuery,
    tgds: *const CqlinTgds,
    mode: *const c_char,
    order: *const c_char,
    out_json: *mut *mut c_char,
) -> CqlinStatus {
    guard(|| {
        let (q, t) = (handle(q)?, handle(tgds)?);
        let mode: Mode = text(mode)?.parse().map_err(lib_err)?;
        let order = if order.is_null() {
            None
        } else {
            Some(parse_var_list(text(order)?).map_err(lib_err)?)
        };
        let v = classify(&q.0, &t.0, mode, order.as_deref()).map_err(lib_err)?;
        put_string(out_json, serde_json::to_string(&v).unwrap())
    })
}

/// Number of distinct answers of `q` on `db`.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqlin_count(q: *const CqlinQuery, db: *const CqlinDatabase, out: *mut u64) -> CqlinStatus {
    guard(|| {
        let (n, _) = engines::count(&handle(q)?.0, &handle(db)?.0).map_err(lib_err)?;
        put(out, n)
    })
}

/// All answers of `q` on `db` as a JSON array of tuples, in enumeration
/// order.
///
/// # Safety
/// Handles must be valid and `out_json` a valid pointer. The returned string
/// is freed with [`cqlin_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cqlin_enumerate(
    q: *const CqlinQuery,
    db: *const CqlinDatabase,
    out_json: *mut *mut c_char,
) -> CqlinStatus {
    guard(|| {
        let answers: Vec<Json> = engines::enumerate(&handle(q)?.0, &handle(db)?.0)
            .map(|a| Json::Array(a.into_iter().map(value_json).collect()))
            .collect();
        put_string(out_json, Json::Array(answers).to_string())
    })
}

/// The `index`-th answer (1-based) in the lexicographic order given by the
/// comma-separated variable list `order`, as a JSON array.
///
/// # Safety
/// Handles must be valid, `order` NUL-terminated, `out_json` a valid
/// pointer. The returned string is freed with [`cqlin_string_free`].
#[no_mangle]
pub unsafe extern "C" fn cqlin_access(
    q: *const CqlinQuery,
    db: *const CqlinDatabase,
    order: *const c_char,
    index: u64,
    out_json: *mut *mut c_char,
) -> CqlinStatus {
    guard(|| {
        let order = parse_var_list(text(order)?).map_err(lib_err)?;
        let da = engines::direct_access(&handle(q)?.0, &handle(db)?.0, &order).map_err(lib_err)?;
        let a = da.access(index).map_err(lib_err)?;
        put_string(out_json, Json::Array(a.into_iter().map(value_json).collect()).to_string())
    })
}
