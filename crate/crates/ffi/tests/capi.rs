use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use cqlin_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { cqlin_string_free(s) };
    out
}

fn last_error() -> String {
    let p = cqlin_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_classify_count_free() {
    unsafe {
        let mut q = ptr::null_mut();
        let mut t = ptr::null_mut();
        let mut db = ptr::null_mut();
        assert_eq!(cqlin_query_parse(c("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).").as_ptr(), &mut q), CqlinStatus::Ok);
        assert_eq!(cqlin_tgds_parse(c("R1(x1,x2), R2(x2,x3) -> R3(x3,x1).").as_ptr(), &mut t), CqlinStatus::Ok);
        assert_eq!(cqlin_database_parse(c("R1(1,2).\nR2(2,3).\nR3(3,1).\n").as_ptr(), &mut db), CqlinStatus::Ok);
        assert_eq!(cqlin_database_len(db), 3);
        assert_eq!(cqlin_check(db, t), CqlinStatus::Ok);

        let mut js = ptr::null_mut();
        assert_eq!(cqlin_classify(q, t, c("SINGLE_TEST").as_ptr(), ptr::null(), &mut js), CqlinStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(js)).unwrap();
        assert_eq!(v["status"], "TRACTABLE");
        assert_eq!(v["theorem"], "COR_5_2");

        let mut n = 0u64;
        assert_eq!(cqlin_count(q, db, &mut n), CqlinStatus::Ok);
        assert_eq!(n, 1);

        cqlin_query_free(q);
        cqlin_tgds_free(t);
        cqlin_database_free(db);
        cqlin_query_free(ptr::null_mut());
    }
}

#[test]
fn enumerate_access_and_chase() {
    unsafe {
        let mut q = ptr::null_mut();
        let mut db = ptr::null_mut();
        cqlin_query_parse(c("q(x,z) :- R(x,y), S(y,z).").as_ptr(), &mut q);
        cqlin_database_parse(c("R(1,2).\nR(3,2).\nS(2,5).\n").as_ptr(), &mut db);
        let mut js = ptr::null_mut();
        assert_eq!(cqlin_enumerate(q, db, &mut js), CqlinStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(js)).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(cqlin_access(q, db, c("x,z").as_ptr(), 2, &mut js), CqlinStatus::Ok);
        assert_eq!(take(js), "[3,5]");
        assert_eq!(cqlin_access(q, db, c("x,z").as_ptr(), 3, &mut js), CqlinStatus::OutOfBound);
        assert!(last_error().contains("out of bound"));

        let mut t = ptr::null_mut();
        cqlin_tgds_parse(c("R(x,y) -> T(y,w).").as_ptr(), &mut t);
        let mut chased = ptr::null_mut();
        assert_eq!(cqlin_chase(db, t, 1000, &mut chased), CqlinStatus::Ok);
        assert_eq!(cqlin_database_len(chased), 4);
        assert_eq!(cqlin_chase(db, t, 0, &mut chased as *mut _), CqlinStatus::BudgetExhausted);
        cqlin_database_free(chased);
        cqlin_tgds_free(t);
        cqlin_query_free(q);
        cqlin_database_free(db);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut q = ptr::null_mut();
        assert_eq!(cqlin_query_parse(c("q(x :- R(x).").as_ptr(), &mut q), CqlinStatus::Parse);
        assert!(!last_error().is_empty());
        assert_eq!(cqlin_query_parse(ptr::null(), &mut q), CqlinStatus::NullArgument);
        assert_eq!(cqlin_count(ptr::null(), ptr::null(), ptr::null_mut()), CqlinStatus::NullArgument);
        let bad = [0xffu8, 0];
        assert_eq!(cqlin_query_parse(bad.as_ptr().cast(), &mut q), CqlinStatus::InvalidUtf8);

        let mut t = ptr::null_mut();
        let mut db = ptr::null_mut();
        cqlin_tgds_parse(c("R1(x1,x2), R2(x2,x3) -> R3(x3,x1).").as_ptr(), &mut t);
        cqlin_database_parse(c("R1(1,2).\nR2(2,3).\n").as_ptr(), &mut db);
        assert_eq!(cqlin_check(db, t), CqlinStatus::TgdViolation);
        assert!(last_error().contains("x1=1"));

        cqlin_query_parse(c("q() :- R1(x,y).").as_ptr(), &mut q);
        let mut js = ptr::null_mut();
        assert_eq!(cqlin_classify(q, t, c("SOMETIMES").as_ptr(), ptr::null(), &mut js), CqlinStatus::Invalid);
        assert_eq!(cqlin_classify(q, t, c("COUNT").as_ptr(), ptr::null(), &mut js), CqlinStatus::Ok);
        cqlin_string_free(js);
        assert!(cqlin_last_error().is_null());
        cqlin_query_free(q);
        cqlin_tgds_free(t);
        cqlin_database_free(db);
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/cqlin.h")).unwrap();
    for f in [
        "cqlin_query_parse", "cqlin_tgds_parse", "cqlin_database_parse", "cqlin_classify", "cqlin_count",
        "cqlin_enumerate", "cqlin_access", "cqlin_chase", "cqlin_check", "cqlin_last_error", "cqlin_string_free",
        "typedef struct CqlinQuery CqlinQuery", "CQLIN_STATUS_OK",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let src = tempfile_path("use.c");
    std::fs::write(
        &src,
        "#include \"cqlin.h\"\nint main(void) { CqlinQuery *q = 0;\n\
         CqlinStatus s = cqlin_query_parse(\"q() :- R(x).\", &q);\n\
         cqlin_query_free(q); return s == CQLIN_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipping the compile check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn tempfile_path(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("cqlin-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}
