use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use star_asqp_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    star_string_free(p);
    s
}

unsafe fn last_error() -> String {
    take(star_last_error())
}

const PIZZA_QUADS: &str =
    r#"[{"aspect":"pizza","category":"food quality","opinion":"delicious","polarity":"positive"}]"#;

#[test]
fn render_and_parse() {
    unsafe {
        let mut out = ptr::null_mut();
        let st = star_render_target(c(PIZZA_QUADS).as_ptr(), c("OACS").as_ptr(), &mut out);
        assert_eq!(st, StarStatus::Ok);
        let target = take(out);
        assert_eq!(target, "[O] delicious [A] pizza [C] food quality [S] great");

        let mut n_bad = 99usize;
        let st = star_parse_target(c(&target).as_ptr(), c("[O][A][C][S]").as_ptr(), &mut out, &mut n_bad);
        assert_eq!(st, StarStatus::Ok);
        let back: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(back, serde_json::from_str::<serde_json::Value>(PIZZA_QUADS).unwrap());
        assert_eq!(n_bad, 0);

        let st = star_parse_target(c("[O] x [A]").as_ptr(), c("OACS").as_ptr(), &mut out, ptr::null_mut());
        assert_eq!(st, StarStatus::Ok);
        assert_eq!(take(out), "[]");
    }
}

#[test]
fn argument_errors_set_last_error() {
    unsafe {
        let mut out = ptr::null_mut();
        let st = star_render_target(c(PIZZA_QUADS).as_ptr(), c("AACS").as_ptr(), &mut out);
        assert_eq!(st, StarStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            star_render_target(ptr::null(), c("ACOS").as_ptr(), &mut out),
            StarStatus::NullPointer
        );
        assert_eq!(
            star_render_target(c("[").as_ptr(), c("ACOS").as_ptr(), &mut out),
            StarStatus::InvalidArgument
        );
        assert_eq!(
            star_render_target(c("[]").as_ptr(), c("ACOS").as_ptr(), &mut out),
            StarStatus::Rejected
        );

        let bad_utf8 = [0xffu8, 0];
        assert_eq!(
            star_render_target(bad_utf8.as_ptr().cast(), c("ACOS").as_ptr(), &mut out),
            StarStatus::InvalidUtf8
        );

        let mut orders = ptr::null_mut();
        assert_eq!(star_quad_orders(&mut orders), StarStatus::Ok);
        assert!(star_last_error().is_null(), "success clears the error");
        let orders: Vec<String> = serde_json::from_str(&take(orders)).unwrap();
        assert_eq!(orders.len(), 24);
        assert_eq!(orders[0], "[A][C][O][S]");
    }
}

#[test]
fn schema_handle() {
    unsafe {
        let mut schema = ptr::null_mut();
        let st = star_schema_new(
            c("food quality\ndrinks\n").as_ptr(),
            c("ACOS").as_ptr(),
            false,
            &mut schema,
        );
        assert_eq!(st, StarStatus::Ok);
        let sentence = c("The pizza is delicious.");
        let (mut valid, mut pos) = (false, 0usize);
        let check = |target: &str, valid: &mut bool, pos: &mut usize| {
            star_schema_validate(schema, sentence.as_ptr(), c(target).as_ptr(), valid, pos)
        };
        assert_eq!(
            check(
                "[A] pizza [C] food quality [O] delicious [S] great",
                &mut valid,
                &mut pos
            ),
            StarStatus::Ok
        );
        assert!(valid);
        check(
            "[A] pizza [C] food quality [O] delicious [S] amazing",
            &mut valid,
            &mut pos,
        );
        assert!(!valid);
        assert_eq!(pos, 8);
        check("[A] pizza [C] food", &mut valid, &mut pos);
        assert_eq!((valid, pos), (false, 4));
        star_schema_free(schema);
        star_schema_free(ptr::null_mut());

        assert_eq!(
            star_schema_new(c("").as_ptr(), c("ACOS").as_ptr(), false, &mut schema),
            StarStatus::InvalidArgument
        );
    }
}

#[test]
fn vote_handle() {
    unsafe {
        let mut vote = ptr::null_mut();
        assert_eq!(star_vote_new(3, 0.0, &mut vote), StarStatus::Ok);
        let a = "[A] pizza [C] food quality [O] delicious [S] great";
        assert_eq!(
            star_vote_add_view(vote, c("ACOS").as_ptr(), c(a).as_ptr()),
            StarStatus::Ok
        );
        let b =
            "[A] it [C] food quality [S] great [O] delicious [SSEP] [A] pizza [C] food quality [S] great [O] delicious";
        assert_eq!(
            star_vote_add_view(vote, c("ACSO").as_ptr(), c(b).as_ptr()),
            StarStatus::Ok
        );
        assert_eq!(
            star_vote_add_view(vote, c("ACSO").as_ptr(), c("").as_ptr()),
            StarStatus::Rejected
        );

        let mut out = ptr::null_mut();
        assert_eq!(star_vote_result(vote, &mut out), StarStatus::Ok);
        // tau = 1.5 over k = 3, the third view counted as empty
        let got: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(got, serde_json::from_str::<serde_json::Value>(PIZZA_QUADS).unwrap());
        star_vote_free(vote);
    }
}

#[test]
fn losses() {
    unsafe {
        let (q, p, o) = ([1.0, 3.0], [2.0, 2.0, 2.0, 6.0], [0.5]);
        let mut out = 0.0;
        assert_eq!(
            star_bcl(q.as_ptr(), 2, p.as_ptr(), 4, o.as_ptr(), 1, &mut out),
            StarStatus::Ok
        );
        assert_eq!(out, 2.0 + 3.0 + 0.5);
        assert_eq!(
            star_pooled_loss(q.as_ptr(), 2, p.as_ptr(), 4, o.as_ptr(), 1, &mut out),
            StarStatus::Ok
        );
        assert_eq!(out, 16.5 / 7.0);
        assert_eq!(
            star_bcl(q.as_ptr(), 2, ptr::null(), 0, o.as_ptr(), 1, &mut out),
            StarStatus::Rejected
        );
        assert!(last_error().contains("pairwise"));
        assert_eq!(
            star_bcl(ptr::null(), 2, p.as_ptr(), 4, o.as_ptr(), 1, &mut out),
            StarStatus::NullPointer
        );
    }
}

#[test]
fn eval_report() {
    unsafe {
        let gold = format!(
            "{{\"id\":\"s0\",\"text\":\"The pizza is delicious.\",\"quads\":{PIZZA_QUADS}}}\n{{\"id\":\"s1\",\"text\":\"Fine.\",\"quads\":[]}}\n"
        );
        let pred = format!(
            "{{\"source_id\":\"s0\",\"quads\":{PIZZA_QUADS}}}\n{{\"source_id\":\"s1\",\"quads\":{PIZZA_QUADS}}}\n"
        );
        let mut out = ptr::null_mut();
        assert_eq!(
            star_eval(c(&pred).as_ptr(), c(&gold).as_ptr(), &mut out),
            StarStatus::Ok
        );
        let r: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(r["tp"], 1);
        assert_eq!(r["precision"], 0.5);
        assert_eq!(r["recall"], 1.0);

        let missing = format!("{{\"source_id\":\"s0\",\"quads\":{PIZZA_QUADS}}}\n");
        assert_eq!(
            star_eval(c(&missing).as_ptr(), c(&gold).as_ptr(), &mut out),
            StarStatus::Rejected
        );
        assert!(last_error().contains("s1"));
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(star_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const HEADER: &str = include_str!("../include/star_asqp.h");

#[test]
fn header_declares_the_api() {
    for f in [
        "star_last_error",
        "star_string_free",
        "star_version",
        "star_quad_orders",
        "star_render_target",
        "star_parse_target",
        "star_schema_new",
        "star_schema_validate",
        "star_schema_free",
        "star_vote_new",
        "star_vote_add_view",
        "star_vote_result",
        "star_vote_free",
        "star_bcl",
        "star_pooled_loss",
        "star_eval",
    ] {
        assert!(HEADER.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(HEADER.contains("typedef struct StarSchema StarSchema;"));
    assert!(HEADER.contains("typedef struct StarVote StarVote;"));
    assert!(HEADER.contains("STAR_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"star_asqp.h\"\nint main(void) { StarSchema *s = 0; (void)s; return STAR_STATUS_OK; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", include])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
