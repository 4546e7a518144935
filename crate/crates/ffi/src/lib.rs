//! C ABI over `star-asqp`.
//!
//! Conventions:
//!
//! * every fallible function returns a [`StarStatus`] and writes its result
//!   through an out-pointer; on failure [`star_last_error`] describes why,
//! * strings are NUL-terminated UTF-8; strings returned by the library are
//!   owned by the caller and released with [`star_string_free`],
//! * structured values (quad lists, reports) cross the boundary as JSON,
//! * [`StarSchema`] and [`StarVote`] are opaque handles with `_new`/`_free`.
//!
//! The header is generated by cbindgen into `include/star_asqp.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use star_asqp::augment::{enumerate_quad_orders, render_quad_target, OrderTemplate};
use star_asqp::dataset::{CanonicalRecord, Taxonomy};
use star_asqp::decode::{validate_sequence, DecodingSchema};
use star_asqp::eval::{score_exact_match, QuadsById};
use star_asqp::infer::{parse_target, OrderView, VoteTally};
use star_asqp::loss::{balanced_contribution_loss, pooled_sum_loss};
use star_asqp::model::{map_quad, Quad, Sentence};
use star_asqp::pipeline::FinalPrediction;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, unknown order, bad parameter.
    InvalidArgument = 3,
    /// Well-formed request the library refused (empty loss group, id
    /// mismatch, too many views...).
    Rejected = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(StarStatus, String);

impl Fail {
    fn arg(e: impl ToString) -> Self {
        Fail(StarStatus::InvalidArgument, e.to_string())
    }

    fn rejected(e: impl ToString) -> Self {
        Fail(StarStatus::Rejected, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            StarStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StarStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(StarStatus::NullPointer, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(StarStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(StarStatus::NullPointer, format!("`{name}` is NULL")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(StarStatus::NullPointer, format!("`{name}` is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn order_arg(s: &str) -> Result<OrderTemplate, Fail> {
    s.parse().map_err(Fail::arg)
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn json_out<T: serde::Serialize + ?Sized>(value: &T, out: &mut *mut c_char) -> Result<(), Fail> {
    *out = into_c(serde_json::to_string(value).map_err(Fail::arg)?);
    Ok(())
}

/// Description of the last failure on this thread, or NULL. The caller
/// frees the copy with [`star_string_free`].
#[no_mangle]
pub extern "C" fn star_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |m| m.clone().into_raw()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn star_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version; static, do not free.
#[no_mangle]
pub extern "C" fn star_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// JSON array of the 24 quad orders, e.g. `["[A][C][O][S]", ...]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_quad_orders(out: *mut *mut c_char) -> StarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let orders: Vec<String> = enumerate_quad_orders().iter().map(OrderTemplate::surface).collect();
        json_out(&orders, out)
    })
}

/// Render a quad-prediction target from a JSON quad list
/// (`[{"aspect", "category", "opinion", "polarity"}]`) and an order such as
/// `"[A][C][O][S]"` or `"ACOS"`.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_render_target(
    quads_json: *const c_char,
    order: *const c_char,
    out: *mut *mut c_char,
) -> StarStatus {
    guard(|| {
        let quads: Vec<Quad> = serde_json::from_str(str_arg(quads_json, "quads_json")?).map_err(Fail::arg)?;
        let order = order_arg(str_arg(order, "order")?)?;
        let out = out_arg(out, "out")?;
        if quads.is_empty() {
            return Err(Fail::rejected("empty quad list"));
        }
        let mapped: Vec<_> = quads.iter().map(map_quad).collect();
        *out = into_c(render_quad_target(&mapped, &order));
        Ok(())
    })
}

/// Parse a generated target into a JSON quad list. Malformed segments are
/// dropped; `n_malformed` (may be NULL) receives their count.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_parse_target(
    target: *const c_char,
    order: *const c_char,
    out: *mut *mut c_char,
    n_malformed: *mut usize,
) -> StarStatus {
    guard(|| {
        let target = str_arg(target, "target")?;
        let order = order_arg(str_arg(order, "order")?)?;
        let out = out_arg(out, "out")?;
        let parsed = parse_target(target, &order);
        if let Some(n) = n_malformed.as_mut() {
            *n = parsed.diagnostics.len();
        }
        json_out(&parsed.quads, out)
    })
}

/// Decoding schema handle.
pub struct StarSchema {
    schema: DecodingSchema,
}

/// Build a schema from newline-separated categories and the expected order.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_schema_new(
    categories: *const c_char,
    order: *const c_char,
    strict_spans: bool,
    out: *mut *mut StarSchema,
) -> StarStatus {
    guard(|| {
        let taxonomy = Taxonomy::from_lines(str_arg(categories, "categories")?);
        let order = order_arg(str_arg(order, "order")?)?;
        let out = out_arg(out, "out")?;
        let schema = DecodingSchema::new(taxonomy, order)
            .map_err(Fail::arg)?
            .strict_spans(strict_spans);
        *out = Box::into_raw(Box::new(StarSchema { schema }));
        Ok(())
    })
}

/// # Safety
/// `schema` must be NULL or a handle from [`star_schema_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn star_schema_free(schema: *mut StarSchema) {
    if !schema.is_null() {
        drop(Box::from_raw(schema));
    }
}

/// Validate `target` for `sentence`. `*valid` tells the verdict; when
/// invalid, `*position` is the whitespace-token index of the first
/// violation (the token count for a premature end).
///
/// # Safety
/// `schema` must be a live handle; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn star_schema_validate(
    schema: *const StarSchema,
    sentence: *const c_char,
    target: *const c_char,
    valid: *mut bool,
    position: *mut usize,
) -> StarStatus {
    guard(|| {
        let schema = schema
            .as_ref()
            .ok_or_else(|| Fail(StarStatus::NullPointer, "`schema` is NULL".into()))?;
        let sentence = Sentence::new("ffi", str_arg(sentence, "sentence")?);
        let target = str_arg(target, "target")?;
        let valid = out_arg(valid, "valid")?;
        let position = out_arg(position, "position")?;
        match validate_sequence(target, &sentence, &schema.schema) {
            Ok(()) => {
                *valid = true;
                *position = 0;
            }
            Err(v) => {
                *valid = false;
                *position = v.position;
            }
        }
        Ok(())
    })
}

/// Vote accumulator for one sentence.
pub struct StarVote {
    k: usize,
    tau: f64,
    views: Vec<OrderView>,
}

/// `tau <= 0` selects the default `k / 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_vote_new(k: usize, tau: f64, out: *mut *mut StarVote) -> StarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if k == 0 {
            return Err(Fail::arg("k must be at least 1"));
        }
        let tau = if tau > 0.0 {
            tau
        } else {
            star_asqp::infer::default_tau(k)
        };
        *out = Box::into_raw(Box::new(StarVote {
            k,
            tau,
            views: Vec::new(),
        }));
        Ok(())
    })
}

/// Add the generated sequence of one order as a view.
///
/// # Safety
/// `vote` must be a live handle; strings valid.
#[no_mangle]
pub unsafe extern "C" fn star_vote_add_view(
    vote: *mut StarVote,
    order: *const c_char,
    sequence: *const c_char,
) -> StarStatus {
    guard(|| {
        let vote = out_arg(vote, "vote")?;
        let order = order_arg(str_arg(order, "order")?)?;
        let sequence = str_arg(sequence, "sequence")?;
        if vote.views.iter().any(|v| v.order == order) {
            return Err(Fail::rejected(format!("order {order} added twice")));
        }
        if vote.views.len() == vote.k {
            return Err(Fail::rejected(format!("already {} views", vote.k)));
        }
        vote.views.push(OrderView::from_sequence(order, sequence));
        Ok(())
    })
}

/// Accepted quads as a JSON list. Views not added count as empty.
///
/// # Safety
/// `vote` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_vote_result(vote: *const StarVote, out: *mut *mut c_char) -> StarStatus {
    guard(|| {
        let vote = vote
            .as_ref()
            .ok_or_else(|| Fail(StarStatus::NullPointer, "`vote` is NULL".into()))?;
        let out = out_arg(out, "out")?;
        let tally = VoteTally::with_k(&vote.views, vote.k, vote.tau).map_err(Fail::rejected)?;
        json_out(&tally.accepted(), out)
    })
}

/// # Safety
/// `vote` must be NULL or a handle from [`star_vote_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn star_vote_free(vote: *mut StarVote) {
    if !vote.is_null() {
        drop(Box::from_raw(vote));
    }
}

/// Balanced contribution loss: the sum of the three group means.
///
/// # Safety
/// Each array must hold at least its length in readable doubles.
#[no_mangle]
pub unsafe extern "C" fn star_bcl(
    quad: *const f64,
    n_quad: usize,
    pairwise: *const f64,
    n_pairwise: usize,
    overall: *const f64,
    n_overall: usize,
    out: *mut f64,
) -> StarStatus {
    guard(|| {
        let q = slice_arg(quad, n_quad, "quad")?;
        let p = slice_arg(pairwise, n_pairwise, "pairwise")?;
        let o = slice_arg(overall, n_overall, "overall")?;
        let out = out_arg(out, "out")?;
        *out = balanced_contribution_loss(q, p, o).map_err(Fail::rejected)?.total;
        Ok(())
    })
}

/// Mean over all instances regardless of task.
///
/// # Safety
/// Each array must hold at least its length in readable doubles.
#[no_mangle]
pub unsafe extern "C" fn star_pooled_loss(
    quad: *const f64,
    n_quad: usize,
    pairwise: *const f64,
    n_pairwise: usize,
    overall: *const f64,
    n_overall: usize,
    out: *mut f64,
) -> StarStatus {
    guard(|| {
        let q = slice_arg(quad, n_quad, "quad")?;
        let p = slice_arg(pairwise, n_pairwise, "pairwise")?;
        let o = slice_arg(overall, n_overall, "overall")?;
        let out = out_arg(out, "out")?;
        *out = pooled_sum_loss(q, p, o).map_err(Fail::rejected)?;
        Ok(())
    })
}

fn jsonl<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<Vec<T>, Fail> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Fail::arg(format!("{what} line {}: {e}", i + 1))))
        .collect()
}

/// Exact-match report JSON (`precision`, `recall`, `f1`, `tp`, `n_pred`,
/// `n_gold`) from final predictions JSONL and canonical gold JSONL.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn star_eval(
    predictions_jsonl: *const c_char,
    gold_jsonl: *const c_char,
    out: *mut *mut c_char,
) -> StarStatus {
    guard(|| {
        let preds: Vec<FinalPrediction> = jsonl(str_arg(predictions_jsonl, "predictions_jsonl")?, "predictions")?;
        let gold: Vec<CanonicalRecord> = jsonl(str_arg(gold_jsonl, "gold_jsonl")?, "gold")?;
        let out = out_arg(out, "out")?;
        let mut pred_map = QuadsById::new();
        for p in preds {
            if pred_map.insert(p.source_id.clone(), p.quads).is_some() {
                return Err(Fail::arg(format!("duplicate prediction id {}", p.source_id)));
            }
        }
        let mut gold_map = QuadsById::new();
        for g in gold {
            if gold_map.insert(g.id.clone(), g.quads).is_some() {
                return Err(Fail::arg(format!("duplicate gold id {}", g.id)));
            }
        }
        let r = score_exact_match(&pred_map, &gold_map).map_err(Fail::rejected)?;
        json_out(&r, out)
    })
}
