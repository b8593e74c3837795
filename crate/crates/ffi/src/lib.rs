//! C ABI over the `rakb` engine.
//!
//! Every fallible function returns a [`RakbStatus`]. On failure the message
//! is kept per thread and can be copied out with
//! [`rakb_last_error_message`]. Handles are opaque and must be released with
//! the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rakb::cli::{exit_code, EXIT_DATA, EXIT_INPUT};
use rakb::metrics::{self, ScoredSample};
use rakb::store::{self, KnowledgeBase};
use rakb::{EnsembleStrategy, Error, Label, Method, ProfileLayout, QueryRecord, RetrievalStrategy};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed input files or invalid configuration.
    InputError = 3,
    /// Well-formed input that cannot be used, e.g. a corrupt knowledge base
    /// or a dimension mismatch.
    DataError = 4,
    BufferTooSmall = 5,
    InternalError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakbRetrieval {
    /// No retrieval: the query's own CM score is the prediction.
    None = 0,
    Cm = 1,
    Profile = 2,
    Hybrid = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakbEnsemble {
    MajorityVote = 0,
    Ratio = 1,
    Average = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RakbMethod {
    /// A `RakbRetrieval` value.
    pub retrieval: u32,
    /// A `RakbEnsemble` value.
    pub ensemble: u32,
    /// Ignored when `retrieval` is `None`.
    pub k: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RakbReport {
    /// NaN when `eer_available` is false (one class absent).
    pub eer: f64,
    pub eer_available: bool,
    pub accuracy: f64,
    pub n_queries: usize,
    pub n_real: usize,
    pub n_fake: usize,
    pub true_fake: usize,
    pub false_fake: usize,
    pub true_real: usize,
    pub false_real: usize,
}

/// Loaded knowledge base.
pub struct RakbBase {
    inner: KnowledgeBase,
}

/// Loaded query set.
pub struct RakbQueries {
    inner: Vec<QueryRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into().into_bytes());
}

fn status_of(err: &Error) -> RakbStatus {
    match exit_code(err) {
        EXIT_INPUT => RakbStatus::InputError,
        EXIT_DATA => RakbStatus::DataError,
        _ => RakbStatus::InternalError,
    }
}

enum Fail {
    Status(RakbStatus, String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RakbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RakbStatus::Ok
        }
        Ok(Err(Fail::Status(status, msg))) => {
            set_error(msg);
            status
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside rakb");
            RakbStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(RakbStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail::Status(RakbStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn retrieval_of(code: u32) -> Result<Option<RetrievalStrategy>, Fail> {
    match code {
        c if c == RakbRetrieval::None as u32 => Ok(None),
        c if c == RakbRetrieval::Cm as u32 => Ok(Some(RetrievalStrategy::CmOnly)),
        c if c == RakbRetrieval::Profile as u32 => Ok(Some(RetrievalStrategy::ProfileOnly)),
        c if c == RakbRetrieval::Hybrid as u32 => Ok(Some(RetrievalStrategy::Hybrid)),
        c => Err(invalid(format!("unknown retrieval code {c}"))),
    }
}

fn method_of(m: &RakbMethod) -> Result<Method, Fail> {
    let Some(retrieval) = retrieval_of(m.retrieval)? else {
        return Ok(Method::Baseline);
    };
    let ensemble = match m.ensemble {
        c if c == RakbEnsemble::MajorityVote as u32 => EnsembleStrategy::MajorityVote,
        c if c == RakbEnsemble::Ratio as u32 => EnsembleStrategy::Ratio,
        c if c == RakbEnsemble::Average as u32 => EnsembleStrategy::Average,
        c => return Err(invalid(format!("unknown ensemble code {c}"))),
    };
    let method = Method::augmented(retrieval, ensemble, m.k);
    method.validate()?;
    Ok(method)
}

fn labels_of(labels: &[u8]) -> Result<Vec<Label>, Fail> {
    labels.iter().map(|&l| Label::try_from(l as u64).map_err(|_| invalid(format!("label {l} is not 0 or 1")))).collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rakb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// including the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rakb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Opens a binary knowledge base.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_load(path: *const c_char, out: *mut *mut RakbBase) -> RakbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = PathBuf::from(str_arg(path, "path")?);
        let inner = store::load(&path)?;
        *out = Box::into_raw(Box::new(RakbBase { inner }));
        Ok(())
    })
}

/// Builds a knowledge base from a JSONL file. `layout` may be null for the
/// default voice profile layout.
///
/// # Safety
/// `path` and non-null `layout` must be NUL-terminated strings; `out` must be
/// valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_build_jsonl(
    path: *const c_char,
    layout: *const c_char,
    out: *mut *mut RakbBase,
) -> RakbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = PathBuf::from(str_arg(path, "path")?);
        let layout: ProfileLayout =
            if layout.is_null() { ProfileLayout::default() } else { str_arg(layout, "layout")?.parse()? };
        let ingested = store::ingest_jsonl(&path, &layout)?;
        let inner = KnowledgeBase::build(&ingested.records, layout)?;
        *out = Box::into_raw(Box::new(RakbBase { inner }));
        Ok(())
    })
}

/// Writes `base` in the binary format.
///
/// # Safety
/// `base` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_save(base: *const RakbBase, path: *const c_char) -> RakbStatus {
    guard(|| {
        let base = ref_arg(base, "base")?;
        store::save(&base.inner, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `base` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_free(base: *mut RakbBase) {
    if !base.is_null() {
        drop(Box::from_raw(base));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `base` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_len(base: *const RakbBase) -> usize {
    base.as_ref().map_or(0, |b| b.inner.len())
}

/// # Safety
/// `base` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_d_cm(base: *const RakbBase) -> usize {
    base.as_ref().map_or(0, |b| b.inner.d_cm())
}

/// # Safety
/// `base` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rakb_base_d_prof(base: *const RakbBase) -> usize {
    base.as_ref().map_or(0, |b| b.inner.d_prof())
}

/// Reads a JSONL query file using `base`'s profile layout. Labels are
/// optional.
///
/// # Safety
/// `base` must be a live handle, `path` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rakb_queries_load_jsonl(
    base: *const RakbBase,
    path: *const c_char,
    out: *mut *mut RakbQueries,
) -> RakbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let base = ref_arg(base, "base")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let inner = store::ingest_queries_jsonl(&path, base.inner.layout())?.records;
        *out = Box::into_raw(Box::new(RakbQueries { inner }));
        Ok(())
    })
}

/// # Safety
/// `queries` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rakb_queries_free(queries: *mut RakbQueries) {
    if !queries.is_null() {
        drop(Box::from_raw(queries));
    }
}

/// # Safety
/// `queries` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rakb_queries_len(queries: *const RakbQueries) -> usize {
    queries.as_ref().map_or(0, |q| q.inner.len())
}

/// Retrieves neighbors of one query; `retrieval` is a `RakbRetrieval` value. Writes up to `capacity` row indices and
/// similarities, best first, and stores the neighbor count in `out_count`.
/// Returns `BufferTooSmall` (with `out_count` set) when `capacity` is short.
/// `prof` may be null for `Cm` retrieval.
///
/// # Safety
/// `cm` must hold `d_cm` floats, `prof` `d_prof` floats; output buffers must
/// hold `capacity` elements; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rakb_retrieve(
    base: *const RakbBase,
    cm: *const f32,
    d_cm: usize,
    prof: *const f32,
    d_prof: usize,
    retrieval: u32,
    k: usize,
    out_indices: *mut usize,
    out_similarities: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> RakbStatus {
    guard(|| {
        let base = &ref_arg(base, "base")?.inner;
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        let strategy = retrieval_of(retrieval)?.ok_or_else(|| invalid("retrieval strategy None has no neighbors"))?;
        let cm = slice_arg(cm, d_cm, "cm")?;
        let prof = if prof.is_null() && strategy == RetrievalStrategy::CmOnly {
            vec![0.0; base.d_prof()]
        } else {
            slice_arg(prof, d_prof, "prof")?.to_vec()
        };
        let query = QueryRecord {
            id: 0,
            cm: rakb::FeatureVector::new(cm.to_vec())?,
            prof: rakb::FeatureVector::new(prof)?,
            score: rakb::CmScore::new(0.5)?,
            label: None,
            meta: None,
        };
        let set = rakb::retrieve(base, &query, strategy, k)?;
        *out_count = set.len();
        if capacity < set.len() {
            return Err(Fail::Status(
                RakbStatus::BufferTooSmall,
                format!("{} neighbors, capacity {capacity}", set.len()),
            ));
        }
        let indices = out_slice(out_indices, set.len(), "out_indices")?;
        let sims = out_slice(out_similarities, set.len(), "out_similarities")?;
        for ((n, i), s) in set.neighbors().iter().zip(indices).zip(sims) {
            *i = n.index;
            *s = n.similarity;
        }
        Ok(())
    })
}

/// Scores every query. `out_scores` must hold `rakb_queries_len(queries)`
/// values; they follow input order.
///
/// # Safety
/// Handles must be live; `method` readable; `out_scores` writable for
/// `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn rakb_predict(
    base: *const RakbBase,
    queries: *const RakbQueries,
    method: *const RakbMethod,
    parallelism: usize,
    out_scores: *mut f64,
    capacity: usize,
) -> RakbStatus {
    guard(|| {
        let base = &ref_arg(base, "base")?.inner;
        let queries = &ref_arg(queries, "queries")?.inner;
        let method = method_of(ref_arg(method, "method")?)?;
        if capacity < queries.len() {
            return Err(Fail::Status(
                RakbStatus::BufferTooSmall,
                format!("{} queries, capacity {capacity}", queries.len()),
            ));
        }
        let predictions = rakb::eval::predict_all(base, queries, &method, parallelism)?;
        let out = out_slice(out_scores, predictions.len(), "out_scores")?;
        for (o, p) in out.iter_mut().zip(&predictions) {
            *o = p.score;
        }
        Ok(())
    })
}

/// Evaluates a labeled query set.
///
/// # Safety
/// Handles must be live; `method` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rakb_evaluate(
    base: *const RakbBase,
    queries: *const RakbQueries,
    method: *const RakbMethod,
    parallelism: usize,
    out: *mut RakbReport,
) -> RakbStatus {
    guard(|| {
        let base = &ref_arg(base, "base")?.inner;
        let queries = &ref_arg(queries, "queries")?.inner;
        let method = method_of(ref_arg(method, "method")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (r, _) = rakb::evaluate(base, queries, &method, parallelism)?;
        let op = r.operating_point;
        *out = RakbReport {
            eer: r.eer.unwrap_or(f64::NAN),
            eer_available: r.eer.is_some(),
            accuracy: r.accuracy,
            n_queries: r.n_queries,
            n_real: r.n_real,
            n_fake: r.n_fake,
            true_fake: op.true_fake,
            false_fake: op.false_fake,
            true_real: op.true_real,
            false_real: op.false_real,
        };
        Ok(())
    })
}

unsafe fn samples(scores: *const f64, labels: *const u8, n: usize) -> Result<Vec<ScoredSample>, Fail> {
    let scores = slice_arg(scores, n, "scores")?;
    let labels = labels_of(slice_arg(labels, n, "labels")?)?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(invalid(format!("score {s} is not finite")));
    }
    Ok(scores.iter().zip(labels).map(|(&s, l)| ScoredSample::new(s, l)).collect())
}

/// Equal error rate of `n` scored samples; labels are 0 (real) or 1 (fake).
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rakb_eer(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> RakbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::eer(&samples(scores, labels, n)?)?;
        Ok(())
    })
}

/// Accuracy at threshold 0.5.
///
/// # Safety
/// As for [`rakb_eer`].
#[no_mangle]
pub unsafe extern "C" fn rakb_accuracy(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> RakbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::accuracy(&samples(scores, labels, n)?)?;
        Ok(())
    })
}
