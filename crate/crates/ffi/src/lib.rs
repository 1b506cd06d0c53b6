//! C ABI over the engine.
//!
//! Conventions:
//! - every function returns an [`AceStatus`]; results come back through out
//!   pointers;
//! - strings in are NUL-terminated UTF-8, strings out are allocated here and
//!   released with [`ace_string_free`];
//! - structured values (events, answers, reports, questions) travel as JSON;
//! - after a failure, [`ace_last_error`] describes it on the calling thread.
//!
//! Handles are opaque. An [`AceService`] may be shared between threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ace_core::gateway::csvio::read_table_str;
use ace_core::gateway::models::{apply_model, fit_model, FitOptions, ModelFile, ModelKind};
use ace_core::gateway::{parse_answers, run_headless, GatewayError, HeadlessOptions, RunStatus, Service};
use ace_core::inference::Answer;
use ace_core::scenarios::{package_for, CriticalEvent, ScenarioConfig};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AceStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8 or JSON.
    InvalidArgument = 2,
    /// The event document failed validation.
    Schema = 3,
    /// A knowledge base failed to parse or a goal raised an error.
    KbError = 4,
    /// Unknown package, session or model kind.
    NotFound = 5,
    /// The session is in the wrong state or the question id is stale.
    State = 6,
    /// The answer does not fit the question's kind.
    AnswerType = 7,
    /// The top goal has no proof.
    NoProof = 8,
    /// A headless run needed more answers than were given.
    AnswersExhausted = 9,
    /// Model fitting or evaluation failed on the given data.
    Data = 10,
    /// I/O or journal failure.
    Io = 11,
    /// A bug: the engine panicked. The handle should be discarded.
    Internal = 99,
}

/// Engine service holding packages and sessions.
pub struct AceService {
    inner: Service,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

struct Failure(AceStatus, String);

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        let status = match &e {
            GatewayError::UnknownPackage(_) | GatewayError::NotFound(_) => AceStatus::NotFound,
            GatewayError::Schema(_) => AceStatus::Schema,
            GatewayError::NotAwaiting(_) | GatewayError::StaleQuestion { .. } | GatewayError::NotDone(_) => {
                AceStatus::State
            }
            GatewayError::AnswerType { .. } => AceStatus::AnswerType,
            GatewayError::Scenario(ace_core::scenarios::ScenarioError::NoProof { .. }) => AceStatus::NoProof,
            GatewayError::Scenario(_) => AceStatus::KbError,
            GatewayError::Csv(_) | GatewayError::BadRequest(_) => AceStatus::InvalidArgument,
            GatewayError::Diagnostics(_) | GatewayError::Prediction(_) => AceStatus::Data,
            GatewayError::Journal(_) | GatewayError::Io(_) => AceStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> Res<()>) -> AceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AceStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            AceStatus::Internal
        }
    }
}

unsafe fn arg<'a>(p: *const c_char, name: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure(AceStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(AceStatus::InvalidArgument, format!("{name}: {e}")))
}

unsafe fn opt_arg<'a>(p: *const c_char, name: &str) -> Res<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        arg(p, name).map(Some)
    }
}

fn out_ptr<T>(p: *mut T, name: &str) -> Res<()> {
    if p.is_null() {
        Err(Failure(AceStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    let c = CString::new(s.replace('\0', " ")).expect("no interior NUL");
    *out = c.into_raw();
}

macro_rules! to_json {
    ($v:expr) => {
        serde_json::to_string($v).expect("serializable")
    };
}

unsafe fn service<'a>(svc: *const AceService) -> Res<&'a Service> {
    if svc.is_null() {
        return Err(Failure(AceStatus::NullArgument, "service is null".into()));
    }
    Ok(&(*svc).inner)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn ace_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ace_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// In-memory service with the shipped packages.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ace_service_new(out: *mut *mut AceService) -> AceStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(AceService {
            inner: Service::new(ScenarioConfig::default()),
        }));
        Ok(())
    })
}

/// Service persisting sessions and tables under `data_dir`; existing
/// sessions are replayed from their journals.
///
/// # Safety
/// `data_dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ace_service_open(data_dir: *const c_char, out: *mut *mut AceService) -> AceStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let dir = arg(data_dir, "data_dir")?;
        let inner = Service::open(dir, ScenarioConfig::default())?;
        *out = Box::into_raw(Box::new(AceService { inner }));
        Ok(())
    })
}

/// # Safety
/// `svc` must come from `ace_service_new`/`ace_service_open` and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ace_service_free(svc: *mut AceService) {
    if !svc.is_null() {
        drop(Box::from_raw(svc));
    }
}

/// Appends a knowledge-base source to a package, creating the package if
/// it does not exist.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_service_add_source(
    svc: *const AceService,
    package: *const c_char,
    file_name: *const c_char,
    text: *const c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        s.add_package_source(
            arg(package, "package")?,
            arg(file_name, "file_name")?,
            arg(text, "text")?,
        )?;
        Ok(())
    })
}

/// Starts a session for the event (JSON). With a null `package` the package
/// follows from the event's category. Writes the session view as JSON.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_create(
    svc: *const AceService,
    package: *const c_char,
    event_json: *const c_char,
    out_view_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_view_json, "out_view_json")?;
        let event: serde_json::Value = serde_json::from_str(arg(event_json, "event_json")?)
            .map_err(|e| Failure(AceStatus::InvalidArgument, format!("event_json: {e}")))?;
        let package = match opt_arg(package, "package")? {
            Some(p) => p.to_string(),
            None => {
                let e = CriticalEvent::from_value(event.clone()).map_err(GatewayError::from)?;
                package_for(&e).map_err(GatewayError::from)?.to_string()
            }
        };
        let view = s.create_session(&package, event)?;
        put_string(out_view_json, to_json!(&view));
        Ok(())
    })
}

/// Session view as JSON: id, state, pending question, answers, report.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_get(
    svc: *const AceService,
    id: *const c_char,
    out_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_json, "out_json")?;
        put_string(out_json, to_json!(&s.session(arg(id, "id")?)?));
        Ok(())
    })
}

/// Pending question as JSON (`id`, `text`, `kind`).
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_question(
    svc: *const AceService,
    id: *const c_char,
    out_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_json, "out_json")?;
        put_string(out_json, to_json!(&s.question(arg(id, "id")?)?));
        Ok(())
    })
}

/// Answers question `question_id`. `answer_json` is a JSON boolean, number
/// or string (`"yes"`/`"no"` work for yes/no questions). Writes the new
/// session view.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_answer(
    svc: *const AceService,
    id: *const c_char,
    question_id: u64,
    answer_json: *const c_char,
    out_view_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_view_json, "out_view_json")?;
        let answer: Answer = serde_json::from_str(arg(answer_json, "answer_json")?)
            .map_err(|e| Failure(AceStatus::InvalidArgument, format!("answer_json: {e}")))?;
        let view = s.answer(arg(id, "id")?, question_id, answer)?;
        put_string(out_view_json, to_json!(&view));
        Ok(())
    })
}

/// Final report as JSON; `ACE_STATUS_STATE` until the session is done.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_report(
    svc: *const AceService,
    id: *const c_char,
    out_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_json, "out_json")?;
        put_string(out_json, to_json!(&s.report(arg(id, "id")?)?));
        Ok(())
    })
}

/// Goal tree of the latest step as JSON.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_session_trace(
    svc: *const AceService,
    id: *const c_char,
    out_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        let s = service(svc)?;
        out_ptr(out_json, "out_json")?;
        put_string(out_json, to_json!(&s.trace(arg(id, "id")?)?));
        Ok(())
    })
}

/// One-shot run. `kb_text` (optional) is loaded after the event's shipped
/// package; `answers` (optional) holds one answer per line or a JSON array.
/// Writes the report, pending question or error object as JSON and the
/// process-style exit code (0 success, 3 answers exhausted, 4 KB error,
/// 5 schema, 6 no proof). The status mirrors the exit code.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated; optional ones may be null.
#[no_mangle]
pub unsafe extern "C" fn ace_run_headless(
    kb_text: *const c_char,
    event_json: *const c_char,
    answers: *const c_char,
    out_json: *mut *mut c_char,
    out_exit_code: *mut i32,
) -> AceStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        out_ptr(out_exit_code, "out_exit_code")?;
        let answers = match opt_arg(answers, "answers")? {
            Some(t) => parse_answers(t)?,
            None => Vec::new(),
        };
        let opts = HeadlessOptions {
            kb_sources: opt_arg(kb_text, "kb_text")?
                .map(|t| vec![("input.kb".to_string(), t.to_string())])
                .unwrap_or_default(),
            event_json: arg(event_json, "event_json")?.to_string(),
            answers,
            ..Default::default()
        };
        let out = run_headless(&opts);
        *out_exit_code = out.status.exit_code();
        let status = match out.status {
            RunStatus::Success => AceStatus::Ok,
            RunStatus::Usage => AceStatus::InvalidArgument,
            RunStatus::AnswersExhausted => AceStatus::AnswersExhausted,
            RunStatus::KbError => AceStatus::KbError,
            RunStatus::Schema => AceStatus::Schema,
            RunStatus::NoProof => AceStatus::NoProof,
        };
        let message = serde_json::from_str::<serde_json::Value>(&out.output)
            .ok()
            .and_then(|v| v["error"]["message"].as_str().map(str::to_string))
            .unwrap_or_else(|| format!("run ended with {:?}", out.status));
        put_string(out_json, out.output);
        if status == AceStatus::Ok {
            Ok(())
        } else {
            Err(Failure(status, message))
        }
    })
}

/// Fits a model of `kind` (plane, surface, freq, potential, regression,
/// dynamical) to a CSV table with default options and writes the model file
/// JSON.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_model_fit(
    kind: *const c_char,
    csv: *const c_char,
    out_model_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        out_ptr(out_model_json, "out_model_json")?;
        let k = arg(kind, "kind")?;
        let kind: ModelKind = serde_json::from_value(serde_json::Value::String(k.into()))
            .map_err(|_| Failure(AceStatus::NotFound, format!("unknown model kind {k:?}")))?;
        let table = read_table_str(arg(csv, "csv")?)?;
        let model = fit_model(kind, &table, &FitOptions::default())?;
        put_string(out_model_json, to_json!(&model));
        Ok(())
    })
}

/// Applies a model file to each row of a CSV table; writes a JSON array of
/// class decisions or predictions.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ace_model_apply(
    model_json: *const c_char,
    csv: *const c_char,
    out_json: *mut *mut c_char,
) -> AceStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let model: ModelFile = serde_json::from_str(arg(model_json, "model_json")?)
            .map_err(|e| Failure(AceStatus::InvalidArgument, format!("model_json: {e}")))?;
        let table = read_table_str(arg(csv, "csv")?)?;
        put_string(out_json, to_json!(&apply_model(&model, &table)?));
        Ok(())
    })
}
