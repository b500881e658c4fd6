//! C ABI over `shapebench`.
//!
//! Every fallible function returns an [`SbStatus`]; on failure the message is
//! available from [`sb_last_error_message`] on the same thread. Strings
//! returned through out-pointers are owned by the caller and must be released
//! with [`sb_string_free`]. Datasets are opaque and released with
//! [`sb_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use shapebench::cli::resolve_splits;
use shapebench::dataset::{read_jsonl, write_jsonl, PredictionRecord, SceneRecord};
use shapebench::evaluate::evaluate_shapes;
use shapebench::genset::{generate_splits, GenerationConfig};
use shapebench::lossmask::{numeric_weight_mask, NumericTokenSpec};
use shapebench::render::{rasterize, write_png};
use shapebench::scene::SceneConfig;
use shapebench::textio::{serialize_scene, OutputFormat};
use shapebench::{assign, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    GenerationFailed = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbFormat {
    Sentence = 0,
    Tuple = 1,
}

impl From<SbFormat> for OutputFormat {
    fn from(f: SbFormat) -> Self {
        match f {
            SbFormat::Sentence => OutputFormat::Sentence,
            SbFormat::Tuple => OutputFormat::Tuple,
        }
    }
}

/// Scenes of one split, loaded or generated.
pub struct SbDataset {
    records: Vec<SceneRecord>,
    scenes: Vec<SceneConfig>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SbStatus {
    match e {
        Error::Io { .. } => SbStatus::Io,
        Error::Parse { .. } | Error::UnknownToken { .. } => SbStatus::Parse,
        Error::RejectionBudgetExhausted { .. } => SbStatus::GenerationFailed,
        Error::Png(_) => SbStatus::Io,
        _ => SbStatus::InvalidArgument,
    }
}

fn fail(status: SbStatus, msg: impl Into<String>) -> SbStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), SbStatus>) -> SbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SbStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: shapebench::Result<T>) -> Result<T, SbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SbStatus> {
    if p.is_null() {
        return Err(fail(SbStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SbStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn check_out<T>(p: *mut T) -> Result<(), SbStatus> {
    if p.is_null() {
        Err(fail(SbStatus::NullPointer, "null output pointer"))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Character-level Levenshtein distance of two UTF-8 strings.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_edit_distance(a: *const c_char, b: *const c_char, out: *mut usize) -> SbStatus {
    guard(|| {
        check_out(out)?;
        let d = assign::edit_distance(read_str(a)?, read_str(b)?);
        *out = d;
        Ok(())
    })
}

/// Minimum-cost assignment of a row-major `rows x cols` cost matrix.
/// `row_to_col` receives `rows` entries, `-1` for unmatched rows.
///
/// # Safety
/// `costs` must hold `rows * cols` values and `row_to_col` `rows` slots.
#[no_mangle]
pub unsafe extern "C" fn sb_lap_solve(
    costs: *const f64,
    rows: usize,
    cols: usize,
    row_to_col: *mut isize,
    total_cost: *mut f64,
) -> SbStatus {
    guard(|| {
        check_out(total_cost)?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| fail(SbStatus::InvalidArgument, "matrix too large"))?;
        if n > 0 && costs.is_null() || rows > 0 && row_to_col.is_null() {
            return Err(fail(SbStatus::NullPointer, "null matrix or output"));
        }
        let data = if n == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(costs, n).to_vec()
        };
        let m = lift(assign::CostMatrix::new(rows, cols, data))?;
        let asg = assign::solve_lap_jv(&m);
        for r in 0..rows {
            *row_to_col.add(r) = asg.col_for_row(r).map_or(-1, |c| c as isize);
        }
        *total_cost = asg.total_cost;
        Ok(())
    })
}

/// Weights for `n` tokens: `scale` for plain integers in `[min, max]`,
/// `1.0` otherwise.
///
/// # Safety
/// `tokens` must hold `n` NUL-terminated strings and `out` `n` slots.
#[no_mangle]
pub unsafe extern "C" fn sb_numeric_mask(
    tokens: *const *const c_char,
    n: usize,
    min: u64,
    max: u64,
    scale: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        if n > 0 && (tokens.is_null() || out.is_null()) {
            return Err(fail(SbStatus::NullPointer, "null token array or output"));
        }
        let spec = lift(NumericTokenSpec::range(min, max))?;
        let toks = (0..n)
            .map(|i| read_str(*tokens.add(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let mask = lift(numeric_weight_mask(&toks, &spec, scale))?;
        if n > 0 {
            std::slice::from_raw_parts_mut(out, n).copy_from_slice(&mask);
        }
        Ok(())
    })
}

fn dataset_from(records: Vec<SceneRecord>) -> Result<Box<SbDataset>, SbStatus> {
    let scenes = lift(records.iter().map(SceneRecord::to_scene).collect())?;
    Ok(Box::new(SbDataset { records, scenes }))
}

/// Generates one built-in split. `n_samples == 0` keeps the default size.
///
/// # Safety
/// `split` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_generate(
    split: *const c_char,
    n_samples: usize,
    seed: u64,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guard(|| {
        check_out(out)?;
        let name = read_str(split)?.to_string();
        let n = (n_samples > 0).then_some(n_samples);
        let (specs, _) = lift(resolve_splits(std::slice::from_ref(&name), n))?;
        let all = lift(generate_splits(&specs, &GenerationConfig::with_seed(seed)))?;
        let idx = specs.iter().position(|s| s.name == name).unwrap_or(0);
        let records = all[idx].iter().map(SceneRecord::from_generated).collect();
        *out = Box::into_raw(dataset_from(records)?);
        Ok(())
    })
}

/// Loads scenes from a JSONL file written by `shapebench generate`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_load(path: *const c_char, out: *mut *mut SbDataset) -> SbStatus {
    guard(|| {
        check_out(out)?;
        let records = lift(read_jsonl(Path::new(read_str(path)?)))?;
        *out = Box::into_raw(dataset_from(records)?);
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a live dataset handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_free(ds: *mut SbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of scenes, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_len(ds: *const SbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.records.len())
}

unsafe fn scene_at<'a>(ds: *const SbDataset, index: usize) -> Result<(&'a SceneRecord, &'a SceneConfig), SbStatus> {
    let d = ds.as_ref().ok_or_else(|| fail(SbStatus::NullPointer, "null dataset"))?;
    match (d.records.get(index), d.scenes.get(index)) {
        (Some(r), Some(s)) => Ok((r, s)),
        _ => Err(fail(
            SbStatus::OutOfRange,
            format!("index {index} >= {}", d.records.len()),
        )),
    }
}

/// Id of scene `index`.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_id(ds: *const SbDataset, index: usize, out: *mut *mut c_char) -> SbStatus {
    guard(|| {
        check_out(out)?;
        let (r, _) = scene_at(ds, index)?;
        *out = to_c_string(r.id.clone());
        Ok(())
    })
}

/// Text target of scene `index`.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_serialize(
    ds: *const SbDataset,
    index: usize,
    format: SbFormat,
    out: *mut *mut c_char,
) -> SbStatus {
    guard(|| {
        check_out(out)?;
        let (_, s) = scene_at(ds, index)?;
        *out = to_c_string(serialize_scene(s, format.into()));
        Ok(())
    })
}

/// Renders scene `index` to a PNG file.
///
/// # Safety
/// `ds` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_render_png(ds: *const SbDataset, index: usize, path: *const c_char) -> SbStatus {
    guard(|| {
        let (_, s) = scene_at(ds, index)?;
        lift(write_png(&rasterize(s), Path::new(read_str(path)?)))
    })
}

/// Writes the dataset as scene JSONL.
///
/// # Safety
/// `ds` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_save(ds: *const SbDataset, path: *const c_char) -> SbStatus {
    guard(|| {
        let d = ds.as_ref().ok_or_else(|| fail(SbStatus::NullPointer, "null dataset"))?;
        lift(write_jsonl(Path::new(read_str(path)?), &d.records))
    })
}

/// Scores `n` prediction texts, one per scene in dataset order (null
/// entries count as empty), and returns the report as JSON.
///
/// # Safety
/// `ds` must be a live handle, `predictions` must hold `n` entries and
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_evaluate(
    ds: *const SbDataset,
    predictions: *const *const c_char,
    n: usize,
    format: SbFormat,
    out_json: *mut *mut c_char,
) -> SbStatus {
    guard(|| {
        check_out(out_json)?;
        let d = ds.as_ref().ok_or_else(|| fail(SbStatus::NullPointer, "null dataset"))?;
        if n != d.records.len() {
            return Err(fail(
                SbStatus::InvalidArgument,
                format!("{n} predictions for {} scenes", d.records.len()),
            ));
        }
        if n > 0 && predictions.is_null() {
            return Err(fail(SbStatus::NullPointer, "null prediction array"));
        }
        let mut preds = Vec::with_capacity(n);
        for (i, r) in d.records.iter().enumerate() {
            let p = *predictions.add(i);
            let text = if p.is_null() { "" } else { read_str(p)? };
            preds.push(PredictionRecord {
                id: r.id.clone(),
                prediction: text.to_string(),
            });
        }
        let split = d.records.first().map_or("", |r| r.split_name.as_str());
        let report = lift(evaluate_shapes(split, &d.records, &preds, format.into()))?;
        let json = serde_json::to_string(&report).map_err(|e| fail(SbStatus::InvalidArgument, e.to_string()))?;
        *out_json = to_c_string(json);
        Ok(())
    })
}
