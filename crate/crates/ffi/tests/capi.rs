use std::ffi::{c_char, CStr, CString};
use std::ptr;

use shapebench_ffi::*;

fn last_error() -> String {
    let p = sb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    sb_string_free(p);
    s
}

#[test]
fn edit_distance() {
    let (a, b) = (CString::new("kitten").unwrap(), CString::new("sitting").unwrap());
    let mut d = 0usize;
    assert_eq!(
        unsafe { sb_edit_distance(a.as_ptr(), b.as_ptr(), &mut d) },
        SbStatus::Ok
    );
    assert_eq!(d, 3);
    assert_eq!(
        unsafe { sb_edit_distance(ptr::null(), b.as_ptr(), &mut d) },
        SbStatus::NullPointer
    );
    assert!(last_error().contains("null"));
}

#[test]
fn lap_rectangular() {
    let costs = [4.0, 1.0, 6.0, 2.0, 0.0, 5.0];
    let mut cols = [0isize; 2];
    let mut total = 0.0;
    let st = unsafe { sb_lap_solve(costs.as_ptr(), 2, 3, cols.as_mut_ptr(), &mut total) };
    assert_eq!(st, SbStatus::Ok);
    assert_eq!(total, 3.0);
    assert_eq!(cols, [1, 0]);

    let tall = [1.0, 5.0, 2.0];
    let mut cols = [0isize; 3];
    unsafe { sb_lap_solve(tall.as_ptr(), 3, 1, cols.as_mut_ptr(), &mut total) };
    assert_eq!(cols, [0, -1, -1]);

    let bad = [f64::NAN];
    let st = unsafe { sb_lap_solve(bad.as_ptr(), 1, 1, cols.as_mut_ptr(), &mut total) };
    assert_eq!(st, SbStatus::InvalidArgument);
}

#[test]
fn numeric_mask() {
    let toks: Vec<CString> = ["A", "12", "circle", "012"]
        .iter()
        .map(|t| CString::new(*t).unwrap())
        .collect();
    let ptrs: Vec<*const c_char> = toks.iter().map(|t| t.as_ptr()).collect();
    let mut out = [0.0; 4];
    let st = unsafe { sb_numeric_mask(ptrs.as_ptr(), 4, 1, 1000, 2.0, out.as_mut_ptr()) };
    assert_eq!(st, SbStatus::Ok);
    assert_eq!(out, [1.0, 2.0, 1.0, 1.0]);
    let st = unsafe { sb_numeric_mask(ptrs.as_ptr(), 4, 1, 1000, -1.0, out.as_mut_ptr()) };
    assert_eq!(st, SbStatus::InvalidArgument);
}

#[test]
fn dataset_round_trip_and_evaluation() {
    let split = CString::new("eval").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { sb_dataset_generate(split.as_ptr(), 6, 3, &mut ds) },
        SbStatus::Ok
    );
    assert_eq!(unsafe { sb_dataset_len(ds) }, 6);

    let mut out = ptr::null_mut();
    unsafe { sb_dataset_id(ds, 0, &mut out) };
    assert_eq!(unsafe { take(out) }, "eval_00000");

    let mut texts = Vec::new();
    for i in 0..6 {
        assert_eq!(
            unsafe { sb_dataset_serialize(ds, i, SbFormat::Tuple, &mut out) },
            SbStatus::Ok
        );
        texts.push(CString::new(unsafe { take(out) }).unwrap());
    }
    assert_eq!(
        unsafe { sb_dataset_serialize(ds, 6, SbFormat::Tuple, &mut out) },
        SbStatus::OutOfRange
    );

    let mut ptrs: Vec<*const c_char> = texts.iter().map(|t| t.as_ptr()).collect();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { sb_evaluate(ds, ptrs.as_ptr(), 6, SbFormat::Tuple, &mut json) },
        SbStatus::Ok
    );
    let report: serde_json::Value = serde_json::from_str(&unsafe { take(json) }).unwrap();
    assert_eq!(report["sama"]["overall"], 1.0);
    assert_eq!(report["center_rmse"], 0.0);

    ptrs[0] = ptr::null();
    unsafe { sb_evaluate(ds, ptrs.as_ptr(), 6, SbFormat::Tuple, &mut json) };
    let report: serde_json::Value = serde_json::from_str(&unsafe { take(json) }).unwrap();
    assert_eq!(report["parse"]["empty_predictions"], 1);
    assert_eq!(report["parse"]["missing_predictions"], 0);
    assert!(report["sama"]["overall"].as_f64().unwrap() < 1.0);

    let st = unsafe { sb_evaluate(ds, ptrs.as_ptr(), 5, SbFormat::Tuple, &mut json) };
    assert_eq!(st, SbStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let jsonl = CString::new(dir.path().join("eval.jsonl").to_str().unwrap()).unwrap();
    let png = CString::new(dir.path().join("a.png").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sb_dataset_save(ds, jsonl.as_ptr()) }, SbStatus::Ok);
    assert_eq!(unsafe { sb_dataset_render_png(ds, 0, png.as_ptr()) }, SbStatus::Ok);
    assert!(dir.path().join("a.png").exists());

    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { sb_dataset_load(jsonl.as_ptr(), &mut loaded) }, SbStatus::Ok);
    assert_eq!(unsafe { sb_dataset_len(loaded) }, 6);
    unsafe { sb_dataset_serialize(loaded, 2, SbFormat::Tuple, &mut out) };
    assert_eq!(unsafe { take(out) }, texts[2].to_str().unwrap());

    unsafe {
        sb_dataset_free(loaded);
        sb_dataset_free(ds);
        sb_dataset_free(ptr::null_mut());
    }
}

#[test]
fn load_errors_carry_messages() {
    let missing = CString::new("/nonexistent/scenes.jsonl").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { sb_dataset_load(missing.as_ptr(), &mut ds) }, SbStatus::Io);
    assert!(last_error().contains("scenes.jsonl"));
    assert!(ds.is_null());

    let unknown = CString::new("validation").unwrap();
    assert_eq!(
        unsafe { sb_dataset_generate(unknown.as_ptr(), 1, 0, &mut ds) },
        SbStatus::InvalidArgument
    );
    assert!(last_error().contains("validation"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shapebench.h")).unwrap();
    for sym in [
        "sb_last_error_message",
        "sb_string_free",
        "sb_edit_distance",
        "sb_lap_solve",
        "sb_numeric_mask",
        "sb_dataset_generate",
        "sb_dataset_load",
        "sb_dataset_free",
        "sb_dataset_len",
        "sb_dataset_id",
        "sb_dataset_serialize",
        "sb_dataset_render_png",
        "sb_dataset_save",
        "sb_evaluate",
        "typedef struct SbDataset SbDataset",
        "SB_STATUS_OK = 0",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}
